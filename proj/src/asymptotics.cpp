#include "plnet/asymptotics.hpp"

#include <cmath>
#include <numbers>
#include <vector>

#include "plnet/error.hpp"
#include "plnet/numerics.hpp"
#include "plnet/parallel.hpp"

namespace plnet {

namespace {

void check_common(double sigma, double beta, int dim)
{
    require(sigma > 0.0, "sigma must be positive");
    require(beta > 1.0, "beta must exceed 1");
    require(dim >= 1, "dim must be positive");
}

}  // namespace

LogNormalParams lognormal_params_from_zeta(double zeta_dbeta, double zeta_2dbeta2, double xi0_modulus, double theta,
                                           double sigma, double beta, int dim)
{
    check_common(sigma, beta, dim);
    require(theta > 0.0, "theta must be positive");
    require(xi0_modulus >= 0.0, "xi0 modulus must be nonnegative");
    const double db = dim * beta;
    const double scale = theta * std::pow(sigma * xi0_modulus, db);
    LogNormalParams p;
    p.mu = -scale * zeta_dbeta;
    p.tau = dim * beta * sigma * scale * std::sqrt(zeta_2dbeta2);
    p.xi0_modulus = xi0_modulus;
    p.theta = theta;
    p.sigma = sigma;
    p.beta = beta;
    p.dim = dim;
    p.zeta_dbeta = zeta_dbeta;
    p.zeta_2dbeta2 = zeta_2dbeta2;
    return p;
}

LogNormalParams lognormal_params(const Lattice& lat, double xi0_modulus, double theta, double sigma, double beta,
                                 int dim)
{
    require(lat.dim == dim, "lattice dimension mismatch");
    const double db = dim * beta;
    return lognormal_params_from_zeta(epstein_zeta(lat, db, default_zeta_rel_tol(dim)),
                                      epstein_zeta(lat, 2.0 * db + 2.0, default_zeta_rel_tol(dim)),
                                      xi0_modulus, theta, sigma, beta, dim);
}

double coverage_smallsigma_from_zeta(double zeta_dbeta, double theta, double sigma, double beta, int dim,
                                     double quad_tol)
{
    check_common(sigma, beta, dim);
    require(theta >= 0.0, "theta must be nonnegative");
    require(quad_tol > 0.0, "quad_tol must be positive");
    if (theta == 0.0) return 1.0;
    const double k = 0.5 * dim * beta;
    const double a = theta * std::pow(sigma, dim * beta) * zeta_dbeta;
    const double log_norm = -0.5 * dim * std::numbers::ln2 - std::lgamma(0.5 * dim);
    auto integrand = [&](double u) {
        if (u == 0.0) return dim == 2 ? std::exp(log_norm) : 0.0;
        return std::exp(log_norm + (0.5 * dim - 1.0) * std::log(u) - a * std::pow(u, k) - 0.5 * u);
    };
    const double scale = std::min(2.0, std::pow(a, -1.0 / k));
    std::vector<double> bp;
    for (int j = -6; j <= 6; ++j) bp.push_back(scale * std::ldexp(1.0, j));
    QuadOptions opt;
    opt.abs_tol = 0.1 * quad_tol;
    opt.rel_tol = quad_tol;
    opt.max_subdivisions = 4000;
    const auto r = integrate_to_inf(integrand, 0.0, scale, opt, bp);
    if (!r.converged) throw numerical_failure("coverage_smallsigma: quadrature did not converge");
    return std::clamp(r.value[0], 0.0, 1.0);
}

double coverage_smallsigma(const Lattice& lat, double theta, double sigma, double beta, int dim, double quad_tol)
{
    require(lat.dim == dim, "lattice dimension mismatch");
    return coverage_smallsigma_from_zeta(epstein_zeta(lat, dim * beta, default_zeta_rel_tol(dim)), theta, sigma, beta, dim, quad_tol);
}

double c1_smallsigma_from_zeta(double zeta_dbeta, double sigma, double beta, int dim)
{
    check_common(sigma, beta, dim);
    return std::tgamma(1.0 / beta) /
           (dim * beta * std::pow(2.0, 0.5 * dim - 1.0) * std::tgamma(0.5 * dim) * std::pow(zeta_dbeta, 1.0 / beta)) *
           std::pow(sigma, -dim);
}

double c1_smallsigma(const Lattice& lat, double sigma, double beta, int dim)
{
    require(lat.dim == dim, "lattice dimension mismatch");
    return c1_smallsigma_from_zeta(epstein_zeta(lat, dim * beta, default_zeta_rel_tol(dim)), sigma, beta, dim);
}

double smalltheta_slope_from_zeta(double zeta_dbeta, double sigma, double beta, int dim)
{
    check_common(sigma, beta, dim);
    const double db = dim * beta;
    return std::pow(2.0, 0.5 * db) * std::pow(sigma, db) * zeta_dbeta * std::tgamma(0.5 * dim * (beta + 1.0)) /
           std::tgamma(0.5 * dim);
}

double smalltheta_slope(const Lattice& lat, double sigma, double beta, int dim)
{
    require(lat.dim == dim, "lattice dimension mismatch");
    return smalltheta_slope_from_zeta(epstein_zeta(lat, dim * beta, default_zeta_rel_tol(dim)), sigma, beta, dim);
}

LogNormalReport lognormal_empirical_check(const Lattice& lat, std::span<const double> xi0, double theta, double sigma,
                                          double beta, int dim, std::size_t n_samples, const RngStream& rng,
                                          double window_radius, unsigned threads)
{
    check_common(sigma, beta, dim);
    require(lat.dim == dim && static_cast<int>(xi0.size()) == dim, "xi0 and lattice must have dimension dim");
    require(n_samples >= 2, "need at least two samples");
    require(theta > 0.0, "theta must be positive");
    double xi0_mod2 = 0.0;
    for (double x : xi0) xi0_mod2 += x * x;
    const double db = dim * beta;
    const double half = 0.5 * db;

    LogNormalReport rep;
    const LogNormalParams p = lognormal_params(lat, std::sqrt(xi0_mod2), theta, sigma, beta, dim);
    rep.mu = p.mu;
    rep.tau = p.tau;

    const ShellEnumeration sites = enumerate_points(lat, window_radius, true);
    const double tail = epstein_zeta_tail(lat, db, window_radius, 1e-6, 1e-10).value;
    const double x0_pow = std::pow(sigma * sigma * xi0_mod2, half);  // |X_0|^{d beta}
    const double x0_mod2 = sigma * sigma * xi0_mod2;

    std::vector<double> values(n_samples);
    std::vector<char> rejected(n_samples, 0);
    parallel_for(n_samples, threads, [&](std::size_t i) {
        RngEngine eng(rng.substream(i));
        CompensatedSum s;
        std::vector<double> x(dim);
        bool reject = false;
        for (std::size_t j = 0; j < sites.size(); ++j) {
            double m2 = 0.0;
            for (int c = 0; c < dim; ++c) {
                x[c] = sites.point(j)[c] + sigma * eng.normal();
                m2 += x[c] * x[c];
            }
            if (m2 < x0_mod2) reject = true;
            s += std::log1p(theta * x0_pow * std::pow(m2, -half));
        }
        rejected[i] = reject;
        values[i] = -s.value() - theta * x0_pow * tail;
    });

    std::vector<double> kept;
    for (std::size_t i = 0; i < n_samples; ++i)
        if (!rejected[i]) kept.push_back(values[i]);
    rep.n = kept.size();
    rep.n_rejected = n_samples - kept.size();
    rep.rejection_rate = static_cast<double>(rep.n_rejected) / static_cast<double>(n_samples);
    if (rep.n < 2) throw numerical_failure("lognormal check: fewer than two accepted samples");
    CompensatedSum sum;
    for (double v : kept) sum += v;
    const double n = static_cast<double>(rep.n);
    rep.empirical_mean = sum.value() / n;
    CompensatedSum ss;
    for (double v : kept) ss += (v - rep.empirical_mean) * (v - rep.empirical_mean);
    rep.empirical_sd = std::sqrt(ss.value() / (n - 1.0));
    rep.mean_stderr = rep.empirical_sd / std::sqrt(n);
    rep.normality_p = rep.n >= 8 ? jarque_bera_pvalue(kept) : 0.0;
    return rep;
}

}  // namespace plnet
