#include "plnet/sinr.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "plnet/error.hpp"
#include "plnet/lattice.hpp"
#include "plnet/numerics.hpp"
#include "plnet/parallel.hpp"

namespace plnet {

void SinrParams::validate() const
{
    require(dim >= 1, "sinr.dim must be positive");
    require(beta > 1.0, "sinr.beta must satisfy beta > 1");
    require(gain_a > 0.0, "sinr.gain_a must be positive");
    require(noise_W >= 0.0, "sinr.noise_W must be nonnegative");
    require(!theta_grid.empty(), "sinr.theta_grid must be nonempty");
    for (std::size_t i = 0; i < theta_grid.size(); ++i) {
        require(theta_grid[i] >= 0.0 && std::isfinite(theta_grid[i]), "sinr.theta_grid entries must be finite and >= 0");
        if (i > 0) require(theta_grid[i] > theta_grid[i - 1], "sinr.theta_grid must be strictly increasing");
    }
}

std::vector<double> default_theta_grid()
{
    std::vector<double> grid{0.0};
    for (int i = 0; i <= 40; ++i) grid.push_back(std::pow(10.0, -2.0 + 4.0 * i / 40.0));
    return grid;
}

NearestBase nearest_base(const PointConfiguration& cfg)
{
    if (cfg.empty()) throw invalid_argument("nearest_base: empty configuration");
    std::size_t best = 0;
    double best2 = cfg.squared_modulus(0);
    for (std::size_t i = 1; i < cfg.size(); ++i) {
        const double m = cfg.squared_modulus(i);
        if (m < best2) {
            best2 = m;
            best = i;
        }
    }
    const auto p = cfg.point(best);
    return {best, {p.begin(), p.end()}, std::sqrt(best2)};
}

std::vector<double> coverage_function_grid(const PointConfiguration& cfg, const NearestBase& base,
                                           std::span<const double> thetas, const SinrParams& params)
{
    const double half_exp = 0.5 * params.dim * params.beta;  // |x|^{d beta} = (|x|^2)^{half_exp}
    const double rb2 = base.modulus * base.modulus;
    double theta_max = 0.0;
    for (double t : thetas) {
        require(t >= 0.0, "coverage_function: theta must be nonnegative");
        theta_max = std::max(theta_max, t);
    }
    // Interferers with theta_max * q below 2^-53 leave 1 + theta q == 1 exactly.
    std::vector<double> q;
    q.reserve(cfg.size());
    const double negligible = 0x1.0p-53;
    for (std::size_t i = 0; i < cfg.size(); ++i) {
        if (i == base.index) continue;
        const double qi = std::pow(rb2 / cfg.squared_modulus(i), half_exp);
        if (theta_max * qi >= negligible) q.push_back(qi);
    }

    std::vector<double> out(thetas.size());
    const double noise_exponent = params.noise_W / params.gain_a * std::pow(rb2, half_exp);
    for (std::size_t k = 0; k < thetas.size(); ++k) {
        const double theta = thetas[k];
        if (theta == 0.0) {
            out[k] = 1.0;
            continue;
        }
        double prod = 1.0;
        int rescales = 0;
        for (double qi : q) {
            prod *= 1.0 + theta * qi;
            if (prod > 1e200) {
                prod *= 1e-200;
                ++rescales;
            }
        }
        double c = 1.0 / prod;
        for (int r = 0; r < rescales; ++r) c *= 1e-200;
        if (noise_exponent > 0.0) c *= std::exp(-theta * noise_exponent);
        out[k] = c;
    }
    return out;
}

double coverage_function(const PointConfiguration& cfg, const NearestBase& base, double theta,
                         const SinrParams& params)
{
    const double t[1] = {theta};
    return coverage_function_grid(cfg, base, t, params)[0];
}

CoverageCurve coverage_mc(const PointSampler& sampler, const SinrParams& params, std::size_t n_trials,
                          const RngStream& rng, unsigned threads)
{
    params.validate();
    require(n_trials >= 1, "coverage_mc: n_trials must be >= 1");
    require(sampler.spec().dim == params.dim, "coverage_mc: sampler and SINR dimensions differ");
    const std::size_t m = params.theta_grid.size();
    const double dbeta = params.dim * params.beta;
    const double tail = zeta_tail_integral(params.dim, dbeta, sampler.window_radius());

    std::vector<double> values(n_trials * m), trunc(n_trials * m);
    parallel_for(n_trials, threads, [&](std::size_t t) {
        const PointConfiguration cfg = sampler(rng.substream(t));
        if (cfg.empty()) {
            // No base station in the window: no coverage.
            for (std::size_t k = 0; k < m; ++k) values[t * m + k] = params.theta_grid[k] == 0.0 ? 1.0 : 0.0;
            return;
        }
        const NearestBase base = nearest_base(cfg);
        const auto c = coverage_function_grid(cfg, base, params.theta_grid, params);
        const double rb = std::pow(base.modulus, dbeta);
        for (std::size_t k = 0; k < m; ++k) {
            values[t * m + k] = c[k];
            trunc[t * m + k] = c[k] * -std::expm1(-params.theta_grid[k] * rb * tail * cfg.intensity);
        }
    });

    CoverageCurve curve;
    curve.theta = params.theta_grid;
    curve.n_trials = n_trials;
    curve.label = sampler.label();
    curve.method = "monte-carlo";
    const double n = static_cast<double>(n_trials);
    for (std::size_t k = 0; k < m; ++k) {
        CompensatedSum sum, tsum;
        for (std::size_t t = 0; t < n_trials; ++t) {
            sum += values[t * m + k];
            tsum += trunc[t * m + k];
        }
        const double mean = sum.value() / n;
        CompensatedSum ss;
        for (std::size_t t = 0; t < n_trials; ++t) {
            const double dev = values[t * m + k] - mean;
            ss += dev * dev;
        }
        const double var = n_trials > 1 ? ss.value() / (n - 1.0) : 0.0;
        curve.estimate.push_back(std::clamp(mean, 0.0, 1.0));
        curve.std_error.push_back(std::sqrt(var / n));
        curve.truncation.push_back(tsum.value() / n);
    }
    return curve;
}

double tail_sum(const PointConfiguration& cfg, double R, const SinrParams& params)
{
    require(R >= 0.0, "tail_sum: R must be nonnegative");
    const double half_exp = 0.5 * params.dim * params.beta;
    CompensatedSum sum;
    const double r2 = R * R;
    for (std::size_t i = 0; i < cfg.size(); ++i) {
        const double m = cfg.squared_modulus(i);
        if (m > r2) sum += std::pow(m, -half_exp);
    }
    return sum.value();
}

double poisson_coverage_closed_form(double theta, double beta)
{
    require(theta >= 0.0, "theta must be nonnegative");
    require(beta > 1.0, "beta must exceed 1");
    if (theta == 0.0) return 1.0;
    const double a = std::pow(theta, -1.0 / beta);
    double integral;
    if (beta == 2.0) {
        integral = 0.5 * std::numbers::pi - std::atan(a);
    } else {
        QuadOptions opt;
        opt.abs_tol = 1e-14;
        opt.rel_tol = 1e-12;
        const auto r = integrate_to_inf([beta](double v) { return 1.0 / (1.0 + std::pow(v, beta)); }, a,
                                        std::max(1.0, a), opt);
        if (!r.converged) throw numerical_failure("Poisson coverage integral did not converge");
        integral = r.value[0];
    }
    return 1.0 / (1.0 + std::pow(theta, 1.0 / beta) * integral);
}

}  // namespace plnet
