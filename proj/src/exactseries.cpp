#include "plnet/exactseries.hpp"

#include <array>
#include <cmath>
#include <numbers>

#include "plnet/error.hpp"
#include "plnet/numerics.hpp"
#include "plnet/parallel.hpp"

namespace plnet {

void QuadratureSpec::validate() const
{
    require(abs_tol > 0.0, "quad.abs_tol must be positive");
    require(rel_tol > 0.0, "quad.rel_tol must be positive");
    require(max_subdivisions >= 1, "quad.max_subdivisions must be >= 1");
    require(lattice_truncation_radius > 0.0, "quad.lattice_truncation_radius must be positive");
}

double spherical_I(double u, int dim)
{
    require(dim >= 2, "spherical_I: dim must be >= 2");
    const double nu = 0.5 * dim - 1.0;
    const double x = std::abs(u);
    return 0.5 * bessel_i_scaled_over_pow(nu, x) * std::exp(x);
}

double spherical_I_quadrature(double u, int dim)
{
    require(dim >= 2, "spherical_I: dim must be >= 2");
    // dw = surf(S^{d-2}) sin^{d-2}(phi) dphi on the sphere, phi the angle to e1.
    const double pref = (dim == 2 ? 2.0 : sphere_surface(dim - 1)) / (2.0 * std::pow(2.0 * std::numbers::pi, 0.5 * dim));
    QuadOptions opt;
    opt.abs_tol = 0.0;
    opt.rel_tol = 1e-13;
    opt.max_subdivisions = 500;
    const auto r = integrate(
        [u, dim](double phi) { return std::exp(-u * std::cos(phi)) * std::pow(std::sin(phi), dim - 2); }, 0.0,
        std::numbers::pi, opt);
    if (!r.converged) throw numerical_failure("spherical_I: angular quadrature did not converge");
    return pref * r.value[0];
}

double log_f_density(double t, const RadialDensityParams& p)
{
    require(t >= 0.0, "f_density: t must be nonnegative");
    require(p.sigma > 0.0, "f_density: sigma must be positive");
    const int d = p.dim;
    const double nu = 0.5 * d - 1.0;
    const double lambda = (p.n_modulus / p.sigma) * (p.n_modulus / p.sigma);
    if (t == 0.0) {
        if (d > 2) return -std::numeric_limits<double>::infinity();
        if (d < 2) return std::numeric_limits<double>::infinity();
    }
    const double u = std::sqrt(lambda * t);
    // e^{-lambda/2 - t/2 + u} keeps the Bessel growth and Gaussian decay together.
    const double root = std::sqrt(lambda) - std::sqrt(t);
    return -0.5 * root * root + nu * (t > 0.0 ? std::log(t) : 0.0) - std::numbers::ln2 +
           std::log(bessel_i_scaled_over_pow(nu, u));
}

double f_density(double t, const RadialDensityParams& p) { return std::exp(log_f_density(t, p)); }

namespace {

constexpr double kTailMass = 1e-17;

struct ShellModel {
    double modulus = 0.0;
    int mult = 0;
    double lambda = 0.0;
    double lo = 0.0, hi = 0.0;             // Y lies outside [lo, hi] with probability <= kTailMass
    std::array<double, 3> moment{};        // E[Y^{-m k}; lo <= Y <= hi], m = 1, 2, 3
    std::vector<double> peaks;
};

struct ShellEval {
    double log_g;
    double err;
};

enum class Mode { coverage, c1 };

class SeriesModel {
public:
    SeriesModel(const Lattice& lat, double sigma, double beta, Mode mode, const QuadratureSpec& quad)
        : dim_(lat.dim), sigma_(sigma), k_(0.5 * lat.dim * beta), mode_(mode), quad_(quad)
    {
        quad.validate();
        require(sigma > 0.0, "exact series: sigma must be positive");
        require(beta > 1.0, "exact series: beta must exceed 1");
        const auto first = lattice_shells(lat, quad.lattice_truncation_radius);
        require(first.size() >= 3, "quad.lattice_truncation_radius must cover at least three lattice shells");

        const double a_tail = std::sqrt(chi2_survival_inverse(kTailMass, dim_));
        const double r_big = std::max(quad.lattice_truncation_radius, 25.0 * sigma + 3.0 * first.front().modulus + 5.0) + 1.0;
        std::vector<Shell> shells{{0.0, 1}};
        for (const auto& s : lattice_shells(lat, r_big)) shells.push_back(s);

        std::size_t n_outer = choose_outer(shells, r_big);
        outer_radius_ = shells[n_outer - 1].modulus;
        inner_radius_ = std::max(quad.lattice_truncation_radius, outer_radius_);

        for (const auto& s : shells) {
            if (s.modulus > inner_radius_) break;
            ShellModel m;
            m.modulus = s.modulus;
            m.mult = s.multiplicity;
            m.lambda = (s.modulus / sigma) * (s.modulus / sigma);
            const double root = std::sqrt(m.lambda);
            m.lo = root > a_tail ? (root - a_tail) * (root - a_tail) : 0.0;
            m.hi = (root + a_tail) * (root + a_tail);
            const double mean = m.lambda + dim_;
            const double sd = std::sqrt(2.0 * dim_ + 4.0 * m.lambda);
            for (double c : {-8.0, -4.0, -2.0, -1.0, 0.0, 1.0, 2.0, 4.0, 8.0}) {
                const double x = mean + c * sd;
                if (x > m.lo && x < m.hi) m.peaks.push_back(x);
            }
            if (m.lo > 0.0) m.moment = moments(m);
            n_inner_sites_ += m.mult;
            shells_.push_back(std::move(m));
        }
        n_outer_ = n_outer;

        // Sites beyond the inner radius enter through a first-order
        // exponential with the lattice tail sum, including the sigma^2
        // correction E|j + sigma xi|^{-2k} = |j|^{-2k} (1 + (2k(k+1) - k d) sigma^2 / |j|^2 + ...).
        const double dbeta = 2.0 * k_;
        const double e_tail = epstein_zeta_tail(lat, dbeta, inner_radius_, 1e-6, 1e-9).value;
        const double e_tail2 = epstein_zeta_tail(lat, dbeta + 2.0, inner_radius_, 1e-6, 1e-9).value;
        const double e_tail4k = epstein_zeta_tail(lat, 2.0 * dbeta, inner_radius_, 1e-6, 1e-9).value;
        const double corr = (2.0 * k_ * (k_ + 1.0) - k_ * dim_) * sigma * sigma * e_tail2;
        tail_coeff_ = std::pow(sigma * sigma, k_) * (e_tail + corr);
        tail_err_coeff_ = std::pow(sigma * sigma, k_) * std::abs(corr);
        tail_sq_coeff_ = std::pow(sigma * sigma, 2.0 * k_) * e_tail4k;
        site_tol_ = 0.1 * quad.rel_tol / static_cast<double>(n_inner_sites_);
        log_i0_ = -0.5 * dim_ * std::numbers::ln2 - std::lgamma(0.5 * dim_);
        zeta_ = epstein_zeta(lat, dbeta, 1e-8);
    }

    double outer_radius() const { return outer_radius_; }
    double inner_radius() const { return inner_radius_; }
    double truncation_bound() const { return truncation_bound_; }
    std::size_t n_outer() const { return n_outer_; }
    std::size_t n_inner() const { return shells_.size(); }
    double k() const { return k_; }
    double zeta() const { return zeta_; }
    double log_i0() const { return log_i0_; }

    double log_f(double t, const ShellModel& s) const
    {
        return log_f_density(t, {s.modulus, sigma_, dim_});
    }

    // log of int_{t or 0}^inf (1 + theta (t/u)^k)^{-1} f(u) du for one site of the shell.
    ShellEval eval_shell(const ShellModel& s, double t, double theta) const
    {
        const bool from_t = mode_ == Mode::coverage;
        if (t == 0.0 || theta == 0.0) return {0.0, 0.0};
        const double tk = theta * std::pow(t, k_);
        if (s.lo > 0.0 && t < s.lo) {
            const double x_max = tk * std::pow(s.lo, -k_);
            const double rem = 3.0 * tk * tk * tk * s.moment[2] + 2.0 * kTailMass;
            if (x_max <= 0.1 && rem <= site_tol_) {
                const double m1 = s.moment[0];
                return {-tk * m1 + tk * tk * (s.moment[1] - 0.5 * m1 * m1), rem};
            }
        }
        std::vector<double> cuts = s.peaks;
        if (from_t) cuts.push_back(t);
        auto integrand = [&](double u) {
            const double fu = std::exp(log_f(u, s));
            const double x = tk * std::pow(u, -k_);
            const double w = x / (1.0 + x);
            if (from_t && u < t) return std::array<double, 3>{fu, 0.0, 0.0};
            return std::array<double, 3>{0.0, fu / (1.0 + x), w * fu};
        };
        QuadOptions opt;
        opt.abs_tol = 1e-16;
        opt.rel_tol = 1e-12;
        opt.max_subdivisions = 400;
        const auto r = integrate_vec<3>(integrand, s.lo, s.hi, opt, cuts);
        const double d = r.value[0] + r.value[2];
        if (d < 0.5) {
            const double err = (r.abs_error[0] + r.abs_error[2] + 2.0 * kTailMass) / (1.0 - d);
            return {std::log1p(-d), err};
        }
        const double g = std::max(r.value[1], 1e-300);
        return {std::max(std::log(g), -690.0), (r.abs_error[1] + 2.0 * kTailMass) / g};
    }

    // Outer integrand and its propagated error density at t.
    std::array<double, 2> integrand(double t, double theta) const
    {
        std::vector<ShellEval> ev(shells_.size());
        CompensatedSum l, dl;
        for (std::size_t i = 0; i < shells_.size(); ++i) {
            ev[i] = eval_shell(shells_[i], t, theta);
            l += shells_[i].mult * ev[i].log_g;
            dl += shells_[i].mult * ev[i].err;
        }
        const double x = theta * std::pow(t, k_);
        l += -x * tail_coeff_;
        dl += x * tail_err_coeff_ + 0.5 * x * x * tail_sq_coeff_;
        const double big_l = l.value();

        CompensatedSum g;
        for (std::size_t n = 0; n < n_outer_; ++n) {
            const ShellModel& s = shells_[n];
            double lw;
            if (mode_ == Mode::coverage) {
                lw = log_f(t, s);
            } else {
                lw = -0.5 * s.lambda + log_i0_ + (dim_ == 2 ? 0.0 : (0.5 * dim_ - 1.0) * std::log(t));
            }
            g += s.mult * std::exp(lw + big_l - ev[n].log_g);
        }
        const double gv = g.value();
        return {gv, gv * dl.value()};
    }

private:
    std::array<double, 3> moments(const ShellModel& s) const
    {
        QuadOptions opt;
        opt.abs_tol = 0.0;
        opt.rel_tol = 1e-12;
        opt.max_subdivisions = 400;
        const auto r = integrate_vec<3>(
            [&](double u) {
                const double fu = std::exp(log_f(u, s));
                const double p = std::pow(u, -k_);
                return std::array<double, 3>{p * fu, p * p * fu, p * p * p * fu};
            },
            s.lo, s.hi, opt, s.peaks);
        return r.value;
    }

    std::size_t choose_outer(const std::vector<Shell>& shells, double r_big)
    {
        // Coverage: site n can be nearest only if |X_0| > a or |X_n| <= a, so
        // the omitted mass is at most P(|X_0| > a) + sum_{|n| > n_max} P(sigma |xi| >= |n| - a).
        // C1: the n-term is at most e^{-|n|^2/(2 sigma^2)} times the origin term.
        const double s2 = sigma_ * sigma_;
        const double target = 0.1 * (mode_ == Mode::coverage ? quad_.abs_tol : quad_.rel_tol);
        auto bound = [&](std::size_t n_outer) {
            const double n_max = shells[n_outer - 1].modulus;
            if (mode_ == Mode::c1) {
                double sum = 0.0;
                for (std::size_t i = n_outer; i < shells.size(); ++i)
                    sum += shells[i].multiplicity * std::exp(-0.5 * shells[i].modulus * shells[i].modulus / s2);
                return sum;
            }
            if (n_max == 0.0) return 1.0;
            double best = 1.0;
            for (int i = 1; i <= 64; ++i) {
                const double a = n_max * i / 64.0;
                double sum = chi2_survival(a * a / s2, dim_);
                for (std::size_t j = n_outer; j < shells.size() && sum < best; ++j) {
                    const double gap = shells[j].modulus - a;
                    const double term = chi2_survival(gap * gap / s2, dim_);
                    sum += shells[j].multiplicity * term;
                    if (term < 1e-300) break;
                }
                best = std::min(best, sum);
            }
            return best;
        };
        std::size_t lo = 1, hi = shells.size();
        while (hi > 1 && shells[hi - 1].modulus > r_big - 10.0 * sigma_ - 1.0) --hi;
        if (bound(hi) > target) throw resource_limit("exact series: outer truncation bound not reachable");
        while (lo < hi) {
            const std::size_t mid = (lo + hi) / 2;
            if (bound(mid) <= target)
                hi = mid;
            else
                lo = mid + 1;
        }
        truncation_bound_ = bound(lo);
        return lo;
    }

    int dim_;
    double sigma_;
    double k_;
    Mode mode_;
    QuadratureSpec quad_;
    std::vector<ShellModel> shells_;
    std::size_t n_outer_ = 0;
    long long n_inner_sites_ = 0;
    double outer_radius_ = 0.0, inner_radius_ = 0.0, truncation_bound_ = 0.0;
    double tail_coeff_ = 0.0, tail_err_coeff_ = 0.0, tail_sq_coeff_ = 0.0;
    double site_tol_ = 0.0;
    double log_i0_ = 0.0;
    double zeta_ = 0.0;
};

}  // namespace

CoverageCurve coverage_exact(const Lattice& lat, double sigma, const SinrParams& params, const QuadratureSpec& quad,
                             unsigned threads, ExactSeriesDiagnostics* diag)
{
    params.validate();
    require(params.dim == lat.dim, "coverage_exact: lattice and SINR dimensions differ");
    require(params.noise_W == 0.0, "coverage_exact: only the noiseless case is supported");
    const SeriesModel model(lat, sigma, params.beta, Mode::coverage, quad);
    const double t_cut = chi2_survival_inverse(0.1 * quad.abs_tol, lat.dim);

    const std::size_t m = params.theta_grid.size();
    CoverageCurve curve;
    curve.theta = params.theta_grid;
    curve.estimate.assign(m, 0.0);
    curve.std_error.assign(m, 0.0);
    curve.truncation.assign(m, model.truncation_bound());
    curve.label = "perturbed-" + lat.name + "(sigma=" + std::to_string(sigma) + ")";
    curve.method = "exact-series";

    std::vector<double> cuts;
    for (int j = 1; j <= 30; ++j) cuts.push_back(t_cut * std::ldexp(1.0, -j));
    std::vector<std::string> failures(m);
    parallel_for(m, threads, [&](std::size_t i) {
        const double theta = params.theta_grid[i];
        if (theta == 0.0) {
            curve.estimate[i] = 1.0;
            return;
        }
        std::vector<double> bp = cuts;
        const double tc = std::pow(theta * std::pow(sigma, 2.0 * model.k()) * model.zeta(), -1.0 / model.k());
        for (double c : {0.25, 0.5, 1.0, 2.0, 4.0})
            if (c * tc < t_cut) bp.push_back(c * tc);
        QuadOptions opt;
        opt.abs_tol = quad.abs_tol;
        opt.rel_tol = quad.rel_tol;
        opt.max_subdivisions = quad.max_subdivisions;
        const auto r = integrate_vec<2>([&](double t) { return model.integrand(t, theta); }, 0.0, t_cut, opt, bp);
        if (!r.converged) failures[i] = "exact series: quadrature did not reach tolerance at theta = " + std::to_string(theta);
        curve.estimate[i] = std::clamp(r.value[0], 0.0, 1.0);
        curve.std_error[i] = r.abs_error[0] + std::abs(r.value[1]) + r.abs_error[1] + model.truncation_bound() +
                             0.1 * quad.abs_tol;
    });
    for (const auto& f : failures)
        if (!f.empty()) throw numerical_failure(f);
    if (diag) {
        diag->outer_radius = model.outer_radius();
        diag->inner_radius = model.inner_radius();
        diag->truncation_bound = model.truncation_bound();
        diag->n_outer_shells = model.n_outer();
        diag->n_inner_shells = model.n_inner();
    }
    return curve;
}

C1Result c1_exact_detailed(const Lattice& lat, double sigma, double beta, int dim, const QuadratureSpec& quad)
{
    require(dim == lat.dim, "c1_exact: lattice dimension mismatch");
    const SeriesModel model(lat, sigma, beta, Mode::c1, quad);
    const double sc = std::pow(std::pow(sigma, 2.0 * model.k()) * model.zeta(), -1.0 / model.k());
    std::vector<double> bp;
    for (int j = -20; j <= 6; ++j) bp.push_back(sc * std::ldexp(1.0, j));
    QuadOptions opt;
    opt.abs_tol = 0.0;
    opt.rel_tol = quad.rel_tol;
    opt.max_subdivisions = quad.max_subdivisions;
    const auto r = integrate_vec_to_inf<2>([&](double s) { return model.integrand(s, 1.0); }, 0.0, sc, opt, bp);
    if (!r.converged) throw numerical_failure("c1_exact: quadrature did not reach tolerance");
    C1Result out;
    out.value = r.value[0];
    out.error_bound = r.abs_error[0] + std::abs(r.value[1]) + r.abs_error[1] + model.truncation_bound() * r.value[0];
    return out;
}

double richardson_c1(const std::vector<double>& thetas, const std::vector<double>& coverage, double beta, int dim)
{
    require(thetas.size() == coverage.size() && thetas.size() >= 2, "richardson_c1: need two or more points");
    const std::size_t n = thetas.size();
    const double t1 = thetas[n - 2], t2 = thetas[n - 1];
    require(t2 > t1 && t1 > 0.0, "richardson_c1: thetas must be increasing and positive");
    const double v1 = std::pow(t1, 1.0 / beta) * coverage[n - 2];
    const double v2 = std::pow(t2, 1.0 / beta) * coverage[n - 1];
    const double rg = std::pow(t2 / t1, 2.0 / (dim * beta));
    return (rg * v2 - v1) / (rg - 1.0);
}

}  // namespace plnet
