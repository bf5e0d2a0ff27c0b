#include "plnet/numerics.hpp"

#include <boost/math/special_functions/gamma.hpp>

namespace plnet {

namespace {

// Below this argument the power series is used; above it the Hankel
// asymptotic expansion, whose smallest term is O(e^{-2x}).
double series_threshold(double nu) { return std::max(25.0, 2.0 * nu * nu + 10.0); }

}  // namespace

double bessel_i_scaled_over_pow(double nu, double x)
{
    require(nu >= 0.0, "bessel: order must be nonnegative");
    x = std::abs(x);
    const double threshold = series_threshold(nu);
    if (threshold > 600.0) throw numerical_failure("bessel: order too large for scaled evaluation");

    if (x <= threshold) {
        const double q = 0.25 * x * x;
        double term = std::pow(0.5, nu) / std::tgamma(nu + 1.0);
        double sum = term;
        for (int k = 1; k < 1000; ++k) {
            term *= q / (k * (k + nu));
            sum += term;
            if (term < 1e-17 * sum) break;
        }
        return sum * std::exp(-x);
    }

    const double mu = 4.0 * nu * nu;
    double term = 1.0;
    double sum = 1.0;
    double last = 1.0;
    for (int k = 1; k < 200; ++k) {
        const double odd = 2.0 * k - 1.0;
        term *= -(mu - odd * odd) / (8.0 * k * x);
        if (std::abs(term) > last) break;  // asymptotic series started to diverge
        sum += term;
        last = std::abs(term);
        if (last < 1e-17 * std::abs(sum)) break;
    }
    return sum / std::sqrt(2.0 * std::numbers::pi * x) * std::pow(x, -nu);
}

double bessel_i_scaled(double nu, double x)
{
    x = std::abs(x);
    if (x == 0.0) return nu == 0.0 ? 1.0 : 0.0;
    return bessel_i_scaled_over_pow(nu, x) * std::pow(x, nu);
}

double chi2_survival(double x, double dof)
{
    require(dof > 0.0, "chi2: dof must be positive");
    if (x <= 0.0) return 1.0;
    return boost::math::gamma_q(0.5 * dof, 0.5 * x);
}

double chi2_survival_inverse(double p, double dof)
{
    require(p > 0.0 && p <= 1.0, "chi2 inverse: p must lie in (0, 1]");
    if (p == 1.0) return 0.0;
    return 2.0 * boost::math::gamma_q_inv(0.5 * dof, p);
}

double kolmogorov_survival(double lambda)
{
    if (lambda <= 0.0) return 1.0;
    if (lambda < 1.18) {
        // Theta-function form, fast for small lambda.
        const double pi2 = std::numbers::pi * std::numbers::pi;
        double p = 0.0;
        for (int k = 1; k < 50; ++k) {
            const double o = 2.0 * k - 1.0;
            p += std::exp(-o * o * pi2 / (8.0 * lambda * lambda));
        }
        return std::clamp(1.0 - std::sqrt(2.0 * std::numbers::pi) / lambda * p, 0.0, 1.0);
    }
    double q = 0.0;
    for (int k = 1; k < 100; ++k) {
        const double t = std::exp(-2.0 * k * k * lambda * lambda);
        q += (k % 2 == 1 ? 2.0 : -2.0) * t;
        if (t < 1e-18) break;
    }
    return std::clamp(q, 0.0, 1.0);
}

double ks_two_sample(std::vector<double> a, std::vector<double> b)
{
    require(!a.empty() && !b.empty(), "ks_two_sample: empty sample");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        const double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= x) ++i;
        while (j < b.size() && b[j] <= x) ++j;
        d = std::max(d, std::abs(i / na - j / nb));
    }
    return d;
}

double ks_two_sample_pvalue(double stat, std::size_t n, std::size_t m)
{
    const double en = std::sqrt(static_cast<double>(n) * m / (static_cast<double>(n) + m));
    return kolmogorov_survival((en + 0.12 + 0.11 / en) * stat);
}

double jarque_bera_pvalue(std::span<const double> x)
{
    require(x.size() >= 8, "jarque_bera: need at least 8 samples");
    const double n = static_cast<double>(x.size());
    CompensatedSum s;
    for (double v : x) s += v;
    const double mean = s.value() / n;
    CompensatedSum m2, m3, m4;
    for (double v : x) {
        const double d = v - mean;
        m2 += d * d;
        m3 += d * d * d;
        m4 += d * d * d * d;
    }
    const double var = m2.value() / n;
    if (var <= 0.0) return 0.0;
    const double skew = (m3.value() / n) / std::pow(var, 1.5);
    const double kurt = (m4.value() / n) / (var * var);
    const double jb = n / 6.0 * (skew * skew + 0.25 * (kurt - 3.0) * (kurt - 3.0));
    return std::exp(-0.5 * jb);
}

}  // namespace plnet
