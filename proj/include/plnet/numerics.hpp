#pragma once

// Shared numerical kernels: adaptive Gauss-Kronrod quadrature, compensated
// summation, exponentially scaled modified Bessel functions and a few
// distribution helpers used by the estimators and tests.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numbers>
#include <queue>
#include <span>
#include <vector>

#include "plnet/error.hpp"

namespace plnet {

/// Neumaier-compensated running sum.
class CompensatedSum {
public:
    void add(double x) noexcept
    {
        const double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x))
            comp_ += (sum_ - t) + x;
        else
            comp_ += (x - t) + sum_;
        sum_ = t;
    }
    CompensatedSum& operator+=(double x) noexcept
    {
        add(x);
        return *this;
    }
    double value() const noexcept { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

struct QuadOptions {
    double abs_tol = 1e-10;
    double rel_tol = 1e-10;
    int max_subdivisions = 2000;
};

template <std::size_t N>
struct QuadResultN {
    std::array<double, N> value{};
    std::array<double, N> abs_error{};
    int n_evals = 0;
    bool converged = false;
};

using QuadResult = QuadResultN<1>;

namespace detail {

// 21-point Kronrod extension of the 10-point Gauss rule (QUADPACK qk21).
inline constexpr std::array<double, 11> kXgk = {
    0.995657163025808080735527280689003, 0.973906528517171720077964012084452,
    0.930157491355708226001207180059508, 0.865063366688984510732096688423493,
    0.780817726586416897063717578345042, 0.679409568299024406234327365114874,
    0.562757134668604683339000099272694, 0.433395394129247190799265943165784,
    0.294392862701460198131126603103866, 0.148874338981631210884826001129720,
    0.0};
inline constexpr std::array<double, 11> kWgk = {
    0.011694638867371874278064396062192, 0.032558162307964727478818972459390,
    0.054755896574351996031381300244580, 0.075039674810919952767043140916190,
    0.093125454583697605535065465083366, 0.109387158802297641899210590325805,
    0.123491976262065851077958109831074, 0.134709217311473325928054001771707,
    0.142775938577060080797094273138717, 0.147739104901338491374841515972068,
    0.149445554002916905664936468389821};
inline constexpr std::array<double, 5> kWg = {
    0.066671344308688137593568809893332, 0.149451349150580593145776339657697,
    0.219086362515982043995534934228163, 0.269266719309996355091226921569469,
    0.295524224714752870173892994651338};

template <std::size_t N>
struct Segment {
    double a, b;
    std::array<double, N> value, error;
    double priority;  // largest error relative to its tolerance share
    bool operator<(const Segment& o) const { return priority < o.priority; }
};

template <std::size_t N, class F>
Segment<N> gk21(const F& f, double a, double b)
{
    const double centr = 0.5 * (a + b);
    const double hlgth = 0.5 * (b - a);
    std::array<double, N> resg{}, resk{}, resabs{};
    const std::array<double, N> fc = f(centr);
    for (std::size_t c = 0; c < N; ++c) {
        resk[c] = kWgk[10] * fc[c];
        resabs[c] = std::abs(resk[c]);
    }
    for (int j = 0; j < 10; ++j) {
        const double dx = hlgth * kXgk[j];
        const std::array<double, N> f1 = f(centr - dx);
        const std::array<double, N> f2 = f(centr + dx);
        for (std::size_t c = 0; c < N; ++c) {
            const double s = f1[c] + f2[c];
            resk[c] += kWgk[j] * s;
            resabs[c] += kWgk[j] * (std::abs(f1[c]) + std::abs(f2[c]));
            if (j % 2 == 1) resg[c] += kWg[j / 2] * s;
        }
    }
    Segment<N> seg{a, b, {}, {}, 0.0};
    for (std::size_t c = 0; c < N; ++c) {
        seg.value[c] = resk[c] * hlgth;
        double err = std::abs((resk[c] - resg[c]) * hlgth);
        const double scale = resabs[c] * std::abs(hlgth);
        // Roundoff floor in the style of QUADPACK.
        const double floor = 50.0 * std::numeric_limits<double>::epsilon() * scale;
        seg.error[c] = std::max(err, floor);
    }
    return seg;
}

}  // namespace detail

/// Adaptive 21-point Gauss-Kronrod integration of a vector-valued integrand
/// over [a, b]. `breakpoints` (inside (a, b), any order) seed the initial
/// partition. Convergence requires every component to meet
/// max(abs_tol, rel_tol * |value|).
template <std::size_t N, class F>
QuadResultN<N> integrate_vec(const F& f, double a, double b, const QuadOptions& opt,
                             std::span<const double> breakpoints = {})
{
    QuadResultN<N> out;
    if (!(b > a)) return out;

    std::vector<double> cuts{a};
    for (double x : breakpoints)
        if (x > a && x < b) cuts.push_back(x);
    cuts.push_back(b);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

    std::vector<detail::Segment<N>> segs;
    segs.reserve(cuts.size() + 64);
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        segs.push_back(detail::gk21<N>(f, cuts[i], cuts[i + 1]));
        out.n_evals += 21;
    }

    auto totals = [&](std::array<double, N>& val, std::array<double, N>& err) {
        for (std::size_t c = 0; c < N; ++c) {
            CompensatedSum v, e;
            for (const auto& s : segs) {
                v += s.value[c];
                e += s.error[c];
            }
            val[c] = v.value();
            err[c] = e.value();
        }
    };
    auto tolerance = [&](const std::array<double, N>& val, std::size_t c) {
        return std::max(opt.abs_tol, opt.rel_tol * std::abs(val[c]));
    };
    auto set_priority = [&](detail::Segment<N>& s, const std::array<double, N>& val) {
        double p = 0.0;
        for (std::size_t c = 0; c < N; ++c) p = std::max(p, s.error[c] / tolerance(val, c));
        s.priority = p;
    };

    std::array<double, N> val{}, err{};
    totals(val, err);
    std::priority_queue<detail::Segment<N>> heap;
    for (auto& s : segs) {
        set_priority(s, val);
        heap.push(s);
    }

    int subdivisions = static_cast<int>(segs.size());
    auto done = [&]() {
        for (std::size_t c = 0; c < N; ++c)
            if (err[c] > tolerance(val, c)) return false;
        return true;
    };
    while (!done() && subdivisions < opt.max_subdivisions) {
        detail::Segment<N> worst = heap.top();
        heap.pop();
        const double mid = 0.5 * (worst.a + worst.b);
        if (!(mid > worst.a && mid < worst.b)) {
            // Interval cannot be split further in floating point.
            worst.priority = 0.0;
            heap.push(worst);
            break;
        }
        auto left = detail::gk21<N>(f, worst.a, mid);
        auto right = detail::gk21<N>(f, mid, worst.b);
        out.n_evals += 42;
        for (std::size_t c = 0; c < N; ++c) {
            val[c] += left.value[c] + right.value[c] - worst.value[c];
            err[c] += left.error[c] + right.error[c] - worst.error[c];
        }
        set_priority(left, val);
        set_priority(right, val);
        heap.push(left);
        heap.push(right);
        ++subdivisions;
    }

    // Exact final totals in a fixed order so the result does not depend on
    // the heap's internal layout.
    segs.clear();
    while (!heap.empty()) {
        segs.push_back(heap.top());
        heap.pop();
    }
    std::sort(segs.begin(), segs.end(),
              [](const auto& l, const auto& r) { return l.a < r.a; });
    totals(out.value, out.abs_error);
    out.converged = true;
    for (std::size_t c = 0; c < N; ++c)
        if (out.abs_error[c] > tolerance(out.value, c)) out.converged = false;
    return out;
}

/// Scalar convenience wrapper around integrate_vec.
template <class F>
QuadResult integrate(const F& f, double a, double b, const QuadOptions& opt,
                     std::span<const double> breakpoints = {})
{
    auto g = [&f](double x) { return std::array<double, 1>{f(x)}; };
    return integrate_vec<1>(g, a, b, opt, breakpoints);
}

/// Integral over [a, inf) by the map x = a + scale * s / (1 - s), s in [0, 1).
template <std::size_t N, class F>
QuadResultN<N> integrate_vec_to_inf(const F& f, double a, double scale, const QuadOptions& opt,
                                    std::span<const double> breakpoints = {})
{
    require(scale > 0.0, "integrate_to_inf: scale must be positive");
    auto g = [&](double s) {
        std::array<double, N> r{};
        if (s >= 1.0) return r;
        const double om = 1.0 - s;
        const double x = a + scale * s / om;
        const double jac = scale / (om * om);
        r = f(x);
        for (auto& v : r) v = std::isfinite(v * jac) ? v * jac : 0.0;
        return r;
    };
    std::vector<double> mapped;
    for (double x : breakpoints)
        if (x > a) mapped.push_back((x - a) / (x - a + scale));
    return integrate_vec<N>(g, 0.0, 1.0, opt, mapped);
}

template <class F>
QuadResult integrate_to_inf(const F& f, double a, double scale, const QuadOptions& opt,
                            std::span<const double> breakpoints = {})
{
    auto g = [&f](double x) { return std::array<double, 1>{f(x)}; };
    return integrate_vec_to_inf<1>(g, a, scale, opt, breakpoints);
}

/// e^{-x} I_nu(x) for x >= 0, nu >= 0.
double bessel_i_scaled(double nu, double x);

/// x^{-nu} I_nu(x) e^{-x}; finite at x = 0 where it equals 2^{-nu}/Gamma(nu+1).
double bessel_i_scaled_over_pow(double nu, double x);

/// Surface area of the unit sphere S^{d-1} in R^d.
inline double sphere_surface(int dim)
{
    return 2.0 * std::pow(std::numbers::pi, 0.5 * dim) / std::tgamma(0.5 * dim);
}

/// Survival function of the chi-squared law with `dof` degrees of freedom.
double chi2_survival(double x, double dof);

/// x such that chi2_survival(x, dof) = p.
double chi2_survival_inverse(double p, double dof);

/// Kolmogorov limiting survival function Q(lambda) = 2 sum (-1)^{k-1} e^{-2k^2 lambda^2}.
double kolmogorov_survival(double lambda);

/// Two-sample KS statistic between two samples (copies are sorted internally).
double ks_two_sample(std::vector<double> a, std::vector<double> b);

/// Asymptotic p-value of a two-sample KS statistic.
double ks_two_sample_pvalue(double stat, std::size_t n, std::size_t m);

/// Jarque-Bera normality test p-value (chi-squared, 2 dof).
double jarque_bera_pvalue(std::span<const double> x);

}  // namespace plnet
