#include <cmath>
#include <numbers>

#include "doctest.h"
#include "plnet/error.hpp"
#include "plnet/lattice.hpp"
#include "plnet/pointproc.hpp"
#include "plnet/sinr.hpp"

using namespace plnet;

namespace {

PointConfiguration config(std::vector<double> coords, double R = 100.0)
{
    PointConfiguration c;
    c.dim = 2;
    c.coords = std::move(coords);
    c.window_radius = R;
    return c;
}

SinrParams params(std::vector<double> grid = {1.0})
{
    SinrParams p;
    p.theta_grid = std::move(grid);
    return p;
}

}  // namespace

TEST_CASE("nearest base examples")
{
    auto b = nearest_base(config({3, 4, 1, 0}));
    CHECK(b.index == 1);
    CHECK(b.modulus == 1.0);
    b = nearest_base(config({0.5, 0.5}));
    CHECK(b.index == 0);
    CHECK(b.location == std::vector<double>{0.5, 0.5});
    CHECK(nearest_base(config({1, 0, 0, 1})).index == 0);
    CHECK_THROWS_AS(nearest_base(config({})), Error);
}

TEST_CASE("coverage function examples")
{
    const auto c = config({1, 0, 2, 0});
    const auto b = nearest_base(c);
    const auto p = params();
    CHECK(coverage_function(c, b, 0.0, p) == 1.0);
    CHECK(coverage_function(c, b, 1.0, p) == doctest::Approx(16.0 / 17.0).epsilon(1e-14));
    CHECK(coverage_function(c, b, 16.0, p) == doctest::Approx(0.5).epsilon(1e-14));
    const std::vector<double> thetas{0.0, 1.0, 16.0};
    const auto grid = coverage_function_grid(c, b, thetas, p);
    CHECK(grid[1] == coverage_function(c, b, 1.0, p));
}

TEST_CASE("noise factor follows the Rayleigh Laplace transform")
{
    const auto c = config({2, 0, 3, 0});
    const auto b = nearest_base(c);
    auto p = params();
    p.noise_W = 0.01;
    p.gain_a = 2.0;
    const double ell = 2.0 * std::pow(2.0, -4.0);
    CHECK(coverage_function(c, b, 1.0, p) ==
          doctest::Approx(std::exp(-0.01 / ell) / (1.0 + std::pow(2.0 / 3.0, 4.0))).epsilon(1e-14));
}

TEST_CASE("coverage is scale invariant without noise")
{
    const auto c = sample_poisson(2, 10.0, RngStream{20, 0});
    const auto p = params();
    for (double s : {0.3, 2.0, 7.0}) {
        auto scaled = c;
        for (double& x : scaled.coords) x *= s;
        scaled.window_radius *= s;
        for (double t : {0.1, 1.0, 10.0})
            CHECK(coverage_function(scaled, nearest_base(scaled), t, p) ==
                  doctest::Approx(coverage_function(c, nearest_base(c), t, p)).epsilon(1e-12));
    }
}

TEST_CASE("tail sum examples")
{
    const auto p = params();
    CHECK(tail_sum(config({2, 0}), 1.0, p) == doctest::Approx(0.0625));
    CHECK(tail_sum(config({2, 0}, 3.0), 3.0, p) == 0.0);

    const RngStream root{21, 0};
    const int n = 4000;
    double s = 0.0, s2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double v = tail_sum(sample_poisson(2, 30.0, root.substream(i)), 10.0, p);
        s += v;
        s2 += v * v;
    }
    const double mean = s / n, se = std::sqrt((s2 / n - mean * mean) / n);
    CHECK(std::abs(mean - std::numbers::pi * (1.0 / 100.0 - 1.0 / 900.0)) < 3.0 * se);
}

TEST_CASE("Poisson closed form against a brute-force fading simulation")
{
    CHECK(poisson_coverage_closed_form(1.0, 2.0) == doctest::Approx(1.0 / (1.0 + std::numbers::pi / 4.0)).epsilon(1e-12));
    CHECK(poisson_coverage_closed_form(0.0, 2.0) == 1.0);
    for (double t : {0.1, 4.0}) {
        const double rt = std::sqrt(t);
        CHECK(poisson_coverage_closed_form(t, 2.0) ==
              doctest::Approx(1.0 / (1.0 + rt * (std::numbers::pi / 2.0 - std::atan(1.0 / rt)))).epsilon(1e-10));
    }
    // Explicit Exp(1) fading on every link; success when SIR exceeds theta.
    const RngStream root{22, 0};
    const int n = 20000;
    for (double theta : {1.0, 0.2}) {
        int hits = 0;
        for (int i = 0; i < n; ++i) {
            const auto c = sample_poisson(2, 30.0, root.substream(i));
            RngEngine fade(root.substream(1000000 + i));
            const auto b = nearest_base(c);
            double signal = 0.0, interference = 0.0;
            for (std::size_t k = 0; k < c.size(); ++k) {
                const double power = fade.exponential() / (c.squared_modulus(k) * c.squared_modulus(k));
                (k == b.index ? signal : interference) += power;
            }
            hits += signal > theta * interference;
        }
        const double est = static_cast<double>(hits) / n;
        const double oracle = poisson_coverage_closed_form(theta, 2.0);
        CHECK(std::abs(est - oracle) < 3.0 * std::sqrt(oracle * (1 - oracle) / n));
    }
}

TEST_CASE("Poisson coverage_mc matches the closed form")
{
    const PointSampler s(SamplerSpec{ProcessKind::poisson, 2, 30.0});
    const auto curve = coverage_mc(s, params({0.0, 1.0}), 20000, RngStream{23, 0});
    CHECK(curve.estimate[0] == 1.0);
    CHECK(curve.std_error[0] == 0.0);
    CHECK(std::abs(curve.estimate[1] - 0.560099) < 3.0 * curve.std_error[1]);
    CHECK(curve.n_trials == 20000);
}

TEST_CASE("coverage curves on the default grid")
{
    const Lattice tri = make_lattice(LatticeKind::triangular, 2);
    auto p = params(default_theta_grid());
    CHECK(p.theta_grid.size() == 42);
    CHECK(p.theta_grid.front() == 0.0);
    CHECK(p.theta_grid[1] == doctest::Approx(1e-2));
    CHECK(p.theta_grid.back() == doctest::Approx(1e2));

    const PointSampler poi(SamplerSpec{ProcessKind::poisson, 2, 30.0});
    const auto a = coverage_mc(poi, p, 1500, RngStream{24, 0}, 1);
    const auto b = coverage_mc(poi, p, 1500, RngStream{24, 0}, 3);
    CHECK(a.estimate == b.estimate);
    CHECK(a.std_error == b.std_error);
    double worst = 0.0;
    for (std::size_t i = 0; i < a.theta.size(); ++i) {
        CHECK(a.estimate[i] >= 0.0);
        CHECK(a.estimate[i] <= 1.0);
        if (i > 0) CHECK(a.estimate[i] <= a.estimate[i - 1]);
        worst = std::max(worst, a.truncation[i]);
    }
    CHECK(worst < 1e-3);

    // PTL curves decrease in sigma toward the Poisson curve.
    std::vector<CoverageCurve> curves;
    for (double sigma : {0.1, 0.2, 0.4, 0.6, 0.8}) {
        const PointSampler s(SamplerSpec{ProcessKind::perturbed_lattice, 2, 30.0, tri, {sigma}});
        curves.push_back(coverage_mc(s, p, 1500, RngStream{25, 0}));
    }
    for (std::size_t k = 1; k < curves.size(); ++k)
        for (std::size_t i = 0; i < p.theta_grid.size(); ++i) {
            const double se = std::hypot(curves[k].std_error[i], curves[k - 1].std_error[i]);
            CHECK(curves[k].estimate[i] <= curves[k - 1].estimate[i] + 3.0 * se + 1e-12);
        }
}

TEST_CASE("perturbed lattice beats Poisson at theta = 1")
{
    const Lattice tri = make_lattice(LatticeKind::triangular, 2);
    const PointSampler ptl(SamplerSpec{ProcessKind::perturbed_lattice, 2, 30.0, tri, {0.1}});
    const PointSampler poi(SamplerSpec{ProcessKind::poisson, 2, 30.0});
    const auto a = coverage_mc(ptl, params(), 2000, RngStream{26, 0});
    const auto b = coverage_mc(poi, params(), 2000, RngStream{26, 1});
    CHECK(a.estimate[0] - b.estimate[0] > 5.0 * std::hypot(a.std_error[0], b.std_error[0]));
}

TEST_CASE("parameter validation")
{
    auto p = params();
    p.beta = 1.0;
    CHECK_THROWS_AS(p.validate(), Error);
    p = params({1.0, 0.5});
    CHECK_THROWS_AS(p.validate(), Error);
    p = params({-1.0});
    CHECK_THROWS_AS(p.validate(), Error);
    p = params();
    p.noise_W = -1.0;
    CHECK_THROWS_AS(p.validate(), Error);
}
