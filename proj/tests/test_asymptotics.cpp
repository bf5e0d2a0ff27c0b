#include <cmath>
#include <numbers>
#include <vector>

#include "doctest.h"
#include "plnet/asymptotics.hpp"
#include "plnet/exactseries.hpp"
#include "plnet/lattice.hpp"

using namespace plnet;

namespace {

// Direct lattice sum; the tail beyond R is below 1e-13 for s >= 10.
double brute_zeta(const Lattice& lat, double s, double R)
{
    double v = 0.0;
    const auto e = enumerate_points(lat, R, true);
    for (std::size_t i = e.size(); i-- > 0;) v += std::pow(e.modulus(i), -s);
    return v;
}

const Lattice& tri()
{
    static const Lattice l = make_lattice(LatticeKind::triangular, 2);
    return l;
}

}  // namespace

TEST_CASE("log-normal parameters")
{
    const auto z = lognormal_params(tri(), 0.0, 1.0, 0.1, 2.0, 2);
    CHECK(z.mu == 0.0);
    CHECK(z.tau == 0.0);

    const auto p = lognormal_params(tri(), 1.0, 1.0, 0.1, 2.0, 2);
    CHECK(p.mu == doctest::Approx(-1e-4 * 5.7833592998).epsilon(1e-9));
    const double e10 = brute_zeta(tri(), 10.0, 60.0);
    CHECK(p.zeta_2dbeta2 == doctest::Approx(e10).epsilon(1e-10));
    CHECK(p.tau == doctest::Approx(2.0 * 1.0 * 2.0 * std::pow(0.1, 5.0) * std::sqrt(e10)).epsilon(1e-10));
    CHECK(p.tau > 0.0);
}

TEST_CASE("small-sigma coverage")
{
    CHECK(coverage_smallsigma(tri(), 0.0, 0.1, 2.0, 2) == 1.0);
    const double exact = coverage_exact(tri(), 0.05, [] {
                             SinrParams p;
                             p.theta_grid = {1.0};
                             return p;
                         }(), QuadratureSpec{}).estimate[0];
    CHECK(std::abs(coverage_smallsigma(tri(), 1.0, 0.05, 2.0, 2) - exact) < 0.01 * exact);
    for (double sigma : {0.05, 0.1, 0.3})
        for (double theta : {0.1, 1.0, 10.0}) {
            const double h = 1e-4;
            const double der = (coverage_smallsigma(tri(), theta, sigma + h, 2.0, 2) -
                                coverage_smallsigma(tri(), theta, sigma - h, 2.0, 2)) / (2 * h);
            CHECK(der < 0.0);
        }
}

TEST_CASE("small-sigma large-theta constant")
{
    const double E = epstein_zeta(tri(), 4.0);
    const double k = std::sqrt(std::numbers::pi) / (4.0 * std::sqrt(E));
    CHECK(k == doctest::Approx(0.18424).epsilon(1e-4));
    for (double sigma : {0.05, 0.1, 0.3}) {
        CHECK(c1_smallsigma(tri(), sigma, 2.0, 2) == doctest::Approx(k / (sigma * sigma)).epsilon(1e-12));
        CHECK(c1_smallsigma(tri(), sigma, 2.0, 2) / c1_smallsigma(tri(), 2 * sigma, 2.0, 2) == doctest::Approx(4.0).epsilon(1e-14));
    }
    const Lattice fcc = make_lattice(LatticeKind::fcc, 3);
    CHECK(c1_smallsigma(fcc, 0.1, 2.0, 3) / c1_smallsigma(fcc, 0.2, 2.0, 3) == doctest::Approx(8.0).epsilon(1e-14));
    CHECK(c1_smallsigma(tri(), 0.1, 2.0, 2) > c1_smallsigma(make_lattice(LatticeKind::square, 2), 0.1, 2.0, 2));
}

TEST_CASE("theta^(1/beta) small-sigma coverage tends to the constant")
{
    const double sigma = 0.5;
    const double c1 = c1_smallsigma(tri(), sigma, 2.0, 2);
    double prev_gap = 1.0;
    for (double theta : {1e2, 1e3, 1e4}) {
        const double gap = std::abs(std::sqrt(theta) * coverage_smallsigma(tri(), theta, sigma, 2.0, 2) / c1 - 1.0);
        CHECK(gap < prev_gap);
        prev_gap = gap;
    }
    CHECK(prev_gap < 0.03);
}

TEST_CASE("small-theta slope")
{
    const double E = epstein_zeta(tri(), 4.0);
    for (double sigma : {0.05, 0.1, 0.2}) {
        const double s0 = smalltheta_slope(tri(), sigma, 2.0, 2);
        CHECK(s0 == doctest::Approx(8.0 * std::pow(sigma, 4.0) * E).epsilon(1e-12));
        CHECK(smalltheta_slope(tri(), 2 * sigma, 2.0, 2) / s0 == doctest::Approx(16.0).epsilon(1e-12));
        const double fd = (1.0 - coverage_smallsigma(tri(), 1e-3, sigma, 2.0, 2)) / 1e-3;
        CHECK(fd == doctest::Approx(s0).epsilon(0.01));
    }
    const double s0 = smalltheta_slope(tri(), 0.1, 2.0, 2);
    for (double theta : {1e-5, 1e-4, 1e-3}) {
        const double cov = coverage_smallsigma(tri(), theta, 0.1, 2.0, 2);
        CHECK(std::abs(1.0 - s0 * theta - cov) <= 1e-3 * cov);
    }
}

TEST_CASE("closed forms depend on the lattice only through zeta values")
{
    // A square lattice rescaled to share E(4) with the triangular one.
    const Lattice sq = make_lattice(LatticeKind::square, 2);
    const double e_tri = epstein_zeta(tri(), 4.0), e_sq = epstein_zeta(sq, 4.0);
    const Lattice mock = sq.scaled(std::pow(e_sq / e_tri, 0.25));
    CHECK(epstein_zeta(mock, 4.0) == doctest::Approx(e_tri).epsilon(1e-10));
    CHECK(c1_smallsigma(mock, 0.1, 2.0, 2) == doctest::Approx(c1_smallsigma(tri(), 0.1, 2.0, 2)).epsilon(1e-9));
    CHECK(smalltheta_slope(mock, 0.1, 2.0, 2) == doctest::Approx(smalltheta_slope(tri(), 0.1, 2.0, 2)).epsilon(1e-9));
    CHECK(coverage_smallsigma(mock, 3.0, 0.1, 2.0, 2) == doctest::Approx(coverage_smallsigma(tri(), 3.0, 0.1, 2.0, 2)).epsilon(1e-9));

    // Direct substitution of arbitrary zeta values.
    const double E = 7.25;
    CHECK(c1_smallsigma_from_zeta(E, 0.1, 2.0, 2) == doctest::Approx(std::sqrt(std::numbers::pi) / (4.0 * std::sqrt(E)) / 0.01));
    CHECK(smalltheta_slope_from_zeta(E, 0.1, 2.0, 2) == doctest::Approx(8.0 * 1e-4 * E));
    const auto lp = lognormal_params_from_zeta(E, 2.0, 1.0, 1.0, 0.1, 2.0, 2);
    CHECK(lp.mu == doctest::Approx(-1e-4 * E));
    CHECK(lp.tau == doctest::Approx(4.0 * 1e-5 * std::sqrt(2.0)));
    CHECK(coverage_smallsigma_from_zeta(e_tri, 3.0, 0.1, 2.0, 2) == coverage_smallsigma(tri(), 3.0, 0.1, 2.0, 2));
}

TEST_CASE("empirical log-coverage spread and rejection rate")
{
    const std::vector<double> xi0{1.0, 0.0};
    const auto r = lognormal_empirical_check(tri(), xi0, 1.0, 0.05, 2.0, 2, 10000, RngStream{40, 0});
    CHECK(r.n + r.n_rejected == 10000);
    CHECK(std::abs(r.empirical_sd / r.tau - 1.0) < 0.10);
    CHECK(r.normality_p >= 0.0);

    double prev = 1.0;
    for (double sigma : {0.3, 0.2, 0.1}) {
        const auto q = lognormal_empirical_check(tri(), xi0, 1.0, sigma, 2.0, 2, 2000, RngStream{40, 1}, 15.0);
        CHECK(q.rejection_rate <= prev);
        prev = q.rejection_rate;
    }
    CHECK(prev < 0.01);
}
