#pragma once

// Exact coverage series for Gaussian-perturbed lattices. With
// Y_n = |n/sigma + xi|^2 (noncentral chi-squared), the coverage probability is
//   sum_n int f(t, n) prod_{j != n} int_t^inf (1 + theta (t/u)^{d beta/2})^{-1} f(u, j) du dt,
// and theta^{1/beta} times it tends to a constant C1 as theta -> inf.

#include <vector>

#include "plnet/lattice.hpp"
#include "plnet/sinr.hpp"

namespace plnet {

struct QuadratureSpec {
    double abs_tol = 1e-8;
    double rel_tol = 1e-8;
    int max_subdivisions = 2000;
    double lattice_truncation_radius = 15.0;

    void validate() const;
};

struct RadialDensityParams {
    double n_modulus = 0.0;
    double sigma = 1.0;
    int dim = 2;
};

/// I(u) = (1 / (2 (2 pi)^{d/2})) int_{S^{d-1}} e^{-u <w, e1>} dw through the
/// Bessel reduction I(u) = u^{1-d/2} I_{d/2-1}(|u|) / 2.
double spherical_I(double u, int dim);

/// The same integral by adaptive quadrature over the polar angle.
double spherical_I_quadrature(double u, int dim);

/// Density of Y_n(sigma) at t.
double f_density(double t, const RadialDensityParams& p);
double log_f_density(double t, const RadialDensityParams& p);

struct ExactSeriesDiagnostics {
    double outer_radius = 0.0;      // sites with |n| <= outer_radius enter the outer sum
    double inner_radius = 0.0;      // sites with |j| <= inner_radius enter the product exactly
    double truncation_bound = 0.0;  // bound on the omitted outer terms
    std::size_t n_outer_shells = 0;
    std::size_t n_inner_shells = 0;
};

/// Exact-series coverage curve. std_error holds the deterministic error
/// bound (quadrature, truncation and the first-order lattice tail), and
/// truncation the outer-sum truncation bound.
CoverageCurve coverage_exact(const Lattice& lat, double sigma, const SinrParams& params, const QuadratureSpec& quad,
                             unsigned threads = 0, ExactSeriesDiagnostics* diag = nullptr);

struct C1Result {
    double value = 0.0;
    double error_bound = 0.0;
};

C1Result c1_exact_detailed(const Lattice& lat, double sigma, double beta, int dim, const QuadratureSpec& quad);

inline double c1_exact(const Lattice& lat, double sigma, double beta, int dim, const QuadratureSpec& quad)
{
    return c1_exact_detailed(lat, sigma, beta, dim, quad).value;
}

/// Richardson extrapolation of theta^{1/beta} p_c(theta) to theta = inf from
/// the two largest thetas, assuming a leading correction of order
/// theta^{-2/(d beta)}.
double richardson_c1(const std::vector<double>& thetas, const std::vector<double>& coverage, double beta, int dim);

}  // namespace plnet
