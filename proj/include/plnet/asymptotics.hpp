#pragma once

// Small-sigma closed forms for perturbed lattices. Each depends on the
// lattice only through Epstein zeta values, so every function has an
// overload that takes those values directly.

#include <cstddef>
#include <span>

#include "plnet/lattice.hpp"
#include "plnet/rng.hpp"

namespace plnet {

struct LogNormalParams {
    double mu = 0.0;
    double tau = 0.0;
    double xi0_modulus = 0.0;
    double theta = 0.0, sigma = 0.0, beta = 0.0;
    int dim = 0;
    double zeta_dbeta = 0.0;    // E(d beta)
    double zeta_2dbeta2 = 0.0;  // E(2 d beta + 2)
};

/// mu = -theta sigma^{d beta} |xi0|^{d beta} E(d beta),
/// tau = d theta beta sigma^{d beta + 1} |xi0|^{d beta} sqrt(E(2 d beta + 2)).
LogNormalParams lognormal_params(const Lattice& lat, double xi0_modulus, double theta, double sigma, double beta,
                                 int dim);
LogNormalParams lognormal_params_from_zeta(double zeta_dbeta, double zeta_2dbeta2, double xi0_modulus, double theta,
                                           double sigma, double beta, int dim);

/// (1 / (2^{d/2} Gamma(d/2))) int_0^inf u^{d/2-1} exp(-theta sigma^{d beta} E u^{d beta/2} - u/2) du.
double coverage_smallsigma(const Lattice& lat, double theta, double sigma, double beta, int dim,
                           double quad_tol = 1e-12);
double coverage_smallsigma_from_zeta(double zeta_dbeta, double theta, double sigma, double beta, int dim,
                                     double quad_tol = 1e-12);

/// Gamma(1/beta) / (d beta 2^{d/2-1} Gamma(d/2) E^{1/beta}) sigma^{-d}.
double c1_smallsigma(const Lattice& lat, double sigma, double beta, int dim);
double c1_smallsigma_from_zeta(double zeta_dbeta, double sigma, double beta, int dim);

/// s0 with p_c ~ 1 - s0 theta: 2^{d beta/2} sigma^{d beta} E Gamma(d(beta+1)/2) / Gamma(d/2).
double smalltheta_slope(const Lattice& lat, double sigma, double beta, int dim);
double smalltheta_slope_from_zeta(double zeta_dbeta, double sigma, double beta, int dim);

struct LogNormalReport {
    double mu = 0.0;
    double tau = 0.0;
    double empirical_mean = 0.0;
    double empirical_sd = 0.0;
    double mean_stderr = 0.0;
    double normality_p = 0.0;
    double rejection_rate = 0.0;
    std::size_t n = 0;         // accepted samples
    std::size_t n_rejected = 0;
};

/// Samples log C with the origin site's offset fixed at sigma * xi0 and all
/// other sites perturbed; samples where another point is nearer the origin
/// are rejected and counted. Sites beyond `window_radius` contribute through
/// the exact lattice tail in first order.
LogNormalReport lognormal_empirical_check(const Lattice& lat, std::span<const double> xi0, double theta, double sigma,
                                          double beta, int dim, std::size_t n_samples, const RngStream& rng,
                                          double window_radius = 30.0, unsigned threads = 0);

}  // namespace plnet
