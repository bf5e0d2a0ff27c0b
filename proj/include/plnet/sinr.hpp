#pragma once

// SINR coverage at the typical user (origin) under Rayleigh fading and
// power-law path loss l(r) = a r^{-d beta}.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "plnet/pointproc.hpp"
#include "plnet/rng.hpp"

namespace plnet {

struct SinrParams {
    int dim = 2;
    double beta = 2.0;
    double gain_a = 1.0;
    double noise_W = 0.0;
    std::vector<double> theta_grid;

    void validate() const;
};

/// theta = 0 followed by 41 log-spaced points in [1e-2, 1e2].
std::vector<double> default_theta_grid();

struct CoverageCurve {
    std::vector<double> theta;
    std::vector<double> estimate;
    std::vector<double> std_error;   // MC standard error, or deterministic error bound
    std::vector<double> truncation;  // window truncation diagnostic per theta (MC only)
    std::size_t n_trials = 0;
    std::string label;
    std::string method;
};

struct NearestBase {
    std::size_t index = 0;
    std::vector<double> location;
    double modulus = 0.0;
};

NearestBase nearest_base(const PointConfiguration& cfg);

/// Conditional coverage probability given the configuration (fading averaged out).
double coverage_function(const PointConfiguration& cfg, const NearestBase& base, double theta,
                         const SinrParams& params);

/// coverage_function for every theta in `thetas` at once.
std::vector<double> coverage_function_grid(const PointConfiguration& cfg, const NearestBase& base,
                                           std::span<const double> thetas, const SinrParams& params);

/// Monte Carlo coverage curve; trial t uses rng.substream(t) and every theta
/// is evaluated on the same trials. Results do not depend on `threads`.
CoverageCurve coverage_mc(const PointSampler& sampler, const SinrParams& params, std::size_t n_trials,
                          const RngStream& rng, unsigned threads = 0);

/// Sum of |x|^{-d beta} over configuration points with |x| > R.
double tail_sum(const PointConfiguration& cfg, double R, const SinrParams& params);

/// Poisson coverage without noise, 1 / (1 + rho) with
/// rho = theta^{1/beta} int_{theta^{-1/beta}}^inf dv / (1 + v^beta); independent of d.
double poisson_coverage_closed_form(double theta, double beta);

}  // namespace plnet
