#pragma once

// Nearest-neighbour distance distributions with minus-sampling edge correction.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "plnet/pointproc.hpp"
#include "plnet/rng.hpp"

namespace plnet {

/// Resolution of the pooled empirical CDF.
inline constexpr double kEcdfResolution = 1e-4;

struct NndEstimate {
    std::vector<double> bin_edges;
    std::vector<double> density;       // histogram with unit integral
    std::vector<double> ecdf_support;  // right edges of the fine grid
    std::vector<double> ecdf_values;
    std::size_t n_points_used = 0;
    std::string label;

    /// Empirical CDF at r (step function on the fine grid).
    double ecdf(double r) const;
};

/// Nearest-neighbour distance of every point (brute force for small sets,
/// cell grid otherwise); +inf for a lone point.
std::vector<double> nearest_neighbour_distances(const PointConfiguration& cfg);

/// Distances of points whose nearest neighbour is closer than the window boundary.
std::vector<double> minus_sampled_nnd(const PointConfiguration& cfg);

/// The same distances paired with Hanisch weights vol(W) / vol(W eroded by r),
/// which make the pooled distribution unbiased for the typical point.
std::vector<std::pair<double, double>> weighted_minus_sampled_nnd(const PointConfiguration& cfg);

NndEstimate nnd_estimate(const PointSampler& sampler, std::size_t n_realizations, double bin_width,
                         const RngStream& rng, unsigned threads = 0);

/// Builds an estimate from pooled distances (used by nnd_estimate and tests).
NndEstimate nnd_from_distances(const std::vector<double>& distances, double bin_width, std::string label = {});

/// Sup-norm distance between two empirical CDFs on the union of their supports.
double ks_distance(const NndEstimate& a, const NndEstimate& b);

/// Sup-norm distance between an empirical CDF and an analytic CDF, checked
/// on both sides of every step.
double ks_distance(const NndEstimate& a, const std::function<double(double)>& cdf);

/// Unit-intensity Poisson nearest-neighbour CDF in dimension d: 1 - exp(-vol(B_r)).
double poisson_nnd_cdf(double r, int dim);

}  // namespace plnet
