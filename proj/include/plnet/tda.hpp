#pragma once

// Vietoris-Rips persistence in degrees 0 and 1 over Z/2, and two distances
// between persistence diagrams.

#include <cstddef>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "plnet/lattice.hpp"
#include "plnet/pointproc.hpp"
#include "plnet/rng.hpp"

namespace plnet {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

struct PersistenceDiagram {
    int degree = 0;
    std::vector<std::pair<double, double>> pairs;  // (birth, death), death may be +inf
    std::string source;
};

struct FiltrationParams {
    double max_radius = 1.5;  // filtration cap in ball-radius units
    int max_degree = 2;       // largest simplex dimension; diagrams for degrees 0 .. max_degree - 1
    std::size_t max_simplices = 20'000'000;

    void validate() const;
};

/// Flag filtration where a simplex enters at half its largest edge length.
/// Returns diagrams for degrees 0 .. max_degree - 1, each sorted by (birth, death).
std::vector<PersistenceDiagram> rips_persistence(const PointConfiguration& cfg, const FiltrationParams& fp);

/// TV distance between Gaussian-smoothed diagram measures: atoms with
/// persistence below diagonal_cut and infinite pairs are dropped, the rest
/// normalized to probability, smoothed with an isotropic Gaussian and
/// compared as int |f - g| on a shared grid.
double pd_smooth_tv(const PersistenceDiagram& a, const PersistenceDiagram& b, double kernel_sd = 0.5,
                    double diagonal_cut = 0.05, double grid_step = 0.05);

/// D(X, Y) = sum_x |x - y(x)| + sum_y |y - x(y)| over finite pairs.
double pd_nearest_point_distance(const PersistenceDiagram& a, const PersistenceDiagram& b);

enum class PdMetric { tv, nearest };

PdMetric pd_metric_from_string(std::string_view name);
std::string_view to_string(PdMetric m);

struct PdSweepOptions {
    int degree = 1;
    int n_eigen = 500;
    double edge = kDefaultGinibreEdge;
    double kernel_sd = 0.5;
    double diagonal_cut = 0.05;
    double grid_step = 0.05;
    unsigned threads = 0;
};

struct PdSweepRow {
    double sigma = 0.0;
    double mean_distance = 0.0;
    double stderr_distance = 0.0;
    PdMetric metric = PdMetric::tv;
    std::size_t n_samples = 0;
};

/// For each sigma, n_samples independent (perturbed lattice, Ginibre) pairs
/// in the same disk; sample i uses the same Ginibre draw for every sigma.
/// Returns one table per metric in `metrics` order.
std::vector<std::vector<PdSweepRow>> pd_distance_sweep_metrics(const Lattice& lat, const std::vector<double>& sigma_grid,
                                                               std::size_t n_samples, const FiltrationParams& fp,
                                                               const std::vector<PdMetric>& metrics,
                                                               const RngStream& rng, const PdSweepOptions& opt = {});

std::vector<PdSweepRow> pd_distance_sweep(const Lattice& lat, const std::vector<double>& sigma_grid,
                                          std::size_t n_samples, const FiltrationParams& fp, PdMetric metric,
                                          const RngStream& rng, const PdSweepOptions& opt = {});

}  // namespace plnet
