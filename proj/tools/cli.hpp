#pragma once

// Configuration-driven front end. A run parses and validates the whole
// configuration before any computation, writes CSV outputs with JSON
// sidecars, and finally writes manifest.json atomically.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "plnet/exactseries.hpp"
#include "plnet/lattice.hpp"
#include "plnet/pointproc.hpp"
#include "plnet/sinr.hpp"
#include "plnet/tda.hpp"

namespace plnet::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitResource = 3;
inline constexpr int kExitNumerical = 4;

enum class Experiment {
    sample,
    coverage_mc,
    coverage_exact,
    coverage_approx,
    zeta,
    ph,
    pd_sweep,
    nnd,
    poisson_limit,
    lognormal,
};

std::optional<Experiment> experiment_from_string(std::string_view name);
std::string_view to_string(Experiment e);
const std::vector<Experiment>& all_experiments();

struct ProcessConfig {
    ProcessKind kind = ProcessKind::poisson;
    int dim = 2;
    double window_radius = 30.0;
    Lattice lattice;
    double sigma = 0.0;
    std::vector<double> sigma_grid;  // empty: use sigma
    bool uniform_shift = false;
    int n_eigen = 500;
    double edge = kDefaultGinibreEdge;
};

struct ExperimentConfig {
    Experiment experiment = Experiment::sample;
    std::uint64_t seed = 0;
    unsigned threads = 0;
    std::filesystem::path output_dir = "out";

    ProcessConfig process;
    SinrParams sinr;
    QuadratureSpec quad;
    bool exact_c1 = false;
    FiltrationParams filtration;
    PdSweepOptions pd;
    std::vector<PdMetric> metrics{PdMetric::tv, PdMetric::nearest};

    std::size_t n_trials = 20000;
    std::size_t n_realizations = 1000;
    std::size_t n_samples = 100;
    double bin_width = 0.05;

    std::vector<Lattice> zeta_lattices;
    double zeta_s = 4.0;
    std::optional<double> zeta_rel_tol;  // unset: default_zeta_rel_tol(dim) per lattice

    std::filesystem::path points_file;  // ph: optional input configuration

    std::vector<double> xi0{1.0, 0.0};
    double lognormal_theta = 1.0;

    nlohmann::json resolved;  // the configuration with every default filled in

    /// Sigma values the experiment iterates over.
    std::vector<double> sigmas() const;
};

/// Command-line values that take precedence over the file.
struct Overrides {
    std::optional<std::string> experiment;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> threads;
    std::optional<std::string> output_dir;
};

struct ParseResult {
    std::optional<ExperimentConfig> config;
    std::vector<std::string> errors;  // "field: message"
};

/// Reads JSON text; parse errors carry line and column.
nlohmann::json parse_json_text(const std::string& text, const std::string& origin);
nlohmann::json load_json_file(const std::filesystem::path& path);

/// Full schema and precondition check. Never throws for bad input.
ParseResult parse_config(const nlohmann::json& j, const Overrides& ov = {});

/// Quantities implied by a valid configuration (window point counts, truncation bounds).
nlohmann::json derived_quantities(const ExperimentConfig& cfg);

struct OutputFile {
    std::string name;
    std::uintmax_t bytes = 0;
    std::string fnv1a64;
};

struct RunResult {
    std::vector<OutputFile> outputs;
    double wall_seconds = 0.0;
};

/// Runs a validated configuration. Throws plnet::Error on failure.
RunResult run(const ExperimentConfig& cfg);

/// Checks a finished run directory against its manifest; returns problems found.
std::vector<std::string> verify_run(const std::filesystem::path& dir);

std::string fnv1a64_hex(const std::string& bytes);

/// Entry point of the plnet executable.
int main_entry(int argc, char** argv);

}  // namespace plnet::cli
