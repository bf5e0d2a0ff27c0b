#pragma once

// CSV and JSON serialization. Numbers are written in shortest round-trip
// form so reruns with identical inputs produce identical bytes.

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "plnet/lattice.hpp"
#include "plnet/pointproc.hpp"
#include "plnet/sinr.hpp"
#include "plnet/spatialstats.hpp"
#include "plnet/tda.hpp"

namespace plnet {

/// Writes to a temporary sibling, then renames over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

std::string format_number(double x);

nlohmann::json lattice_to_json(const Lattice& lat);
Lattice lattice_from_json(const nlohmann::json& j);

std::string points_csv(const PointConfiguration& cfg);
PointConfiguration points_from_csv(const std::string& text, int dim);
nlohmann::json points_metadata(const PointConfiguration& cfg, std::uint64_t seed);

std::string coverage_csv(const CoverageCurve& curve);
std::string diagrams_csv(const std::vector<PersistenceDiagram>& diagrams);
std::string sweep_csv(const std::vector<PdSweepRow>& rows);
std::string nnd_csv(const NndEstimate& est);

/// Sidecar path for a data file: data.csv -> data.meta.json.
std::filesystem::path sidecar_path(const std::filesystem::path& data);

}  // namespace plnet
