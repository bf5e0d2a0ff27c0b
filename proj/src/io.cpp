#include "plnet/io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "plnet/error.hpp"

namespace plnet {

void write_file_atomic(const std::filesystem::path& path, const std::string& contents)
{
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw invalid_argument("cannot write " + tmp.string());
        out << contents;
        out.flush();
        if (!out) throw invalid_argument("write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

std::string format_number(double x)
{
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    return fmt::format("{}", x);
}

nlohmann::json lattice_to_json(const Lattice& lat)
{
    nlohmann::json basis = nlohmann::json::array();
    for (int r = 0; r < lat.dim; ++r)
        for (int c = 0; c < lat.dim; ++c) basis.push_back(lat.basis(r, c));
    return {{"name", lat.name}, {"dim", lat.dim}, {"basis", basis}, {"covolume", lat.covolume}};
}

Lattice lattice_from_json(const nlohmann::json& j)
{
    const std::string name = j.value("name", "custom");
    const int dim = j.at("dim").get<int>();
    if (!j.contains("basis")) return make_lattice(lattice_kind_from_string(name), dim);
    const auto& b = j.at("basis");
    require(b.is_array() && b.size() == static_cast<std::size_t>(dim * dim),
            "lattice.basis must hold dim*dim numbers in row-major order");
    Eigen::MatrixXd m(dim, dim);
    for (int r = 0; r < dim; ++r)
        for (int c = 0; c < dim; ++c) m(r, c) = b[r * dim + c].get<double>();
    Lattice lat = make_lattice(LatticeKind::custom, dim, m);
    lat.name = name;
    return lat;
}

std::string points_csv(const PointConfiguration& cfg)
{
    std::string out;
    for (int k = 0; k < cfg.dim; ++k) out += fmt::format("{}x{}", k ? "," : "", k + 1);
    out += '\n';
    for (std::size_t i = 0; i < cfg.size(); ++i) {
        for (int k = 0; k < cfg.dim; ++k) {
            if (k) out += ',';
            out += format_number(cfg.point(i)[k]);
        }
        out += '\n';
    }
    return out;
}

PointConfiguration points_from_csv(const std::string& text, int dim)
{
    PointConfiguration cfg;
    cfg.dim = dim;
    std::istringstream in(text);
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string cell;
        int k = 0;
        while (std::getline(row, cell, ',')) {
            cfg.coords.push_back(std::stod(cell));
            ++k;
        }
        require(k == dim, "points CSV row has the wrong number of columns");
    }
    return cfg;
}

nlohmann::json points_metadata(const PointConfiguration& cfg, std::uint64_t seed)
{
    return {{"sampler", cfg.provenance},
            {"seed", seed},
            {"dim", cfg.dim},
            {"window_radius", cfg.window_radius},
            {"intensity", cfg.intensity},
            {"n_points", cfg.size()}};
}

std::string coverage_csv(const CoverageCurve& curve)
{
    std::string out = "theta,estimate,stderr\n";
    for (std::size_t i = 0; i < curve.theta.size(); ++i)
        out += fmt::format("{},{},{}\n", format_number(curve.theta[i]), format_number(curve.estimate[i]),
                           format_number(curve.std_error[i]));
    return out;
}

std::string diagrams_csv(const std::vector<PersistenceDiagram>& diagrams)
{
    std::string out = "degree,birth,death\n";
    for (const auto& pd : diagrams)
        for (const auto& [b, d] : pd.pairs) out += fmt::format("{},{},{}\n", pd.degree, format_number(b), format_number(d));
    return out;
}

std::string sweep_csv(const std::vector<PdSweepRow>& rows)
{
    std::string out = "sigma,mean_distance,stderr,metric,n_samples\n";
    for (const auto& r : rows)
        out += fmt::format("{},{},{},{},{}\n", format_number(r.sigma), format_number(r.mean_distance),
                           format_number(r.stderr_distance), to_string(r.metric), r.n_samples);
    return out;
}

std::string nnd_csv(const NndEstimate& est)
{
    std::string out = "r,density,ecdf\n";
    for (std::size_t b = 0; b < est.density.size(); ++b) {
        const double r = est.bin_edges[b + 1];
        out += fmt::format("{},{},{}\n", format_number(r), format_number(est.density[b]), format_number(est.ecdf(r)));
    }
    return out;
}

std::filesystem::path sidecar_path(const std::filesystem::path& data)
{
    std::filesystem::path p = data;
    p.replace_extension(".meta.json");
    return p;
}

}  // namespace plnet
