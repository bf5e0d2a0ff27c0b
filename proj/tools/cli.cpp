#include "cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "CLI11.hpp"
#include "plnet/asymptotics.hpp"
#include "plnet/error.hpp"
#include "plnet/io.hpp"
#include "plnet/spatialstats.hpp"

#ifndef PLNET_VERSION
#define PLNET_VERSION "unknown"
#endif

namespace plnet::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::vector<std::pair<Experiment, std::string_view>> kExperimentNames{
    {Experiment::sample, "sample"},
    {Experiment::coverage_mc, "coverage-mc"},
    {Experiment::coverage_exact, "coverage-exact"},
    {Experiment::coverage_approx, "coverage-approx"},
    {Experiment::zeta, "zeta"},
    {Experiment::ph, "ph"},
    {Experiment::pd_sweep, "pd-sweep"},
    {Experiment::nnd, "nnd"},
    {Experiment::poisson_limit, "poisson-limit"},
    {Experiment::lognormal, "lognormal"},
};

// Field-path aware reader that records problems instead of throwing.
class Reader {
public:
    explicit Reader(std::vector<std::string>& errors) : errors_(errors) {}

    void error(const std::string& field, const std::string& msg) { errors_.push_back(field + ": " + msg); }

    const json* object(const json& parent, const std::string& prefix, const char* key)
    {
        if (!parent.contains(key)) return nullptr;
        const json& v = parent.at(key);
        if (!v.is_object()) {
            error(join(prefix, key), "expected an object");
            return nullptr;
        }
        return &v;
    }

    double number(const json& obj, const std::string& prefix, const char* key, double def)
    {
        if (!obj.contains(key)) return def;
        const json& v = obj.at(key);
        if (!v.is_number()) {
            error(join(prefix, key), "expected a number");
            return def;
        }
        return v.get<double>();
    }

    template <class Int>
    Int integer(const json& obj, const std::string& prefix, const char* key, Int def)
    {
        if (!obj.contains(key)) return def;
        const json& v = obj.at(key);
        if (!v.is_number_integer()) {
            error(join(prefix, key), "expected an integer");
            return def;
        }
        if constexpr (std::is_unsigned_v<Int>) {
            if (!v.is_number_unsigned() && v.get<std::int64_t>() < 0) {
                error(join(prefix, key), "must be nonnegative");
                return def;
            }
        }
        return v.get<Int>();
    }

    bool boolean(const json& obj, const std::string& prefix, const char* key, bool def)
    {
        if (!obj.contains(key)) return def;
        const json& v = obj.at(key);
        if (!v.is_boolean()) {
            error(join(prefix, key), "expected true or false");
            return def;
        }
        return v.get<bool>();
    }

    std::optional<std::string> string(const json& obj, const std::string& prefix, const char* key)
    {
        if (!obj.contains(key)) return std::nullopt;
        const json& v = obj.at(key);
        if (!v.is_string()) {
            error(join(prefix, key), "expected a string");
            return std::nullopt;
        }
        return v.get<std::string>();
    }

    std::optional<std::vector<double>> numbers(const json& obj, const std::string& prefix, const char* key)
    {
        if (!obj.contains(key)) return std::nullopt;
        const json& v = obj.at(key);
        if (!v.is_array() || !std::all_of(v.begin(), v.end(), [](const json& x) { return x.is_number(); })) {
            error(join(prefix, key), "expected an array of numbers");
            return std::nullopt;
        }
        return v.get<std::vector<double>>();
    }

    void allowed_keys(const json& obj, const std::string& prefix, std::initializer_list<const char*> keys)
    {
        for (const auto& [k, _] : obj.items()) {
            if (std::none_of(keys.begin(), keys.end(), [&](const char* a) { return k == a; }))
                error(join(prefix, k.c_str()), "unknown field");
        }
    }

    static std::string join(const std::string& prefix, const char* key)
    {
        return prefix.empty() ? std::string(key) : prefix + "." + key;
    }

private:
    std::vector<std::string>& errors_;
};

int default_dim(LatticeKind k) { return k == LatticeKind::triangular || k == LatticeKind::square ? 2 : 3; }

std::optional<Lattice> read_lattice(Reader& rd, const json& v, const std::string& field)
{
    try {
        if (v.is_string()) {
            const LatticeKind k = lattice_kind_from_string(v.get<std::string>());
            if (k == LatticeKind::custom) {
                rd.error(field, "a custom lattice needs an object with dim and basis");
                return std::nullopt;
            }
            return make_lattice(k, default_dim(k));
        }
        if (!v.is_object()) {
            rd.error(field, "expected a lattice name or an object {name, dim, basis}");
            return std::nullopt;
        }
        rd.allowed_keys(v, field, {"name", "dim", "basis", "covolume"});
        json j = v;
        if (!j.contains("dim")) {
            const std::string name = j.value("name", "custom");
            const LatticeKind k = lattice_kind_from_string(name);
            if (k == LatticeKind::custom) {
                rd.error(field + ".dim", "required for a custom basis");
                return std::nullopt;
            }
            j["dim"] = default_dim(k);
        }
        if (!j.at("dim").is_number_integer() || j.at("dim").get<int>() < 1) {
            rd.error(field + ".dim", "expected a positive integer");
            return std::nullopt;
        }
        return lattice_from_json(j);
    } catch (const Error& e) {
        rd.error(field, e.what());
    } catch (const json::exception& e) {
        rd.error(field, e.what());
    }
    return std::nullopt;
}

json lattice_json_resolved(const Lattice& lat)
{
    json j = lattice_to_json(lat);
    return j;
}

template <class F>
void check(Reader& rd, const std::string& field, F&& f)
{
    try {
        f();
    } catch (const Error& e) {
        rd.error(field, e.what());
    }
}

SamplerSpec sampler_spec(const ProcessConfig& p, double sigma)
{
    SamplerSpec s;
    s.kind = p.kind;
    s.dim = p.dim;
    s.window_radius = p.window_radius;
    s.lattice = p.lattice;
    s.perturbation.sigma = sigma;
    s.perturbation.apply_uniform_shift = p.uniform_shift;
    s.n_eigen = p.n_eigen;
    s.edge = p.edge;
    return s;
}

json sinr_json(const SinrParams& s)
{
    return {{"dim", s.dim}, {"beta", s.beta}, {"gain_a", s.gain_a}, {"noise_W", s.noise_W}, {"theta_grid", s.theta_grid}};
}

std::string tagged(const std::string& base, const std::optional<double>& sigma, const std::string& ext)
{
    if (!sigma) return base + ext;
    return base + "_sigma" + format_number(*sigma) + ext;
}

class OutputWriter {
public:
    explicit OutputWriter(fs::path dir) : dir_(std::move(dir)) {}

    void write(const std::string& name, const std::string& contents)
    {
        write_file_atomic(dir_ / name, contents);
        outputs_.push_back({name, contents.size(), fnv1a64_hex(contents)});
    }

    void write_csv(const std::string& name, const std::string& csv, const json& meta)
    {
        write(name, csv);
        write(sidecar_path(name).string(), meta.dump(2) + "\n");
    }

    std::vector<OutputFile> take() { return std::move(outputs_); }

private:
    fs::path dir_;
    std::vector<OutputFile> outputs_;
};

}  // namespace

std::optional<Experiment> experiment_from_string(std::string_view name)
{
    for (const auto& [e, n] : kExperimentNames)
        if (n == name) return e;
    return std::nullopt;
}

std::string_view to_string(Experiment e)
{
    for (const auto& [x, n] : kExperimentNames)
        if (x == e) return n;
    return "unknown";
}

const std::vector<Experiment>& all_experiments()
{
    static const std::vector<Experiment> v = [] {
        std::vector<Experiment> out;
        for (const auto& [e, _] : kExperimentNames) out.push_back(e);
        return out;
    }();
    return v;
}

std::vector<double> ExperimentConfig::sigmas() const
{
    if (!process.sigma_grid.empty()) return process.sigma_grid;
    return {process.sigma};
}

json parse_json_text(const std::string& text, const std::string& origin)
{
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        std::size_t line = 1, col = 1;
        for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        throw invalid_argument(fmt::format("{}:{}:{}: JSON parse error: {}", origin, line, col, e.what()));
    }
}

json load_json_file(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw invalid_argument("cannot open config file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_json_text(ss.str(), path.string());
}

ParseResult parse_config(const json& j, const Overrides& ov)
{
    ParseResult res;
    Reader rd(res.errors);
    if (!j.is_object()) {
        rd.error("(root)", "configuration must be a JSON object");
        return res;
    }
    rd.allowed_keys(j, "",
                    {"experiment", "seed", "threads", "output_dir", "process", "sinr", "quad", "exact", "tda",
                     "n_trials", "n_realizations", "n_samples", "bin_width", "zeta", "ph", "lognormal"});

    ExperimentConfig cfg;

    // Top level.
    std::optional<std::string> exp_name = rd.string(j, "", "experiment");
    if (ov.experiment) {
        if (exp_name && *exp_name != *ov.experiment)
            rd.error("experiment", "config file says '" + *exp_name + "' but the command is '" + *ov.experiment + "'");
        exp_name = ov.experiment;
    }
    if (!exp_name) {
        rd.error("experiment", "required");
    } else if (auto e = experiment_from_string(*exp_name)) {
        cfg.experiment = *e;
    } else {
        rd.error("experiment", "unknown experiment '" + *exp_name + "'");
    }

    if (ov.seed) {
        cfg.seed = *ov.seed;
    } else if (!j.contains("seed")) {
        rd.error("seed", "required (seeds are mandatory for reproducibility)");
    } else {
        cfg.seed = rd.integer<std::uint64_t>(j, "", "seed", 0);
    }
    cfg.threads = ov.threads ? *ov.threads : rd.integer<unsigned>(j, "", "threads", 0);
    if (ov.output_dir)
        cfg.output_dir = *ov.output_dir;
    else if (auto o = rd.string(j, "", "output_dir"))
        cfg.output_dir = *o;

    cfg.n_trials = rd.integer<std::size_t>(j, "", "n_trials", cfg.n_trials);
    cfg.n_realizations = rd.integer<std::size_t>(j, "", "n_realizations", cfg.n_realizations);
    cfg.n_samples = rd.integer<std::size_t>(j, "", "n_samples", cfg.n_samples);
    cfg.bin_width = rd.number(j, "", "bin_width", cfg.bin_width);
    if (cfg.n_trials < 1) rd.error("n_trials", "must be >= 1");
    if (cfg.n_realizations < 1) rd.error("n_realizations", "must be >= 1");
    if (cfg.n_samples < 1) rd.error("n_samples", "must be >= 1");
    if (!(cfg.bin_width > 0.0))
        rd.error("bin_width", "must be positive");
    else if (std::abs(std::round(cfg.bin_width / kEcdfResolution) * kEcdfResolution - cfg.bin_width) > 1e-9)
        rd.error("bin_width", "must be a multiple of 1e-4");

    // Process.
    ProcessConfig& p = cfg.process;
    bool have_lattice = false;
    if (const json* pj = rd.object(j, "", "process")) {
        rd.allowed_keys(*pj, "process",
                        {"kind", "dim", "window_radius", "lattice", "sigma", "sigma_grid", "uniform_shift", "n_eigen",
                         "edge"});
        if (auto k = rd.string(*pj, "process", "kind")) {
            try {
                p.kind = process_kind_from_string(*k);
            } catch (const Error& e) {
                rd.error("process.kind", e.what());
            }
        }
        if (pj->contains("lattice")) {
            if (auto lat = read_lattice(rd, pj->at("lattice"), "process.lattice")) {
                p.lattice = *lat;
                p.dim = lat->dim;
                have_lattice = true;
            }
        }
        p.dim = rd.integer<int>(*pj, "process", "dim", p.dim);
        p.window_radius = rd.number(*pj, "process", "window_radius", p.window_radius);
        p.sigma = rd.number(*pj, "process", "sigma", p.sigma);
        if (auto g = rd.numbers(*pj, "process", "sigma_grid")) p.sigma_grid = *g;
        p.uniform_shift = rd.boolean(*pj, "process", "uniform_shift", p.uniform_shift);
        p.n_eigen = rd.integer<int>(*pj, "process", "n_eigen", p.n_eigen);
        p.edge = rd.number(*pj, "process", "edge", p.edge);
    }
    if (p.dim < 1) rd.error("process.dim", "must be positive");
    if (have_lattice && p.lattice.dim != p.dim) rd.error("process.dim", "does not match the lattice dimension");
    if (!(p.window_radius > 0.0)) rd.error("process.window_radius", "must be positive");
    if (!(p.sigma >= 0.0)) rd.error("process.sigma", "must be nonnegative");
    if (j.contains("process") && j["process"].contains("sigma_grid") && p.sigma_grid.empty())
        rd.error("process.sigma_grid", "must not be empty");
    for (double s : p.sigma_grid)
        if (!(s >= 0.0)) rd.error("process.sigma_grid", "entries must be nonnegative");
    if (p.n_eigen < 1) rd.error("process.n_eigen", "must be >= 1");
    if (!(p.edge >= 0.0 && p.edge < 1.0)) rd.error("process.edge", "must lie in [0, 1)");
    if ((p.kind == ProcessKind::ginibre || p.kind == ProcessKind::ginibre_radial) && p.dim != 2)
        rd.error("process.dim", "Ginibre processes are planar (dim = 2)");
    if (p.kind == ProcessKind::perturbed_lattice && !have_lattice)
        rd.error("process.lattice", "required for a perturbed-lattice process");

    // SINR.
    cfg.sinr.dim = p.dim;
    cfg.sinr.theta_grid = default_theta_grid();
    if (const json* sj = rd.object(j, "", "sinr")) {
        rd.allowed_keys(*sj, "sinr", {"beta", "gain_a", "noise_W", "theta_grid"});
        cfg.sinr.beta = rd.number(*sj, "sinr", "beta", cfg.sinr.beta);
        cfg.sinr.gain_a = rd.number(*sj, "sinr", "gain_a", cfg.sinr.gain_a);
        cfg.sinr.noise_W = rd.number(*sj, "sinr", "noise_W", cfg.sinr.noise_W);
        if (auto g = rd.numbers(*sj, "sinr", "theta_grid")) cfg.sinr.theta_grid = *g;
    }
    if (!(cfg.sinr.beta > 1.0))
        rd.error("sinr.beta", "must exceed 1 (path loss a*r^(-d*beta) requires beta > 1)");
    else
        check(rd, "sinr", [&] { cfg.sinr.validate(); });

    // Quadrature.
    if (const json* qj = rd.object(j, "", "quad")) {
        rd.allowed_keys(*qj, "quad", {"abs_tol", "rel_tol", "max_subdivisions", "lattice_truncation_radius"});
        cfg.quad.abs_tol = rd.number(*qj, "quad", "abs_tol", cfg.quad.abs_tol);
        cfg.quad.rel_tol = rd.number(*qj, "quad", "rel_tol", cfg.quad.rel_tol);
        cfg.quad.max_subdivisions = rd.integer<int>(*qj, "quad", "max_subdivisions", cfg.quad.max_subdivisions);
        cfg.quad.lattice_truncation_radius =
            rd.number(*qj, "quad", "lattice_truncation_radius", cfg.quad.lattice_truncation_radius);
    }
    check(rd, "quad", [&] { cfg.quad.validate(); });
    if (const json* ej = rd.object(j, "", "exact")) {
        rd.allowed_keys(*ej, "exact", {"c1"});
        cfg.exact_c1 = rd.boolean(*ej, "exact", "c1", cfg.exact_c1);
    }

    // TDA.
    cfg.pd.n_eigen = p.n_eigen;
    cfg.pd.edge = p.edge;
    if (const json* tj = rd.object(j, "", "tda")) {
        rd.allowed_keys(*tj, "tda",
                        {"max_radius", "max_degree", "max_simplices", "degree", "metrics", "kernel_sd", "diagonal_cut",
                         "grid_step"});
        cfg.filtration.max_radius = rd.number(*tj, "tda", "max_radius", cfg.filtration.max_radius);
        cfg.filtration.max_degree = rd.integer<int>(*tj, "tda", "max_degree", cfg.filtration.max_degree);
        cfg.filtration.max_simplices =
            rd.integer<std::size_t>(*tj, "tda", "max_simplices", cfg.filtration.max_simplices);
        cfg.pd.degree = rd.integer<int>(*tj, "tda", "degree", cfg.pd.degree);
        cfg.pd.kernel_sd = rd.number(*tj, "tda", "kernel_sd", cfg.pd.kernel_sd);
        cfg.pd.diagonal_cut = rd.number(*tj, "tda", "diagonal_cut", cfg.pd.diagonal_cut);
        cfg.pd.grid_step = rd.number(*tj, "tda", "grid_step", cfg.pd.grid_step);
        if (tj->contains("metrics")) {
            const json& m = tj->at("metrics");
            cfg.metrics.clear();
            if (!m.is_array() || m.empty()) {
                rd.error("tda.metrics", "expected a nonempty array of \"tv\" / \"nearest\"");
            } else {
                for (const json& x : m) {
                    if (!x.is_string()) {
                        rd.error("tda.metrics", "entries must be strings");
                        continue;
                    }
                    try {
                        cfg.metrics.push_back(pd_metric_from_string(x.get<std::string>()));
                    } catch (const Error& e) {
                        rd.error("tda.metrics", e.what());
                    }
                }
            }
        }
    }
    check(rd, "tda", [&] { cfg.filtration.validate(); });
    if (cfg.pd.degree < 0 || cfg.pd.degree >= cfg.filtration.max_degree)
        rd.error("tda.degree", "must lie in [0, max_degree - 1]");
    if (!(cfg.pd.kernel_sd > 0.0)) rd.error("tda.kernel_sd", "must be positive");
    if (!(cfg.pd.diagonal_cut >= 0.0)) rd.error("tda.diagonal_cut", "must be nonnegative");
    if (!(cfg.pd.grid_step > 0.0)) rd.error("tda.grid_step", "must be positive");

    // Zeta.
    if (const json* zj = rd.object(j, "", "zeta")) {
        rd.allowed_keys(*zj, "zeta", {"lattices", "s", "rel_tol"});
        cfg.zeta_s = rd.number(*zj, "zeta", "s", cfg.zeta_s);
        if (zj->contains("rel_tol")) cfg.zeta_rel_tol = rd.number(*zj, "zeta", "rel_tol", 0.0);
        if (zj->contains("lattices")) {
            const json& ls = zj->at("lattices");
            if (!ls.is_array() || ls.empty()) {
                rd.error("zeta.lattices", "expected a nonempty array");
            } else {
                for (std::size_t i = 0; i < ls.size(); ++i)
                    if (auto lat = read_lattice(rd, ls[i], fmt::format("zeta.lattices[{}]", i)))
                        cfg.zeta_lattices.push_back(*lat);
            }
        }
    }
    if (cfg.zeta_lattices.empty() && !(j.contains("zeta") && j["zeta"].contains("lattices")))
        cfg.zeta_lattices = {make_lattice(LatticeKind::triangular, 2), make_lattice(LatticeKind::square, 2)};
    if (cfg.zeta_rel_tol && !(*cfg.zeta_rel_tol > 0.0)) rd.error("zeta.rel_tol", "must be positive");
    for (std::size_t i = 0; i < cfg.zeta_lattices.size(); ++i)
        if (!(cfg.zeta_s > cfg.zeta_lattices[i].dim))
            rd.error("zeta.s", fmt::format("must exceed the dimension of lattices[{}] (the sum diverges)", i));

    // PH input.
    if (const json* hj = rd.object(j, "", "ph")) {
        rd.allowed_keys(*hj, "ph", {"points_file"});
        if (auto f = rd.string(*hj, "ph", "points_file")) cfg.points_file = *f;
    }

    // Log-normal check.
    if (const json* lj = rd.object(j, "", "lognormal")) {
        rd.allowed_keys(*lj, "lognormal", {"xi0", "theta"});
        if (auto x = rd.numbers(*lj, "lognormal", "xi0")) cfg.xi0 = *x;
        cfg.lognormal_theta = rd.number(*lj, "lognormal", "theta", cfg.lognormal_theta);
    }

    // Experiment-specific preconditions.
    auto need_lattice_process = [&](const char* what) {
        if (p.kind != ProcessKind::perturbed_lattice)
            rd.error("process.kind", std::string(what) + " requires a perturbed-lattice process");
    };
    auto need_positive_sigmas = [&] {
        for (double s : cfg.sigmas())
            if (!(s > 0.0)) rd.error(p.sigma_grid.empty() ? "process.sigma" : "process.sigma_grid", "must be positive");
    };
    if (exp_name && experiment_from_string(*exp_name)) {
        switch (cfg.experiment) {
        case Experiment::coverage_exact:
        case Experiment::coverage_approx:
            need_lattice_process(exp_name->c_str());
            need_positive_sigmas();
            break;
        case Experiment::pd_sweep:
            need_lattice_process("pd-sweep");
            if (p.dim != 2) rd.error("process.dim", "pd-sweep compares against Ginibre and needs dim = 2");
            if (p.sigma_grid.empty()) rd.error("process.sigma_grid", "required for pd-sweep");
            if (cfg.pd.degree != 1 && cfg.pd.degree != 0) rd.error("tda.degree", "must be 0 or 1");
            if (cfg.n_samples < 2) rd.error("n_samples", "must be >= 2 for pd-sweep");
            break;
        case Experiment::poisson_limit:
            need_lattice_process("poisson-limit");
            need_positive_sigmas();
            break;
        case Experiment::lognormal:
            need_lattice_process("lognormal");
            need_positive_sigmas();
            if (static_cast<int>(cfg.xi0.size()) != p.dim) rd.error("lognormal.xi0", "must have process.dim entries");
            if (!(cfg.lognormal_theta > 0.0)) rd.error("lognormal.theta", "must be positive");
            if (cfg.n_samples < 2) rd.error("n_samples", "must be >= 2 for the log-normal check");
            break;
        case Experiment::ph:
            if (!cfg.points_file.empty() && !fs::exists(cfg.points_file))
                rd.error("ph.points_file", "file not found: " + cfg.points_file.string());
            break;
        default:
            break;
        }
    }

    if (!res.errors.empty()) return res;

    // Resolved configuration.
    json r;
    r["experiment"] = std::string(to_string(cfg.experiment));
    r["seed"] = cfg.seed;
    r["threads"] = cfg.threads;
    r["output_dir"] = cfg.output_dir.string();
    json pr = {{"kind", std::string(to_string(p.kind))},
               {"dim", p.dim},
               {"window_radius", p.window_radius},
               {"sigma", p.sigma},
               {"uniform_shift", p.uniform_shift},
               {"n_eigen", p.n_eigen},
               {"edge", p.edge}};
    if (!p.sigma_grid.empty()) pr["sigma_grid"] = p.sigma_grid;
    if (have_lattice) pr["lattice"] = lattice_json_resolved(p.lattice);
    r["process"] = pr;
    r["sinr"] = {{"beta", cfg.sinr.beta},
                 {"gain_a", cfg.sinr.gain_a},
                 {"noise_W", cfg.sinr.noise_W},
                 {"theta_grid", cfg.sinr.theta_grid}};
    r["quad"] = {{"abs_tol", cfg.quad.abs_tol},
                 {"rel_tol", cfg.quad.rel_tol},
                 {"max_subdivisions", cfg.quad.max_subdivisions},
                 {"lattice_truncation_radius", cfg.quad.lattice_truncation_radius}};
    r["exact"] = {{"c1", cfg.exact_c1}};
    json metrics = json::array();
    for (PdMetric m : cfg.metrics) metrics.push_back(std::string(to_string(m)));
    r["tda"] = {{"max_radius", cfg.filtration.max_radius},
                {"max_degree", cfg.filtration.max_degree},
                {"max_simplices", cfg.filtration.max_simplices},
                {"degree", cfg.pd.degree},
                {"metrics", metrics},
                {"kernel_sd", cfg.pd.kernel_sd},
                {"diagonal_cut", cfg.pd.diagonal_cut},
                {"grid_step", cfg.pd.grid_step}};
    r["n_trials"] = cfg.n_trials;
    r["n_realizations"] = cfg.n_realizations;
    r["n_samples"] = cfg.n_samples;
    r["bin_width"] = cfg.bin_width;
    json zl = json::array();
    for (const auto& lat : cfg.zeta_lattices) zl.push_back(lattice_json_resolved(lat));
    r["zeta"] = {{"lattices", zl}, {"s", cfg.zeta_s}, {"rel_tol", cfg.zeta_rel_tol ? json(*cfg.zeta_rel_tol) : json(nullptr)}};
    r["ph"] = {{"points_file", cfg.points_file.string()}};
    r["lognormal"] = {{"xi0", cfg.xi0}, {"theta", cfg.lognormal_theta}};
    cfg.resolved = std::move(r);
    res.config = std::move(cfg);
    return res;
}

json derived_quantities(const ExperimentConfig& cfg)
{
    const ProcessConfig& p = cfg.process;
    json d;
    if (p.kind == ProcessKind::ginibre) {
        d["ginibre_window_radius"] = (1.0 - p.edge) * std::sqrt(p.n_eigen / std::numbers::pi);
        d["expected_points_in_window"] = p.n_eigen * (1.0 - p.edge) * (1.0 - p.edge);
    } else {
        d["expected_points_in_window"] = ball_volume(p.dim, p.window_radius);
    }
    const double db = p.dim * cfg.sinr.beta;
    if (db > p.dim) {
        const double tail = zeta_tail_integral(p.dim, db, p.window_radius);
        const double theta_max =
            cfg.sinr.theta_grid.empty() ? 0.0 : *std::max_element(cfg.sinr.theta_grid.begin(), cfg.sinr.theta_grid.end());
        d["interference_tail_integral"] = tail;
        // Multiplicative truncation error of the coverage function for a serving base at unit distance.
        d["truncation_bound_unit_distance"] = -std::expm1(-theta_max * tail);
    }
    if (p.kind == ProcessKind::perturbed_lattice) {
        d["lattice_shortest_vector"] = p.lattice.shortest_vector();
        d["lattice_sites_within_truncation_radius"] =
            ball_volume(p.dim, cfg.quad.lattice_truncation_radius) / p.lattice.covolume;
    }
    return d;
}

std::string fnv1a64_hex(const std::string& bytes)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return fmt::format("{:016x}", h);
}

RunResult run(const ExperimentConfig& cfg)
{
    const auto t0 = std::chrono::steady_clock::now();
    const ProcessConfig& p = cfg.process;
    const RngStream rng{cfg.seed, 0};
    fs::create_directories(cfg.output_dir);
    // A stale manifest would vouch for outputs this run is about to replace.
    fs::remove(cfg.output_dir / "manifest.json");
    OutputWriter out(cfg.output_dir);

    const bool swept = !p.sigma_grid.empty();
    auto sigma_tag = [&](double s) { return swept ? std::optional<double>(s) : std::nullopt; };
    auto base_meta = [&](const std::string& method) {
        return json{{"experiment", std::string(to_string(cfg.experiment))}, {"method", method}, {"seed", cfg.seed}};
    };
    const bool lattice_process = p.kind == ProcessKind::perturbed_lattice;
    const std::vector<double> sigmas = lattice_process ? cfg.sigmas() : std::vector<double>{p.sigma};

    switch (cfg.experiment) {
    case Experiment::sample: {
        for (double s : sigmas) {
            const PointSampler sampler(sampler_spec(p, s));
            const PointConfiguration pc = sampler(rng);
            json meta = points_metadata(pc, cfg.seed);
            meta["sigma"] = s;
            out.write_csv(tagged("points", lattice_process ? sigma_tag(s) : std::nullopt, ".csv"), points_csv(pc),
                          meta);
        }
        break;
    }
    case Experiment::coverage_mc: {
        for (double s : sigmas) {
            const PointSampler sampler(sampler_spec(p, s));
            const CoverageCurve c = coverage_mc(sampler, cfg.sinr, cfg.n_trials, rng, cfg.threads);
            json meta = base_meta("monte-carlo");
            meta["sampler"] = c.label;
            meta["sinr"] = sinr_json(cfg.sinr);
            meta["n_trials"] = c.n_trials;
            meta["max_truncation_bound"] =
                c.truncation.empty() ? 0.0 : *std::max_element(c.truncation.begin(), c.truncation.end());
            out.write_csv(tagged("coverage", lattice_process ? sigma_tag(s) : std::nullopt, ".csv"), coverage_csv(c),
                          meta);
        }
        break;
    }
    case Experiment::coverage_exact: {
        for (double s : sigmas) {
            ExactSeriesDiagnostics diag;
            const CoverageCurve c = coverage_exact(p.lattice, s, cfg.sinr, cfg.quad, cfg.threads, &diag);
            json meta = base_meta("exact-series");
            meta["lattice"] = lattice_to_json(p.lattice);
            meta["sigma"] = s;
            meta["sinr"] = sinr_json(cfg.sinr);
            meta["stderr_column"] = "deterministic error bound";
            meta["outer_radius"] = diag.outer_radius;
            meta["inner_radius"] = diag.inner_radius;
            meta["outer_truncation_bound"] = diag.truncation_bound;
            meta["n_outer_shells"] = diag.n_outer_shells;
            meta["n_inner_shells"] = diag.n_inner_shells;
            if (cfg.exact_c1) {
                const C1Result c1 = c1_exact_detailed(p.lattice, s, cfg.sinr.beta, p.dim, cfg.quad);
                meta["c1_exact"] = c1.value;
                meta["c1_error_bound"] = c1.error_bound;
            }
            out.write_csv(tagged("coverage_exact", sigma_tag(s), ".csv"), coverage_csv(c), meta);
        }
        break;
    }
    case Experiment::coverage_approx: {
        const double tol = 1e-10;
        const double z = epstein_zeta(p.lattice, p.dim * cfg.sinr.beta, default_zeta_rel_tol(p.dim));
        for (double s : sigmas) {
            CoverageCurve c;
            c.theta = cfg.sinr.theta_grid;
            for (double th : c.theta) {
                c.estimate.push_back(coverage_smallsigma_from_zeta(z, th, s, cfg.sinr.beta, p.dim, tol));
                c.std_error.push_back(0.0);
            }
            json meta = base_meta("small-sigma closed form");
            meta["lattice"] = lattice_to_json(p.lattice);
            meta["sigma"] = s;
            meta["sinr"] = sinr_json(cfg.sinr);
            meta["quadrature_tolerance"] = tol;
            meta["stderr_column"] = "zero (closed form; quadrature tolerance recorded separately)";
            meta["epstein_zeta_dbeta"] = z;
            meta["c1_smallsigma"] = c1_smallsigma_from_zeta(z, s, cfg.sinr.beta, p.dim);
            meta["smalltheta_slope"] = smalltheta_slope_from_zeta(z, s, cfg.sinr.beta, p.dim);
            out.write_csv(tagged("coverage_approx", sigma_tag(s), ".csv"), coverage_csv(c), meta);
        }
        break;
    }
    case Experiment::zeta: {
        std::string csv = "lattice,dim,s,value,error_bound\n";
        json lats = json::array(), tols = json::array();
        for (const auto& lat : cfg.zeta_lattices) {
            const double tol = cfg.zeta_rel_tol.value_or(default_zeta_rel_tol(lat.dim));
            tols.push_back(tol);
            const ZetaResult z = epstein_zeta_detailed(lat, cfg.zeta_s, tol);
            csv += fmt::format("{},{},{},{},{}\n", lat.name, lat.dim, format_number(cfg.zeta_s), format_number(z.value),
                               format_number(z.error_bound));
            lats.push_back(lattice_to_json(lat));
        }
        json meta = base_meta("direct summation with bracketed tail");
        meta["lattices"] = lats;
        meta["rel_tol"] = tols;
        out.write_csv("zeta.csv", csv, meta);
        break;
    }
    case Experiment::ph: {
        PointConfiguration pc;
        std::string source;
        if (!cfg.points_file.empty()) {
            std::ifstream in(cfg.points_file, std::ios::binary);
            std::stringstream ss;
            ss << in.rdbuf();
            pc = points_from_csv(ss.str(), p.dim);
            source = cfg.points_file.string();
        } else {
            const PointSampler sampler(sampler_spec(p, p.sigma));
            pc = sampler(rng);
            source = sampler.label();
        }
        const auto diagrams = rips_persistence(pc, cfg.filtration);
        json meta = base_meta("vietoris-rips persistence over Z/2");
        meta["source"] = source;
        meta["n_points"] = pc.size();
        meta["filtration_value"] = "ball radius (half the largest pairwise distance)";
        meta["max_radius"] = cfg.filtration.max_radius;
        out.write_csv("diagrams.csv", diagrams_csv(diagrams), meta);
        break;
    }
    case Experiment::pd_sweep: {
        PdSweepOptions opt = cfg.pd;
        opt.threads = cfg.threads;
        opt.n_eigen = p.n_eigen;
        opt.edge = p.edge;
        const auto tables =
            pd_distance_sweep_metrics(p.lattice, p.sigma_grid, cfg.n_samples, cfg.filtration, cfg.metrics, rng, opt);
        for (std::size_t m = 0; m < tables.size(); ++m) {
            const auto& t = tables[m];
            const auto best = std::min_element(t.begin(), t.end(), [](const PdSweepRow& a, const PdSweepRow& b) {
                return a.mean_distance < b.mean_distance;
            });
            json meta = base_meta("persistence diagram distance sweep");
            meta["metric"] = std::string(to_string(cfg.metrics[m]));
            meta["lattice"] = lattice_to_json(p.lattice);
            meta["degree"] = opt.degree;
            meta["n_eigen"] = opt.n_eigen;
            meta["edge"] = opt.edge;
            meta["kernel_sd"] = opt.kernel_sd;
            meta["diagonal_cut"] = opt.diagonal_cut;
            meta["grid_step"] = opt.grid_step;
            meta["max_radius"] = cfg.filtration.max_radius;
            meta["argmin_sigma"] = best->sigma;
            out.write_csv(fmt::format("pd_sweep_{}.csv", to_string(cfg.metrics[m])), sweep_csv(t), meta);
        }
        break;
    }
    case Experiment::nnd: {
        for (double s : sigmas) {
            const PointSampler sampler(sampler_spec(p, s));
            const NndEstimate e = nnd_estimate(sampler, cfg.n_realizations, cfg.bin_width, rng, cfg.threads);
            const int dim = p.dim;
            json meta = base_meta("minus-sampled nearest-neighbour distances");
            meta["sampler"] = e.label;
            meta["n_realizations"] = cfg.n_realizations;
            meta["n_points_used"] = e.n_points_used;
            meta["bin_width"] = cfg.bin_width;
            meta["ks_to_poisson"] = ks_distance(e, [dim](double r) { return poisson_nnd_cdf(r, dim); });
            out.write_csv(tagged("nnd", lattice_process ? sigma_tag(s) : std::nullopt, ".csv"), nnd_csv(e), meta);
        }
        break;
    }
    case Experiment::poisson_limit: {
        SamplerSpec ps;
        ps.kind = ProcessKind::poisson;
        ps.dim = p.dim;
        ps.window_radius = p.window_radius;
        const CoverageCurve poisson = coverage_mc(PointSampler(ps), cfg.sinr, cfg.n_trials, rng.substream(1), cfg.threads);
        json pmeta = base_meta("monte-carlo");
        pmeta["sampler"] = poisson.label;
        pmeta["sinr"] = sinr_json(cfg.sinr);
        pmeta["n_trials"] = poisson.n_trials;
        out.write_csv("coverage_poisson.csv", coverage_csv(poisson), pmeta);

        std::string summary = "sigma,coverage_sup_gap,pooled_stderr_at_gap,nnd_ks_to_poisson\n";
        for (double s : sigmas) {
            const PointSampler sampler(sampler_spec(p, s));
            const CoverageCurve c = coverage_mc(sampler, cfg.sinr, cfg.n_trials, rng.substream(2), cfg.threads);
            double gap = 0.0, gap_se = 0.0;
            for (std::size_t i = 0; i < c.theta.size(); ++i) {
                const double g = std::abs(c.estimate[i] - poisson.estimate[i]);
                if (g > gap) {
                    gap = g;
                    gap_se = std::hypot(c.std_error[i], poisson.std_error[i]);
                }
            }
            json meta = base_meta("monte-carlo");
            meta["sampler"] = c.label;
            meta["sinr"] = sinr_json(cfg.sinr);
            meta["n_trials"] = c.n_trials;
            out.write_csv(tagged("coverage_ptl", s, ".csv"), coverage_csv(c), meta);

            const NndEstimate e = nnd_estimate(sampler, cfg.n_realizations, cfg.bin_width, rng.substream(3), cfg.threads);
            const int dim = p.dim;
            const double ks = ks_distance(e, [dim](double r) { return poisson_nnd_cdf(r, dim); });
            json nmeta = base_meta("minus-sampled nearest-neighbour distances");
            nmeta["sampler"] = e.label;
            nmeta["n_realizations"] = cfg.n_realizations;
            nmeta["ks_to_poisson"] = ks;
            out.write_csv(tagged("nnd_ptl", s, ".csv"), nnd_csv(e), nmeta);
            summary += fmt::format("{},{},{},{}\n", format_number(s), format_number(gap), format_number(gap_se),
                                   format_number(ks));
        }
        json smeta = base_meta("perturbed lattice versus Poisson");
        smeta["lattice"] = lattice_to_json(p.lattice);
        out.write_csv("poisson_limit.csv", summary, smeta);
        break;
    }
    case Experiment::lognormal: {
        std::string csv = "sigma,mu,tau,empirical_mean,empirical_sd,mean_stderr,normality_p,rejection_rate,n\n";
        json reports = json::array();
        for (double s : sigmas) {
            const LogNormalReport r = lognormal_empirical_check(p.lattice, cfg.xi0, cfg.lognormal_theta, s,
                                                                cfg.sinr.beta, p.dim, cfg.n_samples, rng,
                                                                p.window_radius, cfg.threads);
            reports.push_back({{"sigma", s},
                               {"mu", r.mu},
                               {"tau", r.tau},
                               {"empirical_mean", r.empirical_mean},
                               {"empirical_sd", r.empirical_sd},
                               {"mean_stderr", r.mean_stderr},
                               {"normality_p", r.normality_p},
                               {"rejection_rate", r.rejection_rate},
                               {"n", r.n}});
            csv += fmt::format("{},{},{},{},{},{},{},{},{}\n", format_number(s), format_number(r.mu),
                               format_number(r.tau), format_number(r.empirical_mean), format_number(r.empirical_sd),
                               format_number(r.mean_stderr), format_number(r.normality_p),
                               format_number(r.rejection_rate), r.n);
        }
        json meta = base_meta("log-normal regime check");
        meta["lattice"] = lattice_to_json(p.lattice);
        meta["xi0"] = cfg.xi0;
        meta["theta"] = cfg.lognormal_theta;
        meta["beta"] = cfg.sinr.beta;
        meta["window_radius"] = p.window_radius;
        meta["n_samples"] = cfg.n_samples;
        out.write_csv("lognormal.csv", csv, meta);
        out.write("lognormal.json", reports.dump(2) + "\n");
        break;
    }
    }

    RunResult res;
    res.outputs = out.take();
    res.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    json files = json::array();
    for (const auto& f : res.outputs) files.push_back({{"file", f.name}, {"bytes", f.bytes}, {"fnv1a64", f.fnv1a64}});
    const json manifest = {{"status", "complete"},
                           {"code_version", PLNET_VERSION},
                           {"experiment", std::string(to_string(cfg.experiment))},
                           {"seed", cfg.seed},
                           {"config", cfg.resolved},
                           {"wall_time_seconds", res.wall_seconds},
                           {"outputs", files}};
    write_file_atomic(cfg.output_dir / "manifest.json", manifest.dump(2) + "\n");
    return res;
}

std::vector<std::string> verify_run(const fs::path& dir)
{
    std::vector<std::string> problems;
    const fs::path mpath = dir / "manifest.json";
    json m;
    try {
        m = load_json_file(mpath);
    } catch (const std::exception& e) {
        problems.push_back(std::string("manifest unreadable: ") + e.what());
        return problems;
    }
    if (!m.is_object() || m.value("status", "") != "complete" || !m.contains("outputs") || !m["outputs"].is_array()) {
        problems.push_back("manifest incomplete");
        return problems;
    }
    std::set<std::string> listed;
    for (const json& f : m["outputs"]) {
        const std::string name = f.value("file", "");
        listed.insert(name);
        std::ifstream in(dir / name, std::ios::binary);
        if (!in) {
            problems.push_back("missing output " + name);
            continue;
        }
        std::stringstream ss;
        ss << in.rdbuf();
        const std::string bytes = ss.str();
        if (bytes.size() != f.value("bytes", std::uintmax_t{0}) || fnv1a64_hex(bytes) != f.value("fnv1a64", ""))
            problems.push_back("output " + name + " does not match the manifest");
    }
    for (const auto& name : listed) {
        if (fs::path(name).extension() == ".csv" && !listed.count(sidecar_path(name).string()))
            problems.push_back("output " + name + " has no metadata sidecar");
    }
    return problems;
}

namespace {

int exit_code_for(ErrorKind k)
{
    switch (k) {
    case ErrorKind::invalid_argument: return kExitConfig;
    case ErrorKind::resource_limit: return kExitResource;
    case ErrorKind::numerical: return kExitNumerical;
    }
    return kExitFailure;
}

const char* hint_for(ErrorKind k)
{
    switch (k) {
    case ErrorKind::resource_limit:
        return "hint: reduce window_radius, n_eigen, tda.max_radius or the tolerance, or raise the relevant cap";
    case ErrorKind::numerical: return "hint: loosen quad tolerances or raise quad.max_subdivisions";
    default: return nullptr;
    }
}

struct CommonFlags {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> threads;
    std::optional<std::string> out;
};

void add_common(CLI::App* sub, CommonFlags& f, bool config_positional)
{
    if (config_positional)
        sub->add_option("config", f.config, "JSON configuration file")->required();
    else
        sub->add_option("-c,--config", f.config, "JSON configuration file");
    sub->add_option("--seed", f.seed, "master seed (overrides the file)");
    sub->add_option("--threads", f.threads, "worker threads, 0 = all cores (overrides the file)");
    sub->add_option("--out", f.out, "output directory (overrides the file)");
}

ParseResult load_and_parse(const CommonFlags& f, std::optional<std::string> experiment)
{
    json j = json::object();
    if (!f.config.empty()) j = load_json_file(f.config);
    Overrides ov;
    ov.experiment = std::move(experiment);
    ov.seed = f.seed;
    ov.threads = f.threads;
    ov.output_dir = f.out;
    return parse_config(j, ov);
}

}  // namespace

int main_entry(int argc, char** argv)
{
    CLI::App app{"Perturbed-lattice wireless network toolkit"};
    app.require_subcommand(1);
    app.set_version_flag("--version", PLNET_VERSION);

    std::vector<std::pair<Experiment, CLI::App*>> subs;
    CommonFlags flags;
    for (Experiment e : all_experiments()) {
        CLI::App* sub = app.add_subcommand(std::string(to_string(e)), "run the " + std::string(to_string(e)) + " experiment");
        add_common(sub, flags, false);
        subs.emplace_back(e, sub);
    }
    CLI::App* run_cmd = app.add_subcommand("run", "run the experiment named in the configuration file");
    add_common(run_cmd, flags, true);
    CLI::App* validate_cmd = app.add_subcommand("validate", "check a configuration file without running it");
    add_common(validate_cmd, flags, true);
    std::string verify_dir;
    CLI::App* verify_cmd = app.add_subcommand("verify", "check a run directory against its manifest");
    verify_cmd->add_option("dir", verify_dir, "output directory of a finished run")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (verify_cmd->parsed()) {
            const auto problems = verify_run(verify_dir);
            for (const auto& p : problems) std::cerr << "verify: " << p << "\n";
            if (problems.empty()) std::cout << "ok: " << verify_dir << "\n";
            return problems.empty() ? kExitOk : kExitFailure;
        }

        std::optional<std::string> experiment;
        for (const auto& [e, sub] : subs)
            if (sub->parsed()) experiment = std::string(to_string(e));

        const ParseResult pr = load_and_parse(flags, experiment);
        if (validate_cmd->parsed()) {
            json report = {{"errors", pr.errors}};
            if (pr.config) report["derived"] = derived_quantities(*pr.config);
            std::cout << report.dump(2) << "\n";
            return pr.errors.empty() ? kExitOk : kExitConfig;
        }
        if (!pr.errors.empty()) {
            for (const auto& e : pr.errors) std::cerr << "config error: " << e << "\n";
            return kExitConfig;
        }
        const RunResult r = run(*pr.config);
        std::cout << fmt::format("{}: wrote {} files to {} in {:.2f} s\n", to_string(pr.config->experiment),
                                 r.outputs.size() + 1, pr.config->output_dir.string(), r.wall_seconds);
        return kExitOk;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        if (const char* h = hint_for(e.kind())) std::cerr << h << "\n";
        return exit_code_for(e.kind());
    } catch (const fs::filesystem_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitFailure;
    }
}

}  // namespace plnet::cli
