#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "doctest.h"
#include "plnet/error.hpp"

using namespace plnet;
using namespace plnet::cli;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name)
{
    const fs::path p = fs::temp_directory_path() / ("plnet_test_cli_" + std::to_string(::getpid())) / name;
    fs::remove_all(p);
    fs::create_directories(p.parent_path());
    return p;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::vector<std::string>> csv_rows(const fs::path& p)
{
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(slurp(p));
    std::string line;
    while (std::getline(in, line)) {
        std::vector<std::string> cells;
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        rows.push_back(cells);
    }
    return rows;
}

ExperimentConfig parse_ok(const json& j, const Overrides& ov = {})
{
    const ParseResult r = parse_config(j, ov);
    INFO(json(r.errors).dump());
    REQUIRE(r.errors.empty());
    REQUIRE(r.config);
    return *r.config;
}

bool has_error(const ParseResult& r, const std::string& needle)
{
    for (const auto& e : r.errors)
        if (e.find(needle) != std::string::npos) return true;
    return false;
}

int invoke(std::vector<std::string> args)
{
    args.insert(args.begin(), "plnet");
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    return main_entry(static_cast<int>(argv.size()), argv.data());
}

fs::path write_config(const std::string& name, const json& j)
{
    const fs::path p = scratch(name);
    std::ofstream(p) << j.dump(2);
    return p;
}

std::map<std::string, std::string> csv_files(const fs::path& dir)
{
    std::map<std::string, std::string> out;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.path().extension() == ".csv") out[e.path().filename().string()] = slurp(e.path());
    return out;
}

}  // namespace

TEST_CASE("JSON parse errors carry line and column")
{
    try {
        parse_json_text("{\n  \"seed\": ,\n}", "cfg.json");
        FAIL("expected a parse error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::invalid_argument);
        CHECK(std::string(e.what()).find("cfg.json:2:") == 0);
    }
}

TEST_CASE("validation errors name the field")
{
    const json base = {{"experiment", "coverage-mc"}, {"seed", 1}};
    CHECK(parse_config(base).errors.empty());

    json j = base;
    j["sinr"] = {{"beta", 0.5}};
    auto r = parse_config(j);
    CHECK_FALSE(r.config);
    CHECK(has_error(r, "sinr.beta"));
    CHECK(has_error(r, "beta > 1"));

    r = parse_config(json{{"experiment", "coverage-mc"}});
    CHECK(has_error(r, "seed: required"));

    j = base;
    j["n_trail"] = 5;
    CHECK(has_error(parse_config(j), "n_trail"));

    j = base;
    j["process"] = {{"kind", "perturbed-lattice"}};
    CHECK(has_error(parse_config(j), "process.lattice"));

    j = base;
    j["sinr"] = {{"theta_grid", {1.0, 0.5}}};
    CHECK(has_error(parse_config(j), "sinr.theta_grid"));

    j = {{"experiment", "coverage-exact"}, {"seed", 1}};
    CHECK(has_error(parse_config(j), "process.kind"));

    j = {{"experiment", "pd-sweep"}, {"seed", 1}, {"n_samples", 1},
         {"process", {{"kind", "perturbed-lattice"}, {"lattice", "triangular"}, {"sigma_grid", {0.2, 0.4}}}}};
    CHECK(has_error(parse_config(j), "n_samples"));

    j = base;
    j["bin_width"] = 0.00015;
    CHECK(has_error(parse_config(j), "bin_width"));

    CHECK(has_error(parse_config(json{{"experiment", "warp-drive"}, {"seed", 1}}), "experiment"));
    CHECK_FALSE(parse_config(json::array()).errors.empty());
}

TEST_CASE("defaults are resolved and overrides take precedence")
{
    const auto cfg = parse_ok({{"experiment", "coverage-mc"}, {"seed", 5}, {"threads", 2}, {"output_dir", "a"}});
    CHECK(cfg.experiment == Experiment::coverage_mc);
    CHECK(cfg.n_trials == 20000);
    CHECK(cfg.sinr.theta_grid.size() == 42);
    CHECK(cfg.resolved["n_trials"] == 20000);
    CHECK(cfg.resolved["sinr"]["beta"] == 2.0);
    CHECK(cfg.resolved["seed"] == 5);

    Overrides ov;
    ov.seed = 9;
    ov.threads = 1;
    ov.output_dir = "b";
    const auto o = parse_ok({{"experiment", "coverage-mc"}, {"seed", 5}, {"threads", 2}, {"output_dir", "a"}}, ov);
    CHECK(o.seed == 9);
    CHECK(o.threads == 1);
    CHECK(o.output_dir == "b");

    ov = {};
    ov.experiment = "nnd";
    CHECK_FALSE(parse_config({{"experiment", "zeta"}, {"seed", 1}}, ov).errors.empty());
    const auto n = parse_ok({{"seed", 1}}, ov);
    CHECK(n.experiment == Experiment::nnd);

    const auto d = derived_quantities(parse_ok({{"experiment", "coverage-mc"}, {"seed", 1}}));
    CHECK(d["expected_points_in_window"].get<double>() == doctest::Approx(2827.433).epsilon(1e-6));
    CHECK(d["truncation_bound_unit_distance"].get<double>() > 0.0);
}

TEST_CASE("zeta run writes a verifiable manifest")
{
    const fs::path out = scratch("zeta");
    auto cfg = parse_ok({{"experiment", "zeta"}, {"seed", 3}, {"output_dir", out.string()}});
    const RunResult res = run(cfg);
    CHECK(fs::exists(out / "zeta.csv"));
    CHECK(fs::exists(out / "zeta.meta.json"));
    const auto rows = csv_rows(out / "zeta.csv");
    REQUIRE(rows.size() == 3);
    CHECK(rows[0] == std::vector<std::string>{"lattice", "dim", "s", "value", "error_bound"});
    CHECK(rows[1][0] == "triangular");
    CHECK(rows[2][0] == "square");
    const double tri = std::stod(rows[1][3]), sq = std::stod(rows[2][3]);
    CHECK(tri < sq);
    CHECK(sq == doctest::Approx(6.02681204).epsilon(1e-8));

    const json manifest = json::parse(slurp(out / "manifest.json"));
    CHECK(manifest["status"] == "complete");
    CHECK(manifest["seed"] == 3);
    CHECK(manifest["experiment"] == "zeta");
    CHECK(manifest.contains("code_version"));
    CHECK(manifest.contains("wall_time_seconds"));
    CHECK(manifest["config"] == cfg.resolved);
    CHECK(manifest["outputs"].size() == res.outputs.size());
    CHECK(verify_run(out).empty());
    CHECK(invoke({"verify", out.string()}) == kExitOk);

    // A modified output is detected.
    { std::ofstream(out / "zeta.csv", std::ios::app) << "extra\n"; }
    CHECK_FALSE(verify_run(out).empty());
    CHECK(invoke({"verify", out.string()}) == kExitFailure);

    // A truncated manifest marks the run as failed.
    run(cfg);
    CHECK(verify_run(out).empty());
    const std::string m = slurp(out / "manifest.json");
    { std::ofstream(out / "manifest.json", std::ios::trunc) << m.substr(0, m.size() / 2); }
    CHECK_FALSE(verify_run(out).empty());
    fs::remove(out / "manifest.json");
    CHECK_FALSE(verify_run(out).empty());
}

TEST_CASE("outputs do not depend on the thread count")
{
    const std::vector<json> configs = {
        {{"experiment", "sample"}, {"process", {{"kind", "perturbed-lattice"}, {"lattice", "triangular"}, {"sigma_grid", {0.1, 0.4}}, {"window_radius", 8}}}},
        {{"experiment", "coverage-mc"}, {"n_trials", 300}, {"process", {{"window_radius", 15}}}},
        {{"experiment", "nnd"}, {"n_realizations", 40}, {"process", {{"kind", "ginibre-radial"}, {"window_radius", 10}}}},
        {{"experiment", "coverage-exact"}, {"sinr", {{"theta_grid", {0, 1, 4}}}},
         {"process", {{"kind", "perturbed-lattice"}, {"lattice", "triangular"}, {"sigma", 0.2}}}},
        {{"experiment", "pd-sweep"}, {"n_samples", 2},
         {"process", {{"kind", "perturbed-lattice"}, {"lattice", "triangular"}, {"sigma_grid", {0.2, 0.6}}, {"n_eigen", 120}}}},
    };
    for (std::size_t i = 0; i < configs.size(); ++i) {
        std::map<std::string, std::string> first;
        for (unsigned threads : {1u, 3u}) {
            json j = configs[i];
            j["seed"] = 77;
            j["threads"] = threads;
            const fs::path out = scratch("det" + std::to_string(i) + "_" + std::to_string(threads));
            j["output_dir"] = out.string();
            run(parse_ok(j));
            CHECK(verify_run(out).empty());
            const auto files = csv_files(out);
            CHECK_FALSE(files.empty());
            if (first.empty())
                first = files;
            else
                CHECK(files == first);
        }
    }
}

TEST_CASE("exit codes")
{
    const fs::path bad = write_config("bad.json", {{"experiment", "coverage-mc"}, {"seed", 1}, {"sinr", {{"beta", 0.5}}}});
    CHECK(invoke({"validate", bad.string()}) == kExitConfig);
    CHECK(invoke({"run", bad.string()}) == kExitConfig);
    CHECK(invoke({"run", (bad.parent_path() / "missing.json").string()}) == kExitConfig);
    CHECK(invoke({"no-such-command"}) == kExitConfig);

    const fs::path good = write_config("good.json", {{"experiment", "zeta"}, {"seed", 1}});
    CHECK(invoke({"validate", good.string()}) == kExitOk);
    const fs::path cli_out = scratch("cli_zeta");
    CHECK(invoke({"zeta", "--config", good.string(), "--out", cli_out.string(), "--threads", "1"}) == kExitOk);
    CHECK(fs::exists(cli_out / "zeta.csv"));
    CHECK(verify_run(cli_out).empty());

    const fs::path resource = write_config(
        "resource.json", {{"experiment", "zeta"}, {"seed", 1}, {"zeta", {{"rel_tol", 1e-16}}},
                          {"output_dir", scratch("resource_out").string()}});
    CHECK(invoke({"run", resource.string()}) == kExitResource);

    const fs::path numerical = write_config(
        "numerical.json",
        {{"experiment", "coverage-exact"}, {"seed", 1}, {"quad", {{"max_subdivisions", 1}, {"abs_tol", 1e-14}, {"rel_tol", 1e-14}}},
         {"sinr", {{"theta_grid", {1.0}}}},
         {"process", {{"kind", "perturbed-lattice"}, {"lattice", "triangular"}, {"sigma", 0.1}}},
         {"output_dir", scratch("numerical_out").string()}});
    CHECK(invoke({"run", numerical.string()}) == kExitNumerical);
}

TEST_CASE("Poisson coverage run reproduces the closed form")
{
    const fs::path out = scratch("poisson_cov");
    std::vector<double> grid;
    for (int k = 0; k <= 40; ++k) grid.push_back(0.5 * k);
    run(parse_ok({{"experiment", "coverage-mc"}, {"seed", 2024}, {"output_dir", out.string()},
                  {"sinr", {{"theta_grid", grid}}}}));
    const auto rows = csv_rows(out / "coverage.csv");
    REQUIRE(rows.size() == 42);
    CHECK(rows[0] == std::vector<std::string>{"theta", "estimate", "stderr"});
    CHECK(std::stod(rows[3][0]) == 1.0);
    const double est = std::stod(rows[3][1]), se = std::stod(rows[3][2]);
    CHECK(std::abs(est - 0.56010) < 3.0 * se);
}

TEST_CASE("zeta run uses a per-dimension default tolerance")
{
    const fs::path out = scratch("zeta3d");
    run(parse_ok({{"experiment", "zeta"}, {"seed", 1}, {"output_dir", out.string()},
                  {"zeta", {{"s", 6}, {"lattices", {"fcc", "bcc", "cubic"}}}}}));
    const auto rows = csv_rows(out / "zeta.csv");
    REQUIRE(rows.size() == 4);
    CHECK(std::stod(rows[1][3]) == doctest::Approx(7.22696).epsilon(1e-5));
    CHECK(std::stod(rows[1][3]) < std::stod(rows[2][3]));
    CHECK(std::stod(rows[2][3]) < std::stod(rows[3][3]));
    const json meta = json::parse(slurp(out / "zeta.meta.json"));
    CHECK(meta["rel_tol"] == json::array({1e-7, 1e-7, 1e-7}));
}

TEST_CASE("bundled example configurations validate")
{
    int n = 0;
    for (const auto& e : fs::directory_iterator(PLNET_CONFIG_DIR)) {
        if (e.path().extension() != ".json") continue;
        ++n;
        CAPTURE(e.path().string());
        CHECK(parse_config(load_json_file(e.path())).errors.empty());
    }
    CHECK(n >= 4);
}
