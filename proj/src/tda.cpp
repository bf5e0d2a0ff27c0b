#include "plnet/tda.hpp"

#include <algorithm>
#include <array>
#include <iterator>
#include <memory>
#include <cmath>
#include <numbers>
#include <numeric>

#include <Eigen/Dense>

#include "plnet/error.hpp"
#include "plnet/numerics.hpp"
#include "plnet/parallel.hpp"

namespace plnet {

void FiltrationParams::validate() const
{
    require(max_radius > 0.0, "tda.max_radius must be positive");
    require(max_degree >= 1 && max_degree <= 2, "tda.max_degree must be 1 or 2");
    require(max_simplices >= 1, "tda.max_simplices must be positive");
}

namespace {

struct Edge {
    double value;
    int u, v;  // u < v
};

struct Triangle {
    double value;
    int a, b, c;  // a < b < c
    std::array<int, 3> edges;
};

double half_distance(std::span<const double> p, std::span<const double> q)
{
    double s = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k) {
        const double d = p[k] - q[k];
        s += d * d;
    }
    return 0.5 * std::sqrt(s);
}

int find_root(std::vector<int>& parent, int x)
{
    while (parent[x] != x) {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    return x;
}

void sort_pairs(PersistenceDiagram& pd) { std::sort(pd.pairs.begin(), pd.pairs.end()); }

}  // namespace

std::vector<PersistenceDiagram> rips_persistence(const PointConfiguration& cfg, const FiltrationParams& fp)
{
    fp.validate();
    require(!cfg.empty(), "rips_persistence: empty configuration");
    const int n = static_cast<int>(cfg.size());

    std::vector<Edge> edges;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            const double v = half_distance(cfg.point(i), cfg.point(j));
            if (v <= fp.max_radius) edges.push_back({v, i, j});
        }
    if (edges.size() + static_cast<std::size_t>(n) > fp.max_simplices)
        throw resource_limit("rips_persistence: simplex cap exceeded; lower max_radius or use fewer points");
    std::sort(edges.begin(), edges.end(), [](const Edge& x, const Edge& y) {
        if (x.value != y.value) return x.value < y.value;
        if (x.u != y.u) return x.u < y.u;
        return x.v < y.v;
    });

    std::vector<PersistenceDiagram> out;
    PersistenceDiagram h0{0, {}, cfg.provenance};
    std::vector<int> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    std::vector<char> positive(edges.size(), 0);
    int components = n;
    for (std::size_t e = 0; e < edges.size(); ++e) {
        const int ru = find_root(parent, edges[e].u);
        const int rv = find_root(parent, edges[e].v);
        if (ru == rv) {
            positive[e] = 1;
            continue;
        }
        // Elder rule: the component whose oldest vertex comes later in the order dies.
        parent[std::max(ru, rv)] = std::min(ru, rv);
        --components;
        if (edges[e].value > 0.0) h0.pairs.emplace_back(0.0, edges[e].value);
    }
    for (int c = 0; c < components; ++c) h0.pairs.emplace_back(0.0, kInfinity);
    sort_pairs(h0);
    out.push_back(std::move(h0));
    if (fp.max_degree < 2) return out;

    // Edge index lookup for triangle boundaries.
    std::vector<int> edge_index(static_cast<std::size_t>(n) * n, -1);
    std::vector<std::vector<int>> nbr(n);
    for (std::size_t e = 0; e < edges.size(); ++e) {
        edge_index[static_cast<std::size_t>(edges[e].u) * n + edges[e].v] = static_cast<int>(e);
        nbr[edges[e].u].push_back(edges[e].v);
    }
    for (auto& l : nbr) std::sort(l.begin(), l.end());

    std::vector<Triangle> tris;
    for (int a = 0; a < n; ++a)
        for (std::size_t ib = 0; ib < nbr[a].size(); ++ib) {
            const int b = nbr[a][ib];
            const int eab = edge_index[static_cast<std::size_t>(a) * n + b];
            for (std::size_t ic = ib + 1; ic < nbr[a].size(); ++ic) {
                const int c = nbr[a][ic];
                const int ebc = edge_index[static_cast<std::size_t>(b) * n + c];
                if (ebc < 0) continue;
                const int eac = edge_index[static_cast<std::size_t>(a) * n + c];
                const double v = std::max({edges[eab].value, edges[eac].value, edges[ebc].value});
                std::array<int, 3> es{eab, eac, ebc};
                std::sort(es.begin(), es.end());
                tris.push_back({v, a, b, c, es});
                if (tris.size() + edges.size() + static_cast<std::size_t>(n) > fp.max_simplices)
                    throw resource_limit("rips_persistence: simplex cap exceeded; lower max_radius or use fewer points");
            }
        }
    std::sort(tris.begin(), tris.end(), [](const Triangle& x, const Triangle& y) {
        if (x.value != y.value) return x.value < y.value;
        if (x.a != y.a) return x.a < y.a;
        if (x.b != y.b) return x.b < y.b;
        return x.c < y.c;
    });

    // Column reduction of the triangle boundaries; rows are edges in filtration order.
    PersistenceDiagram h1{1, {}, cfg.provenance};
    std::vector<int> pivot_owner(edges.size(), -1);
    std::vector<std::vector<int>> columns(tris.size());
    std::vector<char> paired(edges.size(), 0);
    std::vector<int> merged;
    for (std::size_t t = 0; t < tris.size(); ++t) {
        std::vector<int> col(tris[t].edges.begin(), tris[t].edges.end());
        while (!col.empty()) {
            const int piv = col.back();
            const int owner = pivot_owner[piv];
            if (owner < 0) break;
            const auto& other = columns[owner];
            merged.clear();
            std::set_symmetric_difference(col.begin(), col.end(), other.begin(), other.end(),
                                          std::back_inserter(merged));
            col.swap(merged);
        }
        if (col.empty()) continue;
        const int piv = col.back();
        pivot_owner[piv] = static_cast<int>(t);
        paired[piv] = 1;
        if (tris[t].value > edges[piv].value) h1.pairs.emplace_back(edges[piv].value, tris[t].value);
        columns[t] = std::move(col);
    }
    for (std::size_t e = 0; e < edges.size(); ++e)
        if (positive[e] && !paired[e]) h1.pairs.emplace_back(edges[e].value, kInfinity);
    sort_pairs(h1);
    out.push_back(std::move(h1));
    return out;
}

double pd_smooth_tv(const PersistenceDiagram& a, const PersistenceDiagram& b, double kernel_sd, double diagonal_cut,
                    double grid_step)
{
    require(a.degree == b.degree, "pd_smooth_tv: diagrams must have the same degree");
    require(kernel_sd > 0.0, "pd_smooth_tv: kernel_sd must be positive");
    require(diagonal_cut >= 0.0, "pd_smooth_tv: diagonal_cut must be nonnegative");
    require(grid_step > 0.0, "pd_smooth_tv: grid_step must be positive");
    auto atoms = [&](const PersistenceDiagram& pd) {
        std::vector<std::pair<double, double>> out;
        for (const auto& [bi, de] : pd.pairs)
            if (std::isfinite(de) && de - bi >= diagonal_cut) out.emplace_back(bi, de);
        return out;
    };
    const auto xa = atoms(a);
    const auto xb = atoms(b);
    if (xa.empty() && xb.empty()) return 0.0;
    if (xa.empty() || xb.empty()) throw invalid_argument("pd_smooth_tv: exactly one diagram is empty after the cut");

    double bmin = kInfinity, bmax = -kInfinity, dmin = kInfinity, dmax = -kInfinity;
    for (const auto* set : {&xa, &xb})
        for (const auto& [bi, de] : *set) {
            bmin = std::min(bmin, bi);
            bmax = std::max(bmax, bi);
            dmin = std::min(dmin, de);
            dmax = std::max(dmax, de);
        }
    const double pad = 4.0 * kernel_sd;
    const int nx = static_cast<int>(std::ceil((bmax - bmin + 2.0 * pad) / grid_step));
    const int ny = static_cast<int>(std::ceil((dmax - dmin + 2.0 * pad) / grid_step));
    const double x0 = bmin - pad, y0 = dmin - pad;
    if (static_cast<double>(nx) * ny > 1e8) throw resource_limit("pd_smooth_tv: grid too large; increase grid_step");

    // Gaussian profile at cell midpoints along one axis, scaled by the cell width.
    auto axis = [&](double centre, double origin, int count) {
        Eigen::VectorXd v(count);
        const double norm = grid_step / (kernel_sd * std::sqrt(2.0 * std::numbers::pi));
        for (int i = 0; i < count; ++i) {
            const double z = (origin + (i + 0.5) * grid_step - centre) / kernel_sd;
            v[i] = norm * std::exp(-0.5 * z * z);
        }
        return v;
    };
    auto density = [&](const std::vector<std::pair<double, double>>& set) {
        Eigen::MatrixXd gx(set.size(), nx), gy(set.size(), ny);
        for (std::size_t i = 0; i < set.size(); ++i) {
            gx.row(i) = axis(set[i].first, x0, nx).transpose();
            gy.row(i) = axis(set[i].second, y0, ny).transpose();
        }
        Eigen::MatrixXd m = gx.transpose() * gy;
        m /= static_cast<double>(set.size());
        return m;
    };
    const Eigen::MatrixXd diff = density(xa) - density(xb);
    return diff.cwiseAbs().sum();
}

double pd_nearest_point_distance(const PersistenceDiagram& a, const PersistenceDiagram& b)
{
    auto finite = [](const PersistenceDiagram& pd) {
        std::vector<std::pair<double, double>> out;
        for (const auto& p : pd.pairs)
            if (std::isfinite(p.second)) out.push_back(p);
        return out;
    };
    const auto xa = finite(a);
    const auto xb = finite(b);
    if (xa.empty() || xb.empty()) throw invalid_argument("pd_nearest_point_distance: empty diagram");
    auto one_way = [](const auto& from, const auto& to) {
        CompensatedSum sum;
        for (const auto& p : from) {
            double best = kInfinity;
            for (const auto& q : to) best = std::min(best, std::hypot(p.first - q.first, p.second - q.second));
            sum += best;
        }
        return sum.value();
    };
    return one_way(xa, xb) + one_way(xb, xa);
}

PdMetric pd_metric_from_string(std::string_view name)
{
    if (name == "tv") return PdMetric::tv;
    if (name == "nearest") return PdMetric::nearest;
    throw invalid_argument("unknown PD metric '" + std::string(name) + "'");
}

std::string_view to_string(PdMetric m) { return m == PdMetric::tv ? "tv" : "nearest"; }

std::vector<std::vector<PdSweepRow>> pd_distance_sweep_metrics(const Lattice& lat, const std::vector<double>& sigma_grid,
                                                               std::size_t n_samples, const FiltrationParams& fp,
                                                               const std::vector<PdMetric>& metrics,
                                                               const RngStream& rng, const PdSweepOptions& opt)
{
    require(!sigma_grid.empty(), "pd sweep: sigma grid must be nonempty");
    require(n_samples >= 2, "pd sweep: need at least two samples per sigma");
    require(!metrics.empty(), "pd sweep: no metric requested");
    require(lat.dim == 2, "pd sweep: Ginibre comparison needs a planar lattice");
    require(opt.degree >= 0 && opt.degree < fp.max_degree, "pd sweep: degree not computed under max_degree");
    fp.validate();

    const RngStream gin_root = rng.substream(0x47494E);
    const RngStream ptl_root = rng.substream(0x50544C);
    std::vector<PersistenceDiagram> gin(n_samples);
    double window = 0.0;
    parallel_for(n_samples, opt.threads, [&](std::size_t i) {
        const auto cfg = sample_ginibre(opt.n_eigen, gin_root.substream(i), opt.edge);
        gin[i] = rips_persistence(cfg, fp)[opt.degree];
    });
    window = (1.0 - opt.edge) * std::sqrt(opt.n_eigen / std::numbers::pi);

    const std::size_t ns = sigma_grid.size();
    std::vector<std::unique_ptr<PointSampler>> samplers;
    for (double s : sigma_grid) {
        SamplerSpec spec;
        spec.kind = ProcessKind::perturbed_lattice;
        spec.lattice = lat;
        spec.perturbation.sigma = s;
        spec.window_radius = window;
        samplers.push_back(std::make_unique<PointSampler>(spec));
    }
    const std::size_t nm = metrics.size();
    std::vector<double> dist(ns * n_samples * nm);
    parallel_for(ns * n_samples, opt.threads, [&](std::size_t task) {
        const std::size_t si = task / n_samples, i = task % n_samples;
        const auto cfg = (*samplers[si])(ptl_root.substream(i));
        const PersistenceDiagram pd = rips_persistence(cfg, fp)[opt.degree];
        for (std::size_t m = 0; m < nm; ++m)
            dist[task * nm + m] = metrics[m] == PdMetric::tv
                                      ? pd_smooth_tv(pd, gin[i], opt.kernel_sd, opt.diagonal_cut, opt.grid_step)
                                      : pd_nearest_point_distance(pd, gin[i]);
    });

    std::vector<std::vector<PdSweepRow>> tables(nm);
    const double n = static_cast<double>(n_samples);
    for (std::size_t m = 0; m < nm; ++m)
        for (std::size_t si = 0; si < ns; ++si) {
            CompensatedSum sum;
            for (std::size_t i = 0; i < n_samples; ++i) sum += dist[(si * n_samples + i) * nm + m];
            const double mean = sum.value() / n;
            CompensatedSum ss;
            for (std::size_t i = 0; i < n_samples; ++i) {
                const double d = dist[(si * n_samples + i) * nm + m] - mean;
                ss += d * d;
            }
            tables[m].push_back({sigma_grid[si], mean, std::sqrt(ss.value() / (n - 1.0) / n), metrics[m], n_samples});
        }
    return tables;
}

std::vector<PdSweepRow> pd_distance_sweep(const Lattice& lat, const std::vector<double>& sigma_grid,
                                          std::size_t n_samples, const FiltrationParams& fp, PdMetric metric,
                                          const RngStream& rng, const PdSweepOptions& opt)
{
    return pd_distance_sweep_metrics(lat, sigma_grid, n_samples, fp, {metric}, rng, opt)[0];
}

}  // namespace plnet
