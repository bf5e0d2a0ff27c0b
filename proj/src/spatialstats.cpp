#include "plnet/spatialstats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "plnet/error.hpp"
#include "plnet/numerics.hpp"
#include "plnet/parallel.hpp"

namespace plnet {

namespace {

// Weighted mass per ECDF cell plus the number of contributing points.
struct Bins {
    std::vector<double> mass;
    std::size_t n = 0;

    void add(double r, double w)
    {
        const auto idx = static_cast<std::size_t>(std::floor(r / kEcdfResolution));
        if (idx >= mass.size()) mass.resize(idx + 1, 0.0);
        mass[idx] += w;
        ++n;
    }
    void merge(const Bins& o)
    {
        if (o.mass.size() > mass.size()) mass.resize(o.mass.size(), 0.0);
        for (std::size_t k = 0; k < o.mass.size(); ++k) mass[k] += o.mass[k];
        n += o.n;
    }
};

NndEstimate from_bins(const Bins& bins, double bin_width, std::string label)
{
    require(bin_width > 0.0, "bin_width must be positive");
    const auto per_bin = static_cast<std::size_t>(std::llround(bin_width / kEcdfResolution));
    require(per_bin >= 1 && std::abs(per_bin * kEcdfResolution - bin_width) < 1e-9,
            "bin_width must be a multiple of the ECDF resolution 1e-4");
    CompensatedSum total_sum;
    for (double m : bins.mass) total_sum += m;
    const double total = total_sum.value();
    if (bins.n == 0 || !(total > 0.0)) throw invalid_argument("nnd: no eligible points; enlarge the window");

    NndEstimate est;
    est.label = std::move(label);
    est.n_points_used = bins.n;
    const auto& counts = bins.mass;
    const std::size_t n_bins = (counts.size() + per_bin - 1) / per_bin;
    for (std::size_t b = 0; b <= n_bins; ++b) est.bin_edges.push_back(static_cast<double>(b * per_bin) * kEcdfResolution);
    for (std::size_t b = 0; b < n_bins; ++b) {
        CompensatedSum c;
        for (std::size_t i = b * per_bin; i < std::min(counts.size(), (b + 1) * per_bin); ++i) c += counts[i];
        est.density.push_back(c.value() / (total * bin_width));
    }
    CompensatedSum cum;
    for (std::size_t i = 0; i < counts.size(); ++i) {
        if (counts[i] == 0.0) continue;
        cum += counts[i];
        est.ecdf_support.push_back(static_cast<double>(i + 1) * kEcdfResolution);
        est.ecdf_values.push_back(std::min(1.0, cum.value() / total));
    }
    est.ecdf_values.back() = 1.0;
    return est;
}

}  // namespace

double NndEstimate::ecdf(double r) const
{
    const auto it = std::upper_bound(ecdf_support.begin(), ecdf_support.end(), r);
    if (it == ecdf_support.begin()) return 0.0;
    return ecdf_values[static_cast<std::size_t>(it - ecdf_support.begin()) - 1];
}

std::vector<double> nearest_neighbour_distances(const PointConfiguration& cfg)
{
    const std::size_t n = cfg.size();
    const int d = cfg.dim;
    std::vector<double> best(n, std::numeric_limits<double>::infinity());
    if (n < 2) return best;
    auto dist2 = [&](std::size_t i, std::size_t j) {
        double s = 0.0;
        for (int k = 0; k < d; ++k) {
            const double x = cfg.point(i)[k] - cfg.point(j)[k];
            s += x * x;
        }
        return s;
    };
    if (n <= 64 || d > 3) {
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                if (i != j) best[i] = std::min(best[i], dist2(i, j));
        for (auto& b : best) b = std::sqrt(b);
        return best;
    }

    std::vector<double> lo(d, std::numeric_limits<double>::infinity()), hi(d, -std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < n; ++i)
        for (int k = 0; k < d; ++k) {
            lo[k] = std::min(lo[k], cfg.point(i)[k]);
            hi[k] = std::max(hi[k], cfg.point(i)[k]);
        }
    double vol = 1.0;
    for (int k = 0; k < d; ++k) vol *= std::max(hi[k] - lo[k], 1e-12);
    const double cell = std::max(std::pow(2.0 * vol / static_cast<double>(n), 1.0 / d), 1e-12);
    std::vector<long long> dims(d);
    long long total = 1;
    for (int k = 0; k < d; ++k) {
        dims[k] = static_cast<long long>((hi[k] - lo[k]) / cell) + 1;
        total *= dims[k];
    }
    auto cell_of = [&](std::size_t i, int k) {
        return std::min(dims[k] - 1, static_cast<long long>((cfg.point(i)[k] - lo[k]) / cell));
    };
    std::vector<std::size_t> start(total + 1, 0), order(n);
    std::vector<long long> flat(n);
    for (std::size_t i = 0; i < n; ++i) {
        long long f = 0;
        for (int k = 0; k < d; ++k) f = f * dims[k] + cell_of(i, k);
        flat[i] = f;
        ++start[f + 1];
    }
    for (long long c = 0; c < total; ++c) start[c + 1] += start[c];
    {
        std::vector<std::size_t> fill(start.begin(), start.end() - 1);
        for (std::size_t i = 0; i < n; ++i) order[fill[flat[i]]++] = i;
    }

    std::vector<long long> home(d), off(d);
    for (std::size_t i = 0; i < n; ++i) {
        for (int k = 0; k < d; ++k) home[k] = cell_of(i, k);
        double b2 = std::numeric_limits<double>::infinity();
        for (long long ring = 0;; ++ring) {
            // Visit cells at Chebyshev distance exactly `ring` from home.
            std::fill(off.begin(), off.end(), -ring);
            bool any_inside = false;
            for (;;) {
                long long cheb = 0;
                for (int k = 0; k < d; ++k) cheb = std::max(cheb, std::abs(off[k]));
                if (cheb == ring) {
                    bool inside = true;
                    long long f = 0;
                    for (int k = 0; k < d; ++k) {
                        const long long c = home[k] + off[k];
                        if (c < 0 || c >= dims[k]) {
                            inside = false;
                            break;
                        }
                        f = f * dims[k] + c;
                    }
                    if (inside) {
                        any_inside = true;
                        for (std::size_t s = start[f]; s < start[f + 1]; ++s)
                            if (order[s] != i) b2 = std::min(b2, dist2(i, order[s]));
                    }
                }
                int k = d - 1;
                while (k >= 0 && off[k] == ring) {
                    off[k] = -ring;
                    --k;
                }
                if (k < 0) break;
                ++off[k];
            }
            const double reach = static_cast<double>(ring) * cell;
            if (b2 <= reach * reach) break;
            if (!any_inside && ring > 0) {
                bool beyond = true;
                for (int k = 0; k < d; ++k) beyond = beyond && (home[k] - ring < 0 && home[k] + ring >= dims[k]);
                if (beyond) break;
            }
        }
        best[i] = std::sqrt(b2);
    }
    return best;
}

std::vector<double> minus_sampled_nnd(const PointConfiguration& cfg)
{
    std::vector<double> out;
    for (const auto& [r, w] : weighted_minus_sampled_nnd(cfg)) out.push_back(r);
    return out;
}

std::vector<std::pair<double, double>> weighted_minus_sampled_nnd(const PointConfiguration& cfg)
{
    const auto nnd = nearest_neighbour_distances(cfg);
    const double R = cfg.window_radius;
    std::vector<std::pair<double, double>> out;
    for (std::size_t i = 0; i < cfg.size(); ++i) {
        const double to_boundary = R - std::sqrt(cfg.squared_modulus(i));
        if (std::isfinite(nnd[i]) && to_boundary > nnd[i])
            out.emplace_back(nnd[i], std::pow(R / (R - nnd[i]), cfg.dim));
    }
    return out;
}

NndEstimate nnd_from_distances(const std::vector<double>& distances, double bin_width, std::string label)
{
    Bins bins;
    for (double r : distances) bins.add(r, 1.0);
    return from_bins(bins, bin_width, std::move(label));
}

NndEstimate nnd_estimate(const PointSampler& sampler, std::size_t n_realizations, double bin_width,
                         const RngStream& rng, unsigned threads)
{
    require(n_realizations >= 1, "nnd: n_realizations must be >= 1");
    require(bin_width > 0.0, "nnd: bin_width must be positive");
    // Per-realization bins merged in index order, so the result does not depend on scheduling.
    std::vector<Bins> per(n_realizations);
    parallel_for(n_realizations, threads, [&](std::size_t i) {
        for (const auto& [r, w] : weighted_minus_sampled_nnd(sampler(rng.substream(i)))) per[i].add(r, w);
    });
    Bins total;
    for (const auto& b : per) total.merge(b);
    return from_bins(total, bin_width, sampler.label());
}

double ks_distance(const NndEstimate& a, const NndEstimate& b)
{
    std::vector<double> grid = a.ecdf_support;
    grid.insert(grid.end(), b.ecdf_support.begin(), b.ecdf_support.end());
    std::sort(grid.begin(), grid.end());
    double d = 0.0;
    for (double r : grid) d = std::max(d, std::abs(a.ecdf(r) - b.ecdf(r)));
    return d;
}

double ks_distance(const NndEstimate& a, const std::function<double(double)>& cdf)
{
    double d = 0.0, prev = 0.0;
    for (std::size_t i = 0; i < a.ecdf_support.size(); ++i) {
        const double r = a.ecdf_support[i];
        const double f = cdf(r);
        d = std::max({d, std::abs(a.ecdf_values[i] - f), std::abs(prev - cdf(r - kEcdfResolution))});
        prev = a.ecdf_values[i];
    }
    return d;
}

double poisson_nnd_cdf(double r, int dim)
{
    if (r <= 0.0) return 0.0;
    return -std::expm1(-ball_volume(dim, r));
}

}  // namespace plnet
