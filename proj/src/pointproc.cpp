#include "plnet/pointproc.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include <fmt/format.h>

#define lapack_complex_double std::complex<double>
#include <lapacke.h>

#include "plnet/error.hpp"

namespace plnet {

namespace {

constexpr std::uint64_t kShiftStream = 0xFFFF'FFFF'FFFF'FFFFULL;

void uniform_in_ball(RngEngine& eng, int dim, double R, std::vector<double>& out)
{
    double norm2 = 0.0;
    const std::size_t base = out.size();
    for (int k = 0; k < dim; ++k) {
        const double z = eng.normal();
        out.push_back(z);
        norm2 += z * z;
    }
    const double r = R * std::pow(eng.uniform(), 1.0 / dim) / std::sqrt(norm2);
    for (int k = 0; k < dim; ++k) out[base + k] *= r;
}

}  // namespace

double ball_volume(int dim, double R)
{
    require(dim >= 1, "ball_volume: dim must be positive");
    require(R >= 0.0, "ball_volume: radius must be nonnegative");
    return std::pow(std::numbers::pi, 0.5 * dim) * std::pow(R, dim) / std::tgamma(0.5 * dim + 1.0);
}

PointConfiguration sample_poisson(int dim, double window_radius, const RngStream& rng)
{
    require(dim >= 1, "sample_poisson: dim must be positive");
    require(window_radius > 0.0, "sample_poisson: window radius must be positive");
    PointConfiguration cfg;
    cfg.dim = dim;
    cfg.window_radius = window_radius;
    cfg.provenance = fmt::format("poisson(dim={},R={},seed={},stream={})", dim, window_radius,
                                 rng.master_seed, rng.stream_id);
    RngEngine eng(rng);
    std::poisson_distribution<long long> count(ball_volume(dim, window_radius));
    const long long n = count(eng);
    cfg.coords.reserve(static_cast<std::size_t>(n) * dim);
    for (long long i = 0; i < n; ++i) uniform_in_ball(eng, dim, window_radius, cfg.coords);
    return cfg;
}

RngStream site_stream(const RngStream& rng, std::span<const std::int64_t> site, std::uint64_t generation)
{
    std::uint64_t h = mix64(generation ^ 0x5851F42D4C957F2DULL);
    for (std::int64_t c : site) h = mix64(h ^ static_cast<std::uint64_t>(c));
    return rng.substream(h);
}

PointConfiguration sample_perturbed_lattice(const Lattice& lat, const PerturbationSpec& spec, double window_radius,
                                            const RngStream& rng, const SiteGenerations& generations)
{
    SamplerSpec s;
    s.kind = ProcessKind::perturbed_lattice;
    s.dim = lat.dim;
    s.window_radius = window_radius;
    s.lattice = lat;
    s.perturbation = spec;
    return PointSampler(s).draw(rng, generations);
}

PointConfiguration sample_ginibre_untrimmed(int n_eigen, const RngStream& rng)
{
    require(n_eigen >= 1, "sample_ginibre: n_eigen must be positive");
    const auto n = static_cast<lapack_int>(n_eigen);
    std::vector<std::complex<double>> a(static_cast<std::size_t>(n) * n);
    RngEngine eng(rng);
    const double s = std::sqrt(0.5);
    for (auto& z : a) {
        const double re = eng.normal();
        const double im = eng.normal();
        z = {s * re, s * im};
    }
    std::vector<std::complex<double>> w(n);
    const lapack_int info =
        LAPACKE_zgeev(LAPACK_COL_MAJOR, 'N', 'N', n, a.data(), n, w.data(), nullptr, 1, nullptr, 1);
    if (info != 0) throw numerical_failure(fmt::format("Ginibre eigensolver failed (info = {})", info));

    PointConfiguration cfg;
    cfg.dim = 2;
    cfg.window_radius = std::sqrt(n_eigen / std::numbers::pi);
    cfg.provenance = fmt::format("ginibre(n_eigen={},seed={},stream={})", n_eigen, rng.master_seed, rng.stream_id);
    const double scale = 1.0 / std::sqrt(std::numbers::pi);
    cfg.coords.reserve(2 * w.size());
    for (const auto& z : w) {
        cfg.coords.push_back(scale * z.real());
        cfg.coords.push_back(scale * z.imag());
    }
    return cfg;
}

PointConfiguration sample_ginibre(int n_eigen, const RngStream& rng, double edge)
{
    require(edge >= 0.0 && edge < 1.0, "sample_ginibre: edge fraction must lie in [0, 1)");
    PointConfiguration full = sample_ginibre_untrimmed(n_eigen, rng);
    PointConfiguration cfg;
    cfg.dim = 2;
    cfg.window_radius = (1.0 - edge) * full.window_radius;
    cfg.provenance = fmt::format("ginibre(n_eigen={},edge={},seed={},stream={})", n_eigen, edge, rng.master_seed,
                                 rng.stream_id);
    const double r2 = cfg.window_radius * cfg.window_radius;
    for (std::size_t i = 0; i < full.size(); ++i)
        if (full.squared_modulus(i) <= r2) cfg.coords.insert(cfg.coords.end(), full.point(i).begin(), full.point(i).end());
    return cfg;
}

PointConfiguration sample_ginibre_radial(double window_radius, const RngStream& rng)
{
    require(window_radius > 0.0, "sample_ginibre_radial: window radius must be positive");
    PointConfiguration cfg;
    cfg.dim = 2;
    cfg.window_radius = window_radius;
    cfg.provenance = fmt::format("ginibre-radial(R={},seed={},stream={})", window_radius, rng.master_seed, rng.stream_id);
    // Beyond K the chance that Gamma(k, 1) / pi falls inside the window is
    // below the sixth-sigma tail.
    const double m = std::numbers::pi * window_radius * window_radius;
    const long long K = static_cast<long long>(std::ceil(m + 6.0 * std::sqrt(m) + 10.0));
    const double r2 = window_radius * window_radius;
    RngEngine eng(rng);
    for (long long k = 1; k <= K; ++k) {
        std::gamma_distribution<double> gamma(static_cast<double>(k), 1.0);
        const double g = gamma(eng) / std::numbers::pi;
        const double phi = 2.0 * std::numbers::pi * eng.uniform();
        if (g <= r2) {
            const double r = std::sqrt(g);
            cfg.coords.push_back(r * std::cos(phi));
            cfg.coords.push_back(r * std::sin(phi));
        }
    }
    return cfg;
}

ProcessKind process_kind_from_string(std::string_view name)
{
    if (name == "poisson") return ProcessKind::poisson;
    if (name == "perturbed-lattice") return ProcessKind::perturbed_lattice;
    if (name == "ginibre") return ProcessKind::ginibre;
    if (name == "ginibre-radial") return ProcessKind::ginibre_radial;
    throw invalid_argument("unknown process kind '" + std::string(name) + "'");
}

std::string_view to_string(ProcessKind kind)
{
    switch (kind) {
    case ProcessKind::poisson: return "poisson";
    case ProcessKind::perturbed_lattice: return "perturbed-lattice";
    case ProcessKind::ginibre: return "ginibre";
    case ProcessKind::ginibre_radial: return "ginibre-radial";
    }
    return "poisson";
}

PointSampler::PointSampler(SamplerSpec spec) : spec_(std::move(spec))
{
    switch (spec_.kind) {
    case ProcessKind::poisson:
        require(spec_.window_radius > 0.0, "window radius must be positive");
        require(spec_.dim >= 1, "dim must be positive");
        break;
    case ProcessKind::perturbed_lattice: {
        require(spec_.window_radius > 0.0, "window radius must be positive");
        require(spec_.perturbation.sigma >= 0.0, "sigma must be nonnegative");
        require(spec_.lattice.dim >= 1, "perturbed lattice needs a lattice");
        spec_.dim = spec_.lattice.dim;
        margin_ = 6.0 * spec_.perturbation.sigma + spec_.lattice.shortest_vector();
        if (spec_.perturbation.apply_uniform_shift) margin_ += 2.0 * spec_.lattice.covering_radius_bound();
        sites_ = enumerate_points(spec_.lattice, spec_.window_radius + margin_, false);
        break;
    }
    case ProcessKind::ginibre:
        require(spec_.n_eigen >= 1, "n_eigen must be positive");
        require(spec_.edge >= 0.0 && spec_.edge < 1.0, "edge fraction must lie in [0, 1)");
        spec_.dim = 2;
        break;
    case ProcessKind::ginibre_radial:
        require(spec_.window_radius > 0.0, "window radius must be positive");
        spec_.dim = 2;
        break;
    }
}

double PointSampler::window_radius() const
{
    if (spec_.kind == ProcessKind::ginibre)
        return (1.0 - spec_.edge) * std::sqrt(spec_.n_eigen / std::numbers::pi);
    return spec_.window_radius;
}

std::string PointSampler::label() const
{
    switch (spec_.kind) {
    case ProcessKind::perturbed_lattice:
        return fmt::format("perturbed-{}(sigma={})", spec_.lattice.name, spec_.perturbation.sigma);
    case ProcessKind::ginibre: return fmt::format("ginibre(n_eigen={})", spec_.n_eigen);
    default: return std::string(to_string(spec_.kind));
    }
}

PointConfiguration PointSampler::operator()(const RngStream& rng) const
{
    switch (spec_.kind) {
    case ProcessKind::poisson: return sample_poisson(spec_.dim, spec_.window_radius, rng);
    case ProcessKind::ginibre: return sample_ginibre(spec_.n_eigen, rng, spec_.edge);
    case ProcessKind::ginibre_radial: return sample_ginibre_radial(spec_.window_radius, rng);
    case ProcessKind::perturbed_lattice: break;
    }
    return draw(rng, {});
}

PointConfiguration PointSampler::draw(const RngStream& rng, const SiteGenerations& generations) const
{
    if (spec_.kind != ProcessKind::perturbed_lattice) {
        require(generations.empty(), "site generations apply to perturbed lattices only");
        return (*this)(rng);
    }
    const int d = spec_.dim;
    const Lattice& lat = spec_.lattice;
    const double sigma = spec_.perturbation.sigma;
    PointConfiguration cfg;
    cfg.dim = d;
    cfg.window_radius = spec_.window_radius;
    cfg.intensity = 1.0 / lat.covolume;
    cfg.provenance = fmt::format("perturbed-{}(sigma={},R={},shift={},seed={},stream={})", lat.name, sigma,
                                 spec_.window_radius, spec_.perturbation.apply_uniform_shift, rng.master_seed,
                                 rng.stream_id);
    std::vector<double> shift(d, 0.0);
    if (spec_.perturbation.apply_uniform_shift) {
        RngEngine eng(rng.substream(kShiftStream));
        std::vector<double> u(d);
        for (double& x : u) x = eng.uniform();
        for (int r = 0; r < d; ++r)
            for (int k = 0; k < d; ++k) shift[r] += lat.basis(r, k) * u[k];
    }
    const double r2 = spec_.window_radius * spec_.window_radius;
    std::vector<double> p(d);
    std::vector<std::int64_t> key;
    cfg.coords.reserve(sites_.coords.size());
    for (std::size_t i = 0; i < sites_.size(); ++i) {
        const auto site = sites_.point(i);
        double n2 = 0.0;
        if (sigma > 0.0) {
            std::uint64_t generation = 0;
            if (!generations.empty()) {
                key.assign(sites_.coeff(i).begin(), sites_.coeff(i).end());
                const auto it = generations.find(key);
                if (it != generations.end()) generation = it->second;
            }
            RngEngine eng(site_stream(rng, sites_.coeff(i), generation));
            for (int k = 0; k < d; ++k) {
                p[k] = site[k] + shift[k] + sigma * eng.normal();
                n2 += p[k] * p[k];
            }
        } else {
            for (int k = 0; k < d; ++k) {
                p[k] = site[k] + shift[k];
                n2 += p[k] * p[k];
            }
        }
        if (n2 <= r2) cfg.coords.insert(cfg.coords.end(), p.begin(), p.end());
    }
    return cfg;
}

}  // namespace plnet
