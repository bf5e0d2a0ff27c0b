#pragma once

// Point-process samplers at unit intensity in a ball window centred at the
// origin: Poisson, Gaussian-perturbed lattices and Ginibre eigenvalues.

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "plnet/lattice.hpp"
#include "plnet/rng.hpp"

namespace plnet {

struct PointConfiguration {
    int dim = 0;
    std::vector<double> coords;  // row-major, dim per point
    double window_radius = 0.0;
    double intensity = 1.0;
    std::string provenance;

    std::size_t size() const { return dim == 0 ? 0 : coords.size() / dim; }
    bool empty() const { return coords.empty(); }
    std::span<const double> point(std::size_t i) const
    {
        return {coords.data() + i * dim, static_cast<std::size_t>(dim)};
    }
    double squared_modulus(std::size_t i) const
    {
        double s = 0.0;
        for (double x : point(i)) s += x * x;
        return s;
    }
};

enum class PerturbationLaw { gaussian };

struct PerturbationSpec {
    double sigma = 0.0;
    PerturbationLaw law = PerturbationLaw::gaussian;
    bool apply_uniform_shift = false;
};

/// pi^{d/2} R^d / Gamma(d/2 + 1).
double ball_volume(int dim, double R);

PointConfiguration sample_poisson(int dim, double window_radius, const RngStream& rng);

/// Lattice site (integer coordinates) -> perturbation generation. Sites not
/// listed use generation 0; bumping a site's generation redraws only its offset.
using SiteGenerations = std::map<std::vector<std::int64_t>, std::uint64_t>;

PointConfiguration sample_perturbed_lattice(const Lattice& lat, const PerturbationSpec& spec,
                                            double window_radius, const RngStream& rng,
                                            const SiteGenerations& generations = {});

/// Stream that drives the offset of one lattice site.
RngStream site_stream(const RngStream& rng, std::span<const std::int64_t> site, std::uint64_t generation);

inline constexpr double kDefaultGinibreEdge = 0.15;

/// All n_eigen eigenvalues of a standard complex Gaussian matrix, scaled by
/// 1/sqrt(pi); window_radius is the support radius sqrt(n/pi).
PointConfiguration sample_ginibre_untrimmed(int n_eigen, const RngStream& rng);

/// As above, trimmed to (1 - edge) sqrt(n/pi).
PointConfiguration sample_ginibre(int n_eigen, const RngStream& rng, double edge = kDefaultGinibreEdge);

/// Infinite Ginibre process in a disk through its radial law: squared moduli
/// are independent Gamma(k, 1)/pi, k = 1, 2, ...; angles are drawn uniform,
/// so only statistics of the moduli (such as the coverage function at the
/// origin) are exact.
PointConfiguration sample_ginibre_radial(double window_radius, const RngStream& rng);

enum class ProcessKind { poisson, perturbed_lattice, ginibre, ginibre_radial };

ProcessKind process_kind_from_string(std::string_view name);
std::string_view to_string(ProcessKind kind);

struct SamplerSpec {
    ProcessKind kind = ProcessKind::poisson;
    int dim = 2;
    double window_radius = 30.0;  // ignored by the eigenvalue Ginibre sampler
    Lattice lattice;              // perturbed_lattice only
    PerturbationSpec perturbation;
    int n_eigen = 500;            // ginibre only
    double edge = kDefaultGinibreEdge;
};

/// Precomputes what can be shared across draws (lattice sites in the window).
class PointSampler {
public:
    explicit PointSampler(SamplerSpec spec);

    PointConfiguration operator()(const RngStream& rng) const;

    /// Perturbed lattices only: draw with per-site generation overrides.
    PointConfiguration draw(const RngStream& rng, const SiteGenerations& generations) const;

    const SamplerSpec& spec() const { return spec_; }
    double window_radius() const;
    std::string label() const;

private:
    SamplerSpec spec_;
    ShellEnumeration sites_;
    double margin_ = 0.0;
};

}  // namespace plnet
