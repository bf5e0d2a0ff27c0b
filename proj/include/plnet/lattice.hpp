#pragma once

// Lattices in R^d, canonical unit-density constructions, point enumeration
// and Epstein zeta sums with rigorous tail bounds.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace plnet {

enum class LatticeKind { triangular, square, cubic, fcc, bcc, custom };

LatticeKind lattice_kind_from_string(std::string_view name);
std::string_view to_string(LatticeKind kind);

/// Generators are the columns of `basis`.
struct Lattice {
    int dim = 0;
    Eigen::MatrixXd basis;
    double covolume = 0.0;
    std::string name;

    /// Length of a shortest nonzero vector.
    double shortest_vector() const;

    /// Upper bound on the covering radius: half the sum of generator lengths.
    double covering_radius_bound() const;

    /// The lattice c * Lambda (covolume scales by c^d).
    Lattice scaled(double c) const;
};

Lattice make_lattice(LatticeKind kind, int dim,
                     const std::optional<Eigen::MatrixXd>& basis_override = std::nullopt);

inline constexpr std::size_t kDefaultMaxPoints = 50'000'000;

struct ShellEnumeration {
    int dim = 0;
    double radius = 0.0;
    std::vector<double> coords;               // row-major, dim per point
    std::vector<std::int64_t> coefficients;   // integer coordinates, dim per point

    std::size_t size() const { return dim == 0 ? 0 : coords.size() / dim; }
    std::span<const double> point(std::size_t i) const { return {coords.data() + i * dim, static_cast<std::size_t>(dim)}; }
    std::span<const std::int64_t> coeff(std::size_t i) const
    {
        return {coefficients.data() + i * dim, static_cast<std::size_t>(dim)};
    }
    double modulus(std::size_t i) const;
};

/// All lattice points with |p| <= radius, sorted by (|p|, lexicographic coordinates).
ShellEnumeration enumerate_points(const Lattice& lat, double radius, bool exclude_origin,
                                  std::size_t max_points = kDefaultMaxPoints);

/// Visits every lattice point with |p| <= radius (in integer-box order) as
/// (coefficients, point, squared norm). Cheaper than enumerate_points when
/// nothing needs to be stored or sorted.
void for_each_point(const Lattice& lat, double radius, bool exclude_origin, std::size_t max_points,
                    const std::function<void(std::span<const std::int64_t>, std::span<const double>, double)>& visit);

/// Distinct moduli of nonzero lattice vectors up to radius with their multiplicities.
struct Shell {
    double modulus;
    int multiplicity;
};
std::vector<Shell> lattice_shells(const Lattice& lat, double radius, std::size_t max_points = kDefaultMaxPoints);

struct ZetaResult {
    double value = 0.0;
    double error_bound = 0.0;  // guaranteed absolute error
    double radius = 0.0;       // summation radius actually used
    std::size_t n_terms = 0;
};

/// Epstein zeta sum over nonzero lattice vectors of |v|^{-s}, with relative error <= rel_tol.
ZetaResult epstein_zeta_detailed(const Lattice& lat, double s, double rel_tol,
                                 std::size_t max_points = kDefaultMaxPoints);

/// Relative tolerance the closed forms use: direct summation converges as
/// R^{d-s}, so three-dimensional sums get a looser target.
inline double default_zeta_rel_tol(int dim) { return dim <= 2 ? 1e-10 : 1e-7; }

inline double epstein_zeta(const Lattice& lat, double s, double rel_tol = 1e-10)
{
    return epstein_zeta_detailed(lat, s, rel_tol).value;
}

/// Sum of |v|^{-s} over lattice vectors with |v| > R, with the same rigorous bracketing.
/// Stops once the error is below max(rel_tol * value, abs_tol).
ZetaResult epstein_zeta_tail(const Lattice& lat, double s, double R, double rel_tol = 1e-8, double abs_tol = 0.0,
                             std::size_t max_points = kDefaultMaxPoints);

/// Continuum tail surf(S^{d-1}) R^{d-s} / (s-d), scaled by the lattice density 1/covolume.
double zeta_tail_integral(const Lattice& lat, double s, double R);

/// Same for a unit-intensity process in dimension `dim`.
double zeta_tail_integral(int dim, double s, double R);

}  // namespace plnet
