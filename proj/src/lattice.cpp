#include "plnet/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>

#include "plnet/error.hpp"
#include "plnet/numerics.hpp"

namespace plnet {

LatticeKind lattice_kind_from_string(std::string_view name)
{
    if (name == "triangular") return LatticeKind::triangular;
    if (name == "square") return LatticeKind::square;
    if (name == "cubic") return LatticeKind::cubic;
    if (name == "fcc") return LatticeKind::fcc;
    if (name == "bcc") return LatticeKind::bcc;
    if (name == "custom") return LatticeKind::custom;
    throw invalid_argument("unknown lattice kind '" + std::string(name) + "'");
}

std::string_view to_string(LatticeKind kind)
{
    switch (kind) {
    case LatticeKind::triangular: return "triangular";
    case LatticeKind::square: return "square";
    case LatticeKind::cubic: return "cubic";
    case LatticeKind::fcc: return "fcc";
    case LatticeKind::bcc: return "bcc";
    case LatticeKind::custom: return "custom";
    }
    return "custom";
}

Lattice make_lattice(LatticeKind kind, int dim, const std::optional<Eigen::MatrixXd>& basis_override)
{
    Lattice lat;
    lat.dim = dim;
    lat.name = std::string(to_string(kind));
    switch (kind) {
    case LatticeKind::triangular: {
        require(dim == 2, "triangular lattice requires dim = 2");
        const double c = std::sqrt(2.0 / std::sqrt(3.0));
        lat.basis.resize(2, 2);
        lat.basis << c, 0.5 * c, 0.0, 0.5 * std::sqrt(3.0) * c;
        break;
    }
    case LatticeKind::square:
        require(dim == 2, "square lattice requires dim = 2");
        lat.basis = Eigen::MatrixXd::Identity(2, 2);
        break;
    case LatticeKind::cubic:
        require(dim == 3, "cubic lattice requires dim = 3");
        lat.basis = Eigen::MatrixXd::Identity(3, 3);
        break;
    case LatticeKind::fcc: {
        require(dim == 3, "fcc lattice requires dim = 3");
        const double h = 0.5 * std::cbrt(4.0);  // cube side 4^{1/3} gives 4 points per unit volume cell
        lat.basis.resize(3, 3);
        lat.basis << 0, h, h, h, 0, h, h, h, 0;
        break;
    }
    case LatticeKind::bcc: {
        require(dim == 3, "bcc lattice requires dim = 3");
        const double h = 0.5 * std::cbrt(2.0);
        lat.basis.resize(3, 3);
        lat.basis << -h, h, h, h, -h, h, h, h, -h;
        break;
    }
    case LatticeKind::custom:
        require(basis_override.has_value(), "custom lattice requires a basis");
        require(basis_override->rows() == dim && basis_override->cols() == dim,
                "custom basis must be dim x dim");
        lat.basis = *basis_override;
        break;
    }
    require(dim >= 1, "lattice dimension must be positive");
    lat.covolume = std::abs(lat.basis.determinant());
    const double scale = std::pow(lat.basis.colwise().norm().prod(), 1.0 / dim);
    if (!(lat.covolume > 1e-12 * std::pow(scale, dim)) || !std::isfinite(lat.covolume))
        throw invalid_argument("lattice basis is singular");
    return lat;
}

double Lattice::shortest_vector() const
{
    const double r = basis.colwise().norm().minCoeff();
    double best = r;
    for_each_point(*this, r, true, kDefaultMaxPoints,
                   [&](auto, auto, double n2) { best = std::min(best, std::sqrt(n2)); });
    return best;
}

double Lattice::covering_radius_bound() const { return 0.5 * basis.colwise().norm().sum(); }

Lattice Lattice::scaled(double c) const
{
    require(c > 0.0, "lattice scale must be positive");
    Lattice out = *this;
    out.basis *= c;
    out.covolume = std::abs(out.basis.determinant());
    return out;
}

void for_each_point(const Lattice& lat, double radius, bool exclude_origin, std::size_t max_points,
                    const std::function<void(std::span<const std::int64_t>, std::span<const double>, double)>& visit)
{
    require(radius > 0.0, "enumeration radius must be positive");
    const int d = lat.dim;
    const double expected = std::pow(std::numbers::pi, 0.5 * d) * std::pow(radius, d) /
                            std::tgamma(0.5 * d + 1.0) / lat.covolume;
    if (expected > static_cast<double>(max_points))
        throw resource_limit("lattice enumeration would visit about " + std::to_string(static_cast<long long>(expected)) +
                             " points, above the cap of " + std::to_string(max_points) +
                             "; reduce the radius or raise the cap");

    // |c_i| <= |row_i(B^{-1})| * |p|.
    const Eigen::MatrixXd inv = lat.basis.inverse();
    std::vector<std::int64_t> bound(d), c(d);
    for (int i = 0; i < d; ++i) {
        bound[i] = static_cast<std::int64_t>(std::floor(inv.row(i).norm() * radius * (1.0 + 1e-12)));
        c[i] = -bound[i];
    }
    const double r2 = radius * radius;
    std::vector<double> p(d);
    for (;;) {
        double n2 = 0.0;
        bool origin = true;
        for (int r = 0; r < d; ++r) {
            double x = 0.0;
            for (int k = 0; k < d; ++k) x += lat.basis(r, k) * static_cast<double>(c[k]);
            p[r] = x;
            n2 += x * x;
        }
        for (int k = 0; k < d; ++k) origin = origin && c[k] == 0;
        if (n2 <= r2 && !(exclude_origin && origin)) visit(c, p, n2);

        int k = d - 1;
        while (k >= 0 && c[k] == bound[k]) {
            c[k] = -bound[k];
            --k;
        }
        if (k < 0) break;
        ++c[k];
    }
}

double ShellEnumeration::modulus(std::size_t i) const
{
    double n2 = 0.0;
    for (double x : point(i)) n2 += x * x;
    return std::sqrt(n2);
}

ShellEnumeration enumerate_points(const Lattice& lat, double radius, bool exclude_origin, std::size_t max_points)
{
    const int d = lat.dim;
    struct Item {
        double n2;
        std::vector<double> p;
        std::vector<std::int64_t> c;
    };
    std::vector<Item> items;
    for_each_point(lat, radius, exclude_origin, max_points, [&](auto c, auto p, double n2) {
        items.push_back({n2, {p.begin(), p.end()}, {c.begin(), c.end()}});
    });
    std::sort(items.begin(), items.end(), [](const Item& a, const Item& b) { return a.n2 < b.n2; });
    // Norms equal up to rounding form one shell; order each shell lexicographically.
    for (std::size_t lo = 0; lo < items.size();) {
        std::size_t hi = lo + 1;
        while (hi < items.size() && items[hi].n2 - items[lo].n2 <= 1e-12 * items[hi].n2) ++hi;
        std::sort(items.begin() + lo, items.begin() + hi, [](const Item& a, const Item& b) { return a.p < b.p; });
        lo = hi;
    }
    ShellEnumeration out;
    out.dim = d;
    out.radius = radius;
    out.coords.reserve(items.size() * d);
    out.coefficients.reserve(items.size() * d);
    for (const auto& it : items) {
        out.coords.insert(out.coords.end(), it.p.begin(), it.p.end());
        out.coefficients.insert(out.coefficients.end(), it.c.begin(), it.c.end());
    }
    return out;
}

std::vector<Shell> lattice_shells(const Lattice& lat, double radius, std::size_t max_points)
{
    std::vector<double> moduli;
    for_each_point(lat, radius, true, max_points, [&](auto, auto, double n2) { moduli.push_back(std::sqrt(n2)); });
    std::sort(moduli.begin(), moduli.end());
    std::vector<Shell> shells;
    for (double m : moduli) {
        if (!shells.empty() && m - shells.back().modulus <= 1e-9 * m)
            ++shells.back().multiplicity;
        else
            shells.push_back({m, 1});
    }
    return shells;
}

namespace {

double binomial(int n, int k) { return std::round(std::tgamma(n + 1.0) / (std::tgamma(k + 1.0) * std::tgamma(n - k + 1.0))); }

// Cell-comparison brackets for the sum over |v| > R:
//   lower = (1/V) int_{|x|>R+rho} (|x|+rho)^{-s} dx,
//   upper = (1/V) int_{|x|>R-rho} (|x|-rho)^{-s} dx   (needs R > 2 rho),
// where rho bounds the covering radius, so each Voronoi cell lies within rho of its site.
struct TailBracket {
    double lower, upper;
};

TailBracket tail_bracket(const Lattice& lat, double s, double R)
{
    const int d = lat.dim;
    const double rho = lat.covering_radius_bound();
    const double pref = sphere_surface(d) / lat.covolume;
    double lo = 0.0, up = 0.0;
    const double a = R + 2.0 * rho;
    const double b = R - 2.0 * rho;
    for (int k = 0; k <= d - 1; ++k) {
        const double c = binomial(d - 1, k);
        lo += c * std::pow(-rho, d - 1 - k) * std::pow(a, k - s + 1.0) / (s - k - 1.0);
        up += b > 0.0 ? c * std::pow(rho, d - 1 - k) * std::pow(b, k - s + 1.0) / (s - k - 1.0)
                      : std::numeric_limits<double>::infinity();
    }
    return {std::max(0.0, pref * lo), pref * up};
}

ZetaResult zeta_annulus(const Lattice& lat, double s, double r_inner, double rel_tol, double abs_tol,
                        std::size_t max_points)
{
    require(s > lat.dim, "Epstein zeta diverges for s <= dim");
    require(rel_tol > 0.0, "rel_tol must be positive");
    const double rho = lat.covering_radius_bound();
    const double r_in2 = r_inner * r_inner;

    auto partial = [&](double r_out, std::size_t& n) {
        CompensatedSum sum;
        n = 0;
        for_each_point(lat, r_out, true, max_points, [&](auto, auto, double n2) {
            if (n2 > r_in2) {
                sum += std::pow(n2, -0.5 * s);
                ++n;
            }
        });
        return sum.value();
    };

    // Pilot sum to get a lower bound on the answer, then the radius at which
    // the bracket width meets the tolerance.
    const double r1 = r_inner + 4.0 * rho + 1.0;
    std::size_t n1 = 0;
    const double lb = partial(r1, n1) + tail_bracket(lat, s, r1).lower;
    const double target = std::max(rel_tol * lb, abs_tol);
    auto width = [&](double r) {
        const auto b = tail_bracket(lat, s, r);
        return b.upper - b.lower;
    };
    double lo = r1, hi = r1;
    while (width(hi) > target) {
        lo = hi;
        hi *= 2.0;
        const double expected = std::pow(std::numbers::pi, 0.5 * lat.dim) * std::pow(hi, lat.dim) /
                                std::tgamma(0.5 * lat.dim + 1.0) / lat.covolume;
        if (expected > 64.0 * static_cast<double>(max_points))
            throw resource_limit("Epstein zeta: tolerance unreachable under the point-count cap");
    }
    if (hi > r1) {
        for (int it = 0; it < 60 && hi - lo > 1e-3 * hi; ++it) {
            const double mid = 0.5 * (lo + hi);
            (width(mid) > target ? lo : hi) = mid;
        }
    }
    ZetaResult res;
    res.radius = hi;
    const double sum = partial(hi, res.n_terms);
    const auto b = tail_bracket(lat, s, hi);
    res.value = sum + 0.5 * (b.lower + b.upper);
    res.error_bound = b.upper - b.lower;  // safety factor 2 on the half-width
    return res;
}

// Zeta sums are pure functions of (basis, s, inner radius, tolerance) and
// are requested repeatedly by the closed forms, so results are memoized.
ZetaResult cached_annulus(const Lattice& lat, double s, double r_inner, double rel_tol, double abs_tol,
                          std::size_t max_points)
{
    static std::mutex mutex;
    static std::map<std::vector<double>, ZetaResult> cache;
    std::vector<double> key(lat.basis.data(), lat.basis.data() + lat.basis.size());
    key.insert(key.end(), {static_cast<double>(lat.dim), s, r_inner, rel_tol, abs_tol, static_cast<double>(max_points)});
    {
        std::lock_guard lock(mutex);
        if (auto it = cache.find(key); it != cache.end()) return it->second;
    }
    const ZetaResult r = zeta_annulus(lat, s, r_inner, rel_tol, abs_tol, max_points);
    std::lock_guard lock(mutex);
    cache.emplace(std::move(key), r);
    return r;
}

}  // namespace

ZetaResult epstein_zeta_detailed(const Lattice& lat, double s, double rel_tol, std::size_t max_points)
{
    return cached_annulus(lat, s, 0.0, rel_tol, 0.0, max_points);
}

ZetaResult epstein_zeta_tail(const Lattice& lat, double s, double R, double rel_tol, double abs_tol,
                             std::size_t max_points)
{
    require(R >= 0.0, "tail radius must be nonnegative");
    require(abs_tol >= 0.0, "abs_tol must be nonnegative");
    return cached_annulus(lat, s, R, rel_tol, abs_tol, max_points);
}

double zeta_tail_integral(int dim, double s, double R)
{
    require(s > dim, "tail integral diverges for s <= dim");
    require(R > 0.0, "tail radius must be positive");
    return sphere_surface(dim) * std::pow(R, dim - s) / (s - dim);
}

double zeta_tail_integral(const Lattice& lat, double s, double R)
{
    return zeta_tail_integral(lat.dim, s, R) / lat.covolume;
}

}  // namespace plnet
