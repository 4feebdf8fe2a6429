#pragma once

// Problem instance: elastic constants, densities, contrast, inclusion
// geometry and Brillouin-zone sampling.

#include "phonon/types.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

namespace phonon {

/// Isotropic inclusion material (tensor C1) with the matrix phase scaled by
/// the contrast: lambda2 = k lambda1, mu2 = k mu1.
struct Material {
    double lambda1 = 1.0;
    double mu1 = 1.0;
    double contrast_k = 1.0;
    double rho1 = 1.0;
    double rho2 = 1.0;

    /// Accumulation constant of the quasi-periodic Neumann-Poincare spectrum.
    [[nodiscard]] double k0() const { return -mu1 / (2.0 * (2.0 * mu1 + lambda1)); }
    [[nodiscard]] double rho_sup() const { return std::max(rho1, rho2); }
};

struct Sphere {
    Vec3 center{0.5, 0.5, 0.5};
    double radius = 0.2;
};

/// Union of axis-aligned voxels of a uniform res[0] x res[1] x res[2]
/// partition of the unit cell; occupancy is indexed (i * res[1] + j) * res[2] + l.
struct VoxelSet {
    std::array<int, 3> resolution{0, 0, 0};
    std::vector<std::uint8_t> occupied;

    [[nodiscard]] bool at(int i, int j, int l) const {
        return occupied[(static_cast<std::size_t>(i) * resolution[1] + j) * resolution[2] + l] != 0;
    }
    [[nodiscard]] std::size_t count() const {
        return static_cast<std::size_t>(std::count_if(occupied.begin(), occupied.end(),
                                                      [](std::uint8_t v) { return v != 0; }));
    }
    [[nodiscard]] double volume() const {
        return static_cast<double>(count()) /
               (static_cast<double>(resolution[0]) * resolution[1] * resolution[2]);
    }
};

struct InclusionGeometry {
    std::variant<Sphere, VoxelSet> shape = Sphere{};
    double buffer_ratio_q = 0.5;
    double theta = 0.5;

    [[nodiscard]] bool is_sphere() const { return std::holds_alternative<Sphere>(shape); }
    [[nodiscard]] const Sphere& sphere() const { return std::get<Sphere>(shape); }
    [[nodiscard]] const VoxelSet& voxels() const { return std::get<VoxelSet>(shape); }

    /// Exact volume |D|.
    [[nodiscard]] double volume() const {
        if (is_sphere()) {
            const double a = sphere().radius;
            return 4.0 / 3.0 * pi * a * a * a;
        }
        return voxels().volume();
    }

    /// Indicator of D at a point of the unit cell (point taken modulo 1).
    [[nodiscard]] bool contains(const Vec3& x) const {
        Vec3 y;
        for (int d = 0; d < 3; ++d) y[d] = x[d] - std::floor(x[d]);
        if (is_sphere()) {
            const Sphere& s = sphere();
            Vec3 r = y - s.center;
            for (int d = 0; d < 3; ++d) r[d] -= std::round(r[d]);
            return r.squaredNorm() < s.radius * s.radius;
        }
        const VoxelSet& v = voxels();
        std::array<int, 3> idx{};
        for (int d = 0; d < 3; ++d)
            idx[d] = std::clamp(static_cast<int>(std::floor(y[d] * v.resolution[d])), 0, v.resolution[d] - 1);
        return v.at(idx[0], idx[1], idx[2]);
    }

    /// Axis-aligned bounding box [lo, hi] of D in cell coordinates.
    [[nodiscard]] std::pair<Vec3, Vec3> bounding_box() const {
        if (is_sphere()) {
            const Sphere& s = sphere();
            return {s.center.array() - s.radius, s.center.array() + s.radius};
        }
        const VoxelSet& v = voxels();
        Vec3 lo = Vec3::Constant(1.0), hi = Vec3::Zero();
        for (int i = 0; i < v.resolution[0]; ++i)
            for (int j = 0; j < v.resolution[1]; ++j)
                for (int l = 0; l < v.resolution[2]; ++l) {
                    if (!v.at(i, j, l)) continue;
                    const Vec3 a(double(i) / v.resolution[0], double(j) / v.resolution[1],
                                 double(l) / v.resolution[2]);
                    const Vec3 b(double(i + 1) / v.resolution[0], double(j + 1) / v.resolution[1],
                                 double(l + 1) / v.resolution[2]);
                    lo = lo.cwiseMin(a);
                    hi = hi.cwiseMax(b);
                }
        return {lo, hi};
    }
};

struct CrystalSpec {
    Material material;
    InclusionGeometry geometry;
};

/// Bloch quasi-momentum in the first Brillouin zone (-pi, pi]^3.
class QuasiMomentum {
public:
    QuasiMomentum() = default;
    explicit QuasiMomentum(const Vec3& alpha) : alpha_(alpha) {
        for (int d = 0; d < 3; ++d)
            if (!(alpha[d] > -pi && alpha[d] <= pi + 1e-12)) {
                std::ostringstream os;
                os << "quasi-momentum component " << d << " = " << alpha[d] << " outside (-pi, pi]";
                throw ValidationError(os.str());
            }
    }
    QuasiMomentum(double ax, double ay, double az) : QuasiMomentum(Vec3(ax, ay, az)) {}

    [[nodiscard]] const Vec3& alpha() const { return alpha_; }
    [[nodiscard]] double operator[](int d) const { return alpha_[d]; }
    [[nodiscard]] bool is_gamma() const { return alpha_[0] == 0.0 && alpha_[1] == 0.0 && alpha_[2] == 0.0; }
    [[nodiscard]] double norm2() const { return alpha_.squaredNorm(); }

    friend bool operator==(const QuasiMomentum& a, const QuasiMomentum& b) { return a.alpha_ == b.alpha_; }

private:
    Vec3 alpha_ = Vec3::Zero();
};

struct BZPath {
    std::vector<QuasiMomentum> vertices;
    int samples_per_segment = 2;

    /// Gamma -> X -> M -> R -> Gamma of the simple cubic lattice.
    static BZPath cubic_default(int samples = 8) {
        return BZPath{{QuasiMomentum(0, 0, 0), QuasiMomentum(pi, 0, 0), QuasiMomentum(pi, pi, 0),
                       QuasiMomentum(pi, pi, pi), QuasiMomentum(0, 0, 0)},
                      samples};
    }
};

struct Violation {
    std::string invariant;
    std::string detail;
};

namespace detail {
inline std::string fmt_num(double v) {
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}
} // namespace detail

inline std::vector<Violation> validate(const Material& m) {
    std::vector<Violation> out;
    if (!(m.mu1 > 0.0)) out.push_back({"material.ellipticity", "mu1 = " + detail::fmt_num(m.mu1) + " must be > 0"});
    if (!(m.lambda1 + 2.0 * m.mu1 > 0.0))
        out.push_back({"material.ellipticity", "lambda1 + 2 mu1 = " + detail::fmt_num(m.lambda1 + 2.0 * m.mu1) +
                                                   " must be > 0"});
    if (!(m.contrast_k >= 1.0))
        out.push_back({"material.contrast", "contrast_k = " + detail::fmt_num(m.contrast_k) + " must be >= 1"});
    if (!(m.rho2 > 0.0)) out.push_back({"material.density", "rho2 = " + detail::fmt_num(m.rho2) + " must be > 0"});
    if (!(m.rho1 > m.rho2))
        out.push_back({"material.density", "rho1 = " + detail::fmt_num(m.rho1) + " must exceed rho2 = " +
                                               detail::fmt_num(m.rho2)});
    if (m.mu1 > 0.0 && m.lambda1 + 2.0 * m.mu1 > 0.0 && !(std::abs(m.k0()) <= 0.375))
        out.push_back({"material.k0_bound", "|k0| = " + detail::fmt_num(std::abs(m.k0())) + " exceeds 3/8"});
    return out;
}

inline std::vector<Violation> validate(const InclusionGeometry& g) {
    std::vector<Violation> out;
    if (!(g.theta > 0.0)) out.push_back({"geometry.theta", "theta = " + detail::fmt_num(g.theta) + " must be > 0"});
    if (g.is_sphere()) {
        const Sphere& s = g.sphere();
        if (!(s.radius > 0.0)) out.push_back({"geometry.radius", "radius must be > 0"});
        for (int d = 0; d < 3; ++d)
            if (!(s.center[d] > 0.0 && s.center[d] < 1.0))
                out.push_back({"geometry.center", "center component " + std::to_string(d) + " outside (0,1)"});
        if (!(g.buffer_ratio_q > 0.0 && g.buffer_ratio_q < 1.0)) {
            out.push_back({"geometry.buffer_ratio_q", "q = " + detail::fmt_num(g.buffer_ratio_q) + " outside (0,1)"});
        } else if (s.radius > 0.0) {
            const double outer = s.radius / g.buffer_ratio_q;
            for (int d = 0; d < 3; ++d)
                if (!(s.center[d] - outer > 0.0 && s.center[d] + outer < 1.0)) {
                    out.push_back({"geometry.buffer_shell",
                                   "outer shell radius " + detail::fmt_num(outer) +
                                       " leaves the unit cell along axis " + std::to_string(d)});
                    break;
                }
        }
    } else {
        const VoxelSet& v = g.voxels();
        bool dims_ok = true;
        for (int d = 0; d < 3; ++d)
            if (v.resolution[d] < 3) dims_ok = false;
        const std::size_t expected = dims_ok ? static_cast<std::size_t>(v.resolution[0]) * v.resolution[1] *
                                                   v.resolution[2]
                                             : 0;
        if (!dims_ok || v.occupied.size() != expected) {
            out.push_back({"geometry.voxels", "voxel grid resolution and occupancy size are inconsistent"});
            return out;
        }
        if (v.count() == 0) {
            out.push_back({"geometry.voxels", "voxel set is empty (volume must be positive)"});
            return out;
        }
        for (int i = 0; i < v.resolution[0]; ++i)
            for (int j = 0; j < v.resolution[1]; ++j)
                for (int l = 0; l < v.resolution[2]; ++l) {
                    if (!v.at(i, j, l)) continue;
                    if (i == 0 || j == 0 || l == 0 || i == v.resolution[0] - 1 || j == v.resolution[1] - 1 ||
                        l == v.resolution[2] - 1) {
                        out.push_back({"geometry.voxels", "occupied voxel touches the cell boundary"});
                        return out;
                    }
                }
    }
    return out;
}

inline std::vector<Violation> validate(const CrystalSpec& spec) {
    auto out = validate(spec.material);
    auto g = validate(spec.geometry);
    out.insert(out.end(), g.begin(), g.end());
    return out;
}

inline std::vector<Violation> validate(const BZPath& path) {
    std::vector<Violation> out;
    if (path.vertices.size() < 2) out.push_back({"path.vertices", "a path needs at least two vertices"});
    if (path.samples_per_segment < 1) out.push_back({"path.samples", "samples_per_segment must be positive"});
    for (std::size_t i = 1; i < path.vertices.size(); ++i)
        if (path.vertices[i] == path.vertices[i - 1])
            out.push_back({"path.distinct_vertices", "segment " + std::to_string(i - 1) + " is degenerate"});
    return out;
}

inline void require_valid(const CrystalSpec& spec) {
    const auto v = validate(spec);
    if (v.empty()) return;
    std::string msg = "invalid crystal specification:";
    for (const auto& x : v) msg += "\n  " + x.invariant + ": " + x.detail;
    throw ValidationError(msg);
}

struct PathSample {
    QuasiMomentum alpha;
    double arclength = 0.0;
};

/// Linear interpolation along the path; shared vertices appear once.
inline std::vector<PathSample> sample_path(const BZPath& path) {
    const auto v = validate(path);
    if (!v.empty()) throw ValidationError("invalid path: " + v.front().invariant + ": " + v.front().detail);
    std::vector<PathSample> out;
    const int s = std::max(path.samples_per_segment, 2);
    double arc = 0.0;
    out.push_back({path.vertices.front(), 0.0});
    for (std::size_t seg = 0; seg + 1 < path.vertices.size(); ++seg) {
        const Vec3 a = path.vertices[seg].alpha();
        const Vec3 b = path.vertices[seg + 1].alpha();
        const double len = (b - a).norm();
        const int steps = path.samples_per_segment == 1 ? 1 : s - 1;
        for (int i = 1; i <= steps; ++i) {
            const double t = double(i) / steps;
            Vec3 p = a + t * (b - a);
            if (i == steps) p = b;
            out.push_back({QuasiMomentum(p), arc + t * len});
        }
        arc += len;
    }
    return out;
}

/// Stable 64-bit FNV-1a hash (16 hex digits) of the geometry, used to key
/// caches and to tag output files.
inline std::string geometry_hash(const InclusionGeometry& g) {
    std::ostringstream os;
    os.precision(17);
    if (g.is_sphere()) {
        const Sphere& s = g.sphere();
        os << "sphere " << s.center[0] << ' ' << s.center[1] << ' ' << s.center[2] << ' ' << s.radius;
    } else {
        const VoxelSet& v = g.voxels();
        os << "voxels " << v.resolution[0] << ' ' << v.resolution[1] << ' ' << v.resolution[2] << ' ';
        for (auto b : v.occupied) os << (b ? '1' : '0');
    }
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : os.str()) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

/// m^3 points with each component in {0, pi/(m-1), ..., pi}; for inclusions
/// with the cubic point symmetry this covers the irreducible zone.
inline std::vector<QuasiMomentum> symmetric_alpha_grid(int m) {
    std::vector<QuasiMomentum> out;
    if (m == 1) return {QuasiMomentum(0, 0, 0)};
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j)
            for (int l = 0; l < m; ++l)
                out.emplace_back(pi * i / (m - 1), pi * j / (m - 1), pi * l / (m - 1));
    return out;
}

/// m^3 points uniformly covering (-pi, pi]^3, components -pi + 2 pi (i+1)/m.
inline std::vector<QuasiMomentum> full_alpha_grid(int m) {
    std::vector<QuasiMomentum> out;
    auto c = [m](int i) { return -pi + two_pi * (i + 1) / m; };
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j)
            for (int l = 0; l < m; ++l) out.emplace_back(c(i), c(j), c(l));
    return out;
}

} // namespace phonon
