#pragma once

// Fourier coefficients chi_D(n) = integral over D of exp(-i 2 pi n.x) dx of the
// inclusion indicator, tabulated for n in [-R, R]^3.

#include "phonon/crystal.hpp"
#include "phonon/types.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace phonon {

struct IndicatorCoefficients {
    int cutoff_N = 0;          // basis cutoff the table serves
    int range = 0;             // table covers [-range, range]^3, range = 2 N
    std::vector<cplx> table;   // index ((nx + R) * W + ny + R) * W + nz + R, W = 2R + 1
    double volume = 0.0;

    [[nodiscard]] int width() const { return 2 * range + 1; }
    [[nodiscard]] bool covers(int nx, int ny, int nz) const {
        return std::abs(nx) <= range && std::abs(ny) <= range && std::abs(nz) <= range;
    }
    [[nodiscard]] cplx operator()(int nx, int ny, int nz) const {
        const int w = width();
        return table[(static_cast<std::size_t>(nx + range) * w + (ny + range)) * w + (nz + range)];
    }
    cplx& at(int nx, int ny, int nz) {
        const int w = width();
        return table[(static_cast<std::size_t>(nx + range) * w + (ny + range)) * w + (nz + range)];
    }
};

/// Transform of the ball indicator at frequency xi = 2 pi n.
inline cplx sphere_coefficient(const Sphere& s, const Vec3& n) {
    const double a = s.radius;
    if (n.isZero()) return 4.0 / 3.0 * pi * a * a * a;
    const Vec3 xi = two_pi * n;
    const double q = xi.norm();
    const double radial = 4.0 * pi * (std::sin(a * q) - a * q * std::cos(a * q)) / (q * q * q);
    return std::polar(radial, -xi.dot(s.center));
}

inline IndicatorCoefficients sphere_coefficients(const Sphere& s, int cutoff_N) {
    if (cutoff_N < 0) throw ValidationError("cutoff must be nonnegative");
    IndicatorCoefficients c;
    c.cutoff_N = cutoff_N;
    c.range = 2 * cutoff_N;
    c.table.resize(static_cast<std::size_t>(c.width()) * c.width() * c.width());
    c.volume = 4.0 / 3.0 * pi * s.radius * s.radius * s.radius;
    for (int i = -c.range; i <= c.range; ++i)
        for (int j = -c.range; j <= c.range; ++j)
            for (int l = -c.range; l <= c.range; ++l) c.at(i, j, l) = sphere_coefficient(s, Vec3(i, j, l));
    return c;
}

/// Exact transform of a union of voxel boxes: per-axis factors
/// integral_{x0}^{x1} exp(-i 2 pi n x) dx summed over occupied voxels.
inline IndicatorCoefficients voxel_coefficients(const VoxelSet& v, int cutoff_N) {
    if (cutoff_N < 0) throw ValidationError("cutoff must be nonnegative");
    if (v.count() == 0) throw ValidationError("voxel set is empty (volume must be positive)");
    IndicatorCoefficients c;
    c.cutoff_N = cutoff_N;
    c.range = 2 * cutoff_N;
    const int w = c.width();
    c.table.assign(static_cast<std::size_t>(w) * w * w, cplx(0.0));
    c.volume = v.volume();

    // f[d][cell][n + R]
    std::array<std::vector<cplx>, 3> f;
    for (int d = 0; d < 3; ++d) {
        const int res = v.resolution[d];
        f[d].resize(static_cast<std::size_t>(res) * w);
        for (int cell = 0; cell < res; ++cell) {
            const double x0 = double(cell) / res, x1 = double(cell + 1) / res;
            for (int n = -c.range; n <= c.range; ++n) {
                cplx val;
                if (n == 0) {
                    val = x1 - x0;
                } else {
                    const double om = two_pi * n;
                    val = (std::polar(1.0, -om * x1) - std::polar(1.0, -om * x0)) / cplx(0.0, -om);
                }
                f[d][static_cast<std::size_t>(cell) * w + (n + c.range)] = val;
            }
        }
    }
    // Sum over occupied voxels, grouping along z for a separable inner loop.
    std::vector<cplx> fz(w);
    for (int i = 0; i < v.resolution[0]; ++i)
        for (int j = 0; j < v.resolution[1]; ++j) {
            std::fill(fz.begin(), fz.end(), cplx(0.0));
            bool any = false;
            for (int l = 0; l < v.resolution[2]; ++l)
                if (v.at(i, j, l)) {
                    any = true;
                    for (int n = 0; n < w; ++n) fz[n] += f[2][static_cast<std::size_t>(l) * w + n];
                }
            if (!any) continue;
            for (int a = 0; a < w; ++a) {
                const cplx fa = f[0][static_cast<std::size_t>(i) * w + a];
                for (int b = 0; b < w; ++b) {
                    const cplx fab = fa * f[1][static_cast<std::size_t>(j) * w + b];
                    cplx* row = &c.table[(static_cast<std::size_t>(a) * w + b) * w];
                    for (int n = 0; n < w; ++n) row[n] += fab * fz[n];
                }
            }
        }
    return c;
}

namespace detail {
inline constexpr const char* chi_cache_header = "phonon-indicator-coefficients v1";

inline std::filesystem::path chi_cache_path(const std::string& dir, const InclusionGeometry& g, int cutoff_N) {
    return std::filesystem::path(dir) / ("chi_" + geometry_hash(g) + "_N" + std::to_string(cutoff_N) + ".txt");
}

inline bool load_chi_cache(const std::filesystem::path& p, const InclusionGeometry& g, int cutoff_N,
                           IndicatorCoefficients& out) {
    std::ifstream in(p);
    if (!in) return false;
    std::string header;
    std::getline(in, header);
    std::ostringstream expect;
    expect << chi_cache_header << ' ' << geometry_hash(g) << ' ' << cutoff_N;
    if (header != expect.str()) return false;
    IndicatorCoefficients c;
    c.cutoff_N = cutoff_N;
    c.range = 2 * cutoff_N;
    const std::size_t n = static_cast<std::size_t>(c.width()) * c.width() * c.width();
    c.table.resize(n);
    if (!(in >> c.volume)) return false;
    for (std::size_t k = 0; k < n; ++k) {
        double re, im;
        if (!(in >> re >> im)) return false;
        c.table[k] = {re, im};
    }
    out = std::move(c);
    return true;
}

inline void save_chi_cache(const std::filesystem::path& p, const InclusionGeometry& g,
                           const IndicatorCoefficients& c) {
    std::filesystem::create_directories(p.parent_path());
    const auto tmp = p.string() + ".tmp";
    {
        std::ofstream out(tmp);
        out.precision(17);
        out << chi_cache_header << ' ' << geometry_hash(g) << ' ' << c.cutoff_N << '\n' << c.volume << '\n';
        for (const cplx& v : c.table) out << v.real() << ' ' << v.imag() << '\n';
    }
    std::filesystem::rename(tmp, p);
}
} // namespace detail

/// Coefficients up to index 2 N; read from / written to `cache_dir` when it is
/// non-empty.
inline IndicatorCoefficients indicator_coefficients(const InclusionGeometry& g, int cutoff_N,
                                                    const std::string& cache_dir = {}) {
    if (!cache_dir.empty()) {
        IndicatorCoefficients c;
        const auto p = detail::chi_cache_path(cache_dir, g, cutoff_N);
        if (detail::load_chi_cache(p, g, cutoff_N, c)) return c;
        c = g.is_sphere() ? sphere_coefficients(g.sphere(), cutoff_N) : voxel_coefficients(g.voxels(), cutoff_N);
        detail::save_chi_cache(p, g, c);
        return c;
    }
    return g.is_sphere() ? sphere_coefficients(g.sphere(), cutoff_N) : voxel_coefficients(g.voxels(), cutoff_N);
}

} // namespace phonon
