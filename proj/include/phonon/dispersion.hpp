#pragma once

// Bloch bands xi_j(k, alpha) of (k K_out + K_in) x = xi (rho1 M_in + rho2 M_out) x.
// Plane waves are solved densely; the mapped hexahedral discretization is
// solved by sparse shift-invert Lanczos. At alpha = 0 the three rigid
// translations are removed, so raw branch j there is xi_{j+3}(k, 0) in the full numbering.

#include "phonon/crystal.hpp"
#include "phonon/eigensolve.hpp"
#include "phonon/hex_fe.hpp"
#include "phonon/planewave.hpp"
#include "phonon/types.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace phonon {

enum class Method { planewave, fe };

inline const char* to_string(Method m) { return m == Method::planewave ? "planewave" : "fe"; }

struct BandOptions {
    Method method = Method::planewave;
    int cutoff_N = 3;          // plane waves
    FEGridOptions fe;          // hexahedral grid
    std::string cache_dir;     // indicator-coefficient cache
};

struct BandSolution {
    QuasiMomentum alpha;
    double contrast_k = 1.0;
    RVector xi;                // ascending, raw (deflated) order
    RVector residuals;
    int deflated = 0;          // 3 at alpha = 0
};

/// Number of rigid modes preceding raw branch 1 in the full numbering.
inline int rigid_offset(const QuasiMomentum& a) { return a.is_gamma() ? 3 : 0; }

/// Any pencil with a stored basis; the pencil supplies the alpha.
inline BandSolution solve_bands(const PlaneWavePencil& p, const Material& mat, double k, int count) {
    const CMatrix A = p.stiffness(k);
    const CMatrix B = p.mass(mat);
    BandSolution out;
    out.alpha = p.basis.alpha();
    out.contrast_k = k;
    EigenSolution s;
    if (out.alpha.is_gamma()) {
        const GammaDeflation d = deflate_gamma(B, p.basis.translations(), true);
        s = solve_ghep_deflated(A, B, d, std::min<int>(count, static_cast<int>(A.rows()) - 3));
        out.deflated = 3;
    } else {
        s = solve_ghep(A, B, count);
    }
    out.xi = s.eigenvalues;
    out.residuals = s.residual_norms;
    return out;
}

inline BandSolution solve_bands(const HexFEPencil& p, const Material& mat, double k, int count) {
    const CSparse A = p.stiffness(k);
    const CSparse B = p.mass(mat);
    SparseSolveOptions opt;
    BandSolution out;
    out.alpha = p.basis.alpha;
    out.contrast_k = k;
    if (out.alpha.is_gamma()) {
        // Constants are excluded by constraint; the negative shift keeps A - sB definite.
        opt.constraint = p.basis.translations();
        opt.shift = -0.1 * 4.0 * pi * pi * mat.mu1 / mat.rho_sup();
        out.deflated = 3;
    }
    const EigenSolution s = solve_sparse_ghep(A, B, count, opt);
    out.xi = s.eigenvalues;
    out.residuals = s.residual_norms;
    return out;
}

/// Solve for several contrasts on one assembled pencil.
inline std::vector<BandSolution> solve_bands(const CrystalSpec& spec, const QuasiMomentum& alpha,
                                             const std::vector<double>& ks, int count, const BandOptions& opt) {
    std::vector<BandSolution> out;
    if (opt.method == Method::planewave) {
        const PlaneWavePencil p = assemble(spec, opt.cutoff_N, alpha, opt.cache_dir);
        for (double k : ks) out.push_back(solve_bands(p, spec.material, k, count));
    } else {
        const HexFEPencil p = assemble_fe(spec, opt.fe, alpha);
        for (double k : ks) out.push_back(solve_bands(p, spec.material, k, count));
    }
    return out;
}

inline BandSolution solve_bands(const CrystalSpec& spec, const QuasiMomentum& alpha, double k, int count,
                                const BandOptions& opt = {}) {
    return solve_bands(spec, alpha, std::vector<double>{k}, count, opt).front();
}

struct DispersionRecord {
    double arclength = 0.0;
    QuasiMomentum alpha;
    double contrast_k = 1.0;
    int j = 0;          // raw branch index, 1-based
    int j_full = 0;    // j + 3 at alpha = 0
    double xi = 0.0;
    double residual = 0.0;
};

struct DispersionTable {
    std::vector<DispersionRecord> records;  // sorted by (sample, k, j)
    std::string method;
    int cutoff = 0;
    std::string geometry_hash;
};

/// Run `task(i)` for i in [0, n) on `workers` threads.
inline void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& task) {
    workers = std::max(1, std::min<int>(workers, static_cast<int>(n)));
    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i) task(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (std::size_t i; (i = next++) < n;) {
                try {
                    task(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!error) error = std::current_exception();
                }
            }
        });
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

/// Bands at every (sample, k); samples carry an arclength for plotting.
inline DispersionTable sweep(const CrystalSpec& spec, const std::vector<PathSample>& samples,
                             const std::vector<double>& ks, int count, const BandOptions& opt, int workers = 1) {
    std::vector<std::vector<BandSolution>> per(samples.size());
    parallel_for(samples.size(), workers,
                 [&](std::size_t i) { per[i] = solve_bands(spec, samples[i].alpha, ks, count, opt); });
    DispersionTable t;
    t.method = to_string(opt.method);
    t.cutoff = opt.method == Method::planewave ? opt.cutoff_N : opt.fe.cells_across;
    t.geometry_hash = geometry_hash(spec.geometry);
    for (std::size_t i = 0; i < samples.size(); ++i)
        for (const BandSolution& b : per[i])
            for (Eigen::Index j = 0; j < b.xi.size(); ++j)
                t.records.push_back({samples[i].arclength, b.alpha, b.contrast_k, static_cast<int>(j) + 1,
                                     static_cast<int>(j) + 1 + b.deflated, b.xi[j], b.residuals[j]});
    return t;
}

/// xi_J(k, alpha) in the full numbering: at alpha = 0 the first three are
/// the rigid translations (xi = 0).
inline double full_branch(const BandSolution& b, int J) {
    const int raw = J - b.deflated;
    if (raw <= 0) return 0.0;
    if (raw > b.xi.size()) throw ValidationError("branch " + std::to_string(J) + " was not computed");
    return b.xi[raw - 1];
}

struct BandExtent {
    double a = 0.0;  // min over the grid
    double b = 0.0;  // max over the grid
};

/// [a_J, b_J] over precomputed solutions (full numbering J).
inline BandExtent band_extents(const std::vector<BandSolution>& sols, int J) {
    if (sols.empty()) throw ValidationError("alpha grid is empty");
    BandExtent e{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
    for (const BandSolution& s : sols) {
        const double v = full_branch(s, J);
        e.a = std::min(e.a, v);
        e.b = std::max(e.b, v);
    }
    return e;
}

inline BandExtent band_extents(const CrystalSpec& spec, double k, int J, const std::vector<QuasiMomentum>& grid,
                               const BandOptions& opt, int workers = 1) {
    std::vector<BandSolution> sols(grid.size());
    parallel_for(grid.size(), workers, [&](std::size_t i) { sols[i] = solve_bands(spec, grid[i], k, J, opt); });
    return band_extents(sols, J);
}

/// Extent of the band whose high-contrast limit is [omega_j, delta_{j+3}]
/// (full index J = j + 3).
inline BandExtent limit_band_extents(const std::vector<BandSolution>& sols, int j) {
    return band_extents(sols, j + 3);
}

/// max over alphas of |xi_{j+3}(k, 0) - xi_{j+3}(k, alpha)| / (k |alpha|).
inline double lipschitz_probe(const CrystalSpec& spec, double k, int j, const std::vector<QuasiMomentum>& alphas,
                              const BandOptions& opt) {
    const int J = j + 3;
    const double at0 = full_branch(solve_bands(spec, QuasiMomentum(0, 0, 0), k, J, opt), J);
    double worst = 0.0;
    for (const QuasiMomentum& a : alphas) {
        if (a.is_gamma()) continue;
        const double v = full_branch(solve_bands(spec, a, k, J, opt), J);
        worst = std::max(worst, std::abs(at0 - v) / (k * std::sqrt(a.norm2())));
    }
    return worst;
}

} // namespace phonon
