#pragma once

// High-contrast limit: Dirichlet spectrum of -L_D u = rho1 delta u with mean
// vectors, the effective mass tensor M(nu) and its roots, and the limit band
// structure with its gap and interlacing audits.

#include "phonon/crystal.hpp"
#include "phonon/dirichlet_fd.hpp"
#include "phonon/dispersion.hpp"
#include "phonon/eigensolve.hpp"
#include "phonon/hex_fe.hpp"
#include "phonon/structural.hpp"
#include "phonon/types.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace phonon {

struct DirichletEntry {
    double delta = 0.0;
    CVec3 mean = CVec3::Zero();  // integral over D of rho1 psi
    double mean_norm = 0.0;
    bool zero_mean = false;
    bool borderline = false;     // within three decades above eps_mean
};

struct DirichletSpectrum {
    std::vector<DirichletEntry> entries;
    double eps_mean = 0.0;
    double rho1 = 1.0;
    double mean_density = 1.0;   // integral over Y of rho
    std::string method;
    CMatrix vectors;             // full-grid coefficients, one column per entry (FE path only)

    [[nodiscard]] std::size_t size() const { return entries.size(); }
    [[nodiscard]] std::vector<double> deltas() const {
        std::vector<double> d;
        for (const auto& e : entries) d.push_back(e.delta);
        return d;
    }
};

namespace detail {

inline void classify_means(DirichletSpectrum& s, double volume) {
    // Eigenfunctions are normalized so that rho1 |psi|^2 integrates to 1.
    s.eps_mean = 1e-6 * std::sqrt(volume) / std::sqrt(s.rho1);
    for (auto& e : s.entries) {
        e.mean_norm = e.mean.norm();
        e.zero_mean = e.mean_norm < s.eps_mean;
        e.borderline = e.mean_norm >= s.eps_mean && e.mean_norm < 1e3 * s.eps_mean;
    }
}

/// Largest n <= limit such that entry n (0-based) does not share its value
/// with entry n - 1, so that a cut never splits a degenerate group.
inline std::size_t cluster_cut(const std::vector<double>& v, std::size_t limit, double rel_tol = 1e-6) {
    std::size_t n = std::min(limit, v.size());
    if (n == v.size()) return n;
    while (n > 0 && std::abs(v[n] - v[n - 1]) <= rel_tol * v[n]) --n;
    return n;
}

} // namespace detail

/// Dirichlet eigenpairs of the FE discretization restricted to the dofs
/// interior to the inclusion (zero on the interface and outside).
inline DirichletSpectrum dirichlet_spectrum(const HexFEPencil& p, const Material& mat, int count) {
    const auto I = p.basis.dofs_with_role(NodeRole::inclusion_interior);
    if (I.empty()) throw ValidationError("inclusion has no interior grid nodes; refine the grid");
    const RSparse A = detail::submatrix(p.k_in, I, I).real();
    const RSparse Min = detail::submatrix(p.m_in, I, I).real();
    const RSparse B = mat.rho1 * Min;
    SparseSolveOptions opt;
    opt.block_size = 6;
    // Extra modes so that a degenerate group straddling `count` is either kept
    // whole or dropped.
    EigenSolution s = solve_sparse_ghep(A, B, count + 6, opt);
    std::vector<double> all(s.eigenvalues.data(), s.eigenvalues.data() + s.eigenvalues.size());
    const auto keep = static_cast<Eigen::Index>(detail::cluster_cut(all, static_cast<std::size_t>(count) + 5));
    s.eigenvalues.conservativeResize(keep);
    s.eigenvectors.conservativeResize(Eigen::NoChange, keep);

    DirichletSpectrum out;
    out.rho1 = mat.rho1;
    out.mean_density = mat.rho1 * p.inclusion_volume + mat.rho2 * (p.cell_volume - p.inclusion_volume);
    out.method = "fe-restricted";
    out.vectors = CMatrix::Zero(p.dim(), s.eigenvalues.size());
    for (Eigen::Index j = 0; j < s.eigenvalues.size(); ++j)
        for (std::size_t i = 0; i < I.size(); ++i) out.vectors(I[i], j) = s.eigenvectors(static_cast<Eigen::Index>(i), j);
    const CMatrix means = mat.rho1 * (p.basis.translations().transpose() * (p.m_in * out.vectors));
    for (Eigen::Index j = 0; j < s.eigenvalues.size(); ++j) {
        DirichletEntry e;
        e.delta = s.eigenvalues[j];
        e.mean = means.col(j);
        out.entries.push_back(e);
    }
    detail::classify_means(out, p.inclusion_volume);
    return out;
}

inline DirichletSpectrum dirichlet_spectrum(const CrystalSpec& spec, int count, const FEGridOptions& opt = {}) {
    return dirichlet_spectrum(assemble_fe(spec, opt, QuasiMomentum(0, 0, 0)), spec.material, count);
}

/// Same data from the staggered finite-difference oracle.
inline DirichletSpectrum dirichlet_spectrum_fd(const CrystalSpec& spec, int count, int cells) {
    const FDDirichletResult r = fd_dirichlet(spec.geometry, spec.material, count, cells);
    DirichletSpectrum out;
    out.rho1 = spec.material.rho1;
    const double vol = spec.geometry.volume();
    out.mean_density = spec.material.rho1 * vol + spec.material.rho2 * (1.0 - vol);
    out.method = "fd-oracle";
    for (Eigen::Index j = 0; j < r.delta.size(); ++j) {
        DirichletEntry e;
        e.delta = r.delta[j];
        e.mean = r.means[j];
        out.entries.push_back(e);
    }
    detail::classify_means(out, vol);
    return out;
}

/// Relative differences of the production values against the oracle; throws
/// NumericError listing both spectra when any exceeds `tolerance`.
inline std::vector<double> compare_with_oracle(const DirichletSpectrum& prod, const DirichletSpectrum& oracle,
                                               double tolerance) {
    std::vector<double> rel;
    const std::size_t n = std::min(prod.size(), oracle.size());
    bool bad = false;
    for (std::size_t j = 0; j < n; ++j) {
        rel.push_back(std::abs(prod.entries[j].delta - oracle.entries[j].delta) / oracle.entries[j].delta);
        bad = bad || rel.back() > tolerance;
    }
    if (bad) {
        std::ostringstream os;
        os << "Dirichlet paths disagree beyond " << tolerance << ":";
        for (std::size_t j = 0; j < n; ++j)
            os << "\n  j=" << j + 1 << " " << prod.method << "=" << prod.entries[j].delta << " " << oracle.method
               << "=" << oracle.entries[j].delta;
        throw NumericError(os.str());
    }
    return rel;
}

/// Limit of xi_j(k, alpha) from contrasts {k/4, k/2, k}, by the quadratic in
/// 1/k through the three values evaluated at 1/k = 0.
inline RVector richardson_limit(const CrystalSpec& spec, const QuasiMomentum& alpha, double k_big, int count,
                                const BandOptions& opt) {
    if (alpha.is_gamma()) throw ValidationError("the Dirichlet limit needs alpha != 0");
    const auto sols = solve_bands(spec, alpha, {k_big / 4, k_big / 2, k_big}, count, opt);
    const double z[3] = {4 / k_big, 2 / k_big, 1 / k_big};
    RVector out(sols[0].xi.size());
    for (Eigen::Index j = 0; j < out.size(); ++j) {
        double v = 0.0;
        for (int a = 0; a < 3; ++a) {
            double w = 1.0;
            for (int b = 0; b < 3; ++b)
                if (b != a) w *= (0.0 - z[b]) / (z[a] - z[b]);
            v += w * sols[a].xi[j];
        }
        out[j] = v;
    }
    return out;
}

struct EffectiveMassOptions {
    std::size_t truncate = 0;  // use only the first `truncate` entries (0: all)
};

/// M(nu) = <rho> I - nu sum_j conj(m_j) m_j^T / (nu - delta*_j) over nonzero-mean entries.
inline CMat3 effective_mass(double nu, const DirichletSpectrum& d, const EffectiveMassOptions& opt = {}) {
    const std::size_t n = opt.truncate ? std::min(opt.truncate, d.size()) : d.size();
    CMat3 M = d.mean_density * CMat3::Identity();
    for (std::size_t j = 0; j < n; ++j) {
        const auto& e = d.entries[j];
        if (e.zero_mean) continue;
        if (std::abs(nu - e.delta) <= 1e-9 * std::max(1.0, e.delta)) {
            std::ostringstream os;
            os << "nu = " << nu << " is at the pole delta*_" << j + 1 << " = " << e.delta;
            throw NumericError(os.str());
        }
        M -= nu / (nu - e.delta) * (e.mean.conjugate() * e.mean.transpose());
    }
    return M;
}

struct MassRoot {
    double nu = 0.0;
    int multiplicity = 1;
};

struct MassRoots {
    std::vector<MassRoot> roots;          // distinct roots, ascending
    std::vector<double> poles;            // distinct nonzero-mean Dirichlet values
    std::vector<int> rootless_intervals;  // interval index i: (poles[i-1], poles[i]), poles[-1] = 0
    std::size_t modes_used = 0;
    std::vector<std::string> warnings;

    [[nodiscard]] std::vector<double> expanded() const {
        std::vector<double> v;
        for (const auto& r : roots) v.insert(v.end(), r.multiplicity, r.nu);
        return v;
    }
};

inline std::vector<double> distinct_values(std::vector<double> v, double rel_tol) {
    std::sort(v.begin(), v.end());
    std::vector<double> out;
    for (double x : v)
        if (out.empty() || std::abs(x - out.back()) > rel_tol * std::max(1.0, std::abs(x))) out.push_back(x);
    return out;
}

/// Positive roots of det M(nu) on (0, delta*_1) and between consecutive
/// distinct nonzero-mean Dirichlet values; nothing beyond the last one.
inline MassRoots mass_roots(const DirichletSpectrum& d, const EffectiveMassOptions& opt = {}) {
    MassRoots out;
    out.modes_used = opt.truncate ? std::min(opt.truncate, d.size()) : d.size();
    std::vector<double> star;
    for (std::size_t j = 0; j < out.modes_used; ++j)
        if (!d.entries[j].zero_mean) star.push_back(d.entries[j].delta);
    if (star.empty()) {
        out.warnings.push_back("all mean vectors vanish: M(nu) is constant and has no roots");
        return out;
    }
    out.poles = distinct_values(star, 1e-7);

    auto eig = [&](double nu) {
        Eigen::SelfAdjointEigenSolver<CMat3> es(effective_mass(nu, d, opt), Eigen::EigenvaluesOnly);
        return es.eigenvalues();
    };
    std::vector<double> found;
    double lo_edge = 0.0;
    for (std::size_t i = 0; i < out.poles.size(); ++i) {
        const double hi_edge = out.poles[i];
        const double eps = 1e-7 * (hi_edge - lo_edge);
        const double lo = i == 0 ? 0.0 : lo_edge + eps, hi = hi_edge - eps;
        const Vec3 flo = eig(lo), fhi = eig(hi);
        int n_here = 0;
        for (int c = 0; c < 3; ++c) {
            if (!(flo[c] < 0.0 && fhi[c] > 0.0)) continue;
            double a = lo, b = hi;
            while (b - a > 1e-12 * b) {
                const double m = 0.5 * (a + b);
                (eig(m)[c] < 0.0 ? a : b) = m;
            }
            found.push_back(0.5 * (a + b));
            ++n_here;
        }
        if (n_here == 0) out.rootless_intervals.push_back(static_cast<int>(i));
        lo_edge = hi_edge;
    }
    std::sort(found.begin(), found.end());
    for (double nu : found) {
        if (!out.roots.empty() && std::abs(nu - out.roots.back().nu) <= 1e-8 * nu) ++out.roots.back().multiplicity;
        else out.roots.push_back({nu, 1});
    }
    return out;
}

/// Off-diagonal and diagonal-spread measures of M(nu), relative to ||M||.
struct MassIsotropy {
    double off_diagonal = 0.0;
    double diagonal_spread = 0.0;
};

inline MassIsotropy mass_isotropy(double nu, const DirichletSpectrum& d) {
    const CMat3 M = effective_mass(nu, d);
    const double norm = M.norm();
    MassIsotropy r;
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b)
            if (a != b) r.off_diagonal = std::max(r.off_diagonal, std::abs(M(a, b)) / norm);
    const Vec3 diag = M.diagonal().real();
    r.diagonal_spread = (diag.maxCoeff() - diag.minCoeff()) / norm;
    return r;
}

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
};

struct GapVerdict {
    int j = 0;              // criterion delta_{j+2} < omega_j
    double delta_j2 = 0.0;
    double omega_j = 0.0;
    bool holds = false;
};

struct LimitSpectrum {
    std::vector<double> delta;        // all Dirichlet values
    std::vector<double> delta_prime;  // zero-mean values used
    std::vector<double> nu;           // roots with multiplicity
    std::vector<double> omega;        // merged, ascending, capped at the last pole
    std::vector<Interval> limit_bands;
    std::vector<Interval> gaps;
    std::vector<GapVerdict> verdicts;
    std::vector<std::string> interlacing_failures;
    std::size_t truncated = 0;        // omega values dropped above the last pole
};

/// Maximal open intervals of [0, top] not covered by `bands`.
inline std::vector<Interval> complement_gaps(std::vector<Interval> bands) {
    std::sort(bands.begin(), bands.end(), [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
    std::vector<Interval> gaps;
    double reach = 0.0;
    for (const Interval& b : bands) {
        if (b.lo > reach) gaps.push_back({reach, b.lo});
        reach = std::max(reach, b.hi);
    }
    return gaps;
}

inline LimitSpectrum limit_band_structure(const std::vector<double>& delta, const std::vector<double>& delta_prime,
                                          const std::vector<double>& nu, double cap) {
    if (delta.size() < 4) throw ValidationError("limit bands need at least 4 Dirichlet values");
    LimitSpectrum L;
    L.delta = delta;
    L.nu = nu;
    for (double v : delta_prime)
        if (v <= cap) L.delta_prime.push_back(v);
    L.omega = L.delta_prime;
    L.omega.insert(L.omega.end(), nu.begin(), nu.end());
    std::sort(L.omega.begin(), L.omega.end());
    L.truncated = delta_prime.size() - L.delta_prime.size();

    for (int i = 0; i < 3; ++i) L.limit_bands.push_back({0.0, delta[i]});
    for (std::size_t j = 0; j < L.omega.size() && j + 3 < delta.size(); ++j)
        L.limit_bands.push_back({L.omega[j], delta[j + 3]});
    L.gaps = complement_gaps(L.limit_bands);
    for (std::size_t j = 0; j < L.omega.size() && j + 2 < delta.size(); ++j)
        L.verdicts.push_back({static_cast<int>(j) + 1, delta[j + 2], L.omega[j], delta[j + 2] < L.omega[j]});

    const double tol = 1e-9;
    for (std::size_t j = 0; j < L.omega.size() && j < delta.size(); ++j) {
        const double w = L.omega[j];
        std::ostringstream os;
        if (w < delta[j] * (1 - tol)) os << "omega_" << j + 1 << " = " << w << " < delta_" << j + 1 << " = " << delta[j];
        if (j + 3 < delta.size() && w > delta[j + 3] * (1 + tol))
            os << "omega_" << j + 1 << " = " << w << " > delta_" << j + 4 << " = " << delta[j + 3];
        if (!os.str().empty()) L.interlacing_failures.push_back(os.str());
    }
    return L;
}

inline LimitSpectrum limit_band_structure(const DirichletSpectrum& d, const MassRoots& roots) {
    std::vector<double> dp;
    for (std::size_t j = 0; j < roots.modes_used; ++j)
        if (d.entries[j].zero_mean) dp.push_back(d.entries[j].delta);
    const double cap = roots.poles.empty() ? std::numeric_limits<double>::infinity() : roots.poles.back();
    return limit_band_structure(d.deltas(), dp, roots.expanded(), cap);
}

/// nu_{j-1} < delta*_j < nu_j over distinct roots and poles: each interval
/// between consecutive distinct poles holds exactly one distinct root.
inline std::vector<std::string> cubic_interlacing_failures(const MassRoots& r) {
    std::vector<std::string> out;
    for (std::size_t i = 1; i < r.poles.size(); ++i) {
        int n = 0;
        for (const auto& x : r.roots)
            if (x.nu > r.poles[i - 1] && x.nu < r.poles[i]) ++n;
        if (n != 1) {
            std::ostringstream os;
            os << n << " distinct roots in (" << r.poles[i - 1] << ", " << r.poles[i] << ")";
            out.push_back(os.str());
        }
    }
    for (const auto& x : r.roots)
        if (x.nu < r.poles.front()) out.push_back("root below the first pole");
    return out;
}

struct TailSensitivity {
    std::size_t modes_full = 0;
    std::size_t modes_reduced = 0;
    std::vector<double> shifts;  // |nu_i(full) - nu_i(reduced)| for common distinct roots
    double max_shift = 0.0;
};

/// Recompute the roots with the last 20% of modes dropped.
inline TailSensitivity tail_sensitivity(const DirichletSpectrum& d) {
    TailSensitivity t;
    t.modes_full = d.size();
    t.modes_reduced = detail::cluster_cut(d.deltas(), d.size() - d.size() / 5);
    const MassRoots full = mass_roots(d);
    const MassRoots reduced = mass_roots(d, {t.modes_reduced});
    for (std::size_t i = 0; i < std::min(full.roots.size(), reduced.roots.size()); ++i) {
        t.shifts.push_back(std::abs(full.roots[i].nu - reduced.roots[i].nu));
        t.max_shift = std::max(t.max_shift, t.shifts.back());
    }
    return t;
}

/// Discrete alpha = 0 limit problem: fields equal to a constant c outside the
/// inclusion interior, i.e. interior dofs plus the three translations, with
/// the rho-weighted constants removed. Its eigenvalues are the omega_j of the
/// same discretization.
inline RVector gamma_limit_direct(const HexFEPencil& p, const Material& mat, int count) {
    if (!p.basis.alpha.is_gamma()) throw ValidationError("the rigid-exterior limit is posed at alpha = 0");
    const auto I = p.basis.dofs_with_role(NodeRole::inclusion_interior);
    const Eigen::Index n = static_cast<Eigen::Index>(I.size()), dim = p.dim();
    std::vector<Eigen::Triplet<double>> t;
    for (Eigen::Index i = 0; i < n; ++i) t.emplace_back(I[i], i, 1.0);
    for (Eigen::Index q = 0; q < dim; ++q) t.emplace_back(q, n + q % 3, 1.0);
    RSparse P(dim, n + 3);
    P.setFromTriplets(t.begin(), t.end());
    const RSparse K = p.k_in.real(), B = p.mass(mat).real();
    RSparse A = P.transpose() * K * P;
    RSparse Br = P.transpose() * B * P;
    A.prune(1e-12 * detail::norm1(A));
    SparseSolveOptions opt;
    opt.constraint = CMatrix::Zero(n + 3, 3);
    for (int c = 0; c < 3; ++c) (*opt.constraint)(n + c, c) = 1.0;
    opt.shift = -0.1 * 4.0 * pi * pi * mat.mu1 / mat.rho_sup();
    return solve_sparse_ghep(A, Br, count, opt).eigenvalues;
}

} // namespace phonon
