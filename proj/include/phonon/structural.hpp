#pragma once

// Structural spectrum: eigenvalues tau of
//   1/2 (K_out - K_in) w = tau (K_out + K_in) w,
// with the endpoint eigenspaces (+1/2: rigid in D, -1/2: vanishing outside D)
// counted separately. The tau values determine the contrast poles.

#include "phonon/eigensolve.hpp"
#include "phonon/hex_fe.hpp"
#include "phonon/planewave.hpp"
#include "phonon/types.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <vector>

namespace phonon {

inline constexpr double eps_w = 1e-6;

struct StructuralSpectrum {
    QuasiMomentum alpha;
    std::vector<double> taus;        // ascending, strictly inside (-1/2 + eps_w, 1/2 - eps_w)
    long w1_count = 0;               // eigenvalues pinned at +1/2
    long w2_count = 0;               // eigenvalues pinned at -1/2
    int deflated = 0;                // constant modes removed at alpha = 0
    int near_endpoint = 0;           // interior values within 10 eps_w of an endpoint band
    double raw_min = 0.0;            // extreme eigenvalues before classification
    double raw_max = 0.0;
    std::vector<double> z_poles;     // (tau + 1/2) / (tau - 1/2)
    std::vector<double> k_poles;     // (tau - 1/2) / (tau + 1/2)
    double z_star = 0.0;             // max z_poles (closest to the origin)
    std::array<double, 3> accumulation_targets{};  // {0, k0, -k0}
};

struct PoleSets {
    std::vector<double> k_poles;
    std::vector<double> z_poles;
    double z_star = 0.0;
};

inline double z_pole(double tau) {
    if (tau == 0.5 || tau == -0.5) throw ValidationError("pole map is singular at tau = +-1/2");
    return (tau + 0.5) / (tau - 0.5);
}
inline double k_pole(double tau) {
    if (tau == 0.5 || tau == -0.5) throw ValidationError("pole map is singular at tau = +-1/2");
    return (tau - 0.5) / (tau + 0.5);
}

inline PoleSets pole_sets(const std::vector<double>& taus) {
    PoleSets p;
    p.z_star = -std::numeric_limits<double>::infinity();
    for (double t : taus) {
        if (!(t > -0.5 && t < 0.5)) throw ValidationError("tau outside (-1/2, 1/2)");
        p.z_poles.push_back(z_pole(t));
        p.k_poles.push_back(k_pole(t));
        p.z_star = std::max(p.z_star, p.z_poles.back());
    }
    if (taus.empty()) p.z_star = std::numeric_limits<double>::quiet_NaN();
    return p;
}

/// z-values of the accumulation points {k0, 0, -k0}:
/// {-(mu + lambda) / (3 mu + lambda), -1, -(3 mu + lambda) / (mu + lambda)}.
inline std::array<double, 3> accumulation_z_values(const Material& m) {
    return {-(m.mu1 + m.lambda1) / (3.0 * m.mu1 + m.lambda1), -1.0,
            -(3.0 * m.mu1 + m.lambda1) / (m.mu1 + m.lambda1)};
}

/// Roots of zeta^3 - k0^2 zeta = r by radicals,
///   gamma^{+-} = [ (-27 r +- sqrt(729 r^2 - 108 k0^6)) / 2 ]^{1/3},
///   zeta_1 = -(gamma^+ + gamma^-) / 3,
///   zeta_2 = (1 - i sqrt3) / 6 gamma^+ + (1 + i sqrt3) / 6 gamma^-,
///   zeta_3 = (1 + i sqrt3) / 6 gamma^+ + (1 - i sqrt3) / 6 gamma^-,
/// with cube-root branches chosen so that gamma^+ gamma^- = 3 k0^2.
inline std::array<cplx, 3> np_cubic_roots(double r, double k0) {
    const double k2 = k0 * k0;
    const double disc = 729.0 * r * r - 108.0 * k2 * k2 * k2;
    cplx gp, gm;
    if (disc >= 0.0) {
        // take the radical without cancellation, the other from gamma^+ gamma^- = 3 k0^2
        const double s = std::sqrt(disc);
        const double big = std::cbrt(0.5 * (-27.0 * r + (r > 0.0 ? -s : s)));
        const double other = big == 0.0 ? 0.0 : 3.0 * k2 / big;
        gp = r > 0.0 ? other : big;
        gm = r > 0.0 ? big : other;
    } else {
        gp = std::pow(cplx(-13.5 * r, 0.5 * std::sqrt(-disc)), 1.0 / 3.0);
        gm = std::conj(gp);
    }
    const cplx w1(1.0 / 6.0, -std::sqrt(3.0) / 6.0), w2(1.0 / 6.0, std::sqrt(3.0) / 6.0);
    return {-(gp + gm) / 3.0, w1 * gp + w2 * gm, w2 * gp + w1 * gm};
}

struct TauBound {
    double tau_minus;
    double z_plus_theta;
};

/// tau^- = min(1/2, theta / 2) - 1/2 and z^+_theta = (tau^- + 1/2) / (tau^- - 1/2).
inline TauBound tau_lower_bound(double theta) {
    if (!(theta > 0.0)) throw ValidationError("theta must be > 0");
    const double t = std::min(0.5, 0.5 * theta) - 0.5;
    return {t, (t + 0.5) / (t - 0.5)};
}

namespace detail {

inline StructuralSpectrum classify_taus(const QuasiMomentum& alpha, const RVector& all, const Material& mat) {
    StructuralSpectrum s;
    s.alpha = alpha;
    if (all.size() > 0) {
        s.raw_min = all.minCoeff();
        s.raw_max = all.maxCoeff();
    }
    for (Eigen::Index i = 0; i < all.size(); ++i) {
        const double t = all[i];
        if (t >= 0.5 - eps_w) ++s.w1_count;
        else if (t <= -0.5 + eps_w) ++s.w2_count;
        else {
            s.taus.push_back(t);
            if (t >= 0.5 - 10 * eps_w || t <= -0.5 + 10 * eps_w) ++s.near_endpoint;
        }
    }
    std::sort(s.taus.begin(), s.taus.end());
    const PoleSets p = pole_sets(s.taus);
    s.z_poles = p.z_poles;
    s.k_poles = p.k_poles;
    s.z_star = p.z_star;
    s.accumulation_targets = {0.0, mat.k0(), -mat.k0()};
    return s;
}

template <class Scalar>
Eigen::SparseMatrix<Scalar> submatrix(const Eigen::SparseMatrix<Scalar>& A, const std::vector<Eigen::Index>& rows,
                                      const std::vector<Eigen::Index>& cols) {
    std::vector<Eigen::Index> rmap(A.rows(), -1);
    for (std::size_t i = 0; i < rows.size(); ++i) rmap[rows[i]] = static_cast<Eigen::Index>(i);
    std::vector<Eigen::Triplet<Scalar>> t;
    for (std::size_t j = 0; j < cols.size(); ++j)
        for (typename Eigen::SparseMatrix<Scalar>::InnerIterator it(A, cols[j]); it; ++it)
            if (rmap[it.row()] >= 0) t.emplace_back(rmap[it.row()], static_cast<Eigen::Index>(j), it.value());
    Eigen::SparseMatrix<Scalar> S(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
    S.setFromTriplets(t.begin(), t.end());
    return S;
}

/// Schur complement of K onto the dofs G, eliminating the dofs I.
inline CMatrix schur_complement(const CSparse& K, const std::vector<Eigen::Index>& G,
                                const std::vector<Eigen::Index>& I) {
    CMatrix kgg(submatrix(K, G, G));
    if (I.empty()) return kgg;
    const CSparse kii = submatrix(K, I, I);
    const CMatrix kig(submatrix(K, I, G));
    if (detail::is_real(kii) && kig.imag().cwiseAbs().maxCoeff() == 0.0) {
        const RSparse kr = kii.real();
        SparseCholesky<double> chol(kr);
        const RMatrix kigr = kig.real();
        const RMatrix x = chol.solve(kigr);
        return kgg - (kigr.transpose() * x).cast<cplx>();
    }
    SparseCholesky<cplx> chol(kii);
    const CMatrix x = chol.solve(kig);
    return kgg - kig.adjoint() * x;
}

} // namespace detail

/// Dense (plane-wave) structural spectrum; at alpha = 0 the constant modes are
/// deflated first.
inline StructuralSpectrum compute_structural_spectrum(const PlaneWavePencil& p, const Material& mat) {
    CMatrix L = 0.5 * (p.k_out - p.k_in);
    CMatrix R = p.k_out + p.k_in;
    int deflated = 0;
    if (p.basis.alpha().is_gamma()) {
        const GammaDeflation d = deflate_gamma(p.mass(mat), p.basis.translations(), true);
        L = d.complement.adjoint() * L * d.complement;
        R = d.complement.adjoint() * R * d.complement;
        deflated = 3;
    }
    L = 0.5 * (L + L.adjoint()).eval();
    R = 0.5 * (R + R.adjoint()).eval();
    StructuralSpectrum s = detail::classify_taus(p.basis.alpha(), ghep_eigenvalues(L, R), mat);
    s.deflated = deflated;
    return s;
}

/// Finite-element structural spectrum by condensation onto interface dofs:
///   1/2 (S_out - S_in) g = tau (S_out + S_in) g.
/// Inclusion-interior dofs contribute w2 modes and exterior dofs w1 modes.
inline StructuralSpectrum compute_structural_spectrum(const HexFEPencil& p, const Material& mat) {
    const auto G = p.basis.dofs_with_role(NodeRole::interface);
    const auto I = p.basis.dofs_with_role(NodeRole::inclusion_interior);
    const auto E = p.basis.dofs_with_role(NodeRole::exterior);
    const CMatrix s_in = detail::schur_complement(p.k_in, G, I);
    const CMatrix s_out = detail::schur_complement(p.k_out, G, E);
    CMatrix L = 0.5 * (s_out - s_in);
    CMatrix R = s_out + s_in;
    int deflated = 0;
    if (p.basis.alpha.is_gamma()) {
        // Interface restriction of the constant fields lies in both kernels.
        CMatrix C = CMatrix::Zero(static_cast<Eigen::Index>(G.size()), 3);
        for (std::size_t i = 0; i < G.size(); ++i) C(static_cast<Eigen::Index>(i), G[i] % 3) = 1.0;
        Eigen::HouseholderQR<CMatrix> qr(C);
        const CMatrix Q = qr.householderQ();
        const CMatrix Z = Q.rightCols(C.rows() - 3);
        L = Z.adjoint() * L * Z;
        R = Z.adjoint() * R * Z;
        deflated = 3;
    }
    L = 0.5 * (L + L.adjoint()).eval();
    R = 0.5 * (R + R.adjoint()).eval();
    StructuralSpectrum s = detail::classify_taus(p.basis.alpha, ghep_eigenvalues(L, R), mat);
    s.w1_count += static_cast<long>(E.size());
    s.w2_count += static_cast<long>(I.size());
    s.deflated = deflated;
    return s;
}

} // namespace phonon
