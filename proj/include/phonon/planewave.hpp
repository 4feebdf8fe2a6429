#pragma once

// Quasi-periodic plane-wave Galerkin matrices. Basis function (n, p) is
// e_p exp(i (2 pi n + alpha).x); row = test mode, column = trial mode.

#include "phonon/crystal.hpp"
#include "phonon/fourier.hpp"
#include "phonon/pencil.hpp"
#include "phonon/types.hpp"

#include <array>
#include <vector>

namespace phonon {

class PlaneWaveBasis {
public:
    PlaneWaveBasis(int cutoff_N, const QuasiMomentum& alpha) : cutoff_(cutoff_N), alpha_(alpha) {
        if (cutoff_N < 0) throw ValidationError("cutoff must be nonnegative");
        for (int i = -cutoff_N; i <= cutoff_N; ++i)
            for (int j = -cutoff_N; j <= cutoff_N; ++j)
                for (int l = -cutoff_N; l <= cutoff_N; ++l) lattice_.push_back({i, j, l});
    }

    [[nodiscard]] int cutoff() const { return cutoff_; }
    [[nodiscard]] const QuasiMomentum& alpha() const { return alpha_; }
    [[nodiscard]] Eigen::Index num_waves() const { return static_cast<Eigen::Index>(lattice_.size()); }
    [[nodiscard]] Eigen::Index dim() const { return 3 * num_waves(); }
    /// Lattice index of mode (wave w, polarization p) = dof 3 w + p.
    [[nodiscard]] const std::array<int, 3>& lattice(Eigen::Index wave) const { return lattice_[wave]; }
    [[nodiscard]] Vec3 wavevector(Eigen::Index wave) const {
        const auto& n = lattice_[wave];
        return two_pi * Vec3(n[0], n[1], n[2]) + alpha_.alpha();
    }
    /// Index of the n = 0 wave.
    [[nodiscard]] Eigen::Index zero_wave() const { return num_waves() / 2; }
    /// Coefficient vectors of the three constant fields (alpha = 0 only).
    [[nodiscard]] CMatrix translations() const {
        CMatrix c = CMatrix::Zero(dim(), 3);
        for (int p = 0; p < 3; ++p) c(3 * zero_wave() + p, p) = 1.0;
        return c;
    }

private:
    int cutoff_;
    QuasiMomentum alpha_;
    std::vector<std::array<int, 3>> lattice_;
};

struct PlaneWavePencil : DensePencil {
    PlaneWaveBasis basis;
    explicit PlaneWavePencil(PlaneWaveBasis b) : basis(std::move(b)) {}
};

/// 3x3 block of the Lame kernel for trial wavevector xi and test wavevector
/// eta: S(p, q) = lambda xi_q eta_p + mu ((xi.eta) delta_pq + xi_p eta_q).
inline Mat3 lame_kernel(const Vec3& xi, const Vec3& eta, double lambda, double mu) {
    Mat3 s = lambda * eta * xi.transpose() + mu * xi * eta.transpose();
    s.diagonal().array() += mu * xi.dot(eta);
    return s;
}

inline PlaneWavePencil assemble(const PlaneWaveBasis& basis, const IndicatorCoefficients& chi, const Material& mat) {
    if (chi.range < 2 * basis.cutoff())
        throw ValidationError("indicator table range " + std::to_string(chi.range) + " is below twice the cutoff " +
                              std::to_string(basis.cutoff()));
    PlaneWavePencil out(basis);
    const Eigen::Index nw = basis.num_waves(), dim = basis.dim();
    out.k_in = CMatrix::Zero(dim, dim);
    out.k_out = CMatrix::Zero(dim, dim);
    out.m_in = CMatrix::Zero(dim, dim);
    out.m_out = CMatrix::Zero(dim, dim);
    for (Eigen::Index m = 0; m < nw; ++m) {
        const Vec3 xi = basis.wavevector(m);
        const auto& lm = basis.lattice(m);
        for (Eigen::Index n = 0; n < nw; ++n) {
            const Vec3 eta = basis.wavevector(n);
            const auto& ln = basis.lattice(n);
            const cplx w = chi(ln[0] - lm[0], ln[1] - lm[1], ln[2] - lm[2]);
            const Mat3 s = lame_kernel(xi, eta, mat.lambda1, mat.mu1);
            out.k_in.block<3, 3>(3 * n, 3 * m) = w * s.cast<cplx>();
            for (int p = 0; p < 3; ++p) out.m_in(3 * n + p, 3 * m + p) = w;
            if (n == m) {
                out.k_out.block<3, 3>(3 * n, 3 * m) = (1.0 - w) * s.cast<cplx>();
                for (int p = 0; p < 3; ++p) out.m_out(3 * n + p, 3 * m + p) = 1.0 - w;
            } else {
                out.k_out.block<3, 3>(3 * n, 3 * m) = -w * s.cast<cplx>();
                for (int p = 0; p < 3; ++p) out.m_out(3 * n + p, 3 * m + p) = -w;
            }
        }
    }
    return out;
}

inline PlaneWavePencil assemble(const CrystalSpec& spec, int cutoff_N, const QuasiMomentum& alpha,
                                const std::string& cache_dir = {}) {
    return assemble(PlaneWaveBasis(cutoff_N, alpha), indicator_coefficients(spec.geometry, cutoff_N, cache_dir),
                    spec.material);
}

/// Symbol of (-L)^{-1} at frequency xi: (I - c xi xi^T / |xi|^2) / (mu |xi|^2),
/// c = (lambda + mu) / (lambda + 2 mu).
inline Mat3 inverse_lame_symbol(const Vec3& xi, const Material& mat) {
    const double q2 = xi.squaredNorm();
    if (q2 == 0.0) throw ValidationError("inverse Lame symbol is undefined at xi = 0");
    const double c = (mat.lambda1 + mat.mu1) / (mat.lambda1 + 2.0 * mat.mu1);
    return (Mat3::Identity() - c * xi * xi.transpose() / q2) / (mat.mu1 * q2);
}

} // namespace phonon
