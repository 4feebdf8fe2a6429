#pragma once

// Generalized Hermitian eigenproblems A x = lambda B x.
//
// Dense pencils go through a Cholesky reduction of B and LAPACK's MRRR
// driver; sparse pencils use a thick-restart block Lanczos iteration on the
// shift-inverted operator (A - sigma B)^{-1} B with a CHOLMOD factorization.

#include "phonon/types.hpp"

#include <Eigen/CholmodSupport>
#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <type_traits>
#include <vector>

namespace phonon {

struct EigenSolution {
    RVector eigenvalues;       // ascending
    CMatrix eigenvectors;      // B-orthonormal columns
    RVector residual_norms;    // ||A x - lambda B x|| / ||x||
    int deflated_dim = 0;      // number of constrained (removed) directions
};

inline constexpr double solver_tolerance = 1e-10;

namespace lapack {

/// All eigenvalues (and optionally vectors, overwriting a) of a Hermitian matrix.
inline RVector heevd(CMatrix& a, bool vectors) {
    const lapack_int n = static_cast<lapack_int>(a.rows());
    RVector w(n);
    if (n == 0) return w;
    const lapack_int info = LAPACKE_zheevd(LAPACK_COL_MAJOR, vectors ? 'V' : 'N', 'L', n,
                                           reinterpret_cast<lapack_complex_double*>(a.data()), n, w.data());
    if (info != 0) throw NumericError("zheevd failed with info = " + std::to_string(info));
    return w;
}

/// Eigenpairs il..iu (1-based, ascending) of a Hermitian matrix; a is destroyed.
inline RVector heevr(CMatrix& a, int il, int iu, CMatrix* z) {
    const lapack_int n = static_cast<lapack_int>(a.rows());
    RVector w(n);
    lapack_int m = 0;
    std::vector<lapack_int> isuppz(2 * static_cast<std::size_t>(std::max<lapack_int>(n, 1)));
    CMatrix zz;
    if (z) zz.resize(n, iu - il + 1);
    const lapack_int info = LAPACKE_zheevr(
        LAPACK_COL_MAJOR, z ? 'V' : 'N', 'I', 'L', n, reinterpret_cast<lapack_complex_double*>(a.data()), n, 0.0,
        0.0, il, iu, 0.0, &m, w.data(), z ? reinterpret_cast<lapack_complex_double*>(zz.data()) : nullptr,
        std::max<lapack_int>(n, 1), isuppz.data());
    if (info != 0) throw NumericError("zheevr failed with info = " + std::to_string(info));
    if (z) *z = zz.leftCols(m);
    return w.head(m);
}

} // namespace lapack

inline RVector hermitian_eigenvalues(CMatrix a) { return lapack::heevd(a, false); }

/// Eigen-decomposition of a (small) Hermitian matrix, ascending.
inline std::pair<RVector, CMatrix> hermitian_eigen(CMatrix a) {
    RVector w = lapack::heevd(a, true);
    return {w, a};
}

namespace detail {

inline double norm1(const CMatrix& a) { return a.cwiseAbs().colwise().sum().maxCoeff(); }
template <class Scalar>
double norm1(const Eigen::SparseMatrix<Scalar>& a) {
    double m = 0.0;
    for (Eigen::Index c = 0; c < a.outerSize(); ++c) {
        double s = 0.0;
        for (typename Eigen::SparseMatrix<Scalar>::InnerIterator it(a, c); it; ++it) s += std::abs(it.value());
        m = std::max(m, s);
    }
    return m;
}

template <class MatA, class MatB>
RVector residuals(const MatA& A, const MatB& B, const RVector& lam, const CMatrix& X) {
    RVector r(lam.size());
    const CMatrix AX = A * X;
    const CMatrix BX = B * X;
    for (Eigen::Index j = 0; j < lam.size(); ++j)
        r[j] = (AX.col(j) - lam[j] * BX.col(j)).norm() / X.col(j).norm();
    return r;
}

template <class MatA, class MatB>
void check_residuals(const MatA& A, const MatB& B, const EigenSolution& s, double tol) {
    const double na = norm1(A), nb = norm1(B);
    for (Eigen::Index j = 0; j < s.eigenvalues.size(); ++j) {
        const double scale = na + std::abs(s.eigenvalues[j]) * nb;
        if (s.residual_norms[j] > tol * scale) {
            std::ostringstream os;
            os << "eigenpair " << j << " residual " << s.residual_norms[j] << " exceeds tolerance "
               << tol * scale;
            throw NumericError(os.str());
        }
    }
}

} // namespace detail

/// Lowest `count` eigenpairs of the dense Hermitian pencil (A, B), B > 0.
inline EigenSolution solve_ghep(const CMatrix& A, const CMatrix& B, int count) {
    const Eigen::Index n = A.rows();
    if (A.cols() != n || B.rows() != n || B.cols() != n) throw NumericError("pencil dimensions disagree");
    count = static_cast<int>(std::min<Eigen::Index>(count, n));
    EigenSolution out;
    if (count <= 0) return out;
    Eigen::LLT<CMatrix> llt(B);
    if (llt.info() != Eigen::Success) {
        const RVector bw = hermitian_eigenvalues(B);
        std::ostringstream os;
        os << "mass matrix is not positive definite; smallest eigenvalue " << bw.minCoeff();
        throw NumericError(os.str());
    }
    // C = L^{-1} A L^{-H}
    CMatrix C = llt.matrixL().solve(A);
    C = llt.matrixL().solve(C.adjoint().eval()).adjoint().eval();
    C = 0.5 * (C + C.adjoint()).eval();
    CMatrix Y;
    out.eigenvalues = lapack::heevr(C, 1, count, &Y);
    out.eigenvectors = llt.matrixU().solve(Y);
    out.residual_norms = detail::residuals(A, B, out.eigenvalues, out.eigenvectors);
    detail::check_residuals(A, B, out, solver_tolerance);
    return out;
}

/// All eigenvalues (no vectors) of the dense Hermitian pencil (A, B), B > 0.
inline RVector ghep_eigenvalues(const CMatrix& A, const CMatrix& B) {
    Eigen::LLT<CMatrix> llt(B);
    if (llt.info() != Eigen::Success) {
        const RVector bw = hermitian_eigenvalues(B);
        std::ostringstream os;
        os << "pencil metric is not positive definite; smallest eigenvalue " << bw.minCoeff();
        throw NumericError(os.str());
    }
    CMatrix C = llt.matrixL().solve(A);
    C = llt.matrixL().solve(C.adjoint().eval()).adjoint().eval();
    C = 0.5 * (C + C.adjoint()).eval();
    return hermitian_eigenvalues(std::move(C));
}

/// Removal of the density-weighted constant translations at alpha = 0.
struct GammaDeflation {
    CMatrix translations;  // dim x 3 coefficient vectors of the constant fields
    CMatrix complement;    // dim x (dim - 3), orthonormal, spanning {u : C^H B u = 0}
    CMatrix weighted;      // B C

    /// B-orthogonal projector onto {u : integral of rho u = 0}.
    [[nodiscard]] CMatrix projector() const {
        const Eigen::Index n = translations.rows();
        const CMatrix G = translations.adjoint() * weighted;
        return CMatrix::Identity(n, n) - translations * G.ldlt().solve(weighted.adjoint());
    }
    [[nodiscard]] CVector apply(const CVector& u) const {
        const CMatrix G = translations.adjoint() * weighted;
        return u - translations * G.ldlt().solve(weighted.adjoint() * u);
    }
};

/// Build the alpha = 0 deflation for mass matrix B_rho and translation
/// coefficient vectors C (one column per polarization).
template <class MatB>
GammaDeflation deflate_gamma(const MatB& B_rho, const CMatrix& C, bool is_gamma) {
    if (!is_gamma)
        throw ValidationError("deflation applies only at alpha = 0; rigid translations are not quasi-periodic");
    GammaDeflation d;
    d.translations = C;
    d.weighted = B_rho * C;
    Eigen::HouseholderQR<CMatrix> qr(d.weighted);
    const CMatrix Q = qr.householderQ();
    d.complement = Q.rightCols(C.rows() - C.cols());
    return d;
}

/// Lowest `count` eigenpairs on the deflated subspace (dense).
inline EigenSolution solve_ghep_deflated(const CMatrix& A, const CMatrix& B, const GammaDeflation& defl,
                                         int count) {
    const CMatrix& Z = defl.complement;
    const CMatrix Ar = Z.adjoint() * A * Z;
    const CMatrix Br = Z.adjoint() * B * Z;
    EigenSolution s = solve_ghep(0.5 * (Ar + Ar.adjoint()), 0.5 * (Br + Br.adjoint()), count);
    s.eigenvectors = Z * s.eigenvectors;
    s.residual_norms = detail::residuals(A, B, s.eigenvalues, s.eigenvectors);
    s.deflated_dim = static_cast<int>(defl.translations.cols());
    detail::check_residuals(A, B, s, solver_tolerance);
    return s;
}

struct SparseSolveOptions {
    double shift = 0.0;                 // A - shift * B must be positive definite
    std::optional<CMatrix> constraint;  // solutions are B-orthogonal to these columns
    int block_size = 6;
    int max_basis = 0;                  // 0 -> automatic
    int max_restarts = 60;
    double tolerance = 1e-12;           // Ritz residual relative to the Ritz value
    unsigned seed = 12345;
};

/// Sparse Cholesky of a Hermitian positive definite matrix (CHOLMOD, METIS ordering).
template <class Scalar>
class SparseCholesky {
public:
    using Sparse = Eigen::SparseMatrix<Scalar>;
    using Dense = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

    SparseCholesky() {
        auto& c = solver_.cholmod();
        c.nmethods = 1;
        c.method[0].ordering = CHOLMOD_METIS;
    }
    explicit SparseCholesky(const Sparse& K) : SparseCholesky() { factor(K); }

    void factor(const Sparse& K) {
        solver_.compute(K);
        if (solver_.info() != Eigen::Success)
            throw NumericError("sparse Cholesky factorization failed (matrix not positive definite)");
    }
    template <class Rhs>
    [[nodiscard]] Dense solve(const Rhs& b) const {
        Dense x = solver_.solve(b);
        if (solver_.info() != Eigen::Success) throw NumericError("sparse Cholesky solve failed");
        return x;
    }

private:
    mutable Eigen::CholmodSupernodalLLT<Sparse, Eigen::Lower> solver_;
};

namespace detail {

template <class Scalar>
Scalar random_scalar(std::mt19937& rng) {
    std::normal_distribution<double> nd;
    if constexpr (std::is_same_v<Scalar, double>) return nd(rng);
    else return Scalar(nd(rng), nd(rng));
}

/// B-orthonormalize the columns of W in place; returns R with W_in = W_out R.
/// Rank-deficient directions are replaced by random vectors orthogonal to the
/// first `used` columns of `basis` and to the constraint, with zero coupling.
template <class Scalar, class Project>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>
b_orthonormalize(Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& W, const Eigen::SparseMatrix<Scalar>& B,
                 const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& basis, Eigen::Index used,
                 const Project& project, std::mt19937& rng) {
    using Dense = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    const Eigen::Index p = W.cols();
    Dense R = Dense::Identity(p, p);
    for (int pass = 0; pass < 2; ++pass) {
        Dense G = W.adjoint() * (B * W);
        G = (0.5 * (G + G.adjoint())).eval();
        Eigen::SelfAdjointEigenSolver<Dense> es(G);
        const auto& ev = es.eigenvalues();
        const Dense& U = es.eigenvectors();
        const double top = std::max(ev.maxCoeff(), 0.0);
        Dense F = Dense::Zero(p, p);
        Dense Wn(W.rows(), p);
        // Process strong directions first so replacements can orthogonalize against them.
        for (Eigen::Index jj = p - 1; jj >= 0; --jj) {
            if (ev[jj] > 1e-24 * top && ev[jj] > 0.0) {
                const double s = std::sqrt(ev[jj]);
                Wn.col(jj) = W * U.col(jj) / s;
                F.row(jj) = s * U.col(jj).adjoint();
            } else {
                Dense v(W.rows(), 1);
                for (Eigen::Index i = 0; i < v.rows(); ++i) v(i, 0) = random_scalar<Scalar>(rng);
                project(v);
                for (int rep = 0; rep < 2; ++rep) {
                    if (used > 0) v -= basis.leftCols(used) * (basis.leftCols(used).adjoint() * (B * v));
                    for (Eigen::Index k = p - 1; k > jj; --k) v -= Wn.col(k) * (Wn.col(k).adjoint() * (B * v));
                }
                v /= std::sqrt(std::abs((v.adjoint() * (B * v))(0, 0)));
                Wn.col(jj) = v;
                F.row(jj).setZero();
            }
        }
        W = Wn;
        R = (F * R).eval();
    }
    return R;
}

template <class Scalar>
EigenSolution lanczos(const Eigen::SparseMatrix<Scalar>& A, const Eigen::SparseMatrix<Scalar>& B, int count,
                      const SparseSolveOptions& opt,
                      const std::optional<Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>>& constraint) {
    using Sparse = Eigen::SparseMatrix<Scalar>;
    using Dense = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    const Eigen::Index n = A.rows();
    const int p = opt.block_size;
    const Eigen::Index m_max =
        std::min<Eigen::Index>(n, opt.max_basis > 0 ? opt.max_basis : std::max(3 * count + 6 * p, 48));
    if (m_max < count + 2 * p) throw NumericError("Lanczos basis too small for the requested count");

    const Sparse K = A - opt.shift * B;
    SparseCholesky<Scalar> chol(K);

    // P x = x - C (Cb^H x) with Cb = B C (C^H B C)^{-1}.
    Dense Cb;
    if (constraint) {
        const Dense BC = B * (*constraint);
        const Dense G = constraint->adjoint() * BC;
        Cb = BC * G.inverse().adjoint();
    }
    auto project = [&](Dense& X) {
        if (constraint) X -= *constraint * (Cb.adjoint() * X);
    };

    std::mt19937 rng(opt.seed);
    Dense V(n, m_max);
    Dense T = Dense::Zero(m_max, m_max);

    Dense W(n, p);
    for (Eigen::Index j = 0; j < p; ++j)
        for (Eigen::Index i = 0; i < n; ++i) W(i, j) = random_scalar<Scalar>(rng);
    project(W);
    b_orthonormalize<Scalar>(W, B, V, 0, project, rng);
    V.leftCols(p) = W;
    Eigen::Index used = p;  // columns of V in use
    Eigen::Index cur = 0;   // first column of the newest block
    Eigen::Index cur_size = p;

    Eigen::VectorXd theta;
    Dense S;
    Dense X, R;
    for (int restart = 0;; ++restart) {
        bool converged = false;
        while (true) {
            X = chol.solve(B * V.middleCols(cur, cur_size));
            project(X);
            Dense H = V.leftCols(used).adjoint() * (B * X);
            X -= V.leftCols(used) * H;
            const Dense H2 = V.leftCols(used).adjoint() * (B * X);
            X -= V.leftCols(used) * H2;
            H += H2;
            T.block(0, cur, used, cur_size) = H;
            T.block(cur, 0, cur_size, used) = H.adjoint();

            Dense Tk = T.topLeftCorner(used, used);
            Tk = (0.5 * (Tk + Tk.adjoint())).eval();
            Eigen::SelfAdjointEigenSolver<Dense> es(Tk);
            theta = es.eigenvalues().reverse();
            S = es.eigenvectors().rowwise().reverse();

            R = b_orthonormalize<Scalar>(X, B, V, used, project, rng);
            int nconv = 0;
            for (int i = 0; i < count && i < theta.size(); ++i) {
                const double res = (R * S.block(cur, i, cur_size, 1)).norm();
                if (res <= opt.tolerance * std::abs(theta[i])) ++nconv;
                else break;
            }
            if (nconv >= count) {
                converged = true;
                break;
            }
            if (used + X.cols() > m_max) break;
            const Eigen::Index bs = X.cols();
            V.middleCols(used, bs) = X;
            T.block(used, cur, bs, cur_size) = R;
            T.block(cur, used, cur_size, bs) = R.adjoint();
            cur = used;
            cur_size = bs;
            used += bs;
        }
        if (converged) break;
        if (restart == opt.max_restarts) throw NumericError("block Lanczos did not converge");

        // Thick restart: leading Ritz vectors plus the pending residual block.
        const Eigen::Index keep =
            std::min<Eigen::Index>(m_max - 2 * p, std::max<Eigen::Index>(count + p, used / 2));
        const Dense Y = V.leftCols(used) * S.leftCols(keep);
        const Dense coupling = R * S.block(cur, 0, cur_size, keep);
        T.setZero();
        V.leftCols(keep) = Y;
        for (Eigen::Index i = 0; i < keep; ++i) T(i, i) = theta[i];
        const Eigen::Index bs = X.cols();
        V.middleCols(keep, bs) = X;
        T.block(keep, 0, bs, keep) = coupling;
        T.block(0, keep, keep, bs) = coupling.adjoint();
        cur = keep;
        cur_size = bs;
        used = keep + bs;
    }

    const Dense Xr = V.leftCols(used) * S.leftCols(count);
    std::vector<int> order(count);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) { return theta[a] > theta[b]; });
    EigenSolution out;
    out.eigenvalues.resize(count);
    out.eigenvectors.resize(n, count);
    for (int i = 0; i < count; ++i) {
        out.eigenvalues[i] = opt.shift + 1.0 / theta[order[i]];
        out.eigenvectors.col(i) = Xr.col(order[i]).template cast<cplx>();
    }
    out.residual_norms.resize(count);
    const Dense AX = A * Xr, BX = B * Xr;
    for (int i = 0; i < count; ++i) {
        const int o = order[i];
        out.residual_norms[i] = (AX.col(o) - out.eigenvalues[i] * BX.col(o)).norm() / Xr.col(o).norm();
    }
    out.deflated_dim = constraint ? static_cast<int>(constraint->cols()) : 0;
    return out;
}

template <class Scalar>
bool is_real(const Eigen::SparseMatrix<Scalar>& a) {
    if constexpr (std::is_same_v<Scalar, double>) return true;
    else {
        for (Eigen::Index i = 0; i < a.nonZeros(); ++i)
            if (a.valuePtr()[i].imag() != 0.0) return false;
        return true;
    }
}

} // namespace detail

/// Lowest `count` eigenpairs of the sparse Hermitian pencil (A, B) by block
/// shift-invert Lanczos. Purely real pencils (alpha in {0, pi}^3) are solved
/// in real arithmetic.
inline EigenSolution solve_sparse_ghep(const CSparse& A, const CSparse& B, int count,
                                       const SparseSolveOptions& opt = {}) {
    if (A.rows() != A.cols() || B.rows() != A.rows()) throw NumericError("pencil dimensions disagree");
    count = static_cast<int>(std::min<Eigen::Index>(count, A.rows()));
    if (count <= 0) return {};
    EigenSolution out;
    const bool real = detail::is_real(A) && detail::is_real(B) &&
                      (!opt.constraint || opt.constraint->imag().cwiseAbs().maxCoeff() == 0.0);
    if (real) {
        std::optional<RMatrix> c;
        if (opt.constraint) c = opt.constraint->real();
        const RSparse Ar = A.real(), Br = B.real();
        out = detail::lanczos<double>(Ar, Br, count, opt, c);
    } else {
        out = detail::lanczos<cplx>(A, B, count, opt, opt.constraint);
    }
    detail::check_residuals(A, B, out, solver_tolerance);
    return out;
}

inline EigenSolution solve_sparse_ghep(const RSparse& A, const RSparse& B, int count,
                                       const SparseSolveOptions& opt = {}) {
    count = static_cast<int>(std::min<Eigen::Index>(count, A.rows()));
    if (count <= 0) return {};
    std::optional<RMatrix> c;
    if (opt.constraint) c = opt.constraint->real();
    EigenSolution out = detail::lanczos<double>(A, B, count, opt, c);
    detail::check_residuals(A, B, out, solver_tolerance);
    return out;
}

} // namespace phonon
