#pragma once

// Power series in z = 1/k about the high-contrast limit: isolation distance,
// radii of convergence, truncation bounds, and the first-order coefficient
// from the exterior (Neumann-data) energy.

#include "phonon/crystal.hpp"
#include "phonon/dispersion.hpp"
#include "phonon/eigensolve.hpp"
#include "phonon/hex_fe.hpp"
#include "phonon/limit.hpp"
#include "phonon/structural.hpp"
#include "phonon/types.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace phonon {

/// Half the distance from values[j-1] to the nearest different value. A
/// repeated value at j is an error.
inline double isolation_distance(std::vector<double> values, int j) {
    if (j < 1 || j > static_cast<int>(values.size())) throw ValidationError("branch index out of range");
    const double v = values[j - 1];
    std::sort(values.begin(), values.end());
    double best = std::numeric_limits<double>::infinity();
    int copies = 0;
    for (double x : values) {
        if (std::abs(x - v) <= 1e-9 * std::max(1.0, std::abs(v))) {
            ++copies;
            continue;
        }
        best = std::min(best, std::abs(x - v));
    }
    if (copies > 1)
        throw ValidationError("limit value " + std::to_string(v) +
                              " is degenerate; use the mean of the eigenvalue group instead");
    if (!std::isfinite(best)) throw ValidationError("isolation distance needs at least two distinct values");
    return 0.5 * best;
}

/// Isolation of the cluster containing values[j-1] (members within rel_tol),
/// for symmetric inclusions where limit values come in groups.
inline double cluster_isolation_distance(std::vector<double> values, int j, double rel_tol = 1e-6) {
    if (j < 1 || j > static_cast<int>(values.size())) throw ValidationError("branch index out of range");
    const double v = values[j - 1];
    double best = std::numeric_limits<double>::infinity();
    for (double x : values)
        if (std::abs(x - v) > rel_tol * std::max(1.0, std::abs(v))) best = std::min(best, std::abs(x - v));
    if (!std::isfinite(best)) throw ValidationError("isolation distance needs at least two distinct values");
    return 0.5 * best;
}

struct RadiusEstimate {
    double d = 0.0;
    double tau_minus = 0.0;
    double z_star = 0.0;
    double r_star = 0.0;
    double k_threshold = 0.0;  // 1 / r_star
    std::string tau_source;    // "theta" or "computed"
};

namespace detail {
inline RadiusEstimate radius_common(double c, double d, double tau_minus, double rho_sup) {
    if (!(tau_minus > -0.5 && tau_minus < 0.5)) throw ValidationError("tau_minus must lie in (-1/2, 1/2)");
    if (!(d > 0.0)) throw ValidationError("isolation distance must be > 0");
    RadiusEstimate r;
    r.d = d;
    r.tau_minus = tau_minus;
    r.z_star = z_pole(tau_minus);
    r.r_star = c * d * std::abs(r.z_star) / (rho_sup / (0.5 - tau_minus) + c * d);
    r.k_threshold = 1.0 / r.r_star;
    return r;
}
} // namespace detail

/// r* = mu1 |alpha|^2 d |z*| / (rho_sup / (1/2 - tau-) + mu1 |alpha|^2 d).
inline RadiusEstimate radius_quasi(double alpha_norm2, double d, double tau_minus, double mu1, double rho_sup) {
    if (!(alpha_norm2 > 0.0)) throw ValidationError("quasi-periodic radius needs alpha != 0");
    return detail::radius_common(mu1 * alpha_norm2, d, tau_minus, rho_sup);
}

/// r* = 4 pi^2 mu1 d |z*| / (rho_sup / (1/2 - tau-) + 4 pi^2 mu1 d).
inline RadiusEstimate radius_periodic(double d, double tau_minus, double mu1, double rho_sup) {
    return detail::radius_common(4.0 * pi * pi * mu1, d, tau_minus, rho_sup);
}

/// Sphere closed forms with tau- = -1/4 and d = |gap| / 2.
inline double sphere_radius_quasi(double mu1, double alpha_norm2, double gap, double rho) {
    return mu1 * alpha_norm2 * gap / (8.0 * rho + 3.0 * mu1 * alpha_norm2 * gap);
}
inline double sphere_radius_periodic(double mu1, double gap, double rho) {
    return pi * pi * mu1 * gap / (2.0 * rho + 3.0 * pi * pi * mu1 * gap);
}

/// d |z|^{p+1} / ((r*)^p (r* - |z|)).
inline double truncation_bound(double d, double r_star, double z, int p) {
    const double az = std::abs(z);
    if (!(az < r_star)) throw ValidationError("|z| must be below the radius of convergence");
    return d * std::pow(az, p + 1) / (std::pow(r_star, p) * (r_star - az));
}

struct SeriesCoefficients {
    int j = 0;
    QuasiMomentum alpha;
    double xi0 = 0.0;              // delta_j
    double beta0 = 0.0;            // 1 / delta_j
    double xi_slope = 0.0;         // xi_j(k) = xi0 - xi_slope / k + O(1/k^2)
    double beta1 = 0.0;            // xi_slope / xi0^2
    double exterior_energy = 0.0;  // unit L2(Y) eigenfunction
    int cluster_size = 1;          // > 1: degenerate limit value, slope from the group matrix
};

/// First-order coefficient on the FE discretization. The Neumann data of the
/// Dirichlet eigenfunction phi enters as f = K_in phi - delta rho1 M_in phi
/// (zero on interior dofs); v solves K_out v = f on the interface and
/// exterior dofs, and the energy is f^H v. For a group of equal limit values
/// the slopes are the eigenvalues of G_ab = f_a^H K_out^{-1} f_b, largest for
/// the lowest branch.
inline SeriesCoefficients first_order_coefficient(const HexFEPencil& p, const Material& mat,
                                                  const DirichletSpectrum& d, int j, bool allow_cluster = true,
                                                  double cluster_tol = 1e-6) {
    if (p.basis.alpha.is_gamma()) throw ValidationError("the exterior problem is singular at alpha = 0");
    if (d.vectors.cols() < static_cast<Eigen::Index>(d.size()))
        throw ValidationError("Dirichlet spectrum lacks eigenvectors on this grid");
    if (j < 1 || j > static_cast<int>(d.size())) throw ValidationError("branch index out of range");
    const double delta = d.entries[j - 1].delta;
    std::vector<int> group;
    for (std::size_t i = 0; i < d.size(); ++i)
        if (std::abs(d.entries[i].delta - delta) <= cluster_tol * delta) group.push_back(static_cast<int>(i));
    if (group.size() > 1 && !allow_cluster)
        throw ValidationError("Dirichlet value " + std::to_string(delta) +
                              " is degenerate; use the mean of the eigenvalue group instead");
    const int first = group.front();
    const int pos = j - 1 - first;  // position of the branch inside its group

    const auto G = p.basis.dofs_with_role(NodeRole::interface);
    const auto E = p.basis.dofs_with_role(NodeRole::exterior);
    std::vector<Eigen::Index> ge = G;
    ge.insert(ge.end(), E.begin(), E.end());
    std::sort(ge.begin(), ge.end());

    const Eigen::Index m = static_cast<Eigen::Index>(group.size());
    CMatrix F(static_cast<Eigen::Index>(ge.size()), m);
    for (Eigen::Index a = 0; a < m; ++a) {
        // rho1 M_in phi^2 integrates to 1; rescale to unit L2(Y).
        const CVector phi = d.vectors.col(group[a]) * std::sqrt(d.rho1);
        const CVector f = p.k_in * phi - delta * mat.rho1 * (p.m_in * phi);
        for (std::size_t i = 0; i < ge.size(); ++i) F(static_cast<Eigen::Index>(i), a) = f[ge[i]];
    }
    const CSparse Kge = detail::submatrix(p.k_out, ge, ge);
    CMatrix V;
    if (detail::is_real(Kge) && F.imag().cwiseAbs().maxCoeff() == 0.0) {
        SparseCholesky<double> chol(RSparse(Kge.real()));
        V = chol.solve(RMatrix(F.real())).cast<cplx>();
    } else {
        SparseCholesky<cplx> chol(Kge);
        V = chol.solve(F);
    }
    CMatrix Gm = F.adjoint() * V;
    Gm = 0.5 * (Gm + Gm.adjoint()).eval();
    const RVector g = hermitian_eigenvalues(Gm);  // ascending

    SeriesCoefficients s;
    s.j = j;
    s.alpha = p.basis.alpha;
    s.xi0 = delta;
    s.beta0 = 1.0 / delta;
    s.cluster_size = static_cast<int>(m);
    s.exterior_energy = g[m - 1 - pos];
    s.xi_slope = s.exterior_energy / mat.rho1;
    s.beta1 = s.xi_slope / (delta * delta);
    return s;
}

/// Slope of xi at z = 0 from the quadratic through three (z, xi) samples.
inline double richardson_slope(const std::array<double, 3>& z, const std::array<double, 3>& xi) {
    // Derivative at 0 of the Lagrange interpolant, negated (xi = xi0 - slope z).
    double s = 0.0;
    for (int a = 0; a < 3; ++a) {
        double denom = 1.0, num = 0.0;
        for (int b = 0; b < 3; ++b)
            if (b != a) denom *= z[a] - z[b];
        // d/dz prod_{b != a} (z - z_b) at z = 0
        for (int b = 0; b < 3; ++b) {
            if (b == a) continue;
            double prod = 1.0;
            for (int c = 0; c < 3; ++c)
                if (c != a && c != b) prod *= -z[c];
            num += prod;
        }
        s += xi[a] * num / denom;
    }
    return -s;
}

struct SeriesRow {
    double k = 0.0;
    double z = 0.0;
    double xi_direct = 0.0;
    double xi_series = 0.0;
    double beta_error = 0.0;  // |1/xi_direct - (beta0 + z beta1)|
    double bound = 0.0;       // truncation_bound(d, r*, z, 1), NaN out of the disk
    bool in_disk = false;
};

struct SeriesComparison {
    SeriesCoefficients coeff;
    RadiusEstimate radius;
    std::vector<SeriesRow> rows;
};

/// Direct FE solves against the first-order series in beta = 1 / xi.
inline SeriesComparison series_vs_direct(const HexFEPencil& p, const Material& mat, const DirichletSpectrum& d,
                                         int j, const std::vector<double>& ks, double tau_minus,
                                         const std::string& tau_source) {
    SeriesComparison c;
    c.coeff = first_order_coefficient(p, mat, d, j);
    std::vector<double> betas;
    for (const auto& e : d.entries) betas.push_back(1.0 / e.delta);
    const double dist = cluster_isolation_distance(betas, j);
    c.radius = radius_quasi(p.basis.alpha.norm2(), dist, tau_minus, mat.mu1, mat.rho_sup());
    c.radius.tau_source = tau_source;
    for (double k : ks) {
        SeriesRow r;
        r.k = k;
        r.z = 1.0 / k;
        r.xi_direct = solve_bands(p, mat, k, j).xi[j - 1];
        r.xi_series = c.coeff.xi0 - c.coeff.xi_slope * r.z;
        r.beta_error = std::abs(1.0 / r.xi_direct - (c.coeff.beta0 + r.z * c.coeff.beta1));
        r.in_disk = r.z < c.radius.r_star;
        r.bound = r.in_disk ? truncation_bound(dist, c.radius.r_star, r.z, 1)
                            : std::numeric_limits<double>::quiet_NaN();
        c.rows.push_back(r);
    }
    return c;
}

} // namespace phonon
