#pragma once

// Staggered-grid (MAC) finite differences for the Dirichlet Lame problem
//   -L u = rho1 delta u in D,  u = 0 on the boundary of D.
// Displacement components live on cell faces; normal strains on cells and
// shear strains on edges. The discrete energy is a sum of squares, so the
// stiffness is symmetric positive definite and the mass is diagonal.

#include "phonon/crystal.hpp"
#include "phonon/eigensolve.hpp"
#include "phonon/types.hpp"

#include <array>
#include <vector>

namespace phonon {

struct FDDirichletResult {
    RVector delta;              // ascending
    std::vector<CVec3> means;   // integral of rho1 * psi_j over D
    Eigen::Index dofs = 0;
    int cells = 0;
};

/// Lowest `count` Dirichlet eigenvalues on a grid with `cells` cells across
/// each side of the inclusion bounding box.
inline FDDirichletResult fd_dirichlet(const InclusionGeometry& geom, const Material& mat, int count, int cells) {
    if (cells < 4) throw ValidationError("finite-difference grid needs at least 4 cells per side");
    const auto [lo, hi] = geom.bounding_box();
    const Vec3 h = (hi - lo) / cells;
    const double vol = h.prod();
    const int n = cells;

    auto cell_in = [&](int i, int j, int l) {
        if (i < 0 || j < 0 || l < 0 || i >= n || j >= n || l >= n) return false;
        return geom.contains(lo + Vec3((i + 0.5) * h[0], (j + 0.5) * h[1], (l + 0.5) * h[2]));
    };
    std::vector<std::uint8_t> in(static_cast<std::size_t>(n) * n * n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int l = 0; l < n; ++l) in[(static_cast<std::size_t>(i) * n + j) * n + l] = cell_in(i, j, l);
    auto inside = [&](int i, int j, int l) {
        if (i < 0 || j < 0 || l < 0 || i >= n || j >= n || l >= n) return false;
        return in[(static_cast<std::size_t>(i) * n + j) * n + l] != 0;
    };

    // Face (d, i, j, l): component d, index i along d in [0, n], the other two
    // cell indices in [0, n). Stored with a (n + 1) * n * n layout per component.
    const std::size_t per = static_cast<std::size_t>(n + 1) * n * n;
    std::vector<int> id(3 * per, -1);
    auto face_slot = [&](int d, std::array<int, 3> c) -> int* {
        // c[d] in [0, n], others in [0, n)
        for (int e = 0; e < 3; ++e)
            if (c[e] < 0 || c[e] > (e == d ? n : n - 1)) return nullptr;
        const int a = c[d], b = c[(d + 1) % 3], e = c[(d + 2) % 3];
        return &id[d * per + (static_cast<std::size_t>(a) * n + b) * n + e];
    };
    int dofs = 0;
    for (int d = 0; d < 3; ++d)
        for (int i = 0; i <= n; ++i)
            for (int j = 0; j < n; ++j)
                for (int l = 0; l < n; ++l) {
                    std::array<int, 3> c{};
                    c[d] = i;
                    c[(d + 1) % 3] = j;
                    c[(d + 2) % 3] = l;
                    std::array<int, 3> lower = c;
                    lower[d] -= 1;
                    if (inside(c[0], c[1], c[2]) && inside(lower[0], lower[1], lower[2])) *face_slot(d, c) = dofs++;
                }
    if (dofs == 0) throw ValidationError("inclusion too small for the finite-difference grid");

    std::vector<Eigen::Triplet<double>> trip;
    using Row = std::vector<std::pair<int, double>>;
    auto add_square = [&](const Row& r, double w) {
        for (const auto& [a, ca] : r)
            for (const auto& [b, cb] : r) trip.emplace_back(a, b, w * ca * cb);
    };
    auto face = [&](int d, std::array<int, 3> c) {
        int* s = face_slot(d, c);
        return s ? *s : -1;
    };
    auto push = [](Row& r, int dof, double coef) {
        if (dof >= 0) r.emplace_back(dof, coef);
    };

    const double lam = mat.lambda1, mu = mat.mu1;
    // Normal strains on cells.
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int l = 0; l < n; ++l) {
                if (!inside(i, j, l)) continue;
                std::array<Row, 3> e;
                Row div;
                for (int d = 0; d < 3; ++d) {
                    std::array<int, 3> c{i, j, l};
                    const int f0 = face(d, c);
                    c[d] += 1;
                    const int f1 = face(d, c);
                    push(e[d], f1, 1.0 / h[d]);
                    push(e[d], f0, -1.0 / h[d]);
                    div.insert(div.end(), e[d].begin(), e[d].end());
                }
                add_square(div, lam * vol);
                for (int d = 0; d < 3; ++d) add_square(e[d], 2.0 * mu * vol);
            }
    // Shear strains on edges: eps_ab = (d_b u_a + d_a u_b) / 2 for a < b.
    for (int a = 0; a < 3; ++a)
        for (int b = a + 1; b < 3; ++b) {
            const int t = 3 - a - b;  // edge direction
            for (int ia = 0; ia <= n; ++ia)
                for (int ib = 0; ib <= n; ++ib)
                    for (int it = 0; it < n; ++it) {
                        Row r;
                        // u_a faces: index ia along a, cells ib-1 / ib along b.
                        for (int s = 0; s < 2; ++s) {
                            std::array<int, 3> c{};
                            c[a] = ia;
                            c[b] = ib - 1 + s;
                            c[t] = it;
                            push(r, face(a, c), (s ? 0.5 : -0.5) / h[b]);
                        }
                        for (int s = 0; s < 2; ++s) {
                            std::array<int, 3> c{};
                            c[b] = ib;
                            c[a] = ia - 1 + s;
                            c[t] = it;
                            push(r, face(b, c), (s ? 0.5 : -0.5) / h[a]);
                        }
                        if (!r.empty()) add_square(r, 4.0 * mu * vol);
                    }
        }

    RSparse A(dofs, dofs), B(dofs, dofs);
    A.setFromTriplets(trip.begin(), trip.end());
    std::vector<Eigen::Triplet<double>> mt;
    for (int k = 0; k < dofs; ++k) mt.emplace_back(k, k, mat.rho1 * vol);
    B.setFromTriplets(mt.begin(), mt.end());

    SparseSolveOptions opt;
    opt.block_size = 4;
    const EigenSolution s = solve_sparse_ghep(A, B, count, opt);

    // Component of each dof for the mean vectors.
    std::vector<int> comp(dofs);
    for (int d = 0; d < 3; ++d)
        for (std::size_t q = 0; q < per; ++q)
            if (id[d * per + q] >= 0) comp[id[d * per + q]] = d;

    FDDirichletResult out;
    out.delta = s.eigenvalues;
    out.dofs = dofs;
    out.cells = cells;
    for (Eigen::Index j = 0; j < s.eigenvalues.size(); ++j) {
        CVec3 m = CVec3::Zero();
        for (int k = 0; k < dofs; ++k) m[comp[k]] += mat.rho1 * vol * s.eigenvectors(k, j);
        out.means.push_back(m);
    }
    return out;
}

} // namespace phonon
