#pragma once

// Bloch-periodic trilinear (Q1) finite elements on a structured periodic hex
// grid of the unit cell. Every element lies either in D or in Y \ D, so the
// split forms are exact sums of element contributions and their kernels
// reproduce the rigid-in-D / rigid-outside-D subspaces exactly.
//
// Spheres use a mapped "cubed-sphere" grid whose interface nodes lie on the
// sphere; voxel inclusions use the Cartesian grid of the voxel partition.

#include "phonon/crystal.hpp"
#include "phonon/pencil.hpp"
#include "phonon/types.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

namespace phonon {

/// Parameter coordinates of one periodic axis: nodes.size() == cells + 1 and
/// nodes.back() == nodes.front() + 1.
struct GridAxis {
    std::vector<double> nodes;

    [[nodiscard]] int cells() const { return static_cast<int>(nodes.size()) - 1; }
    [[nodiscard]] double width(int i) const { return nodes[i + 1] - nodes[i]; }
    [[nodiscard]] double center(int i) const { return 0.5 * (nodes[i] + nodes[i + 1]); }
};

inline GridAxis uniform_axis(int cells, double start = 0.0) {
    if (cells < 3) throw ValidationError("a periodic grid axis needs at least 3 cells");
    GridAxis a;
    for (int i = 0; i <= cells; ++i) a.nodes.push_back(start + double(i) / cells);
    return a;
}

/// Map from parameter space onto the cell for a sphere of radius a centred
/// at c. With u = p - c in [-1/2, 1/2]^3, s = 2 |u|_inf and q = u / |u|_inf:
///   s <= s_D:  x = c + a r ((1 - r) kappa q + r q / |q|),  r = s / s_D
///   s >= s_D:  x = c + (1 - t) a q / |q| + t q / 2,         t = (s - s_D) / (1 - s_D)
/// The parameter cube s <= s_D maps onto the ball and the cell boundary s = 1
/// is fixed, so the map commutes with lattice translations.
struct SphereMap {
    Vec3 center;
    double radius = 0.2;
    double s_d = 0.4;
    double kappa = 0.75;

    [[nodiscard]] Vec3 operator()(const Vec3& p) const {
        const Vec3 u = p - center;
        const double m = u.cwiseAbs().maxCoeff();
        if (m == 0.0) return center;
        const double s = 2.0 * m;
        const Vec3 q = u / m;
        const Vec3 qh = q.normalized();
        if (s <= s_d) {
            const double r = s / s_d;
            return center + radius * r * ((1.0 - r) * kappa * q + r * qh);
        }
        const double t = (s - s_d) / (1.0 - s_d);
        return center + (1.0 - t) * radius * qh + 0.5 * t * q;
    }
};

struct HexGrid {
    std::array<GridAxis, 3> axes;   // parameter coordinates
    std::optional<SphereMap> map;   // identity when empty

    [[nodiscard]] std::array<int, 3> cells() const { return {axes[0].cells(), axes[1].cells(), axes[2].cells()}; }
    [[nodiscard]] Eigen::Index num_nodes() const {
        return static_cast<Eigen::Index>(axes[0].cells()) * axes[1].cells() * axes[2].cells();
    }
    [[nodiscard]] Eigen::Index node(int i, int j, int l) const {
        return (static_cast<Eigen::Index>(i) * axes[1].cells() + j) * axes[2].cells() + l;
    }
    /// Parameter point of grid index (i, j, l), indices in [0, cells].
    [[nodiscard]] Vec3 parameter(int i, int j, int l) const {
        return {axes[0].nodes[i], axes[1].nodes[j], axes[2].nodes[l]};
    }
    /// Physical position of grid index (i, j, l), indices in [0, cells].
    [[nodiscard]] Vec3 position(int i, int j, int l) const {
        const Vec3 p = parameter(i, j, l);
        return map ? (*map)(p) : p;
    }
};

struct FEGridOptions {
    int cells_across = 12;    // cells across the inclusion (sphere) or per voxel row multiple
    int exterior_cells = 0;   // sphere grids: cells from the sphere to the cell face; 0 -> automatic
    bool lumped_mass = false;  // row-sum (diagonal) mass instead of consistent
};

/// Sphere: cubed-sphere grid with `cells_across` cells across the parameter
/// cube of D. Voxel set: the voxel partition refined `cells_across / 12 + 1`
/// times per axis (at least once).
inline HexGrid make_grid(const InclusionGeometry& geom, const FEGridOptions& opt) {
    HexGrid g;
    if (opt.cells_across < 2) throw ValidationError("fe.cells_across must be at least 2");
    if (geom.is_sphere()) {
        const Sphere& s = geom.sphere();
        SphereMap m{s.center, s.radius, 2.0 * s.radius, 0.75};
        if (!(m.s_d < 1.0)) throw ValidationError("sphere does not fit in the unit cell");
        const int nd = opt.cells_across;
        const double h = m.s_d / nd;
        const int ne = opt.exterior_cells > 0
                           ? opt.exterior_cells
                           : std::max(2, static_cast<int>(std::ceil((0.5 - s.radius) / (2.5 * h))));
        for (int d = 0; d < 3; ++d) {
            GridAxis a;
            const double c = s.center[d];
            for (int i = 0; i < ne; ++i) a.nodes.push_back(c - 0.5 + (0.5 - 0.5 * m.s_d) * i / ne);
            for (int i = 0; i < nd; ++i) a.nodes.push_back(c - 0.5 * m.s_d + m.s_d * i / nd);
            for (int i = 0; i < ne; ++i) a.nodes.push_back(c + 0.5 * m.s_d + (0.5 - 0.5 * m.s_d) * i / ne);
            a.nodes.push_back(c + 0.5);
            g.axes[d] = a;
        }
        g.map = m;
        return g;
    }
    const VoxelSet& v = geom.voxels();
    const int refine = std::max(1, opt.cells_across / 12 + 1);
    for (int d = 0; d < 3; ++d) g.axes[d] = uniform_axis(v.resolution[d] * refine);
    return g;
}

enum class NodeRole : std::uint8_t { inclusion_interior, interface, exterior };

namespace fe {

/// Q1 Lame stiffness (24x24, dof = 3 * local_node + component) and scalar mass
/// (8x8) of a trilinear hexahedron; local node index = 4 cx + 2 cy + cz.
struct ElementMatrices {
    Eigen::Matrix<double, 24, 24> stiffness;
    Eigen::Matrix<double, 8, 8> mass;
};

inline ElementMatrices q1_element(const std::array<Vec3, 8>& x, double lambda, double mu, bool lumped = true) {
    ElementMatrices em;
    em.stiffness.setZero();
    em.mass.setZero();
    const double g = 1.0 / std::sqrt(3.0);
    const double pts[2] = {0.5 * (1.0 - g), 0.5 * (1.0 + g)};
    Eigen::Matrix<double, 6, 6> C = Eigen::Matrix<double, 6, 6>::Zero();
    C.topLeftCorner<3, 3>().setConstant(lambda);
    for (int d = 0; d < 3; ++d) {
        C(d, d) += 2.0 * mu;
        C(d + 3, d + 3) = mu;
    }
    for (double sx : pts)
        for (double sy : pts)
            for (double sz : pts) {
                const double s[3] = {sx, sy, sz};
                Eigen::Matrix<double, 8, 1> N;
                Eigen::Matrix<double, 8, 3> dNr;
                for (int a = 0; a < 8; ++a) {
                    const int c[3] = {(a >> 2) & 1, (a >> 1) & 1, a & 1};
                    double f[3], df[3];
                    for (int d = 0; d < 3; ++d) {
                        f[d] = c[d] ? s[d] : 1.0 - s[d];
                        df[d] = c[d] ? 1.0 : -1.0;
                    }
                    N[a] = f[0] * f[1] * f[2];
                    dNr(a, 0) = df[0] * f[1] * f[2];
                    dNr(a, 1) = f[0] * df[1] * f[2];
                    dNr(a, 2) = f[0] * f[1] * df[2];
                }
                Mat3 J = Mat3::Zero();  // J(i, r) = dx_i / ds_r
                for (int a = 0; a < 8; ++a) J += x[a] * dNr.row(a);
                const double det = J.determinant();
                if (!(det > 0.0)) throw NumericError("inverted or degenerate hexahedral element");
                const Eigen::Matrix<double, 8, 3> dN = dNr * J.inverse();
                const double w = det / 8.0;
                Eigen::Matrix<double, 6, 24> B = Eigen::Matrix<double, 6, 24>::Zero();
                for (int a = 0; a < 8; ++a) {
                    B(0, 3 * a) = dN(a, 0);
                    B(1, 3 * a + 1) = dN(a, 1);
                    B(2, 3 * a + 2) = dN(a, 2);
                    B(3, 3 * a + 1) = dN(a, 2);
                    B(3, 3 * a + 2) = dN(a, 1);
                    B(4, 3 * a) = dN(a, 2);
                    B(4, 3 * a + 2) = dN(a, 0);
                    B(5, 3 * a) = dN(a, 1);
                    B(5, 3 * a + 1) = dN(a, 0);
                }
                em.stiffness.noalias() += w * B.transpose() * C * B;
                em.mass.noalias() += w * N * N.transpose();
            }
    if (lumped) {
        const Eigen::Matrix<double, 8, 1> d = em.mass.rowwise().sum();
        em.mass = d.asDiagonal();
    }
    return em;
}

/// Column-major sparsity pattern coupling every node with its 27 grid
/// neighbours (3x3 dof blocks).
inline CSparse pattern(const HexGrid& grid) {
    const auto n = grid.cells();
    const Eigen::Index dim = 3 * grid.num_nodes();
    CSparse s(dim, dim);
    std::vector<Eigen::Index> nbrs;
    Eigen::VectorXi per_col(dim);
    auto neighbours = [&](int i, int j, int l) {
        nbrs.clear();
        for (int di = -1; di <= 1; ++di)
            for (int dj = -1; dj <= 1; ++dj)
                for (int dl = -1; dl <= 1; ++dl)
                    nbrs.push_back(grid.node((i + di + n[0]) % n[0], (j + dj + n[1]) % n[1], (l + dl + n[2]) % n[2]));
        std::sort(nbrs.begin(), nbrs.end());
        nbrs.erase(std::unique(nbrs.begin(), nbrs.end()), nbrs.end());
    };
    for (int i = 0; i < n[0]; ++i)
        for (int j = 0; j < n[1]; ++j)
            for (int l = 0; l < n[2]; ++l) {
                neighbours(i, j, l);
                const Eigen::Index p = grid.node(i, j, l);
                for (int c = 0; c < 3; ++c) per_col[3 * p + c] = static_cast<int>(3 * nbrs.size());
            }
    s.reserve(per_col);
    for (int i = 0; i < n[0]; ++i)
        for (int j = 0; j < n[1]; ++j)
            for (int l = 0; l < n[2]; ++l) {
                neighbours(i, j, l);
                const Eigen::Index p = grid.node(i, j, l);
                for (int c = 0; c < 3; ++c)
                    for (Eigen::Index q : nbrs)
                        for (int r = 0; r < 3; ++r) s.insert(3 * q + r, 3 * p + c) = cplx(0.0);
            }
    s.makeCompressed();
    return s;
}

inline Eigen::Index find_entry(const CSparse& s, Eigen::Index row, Eigen::Index col) {
    const auto* outer = s.outerIndexPtr();
    const auto* inner = s.innerIndexPtr();
    const auto* first = inner + outer[col];
    const auto* last = inner + outer[col + 1];
    const auto* it = std::lower_bound(first, last, static_cast<int>(row));
    return static_cast<Eigen::Index>(it - inner);
}

} // namespace fe

/// e^{i a}, exact at multiples of pi / 2 so that symmetric points stay real.
inline cplx bloch_phase(double a) {
    if (a == 0.0) return {1.0, 0.0};
    if (a == pi || a == -pi) return {-1.0, 0.0};
    if (a == 0.5 * pi) return {0.0, 1.0};
    if (a == -0.5 * pi) return {0.0, -1.0};
    return std::polar(1.0, a);
}

/// Discretization data shared by all matrices assembled on one grid.
struct HexFEBasis {
    HexGrid grid;
    QuasiMomentum alpha;
    std::vector<std::uint8_t> element_in_inclusion;  // cell (i, j, l) stored at grid.node(i, j, l)
    std::vector<NodeRole> node_role;
    std::vector<double> lumped_node_mass;            // unit-density lumped mass per node, in D and outside

    [[nodiscard]] Eigen::Index dim() const { return 3 * grid.num_nodes(); }

    /// Dof indices whose node has the given role, ascending.
    [[nodiscard]] std::vector<Eigen::Index> dofs_with_role(NodeRole role) const {
        std::vector<Eigen::Index> out;
        for (Eigen::Index p = 0; p < static_cast<Eigen::Index>(node_role.size()); ++p)
            if (node_role[p] == role)
                for (int c = 0; c < 3; ++c) out.push_back(3 * p + c);
        return out;
    }
    [[nodiscard]] std::size_t inclusion_elements() const {
        return static_cast<std::size_t>(std::count(element_in_inclusion.begin(), element_in_inclusion.end(), 1));
    }
    /// Coefficients of the three constant translation fields (columns).
    [[nodiscard]] CMatrix translations() const {
        CMatrix c = CMatrix::Zero(dim(), 3);
        for (Eigen::Index p = 0; p < grid.num_nodes(); ++p)
            for (int d = 0; d < 3; ++d) c(3 * p + d, d) = 1.0;
        return c;
    }
};

struct HexFEPencil : SparsePencil {
    HexFEBasis basis;
    double inclusion_volume = 0.0;  // |D_h|
    double cell_volume = 0.0;       // should equal 1
};

namespace detail {

inline std::vector<std::uint8_t> classify_elements(const InclusionGeometry& geom, const HexGrid& grid) {
    const auto n = grid.cells();
    std::vector<std::uint8_t> in(static_cast<std::size_t>(grid.num_nodes()), 0);
    for (int i = 0; i < n[0]; ++i)
        for (int j = 0; j < n[1]; ++j)
            for (int l = 0; l < n[2]; ++l) {
                const Vec3 pc(grid.axes[0].center(i), grid.axes[1].center(j), grid.axes[2].center(l));
                bool inside;
                if (grid.map) {
                    const Vec3 u = pc - grid.map->center;
                    inside = 2.0 * u.cwiseAbs().maxCoeff() < grid.map->s_d;
                } else {
                    inside = geom.contains(pc);
                }
                in[grid.node(i, j, l)] = inside ? 1 : 0;
            }
    return in;
}

} // namespace detail

/// Assemble the four split matrices on a grid.
inline HexFEPencil assemble_fe(const InclusionGeometry& geom, const Material& mat, const HexGrid& grid,
                               const QuasiMomentum& alpha, bool lumped_mass = false) {
    HexFEPencil out;
    out.basis.grid = grid;
    out.basis.alpha = alpha;
    const auto n = grid.cells();
    for (int d = 0; d < 3; ++d)
        if (n[d] < 3) throw ValidationError("FE grid needs at least 3 cells per axis");
    const Eigen::Index nodes = grid.num_nodes();
    out.basis.element_in_inclusion = detail::classify_elements(geom, grid);

    out.basis.node_role.assign(static_cast<std::size_t>(nodes), NodeRole::exterior);
    for (int i = 0; i < n[0]; ++i)
        for (int j = 0; j < n[1]; ++j)
            for (int l = 0; l < n[2]; ++l) {
                int in = 0;
                for (int a = 0; a < 8; ++a) {
                    const int ci = (i - ((a >> 2) & 1) + n[0]) % n[0];
                    const int cj = (j - ((a >> 1) & 1) + n[1]) % n[1];
                    const int cl = (l - (a & 1) + n[2]) % n[2];
                    in += out.basis.element_in_inclusion[grid.node(ci, cj, cl)];
                }
                out.basis.node_role[grid.node(i, j, l)] =
                    in == 8 ? NodeRole::inclusion_interior : (in == 0 ? NodeRole::exterior : NodeRole::interface);
            }

    const CSparse pat = fe::pattern(grid);
    out.k_in = pat;
    out.k_out = pat;
    out.m_in = pat;
    out.m_out = pat;
    out.basis.lumped_node_mass.assign(static_cast<std::size_t>(nodes), 0.0);

    std::array<Eigen::Index, 24> dofs{};
    std::array<cplx, 24> phase{};
    std::array<Vec3, 8> x{};
    const cplx ph[3] = {bloch_phase(alpha[0]), bloch_phase(alpha[1]), bloch_phase(alpha[2])};
    for (int i = 0; i < n[0]; ++i)
        for (int j = 0; j < n[1]; ++j)
            for (int l = 0; l < n[2]; ++l) {
                for (int a = 0; a < 8; ++a) {
                    const int c[3] = {(a >> 2) & 1, (a >> 1) & 1, a & 1};
                    const int idx[3] = {i + c[0], j + c[1], l + c[2]};
                    x[a] = grid.position(idx[0], idx[1], idx[2]);
                    cplx p(1.0);
                    int w[3];
                    for (int d = 0; d < 3; ++d) {
                        w[d] = idx[d] == n[d] ? 0 : idx[d];
                        if (idx[d] == n[d]) p *= ph[d];
                    }
                    const Eigen::Index nd = grid.node(w[0], w[1], w[2]);
                    for (int r = 0; r < 3; ++r) {
                        dofs[3 * a + r] = 3 * nd + r;
                        phase[3 * a + r] = p;
                    }
                }
                const auto em = fe::q1_element(x, mat.lambda1, mat.mu1, lumped_mass);
                const bool in = out.basis.element_in_inclusion[grid.node(i, j, l)] != 0;
                const double vol = em.mass.sum();
                out.cell_volume += vol;
                if (in) out.inclusion_volume += vol;
                CSparse& K = in ? out.k_in : out.k_out;
                CSparse& M = in ? out.m_in : out.m_out;
                cplx* kv = K.valuePtr();
                cplx* mv = M.valuePtr();
                for (int b = 0; b < 24; ++b)
                    for (int a = 0; a < 24; ++a) {
                        const Eigen::Index e = fe::find_entry(K, dofs[a], dofs[b]);
                        const cplx f = std::conj(phase[a]) * phase[b];
                        kv[e] += f * em.stiffness(a, b);
                        if (a % 3 == b % 3) mv[e] += f * em.mass(a / 3, b / 3);
                    }
            }
    out.k_in.prune(cplx(0.0));
    out.m_in.prune(cplx(0.0));
    out.m_out.prune(cplx(0.0));
    return out;
}

inline HexFEPencil assemble_fe(const CrystalSpec& spec, const FEGridOptions& opt, const QuasiMomentum& alpha) {
    return assemble_fe(spec.geometry, spec.material, make_grid(spec.geometry, opt), alpha, opt.lumped_mass);
}

} // namespace phonon
