#include "phonon/eigensolve.hpp"
#include "phonon/planewave.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace phonon;

namespace {
CrystalSpec sphere_spec() {
    CrystalSpec s;
    s.material = {1.0, 1.0, 1.0, 2.0, 1.0};
    s.geometry.shape = Sphere{{0.5, 0.5, 0.5}, 0.2};
    return s;
}
double max_abs(const CMatrix& a) { return a.cwiseAbs().maxCoeff(); }
CVector random_vector(Eigen::Index n, std::mt19937& rng) {
    std::normal_distribution<double> g;
    CVector u(n);
    for (Eigen::Index i = 0; i < n; ++i) u[i] = cplx(g(rng), g(rng));
    return u;
}
} // namespace

TEST(Assemble, HomogeneousBlocksDecouple) {
    const Material m{1.0, 1.0, 1.0, 1.0, 1.0};
    const QuasiMomentum a(pi, 0.5, -1.0);
    const PlaneWaveBasis b(1, a);
    CrystalSpec s;
    s.material = m;
    s.geometry.shape = Sphere{{0.5, 0.5, 0.5}, 0.2};
    const auto p = assemble(s, 1, a);
    const CMatrix K = p.stiffness(1.0);
    for (Eigen::Index w = 0; w < b.num_waves(); ++w) {
        const Vec3 xi = b.wavevector(w);
        const double q2 = xi.squaredNorm();
        const RVector ev = hermitian_eigenvalues(K.block(3 * w, 3 * w, 3, 3));
        EXPECT_NEAR(ev[0], q2, 1e-10 * q2);
        EXPECT_NEAR(ev[1], q2, 1e-10 * q2);
        EXPECT_NEAR(ev[2], 3.0 * q2, 1e-10 * q2);
    }
    CMatrix off = K;
    for (Eigen::Index w = 0; w < b.num_waves(); ++w) off.block(3 * w, 3 * w, 3, 3).setZero();
    EXPECT_LT(max_abs(off), 1e-12 * max_abs(K));
}

TEST(Assemble, EmptyInclusion) {
    PlaneWaveBasis b(1, QuasiMomentum(pi, 0, 0));
    IndicatorCoefficients chi;
    chi.cutoff_N = 1;
    chi.range = 2;
    chi.table.assign(125, 0.0);
    const auto p = assemble(b, chi, Material{});
    EXPECT_EQ(max_abs(p.k_in), 0.0);
    EXPECT_EQ(max_abs(p.m_in), 0.0);
    EXPECT_GT(max_abs(p.k_out), 0.0);
}

TEST(Assemble, CutoffMismatch) {
    const auto chi = sphere_coefficients(Sphere{{0.5, 0.5, 0.5}, 0.2}, 1);
    EXPECT_THROW(assemble(PlaneWaveBasis(2, QuasiMomentum(0, 0, 0)), chi, Material{}), ValidationError);
}

TEST(Assemble, HermitianAndSemidefinite) {
    const auto p = assemble(sphere_spec(), 2, QuasiMomentum(pi, 0, 0));
    for (const CMatrix* A : {&p.k_in, &p.k_out, &p.m_in, &p.m_out}) {
        EXPECT_LT(max_abs(*A - A->adjoint()), 1e-12 * max_abs(*A));
        const RVector ev = hermitian_eigenvalues(*A);
        EXPECT_GT(ev.minCoeff(), -1e-10 * ev.cwiseAbs().maxCoeff());
    }
}

TEST(Assemble, SplitIdentity) {
    const auto p = assemble(sphere_spec(), 2, QuasiMomentum(0.4, -1.1, 2.0));
    std::mt19937 rng(3);
    for (double k : {1.0, 7.5, 1e3}) {
        const CVector u = random_vector(p.dim(), rng);
        const cplx full = u.dot(p.stiffness(k) * u);
        const cplx split = k * u.dot(p.k_out * u) + u.dot(p.k_in * u);
        EXPECT_NEAR(std::abs(full - split), 0.0, 1e-12 * std::abs(full));
    }
}

// Max entrywise relative error of K_in against an n^3 midpoint-quadrature
// oracle, over entries above 1e-3 of the largest.
double k_in_quadrature_error(const CrystalSpec& spec, int N, int n) {
    const Material& mat = spec.material;
    const QuasiMomentum a(pi, 0.3, 0);
    const auto p = assemble(spec, N, a);
    const PlaneWaveBasis& b = p.basis;
    std::vector<Vec3> pts;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int l = 0; l < n; ++l) {
                const Vec3 x((i + 0.5) / n, (j + 0.5) / n, (l + 0.5) / n);
                if (spec.geometry.contains(x)) pts.push_back(x);
            }
    auto integral = [&](const Vec3& k) {
        cplx s = 0.0;
        for (const Vec3& x : pts) s += std::polar(1.0, two_pi * k.dot(x));
        return s / double(n) / double(n) / double(n);
    };
    double worst = 0.0;
    const double scale = max_abs(p.k_in);
    for (Eigen::Index tw = 0; tw < b.num_waves(); ++tw)
        for (Eigen::Index sw = 0; sw < b.num_waves(); ++sw) {
            const Vec3 xi = b.wavevector(sw), eta = b.wavevector(tw);
            const auto &ls = b.lattice(sw), &lt = b.lattice(tw);
            const cplx w = integral(Vec3(ls[0] - lt[0], ls[1] - lt[1], ls[2] - lt[2]));
            for (int pp = 0; pp < 3; ++pp)
                for (int q = 0; q < 3; ++q) {
                    const double s = mat.lambda1 * xi[q] * eta[pp] +
                                     mat.mu1 * ((pp == q ? xi.dot(eta) : 0.0) + xi[pp] * eta[q]);
                    const cplx oracle = s * w;
                    const cplx got = p.k_in(3 * tw + pp, 3 * sw + q);
                    if (std::abs(oracle) > 1e-3 * scale)
                        worst = std::max(worst, std::abs(got - oracle) / std::abs(oracle));
                }
        }
    return worst;
}

TEST(Assemble, InsideStiffnessAgainstQuadrature) {
    for (int N : {1, 2}) EXPECT_LT(k_in_quadrature_error(sphere_spec(), N, 32), 1e-2) << "N = " << N;
}

TEST(Assemble, InsideStiffnessQuadratureConverges) {
    const double e32 = k_in_quadrature_error(sphere_spec(), 1, 32);
    const double e128 = k_in_quadrature_error(sphere_spec(), 1, 128);
    EXPECT_LT(e128, 0.5 * e32);
}

TEST(InverseLameSymbol, Examples) {
    const Material m{};
    const Mat3 S = inverse_lame_symbol(Vec3(two_pi, 0, 0), m);
    Eigen::SelfAdjointEigenSolver<Mat3> es(S);
    EXPECT_NEAR(es.eigenvalues()[0], 0.0084434, 1e-7);
    EXPECT_NEAR(es.eigenvalues()[1], 0.0253303, 1e-7);
    EXPECT_NEAR(es.eigenvalues()[2], 0.0253303, 1e-7);
    EXPECT_THROW(inverse_lame_symbol(Vec3::Zero(), m), ValidationError);
}

TEST(InverseLameSymbol, LargestEigenvalueAndAlignment) {
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> u(-10, 10), l(-0.6, 5.0);
    for (int i = 0; i < 100; ++i) {
        Material m;
        m.mu1 = 0.5 + std::abs(u(rng));
        m.lambda1 = l(rng) * m.mu1;
        const Vec3 xi(u(rng), u(rng), u(rng));
        const Mat3 S = inverse_lame_symbol(xi, m);
        const double q2 = xi.squaredNorm();
        Eigen::SelfAdjointEigenSolver<Mat3> es(S);
        EXPECT_NEAR(es.eigenvalues()[2], 1.0 / (m.mu1 * q2), 1e-12 / (m.mu1 * q2));
        const double c = (m.lambda1 + m.mu1) / (m.lambda1 + 2.0 * m.mu1);
        EXPECT_LT((S * xi - (1.0 - c) / (m.mu1 * q2) * xi).norm(), 1e-12 * xi.norm() / (m.mu1 * q2));
    }
}

TEST(Poincare, QuasiPeriodic) {
    const auto spec = sphere_spec();
    std::mt19937 rng(5);
    for (const QuasiMomentum& a : {QuasiMomentum(pi, 0, 0), QuasiMomentum(0.3, -1.0, 2.0), QuasiMomentum(0.05, 0, 0)}) {
        const auto p = assemble(spec, 2, a);
        const CMatrix K = p.stiffness(1.0), M = p.mass(1.0, 1.0);
        for (int t = 0; t < 200; ++t) {
            const CVector u = random_vector(p.dim(), rng);
            const double l2 = u.dot(M * u).real(), energy = u.dot(K * u).real();
            EXPECT_LE(l2, energy / (spec.material.mu1 * a.norm2()));
        }
    }
}

TEST(Poincare, PeriodicDeflated) {
    const auto spec = sphere_spec();
    const auto p = assemble(spec, 2, QuasiMomentum(0, 0, 0));
    const CMatrix K = p.stiffness(1.0), M = p.mass(1.0, 1.0);
    const GammaDeflation d = deflate_gamma(M, p.basis.translations(), true);
    std::mt19937 rng(6);
    for (int t = 0; t < 200; ++t) {
        const CVector u = d.apply(random_vector(p.dim(), rng));
        const double l2 = u.dot(M * u).real(), energy = u.dot(K * u).real();
        EXPECT_LE(l2, energy / (4.0 * pi * pi * spec.material.mu1));
    }
}
