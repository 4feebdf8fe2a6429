#include "phonon/structural.hpp"

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
double cluster_fraction(const std::vector<double>& taus, double k0) {
    int n = 0;
    for (double t : taus)
        if (std::abs(t) < 0.05 || std::abs(t - k0) < 0.05 || std::abs(t + k0) < 0.05) ++n;
    return double(n) / taus.size();
}
// Cardano-free oracle: Newton polish from the companion-matrix roots.
std::array<cplx, 3> companion_roots(double r, double k0) {
    Eigen::Matrix3d C;
    C << 0, 0, r, 1, 0, k0 * k0, 0, 1, 0;
    const Eigen::Vector3cd ev = C.eigenvalues();
    return {ev[0], ev[1], ev[2]};
}
} // namespace

TEST(PoleMaps, QuarterGivesOneThird) {
    EXPECT_EQ(z_pole(-0.25), -1.0 / 3.0);
    EXPECT_EQ(k_pole(-0.25), -3.0);
    EXPECT_THROW(z_pole(-0.5), ValidationError);
    EXPECT_THROW(pole_sets({0.1, -0.5}), ValidationError);
}

TEST(PoleMaps, ReciprocalAndNegative) {
    std::mt19937 rng(4);
    std::uniform_real_distribution<double> u(-0.4999, 0.4999);
    std::vector<double> taus;
    for (int i = 0; i < 200; ++i) taus.push_back(u(rng));
    const PoleSets p = pole_sets(taus);
    for (std::size_t i = 0; i < taus.size(); ++i) {
        EXPECT_LT(p.z_poles[i], 0.0);
        EXPECT_NEAR(p.z_poles[i] * p.k_poles[i], 1.0, 1e-12);
        EXPECT_LE(p.z_poles[i], p.z_star);
    }
    const double tmin = *std::min_element(taus.begin(), taus.end());
    EXPECT_DOUBLE_EQ(p.z_star, z_pole(tmin));
}

// first-order rounding bound for the two double evaluations of the same rational
double rounding_bound(const Material& m, double tau, double z) {
    const double u = std::numeric_limits<double>::epsilon() / 2;
    const double t = std::abs(tau);
    const double pole = 3 * u + 2 * u * t / std::abs(tau + 0.5) + 2 * u * t / std::abs(tau - 0.5);
    const double closed = tau == 0.0 ? 0.0 : u * (3 + 3 * m.mu1 / std::abs(3 * m.mu1 + m.lambda1));
    return 1.01 * (pole + closed) * std::abs(z);
}

TEST(PoleMaps, AccumulationTargets) {
    std::mt19937 rng(8);
    std::uniform_real_distribution<double> mu(0.1, 5.0), l(-0.6, 5.0);
    for (int i = 0; i < 100; ++i) {
        Material m;
        m.mu1 = mu(rng);
        m.lambda1 = l(rng) * m.mu1;
        const auto z = accumulation_z_values(m);
        const double k0 = m.k0();
        for (int a = 0; a < 3; ++a) {
            const double tau = std::array<double, 3>{k0, 0.0, -k0}[a];
            EXPECT_NEAR(z_pole(tau), z[a], rounding_bound(m, tau, z[a]));
        }
    }
}

TEST(CubicRoots, SmallExamples) {
    const auto r0 = np_cubic_roots(0.0, -1.0 / 6.0);
    std::vector<double> mags;
    for (const cplx& z : r0) mags.push_back(std::abs(z));
    std::sort(mags.begin(), mags.end());
    EXPECT_NEAR(mags[0], 0.0, 1e-15);
    EXPECT_NEAR(mags[1], 1.0 / 6.0, 1e-15);
    EXPECT_NEAR(mags[2], 1.0 / 6.0, 1e-15);
}

TEST(CubicRoots, RoundTripRandom) {
    std::mt19937 rng(12);
    std::uniform_real_distribution<double> ur(-1.0, 1.0), uk(-0.375, -0.01);
    for (int i = 0; i < 1000; ++i) {
        const double r = ur(rng) * (i % 2 ? 1e-3 : 1.0), k0 = uk(rng);
        const auto z = np_cubic_roots(r, k0);
        for (const cplx& x : z) EXPECT_LT(std::abs(x * x * x - k0 * k0 * x - r), 1e-12);
        // same multiset as the companion roots
        auto o = companion_roots(r, k0);
        for (const cplx& x : z) {
            double best = 1e300;
            for (const cplx& y : o) best = std::min(best, std::abs(x - y));
            EXPECT_LT(best, 1e-7);
        }
    }
}

TEST(CubicRoots, RealWhenDiscriminantNonnegative) {
    const double k0 = -1.0 / 6.0;
    const double edge = 2.0 * std::pow(std::abs(k0), 3) / (3.0 * std::sqrt(3.0));
    for (double r : {0.1 * edge, 0.5 * edge, 0.99 * edge, -0.7 * edge}) {
        for (const cplx& z : np_cubic_roots(r, k0)) EXPECT_LT(std::abs(z.imag()), 1e-9);
    }
}

TEST(CubicRoots, DoubleRootAtDiscriminantBoundary) {
    const double k0 = -1.0 / 6.0;
    // 27 r^2 = 4 k0^6 with r > 0: double root at k0 / sqrt(3), simple root at -2 k0 / sqrt(3).
    const double r = 2.0 * std::pow(std::abs(k0), 3) / (3.0 * std::sqrt(3.0));
    const auto z = np_cubic_roots(r, k0);
    std::vector<double> re;
    for (const cplx& x : z) re.push_back(x.real());
    std::sort(re.begin(), re.end());
    EXPECT_NEAR(re[0], k0 / std::sqrt(3.0), 1e-7);
    EXPECT_NEAR(re[1], k0 / std::sqrt(3.0), 1e-7);
    EXPECT_NEAR(re[2], -2.0 * k0 / std::sqrt(3.0), 1e-12);
    EXPECT_NEAR(k0 / std::sqrt(3.0), -0.096225, 1e-6);
}

TEST(TauBound, ThetaExamples) {
    EXPECT_DOUBLE_EQ(tau_lower_bound(0.5).tau_minus, -0.25);
    EXPECT_DOUBLE_EQ(tau_lower_bound(0.5).z_plus_theta, -1.0 / 3.0);
    EXPECT_DOUBLE_EQ(tau_lower_bound(1.0).tau_minus, 0.0);
    EXPECT_DOUBLE_EQ(tau_lower_bound(1.0).z_plus_theta, -1.0);
    EXPECT_DOUBLE_EQ(tau_lower_bound(5.0).tau_minus, 0.0);
    EXPECT_THROW(tau_lower_bound(0.0), ValidationError);
}

TEST(PlaneWaveStructural, EmptyInclusion) {
    PlaneWaveBasis b(1, QuasiMomentum(pi, 0, 0));
    IndicatorCoefficients chi;
    chi.cutoff_N = 1;
    chi.range = 2;
    chi.table.assign(125, 0.0);
    const auto s = compute_structural_spectrum(assemble(b, chi, Material{}), Material{});
    EXPECT_TRUE(s.taus.empty());
    EXPECT_EQ(s.w1_count, b.dim());
    EXPECT_NEAR(s.raw_min, 0.5, 1e-12);
}

TEST(PlaneWaveStructural, SphereCutoff3AgainstThetaBound) {
    const auto spec = sphere_spec();
    const auto s = compute_structural_spectrum(assemble(spec, 3, QuasiMomentum(pi, 0, 0)), spec.material);
    ASSERT_FALSE(s.taus.empty());
    for (double t : s.taus) {
        EXPECT_GT(t, -0.5);
        EXPECT_LT(t, 0.5);
    }
    EXPECT_GE(s.taus.front(), -0.25 * 1.1);
}

TEST(PlaneWaveStructural, ClusteringAtCutoff4) {
    const auto spec = sphere_spec();
    const auto s = compute_structural_spectrum(assemble(spec, 4, QuasiMomentum(pi, 0, 0)), spec.material);
    EXPECT_GE(cluster_fraction(s.taus, spec.material.k0()), 0.6);
}

TEST(FEStructural, SphereAgainstThetaBound) {
    const auto spec = sphere_spec();
    const auto s = compute_structural_spectrum(assemble_fe(spec, FEGridOptions{6, 0, false}, QuasiMomentum(pi, 0, 0)),
                                               spec.material);
    ASSERT_FALSE(s.taus.empty());
    EXPECT_GE(s.taus.front(), -0.25 * 1.1);
    EXPECT_LT(s.taus.back(), 0.5 - eps_w);
    EXPECT_LE(s.raw_max, 0.5 + 1e-9);
    EXPECT_GE(s.raw_min, -0.5 - 1e-9);
    EXPECT_LT(s.z_star, 0.0);
    EXPECT_LE(s.z_star, z_pole(-0.25 * 1.1));
}

TEST(FEStructural, GammaDeflatesConstants) {
    const auto spec = sphere_spec();
    const auto s = compute_structural_spectrum(assemble_fe(spec, FEGridOptions{6, 0, false}, QuasiMomentum(0, 0, 0)),
                                               spec.material);
    EXPECT_EQ(s.deflated, 3);
    EXPECT_GE(s.taus.front(), -0.25 * 1.1);
}
