#include "phonon/series.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace phonon;

namespace {
CrystalSpec sphere_spec() {
    CrystalSpec s;
    s.material = {1.0, 1.0, 1.0, 1.0, 0.5};
    s.geometry.shape = Sphere{{0.5, 0.5, 0.5}, 0.2};
    return s;
}
} // namespace

TEST(Isolation, Examples) {
    EXPECT_DOUBLE_EQ(isolation_distance({1, 2, 4}, 2), 0.5);
    EXPECT_THROW(isolation_distance({1, 1 + 1e-12, 4}, 1), ValidationError);
    EXPECT_THROW(isolation_distance({3}, 1), ValidationError);
    EXPECT_DOUBLE_EQ(cluster_isolation_distance({1, 1, 1, 3}, 2), 1.0);
}

TEST(Isolation, FDDirichletValues) {
    const auto d = dirichlet_spectrum_fd(sphere_spec(), 8, 24);
    const double dist = cluster_isolation_distance(d.deltas(), 1, 1e-6);
    EXPECT_GT(dist, 0.0);
}

TEST(Radius, WorkedQuasiPeriodic) {
    const auto r = radius_quasi(pi * pi, 0.5, -0.25, 1.0, 1.0);
    const double hand = (pi * pi / 6.0) / (4.0 / 3.0 + pi * pi / 2.0);
    EXPECT_NEAR(r.r_star, hand, 1e-15);
    EXPECT_NEAR(r.r_star, 0.26243, 1e-5);
    EXPECT_DOUBLE_EQ(r.z_star, -1.0 / 3.0);
    EXPECT_NEAR(r.k_threshold, 1.0 / hand, 1e-12);
    EXPECT_THROW(radius_quasi(0.0, 0.5, -0.25, 1.0, 1.0), ValidationError);
    EXPECT_THROW(radius_quasi(1.0, 0.5, -0.5, 1.0, 1.0), ValidationError);
}

TEST(Radius, WorkedPeriodic) {
    const auto r = radius_periodic(0.5, -0.25, 1.0, 1.0);
    EXPECT_NEAR(r.r_star, (2 * pi * pi / 3.0) / (4.0 / 3.0 + 2 * pi * pi), 1e-15);
    EXPECT_NEAR(r.r_star, 0.31224, 1e-5);
    EXPECT_NEAR(sphere_radius_periodic(1.0, 1.0, 1.0), 0.31224, 1e-5);
}

TEST(Radius, SphereSpecializationOneEleventh) {
    EXPECT_NEAR(radius_quasi(1.0, 0.5, -0.25, 1.0, 1.0).r_star, 1.0 / 11.0, 1e-15);
    EXPECT_NEAR(sphere_radius_quasi(1.0, 1.0, 1.0, 1.0), 1.0 / 11.0, 1e-15);
}

TEST(Radius, ReductionsOverRandomDraws) {
    std::mt19937 rng(21);
    std::uniform_real_distribution<double> u(0.05, 5.0);
    for (int i = 0; i < 100; ++i) {
        const double mu = u(rng), a2 = u(rng), gap = u(rng), rho = u(rng);
        const double q = radius_quasi(a2, gap / 2, -0.25, mu, rho).r_star;
        EXPECT_NEAR(q, sphere_radius_quasi(mu, a2, gap, rho), 1e-12 * q);
        const double p = radius_periodic(gap / 2, -0.25, mu, rho).r_star;
        EXPECT_NEAR(p, sphere_radius_periodic(mu, gap, rho), 1e-12 * p);
    }
}

TEST(Radius, LimitsAndMonotonicity) {
    EXPECT_LT(radius_quasi(1.0, 0.5, -0.5 + 1e-9, 1.0, 1.0).r_star, 1e-8);
    EXPECT_LT(radius_periodic(1e-12, -0.25, 1.0, 1.0).r_star, 1e-10);
    double prev = 0.0;
    for (double d : {0.01, 0.1, 1.0, 10.0}) {
        const auto r = radius_quasi(2.0, d, -0.1, 1.0, 1.0);
        EXPECT_GT(r.r_star, prev);
        EXPECT_LT(r.r_star, std::abs(r.z_star));
        prev = r.r_star;
    }
    prev = 0.0;
    for (double a2 : {0.01, 0.1, 1.0, 3 * pi * pi}) {
        const double r = radius_quasi(a2, 0.3, -0.1, 1.0, 1.0).r_star;
        EXPECT_GT(r, prev);
        prev = r;
    }
}

TEST(Truncation, WorkedValueAndLimits) {
    EXPECT_NEAR(truncation_bound(0.5, 0.26243, 0.1, 1), 0.5 * 0.01 / (0.26243 * 0.16243), 1e-15);
    EXPECT_NEAR(truncation_bound(0.5, 0.26243, 0.1, 1), 0.11730, 1e-5);
    EXPECT_EQ(truncation_bound(0.5, 0.26243, 0.0, 3), 0.0);
    const double b1 = truncation_bound(0.5, 0.3, 0.1, 5), b2 = truncation_bound(0.5, 0.3, 0.1, 6);
    EXPECT_NEAR(b2 / b1, 0.1 / 0.3, 1e-12);
    EXPECT_THROW(truncation_bound(0.5, 0.3, 0.3, 1), ValidationError);
}

TEST(Richardson, ExactOnQuadratics) {
    const auto f = [](double z) { return 5.0 - 2.5 * z + 7.0 * z * z; };
    EXPECT_NEAR(richardson_slope({0.02, 0.01, 0.005}, {f(0.02), f(0.01), f(0.005)}), 2.5, 1e-10);
}

TEST(FirstOrder, SlopeAgainstRichardson) {
    const auto spec = sphere_spec();
    const FEGridOptions fe{12, 0, false};
    const QuasiMomentum a(pi, 0, 0);
    const auto p = assemble_fe(spec, fe, a);
    const DirichletSpectrum d = dirichlet_spectrum(spec, 8, fe);
    const SeriesCoefficients c = first_order_coefficient(p, spec.material, d, 1);
    EXPECT_GE(c.exterior_energy, 0.0);
    EXPECT_EQ(c.cluster_size, 3);
    EXPECT_THROW(first_order_coefficient(p, spec.material, d, 1, false), ValidationError);
    std::array<double, 3> z{}, xi{};
    const double ks[3] = {200, 400, 800};
    for (int i = 0; i < 3; ++i) {
        z[i] = 1.0 / ks[i];
        xi[i] = solve_bands(p, spec.material, ks[i], 1).xi[0];
        EXPECT_LE(xi[i], c.xi0 * (1 + 1e-9));
    }
    const double fd = richardson_slope(z, xi);
    EXPECT_NEAR(c.xi_slope, fd, 0.1 * std::abs(fd));
}

TEST(FirstOrder, BetaErrorQuadraticAndBounded) {
    const auto spec = sphere_spec();
    const FEGridOptions fe{12, 0, false};
    const auto p = assemble_fe(spec, fe, QuasiMomentum(pi, 0, 0));
    const DirichletSpectrum d = dirichlet_spectrum(spec, 8, fe);
    const SeriesComparison s = series_vs_direct(p, spec.material, d, 1, {2000, 4000, 8000}, -0.25, "theta");
    ASSERT_EQ(s.rows.size(), 3u);
    EXPECT_GT(s.radius.r_star, 0.0);
    EXPECT_LT(s.radius.r_star, std::abs(s.radius.z_star));
    for (std::size_t i = 0; i < s.rows.size(); ++i) {
        ASSERT_TRUE(s.rows[i].in_disk);
        EXPECT_LE(s.rows[i].beta_error, 1.1 * s.rows[i].bound);
        EXPECT_LE(s.rows[i].xi_series, s.coeff.xi0);
    }
    for (std::size_t i = 1; i < s.rows.size(); ++i) {
        const double ratio = s.rows[i - 1].beta_error / s.rows[i].beta_error;
        EXPECT_GE(ratio, 3.2);
        EXPECT_LE(ratio, 4.8);
    }
}
