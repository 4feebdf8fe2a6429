#include "phonon/fourier.hpp"

#include <gtest/gtest.h>

#include <filesystem>

using namespace phonon;

namespace {
// Midpoint rule on an n^3 grid of the cell.
cplx quadrature_coefficient(const InclusionGeometry& g, const Vec3& k, int n) {
    cplx s = 0.0;
    const double h = 1.0 / n;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int l = 0; l < n; ++l) {
                const Vec3 x((i + 0.5) * h, (j + 0.5) * h, (l + 0.5) * h);
                if (g.contains(x)) s += std::polar(1.0, -two_pi * k.dot(x));
            }
    return s * h * h * h;
}
InclusionGeometry sphere(double a) {
    InclusionGeometry g;
    g.shape = Sphere{{0.5, 0.5, 0.5}, a};
    return g;
}
InclusionGeometry box() {
    VoxelSet v;
    v.resolution = {4, 4, 4};
    v.occupied.assign(64, 0);
    for (int i = 1; i < 3; ++i)
        for (int j = 1; j < 3; ++j)
            for (int l = 1; l < 3; ++l) v.occupied[(i * 4 + j) * 4 + l] = 1;
    InclusionGeometry g;
    g.shape = v;
    return g;
}
} // namespace

TEST(SphereCoefficients, VolumeAtZero) {
    const auto c = sphere_coefficients(sphere(0.2).sphere(), 2);
    EXPECT_NEAR(c(0, 0, 0).real(), 0.0335103, 1e-7);
    EXPECT_DOUBLE_EQ(c(0, 0, 0).real(), c.volume);
}

TEST(SphereCoefficients, FirstHarmonicAgainstQuadrature) {
    const auto g = sphere(0.2);
    const cplx oracle = quadrature_coefficient(g, Vec3(1, 0, 0), 64);
    const cplx c = sphere_coefficient(g.sphere(), Vec3(1, 0, 0));
    EXPECT_NEAR(c.real(), -0.0285, 5e-4);
    EXPECT_NEAR(c.imag(), 0.0, 1e-15);
    EXPECT_NEAR(oracle.real(), -0.0285, 5e-4);
}

TEST(SphereCoefficients, ConjugateSymmetry) {
    InclusionGeometry g;
    g.shape = Sphere{{0.41, 0.55, 0.47}, 0.15};
    const auto c = sphere_coefficients(g.sphere(), 2);
    for (int i = -4; i <= 4; ++i)
        for (int j = -4; j <= 4; ++j)
            for (int l = -4; l <= 4; ++l) {
                EXPECT_NEAR(std::abs(c(i, j, l) - std::conj(c(-i, -j, -l))), 0.0, 1e-16);
            }
}

TEST(SphereCoefficients, AgreeWithQuadratureUpToFour) {
    InclusionGeometry g;
    g.shape = Sphere{{0.5, 0.5, 0.5}, 0.2};
    const auto c = sphere_coefficients(g.sphere(), 2);
    double worst = 0.0;
    for (int i = 0; i <= 4; ++i)
        for (int j = 0; j <= i; ++j)
            for (int l = 0; l <= j; ++l) {
                const cplx q = quadrature_coefficient(g, Vec3(i, j, l), 64);
                worst = std::max(worst, std::abs(q - c(i, j, l)) / std::abs(c(i, j, l)));
            }
    EXPECT_LT(worst, 1e-3);
}

TEST(SphereCoefficients, QuadratureConvergesToTable) {
    const auto g = sphere(0.2);
    const auto c = sphere_coefficients(g.sphere(), 2);
    double err[2] = {0, 0};
    const int res[2] = {64, 128};
    for (int r = 0; r < 2; ++r)
        for (int i = 0; i <= 4; ++i)
            for (int j = 0; j <= i; ++j)
                for (int l = 0; l <= j; ++l)
                    err[r] = std::max(err[r], std::abs(quadrature_coefficient(g, Vec3(i, j, l), res[r]) - c(i, j, l)));
    EXPECT_LT(err[0], 1e-2 * c.volume);
    EXPECT_LT(err[1], 0.5 * err[0]);
}

TEST(VoxelCoefficients, BoxVolumeAndFirstHarmonic) {
    const auto c = voxel_coefficients(box().voxels(), 1);
    EXPECT_NEAR(c(0, 0, 0).real(), 0.125, 1e-15);
    EXPECT_NEAR(c(1, 0, 0).real(), -0.0795775, 1e-7);
    EXPECT_NEAR(c(1, 0, 0).real(), -1.0 / pi * 0.25, 1e-15);
    EXPECT_NEAR(c(1, 0, 0).imag(), 0.0, 1e-15);
}

TEST(VoxelCoefficients, AgreeWithQuadrature) {
    // The box is a product of intervals, so the 3D midpoint sum factors into
    // 1D sums; 4096 points per axis.
    const auto c = voxel_coefficients(box().voxels(), 1);
    auto axis = [](int k) {
        const int n = 4096;
        cplx s = 0.0;
        for (int i = 0; i < n; ++i) {
            const double x = (i + 0.5) / n;
            if (x > 0.25 && x < 0.75) s += std::polar(1.0, -two_pi * k * x);
        }
        return s / double(n);
    };
    for (int i = -2; i <= 2; ++i)
        for (int j = -2; j <= 2; ++j)
            for (int l = -2; l <= 2; ++l)
                EXPECT_NEAR(std::abs(c(i, j, l) - axis(i) * axis(j) * axis(l)), 0.0, 1e-7);
}

TEST(VoxelCoefficients, EmptySetRejected) {
    VoxelSet v;
    v.resolution = {4, 4, 4};
    v.occupied.assign(64, 0);
    EXPECT_THROW(voxel_coefficients(v, 1), ValidationError);
}

TEST(Parseval, MonotoneAndBoundedByVolume) {
    const auto g = sphere(0.2);
    const auto c = sphere_coefficients(g.sphere(), 4);
    double prev = 0.0;
    for (int R = 0; R <= c.range; ++R) {
        double s = 0.0;
        for (int i = -R; i <= R; ++i)
            for (int j = -R; j <= R; ++j)
                for (int l = -R; l <= R; ++l) s += std::norm(c(i, j, l));
        EXPECT_GE(s, prev);
        EXPECT_LE(s, c.volume);
        prev = s;
    }
    EXPECT_GT(prev, 0.9 * c.volume);
}

TEST(Cache, RoundTripAndKeying) {
    const auto dir = std::filesystem::temp_directory_path() / "phonon_chi_cache_test";
    std::filesystem::remove_all(dir);
    const auto g = sphere(0.2);
    const auto a = indicator_coefficients(g, 2, dir.string());
    ASSERT_TRUE(std::filesystem::exists(detail::chi_cache_path(dir.string(), g, 2)));
    const auto b = indicator_coefficients(g, 2, dir.string());
    ASSERT_EQ(a.table.size(), b.table.size());
    for (std::size_t i = 0; i < a.table.size(); ++i) EXPECT_EQ(a.table[i], b.table[i]);
    EXPECT_NE(detail::chi_cache_path(dir.string(), g, 2), detail::chi_cache_path(dir.string(), g, 3));
    std::filesystem::remove_all(dir);
}
