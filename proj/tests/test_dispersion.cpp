#include "phonon/dispersion.hpp"
#include "phonon/limit.hpp"

#include <gtest/gtest.h>

using namespace phonon;

namespace {
CrystalSpec homogeneous() {
    CrystalSpec s;
    s.material = {1.0, 1.0, 1.0, 1.0, 1.0};
    s.geometry.shape = Sphere{{0.5, 0.5, 0.5}, 0.2};
    return s;
}
CrystalSpec sphere_spec() {
    CrystalSpec s;
    s.material = {1.0, 1.0, 1.0, 1.0, 0.5};
    s.geometry.shape = Sphere{{0.5, 0.5, 0.5}, 0.2};
    return s;
}
} // namespace

TEST(Bands, HomogeneousClosedForm) {
    BandOptions opt;
    opt.cutoff_N = 2;
    const BandSolution b = solve_bands(homogeneous(), QuasiMomentum(pi, 0, 0), 1.0, 6, opt);
    EXPECT_NEAR(b.xi[0], pi * pi, 1e-8 * pi * pi);
    EXPECT_NEAR(b.xi[1], pi * pi, 1e-8 * pi * pi);
    // n = (-1, 0, 0) has the same |2 pi n + alpha|, so pi^2 is four-fold
    EXPECT_NEAR(b.xi[2], pi * pi, 1e-8 * pi * pi);
    EXPECT_NEAR(b.xi[4], 3 * pi * pi, 1e-8 * 3 * pi * pi);
    EXPECT_EQ(b.deflated, 0);
}

TEST(Bands, GammaOffsetAndFullIndex) {
    BandOptions opt;
    opt.cutoff_N = 1;
    const BandSolution b = solve_bands(homogeneous(), QuasiMomentum(0, 0, 0), 1.0, 4, opt);
    EXPECT_EQ(b.deflated, 3);
    EXPECT_EQ(full_branch(b, 2), 0.0);
    EXPECT_NEAR(full_branch(b, 4), 4 * pi * pi, 1e-8 * 4 * pi * pi);
    EXPECT_THROW(full_branch(b, 100), ValidationError);
}

TEST(Bands, MonotoneInContrast) {
    BandOptions opt;
    opt.cutoff_N = 2;
    const auto sols = solve_bands(sphere_spec(), QuasiMomentum(pi, pi / 2, 0), {1, 10, 100, 1000}, 10, opt);
    for (std::size_t i = 1; i < sols.size(); ++i)
        for (Eigen::Index j = 0; j < 10; ++j)
            EXPECT_LE(sols[i - 1].xi[j], sols[i].xi[j] + 1e-9 * std::max(1.0, sols[i].xi[j]));
}

TEST(Bands, FEBelowDirichletAndConverging) {
    BandOptions opt;
    opt.method = Method::fe;
    opt.fe = FEGridOptions{12, 0, false};
    const auto spec = sphere_spec();
    const DirichletSpectrum d = dirichlet_spectrum(spec, 4, opt.fe);
    const auto sols = solve_bands(spec, QuasiMomentum(pi, 0, 0), {250, 500, 1000}, 1, opt);
    double prev = 1e300;
    for (const auto& s : sols) {
        const double err = d.entries[0].delta - s.xi[0];
        EXPECT_GT(err, 0.0);
        EXPECT_LT(err, prev);
        prev = err;
    }
}

TEST(Extents, SinglePointAndAcousticBranch) {
    BandOptions opt;
    opt.cutoff_N = 1;
    const auto spec = homogeneous();
    const auto one = band_extents(spec, 1.0, 1, {QuasiMomentum(pi, 0, 0)}, opt);
    EXPECT_EQ(one.a, one.b);
    double prev = 1e300;
    for (double s : {0.4, 0.2, 0.1, 0.05}) {
        const auto e = band_extents(spec, 1.0, 1, {QuasiMomentum(s, 0, 0), QuasiMomentum(pi, 0, 0)}, opt);
        EXPECT_NEAR(e.a, s * s, 1e-10);
        EXPECT_LT(e.a, prev);
        prev = e.a;
    }
    const auto g = band_extents(spec, 1.0, 1, {QuasiMomentum(0, 0, 0), QuasiMomentum(pi, 0, 0)}, opt);
    EXPECT_EQ(g.a, 0.0);
}

TEST(Extents, LimitBandIndexing) {
    BandOptions opt;
    opt.cutoff_N = 1;
    const auto spec = homogeneous();
    const auto sols = std::vector<BandSolution>{solve_bands(spec, QuasiMomentum(0, 0, 0), 1.0, 5, opt),
                                                solve_bands(spec, QuasiMomentum(pi, 0, 0), 1.0, 5, opt)};
    const auto e = limit_band_extents(sols, 1);
    EXPECT_DOUBLE_EQ(e.a, std::min(sols[0].xi[0], sols[1].xi[3]));
    EXPECT_DOUBLE_EQ(e.b, std::max(sols[0].xi[0], sols[1].xi[3]));
    EXPECT_THROW(band_extents(std::vector<BandSolution>{}, 1), ValidationError);
}

TEST(Lipschitz, BoundedAsAlphaShrinks) {
    BandOptions opt;
    opt.cutoff_N = 2;
    const auto spec = sphere_spec();
    std::vector<double> ratios;
    for (double s : {0.4, 0.2, 0.1})
        ratios.push_back(lipschitz_probe(spec, 10.0, 1, {QuasiMomentum(s, 0, 0), QuasiMomentum(s, s, 0)}, opt));
    for (double r : ratios) EXPECT_TRUE(std::isfinite(r));
    EXPECT_LT(ratios[2], 2.0 * ratios[0] + 1e-9);
    const double r20 = lipschitz_probe(spec, 20.0, 1, {QuasiMomentum(0.2, 0, 0)}, opt);
    const double r10 = lipschitz_probe(spec, 10.0, 1, {QuasiMomentum(0.2, 0, 0)}, opt);
    EXPECT_LT(r20, 2.0 * r10 + 1e-9);
}

TEST(Sweep, DeterministicAcrossWorkers) {
    BandOptions opt;
    opt.cutoff_N = 1;
    const auto samples = sample_path(BZPath::cubic_default(3));
    const auto a = sweep(sphere_spec(), samples, {1.0, 10.0}, 4, opt, 1);
    const auto b = sweep(sphere_spec(), samples, {1.0, 10.0}, 4, opt, 4);
    ASSERT_EQ(a.records.size(), b.records.size());
    for (std::size_t i = 0; i < a.records.size(); ++i) {
        EXPECT_EQ(a.records[i].xi, b.records[i].xi);
        EXPECT_EQ(a.records[i].j_full, b.records[i].j_full);
    }
    EXPECT_EQ(a.records.front().j_full, 4);
    EXPECT_EQ(a.geometry_hash, geometry_hash(sphere_spec().geometry));
}

TEST(Sweep, AdjacentSamplesContinuous) {
    BandOptions opt;
    opt.cutoff_N = 1;
    const auto samples = sample_path({{QuasiMomentum(0.1, 0, 0), QuasiMomentum(pi, 0, 0)}, 20});
    const auto spec = sphere_spec();
    const auto t = sweep(spec, samples, {10.0}, 3, opt, 2);
    // a(u) <= k (3 lambda + 2 mu) |(grad + i alpha) v|^2 and m(u) >= min rho |v|^2, so by min-max
    // each sqrt(xi_j) is Lipschitz in alpha with this constant.
    const Material& m = spec.material;
    const double lip = std::sqrt(10.0 * (3 * m.lambda1 + 2 * m.mu1) / std::min(m.rho1, m.rho2));
    ASSERT_EQ(t.records.size(), 3 * samples.size());
    for (std::size_t i = 3; i < t.records.size(); ++i) {
        const double da = (t.records[i].alpha.alpha() - t.records[i - 3].alpha.alpha()).norm();
        EXPECT_LE(std::abs(std::sqrt(t.records[i].xi) - std::sqrt(t.records[i - 3].xi)), lip * da + 1e-9);
    }
}
