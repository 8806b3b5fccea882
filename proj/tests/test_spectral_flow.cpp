#include <gtest/gtest.h>

#include "symindex/random.hpp"
#include "symindex/spectral_flow.hpp"

using namespace symindex;

namespace {
Mat m1(double x) { return Mat::Constant(1, 1, x); }
Mat d2(double a, double b) { return Eigen::Vector2d(a, b).asDiagonal(); }
}  // namespace

TEST(SpectralFlow, Examples) {
    EXPECT_EQ(spectral_flow(SymmetricFormPath::from_function([](double s) { return m1(2 * s - 1); }, 0, 1)), 1);
    EXPECT_EQ(spectral_flow(SymmetricFormPath::from_function([](double) { return d2(1, -2); }, 0, 1)), 0);
    auto r = spectral_flow_detail(SymmetricFormPath::from_function([](double s) { return d2(s - 0.5, 0.5 - s); }, 0, 1));
    EXPECT_EQ(r.value, 0);
}

TEST(SpectralFlow, CrossingFormRecorded) {
    auto r = spectral_flow_detail(SymmetricFormPath::from_function([](double s) { return m1(2 * s - 1); }, 0, 1));
    ASSERT_EQ(r.crossings.size(), 1u);
    EXPECT_NEAR(r.crossings[0].t, 0.5, 1e-9);
    EXPECT_NEAR(r.crossings[0].form(0, 0), 2.0, 1e-6);
    EXPECT_TRUE(r.crossings[0].regular);
}

TEST(SpectralFlow, EndpointConventions) {
    // kernel at a moving negative: −m⁻(Γ(a)) = −1
    EXPECT_EQ(spectral_flow(SymmetricFormPath::from_function([](double s) { return m1(-s); }, 0, 1)), -1);
    // kernel at a moving positive: 0
    EXPECT_EQ(spectral_flow(SymmetricFormPath::from_function([](double s) { return m1(s); }, 0, 1)), 0);
    // negative eigenvalue reaching 0 at b: m⁺(Γ(b)) = 1
    EXPECT_EQ(spectral_flow(SymmetricFormPath::from_function([](double s) { return m1(s - 1); }, 0, 1)), 1);
}

TEST(SpectralFlow, DegenerateCrossingShifted) {
    auto r = spectral_flow_detail(
        SymmetricFormPath::from_function([](double s) { return m1(std::pow(s - 0.5, 3)); }, 0, 1));
    EXPECT_EQ(r.value, 1);
}

TEST(SpectralFlow, FromSamples) {
    std::vector<double> s{0, 0.3, 1};
    std::vector<Mat> S{d2(-1, 2), d2(0.5, 1), d2(1, -1)};
    EXPECT_EQ(spectral_flow(SymmetricFormPath::from_samples(s, S)), 0);
}

TEST(SpectralFlow, RandomAnalyticOracleAndAdditivity) {
    rnd::Rng g(21);
    for (int rep = 0; rep < 40; ++rep) {
        const int d = rnd::uniform_int(g, 1, 8);
        Mat A0 = rnd::symmetric(g, d), A1 = rnd::symmetric(g, d), A2 = rnd::symmetric(g, d);
        auto f = [=](double s) -> Mat { return Mat(A0 + std::sin(3 * s) * A1 + s * s * A2); };
        auto p = SymmetricFormPath::from_function(f, 0, 1);
        const int v = spectral_flow(p);
        EXPECT_EQ(v, spectral_flow_closed(p));
        const double c = rnd::uniform(g, 0.2, 0.8);
        EXPECT_EQ(v, spectral_flow(SymmetricFormPath::from_function(f, 0, c)) +
                         spectral_flow(SymmetricFormPath::from_function(f, c, 1)));
        EXPECT_EQ(v, -relative_morse_index(f(0), f(1)));
        // endpoint-preserving homotopy
        Mat H = rnd::symmetric(g, d);
        auto h = [=](double s) -> Mat { return Mat(f(s) + s * (1 - s) * H); };
        EXPECT_EQ(v, spectral_flow(SymmetricFormPath::from_function(h, 0, 1)));
    }
}

TEST(RelativeMorse, Examples) {
    rnd::Rng g(1);
    Mat T = rnd::symmetric(g, 3);
    EXPECT_EQ(relative_morse_index(T, T), 0);
    EXPECT_EQ(relative_morse_index(d2(1, -1), d2(-1, -1)), 1);
    EXPECT_EQ(relative_morse_index(d2(1, 1), d2(-1, 1)), 1);
}

TEST(BlockMorse, Examples) {
    EXPECT_EQ(block_morse_index(m1(1), m1(0)), 1);
    EXPECT_EQ(block_morse_index(m1(0), m1(-2)), 1);
}

TEST(BlockMorse, RandomOracle) {
    rnd::Rng g(2);
    for (int rep = 0; rep < 100; ++rep) {
        const int k = rnd::uniform_int(g, 1, 3), m = rnd::uniform_int(g, 1, 3);
        Mat B = rnd::gaussian(g, k, m), C = rnd::symmetric(g, m);
        Mat F = Mat::Zero(k + m, k + m);
        F.topRightCorner(k, m) = B;
        F.bottomLeftCorner(m, k) = B.transpose();
        F.bottomRightCorner(m, m) = C;
        EXPECT_EQ(block_morse_index(B, C), morse_index(F));
    }
}

TEST(FamilyShrink, Examples) {
    EXPECT_EQ(spfl_family_shrink({m1(1), m1(1), m1(0)}), 1);
    EXPECT_EQ(spfl_family_shrink({d2(1, -2), Mat::Zero(2, 1), m1(0)}), 0);
    EXPECT_EQ(spfl_family_shrink({m1(0), m1(1), m1(0)}), 1);
}

TEST(FamilyShrink, MatchesTrackedFlow) {
    rnd::Rng g(4);
    for (int rep = 0; rep < 60; ++rep) {
        const int k = rnd::uniform_int(g, 1, 4), m = rnd::uniform_int(g, 1, 3);
        Vec ev = rnd::gaussian(g, k, 1);
        const int kz = std::min(k, rnd::uniform_int(g, 0, 2));
        for (int i = 0; i < kz; ++i) ev(i) = 0;
        BlockPerturbationFamily fam{rnd::with_spectrum(g, ev), rnd::gaussian(g, k, m), rnd::symmetric(g, m)};
        EXPECT_EQ(spfl_family_shrink(fam), spectral_flow(fam.shrink_path())) << "rep " << rep;
    }
}

TEST(FamilyGrow, Examples) {
    EXPECT_EQ(spfl_family_grow({m1(1), m1(1), m1(0)}), -1);
    EXPECT_EQ(spfl_family_grow({m1(3), m1(0), m1(1)}), 0);
    EXPECT_THROW(spfl_family_grow({m1(0), m1(1), m1(1)}), SingularA);
}

TEST(FamilyGrow, MatchesTrackedFlow) {
    rnd::Rng g(6);
    for (int rep = 0; rep < 60; ++rep) {
        const int k = rnd::uniform_int(g, 1, 4), m = rnd::uniform_int(g, 1, 3);
        Vec ev(k);
        for (int i = 0; i < k; ++i) ev(i) = (rnd::uniform(g, 0, 1) < 0.5 ? -1 : 1) * std::pow(10.0, rnd::uniform(g, -1.5, 1.5));
        BlockPerturbationFamily fam{rnd::with_spectrum(g, ev), rnd::gaussian(g, k, m), rnd::symmetric(g, m)};
        EXPECT_EQ(spfl_family_grow(fam), spectral_flow(fam.grow_path())) << "rep " << rep;
    }
}
