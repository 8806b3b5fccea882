#include <gtest/gtest.h>

#include <numbers>

#include "symindex/index_form.hpp"
#include "symindex/presets.hpp"

using namespace symindex;
constexpr double kPi = std::numbers::pi;

namespace {

Coefficients constant(const Mat& P, const Mat& Q, const Mat& R, const Vec& xp) {
    Coefficients c;
    c.P = P;
    c.Q = Q;
    c.R = R;
    c.Lq = Vec::Zero(P.rows());
    c.xp = xp;
    c.xpp = Vec::Zero(P.rows());
    return c;
}

OrbitData custom(int n, double T, const Mat& A, std::function<Coefficients(double)> f) {
    OrbitData o;
    o.name = "custom";
    o.n = n;
    o.T = T;
    o.A = A;
    o.coeffs = std::move(f);
    sample_from_evaluator(o, 65);
    return o;
}

Mat rot2(double th) {
    Mat R(2, 2);
    R << std::cos(th), -std::sin(th), std::sin(th), std::cos(th);
    return R;
}

std::vector<std::string> convex_presets() { return {"flat_torus", "circle_free_particle", "harmonic_loop", "kepler_circular"}; }

OrbitData neg_kepler() {
    PresetParams k;
    k.variant = "kepler";
    return make_preset("negative_P_synthetic", k);
}

}  // namespace

TEST(Basis, UntwistedFourier) {
    OrbitData o = custom(1, 1.0, Mat::Identity(1, 1), [](double) {
        return constant(Mat::Identity(1, 1), Mat::Zero(1, 1), Mat::Zero(1, 1), Vec::Ones(1));
    });
    auto gb = build_basis(o, 3);
    ASSERT_EQ(gb.size(), 3);
    for (double t : {0.0, 0.13, 0.5, 0.77}) {
        Mat Phi, dPhi;
        gb.eval(t, Phi, dPhi);
        const double sgn = gb.blocks[0].V(0, 0);
        EXPECT_NEAR(Phi(0, 0), sgn, 1e-14);
        EXPECT_NEAR(Phi(0, 1), sgn * std::cos(2 * kPi * t), 1e-14);
        EXPECT_NEAR(Phi(0, 2), sgn * std::sin(2 * kPi * t), 1e-14);
        EXPECT_NEAR(dPhi(0, 2), sgn * 2 * kPi * std::cos(2 * kPi * t), 1e-12);
    }
}

TEST(Basis, HalfIntegerModes) {
    OrbitData o = custom(1, 1.0, -Mat::Identity(1, 1), [](double) {
        return constant(Mat::Identity(1, 1), Mat::Zero(1, 1), Mat::Zero(1, 1), Vec::Ones(1));
    });
    auto gb = build_basis(o, 4);
    EXPECT_EQ(gb.blocks[0].kind, GalerkinBasis::Kind::Antiperiodic);
    Mat Phi, dPhi;
    gb.eval(0.3, Phi, dPhi);
    const double sgn = gb.blocks[0].V(0, 0);
    EXPECT_NEAR(Phi(0, 0), sgn * std::cos(kPi * 0.3), 1e-14);
    EXPECT_NEAR(Phi(0, 1), sgn * std::sin(kPi * 0.3), 1e-14);
    EXPECT_NEAR(Phi(0, 2), sgn * std::cos(3 * kPi * 0.3), 1e-14);
    EXPECT_NEAR(Phi(0, 3), sgn * std::sin(3 * kPi * 0.3), 1e-14);
    EXPECT_LT(boundary_twist_residual(gb, o.A), 1e-12);
}

TEST(Basis, RotationTwist) {
    OrbitData o = custom(2, 1.0, rot2(kPi / 2), [](double) {
        return constant(Mat::Identity(2, 2), Mat::Zero(2, 2), Mat::Zero(2, 2), Vec::Unit(2, 0));
    });
    auto gb = build_basis(o, 6);
    EXPECT_EQ(gb.size(), 12);
    EXPECT_LT(boundary_twist_residual(gb, o.A), 1e-12);
    EXPECT_TRUE(std::isfinite(gb.gram_condition));
    EXPECT_THROW(build_basis(o, 0), InvalidInput);
}

TEST(Assembly, SymmetricAndFinite) {
    for (const auto& nm : preset_names()) {
        auto o = make_preset(nm);
        auto gb = build_basis(o, 8);
        auto F = assemble_free(o, gb, 0.7).matrix;
        auto G = assemble_fixed(o, gb, 0.7).matrix;
        EXPECT_EQ(F.rows(), gb.size() + 1) << nm;
        EXPECT_EQ(G.rows(), gb.size()) << nm;
        EXPECT_TRUE(F.allFinite() && G.allFinite()) << nm;
        EXPECT_LT(max_abs(F - F.transpose()), 1e-13) << nm;
        EXPECT_LT(max_abs(G - G.transpose()), 1e-13) << nm;
    }
}

TEST(Assembly, CouplingRowOracle) {
    // periodic integrands: the trapezoid rule on a fine uniform grid is an independent reference
    auto o = make_preset("kepler_circular");
    auto gb = build_basis(o, 8);
    auto fp = assemble_pieces(o, gb);
    const int m = 4096;
    const double T = o.T;
    Vec b = Vec::Zero(gb.size());
    double kap = 0;
    Mat Phi, dPhi;
    for (int i = 0; i < m; ++i) {
        const double t = static_cast<double>(i) / m;
        Coefficients c = o.at(t);
        gb.eval(t, Phi, dPhi);
        Vec Px = c.P * c.xp;
        b += (-(dPhi.transpose() * Px) / (T * T) + Phi.transpose() * (c.Lq - c.Q.transpose() * c.xp / T)) / m;
        kap += c.xp.dot(Px) / (T * T * T) / m;
    }
    const double sc = std::max(1.0, b.cwiseAbs().maxCoeff());
    EXPECT_LT((fp.b - b).cwiseAbs().maxCoeff() / sc, 1e-12);
    EXPECT_NEAR(fp.kap, kap, 1e-12 * std::max(1.0, std::abs(kap)));
}

TEST(Assembly, FlatTorusAtZero) {
    auto o = make_preset("flat_torus");
    auto gb = build_basis(o, 8);
    Inertia in = signature_rel(assemble_fixed(o, gb, 0).matrix);
    EXPECT_EQ(in.n_minus, 0);
    EXPECT_EQ(in.n_zero, o.n);
    auto fp = assemble_pieces(o, gb);
    EXPECT_EQ(morse_index(fp.H1), 0);
}

TEST(Assembly, HarmonicKernelHoldsVelocity) {
    auto o = make_preset("harmonic_loop");
    auto gb = build_basis(o, 16);
    auto fp = assemble_pieces(o, gb);
    // L2 projection of x′ onto the basis
    Vec x, w;
    gauss_legendre(8, x, w);
    Mat G = Mat::Zero(gb.size(), gb.size());
    Vec r = Vec::Zero(gb.size());
    Mat Phi, dPhi;
    const int panels = 64;
    for (int p = 0; p < panels; ++p)
        for (int j = 0; j < x.size(); ++j) {
            const double t = (p + 0.5 * (x(j) + 1)) / panels, wt = 0.5 * w(j) / panels;
            gb.eval(t, Phi, dPhi);
            G += wt * Phi.transpose() * Phi;
            r += wt * Phi.transpose() * o.at(t).xp;
        }
    Vec c = G.ldlt().solve(r);
    ASSERT_GT(c.norm(), 1e-6);
    EXPECT_LT((fp.H1 * c).norm() / (max_abs(fp.H1) * c.norm()), 1e-8);
    EXPECT_GE(signature_rel(fp.H1).n_zero, 1);
}

TEST(Threshold, GapAndAnalyticBound) {
    for (const auto& nm : preset_names()) {
        auto o = make_preset(nm);
        auto gb = build_basis(o, 16);
        auto ch = choose_s0(o, gb);
        EXPECT_GT(ch.gap, 0) << nm;
        auto fp = assemble_pieces(o, gb);
        EXPECT_GE(detail::spectral_gap(fp.free_form(ch.s0)), 10 * detail::zero_tol_of(fp.free_form(ch.s0))) << nm;
        ASSERT_TRUE(ch.analytic_bound.has_value()) << nm;
        EXPECT_GE(*ch.analytic_bound, ch.s0) << nm;
    }
}

TEST(Threshold, PositiveDefiniteForConvex) {
    for (const auto& nm : convex_presets()) {
        auto o = make_preset(nm);
        auto gb = build_basis(o, 16);
        auto fp = assemble_pieces(o, gb);
        auto ch = choose_s0(fp);
        EXPECT_EQ(morse_index(fp.fixed_form(ch.s0)), 0) << nm;
        EXPECT_GT(sym_eigenvalues(fp.fixed_form(ch.s0)).minCoeff(), 0) << nm;
    }
}

TEST(Spectral, Examples) {
    auto flat = make_preset("flat_torus");
    auto sf = spectral_indices(flat, build_basis(flat, 32));
    EXPECT_EQ(sf.ispec_fixed, 0);
    EXPECT_EQ(sf.ispec_free - sf.ispec_fixed, 0);
    auto kep = make_preset("kepler_circular");
    auto sk = spectral_indices(kep, build_basis(kep, 32));
    EXPECT_EQ(sk.ispec_free - sk.ispec_fixed, 1);
}

TEST(Spectral, MorseAgreementForConvex) {
    for (const auto& nm : convex_presets()) {
        auto o = make_preset(nm);
        auto si = spectral_indices(o, build_basis(o, 32));
        EXPECT_EQ(si.ispec_fixed, si.morse_fixed_at_0) << nm;
        EXPECT_EQ(si.ispec_free, si.morse_free_at_0) << nm;
        const int expect = *o.tprime_h >= 0 ? 1 : 0;
        EXPECT_EQ(si.ispec_free - si.ispec_fixed, expect) << nm;
    }
}

TEST(Spectral, StableUnderRefinementAndThreshold) {
    auto all = preset_names();
    std::vector<OrbitData> orbits;
    for (const auto& nm : all) orbits.push_back(make_preset(nm));
    orbits.push_back(neg_kepler());
    for (const auto& o : orbits) {
        auto a = spectral_indices(o, build_basis(o, 16));
        auto gb = build_basis(o, 32);
        auto b = spectral_indices(o, gb);
        EXPECT_EQ(a.ispec_free, b.ispec_free) << o.name;
        EXPECT_EQ(a.ispec_fixed, b.ispec_fixed) << o.name;
        auto fp = assemble_pieces(o, gb);
        auto ch = choose_s0(fp);
        ch.s0 *= 2;
        auto c = spectral_indices(fp, ch);
        EXPECT_EQ(c.ispec_free, b.ispec_free) << o.name;
        EXPECT_EQ(c.ispec_fixed, b.ispec_fixed) << o.name;
    }
}

TEST(Difference, PositiveKappaBranches) {
    auto flat = make_preset("flat_torus");
    auto rf = difference_decomposition(flat, build_basis(flat, 32));
    EXPECT_TRUE(rf.identity_holds);
    EXPECT_EQ(rf.total(), 0);
    EXPECT_EQ(rf.leg_0, 0);
    EXPECT_EQ(rf.leg_s0, 0);
    EXPECT_TRUE(rf.matches_table());

    auto kep = make_preset("kepler_circular");
    auto rk = difference_decomposition(kep, build_basis(kep, 32));
    EXPECT_EQ(rk.total(), 1);
    EXPECT_EQ(rk.leg_0, 1);
    EXPECT_EQ(rk.leg_s0, 0);
    EXPECT_TRUE(rk.matches_table());
}

TEST(Difference, NegativeKappaBranch) {
    auto o = neg_kepler();
    ASSERT_LT(*o.tprime_h, 0);
    auto r = difference_decomposition(o, build_basis(o, 32));
    EXPECT_EQ(r.kappa_sign, -1);
    EXPECT_TRUE(r.identity_holds);
    EXPECT_EQ(r.total(), 1);
    EXPECT_EQ(r.leg_0, 0);
    EXPECT_EQ(r.leg_s0, 1);
}

TEST(Difference, Errors) {
    auto o = make_preset("kepler_circular");
    o.tprime_h.reset();
    EXPECT_THROW(difference_decomposition(o, build_basis(o, 8)), MissingTprime);
    auto bad = custom(1, 1.0, Mat::Identity(1, 1), [](double t) {
        return constant(Mat::Identity(1, 1), Mat::Zero(1, 1), Mat::Zero(1, 1), Vec::Constant(1, std::cos(2 * kPi * t)));
    });
    auto gb = build_basis(bad, 8);
    EXPECT_THROW(assemble_free(bad, gb, 0), NotNonNull);
    EXPECT_THROW(assemble_fixed(bad, gb, 0), NotNonNull);
    EXPECT_THROW(spectral_indices(bad, gb), NotNonNull);
}

TEST(Relation, GeoSpec) {
    for (const auto& nm : preset_names()) {
        auto o = make_preset(nm);
        auto r = check_relation_geo_spec(o, build_basis(o, 32), fundamental_solution(o));
        EXPECT_TRUE(r.holds) << nm << ": " << r.igeo << " vs " << r.ispec_fixed << " + " << r.dim_ker_A_minus_I;
    }
    auto flat = make_preset("flat_torus");
    auto rf = check_relation_geo_spec(flat, build_basis(flat, 32), fundamental_solution(flat));
    EXPECT_EQ(rf.igeo, 2);
    EXPECT_EQ(rf.ispec_fixed, 0);
    auto circ = make_preset("circle_free_particle");
    EXPECT_EQ(check_relation_geo_spec(circ, build_basis(circ, 32), fundamental_solution(circ)).igeo, 1);
}

TEST(Relation, RotatedFrame) {
    Mat A = Mat::Identity(3, 3);
    A.topLeftCorner(2, 2) = rot2(kPi / 2);
    OrbitData o = custom(3, 1.0, A, [](double) {
        return constant(Mat::Identity(3, 3), Mat::Zero(3, 3), Mat::Zero(3, 3), Vec::Unit(3, 2));
    });
    auto r = check_relation_geo_spec(o, build_basis(o, 16), fundamental_solution(o));
    EXPECT_EQ(r.dim_ker_A_minus_I, 1);
    EXPECT_TRUE(r.holds) << r.igeo << " vs " << r.ispec_fixed << " + " << r.dim_ker_A_minus_I;
}
