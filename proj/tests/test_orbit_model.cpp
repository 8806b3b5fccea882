#include <gtest/gtest.h>

#include <filesystem>
#include <numbers>

#include "symindex/orbit_model.hpp"
#include "symindex/presets.hpp"
#include "symindex/random.hpp"

using namespace symindex;
constexpr double kPi = std::numbers::pi;

namespace {

// constant-coefficient orbit with given κ data
OrbitData custom(int n, double T, std::function<Coefficients(double)> f) {
    OrbitData o;
    o.name = "custom";
    o.n = n;
    o.T = T;
    o.A = Mat::Identity(n, n);
    o.coeffs = std::move(f);
    sample_from_evaluator(o, 65);
    return o;
}

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

std::vector<OrbitData> all_presets() {
    std::vector<OrbitData> v;
    for (const auto& nm : preset_names()) v.push_back(make_preset(nm));
    PresetParams k;
    k.variant = "kepler";
    v.push_back(make_preset("negative_P_synthetic", k));
    return v;
}

}  // namespace

TEST(EulerLagrange, PresetsSolve) {
    auto kep = euler_lagrange_residual(make_preset("kepler_circular"));
    EXPECT_LT(kep.eq, 1e-10);
    EXPECT_LT(kep.energy, 1e-10);
    auto flat = euler_lagrange_residual(make_preset("flat_torus"));
    EXPECT_LT(flat.eq, 1e-12);
    EXPECT_LT(flat.energy, 1e-12);
}

TEST(EulerLagrange, PerturbedRadiusFlagged) {
    OrbitData o = make_preset("kepler_circular");
    auto cb = *o.callbacks;
    auto x0 = cb.x;
    auto v0 = cb.xprime;
    cb.x = [x0](double t) { return Vec(1.01 * x0(t)); };
    cb.xprime = [v0](double t) { return Vec(1.01 * v0(t)); };
    o.callbacks = cb;
    EXPECT_GT(euler_lagrange_residual(o).eq, 1e-3);
}

TEST(EulerLagrange, MissingCallbacks) {
    OrbitData o = custom(1, 1.0, [](double) { return constant(Mat::Identity(1, 1), Mat::Zero(1, 1), Mat::Zero(1, 1), Vec::Ones(1)); });
    EXPECT_THROW(euler_lagrange_residual(o), MissingCallbacks);
}

TEST(Kappa, Classification) {
    Vec e1 = Vec::Unit(2, 0);
    auto pos = custom(2, 1.0, [=](double) { return constant(Mat::Identity(2, 2), Mat::Zero(2, 2), Mat::Zero(2, 2), e1); });
    auto kp = kappa_classify(pos);
    EXPECT_EQ(kp.cls, NullClass::LPositive);
    EXPECT_DOUBLE_EQ(kp.min, 1.0);
    EXPECT_DOUBLE_EQ(kp.max, 1.0);
    auto neg = custom(2, 1.0, [=](double) { return constant(-Mat::Identity(2, 2), Mat::Zero(2, 2), Mat::Zero(2, 2), e1); });
    EXPECT_EQ(kappa_classify(neg).cls, NullClass::LNegative);
    auto mixed = custom(2, 1.0, [](double t) {
        Mat P = Eigen::Vector2d(1, -1).asDiagonal();
        return constant(P, Mat::Zero(2, 2), Mat::Zero(2, 2), Eigen::Vector2d(std::cos(2 * kPi * t), std::sin(2 * kPi * t)));
    });
    auto km = kappa_classify(mixed);
    EXPECT_EQ(km.cls, NullClass::NotNonNull);
    for (std::size_t i = 0; i < km.t.size(); ++i) EXPECT_NEAR(km.kappa[i], std::cos(4 * kPi * km.t[i]), 1e-12);
}

TEST(HamiltonianCoefficient, Examples) {
    auto free = custom(2, 1.0, [](double) {
        return constant(Mat::Identity(2, 2), Mat::Zero(2, 2), Mat::Zero(2, 2), Vec::Unit(2, 0));
    });
    Mat B = hamiltonian_coefficient(free, 0.3);
    Mat want = Mat::Zero(4, 4);
    want.topLeftCorner(2, 2) = Mat::Identity(2, 2);
    EXPECT_LT(max_abs(B - want), 1e-14);

    auto osc = custom(1, 2 * kPi, [](double) {
        return constant(Mat::Identity(1, 1), Mat::Zero(1, 1), -Mat::Identity(1, 1), Vec::Ones(1));
    });
    EXPECT_LT(max_abs(hamiltonian_coefficient(osc, 0.7) - 2 * kPi * Mat::Identity(2, 2)), 1e-12);
}

// B = T · Hess H in (p, q) order, H(q, p) = ½(p − Qq)ᵀP⁻¹(p − Qq) − ½qᵀRq
TEST(HamiltonianCoefficient, MatchesLegendreHessian) {
    rnd::Rng g(7);
    for (int rep = 0; rep < 5; ++rep) {
        const int n = 2;
        Mat G = rnd::gaussian(g, n, n);
        Mat P = G * G.transpose() + Mat::Identity(n, n);
        Mat Q = rnd::gaussian(g, n, n), R = rnd::symmetric(g, n);
        const double T = 1.7;
        auto o = custom(n, T, [=](double) { return constant(P, Q, R, Vec::Unit(n, 0)); });
        Mat B = hamiltonian_coefficient(o, 0.5);
        EXPECT_LT(max_abs(B - B.transpose()), 1e-12);
        const Mat Pi = P.inverse();
        auto H = [&](const Vec& z) {
            Vec p = z.head(n), q = z.tail(n);
            Vec w = p - Q * q;
            return 0.5 * w.dot(Pi * w) - 0.5 * q.dot(R * q);
        };
        const double e = 1e-3;
        Mat Hess(2 * n, 2 * n);
        for (int i = 0; i < 2 * n; ++i)
            for (int j = 0; j < 2 * n; ++j) {
                Vec ei = Vec::Unit(2 * n, i) * e, ej = Vec::Unit(2 * n, j) * e;
                Vec z = Vec::Zero(2 * n);
                Hess(i, j) = (H(z + ei + ej) - H(z + ei - ej) - H(z - ei + ej) + H(z - ei - ej)) / (4 * e * e);
            }
        EXPECT_LT(max_abs(B - T * Hess), 1e-6) << rep;
    }
}

TEST(HamiltonianCoefficient, SingularP) {
    auto o = custom(1, 1.0, [](double) { return constant(Mat::Identity(1, 1), Mat::Zero(1, 1), Mat::Zero(1, 1), Vec::Ones(1)); });
    o.coeffs = [](double) { return constant(Mat::Zero(1, 1), Mat::Zero(1, 1), Mat::Zero(1, 1), Vec::Ones(1)); };
    EXPECT_THROW(hamiltonian_coefficient(o, 0.2), SingularP);
}

TEST(FundamentalSolution, FreeParticleClosedForm) {
    OrbitData o = make_preset("flat_torus");
    auto psi = fundamental_solution(o, 200);
    for (double t : {0.0, 0.25, 0.6, 1.0}) {
        Mat want = Mat::Identity(4, 4);
        want.bottomLeftCorner(2, 2) = t * o.T * Mat::Identity(2, 2);
        EXPECT_LT(max_abs(psi.eval(t) - want), 1e-12) << t;
    }
}

TEST(FundamentalSolution, HarmonicIsRotation) {
    auto osc = custom(1, 2 * kPi, [](double) {
        return constant(Mat::Identity(1, 1), Mat::Zero(1, 1), -Mat::Identity(1, 1), Vec::Ones(1));
    });
    auto psi = fundamental_solution(osc, 2000);
    for (double t : {0.1, 0.5, 0.93, 1.0}) EXPECT_LT(max_abs(psi.eval(t) - expJ(1, 2 * kPi * t)), 1e-9) << t;
}

TEST(FundamentalSolution, SymplecticityAndHalving) {
    for (const auto& o : all_presets()) {
        FundamentalSolutionInfo a, b;
        fundamental_solution(o, 2000, &a);
        fundamental_solution(o, 4000, &b);
        EXPECT_LE(a.symplecticity_residual, 1e-8) << o.name;
        if (a.symplecticity_residual > 1e-12) EXPECT_LE(3 * b.symplecticity_residual, a.symplecticity_residual) << o.name;
    }
}

TEST(FundamentalSolution, RejectsFewSteps) {
    EXPECT_THROW(fundamental_solution(make_preset("flat_torus"), 8), InvalidInput);
}

TEST(GeometricalIndex, Examples) {
    auto circ = make_preset("circle_free_particle");
    EXPECT_EQ(geometrical_index(circ, fundamental_solution(circ)).igeo, 1);
    auto osc = custom(1, 2 * kPi, [](double) {
        return constant(Mat::Identity(1, 1), Mat::Zero(1, 1), -Mat::Identity(1, 1), Vec::Ones(1));
    });
    EXPECT_EQ(geometrical_index(osc, fundamental_solution(osc)).igeo, 2);
    // T = 1: only the start crossing, positive definite; matches m- + n = 1 + 1
    auto short_osc = custom(1, 1.0, [](double) {
        return constant(Mat::Identity(1, 1), Mat::Zero(1, 1), -Mat::Identity(1, 1), Vec::Ones(1));
    });
    EXPECT_EQ(geometrical_index(short_osc, fundamental_solution(short_osc)).igeo, 2);
}

TEST(GeometricalIndex, StableUnderRefinement) {
    for (const auto& o : all_presets()) {
        const int ref = geometrical_index(o, fundamental_solution(o, 512)).igeo;
        EXPECT_EQ(geometrical_index(o, fundamental_solution(o, 2000)).igeo, ref) << o.name;
    }
}

TEST(Monodromy, VelocityIsFloquetVector) {
    for (const auto& o : all_presets()) {
        auto g = geometrical_index(o, fundamental_solution(o));
        EXPECT_GE(eigenspace_one_dim(g.monodromy, 1e-7), 1) << o.name;
    }
}

TEST(Presets, BoundaryCompatibility) {
    for (const auto& o : all_presets()) {
        EXPECT_LE(boundary_residual(o), 1e-10) << o.name;
        EXPECT_NO_THROW(validate_orbit(o)) << o.name;
    }
}

TEST(Presets, InvalidParameters) {
    PresetParams p;
    p.h = 0.1;
    EXPECT_THROW(make_preset("kepler_circular", p), InvalidInput);
    EXPECT_THROW(make_preset("no_such_preset"), InvalidInput);
}

TEST(Validate, RejectsBadData) {
    auto o = make_preset("flat_torus");
    o.A(0, 0) = 2;
    EXPECT_THROW(validate_orbit(o), InvalidInput);
    auto s = make_preset("flat_torus");
    s.P[3] = Mat::Zero(2, 2);
    EXPECT_THROW(validate_orbit(s), SingularP);
}

TEST(EstimateTprime, Examples) {
    auto kep = make_preset("kepler_circular");
    const double analytic = 6 * kPi * std::pow(-2 * kep.h, -2.5);
    EXPECT_NEAR(estimate_tprime(kep.period_of_h, kep.h) / analytic, 1.0, 1e-6);
    auto flat = make_preset("flat_torus");
    EXPECT_LT(estimate_tprime(flat.period_of_h, flat.h), 0);
    auto osc = make_preset("harmonic_loop");
    EXPECT_NEAR(estimate_tprime(osc.period_of_h, osc.h), 0.0, 1e-12);
    EXPECT_THROW(estimate_tprime({}, 0.0), FamilyUnavailable);
}

TEST(OrbitFile, RoundTrip) {
    auto o = make_preset("kepler_circular");
    const auto path = (std::filesystem::temp_directory_path() / "symindex_orbit_rt.json").string();
    write_orbit_file(o, path);
    OrbitData r = read_orbit_file(path);
    EXPECT_EQ(r.n, o.n);
    EXPECT_DOUBLE_EQ(r.T, o.T);
    ASSERT_TRUE(r.tprime_h.has_value());
    EXPECT_DOUBLE_EQ(*r.tprime_h, *o.tprime_h);
    for (double t : {0.0, 0.137, 0.5, 0.9}) {
        Coefficients a = o.at(t), b = r.at(t);
        EXPECT_LT(max_abs(a.P - b.P), 1e-6);
        EXPECT_LT(max_abs(a.R - b.R), 1e-6);
        EXPECT_LT((a.xp - b.xp).cwiseAbs().maxCoeff(), 1e-6);
    }
    EXPECT_EQ(geometrical_index(r, fundamental_solution(r)).igeo, geometrical_index(o, fundamental_solution(o)).igeo);
    std::filesystem::remove(path);
}

TEST(OrbitFile, Malformed) {
    EXPECT_THROW(orbit_from_json("{not json"), Io);
    EXPECT_THROW(orbit_from_json(R"({"schema":"orbit_v0"})"), InvalidInput);
    EXPECT_THROW(orbit_from_json(R"({"schema":"orbit_v1","n":1,"T":1,"h":0,"A":[1],"grid":[0,1],"P":[[1]],"Q":[],"R":[],"Lq":[],"xprime":[]})"),
                 InvalidInput);
    EXPECT_THROW(read_orbit_file("/nonexistent/orbit.json"), Io);
}
