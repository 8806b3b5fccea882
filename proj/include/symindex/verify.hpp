#pragma once

#include <chrono>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "symindex/pipeline.hpp"
#include "symindex/random.hpp"

namespace symindex::verify {

struct CriterionResult {
    int id = 0;
    std::string title;
    bool pass = false;
    std::string detail;
    double seconds = 0.0;
    double limit = 0.0;
};

namespace detail {

inline Mat m1(double x) { return Mat::Constant(1, 1, x); }

inline SymplecticPath shear_path(double T0) {
    return SymplecticPath::from_function(
        [T0](double t) {
            Mat M(2, 2);
            M << 1, 0, t * T0, 1;
            return M;
        },
        0, 1);
}

struct Tally {
    int total = 0, bad = 0;
    std::string first;
    void check(bool ok, const std::string& what) {
        ++total;
        if (!ok) {
            if (bad == 0) first = what;
            ++bad;
        }
    }
    std::string summary() const {
        std::ostringstream os;
        os << (total - bad) << "/" << total << " agree";
        if (bad) os << "; first mismatch: " << first;
        return os.str();
    }
};

inline std::string pair_str(int a, int b) { return std::to_string(a) + " vs " + std::to_string(b); }

inline std::vector<Scenario> preset_scenarios() {
    std::vector<Scenario> out;
    for (const auto& nm : preset_names()) {
        Scenario s;
        s.source = nm;
        s.name = nm;
        out.push_back(s);
    }
    Scenario k;
    k.source = "negative_P_synthetic";
    k.name = "negative_P_synthetic/kepler";
    k.preset.variant = "kepler";
    out.push_back(k);
    return out;
}

}  // namespace detail

// 1: shear paths [[1,0],[tT0,1]]
inline CriterionResult criterion_1() {
    CriterionResult r{1, "special Maslov index of the shear path", false, "", 0, 1};
    Mat V(2, 1);
    V << 1, 1;
    LagrangianSubspace diag(V);
    std::ostringstream os;
    bool ok = true;
    const double T0s[] = {1.0, 0.0, -1.0};
    const int want[] = {1, 0, 0};
    for (int i = 0; i < 3; ++i) {
        const int a = clm_graph_index(detail::shear_path(T0s[i]));
        const int b = zhu_block_index(detail::shear_path(T0s[i]), diag);
        ok = ok && a == want[i] && b == want[i];
        os << "T0=" << T0s[i] << ": clm " << a << ", zhu " << b << "; ";
    }
    r.pass = ok;
    r.detail = os.str();
    return r;
}

// 2: block Morse index vs dense count
inline CriterionResult criterion_2(int reps = 200) {
    CriterionResult r{2, "block Morse index vs dense eigenvalue count", false, "", 0, 5};
    rnd::Rng g(1002);
    detail::Tally t;
    for (int rep = 0; rep < reps; ++rep) {
        const int k = rnd::uniform_int(g, 1, 5), m = rnd::uniform_int(g, 1, 5);
        Mat B = rnd::gaussian(g, k, m);
        if (rep % 3 == 0) {
            const int rk = rnd::uniform_int(g, 0, std::min(k, m) - 1);
            B = rnd::gaussian(g, k, rk) * rnd::gaussian(g, rk, m);
        }
        Mat C = rnd::symmetric(g, m);
        Mat F = Mat::Zero(k + m, k + m);
        F.topRightCorner(k, m) = B;
        F.bottomLeftCorner(m, k) = B.transpose();
        F.bottomRightCorner(m, m) = C;
        const int a = block_morse_index(B, C), b = morse_index(F);
        t.check(a == b, "rep " + std::to_string(rep) + ": " + detail::pair_str(a, b));
    }
    r.pass = t.bad == 0;
    r.detail = t.summary();
    return r;
}

// 3: growing family, A nonsingular with cond ≤ 1e3
inline CriterionResult criterion_3(int reps = 200) {
    CriterionResult r{3, "grow-family closed form vs tracked spectral flow", false, "", 0, 10};
    rnd::Rng g(1003);
    detail::Tally t;
    for (int rep = 0; rep < reps; ++rep) {
        const int k = rnd::uniform_int(g, 1, 4), m = rnd::uniform_int(g, 1, 3);
        Vec ev(k);
        for (int i = 0; i < k; ++i) ev(i) = (rnd::uniform(g, 0, 1) < 0.5 ? -1 : 1) * std::pow(10.0, rnd::uniform(g, -1.5, 1.5));
        BlockPerturbationFamily fam{rnd::with_spectrum(g, ev), rnd::gaussian(g, k, m), rnd::symmetric(g, m)};
        const int a = spfl_family_grow(fam), b = spectral_flow(fam.grow_path());
        t.check(a == b, "rep " + std::to_string(rep) + ": " + detail::pair_str(a, b));
    }
    r.pass = t.bad == 0;
    r.detail = t.summary();
    return r;
}

// 4: shrinking family, kernel of A of dimension 0..2
inline CriterionResult criterion_4(int reps = 200) {
    CriterionResult r{4, "shrink-family closed form vs tracked spectral flow", false, "", 0, 10};
    rnd::Rng g(1004);
    detail::Tally t;
    int with_kernel = 0;
    for (int rep = 0; rep < reps; ++rep) {
        const int k = rnd::uniform_int(g, 1, 4), m = rnd::uniform_int(g, 1, 3);
        Vec ev = rnd::gaussian(g, k, 1);
        const int kz = std::min(k, rnd::uniform_int(g, 0, 2));
        for (int i = 0; i < kz; ++i) ev(i) = 0;
        with_kernel += kz > 0;
        BlockPerturbationFamily fam{rnd::with_spectrum(g, ev), rnd::gaussian(g, k, m), rnd::symmetric(g, m)};
        const int a = spfl_family_shrink(fam), b = spectral_flow(fam.shrink_path());
        t.check(a == b, "rep " + std::to_string(rep) + ": " + detail::pair_str(a, b));
    }
    r.pass = t.bad == 0;
    r.detail = t.summary() + " (" + std::to_string(with_kernel) + " with singular A)";
    return r;
}

// 5: spectral flow = m⁻(a) − m⁻(b), crossings verified
inline CriterionResult criterion_5(int reps = 200) {
    CriterionResult r{5, "spectral flow equals Morse index drop", false, "", 0, 10};
    rnd::Rng g(1005);
    detail::Tally t;
    for (int rep = 0; rep < reps; ++rep) {
        const int d = rnd::uniform_int(g, 1, 10);
        Mat A0 = rnd::symmetric(g, d), A1 = rnd::symmetric(g, d), A2 = rnd::symmetric(g, d);
        auto f = [=](double s) -> Mat { return Mat(A0 + std::sin(3 * s) * A1 + s * s * A2); };
        auto res = spectral_flow_detail(SymmetricFormPath::from_function(f, 0, 1));
        const int want = morse_index(f(0)) - morse_index(f(1));
        t.check(res.value == want && res.consistent, "rep " + std::to_string(rep) + ": " + detail::pair_str(res.value, want));
    }
    r.pass = t.bad == 0;
    r.detail = t.summary();
    return r;
}

// 6: CLM properties I-IV
inline CriterionResult criterion_6(int reps = 100) {
    CriterionResult r{6, "CLM properties I-IV on random Lagrangian paths", false, "", 0, 20};
    rnd::Rng g(1006);
    detail::Tally t;
    for (int rep = 0; rep < reps; ++rep) {
        const int n = rnd::uniform_int(g, 1, 2);
        Mat S1 = rnd::symmetric(g, 2 * n, 2.0), S2 = rnd::symmetric(g, 2 * n, 2.0);
        Mat J = standard_J(n);
        Mat F0(2 * n, n);
        F0 << Mat::Identity(n, n), rnd::symmetric(g, n);
        auto frame = [=](double s) -> Mat { return Mat((s * J * S1).exp() * (s * s * J * S2).exp() * F0); };
        Mat Wf(2 * n, n);
        Wf << Mat::Identity(n, n), rnd::symmetric(g, n);
        LagrangianSubspace W(Wf);
        const std::string tag = "rep " + std::to_string(rep);
        const int base = clm_index(LagrangianPath::from_function(frame, 0, 1), W);
        const int i1 = clm_index(LagrangianPath::from_function([=](double s) { return frame(s * s); }, 0, 1), W);
        t.check(i1 == base, tag + " reparametrization " + detail::pair_str(i1, base));
        Mat S3 = rnd::symmetric(g, 2 * n, 1.0);
        const int i2 = clm_index(
            LagrangianPath::from_function([=](double s) { return Mat((s * (1 - s) * J * S3).exp() * frame(s)); }, 0, 1), W);
        t.check(i2 == base, tag + " homotopy " + detail::pair_str(i2, base));
        const double c = rnd::uniform(g, 0.3, 0.7);
        const int i3 =
            clm_index(LagrangianPath::from_function(frame, 0, c), W) + clm_index(LagrangianPath::from_function(frame, c, 1), W);
        t.check(i3 == base, tag + " additivity " + detail::pair_str(i3, base));
        Mat H = rnd::symmetric(g, 2 * n, 0.5);
        auto Phi = [=](double s) -> Mat { return Mat((s * J * H).exp()); };
        const int i4 = clm_index(LagrangianPath::from_function([=](double s) { return Mat(Phi(s) * frame(s)); }, 0, 1),
                                 LagrangianPath::from_function([=](double s) { return Mat(Phi(s) * Wf); }, 0, 1));
        t.check(i4 == base, tag + " symplectic invariance " + detail::pair_str(i4, base));
    }
    r.pass = t.bad == 0;
    r.detail = t.summary();
    return r;
}

// residuals at or below this are roundoff, nothing left to shrink
inline constexpr double kResidualFloor = 1e-12;

// 7: symplecticity of the integrator
inline CriterionResult criterion_7() {
    CriterionResult r{7, "integrator symplecticity and step-halving", false, "", 0, 5};
    std::ostringstream os;
    os.precision(3);
    bool ok = true;
    for (const auto& sc : detail::preset_scenarios()) {
        OrbitData o = load_scenario_orbit(sc);
        FundamentalSolutionInfo a, b;
        fundamental_solution(o, 2000, &a);
        fundamental_solution(o, 4000, &b);
        const bool small = a.symplecticity_residual <= 1e-8;
        const bool shrinks = a.symplecticity_residual <= kResidualFloor || b.symplecticity_residual * 3 <= a.symplecticity_residual;
        ok = ok && small && shrinks;
        os << sc.name << " " << a.symplecticity_residual << "->" << b.symplecticity_residual << (small && shrinks ? "" : " FAIL")
           << "; ";
    }
    r.pass = ok;
    r.detail = os.str();
    return r;
}

// 8: flat torus end to end
inline CriterionResult criterion_8() {
    CriterionResult r{8, "flat torus pipeline", false, "", 0, 15};
    Scenario sc;
    sc.source = "flat_torus";
    IndexReport rep = run_scenario(sc);
    OrbitData o = make_preset("flat_torus");
    SymplecticPath psi = fundamental_solution(o, sc.steps);
    SplitMonodromy sm = splitting_reduce(o, psi);
    StabilityVerdict sv = stability_classify(sm.px1, 1e-7);
    bool jordan_at_one = false;
    for (const auto& c : sv.multipliers)
        if (std::abs(c.value - cplx(1, 0)) < 1e-7 && c.geometric < c.algebraic) jordan_at_one = true;
    r.pass = rep.ispec_fixed == 0 && rep.difference == 0 && rep.table_difference == 0 && rep.igeo == 2 &&
             rep.dim_ker_A_minus_I == 2 && rep.relation_geo_spec && rep.iclm_gamma2 == 1 &&
             rep.criterion == "CertifiedUnstable" && rep.clm_parity == "CertifiedUnstable" && jordan_at_one;
    std::ostringstream os;
    os << "ispec_fixed " << rep.ispec_fixed << ", difference " << rep.difference << ", igeo " << rep.igeo << " = "
       << rep.ispec_fixed << " + " << rep.dim_ker_A_minus_I << ", iclm(gamma2) " << rep.iclm_gamma2 << ", criterion "
       << rep.criterion << ", P_x(1) " << to_string(sv.tag) << (jordan_at_one ? " (Jordan block at 1)" : "");
    r.detail = os.str();
    return r;
}

// 9: circular Kepler orbit
inline CriterionResult criterion_9() {
    CriterionResult r{9, "Kepler circular orbit", false, "", 0, 20};
    Scenario sc;
    sc.source = "kepler_circular";
    IndexReport rep = run_scenario(sc);
    OrbitData o = make_preset("kepler_circular");
    const double analytic = 6 * std::numbers::pi * std::pow(-2 * o.h, -2.5);
    const double est = estimate_tprime(o.period_of_h, o.h);
    const double rel = std::abs(est - analytic) / std::abs(analytic);
    SymplecticPath psi = fundamental_solution(o, sc.steps);
    SplitMonodromy sm = splitting_reduce(o, psi);
    const double dev = max_abs(sm.px1 - Mat::Identity(sm.px1.rows(), sm.px1.rows()));
    const bool odd = parity(rep.ispec_free + rep.n) == 1;
    r.pass = rel <= 1e-6 && rep.difference == 1 && dev <= 1e-5 && rep.stability == "LinearlyStable" &&
             rep.criterion == "Inconclusive" && rep.ledger.ok() && odd;
    std::ostringstream os;
    os.precision(3);
    os << "T' rel err " << rel << ", difference " << rep.difference << ", |P_x(1)-I| " << dev << ", " << rep.stability << ", "
       << rep.criterion << ", ispec+n = " << rep.ispec_free + rep.n << (rep.ledger.ok() ? ", ledger ok" : ", ledger FAIL");
    r.detail = os.str();
    return r;
}

// 10: κ < 0 branches of the difference table
inline CriterionResult criterion_10() {
    CriterionResult r{10, "kappa<0 branches of the difference table", false, "", 0, 20};
    std::ostringstream os;
    bool ok = true;
    for (const char* variant : {"free", "kepler"}) {
        Scenario sc;
        sc.source = "negative_P_synthetic";
        sc.preset.variant = variant;
        IndexReport rep = run_scenario(sc);
        const bool good = rep.difference == rep.table_difference && rep.leg_0 == rep.table_leg_0 && rep.leg_s0 == rep.table_leg_s0;
        ok = ok && good;
        os << variant << " (T' " << (rep.tprime_h >= 0 ? ">= 0" : "< 0") << "): difference " << rep.difference << " = "
           << rep.leg_0 << " + " << rep.leg_s0 << ", table " << rep.table_difference << " = " << rep.table_leg_0 << " + "
           << rep.table_leg_s0 << "; ";
    }
    r.pass = ok;
    r.detail = os.str();
    return r;
}

// 11: Galerkin N vs 2N, s₀ vs 2s₀
inline CriterionResult criterion_11() {
    CriterionResult r{11, "Galerkin and s0 stabilization", false, "", 0, 30};
    std::ostringstream os;
    bool ok = true;
    for (const auto& sc : detail::preset_scenarios()) {
        OrbitData o = load_scenario_orbit(sc);
        std::vector<std::array<int, 4>> got;
        for (int N : {32, 64}) {
            GalerkinBasis gb = build_basis(o, N);
            FormPieces fp = assemble_pieces(o, gb);
            S0Choice ch = choose_s0(fp);
            SpectralIndices si = spectral_indices(fp, ch);
            IndexDifferenceReport dd = difference_decomposition(o, fp, si);
            got.push_back({si.ispec_free, si.ispec_fixed, dd.leg_0, dd.leg_s0});
            S0Choice ch2 = ch;
            ch2.s0 = 2 * ch.s0;
            SpectralIndices si2 = spectral_indices(fp, ch2);
            if (si2.ispec_free != si.ispec_free || si2.ispec_fixed != si.ispec_fixed) {
                ok = false;
                os << sc.name << " N=" << N << " s0 doubling changes indices; ";
            }
        }
        if (got[0] != got[1]) {
            ok = false;
            os << sc.name << " N=32 vs 64 differ; ";
        } else {
            os << sc.name << " (" << got[0][0] << "," << got[0][1] << "); ";
        }
    }
    r.pass = ok;
    r.detail = os.str();
    return r;
}

// 12: linearly stable matrices probe into Sp⁺ on both sides
inline CriterionResult criterion_12(int reps = 100) {
    CriterionResult r{12, "linearly stable matrices lie on the positive side", false, "", 0, 5};
    rnd::Rng g(1012);
    detail::Tally t;
    int with_one = 0;
    for (int rep = 0; rep < reps; ++rep) {
        const int n = rnd::uniform_int(g, 1, 3);
        Mat R = Mat::Zero(2 * n, 2 * n);
        bool one = false;
        for (int k = 0; k < n; ++k) {
            double th = rnd::uniform(g, 0.1, 2 * std::numbers::pi - 0.1);
            if (rnd::uniform(g, 0, 1) < 0.25) {
                th = 0;
                one = true;
            }
            R(k, k) = R(n + k, n + k) = std::cos(th);
            R(k, n + k) = -std::sin(th);
            R(n + k, k) = std::sin(th);
        }
        with_one += one;
        Mat C = rnd::symplectic(g, n, 0.3);
        Mat M = C * R * C.inverse();
        try {
            auto pr = stable_component_probe(M, 1e-4);
            t.check(pr.first == SpComponent::Plus && pr.second == SpComponent::Plus,
                    "rep " + std::to_string(rep) + ": " + to_string(pr.first) + "," + to_string(pr.second));
        } catch (const Error& e) {
            t.check(false, "rep " + std::to_string(rep) + ": " + e.what());
        }
    }
    r.pass = t.bad == 0;
    r.detail = t.summary() + " (" + std::to_string(with_one) + " with eigenvalue 1)";
    return r;
}

inline std::vector<std::function<CriterionResult()>> all_criteria() {
    return {[] { return criterion_1(); },  [] { return criterion_2(); },  [] { return criterion_3(); },
            [] { return criterion_4(); },  [] { return criterion_5(); },  [] { return criterion_6(); },
            [] { return criterion_7(); },  [] { return criterion_8(); },  [] { return criterion_9(); },
            [] { return criterion_10(); }, [] { return criterion_11(); }, [] { return criterion_12(); }};
}

inline CriterionResult run_timed(const std::function<CriterionResult()>& f, int id) {
    const auto t0 = std::chrono::steady_clock::now();
    CriterionResult r;
    try {
        r = f();
    } catch (const std::exception& e) {
        r.id = id;
        r.pass = false;
        r.detail = std::string("exception: ") + e.what();
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (r.limit > 0 && r.seconds > r.limit) {
        r.pass = false;
        r.detail += " [over time limit]";
    }
    return r;
}

inline std::string format_line(const CriterionResult& r) {
    std::ostringstream os;
    os.precision(2);
    os << std::fixed << (r.pass ? "PASS" : "FAIL") << "  criterion " << r.id << ": " << r.title << " (" << r.seconds << " s / "
       << r.limit << " s) :: " << r.detail;
    return os.str();
}

// runs every criterion, prints one line each, returns the number of failures
inline int run_all(std::ostream& out) {
    int fails = 0, id = 1;
    for (const auto& f : all_criteria()) {
        CriterionResult r = run_timed(f, id++);
        out << format_line(r) << std::endl;
        fails += !r.pass;
    }
    return fails;
}

}  // namespace symindex::verify
