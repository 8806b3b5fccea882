#pragma once

#include <cmath>
#include <numbers>
#include <optional>
#include <vector>

#include "symindex/orbit_model.hpp"
#include "symindex/spectral_flow.hpp"

namespace symindex {

// ---- A-twisted trigonometric basis ----

struct GalerkinBasis {
    enum class Kind { Periodic, Antiperiodic, Rotation };
    struct Block {
        Kind kind;
        Mat V;  // n×1 or n×2 orthonormal columns
        double theta = 0.0;
    };

    int n = 1;
    int N = 4;
    std::vector<Block> blocks;
    double gram_condition = 1.0;

    int size() const { return n * N; }

    // periodic scalar mode k of N: 1, cos 2πt, sin 2πt, cos 4πt, ...
    static void periodic_mode(int k, double t, double& f, double& df) {
        constexpr double tp = 2 * std::numbers::pi;
        if (k == 0) {
            f = 1;
            df = 0;
            return;
        }
        const int m = (k + 1) / 2;
        const double w = tp * m;
        if (k % 2 == 1) {
            f = std::cos(w * t);
            df = -w * std::sin(w * t);
        } else {
            f = std::sin(w * t);
            df = w * std::cos(w * t);
        }
    }
    // cos((2m+1)πt), sin((2m+1)πt)
    static void antiperiodic_mode(int k, double t, double& f, double& df) {
        const int m = k / 2;
        const double w = (2 * m + 1) * std::numbers::pi;
        if (k % 2 == 0) {
            f = std::cos(w * t);
            df = -w * std::sin(w * t);
        } else {
            f = std::sin(w * t);
            df = w * std::cos(w * t);
        }
    }

    // Φ(t), Φ′(t): n × nN
    void eval(double t, Mat& Phi, Mat& dPhi) const {
        Phi.setZero(n, size());
        dPhi.setZero(n, size());
        int col = 0;
        for (const auto& b : blocks) {
            if (b.kind == Kind::Rotation) {
                const double c = std::cos(b.theta * t), s = std::sin(b.theta * t);
                Eigen::Matrix2d Rm, dRm;
                Rm << c, s, -s, c;  // R(−θt)
                dRm << -b.theta * s, b.theta * c, -b.theta * c, -b.theta * s;
                for (int i = 0; i < 2; ++i)
                    for (int k = 0; k < N; ++k) {
                        double f, df;
                        periodic_mode(k, t, f, df);
                        Vec e = Vec::Zero(2);
                        e(i) = 1;
                        Phi.col(col) = b.V * (Rm * e) * f;
                        dPhi.col(col) = b.V * (dRm * e * f + Rm * e * df);
                        ++col;
                    }
            } else {
                for (int k = 0; k < N; ++k) {
                    double f, df;
                    if (b.kind == Kind::Periodic) periodic_mode(k, t, f, df);
                    else antiperiodic_mode(k, t, f, df);
                    Phi.col(col) = b.V.col(0) * f;
                    dPhi.col(col) = b.V.col(0) * df;
                    ++col;
                }
            }
        }
    }
};

// Gauss–Legendre nodes/weights on [−1, 1] (Golub–Welsch)
inline void gauss_legendre(int q, Vec& x, Vec& w) {
    Mat Jm = Mat::Zero(q, q);
    for (int i = 1; i < q; ++i) {
        const double b = i / std::sqrt(4.0 * i * i - 1.0);
        Jm(i, i - 1) = Jm(i - 1, i) = b;
    }
    Eigen::SelfAdjointEigenSolver<Mat> es(Jm);
    x = es.eigenvalues();
    w = 2 * es.eigenvectors().row(0).transpose().array().square();
}

inline GalerkinBasis build_basis(const OrbitData& o, int N) {
    if (N < 1) throw InvalidInput("Galerkin truncation N must be positive");
    GalerkinBasis gb;
    gb.n = o.n;
    gb.N = N;
    Eigen::RealSchur<Mat> rs(o.A);
    const Mat& Tm = rs.matrixT();
    const Mat& U = rs.matrixU();
    for (int i = 0; i < o.n;) {
        if (i + 1 < o.n && std::abs(Tm(i + 1, i)) > 1e-12) {
            GalerkinBasis::Block b;
            b.kind = GalerkinBasis::Kind::Rotation;
            b.V = U.middleCols(i, 2);
            b.theta = std::atan2(Tm(i + 1, i), Tm(i, i));
            gb.blocks.push_back(b);
            i += 2;
        } else {
            GalerkinBasis::Block b;
            b.kind = Tm(i, i) > 0 ? GalerkinBasis::Kind::Periodic : GalerkinBasis::Kind::Antiperiodic;
            b.V = U.col(i);
            gb.blocks.push_back(b);
            i += 1;
        }
    }
    // H¹ Gram matrix conditioning
    Vec x, w;
    gauss_legendre(8, x, w);
    const int panels = std::max(16, 2 * N);
    Mat G = Mat::Zero(gb.size(), gb.size());
    Mat Phi, dPhi;
    for (int p = 0; p < panels; ++p)
        for (int j = 0; j < x.size(); ++j) {
            const double t = (p + 0.5 * (x(j) + 1)) / panels, wt = 0.5 * w(j) / panels;
            gb.eval(t, Phi, dPhi);
            G.noalias() += wt * (Phi.transpose() * Phi + dPhi.transpose() * dPhi);
        }
    Vec ev = sym_eigenvalues(G);
    gb.gram_condition = ev(ev.size() - 1) / ev(0);
    return gb;
}

inline double boundary_twist_residual(const GalerkinBasis& gb, const Mat& A) {
    Mat P0, d0, P1, d1;
    gb.eval(0.0, P0, d0);
    gb.eval(1.0, P1, d1);
    return max_abs(P0 - A * P1);
}

// ---- assembled pieces ----

// free form  I_s = [[H1 + s·Au, b],[bᵀ, (1+s)·kap]], fixed form  H1 + s·Au
struct FormPieces {
    Mat H1, Au;
    Vec b;
    double kap = 0.0;
    int panels = 0;
    int dim() const { return static_cast<int>(H1.rows()); }
    Mat free_form(double s) const {
        const int d = dim();
        Mat F(d + 1, d + 1);
        F.topLeftCorner(d, d) = H1 + s * Au;
        F.topRightCorner(d, 1) = b;
        F.bottomLeftCorner(1, d) = b.transpose();
        F(d, d) = (1 + s) * kap;
        return F;
    }
    Mat fixed_form(double s) const { return H1 + s * Au; }
    Mat free_slope() const {
        const int d = dim();
        Mat F = Mat::Zero(d + 1, d + 1);
        F.topLeftCorner(d, d) = Au;
        F(d, d) = kap;
        return F;
    }
};

struct AssembledForm {
    double s = 0.0;
    Mat matrix;
    int panels = 0;
    int nodes_per_panel = 8;
};

namespace detail {

inline FormPieces assemble_pieces_at(const OrbitData& o, const GalerkinBasis& gb, int panels) {
    Vec x, w;
    gauss_legendre(8, x, w);
    const int d = gb.size();
    const double T = o.T;
    FormPieces fp;
    fp.H1 = Mat::Zero(d, d);
    fp.Au = Mat::Zero(d, d);
    fp.b = Vec::Zero(d);
    fp.panels = panels;
    Mat Phi, dPhi;
    for (int p = 0; p < panels; ++p)
        for (int j = 0; j < x.size(); ++j) {
            const double t = (p + 0.5 * (x(j) + 1)) / panels, wt = 0.5 * w(j) / panels;
            Coefficients c = o.at(t);
            gb.eval(t, Phi, dPhi);
            Mat QPhi = c.Q * Phi;
            Mat cross = dPhi.transpose() * QPhi;
            fp.H1.noalias() += wt * (dPhi.transpose() * (c.P / T) * dPhi + cross + cross.transpose() +
                                     Phi.transpose() * (T * c.R) * Phi);
            fp.Au.noalias() += wt * (Phi.transpose() * (c.P / T) * Phi);
            Vec Px = c.P * c.xp;
            Vec g = c.Lq - c.Q.transpose() * c.xp / T;
            fp.b.noalias() += wt * (-(dPhi.transpose() * Px) / (T * T) + Phi.transpose() * g);
            fp.kap += wt * c.xp.dot(Px) / (T * T * T);
        }
    fp.H1 = 0.5 * (fp.H1 + fp.H1.transpose());
    fp.Au = 0.5 * (fp.Au + fp.Au.transpose());
    return fp;
}

inline double pieces_diff(const FormPieces& a, const FormPieces& b) {
    return std::max({max_abs(a.H1 - b.H1), max_abs(a.Au - b.Au), max_abs(Mat(a.b - b.b)), std::abs(a.kap - b.kap)});
}
inline double pieces_scale(const FormPieces& a) {
    return std::max({1.0, max_abs(a.H1), max_abs(a.Au), max_abs(Mat(a.b)), std::abs(a.kap)});
}

}  // namespace detail

// composite Gauss–Legendre, panels doubled until entries move by <= quad_tol (relative to the largest entry)
inline FormPieces assemble_pieces(const OrbitData& o, const GalerkinBasis& gb, double quad_tol = 1e-10) {
    int panels = std::max(16, gb.N);
    FormPieces cur = detail::assemble_pieces_at(o, gb, panels);
    for (int it = 0; it < 6; ++it) {
        FormPieces nxt = detail::assemble_pieces_at(o, gb, 2 * panels);
        const double diff = detail::pieces_diff(cur, nxt);
        cur = std::move(nxt);
        panels *= 2;
        if (diff <= quad_tol * detail::pieces_scale(cur)) break;
    }
    return cur;
}

inline void require_non_null(const OrbitData& o) {
    if (kappa_classify(o).cls == NullClass::NotNonNull) throw NotNonNull("kappa changes sign or vanishes along '" + o.name + "'");
}

inline AssembledForm assemble_free(const OrbitData& o, const GalerkinBasis& gb, double s) {
    require_non_null(o);
    FormPieces fp = assemble_pieces(o, gb);
    return {s, fp.free_form(s), fp.panels, 8};
}

inline AssembledForm assemble_fixed(const OrbitData& o, const GalerkinBasis& gb, double s) {
    require_non_null(o);
    FormPieces fp = assemble_pieces(o, gb);
    return {s, fp.fixed_form(s), fp.panels, 8};
}

// ---- threshold s₀ ----

struct S0Choice {
    double s0 = 0.0;
    double gap = 0.0;
    double pencil_bound = 0.0;                // last crossing of the affine family, when the slope is definite
    std::optional<double> analytic_bound;     // C₁–C₄ sufficient bound
};

namespace detail {

inline double spectral_gap(const Mat& S) { return sym_eigenvalues(S).cwiseAbs().minCoeff(); }
inline double zero_tol_of(const Mat& S) { return 1e-9 * std::max(1e-300, sym_eigenvalues(S).cwiseAbs().maxCoeff()); }

// largest s with F0 + s F1 singular, F1 definite; nullopt if F1 indefinite
inline std::optional<double> pencil_last_crossing(const Mat& F0, const Mat& F1) {
    Vec ev = sym_eigenvalues(F1);
    const double sc = ev.cwiseAbs().maxCoeff();
    double sigma;
    if (ev.minCoeff() > 1e-12 * sc) sigma = 1;
    else if (ev.maxCoeff() < -1e-12 * sc) sigma = -1;
    else return std::nullopt;
    Eigen::LLT<Mat> llt(sigma * F1);
    Mat Linv = llt.matrixL().solve(Mat::Identity(F1.rows(), F1.cols()));
    Vec lam = sym_eigenvalues(Linv * F0 * Linv.transpose());
    double smax = 0;
    for (int i = 0; i < lam.size(); ++i) smax = std::max(smax, -sigma * lam(i));
    return smax;
}

inline double sup_norm_bound(const OrbitData& o, int points, const std::function<double(const Coefficients&, const Coefficients&)>& f) {
    double m = 0;
    const double dt = 1e-5;
    for (int i = 0; i <= points; ++i) {
        const double t = static_cast<double>(i) / points;
        Coefficients c = o.at(t);
        Coefficients cp = o.at(std::min(1.0, t + dt)), cm = o.at(std::max(0.0, t - dt));
        Coefficients d = c;
        d.P = (cp.P - cm.P) / (std::min(1.0, t + dt) - std::max(0.0, t - dt));
        m = std::max(m, f(c, d));
    }
    return m;
}

}  // namespace detail

// smallest s making [[1/T², −C₁/2, −C₃/2], [−C₁/2, s/T² − C₂, −C₄/2], [−C₃/2, −C₄/2, (s+1)|κ|min/T³]] positive definite
inline double analytic_s0_bound(const OrbitData& o) {
    const double T = o.T;
    auto nrm = [](const Mat& M) { return spectral_norm(M); };
    auto pinv = [](const Mat& P) { return Mat(P.inverse()); };
    const int pts = 200;
    const double C1 = detail::sup_norm_bound(o, pts, [&](const Coefficients& c, const Coefficients& d) {
        Mat Pi = pinv(c.P);
        return nrm(d.P * Pi) / (T * T) + nrm(c.Q * Pi) / T + nrm(c.Q.transpose() * Pi) / T;
    });
    const double C2 = detail::sup_norm_bound(o, pts, [&](const Coefficients& c, const Coefficients& d) {
        Mat Pi = pinv(c.P);
        return nrm(c.Q * Pi) * nrm(d.P * Pi) / T + nrm(c.R * Pi);
    });
    const double C3 = detail::sup_norm_bound(o, pts, [&](const Coefficients& c, const Coefficients&) {
        const double px = (c.P * c.xp).norm();
        return px / (T * T * T) + px * nrm(pinv(c.P)) / (T * T) + (c.Lq - c.Q.transpose() * c.xp / T).norm() / T;
    });
    const double C4 = detail::sup_norm_bound(o, pts, [&](const Coefficients& c, const Coefficients&) {
        const double px = (c.P * c.xp).norm();
        return px * nrm(c.P * pinv(c.P)) / (T * T * T) + (c.Lq - c.Q * c.xp / T).norm() * nrm(pinv(c.P));
    });
    KappaInfo ki = kappa_classify(o);
    const double kmin = std::min(std::abs(ki.min), std::abs(ki.max));
    auto pd = [&](double s) {
        Eigen::Matrix3d M;
        M << 1 / (T * T), -C1 / 2, -C3 / 2, -C1 / 2, s / (T * T) - C2, -C4 / 2, -C3 / 2, -C4 / 2,
            (s + 1) * kmin / (T * T * T);
        return Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d>(M).eigenvalues().minCoeff() > 0;
    };
    if (pd(0)) return 0.0;
    double lo = 0, hi = 1;
    while (!pd(hi)) {
        hi *= 2;
        if (hi > 1e15) return std::numeric_limits<double>::infinity();
    }
    for (int it = 0; it < 100 && hi - lo > 1e-12 * hi; ++it) {
        const double m = 0.5 * (lo + hi);
        (pd(m) ? hi : lo) = m;
    }
    return hi;
}

inline S0Choice choose_s0(const FormPieces& fp, double s_start = 1.0 / 64) {
    S0Choice ch;
    auto pf = detail::pencil_last_crossing(fp.free_form(0), fp.free_slope());
    auto px = detail::pencil_last_crossing(fp.fixed_form(0), fp.Au);
    ch.pencil_bound = std::max(pf.value_or(0.0), px.value_or(0.0));
    auto ok = [&](double s, int& mf, int& mx, double& gap) {
        Mat F = fp.free_form(s), G = fp.fixed_form(s);
        const double gf = detail::spectral_gap(F), gx = detail::spectral_gap(G);
        gap = std::min(gf, gx);
        mf = morse_index(F);
        mx = morse_index(G);
        return gf >= 10 * detail::zero_tol_of(F) && gx >= 10 * detail::zero_tol_of(G) && s > ch.pencil_bound;
    };
    for (double s = s_start; s <= std::ldexp(1.0, 20); s *= 2) {
        int mf1, mx1, mf2, mx2;
        double g1, g2;
        if (!ok(s, mf1, mx1, g1)) continue;
        if (!ok(2 * s, mf2, mx2, g2)) continue;
        if (mf1 != mf2 || mx1 != mx2) continue;
        // tighten inside (s/2, s]
        double lo = s / 2, hi = s;
        if (s > s_start)
            for (int it = 0; it < 30 && hi - lo > 1e-3 * hi; ++it) {
                const double mid = 0.5 * (lo + hi);
                int a, b;
                double g;
                if (ok(mid, a, b, g) && a == mf1 && b == mx1) hi = mid;
                else lo = mid;
            }
        int a, b;
        ok(hi, a, b, g1);
        ch.s0 = hi;
        ch.gap = g1;
        return ch;
    }
    throw S0Exhausted("no admissible s0 up to 2^20");
}

inline S0Choice choose_s0(const OrbitData& o, const GalerkinBasis& gb) {
    require_non_null(o);
    S0Choice ch = choose_s0(assemble_pieces(o, gb));
    ch.analytic_bound = analytic_s0_bound(o);
    return ch;
}

// ---- spectral indices ----

struct SpectralIndices {
    int ispec_free = 0;
    int ispec_fixed = 0;
    double s0 = 0.0;
    double gap = 0.0;
    int morse_free_at_0 = 0;
    int morse_fixed_at_0 = 0;
    int kernel_fixed_at_0 = 0;
    std::vector<FormCrossing> crossings_free, crossings_fixed;
};

inline std::vector<double> s_grid(double s0, int uniform = 64) {
    std::vector<double> g;
    for (int i = 0; i <= uniform; ++i) g.push_back(s0 * i / uniform);
    for (int k = 1; k <= 12; ++k) g.push_back(s0 * std::ldexp(1.0, -k - 6));
    std::sort(g.begin(), g.end());
    g.erase(std::unique(g.begin(), g.end()), g.end());
    return g;
}

inline SpectralIndices spectral_indices(const FormPieces& fp, const S0Choice& ch) {
    SpectralIndices si;
    si.s0 = ch.s0;
    si.gap = ch.gap;
    auto fpc = std::make_shared<FormPieces>(fp);
    SymmetricFormPath pf = SymmetricFormPath::from_function([fpc](double s) { return fpc->free_form(s); }, 0, ch.s0);
    SymmetricFormPath px = SymmetricFormPath::from_function([fpc](double s) { return fpc->fixed_form(s); }, 0, ch.s0);
    pf.grid = px.grid = s_grid(ch.s0);
    SpflResult rf = spectral_flow_detail(pf), rx = spectral_flow_detail(px);
    si.ispec_free = rf.value;
    si.ispec_fixed = rx.value;
    si.crossings_free = std::move(rf.crossings);
    si.crossings_fixed = std::move(rx.crossings);
    si.morse_free_at_0 = morse_index(fp.free_form(0));
    Inertia in = signature_rel(fp.fixed_form(0));
    si.morse_fixed_at_0 = in.n_minus;
    si.kernel_fixed_at_0 = in.n_zero;
    return si;
}

inline SpectralIndices spectral_indices(const OrbitData& o, const GalerkinBasis& gb) {
    require_non_null(o);
    FormPieces fp = assemble_pieces(o, gb);
    return spectral_indices(fp, choose_s0(fp));
}

// ---- difference decomposition ----

struct IndexDifferenceReport {
    int ispec_free = 0, ispec_fixed = 0;
    int leg_0 = 0;   // ε-leg at s = 0 (shrink)
    int leg_s0 = 0;  // ε-leg at s₀ (grow)
    int kappa_sign = 0, tprime_sign = 0;
    int total() const { return ispec_free - ispec_fixed; }
    // four-branch table of the difference, and of each leg
    int table_total = 0, table_leg_0 = 0, table_leg_s0 = 0;
    bool identity_holds = false;
    bool matches_table() const { return total() == table_total && leg_0 == table_leg_0 && leg_s0 == table_leg_s0; }
};

inline int sign_of(double x) { return x > 0 ? 1 : (x < 0 ? -1 : 0); }

inline IndexDifferenceReport difference_decomposition(const OrbitData& o, const FormPieces& fp, const SpectralIndices& si) {
    if (!o.tprime_h) throw MissingTprime("orbit '" + o.name + "' has no T'(h)");
    IndexDifferenceReport r;
    r.ispec_free = si.ispec_free;
    r.ispec_fixed = si.ispec_fixed;
    KappaInfo ki = kappa_classify(o);
    r.kappa_sign = ki.cls == NullClass::LPositive ? 1 : (ki.cls == NullClass::LNegative ? -1 : 0);
    r.tprime_sign = sign_of(*o.tprime_h);
    const Mat b = fp.b;
    BlockPerturbationFamily at0{fp.fixed_form(0), b, Mat::Constant(1, 1, fp.kap)};
    BlockPerturbationFamily ats0{fp.fixed_form(si.s0), b, Mat::Constant(1, 1, (1 + si.s0) * fp.kap)};
    r.leg_0 = spfl_family_shrink(at0);
    r.leg_s0 = spfl_family_grow(ats0);
    r.identity_holds = r.leg_0 + r.ispec_fixed + r.leg_s0 == r.ispec_free;
    if (!r.identity_holds)
        throw LedgerMismatch("homotopy legs do not sum: " + std::to_string(r.leg_0) + " + " +
                             std::to_string(r.ispec_fixed) + " + " + std::to_string(r.leg_s0) +
                             " != " + std::to_string(r.ispec_free));
    const bool tp_nonneg = *o.tprime_h >= 0;  // T′ = 0 goes with the ≥ 0 branch
    r.table_leg_0 = tp_nonneg ? 1 : 0;
    r.table_leg_s0 = r.kappa_sign < 0 ? 1 : 0;
    r.table_total = r.table_leg_0 + r.table_leg_s0;
    return r;
}

inline IndexDifferenceReport difference_decomposition(const OrbitData& o, const GalerkinBasis& gb) {
    if (!o.tprime_h) throw MissingTprime("orbit '" + o.name + "' has no T'(h)");
    require_non_null(o);
    FormPieces fp = assemble_pieces(o, gb);
    return difference_decomposition(o, fp, spectral_indices(fp, choose_s0(fp)));
}

// ---- ι_geo = ι_spec^T + dim ker(A − I) ----

struct GeoSpecRelation {
    bool holds = false;
    int igeo = 0, ispec_fixed = 0, dim_ker_A_minus_I = 0;
};

inline GeoSpecRelation check_relation_geo_spec(const OrbitData& o, const GalerkinBasis& gb, const SymplecticPath& psi) {
    GeoSpecRelation r;
    r.igeo = geometrical_index(o, psi).igeo;
    r.ispec_fixed = spectral_indices(o, gb).ispec_fixed;
    r.dim_ker_A_minus_I = eigenspace_one_dim(o.A);
    r.holds = r.igeo == r.ispec_fixed + r.dim_ker_A_minus_I;
    return r;
}

}  // namespace symindex
