#pragma once

#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "symindex/index_form.hpp"
#include "symindex/orbit_model.hpp"

namespace symindex {

// ---- polar / phase helpers ----

// unitary part of the polar decomposition, as an n×n complex matrix X + iY
inline CMat unitary_part(const Mat& M) {
    const int n = static_cast<int>(M.rows() / 2);
    Eigen::JacobiSVD<Mat> svd(M, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Mat U = svd.matrixU() * svd.matrixV().transpose();
    CMat u(n, n);
    u.real() = U.topLeftCorner(n, n);
    u.imag() = U.bottomLeftCorner(n, n);
    return u;
}

inline double det_phase(const Mat& M) {
    if (M.rows() == 0) return 0.0;
    return std::arg(unitary_part(M).determinant());
}

// unwrapped change of arg det u(M(t)) along samples
inline double phase_change(const std::vector<Mat>& Ms) {
    double total = 0, prev = det_phase(Ms.front());
    for (std::size_t k = 1; k < Ms.size(); ++k) {
        const double cur = det_phase(Ms[k]);
        total += std::remainder(cur - prev, 2 * std::numbers::pi);
        prev = cur;
    }
    return total;
}

// ---- splitting ----

struct SplitMonodromy {
    double gamma1_slope = 0.0;
    SymplecticPath px_path;  // 2(n−1)-dimensional; empty matrices when n = 1
    Mat conjugator;
    Mat px1;
    double split_residual = 0.0;
    double z0_residual = 0.0;
    int winding = 0;  // extra full turns put into γ₂ for phase matching
    int iota_beta = 0;
    bool available = true;
};

namespace detail {

inline double omega(const Vec& a, const Vec& b) {
    const int n = static_cast<int>(a.size() / 2);
    return (standard_J(n) * a).dot(b);
}

// ω-orthogonal projection away from the symplectic pair (e, f), ω(e, f) = 1
inline Vec project_off(const Vec& v, const Vec& e, const Vec& f) { return v - omega(v, f) * e + omega(v, e) * f; }

// symplectic basis: columns [e1..en, f1..fn] with (e1, f1) = (w, z0)
inline Mat symplectic_completion(const Vec& w, const Vec& z0) {
    const int d = static_cast<int>(w.size()), n = d / 2;
    std::vector<Vec> es{w}, fs{z0};
    std::vector<Vec> pool;
    for (int i = 0; i < d; ++i) pool.push_back(project_off(Vec::Unit(d, i), w, z0));
    for (int k = 1; k < n; ++k) {
        int bi = -1, bj = -1;
        double best = 0;
        for (std::size_t i = 0; i < pool.size(); ++i)
            for (std::size_t j = 0; j < pool.size(); ++j) {
                const double v = std::abs(omega(pool[i], pool[j]));
                if (v > best) {
                    best = v;
                    bi = static_cast<int>(i);
                    bj = static_cast<int>(j);
                }
            }
        if (bi < 0 || best < 1e-12) throw NoCylinderBlock("symplectic completion failed");
        Vec e = pool[bi], f = pool[bj];
        const double om = omega(e, f);
        const double sc = std::sqrt(std::abs(om));
        e /= sc;
        f /= (om > 0 ? sc : -sc);
        for (auto& v : pool) v = project_off(v, e, f);
        es.push_back(e);
        fs.push_back(f);
    }
    Mat C(d, d);
    for (int k = 0; k < n; ++k) {
        C.col(k) = es[k];
        C.col(n + k) = fs[k];
    }
    return C;
}

// indices of the complement coordinates inside the 2n layout
inline std::vector<int> complement_indices(int n) {
    std::vector<int> idx;
    for (int k = 1; k < n; ++k) idx.push_back(k);
    for (int k = 1; k < n; ++k) idx.push_back(n + k);
    return idx;
}

inline Mat take(const Mat& M, const std::vector<int>& r, const std::vector<int>& c) {
    Mat out(r.size(), c.size());
    for (std::size_t i = 0; i < r.size(); ++i)
        for (std::size_t j = 0; j < c.size(); ++j) out(i, j) = M(r[i], c[j]);
    return out;
}

inline Mat shear2(double c) {
    Mat S(2, 2);
    S << 1, 0, c, 1;
    return S;
}

}  // namespace detail

struct SplitOptions {
    double split_tol = 1e-6;
};

inline SplitMonodromy splitting_reduce(const OrbitData& o, const SymplecticPath& psi, const SplitOptions& so = {}) {
    if (!o.tprime_h) throw MissingTprime("orbit '" + o.name + "' has no T'(h)");
    const int n = o.n, d = 2 * n;
    const Mat Ad = o.A_d();
    const Mat M = Ad * psi.end();
    const double Mn = std::max(1.0, spectral_norm(M));
    const double T = o.T;

    Coefficients c0 = o.at(0.0);
    Vec z0(d);
    z0 << c0.P * c0.xpp / (T * T) + c0.Q * c0.xp / T, c0.xp / T;
    SplitMonodromy sm;
    sm.z0_residual = (M * z0 - z0).norm() / z0.norm();
    const double err = std::max(psi.error_estimate, 1e-14);
    if (sm.z0_residual > std::max(1e-6, 1e3 * err)) throw NoCylinderBlock("velocity vector is not fixed by the monodromy");

    // generalized eigenvalue-1 space
    Mat D = M - Mat::Identity(d, d);
    Mat D2 = D * D;
    const double gtol = std::max(1e-7, 100 * err) * Mn * Mn;
    Mat E = null_space(D2, 1.0, gtol);
    if (E.cols() < 2) throw NoCylinderBlock("generalized eigenvalue-1 space has dimension " + std::to_string(E.cols()));
    const Vec Jz = standard_J(n).transpose() * z0;  // ω(w, z0) = wᵀ Jᵀ z0
    Vec coef = E.transpose() * Jz;
    if (coef.norm() < 1e-10 * z0.norm()) throw NoCylinderBlock("no cylinder partner with omega(w, z0) != 0");
    Vec w = E * coef;
    w /= detail::omega(w, z0);

    Mat C0 = detail::symplectic_completion(w, z0);
    const Mat C0inv = C0.inverse();
    sm.conjugator = C0;
    sm.gamma1_slope = detail::omega(w, M * w);

    Mat Mc = C0inv * M * C0;
    std::vector<int> cyl{0, n}, comp = detail::complement_indices(n);
    const double off = comp.empty() ? 0.0
                                    : std::max(max_abs(detail::take(Mc, cyl, comp)), max_abs(detail::take(Mc, comp, cyl)));
    const double cyl_res = max_abs(detail::take(Mc, cyl, cyl) - detail::shear2(sm.gamma1_slope));
    sm.split_residual = std::max(off, cyl_res) / Mn;
    if (sm.split_residual > so.split_tol) throw SplitResidualTooLarge(sm.split_residual);

    const int m = n - 1;
    sm.px1 = detail::take(Mc, comp, comp);

    // optional prefix β from I to C0⁻¹ A_d C0
    std::vector<Mat> full;
    if (!o.A.isIdentity(1e-14)) {
        Mat La = Ad.log();
        if (!La.allFinite() || max_abs((La.exp() - Ad).eval()) > 1e-10)
            throw InvalidInput("no real logarithm for the frame matrix A");
        auto beta = SymplecticPath::from_function(
            [=](double t) { return Mat(C0inv * (t * La).exp() * C0); }, 0, 1, 64);
        for (const auto& B : beta.M) full.push_back(B);
        sm.iota_beta = clm_graph_index(beta);
    }
    for (const auto& P : psi.M) full.push_back(C0inv * Ad * P * C0);
    const double dphi_full = phase_change(full);
    std::vector<Mat> g1;
    for (int k = 0; k <= 64; ++k) g1.push_back(detail::shear2(sm.gamma1_slope * k / 64.0));
    const double dphi_g1 = phase_change(g1);

    if (m == 0) {
        sm.px_path = SymplecticPath::from_function([](double) { return Mat(0, 0); }, 0, 1, 1);
        return sm;
    }
    // the conjugated path itself, when it splits along the whole interval
    if (o.A.isIdentity(1e-14)) {
        double worst = 0;
        for (std::size_t i = 0; i < full.size() && worst <= so.split_tol; ++i) {
            const double tt = (psi.t[i] - psi.a) / (psi.b - psi.a);
            const double sc = std::max(1.0, spectral_norm(full[i]));
            worst = std::max({worst, max_abs(detail::take(full[i], cyl, comp)) / sc, max_abs(detail::take(full[i], comp, cyl)) / sc,
                              max_abs(detail::take(full[i], cyl, cyl) - detail::shear2(sm.gamma1_slope * tt)) / sc});
        }
        if (worst <= so.split_tol) {
            auto f = psi.eval;
            SymplecticPath p;
            p.a = psi.a;
            p.b = psi.b;
            p.t = psi.t;
            for (const auto& F : full) p.M.push_back(detail::take(F, comp, comp));
            p.eval = [f, C0, C0inv, comp](double t) { return detail::take(Mat(C0inv * f(t) * C0), comp, comp); };
            p.error_estimate = psi.error_estimate;
            sm.px_path = std::move(p);
            return sm;
        }
    }
    // otherwise γ₂(t) = R_k(t) O(t) S^t with P_x(1) = O S, phase-matched to the full path
    Eigen::JacobiSVD<Mat> svd(sm.px1, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Mat O = svd.matrixU() * svd.matrixV().transpose();
    Mat S = svd.matrixV() * svd.singularValues().asDiagonal() * svd.matrixV().transpose();
    Mat logS = S.log();
    CMat uO(m, m);
    uO.real() = O.topLeftCorner(m, m);
    uO.imag() = O.bottomLeftCorner(m, m);
    Eigen::ComplexEigenSolver<CMat> ces(uO);
    CMat V = ces.eigenvectors();
    // orthonormalize eigenvectors (unitary matrix: normal)
    Eigen::HouseholderQR<CMat> qr(V);
    V = qr.householderQ() * CMat::Identity(m, m);
    CMat Dg = V.adjoint() * uO * V;
    Vec theta(m);
    double dphi_base = 0;
    for (int j = 0; j < m; ++j) {
        theta(j) = std::arg(Dg(j, j));
        dphi_base += theta(j);
    }
    const double kreal = (dphi_full - dphi_g1 - dphi_base) / (2 * std::numbers::pi);
    sm.winding = static_cast<int>(std::lround(kreal));
    if (std::abs(kreal - sm.winding) > 1e-3) throw SplitResidualTooLarge(std::abs(kreal - sm.winding));
    const int kw = sm.winding;
    auto gamma2 = [V, theta, logS, m, kw](double t) -> Mat {
        CVec ph(m);
        for (int j = 0; j < m; ++j) ph(j) = std::polar(1.0, t * theta(j));
        CMat u = V * ph.asDiagonal() * V.adjoint();
        Mat Ot(2 * m, 2 * m);
        Ot << u.real(), -u.imag(), u.imag(), u.real();
        Mat Rk = Mat::Identity(2 * m, 2 * m);
        const double a = 2 * std::numbers::pi * kw * t;
        Rk(0, 0) = std::cos(a);
        Rk(0, m) = -std::sin(a);
        Rk(m, 0) = std::sin(a);
        Rk(m, m) = std::cos(a);
        return Mat(Rk * Ot * (t * logS).exp());
    };
    sm.px_path = SymplecticPath::from_function(gamma2, 0, 1, 128);
    return sm;
}

// ---- stability ----

enum class StabilityTag { LinearlyStable, SpectrallyStableNotLinearly, Unstable };

inline std::string to_string(StabilityTag t) {
    switch (t) {
        case StabilityTag::LinearlyStable: return "LinearlyStable";
        case StabilityTag::SpectrallyStableNotLinearly: return "SpectrallyStableNotLinearly";
        default: return "Unstable";
    }
}

struct StabilityVerdict {
    StabilityTag tag = StabilityTag::LinearlyStable;
    std::vector<MultiplierCluster> multipliers;
    double tol = 0.0;
};

inline StabilityVerdict stability_classify(const Mat& px1, double tol = 1e-7) {
    StabilityVerdict v;
    v.tol = tol;
    if (px1.rows() == 0) return v;
    v.multipliers = cluster_multipliers(px1, tol);
    if (!on_unit_circle(v.multipliers, tol)) v.tag = StabilityTag::Unstable;
    else if (!semisimple(v.multipliers)) v.tag = StabilityTag::SpectrallyStableNotLinearly;
    else v.tag = StabilityTag::LinearlyStable;
    return v;
}

// cluster tolerance from the integration error: Jordan blocks split like √err
inline double cluster_tolerance(double err_estimate) {
    return std::clamp(10 * std::sqrt(std::max(err_estimate, 0.0)), 1e-7, 1e-2);
}

enum class Criterion { CertifiedUnstable, Inconclusive };

inline std::string to_string(Criterion c) { return c == Criterion::CertifiedUnstable ? "CertifiedUnstable" : "Inconclusive"; }

struct ParityInstability {
    Criterion verdict = Criterion::Inconclusive;
    int index = 0;
};

inline ParityInstability clm_parity_instability(const SymplecticPath& px_path) {
    ParityInstability r;
    if (px_path.half_dim() == 0) return r;
    r.index = clm_graph_index(px_path);
    r.verdict = (r.index % 2 != 0) ? Criterion::CertifiedUnstable : Criterion::Inconclusive;
    return r;
}

inline int parity(int x) { return ((x % 2) + 2) % 2; }

inline Criterion instability_criterion(NullClass cls, int orientation, int ispec_free, int n, bool has_tprime = true) {
    if (cls == NullClass::NotNonNull) throw NotNonNull("criterion needs a non-null orbit");
    if (!has_tprime) throw MissingTprime("criterion needs an orbit cylinder");
    const bool even = parity(ispec_free + n) == 0;
    const bool orient = orientation > 0;
    bool unstable;
    if (cls == NullClass::LPositive) unstable = orient ? even : !even;
    else unstable = orient ? !even : even;
    return unstable ? Criterion::CertifiedUnstable : Criterion::Inconclusive;
}

struct ParityLedger {
    int n = 0, ispec_free = 0;
    int term_A = 0;     // n − dim ker(A − I)
    int term_spec = 0;  // ispec_free − ispec_fixed
    int term_geo = 0;   // igeo − ι(γ₂)
    int term_g2 = 0;    // ι(γ₂)
    bool sum_ok = false, term_A_even = true, middle_parity_ok = true;
    bool ok() const { return sum_ok && term_A_even && middle_parity_ok; }
};

struct AuditInputs {
    int n = 0, orientation = 1, dim_ker_A_minus_I = 0;
    int ispec_free = 0, ispec_fixed = 0, igeo = 0, iclm_gamma2 = 0;
    int kappa_sign = 1;
};

// n + ispec = (n − dim ker(A−I)) + (ispec − ispec^T) + (igeo − ι(γ₂)) + ι(γ₂)
inline ParityLedger parity_audit(const AuditInputs& in) {
    ParityLedger L;
    L.n = in.n;
    L.ispec_free = in.ispec_free;
    L.term_A = in.n - in.dim_ker_A_minus_I;
    L.term_spec = in.ispec_free - in.ispec_fixed;
    L.term_geo = in.igeo - in.iclm_gamma2;
    L.term_g2 = in.iclm_gamma2;
    L.sum_ok = L.term_A + L.term_spec + L.term_geo + L.term_g2 == in.n + in.ispec_free;
    if (in.orientation > 0) L.term_A_even = parity(L.term_A) == 0;
    // κ > 0: the two middle terms have odd sum; κ < 0: even
    L.middle_parity_ok = parity(L.term_spec + L.term_geo) == (in.kappa_sign > 0 ? 1 : 0);
    if (!L.ok())
        throw LedgerMismatch("parity ledger: " + std::to_string(L.term_A) + " + " + std::to_string(L.term_spec) + " + " +
                             std::to_string(L.term_geo) + " + " + std::to_string(L.term_g2) + " vs n + ispec = " +
                             std::to_string(in.n + in.ispec_free));
    return L;
}

}  // namespace symindex
