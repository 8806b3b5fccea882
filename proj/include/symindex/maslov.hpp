#pragma once

#include <unsupported/Eigen/MatrixFunctions>

#include <functional>
#include <numbers>
#include <vector>

#include "symindex/symplectic_core.hpp"

namespace symindex {

struct SymplecticPath {
    double a = 0.0, b = 1.0;
    std::vector<double> t;
    std::vector<Mat> M;
    std::function<Mat(double)> eval;
    double error_estimate = 0.0;

    int half_dim() const { return M.empty() ? static_cast<int>(eval(a).rows() / 2) : static_cast<int>(M[0].rows() / 2); }
    Mat operator()(double s) const { return eval(s); }
    Mat start() const { return M.empty() ? eval(a) : M.front(); }
    Mat end() const { return M.empty() ? eval(b) : M.back(); }

    static SymplecticPath from_function(std::function<Mat(double)> f, double a, double b, int samples = 64) {
        SymplecticPath p;
        p.a = a;
        p.b = b;
        for (int i = 0; i <= samples; ++i) {
            const double s = a + (b - a) * i / samples;
            p.t.push_back(s);
            p.M.push_back(f(s));
        }
        p.eval = std::move(f);
        return p;
    }

    // geodesic interpolation M_k exp(w log(M_k⁻¹ M_{k+1})) between samples
    static SymplecticPath from_samples(std::vector<double> ts, std::vector<Mat> Ms) {
        if (ts.size() < 2 || ts.size() != Ms.size()) throw InvalidInput("need >= 2 matching samples");
        for (std::size_t i = 1; i < ts.size(); ++i)
            if (!(ts[i] > ts[i - 1])) throw InvalidInput("sample times must increase");
        std::vector<Mat> logs;
        for (std::size_t k = 0; k + 1 < Ms.size(); ++k) {
            Mat step = Ms[k].partialPivLu().solve(Ms[k + 1]);
            logs.push_back(step.log());
        }
        SymplecticPath p;
        p.a = ts.front();
        p.b = ts.back();
        p.t = ts;
        p.M = Ms;
        p.eval = [ts, Ms, logs](double s) -> Mat {
            auto it = std::upper_bound(ts.begin(), ts.end(), s);
            std::size_t k = it == ts.begin() ? 0 : static_cast<std::size_t>(it - ts.begin()) - 1;
            if (k >= ts.size() - 1) k = ts.size() - 2;
            const double w = (s - ts[k]) / (ts[k + 1] - ts[k]);
            if (w == 0.0) return Ms[k];
            return Ms[k] * (w * logs[k]).exp();
        };
        return p;
    }
};

struct LagrangianPath {
    double a = 0.0, b = 1.0;
    std::vector<double> grid;
    std::function<Mat(double)> frame;  // raw smooth frame, ambient coordinates of `kind`
    SpaceKind kind = SpaceKind::Standard;

    Mat operator()(double s) const { return frame(s); }

    static LagrangianPath from_function(std::function<Mat(double)> f, double a, double b,
                                        SpaceKind kind = SpaceKind::Standard) {
        LagrangianPath p;
        p.a = a;
        p.b = b;
        p.frame = std::move(f);
        p.kind = kind;
        return p;
    }

    // unitary geodesic interpolation between sampled subspaces
    static LagrangianPath from_samples(std::vector<double> ts, const std::vector<LagrangianSubspace>& Ls) {
        if (ts.size() < 2 || ts.size() != Ls.size()) throw InvalidInput("need >= 2 matching samples");
        for (std::size_t i = 1; i < ts.size(); ++i)
            if (!(ts[i] > ts[i - 1])) throw InvalidInput("sample times must increase");
        const SpaceKind kind = Ls[0].kind();
        const int amb = Ls[0].ambient_dim(), m = Ls[0].dim();
        Mat K = kind == SpaceKind::Product ? product_to_standard(amb / 4) : Mat::Identity(amb, amb);
        std::vector<CMat> U;
        for (const auto& L : Ls) {
            Mat Q = orthonormal_basis(K * L.frame());
            CMat u(m, m);
            u.real() = Q.topRows(m);
            u.imag() = Q.bottomRows(m);
            U.push_back(u);
        }
        std::vector<CMat> logs;
        for (std::size_t k = 0; k + 1 < U.size(); ++k) logs.push_back((U[k].adjoint() * U[k + 1]).log());
        LagrangianPath p;
        p.a = ts.front();
        p.b = ts.back();
        p.grid = ts;
        p.kind = kind;
        p.frame = [ts, U, logs, K, m](double s) -> Mat {
            auto it = std::upper_bound(ts.begin(), ts.end(), s);
            std::size_t k = it == ts.begin() ? 0 : static_cast<std::size_t>(it - ts.begin()) - 1;
            if (k >= ts.size() - 1) k = ts.size() - 2;
            const double w = (s - ts[k]) / (ts[k + 1] - ts[k]);
            CMat u = U[k] * (cplx(w) * logs[k]).exp();
            Mat F(2 * m, m);
            F << u.real(), u.imag();
            return Mat(K.transpose() * F);
        };
        return p;
    }
};

struct CrossingRecord {
    double t = 0.0;
    int kernel_dim = 0;
    Mat crossing_form;
    bool regular = true;
    int contribution = 0;
};

struct ClmOptions {
    double eps = -1.0;  // < 0: automatic
    double eps_cap = 1e-3;
    double zero_angle = 1e-7;
    double noise_angle = 0.0;  // endpoint angles below this count as on the cycle when picking eps
    double max_move = 0.05;
    double t_tol = 1e-10;
    double fd_rel = 1e-5;
    double form_rel = 1e-6;
    int samples = 64;
    int max_depth = 40;
    bool strict = false;  // throw on degenerate / inconsistent crossing forms
    bool forms = true;
};

struct ClmResult {
    int index = 0;
    double eps = 0.0;
    std::vector<CrossingRecord> crossings;
};

namespace detail {

inline double wrap_angle(double x) {
    constexpr double pi = std::numbers::pi;
    x = std::fmod(x + pi, 2 * pi);
    if (x <= 0) x += 2 * pi;
    return x - pi;
}

struct ClmSample {
    double t;
    CMat G;
    std::vector<double> ang;
};

class ClmEngine {
public:
    ClmEngine(const LagrangianPath& path, std::function<Mat(double)> W, bool w_const, const ClmOptions& o)
        : p_(path), o_(o), wf_(std::move(W)), w_const_(w_const) {
        const Mat W0 = wf_(path.a);
        const int amb = static_cast<int>(W0.rows());
        K_ = path.kind == SpaceKind::Product ? product_to_standard(amb / 4) : Mat::Identity(amb, amb);
        Jk_ = complex_structure(path.kind, amb);
        if (W0.cols() * 2 != amb) throw InvalidInput("reference is not Lagrangian");
        if (w_const_) PhiWc_ = souriau_map(K_ * W0).conjugate();
    }

    ClmResult run() {
        ClmSample A = sample_raw(p_.a), B = sample_raw(p_.b);
        if (o_.eps >= 0) {
            eps_ = o_.eps;
        } else {
            const double floor = std::max(o_.zero_angle, o_.noise_angle);
            double phi_min = std::numbers::pi;
            for (const auto* s : {&A, &B})
                for (double x : s->ang)
                    if (std::abs(x) > floor) phi_min = std::min(phi_min, std::abs(x));
            eps_ = std::min(o_.eps_cap, phi_min / 4);
            // halve while a rotated endpoint angle sits on the cycle
            auto clear = [&](double e) {
                for (const auto* s : {&A, &B})
                    for (double x : s->ang)
                        if (std::abs(wrap_angle(x - 2 * e)) <= o_.zero_angle) return false;
                return true;
            };
            while (eps_ >= 1e-12 && !clear(eps_)) eps_ /= 2;
            if (eps_ < 1e-12) throw EpsExhausted("endpoint eigen-angles too close to the cycle");
        }
        shift(A);
        shift(B);
        for (const auto* s : {&A, &B})
            for (double x : s->ang)
                if (std::abs(x) <= o_.zero_angle) throw EpsExhausted("rotated endpoint still on the cycle");

        std::vector<double> ts = p_.grid;
        if (ts.size() < 2) {
            ts.resize(o_.samples + 1);
            for (int i = 0; i <= o_.samples; ++i) ts[i] = p_.a + (p_.b - p_.a) * i / o_.samples;
        }
        ClmResult res;
        res.eps = eps_;
        ClmSample prev = A;
        for (std::size_t k = 0; k + 1 < ts.size(); ++k) {
            ClmSample next = k + 2 == ts.size() ? B : sample(ts[k + 1]);
            res.index += interval(prev, next, 0, res);
            prev = std::move(next);
        }
        return res;
    }

    double eps() const { return eps_; }

private:
    const LagrangianPath& p_;
    ClmOptions o_;
    std::function<Mat(double)> wf_;
    bool w_const_;
    Mat K_, Jk_;
    CMat PhiWc_;
    double eps_ = 0.0;

    ClmSample sample_raw(double t) const {
        CMat PW = w_const_ ? PhiWc_ : CMat(souriau_map(K_ * wf_(t)).conjugate());
        ClmSample s{t, PW * souriau_map(K_ * p_.frame(t)), {}};
        Eigen::ComplexEigenSolver<CMat> es(s.G, false);
        for (int i = 0; i < es.eigenvalues().size(); ++i) s.ang.push_back(std::arg(es.eigenvalues()(i)));
        return s;
    }
    void shift(ClmSample& s) const {
        s.G *= std::polar(1.0, -2 * eps_);
        for (double& x : s.ang) x = wrap_angle(x - 2 * eps_);
    }
    ClmSample sample(double t) const {
        ClmSample s = sample_raw(t);
        shift(s);
        return s;
    }

    static int count_arc(const std::vector<double>& ang, double c) {
        int k = 0;
        for (double x : ang)
            if (x > 0 && x < c) ++k;
        return k;
    }

    // arc end c in [0.1, 1.0] far from the angles at both ends
    static double pick_c(const ClmSample& l, const ClmSample& r, double& margin) {
        double best = 0.5, bm = -1;
        for (int i = 0; i <= 90; ++i) {
            const double c = 0.1 + 0.01 * i;
            double m = 1e9;
            for (const auto* s : {&l, &r})
                for (double x : s->ang) m = std::min(m, std::abs(x - c));
            if (m > bm) {
                bm = m;
                best = c;
            }
        }
        margin = bm;
        return best;
    }

    int interval(const ClmSample& l, const ClmSample& r, int depth, ClmResult& res) {
        const double move = (r.G - l.G).norm();
        double margin = 0;
        const double c = pick_c(l, r, margin);
        if ((move > o_.max_move || margin <= 1.5 * move) && depth < o_.max_depth) {
            ClmSample m = sample(0.5 * (l.t + r.t));
            return interval(l, m, depth + 1, res) + interval(m, r, depth + 1, res);
        }
        const int nl = count_arc(l.ang, c), nr = count_arc(r.ang, c);
        if (nl != nr) locate(l.t, r.t, nl, nr, c, res);
        return nr - nl;
    }

    void locate(double l, double r, int nl, int nr, double c, ClmResult& res) {
        if (nl == nr) return;
        if (r - l <= o_.t_tol * std::max(1.0, p_.b - p_.a)) {
            record(0.5 * (l + r), nr - nl, res);
            return;
        }
        const double m = 0.5 * (l + r);
        const int nm = count_arc(sample(m).ang, c);
        locate(l, m, nl, nm, c, res);
        locate(m, r, nm, nr, c, res);
    }

    Mat rotated_frame(double t) const {
        return rotation_operator(p_.kind, static_cast<int>(K_.rows()), -eps_) * p_.frame(t);
    }

    template <class F>
    Mat derivative(const F& f, double t) const {
        const double h = o_.fd_rel * (p_.b - p_.a);
        if (t - 2 * h >= p_.a && t + 2 * h <= p_.b) {
            Mat d1 = (f(t + h) - f(t - h)) / (2 * h);
            Mat d2 = (f(t + h / 2) - f(t - h / 2)) / h;
            return (4 * d2 - d1) / 3;
        }
        const double sg = (t + 2 * h <= p_.b) ? 1.0 : -1.0;
        Mat f0 = f(t);
        Mat d1 = (f(t + sg * h) - f0) / (sg * h);
        Mat d2 = (f(t + sg * h / 2) - f0) / (sg * h / 2);
        return 2 * d2 - d1;
    }

    void record(double t, int net, ClmResult& res) {
        CrossingRecord cr;
        cr.t = t;
        cr.contribution = net;
        if (!o_.forms) {
            cr.kernel_dim = std::abs(net);
            cr.regular = true;
            res.crossings.push_back(cr);
            return;
        }
        ClmSample s = sample(t);
        int k = 0;
        for (double x : s.ang)
            if (std::abs(x) < 1e-6) ++k;
        k = std::max(k, std::abs(net));
        cr.kernel_dim = k;
        Mat F = rotated_frame(t);
        Mat Wt = orthonormal_basis(wf_(t));
        const int m = static_cast<int>(F.cols());
        Mat S(F.rows(), Wt.cols() + m);
        S << Wt, F;
        Eigen::JacobiSVD<Mat> svd(S, Eigen::ComputeFullV);
        Mat Vk = svd.matrixV().rightCols(k);
        Mat C = Vk.bottomRows(m);
        Mat D = derivative([this](double s) { return rotated_frame(s); }, t);
        Mat Q = F.transpose() * Jk_.transpose() * D;
        Mat G = C.transpose() * Q * C;
        if (!w_const_) {
            // Γ(ℓ) − Γ(W) on the intersection; W-side coefficients are −a
            Mat A = Vk.topRows(Wt.cols());
            auto wfun = [this](double s) { return wf_(s); };
            Mat Wa = wfun(t);
            Mat Ca = -(Wa.completeOrthogonalDecomposition().solve(Wt * A));
            Mat Qw = Wa.transpose() * Jk_.transpose() * derivative(wfun, t);
            G -= Ca.transpose() * Qw * Ca;
        }
        cr.crossing_form = 0.5 * (G + G.transpose());
        const double scale = std::max(1e-300, spectral_norm(0.5 * (Q + Q.transpose())));
        Inertia in = signature(cr.crossing_form, o_.form_rel * scale);
        cr.regular = in.n_zero == 0 && in.sgn() == net;
        if (!cr.regular && o_.strict) throw IrregularCrossing(t, "crossing form degenerate or inconsistent");
        res.crossings.push_back(std::move(cr));
    }
};

}  // namespace detail

inline ClmResult clm_index_detail(const LagrangianPath& ell, const LagrangianSubspace& W, const ClmOptions& o = {}) {
    if (!ell.frame) throw InvalidInput("Lagrangian path has no frame evaluator");
    Mat Wf = W.frame();
    detail::ClmEngine eng(ell, [Wf](double) { return Wf; }, true, o);
    return eng.run();
}

// moving reference W(t)
inline ClmResult clm_index_detail(const LagrangianPath& ell, const LagrangianPath& W, const ClmOptions& o = {}) {
    if (!ell.frame || !W.frame) throw InvalidInput("Lagrangian path has no frame evaluator");
    detail::ClmEngine eng(ell, W.frame, false, o);
    return eng.run();
}
inline int clm_index(const LagrangianPath& ell, const LagrangianPath& W, const ClmOptions& o = {}) {
    return clm_index_detail(ell, W, o).index;
}

inline int clm_index(const LagrangianPath& ell, const LagrangianSubspace& W, const ClmOptions& o = {}) {
    return clm_index_detail(ell, W, o).index;
}

inline LagrangianPath graph_path(const SymplecticPath& psi) {
    auto f = psi.eval;
    LagrangianPath p = LagrangianPath::from_function([f](double s) { return graph_frame(f(s)); }, psi.a, psi.b,
                                                     SpaceKind::Product);
    p.grid = psi.t;
    return p;
}

inline ClmResult clm_graph_index_detail(const SymplecticPath& psi, const ClmOptions& o = {}) {
    ClmOptions oo = o;
    if (oo.noise_angle <= 0) oo.noise_angle = std::sqrt(psi.error_estimate);
    return clm_index_detail(graph_path(psi), diagonal_lagrangian(psi.half_dim()), oo);
}
inline int clm_graph_index(const SymplecticPath& psi, const ClmOptions& o = {}) {
    return clm_graph_index_detail(psi, o).index;
}

struct Iota1Result {
    int index = 0;
    double eps = 0.0;
    SpComponent start = SpComponent::Zero, end = SpComponent::Zero;
    bool parity_consistent = true;
};

inline Iota1Result iota1_index_detail(const SymplecticPath& psi, double eps = 1e-3, ClmOptions o = {}) {
    const int n = psi.half_dim();
    const Mat Ma = psi.start(), Mb = psi.end();
    auto comps = [&](double e) {
        return std::pair{sp_component_strict(expJ(n, -e) * Ma), sp_component_strict(expJ(n, -e) * Mb)};
    };
    double e = eps;
    for (;; e *= 0.5) {
        if (e < 1e-12) throw EpsExhausted("no admissible eps above 1e-12");
        auto c0 = comps(e), c1 = comps(e / 2), c2 = comps(e / 4);
        if (c0.first == SpComponent::Zero || c0.second == SpComponent::Zero) continue;
        if (c0 == c1 && c1 == c2) break;
    }
    auto f = psi.eval;
    LagrangianPath ell = LagrangianPath::from_function(
        [f, n, e](double s) { return graph_frame(expJ(n, -e) * f(s)); }, psi.a, psi.b, SpaceKind::Product);
    ell.grid = psi.t;
    o.eps = 0.0;
    Iota1Result r;
    r.eps = e;
    r.index = clm_index_detail(ell, diagonal_lagrangian(n), o).index;
    auto c = comps(e);
    r.start = c.first;
    r.end = c.second;
    const bool same = r.start == r.end;
    r.parity_consistent = same == (r.index % 2 == 0);
    return r;
}

inline int iota1_index(const SymplecticPath& psi, double eps = 1e-3) { return iota1_index_detail(psi, eps).index; }

// W_I(V) = {(q1,p1,q2,p2) : (q1,q2) ∈ D V^⊥, (p1,p2) ∈ V}, D = diag(−I, I)
inline Mat zhu_reference_frame(const Mat& V) {
    const int n = static_cast<int>(V.cols());
    Mat Vo = orthonormal_basis(V);
    Mat Vperp = null_space(Vo.transpose(), kRankRel, 1.0);
    Mat D = Mat::Identity(2 * n, 2 * n);
    D.topLeftCorner(n, n) *= -1;
    Mat VI = D * Vperp;
    Mat F = Mat::Zero(4 * n, 2 * n);
    for (int j = 0; j < n; ++j) {
        F.block(0, j, n, 1) = VI.block(0, j, n, 1);
        F.block(2 * n, j, n, 1) = VI.block(n, j, n, 1);
        F.block(n, n + j, n, 1) = Vo.block(0, j, n, 1);
        F.block(3 * n, n + j, n, 1) = Vo.block(n, j, n, 1);
    }
    return F;
}

inline int zhu_block_index(const SymplecticPath& path, const LagrangianSubspace& V, double tol = 1e-9) {
    const int n = path.half_dim();
    if (V.ambient_dim() != 2 * n || V.dim() != n) throw InvalidInput("V must be an n-dimensional subspace of R^{2n}");
    const std::vector<Mat> samples = path.M.empty() ? std::vector<Mat>{path.start(), path.end()} : path.M;
    for (const auto& M : samples) {
        if (max_abs(M.topRightCorner(n, n)) > tol * std::max(1.0, max_abs(M)))
            throw NotBlockTriangular("upper-right block does not vanish");
    }
    Mat Vo = orthonormal_basis(V.frame());
    Mat D = Mat::Identity(2 * n, 2 * n);
    D.topLeftCorner(n, n) *= -1;
    Mat VI = D * null_space(Vo.transpose(), kRankRel, 1.0);
    Mat VIperp = null_space(VI.transpose(), kRankRel, 1.0);  // (x, y) ∈ V^I ⇔ VIperpᵀ (x, y) = 0
    auto term = [&](const Mat& M, int& dimS) {
        Mat M11 = M.topLeftCorner(n, n), M21 = M.bottomLeftCorner(n, n);
        Mat stack(2 * n, n);
        stack << Mat::Identity(n, n), M11;
        Mat S = null_space(VIperp.transpose() * stack, tol, std::max(1.0, spectral_norm(stack)));
        dimS = static_cast<int>(S.cols());
        if (dimS == 0) return 0;
        Mat F = M11.transpose() * M21;
        F = 0.5 * (F + F.transpose());
        return coindex(S.transpose() * F * S);
    };
    int d0 = 0, d1 = 0;
    const int p1 = term(path.end(), d1);
    const int p0 = term(path.start(), d0);
    return p1 - p0 + d0 - d1;
}

// components of e^{+δJ}M and e^{−δJ}M for linearly stable M
inline std::pair<SpComponent, SpComponent> stable_component_probe(const Mat& M, double delta, double spec_tol = 1e-7) {
    (void)validate_symplectic(M, 1e-8 * std::max(1.0, max_abs(M) * max_abs(M)));
    auto cs = cluster_multipliers(M, spec_tol);
    if (!on_unit_circle(cs, spec_tol) || !semisimple(cs)) throw NotLinearlyStable("spectrum off the circle or not semisimple");
    const int n = static_cast<int>(M.rows() / 2);
    return {sp_component_strict(expJ(n, delta) * M), sp_component_strict(expJ(n, -delta) * M)};
}

}  // namespace symindex
