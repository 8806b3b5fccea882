#pragma once

#include <functional>
#include <vector>

#include "symindex/symplectic_core.hpp"

namespace symindex {

struct SymmetricFormPath {
    double a = 0.0, b = 1.0;
    std::function<Mat(double)> eval;
    std::vector<double> grid;  // optional coarse sample times; uniform if empty

    Mat operator()(double s) const { return eval(s); }

    static SymmetricFormPath from_function(std::function<Mat(double)> f, double a, double b) {
        SymmetricFormPath p;
        p.a = a;
        p.b = b;
        p.eval = std::move(f);
        return p;
    }

    // piecewise-linear interpolation through symmetric samples
    static SymmetricFormPath from_samples(std::vector<double> s, std::vector<Mat> S) {
        if (s.size() < 2 || s.size() != S.size()) throw InvalidInput("need >= 2 matching samples");
        for (std::size_t i = 1; i < s.size(); ++i) {
            if (!(s[i] > s[i - 1])) throw InvalidInput("sample parameters must increase");
            if (S[i].rows() != S[0].rows()) throw InvalidInput("sample dimension mismatch");
        }
        for (auto& m : S) m = SymmetricMatrix(m).matrix();
        SymmetricFormPath p;
        p.a = s.front();
        p.b = s.back();
        p.grid = s;
        p.eval = [s, S](double t) -> Mat {
            auto it = std::upper_bound(s.begin(), s.end(), t);
            std::size_t k = it == s.begin() ? 0 : static_cast<std::size_t>(it - s.begin()) - 1;
            if (k >= s.size() - 1) k = s.size() - 2;
            const double w = (t - s[k]) / (s[k + 1] - s[k]);
            return (1 - w) * S[k] + w * S[k + 1];
        };
        return p;
    }
};

struct FormCrossing {
    double t = 0.0;
    int kernel_dim = 0;
    Mat form;
    int contribution = 0;
    bool regular = true;
};

struct SpflOptions {
    int samples = 64;
    double rel_zero = kRankRel;
    double t_tol = 1e-10;
    double fd_rel = 1e-5;
    double shift_rel = 1e-6;
    double form_rel = 1e-8;
    bool strict = true;
};

struct SpflResult {
    int value = 0;
    std::vector<FormCrossing> crossings;
    bool shifted = false;
    bool consistent = true;
};

namespace detail {

inline int m_minus(const Mat& S, double rel) {
    Vec ev = sym_eigenvalues(S);
    return inertia_of(ev, relative_zero_tol(ev, rel)).n_minus;
}

inline Mat form_derivative(const std::function<Mat(double)>& f, double t, double a, double b, double h) {
    if (t - 2 * h >= a && t + 2 * h <= b) {
        Mat d1 = (f(t + h) - f(t - h)) / (2 * h);
        Mat d2 = (f(t + h / 2) - f(t - h / 2)) / h;
        return (4 * d2 - d1) / 3;
    }
    const double sg = (t + 2 * h <= b) ? 1.0 : -1.0;
    Mat f0 = f(t);
    Mat d1 = (f(t + sg * h) - f0) / (sg * h);
    Mat d2 = (f(t + sg * h / 2) - f0) / (sg * h / 2);
    return 2 * d2 - d1;
}

struct FormSweep {
    const std::function<Mat(double)>& f;
    double a, b;
    const SpflOptions& o;
    std::vector<FormCrossing> out;
    bool consistent = true;

    int count(double t) const { return m_minus(f(t), o.rel_zero); }

    void locate(double l, double r, int ml, int mr) {
        if (ml == mr) return;
        if (r - l <= o.t_tol) {
            record(l, r, ml, mr);
            return;
        }
        const double m = 0.5 * (l + r);
        const int mm = count(m);
        locate(l, m, ml, mm);
        locate(m, r, mm, mr);
    }

    void record(double l, double r, int ml, int mr) {
        FormCrossing c;
        c.t = 0.5 * (l + r);
        c.contribution = ml - mr;
        Eigen::SelfAdjointEigenSolver<Mat> es(f(c.t));
        const int lo = std::min(ml, mr), hi = std::max(ml, mr);
        c.kernel_dim = hi - lo;
        Mat V = es.eigenvectors().middleCols(lo, hi - lo);
        Mat D = form_derivative(f, c.t, a, b, o.fd_rel * (b - a));
        c.form = V.transpose() * D * V;
        c.form = 0.5 * (c.form + c.form.transpose());
        const double scale = std::max(1.0, max_abs(D));
        Inertia g = signature(c.form, o.form_rel * scale);
        c.regular = g.n_zero == 0 && g.sgn() == c.contribution;
        if (!c.regular) consistent = false;
        out.push_back(std::move(c));
    }
};

inline SpflResult sweep(const std::function<Mat(double)>& f, double a, double b, const std::vector<double>& grid,
                        const SpflOptions& o) {
    std::vector<double> ts = grid;
    if (ts.size() < 2) {
        const int ns = std::max(2, o.samples);
        ts.resize(ns + 1);
        for (int i = 0; i <= ns; ++i) ts[i] = a + (b - a) * i / ns;
    }
    FormSweep sw{f, a, b, o, {}, true};
    int prev = sw.count(ts[0]);
    int total = 0;
    for (std::size_t k = 0; k + 1 < ts.size(); ++k) {
        const int next = sw.count(ts[k + 1]);
        sw.locate(ts[k], ts[k + 1], prev, next);
        total += prev - next;
        prev = next;
    }
    SpflResult res;
    res.value = total;
    res.crossings = std::move(sw.out);
    res.consistent = sw.consistent;
    return res;
}

}  // namespace detail

// Σ sgn Γ(t) − m⁻(Γ(a)) + m⁺(Γ(b)); checked against m⁻(a) − m⁻(b)
inline SpflResult spectral_flow_detail(const SymmetricFormPath& path, const SpflOptions& o = {}) {
    if (!path.eval) throw InvalidInput("form path has no evaluator");
    const int closed = detail::m_minus(path(path.a), o.rel_zero) - detail::m_minus(path(path.b), o.rel_zero);
    SpflResult r = detail::sweep(path.eval, path.a, path.b, path.grid, o);
    if (r.consistent && r.value == closed) return r;

    double rad = 0.0;
    for (double t : {path.a, 0.5 * (path.a + path.b), path.b})
        rad = std::max(rad, sym_eigenvalues(path(t)).cwiseAbs().maxCoeff());
    const double delta = o.shift_rel * std::max(rad, 1e-300);
    std::function<Mat(double)> g = [&](double t) {
        Mat S = path(t);
        S.diagonal().array() += delta;
        return S;
    };
    SpflResult r2 = detail::sweep(g, path.a, path.b, path.grid, o);
    r2.shifted = true;
    if (r2.value == closed && r2.consistent) return r2;
    if (o.strict) {
        double t_bad = path.a;
        for (const auto& c : r2.crossings)
            if (!c.regular) {
                t_bad = c.t;
                break;
            }
        throw IrregularCrossing(t_bad, "degenerate crossing persists after shift");
    }
    r.value = closed;
    r.consistent = false;
    return r;
}

inline int spectral_flow(const SymmetricFormPath& path, const SpflOptions& o = {}) {
    return spectral_flow_detail(path, o).value;
}

// closed form, finite dimension
inline int spectral_flow_closed(const SymmetricFormPath& path, double rel = kRankRel) {
    return detail::m_minus(path(path.a), rel) - detail::m_minus(path(path.b), rel);
}

struct SpectralSplit {
    Mat neg, zero_pos, pos_zero_free;  // bases of E₋, E₊⊕E₀
};

inline SpectralSplit spectral_split(const Mat& S, double rel = kRankRel) {
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (S + S.transpose()));
    const Vec& ev = es.eigenvalues();
    const double tol = relative_zero_tol(ev, rel);
    int k = 0;
    while (k < ev.size() && ev(k) < -tol) ++k;
    SpectralSplit sp;
    sp.neg = es.eigenvectors().leftCols(k);
    sp.zero_pos = es.eigenvectors().rightCols(ev.size() - k);
    return sp;
}

// dim(E₋(S) ∩ (E₊⊕E₀)(T)) − dim(E₋(T) ∩ (E₊⊕E₀)(S))
inline int relative_morse_index(const Mat& T, const Mat& S, double rel = kRankRel) {
    if (T.rows() != S.rows()) throw InvalidInput("dimension mismatch");
    SpectralSplit st = spectral_split(T, rel), ss = spectral_split(S, rel);
    return intersection_dim(ss.neg, st.zero_pos) - intersection_dim(st.neg, ss.zero_pos);
}

// m⁻(C|ker B) + rank B
inline int block_morse_index(const Mat& B, const Mat& C, double rel = kRankRel) {
    if (B.cols() != C.rows() || C.rows() != C.cols()) throw InvalidInput("block dimensions");
    const int r = numerical_rank(B, rel);
    Mat Z = null_space(B, rel);
    int neg = 0;
    if (Z.cols() > 0) neg = morse_index(Z.transpose() * C * Z, rel);
    return neg + r;
}

struct BlockPerturbationFamily {
    Mat A, B, C;  // A k×k, B k×m, C m×m
    int k() const { return static_cast<int>(A.rows()); }
    int m() const { return static_cast<int>(C.rows()); }
    void validate() const {
        if (A.rows() != A.cols() || C.rows() != C.cols() || B.rows() != A.rows() || B.cols() != C.rows())
            throw InvalidInput("inconsistent block family");
        (void)SymmetricMatrix(A);
        (void)SymmetricMatrix(C);
    }
    Mat assemble(double ca, double cb, double cc) const {
        Mat F(k() + m(), k() + m());
        F << ca * A, cb * B, cb * B.transpose(), cc * C;
        return F;
    }
    // [[A,(1−s)B],[(1−s)B*,(1−s)C]]
    SymmetricFormPath shrink_path() const {
        auto self = *this;
        return SymmetricFormPath::from_function([self](double s) { return self.assemble(1, 1 - s, 1 - s); }, 0, 1);
    }
    // [[A,sB],[sB*,sC]]
    SymmetricFormPath grow_path() const {
        auto self = *this;
        return SymmetricFormPath::from_function([self](double s) { return self.assemble(1, s, s); }, 0, 1);
    }
};

// m⁻(𝒜(0)|W⊥) + dim(W∩W⊥) − dim(W∩ker 𝒜(0)), W the A-block coordinates
inline int spfl_family_shrink(const BlockPerturbationFamily& fam, double rel = kRankRel) {
    fam.validate();
    const int k = fam.k();
    Mat full = fam.assemble(1, 1, 1);
    Mat AB(k, k + fam.m());
    AB << fam.A, fam.B;
    const double scale = std::max(max_abs(full), 1e-300);
    Mat Z = null_space(AB, rel, scale);
    int neg = 0;
    if (Z.cols() > 0) {
        Mat R = Z.transpose() * full * Z;
        neg = inertia_of(sym_eigenvalues(R), rel * scale).n_minus;
    }
    const int w_wperp = k - numerical_rank_scaled(fam.A, rel * scale);
    Mat ABt(k + fam.m(), k);
    ABt << fam.A, fam.B.transpose();
    const int w_ker = k - numerical_rank_scaled(ABt, rel * scale);
    return neg + w_wperp - w_ker;
}

// −m⁻(C − B*A⁻¹B)
inline int spfl_family_grow(const BlockPerturbationFamily& fam, double rel = kRankRel) {
    fam.validate();
    Eigen::JacobiSVD<Mat> svd(fam.A);
    const auto& s = svd.singularValues();
    const double scale = std::max(max_abs(fam.assemble(1, 1, 1)), 1e-300);
    if (s.size() == 0 || s(s.size() - 1) <= rel * scale)
        throw SingularA("A is singular (sigma_min " + std::to_string(s.size() ? s(s.size() - 1) : 0.0) + ")");
    Mat schur = fam.C - fam.B.transpose() * fam.A.partialPivLu().solve(fam.B);
    return -morse_index(schur, rel);
}

}  // namespace symindex
