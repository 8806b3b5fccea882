#pragma once

#include <unsupported/Eigen/Splines>

#include <fstream>
#include <functional>
#include <iomanip>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "symindex/maslov.hpp"

namespace symindex {

struct Coefficients {
    Mat P, Q, R;  // Q_ij = ∂²L/∂v_i∂q_j
    Vec Lq, xp, xpp;
};

// callbacks of the Lagrangian along the orbit, for residual checks
struct LagrangianCallbacks {
    std::function<Vec(double)> x;
    std::function<Vec(double)> xprime;
    std::function<double(const Vec&, const Vec&)> L;
    std::function<Vec(const Vec&, const Vec&)> L_q;
    std::function<Vec(const Vec&, const Vec&)> L_v;
};

struct OrbitData {
    std::string name = "orbit";
    int n = 1;
    double T = 1.0;
    double h = 0.0;
    Mat A;
    std::optional<double> tprime_h;

    std::vector<double> grid;
    std::vector<Mat> P, Q, R;
    std::vector<Vec> Lq, xprime;

    // evaluators; set by presets or by make_interpolants()
    std::function<Coefficients(double)> coeffs;
    std::optional<LagrangianCallbacks> callbacks;
    std::function<double(double)> period_of_h;  // orbit-cylinder family T(h), optional

    int orientation() const { return A.determinant() > 0 ? 1 : -1; }
    Mat A_d() const {
        Mat D = Mat::Zero(2 * n, 2 * n);
        D.topLeftCorner(n, n) = A;
        D.bottomRightCorner(n, n) = A;
        return D;
    }
    Coefficients at(double t) const { return coeffs(t); }
};

// ---- cubic interpolation of sampled coefficients ----

namespace detail {

using Spline = Eigen::Spline<double, Eigen::Dynamic, 3>;

inline Vec pack(const OrbitData& o, std::size_t k) {
    const int n = o.n;
    Vec v(3 * n * n + 2 * n);
    v << Eigen::Map<const Vec>(o.P[k].data(), n * n), Eigen::Map<const Vec>(o.Q[k].data(), n * n),
        Eigen::Map<const Vec>(o.R[k].data(), n * n), o.Lq[k], o.xprime[k];
    return v;
}

}  // namespace detail

// samples continued past both ends by the twist u(t) = A u(t + 1), so endpoint derivatives are interior ones
inline void make_interpolants(OrbitData& o) {
    const std::size_t m = o.grid.size();
    if (m < 4) throw InvalidInput("orbit needs at least 4 grid points");
    const int n = o.n, dim = 3 * n * n + 2 * n;
    const std::size_t pad = std::min<std::size_t>(8, m - 2);
    const Mat& A = o.A;
    const Mat At = A.transpose();
    auto twisted = [&](std::size_t k, const Mat& L, const Mat& Rt) {
        Vec v(dim);
        v << Eigen::Map<const Vec>(Mat(L * o.P[k] * Rt).data(), n * n), Eigen::Map<const Vec>(Mat(L * o.Q[k]).data(), n * n),
            Eigen::Map<const Vec>(Mat(L * o.R[k] * Rt).data(), n * n), L * o.Lq[k], L * o.xprime[k];
        return v;
    };
    std::vector<double> ts;
    std::vector<Vec> vs;
    for (std::size_t k = pad; k >= 1; --k) {
        ts.push_back(o.grid[m - 1 - k] - 1.0);
        vs.push_back(twisted(m - 1 - k, A, At));
    }
    for (std::size_t k = 0; k < m; ++k) {
        ts.push_back(o.grid[k]);
        vs.push_back(detail::pack(o, k));
    }
    for (std::size_t k = 1; k <= pad; ++k) {
        ts.push_back(1.0 + o.grid[k]);
        vs.push_back(twisted(k, At, A));
    }
    const double lo = ts.front(), span_len = ts.back() - ts.front();
    Eigen::MatrixXd pts(dim, ts.size());
    Eigen::RowVectorXd knots(ts.size());
    for (std::size_t k = 0; k < ts.size(); ++k) {
        pts.col(k) = vs[k];
        knots(k) = (ts[k] - lo) / span_len;
    }
    auto sp = std::make_shared<detail::Spline>(
        Eigen::SplineFitting<detail::Spline>::Interpolate(pts, 3, knots));
    o.coeffs = [sp, n, lo, span_len](double t) {
        // Spline::derivatives asserts for a Dynamic dimension; combine basis derivatives by hand
        const double u = std::clamp((t - lo) / span_len, 0.0, 1.0);
        const auto span = sp->span(u);
        const auto N = sp->basisFunctionDerivatives(u, 1);
        const int p = static_cast<int>(sp->degree());
        Vec v = Vec::Zero(sp->ctrls().rows()), dv = Vec::Zero(sp->ctrls().rows());
        for (int i = 0; i <= p; ++i) {
            v += N(0, i) * sp->ctrls().col(span - p + i).matrix();
            dv += N(1, i) * sp->ctrls().col(span - p + i).matrix();
        }
        Coefficients c;
        c.P = Eigen::Map<const Mat>(v.data(), n, n);
        c.Q = Eigen::Map<const Mat>(v.data() + n * n, n, n);
        c.R = Eigen::Map<const Mat>(v.data() + 2 * n * n, n, n);
        c.P = 0.5 * (c.P + c.P.transpose());
        c.R = 0.5 * (c.R + c.R.transpose());
        c.Lq = v.segment(3 * n * n, n);
        c.xp = v.segment(3 * n * n + n, n);
        c.xpp = dv.segment(3 * n * n + n, n) / span_len;
        return c;
    };
}

// fill sample vectors from the evaluator on a uniform grid
inline void sample_from_evaluator(OrbitData& o, int points) {
    o.grid.clear();
    o.P.clear();
    o.Q.clear();
    o.R.clear();
    o.Lq.clear();
    o.xprime.clear();
    for (int k = 0; k < points; ++k) {
        const double t = static_cast<double>(k) / (points - 1);
        Coefficients c = o.coeffs(t);
        o.grid.push_back(t);
        o.P.push_back(c.P);
        o.Q.push_back(c.Q);
        o.R.push_back(c.R);
        o.Lq.push_back(c.Lq);
        o.xprime.push_back(c.xp);
    }
}

inline bool p_condition_ok(const Mat& P) {
    Eigen::JacobiSVD<Mat> svd(P);
    const auto& s = svd.singularValues();
    return s(s.size() - 1) > 1e-12 * std::max(1.0, s(0));
}

// invariants: P invertible, A orthogonal, boundary compatibility
inline void validate_orbit(const OrbitData& o, double bc_tol = 1e-8) {
    if (o.n < 1 || o.A.rows() != o.n || o.A.cols() != o.n) throw InvalidInput("A must be n x n");
    if (max_abs(o.A.transpose() * o.A - Mat::Identity(o.n, o.n)) > 1e-10) throw InvalidInput("A is not orthogonal");
    if (!(o.T > 0)) throw InvalidInput("period must be positive");
    if (!o.coeffs) throw InvalidInput("orbit has no coefficient evaluator");
    for (std::size_t k = 0; k < o.grid.size(); ++k)
        if (!p_condition_ok(o.P[k])) throw SingularP(o.grid[k]);
    Coefficients c0 = o.at(0.0), c1 = o.at(1.0);
    const double bc = std::max({max_abs(c0.P - o.A * c1.P * o.A.transpose()), max_abs(c0.Q - o.A * c1.Q),
                                max_abs(c0.R - o.A * c1.R * o.A.transpose())});
    if (bc > bc_tol) throw InvalidInput("boundary compatibility violated: " + std::to_string(bc));
}

inline double boundary_residual(const OrbitData& o) {
    Coefficients c0 = o.at(0.0), c1 = o.at(1.0);
    return std::max({max_abs(c0.P - o.A * c1.P * o.A.transpose()), max_abs(c0.Q - o.A * c1.Q),
                     max_abs(c0.R - o.A * c1.R * o.A.transpose())});
}

// ---- residual checks ----

struct ELResidual {
    double eq = 0.0;
    double energy = 0.0;
};

inline ELResidual euler_lagrange_residual(const OrbitData& o, int points = 200) {
    if (!o.callbacks) throw MissingCallbacks("orbit '" + o.name + "' has no Lagrangian callbacks");
    const auto& cb = *o.callbacks;
    const double T = o.T;
    auto pv = [&](double t) { return cb.L_v(cb.x(t), cb.xprime(t) / T); };
    const double hs = 2e-4;
    ELResidual r;
    for (int k = 0; k <= points; ++k) {
        const double t = static_cast<double>(k) / points;
        Vec d = (-pv(t + 2 * hs) + 8 * pv(t + hs) - 8 * pv(t - hs) + pv(t - 2 * hs)) / (12 * hs);
        Vec x = cb.x(t), v = cb.xprime(t) / T;
        r.eq = std::max(r.eq, (d - T * cb.L_q(x, v)).cwiseAbs().maxCoeff());
        r.energy = std::max(r.energy, std::abs(cb.L(x, v) + o.h - cb.L_v(x, v).dot(v)));
    }
    return r;
}

enum class NullClass { LPositive, LNegative, NotNonNull };

inline std::string to_string(NullClass c) {
    switch (c) {
        case NullClass::LPositive: return "LPositive";
        case NullClass::LNegative: return "LNegative";
        default: return "NotNonNull";
    }
}

struct KappaInfo {
    std::vector<double> t;
    std::vector<double> kappa;
    NullClass cls = NullClass::NotNonNull;
    double min = 0.0, max = 0.0;
};

// κ(t) = ⟨P x′, x′⟩ along (x, x′/T)
inline KappaInfo kappa_classify(const OrbitData& o, int points = 401) {
    KappaInfo k;
    std::vector<double> ts = o.grid;
    if (ts.empty())
        for (int i = 0; i < points; ++i) ts.push_back(static_cast<double>(i) / (points - 1));
    double mx = 0;
    k.min = std::numeric_limits<double>::infinity();
    k.max = -k.min;
    for (double t : ts) {
        Coefficients c = o.at(t);
        const double v = c.xp.dot(c.P * c.xp);
        k.t.push_back(t);
        k.kappa.push_back(v);
        k.min = std::min(k.min, v);
        k.max = std::max(k.max, v);
        mx = std::max(mx, std::abs(v));
    }
    const double tol = 1e-9 * mx;
    if (mx > 0 && k.min > tol) k.cls = NullClass::LPositive;
    else if (mx > 0 && k.max < -tol) k.cls = NullClass::LNegative;
    else k.cls = NullClass::NotNonNull;
    return k;
}

// B = [[T P⁻¹, −T P⁻¹Q], [−T QᵀP⁻¹, T QᵀP⁻¹Q − T R]]
inline Mat hamiltonian_coefficient(const OrbitData& o, double t) {
    Coefficients c = o.at(t);
    if (!p_condition_ok(c.P)) throw SingularP(t);
    const int n = o.n;
    Mat Pi = c.P.inverse();
    Pi = 0.5 * (Pi + Pi.transpose());
    Mat B(2 * n, 2 * n);
    B.topLeftCorner(n, n) = o.T * Pi;
    B.topRightCorner(n, n) = -o.T * Pi * c.Q;
    B.bottomLeftCorner(n, n) = -o.T * c.Q.transpose() * Pi;
    B.bottomRightCorner(n, n) = o.T * (c.Q.transpose() * Pi * c.Q - c.R);
    return 0.5 * (B + B.transpose());
}

// ---- fundamental solution ----

namespace detail {

inline Mat cayley_step(const OrbitData& o, double t0, double dt, const Mat& J) {
    const int d = 2 * o.n;
    Mat G = J * hamiltonian_coefficient(o, t0 + 0.5 * dt) * (0.5 * dt);
    Mat I = Mat::Identity(d, d);
    return (I - G).partialPivLu().solve(I + G);
}

inline Mat midpoint_propagate(const OrbitData& o, double t0, double t1, int steps, const Mat& J) {
    const int d = 2 * o.n;
    Mat M = Mat::Identity(d, d);
    const double dt = (t1 - t0) / steps;
    for (int k = 0; k < steps; ++k) M = cayley_step(o, t0 + k * dt, dt, J) * M;
    return M;
}

}  // namespace detail

struct FundamentalSolutionInfo {
    double symplecticity_residual = 0.0;  // max over samples, extrapolated solution
    double raw_residual = 0.0;            // max over samples, plain midpoint at `steps`
    double error_estimate = 0.0;
};

// ψ′ = J B ψ, implicit midpoint at `steps` and 2·steps, Richardson-combined on the coarse grid
inline SymplecticPath fundamental_solution(const OrbitData& o, int steps = 2000, FundamentalSolutionInfo* info = nullptr) {
    if (steps < 16) throw InvalidInput("steps must be >= 16");
    const int n = o.n, d = 2 * n;
    const Mat J = standard_J(n);
    Mat Mc = Mat::Identity(d, d), Mf = Mat::Identity(d, d);
    const double dt = 1.0 / steps;
    SymplecticPath p;
    p.a = 0;
    p.b = 1;
    p.t.push_back(0.0);
    p.M.push_back(Mat::Identity(d, d));
    FundamentalSolutionInfo fi;
    for (int k = 0; k < steps; ++k) {
        const double t0 = k * dt;
        Mc = detail::cayley_step(o, t0, dt, J) * Mc;
        Mf = detail::cayley_step(o, t0 + 0.5 * dt, 0.5 * dt, J) * (detail::cayley_step(o, t0, 0.5 * dt, J) * Mf);
        Mat Mr = (4 * Mf - Mc) / 3;
        p.t.push_back(t0 + dt);
        p.M.push_back(Mr);
        fi.error_estimate = std::max(fi.error_estimate, max_abs(Mf - Mc) / 3);
        fi.symplecticity_residual = std::max(fi.symplecticity_residual, symplectic_residual(Mr));
        fi.raw_residual = std::max(fi.raw_residual, symplectic_residual(Mc));
    }
    p.t.back() = 1.0;
    p.error_estimate = fi.error_estimate;
    auto ts = p.t;
    auto Ms = p.M;
    const OrbitData oc = o;
    p.eval = [ts, Ms, oc, J, dt](double s) -> Mat {
        if (s <= 0) return Ms.front();
        if (s >= 1) return Ms.back();
        std::size_t k = std::min(static_cast<std::size_t>(s / dt), ts.size() - 2);
        const double t0 = ts[k];
        if (s == t0) return Ms[k];
        Mat c = detail::midpoint_propagate(oc, t0, s, 1, J);
        Mat f = detail::midpoint_propagate(oc, t0, s, 2, J);
        return ((4 * f - c) / 3) * Ms[k];
    };
    if (info) *info = fi;
    return p;
}

// coarser grid for the crossing engine; refinement goes through eval
inline SymplecticPath thinned(const SymplecticPath& p, int max_points = 256) {
    if (static_cast<int>(p.t.size()) <= max_points) return p;
    SymplecticPath q;
    q.a = p.a;
    q.b = p.b;
    q.eval = p.eval;
    q.error_estimate = p.error_estimate;
    const std::size_t stride = (p.t.size() + max_points - 1) / max_points;
    for (std::size_t k = 0; k < p.t.size(); k += stride) {
        q.t.push_back(p.t[k]);
        q.M.push_back(p.M[k]);
    }
    if (q.t.back() != p.t.back()) {
        q.t.push_back(p.t.back());
        q.M.push_back(p.M.back());
    }
    return q;
}

struct GeoIndex {
    int igeo = 0;
    Mat monodromy;
    ClmResult detail;
};

// ι_CLM(Δ, Gr(A_d ψ(t)))
inline GeoIndex geometrical_index(const OrbitData& o, const SymplecticPath& psi, const ClmOptions& opt = {}) {
    const Mat Ad = o.A_d();
    SymplecticPath q = thinned(psi);
    for (auto& M : q.M) M = Ad * M;
    auto f = psi.eval;
    q.eval = [f, Ad](double s) { return Mat(Ad * f(s)); };
    GeoIndex g;
    g.detail = clm_graph_index_detail(q, opt);
    g.igeo = g.detail.index;
    g.monodromy = Ad * psi.end();
    return g;
}

// central difference of T(h), one Richardson step
inline double estimate_tprime(const std::function<double(double)>& period_of_h, double h0, double dh = 1e-3) {
    if (!period_of_h) throw FamilyUnavailable("scenario exposes no period family");
    auto D = [&](double e) { return (period_of_h(h0 + e) - period_of_h(h0 - e)) / (2 * e); };
    const double d1 = D(dh), d2 = D(dh / 2);
    const double r = (4 * d2 - d1) / 3;
    if (!std::isfinite(r)) throw FamilyUnavailable("period family not finite near h0");
    return r;
}

// ---- orbit_v1 file format ----

namespace detail {

inline nlohmann::ordered_json mat_json(const Mat& M) {
    auto a = nlohmann::ordered_json::array();
    for (int i = 0; i < M.rows(); ++i)
        for (int j = 0; j < M.cols(); ++j) a.push_back(M(i, j));
    return a;
}
inline Mat json_mat(const nlohmann::json& j, int r, int c, const char* what) {
    if (!j.is_array() || static_cast<int>(j.size()) != r * c)
        throw InvalidInput(std::string("field ") + what + " has wrong size");
    Mat M(r, c);
    for (int i = 0; i < r; ++i)
        for (int k = 0; k < c; ++k) M(i, k) = j[i * c + k].get<double>();
    return M;
}

}  // namespace detail

inline std::string orbit_to_json(const OrbitData& o) {
    nlohmann::ordered_json j;
    j["schema"] = "orbit_v1";
    j["name"] = o.name;
    j["n"] = o.n;
    j["T"] = o.T;
    j["h"] = o.h;
    j["A"] = detail::mat_json(o.A);
    if (o.tprime_h) j["tprime_h"] = *o.tprime_h;
    j["grid"] = o.grid;
    auto arr = [&](const auto& v) {
        auto a = nlohmann::ordered_json::array();
        for (const auto& m : v) a.push_back(detail::mat_json(m));
        return a;
    };
    j["P"] = arr(o.P);
    j["Q"] = arr(o.Q);
    j["R"] = arr(o.R);
    j["Lq"] = arr(o.Lq);
    j["xprime"] = arr(o.xprime);
    return j.dump(1);
}

inline OrbitData orbit_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const std::exception& e) {
        throw Io(std::string("orbit file parse error: ") + e.what());
    }
    try {
        if (j.value("schema", "") != "orbit_v1") throw InvalidInput("unsupported orbit schema");
        OrbitData o;
        o.name = j.value("name", "file");
        o.n = j.at("n").get<int>();
        o.T = j.at("T").get<double>();
        o.h = j.at("h").get<double>();
        const int n = o.n;
        o.A = detail::json_mat(j.at("A"), n, n, "A");
        if (j.contains("tprime_h") && !j["tprime_h"].is_null()) o.tprime_h = j["tprime_h"].get<double>();
        o.grid = j.at("grid").get<std::vector<double>>();
        const std::size_t m = o.grid.size();
        for (const char* f : {"P", "Q", "R", "Lq", "xprime"})
            if (j.at(f).size() != m) throw InvalidInput(std::string("field ") + f + " length differs from grid");
        for (std::size_t k = 0; k < m; ++k) {
            o.P.push_back(SymmetricMatrix(detail::json_mat(j["P"][k], n, n, "P")).matrix());
            o.Q.push_back(detail::json_mat(j["Q"][k], n, n, "Q"));
            o.R.push_back(SymmetricMatrix(detail::json_mat(j["R"][k], n, n, "R")).matrix());
            o.Lq.push_back(detail::json_mat(j["Lq"][k], n, 1, "Lq"));
            o.xprime.push_back(detail::json_mat(j["xprime"][k], n, 1, "xprime"));
        }
        for (std::size_t k = 1; k < m; ++k)
            if (!(o.grid[k] > o.grid[k - 1])) throw InvalidInput("grid must increase");
        if (m < 4 || std::abs(o.grid.front()) > 1e-14 || std::abs(o.grid.back() - 1) > 1e-14)
            throw InvalidInput("grid must span [0,1] with >= 4 points");
        make_interpolants(o);
        return o;
    } catch (const nlohmann::json::exception& e) {
        throw InvalidInput(std::string("orbit file: ") + e.what());
    }
}

inline void write_orbit_file(const OrbitData& o, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw Io("cannot write " + path);
    f << orbit_to_json(o) << "\n";
}

inline OrbitData read_orbit_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw Io("cannot open " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return orbit_from_json(ss.str());
}

}  // namespace symindex
