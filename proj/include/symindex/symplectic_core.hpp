#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include "symindex/errors.hpp"

namespace symindex {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using cplx = std::complex<double>;

inline constexpr double kRankRel = 1e-9;

// J = [[0,-I],[I,0]]
inline Mat standard_J(int n) {
    Mat J = Mat::Zero(2 * n, 2 * n);
    J.topRightCorner(n, n) = -Mat::Identity(n, n);
    J.bottomLeftCorner(n, n) = Mat::Identity(n, n);
    return J;
}

// e^{θJ} in closed form
inline Mat expJ(int n, double theta) {
    const double c = std::cos(theta), s = std::sin(theta);
    Mat R(2 * n, 2 * n);
    R << c * Mat::Identity(n, n), -s * Mat::Identity(n, n), s * Mat::Identity(n, n), c * Mat::Identity(n, n);
    return R;
}

inline double max_abs(const Mat& A) { return A.size() == 0 ? 0.0 : A.cwiseAbs().maxCoeff(); }

inline double spectral_norm(const Mat& A) {
    if (A.size() == 0) return 0.0;
    Eigen::JacobiSVD<Mat> svd(A);
    return svd.singularValues()(0);
}

// ---- linear-algebra helpers ----

inline int numerical_rank(const Mat& A, double rel = kRankRel) {
    if (A.size() == 0) return 0;
    Eigen::JacobiSVD<Mat> svd(A);
    const auto& s = svd.singularValues();
    if (s.size() == 0 || s(0) == 0.0) return 0;
    int r = 0;
    for (int i = 0; i < s.size(); ++i)
        if (s(i) > rel * s(0)) ++r;
    return r;
}

// rank with an absolute singular-value threshold
inline int numerical_rank_scaled(const Mat& A, double abs_tol) {
    if (A.size() == 0) return 0;
    Eigen::JacobiSVD<Mat> svd(A);
    const auto& s = svd.singularValues();
    int r = 0;
    for (int i = 0; i < s.size(); ++i)
        if (s(i) > abs_tol) ++r;
    return r;
}

// orthonormal basis of the column span
inline Mat orthonormal_basis(const Mat& A, double rel = kRankRel) {
    if (A.cols() == 0) return Mat(A.rows(), 0);
    Eigen::JacobiSVD<Mat> svd(A, Eigen::ComputeThinU);
    const auto& s = svd.singularValues();
    int r = 0;
    if (s.size() && s(0) > 0)
        for (int i = 0; i < s.size(); ++i)
            if (s(i) > rel * s(0)) ++r;
    return svd.matrixU().leftCols(r);
}

// orthonormal basis of ker A; `scale` > 0 overrides the relative threshold base
inline Mat null_space(const Mat& A, double rel = kRankRel, double scale = -1.0) {
    const int m = static_cast<int>(A.cols());
    if (A.rows() == 0) return Mat::Identity(m, m);
    Eigen::JacobiSVD<Mat> svd(A, Eigen::ComputeFullV);
    const auto& s = svd.singularValues();
    const double base = scale > 0 ? scale : (s.size() ? s(0) : 0.0);
    int r = 0;
    for (int i = 0; i < s.size(); ++i)
        if (s(i) > rel * base && s(i) > 0) ++r;
    return svd.matrixV().rightCols(m - r);
}

inline int intersection_dim(const Mat& X, const Mat& Y, double rel = kRankRel) {
    if (X.cols() == 0 || Y.cols() == 0) return 0;
    Mat Qx = orthonormal_basis(X, rel), Qy = orthonormal_basis(Y, rel);
    Mat S(Qx.rows(), Qx.cols() + Qy.cols());
    S << Qx, Qy;
    return static_cast<int>(Qx.cols() + Qy.cols()) - numerical_rank(S, rel);
}

// ---- symmetric matrices ----

class SymmetricMatrix {
public:
    SymmetricMatrix() = default;
    explicit SymmetricMatrix(const Mat& S, double asym_tol = 1e-8) {
        if (S.rows() != S.cols()) throw InvalidInput("symmetric matrix must be square");
        const double scale = std::max(1.0, max_abs(S));
        const double asym = max_abs(S - S.transpose());
        if (asym > asym_tol * scale) throw AsymmetricInput("asymmetry " + std::to_string(asym));
        m_ = 0.5 * (S + S.transpose());
    }
    const Mat& matrix() const { return m_; }
    int dim() const { return static_cast<int>(m_.rows()); }

private:
    Mat m_;
};

struct Inertia {
    int n_plus = 0, n_zero = 0, n_minus = 0;
    int morse() const { return n_minus; }
    int sgn() const { return n_plus - n_minus; }
    bool operator==(const Inertia&) const = default;
};

inline Vec sym_eigenvalues(const Mat& S) {
    if (S.rows() == 0) return Vec(0);
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (S + S.transpose()), Eigen::EigenvaluesOnly);
    return es.eigenvalues();
}

inline Inertia inertia_of(const Vec& ev, double zero_tol) {
    Inertia r;
    for (int i = 0; i < ev.size(); ++i) {
        if (ev(i) > zero_tol) ++r.n_plus;
        else if (ev(i) < -zero_tol) ++r.n_minus;
        else ++r.n_zero;
    }
    return r;
}

inline Inertia signature(const Mat& S, double zero_tol) { return inertia_of(sym_eigenvalues(S), zero_tol); }
inline Inertia signature(const SymmetricMatrix& S, double zero_tol) { return signature(S.matrix(), zero_tol); }

// zero band relative to the largest |eigenvalue|
inline double relative_zero_tol(const Vec& ev, double rel = kRankRel) {
    return ev.size() ? rel * ev.cwiseAbs().maxCoeff() : 0.0;
}
inline Inertia signature_rel(const Mat& S, double rel = kRankRel) {
    Vec ev = sym_eigenvalues(S);
    return inertia_of(ev, relative_zero_tol(ev, rel));
}
inline int morse_index(const Mat& S, double rel = kRankRel) { return signature_rel(S, rel).n_minus; }
inline int coindex(const Mat& S, double rel = kRankRel) { return signature_rel(S, rel).n_plus; }

// ---- symplectic matrices ----

inline double symplectic_residual(const Mat& M) {
    const int n = static_cast<int>(M.rows() / 2);
    Mat J = standard_J(n);
    return max_abs(M.transpose() * J * M - J);
}

class SymplecticMatrix {
public:
    SymplecticMatrix() = default;
    const Mat& matrix() const { return m_; }
    int half_dim() const { return static_cast<int>(m_.rows() / 2); }
    static SymplecticMatrix unchecked(const Mat& M) {
        SymplecticMatrix s;
        s.m_ = M;
        return s;
    }

private:
    Mat m_;
};

inline SymplecticMatrix validate_symplectic(const Mat& M, double tol = 1e-10) {
    if (M.rows() != M.cols() || M.rows() == 0 || M.rows() % 2 != 0)
        throw OddDimension("matrix is " + std::to_string(M.rows()) + "x" + std::to_string(M.cols()));
    const double res = symplectic_residual(M);
    if (!(res <= tol)) throw NotSymplectic(res);
    return SymplecticMatrix::unchecked(M);
}

enum class SpComponent { Plus, Zero, Minus };

inline std::string to_string(SpComponent c) {
    switch (c) {
        case SpComponent::Plus: return "Plus";
        case SpComponent::Zero: return "Zero";
        default: return "Minus";
    }
}

inline double default_det_tol(const Mat& M) {
    const int n = static_cast<int>(M.rows() / 2);
    return 1e-10 * std::pow(std::max(1.0, spectral_norm(M)), n);
}

inline SpComponent sp_component(const Mat& M, double det_tol = -1.0) {
    if (det_tol < 0) det_tol = default_det_tol(M);
    const double d = (M - Mat::Identity(M.rows(), M.cols())).determinant();
    if (d > det_tol) return SpComponent::Plus;
    if (d < -det_tol) return SpComponent::Minus;
    return SpComponent::Zero;
}
inline SpComponent sp_component(const SymplecticMatrix& M, double det_tol = -1.0) {
    return sp_component(M.matrix(), det_tol);
}

// strict variant: Zero only when M - I is numerically singular in the σ_min sense
inline SpComponent sp_component_strict(const Mat& M, double rel = 1e-13) {
    Mat D = M - Mat::Identity(M.rows(), M.cols());
    Eigen::JacobiSVD<Mat> svd(D);
    const auto& s = svd.singularValues();
    if (s(s.size() - 1) <= rel * std::max(1.0, spectral_norm(M))) return SpComponent::Zero;
    Eigen::PartialPivLU<Mat> lu(D);
    return lu.determinant() > 0 ? SpComponent::Plus : SpComponent::Minus;
}

// ---- Lagrangian subspaces ----

// Standard: (R^{2n}, ω) with J.  Product: (R^{2n} x R^{2n}, -ω x ω) with diag(-J, J).
enum class SpaceKind { Standard, Product };

inline Mat complex_structure(SpaceKind kind, int ambient_dim) {
    if (kind == SpaceKind::Standard) return standard_J(ambient_dim / 2);
    const int m = ambient_dim / 2;
    Mat Jh = Mat::Zero(ambient_dim, ambient_dim);
    Jh.topLeftCorner(m, m) = -standard_J(m / 2);
    Jh.bottomRightCorner(m, m) = standard_J(m / 2);
    return Jh;
}

// permutation K with K Ĵ = J_std K, mapping (x_q, x_p, y_q, y_p) -> (x_p, y_q, x_q, y_p)
inline Mat product_to_standard(int n) {
    Mat K = Mat::Zero(4 * n, 4 * n);
    for (int i = 0; i < n; ++i) {
        K(i, n + i) = 1;          // x_p
        K(n + i, 2 * n + i) = 1;  // y_q
        K(2 * n + i, i) = 1;      // x_q
        K(3 * n + i, 3 * n + i) = 1;
    }
    return K;
}

inline Mat to_standard_coords(SpaceKind kind, const Mat& F) {
    if (kind == SpaceKind::Standard) return F;
    return product_to_standard(static_cast<int>(F.rows() / 4)) * F;
}

class LagrangianSubspace {
public:
    LagrangianSubspace() = default;
    LagrangianSubspace(const Mat& frame, SpaceKind kind = SpaceKind::Standard, double iso_tol = 1e-10)
        : frame_(frame), kind_(kind) {
        if (frame.rows() % 2 != 0 || frame.rows() != 2 * frame.cols() || frame.cols() == 0)
            throw InvalidInput("Lagrangian frame must be 2n x n");
        if (kind == SpaceKind::Product && frame.rows() % 4 != 0) throw OddDimension("product space frame");
        const double scale = std::max(1.0, frame.squaredNorm());
        if (isotropy_residual() > iso_tol * scale) throw InvalidInput("frame is not isotropic");
        if (numerical_rank(frame) != frame.cols()) throw InvalidInput("frame is rank deficient");
    }
    const Mat& frame() const { return frame_; }
    SpaceKind kind() const { return kind_; }
    int ambient_dim() const { return static_cast<int>(frame_.rows()); }
    int dim() const { return static_cast<int>(frame_.cols()); }
    double isotropy_residual() const {
        return max_abs(frame_.transpose() * complex_structure(kind_, ambient_dim()) * frame_);
    }

private:
    Mat frame_;
    SpaceKind kind_ = SpaceKind::Standard;
};

// Gr(M) = {(x, Mx)} in (R^{2n} x R^{2n}, -ω x ω)
inline Mat graph_frame(const Mat& M) {
    const int m = static_cast<int>(M.rows());
    Mat F(2 * m, m);
    F << Mat::Identity(m, m), M;
    return F;
}
inline LagrangianSubspace graph_lagrangian(const SymplecticMatrix& M) {
    return LagrangianSubspace(graph_frame(M.matrix()), SpaceKind::Product, 1e-8);
}
inline LagrangianSubspace diagonal_lagrangian(int n) {
    return LagrangianSubspace(graph_frame(Mat::Identity(2 * n, 2 * n)), SpaceKind::Product);
}

inline Mat rotation_operator(SpaceKind kind, int ambient_dim, double theta) {
    if (kind == SpaceKind::Standard) return expJ(ambient_dim / 2, theta);
    const int m = ambient_dim / 2;
    Mat R = Mat::Zero(ambient_dim, ambient_dim);
    R.topLeftCorner(m, m) = expJ(m / 2, -theta);
    R.bottomRightCorner(m, m) = expJ(m / 2, theta);
    return R;
}

inline SymplecticMatrix rotate(const SymplecticMatrix& M, double theta) {
    return SymplecticMatrix::unchecked(expJ(M.half_dim(), theta) * M.matrix());
}
inline LagrangianSubspace rotate(const LagrangianSubspace& L, double theta) {
    return LagrangianSubspace(rotation_operator(L.kind(), L.ambient_dim(), theta) * L.frame(), L.kind(), 1e-8);
}

// unitary picture: frame in standard coordinates -> Φ = U Uᵀ, U = X + iY with [X;Y] orthonormal
inline CMat souriau_map(const Mat& F_std) {
    const int m = static_cast<int>(F_std.cols());
    Eigen::HouseholderQR<Mat> qr(F_std);
    Mat Q = qr.householderQ() * Mat::Identity(F_std.rows(), m);
    CMat U(m, m);
    U.real() = Q.topRows(m);
    U.imag() = Q.bottomRows(m);
    return U * U.transpose();
}

inline int kernel_dim(const Mat& A, double rel = kRankRel) {
    return static_cast<int>(A.cols()) - numerical_rank(A, rel);
}

// dim ker(M − I), threshold relative to max(1, ‖M‖)
inline int eigenspace_one_dim(const Mat& M, double rel = kRankRel) {
    const Mat D = M - Mat::Identity(M.rows(), M.cols());
    return static_cast<int>(M.cols()) - numerical_rank_scaled(D, rel * std::max(1.0, spectral_norm(M)));
}

}  // namespace symindex

namespace symindex {

struct MultiplierCluster {
    cplx value;
    int algebraic = 0;
    int geometric = 0;
};

// eigenvalues of M grouped within `tol`; geometric multiplicity from rank(M − λ̄I)
inline std::vector<MultiplierCluster> cluster_multipliers(const Mat& M, double tol) {
    Eigen::ComplexEigenSolver<CMat> es(M.cast<cplx>(), false);
    const CVec ev = es.eigenvalues();
    const int d = static_cast<int>(ev.size());
    std::vector<int> label(d, -1);
    std::vector<MultiplierCluster> out;
    const double scale = std::max(1.0, spectral_norm(M));
    for (int i = 0; i < d; ++i) {
        if (label[i] >= 0) continue;
        const int id = static_cast<int>(out.size());
        label[i] = id;
        // transitive closure
        bool grew = true;
        while (grew) {
            grew = false;
            for (int j = 0; j < d; ++j) {
                if (label[j] >= 0) continue;
                for (int k = 0; k < d; ++k)
                    if (label[k] == id && std::abs(ev(j) - ev(k)) <= tol) {
                        label[j] = id;
                        grew = true;
                        break;
                    }
            }
        }
        MultiplierCluster c;
        cplx sum = 0;
        for (int j = 0; j < d; ++j)
            if (label[j] == id) {
                sum += ev(j);
                ++c.algebraic;
            }
        c.value = sum / static_cast<double>(c.algebraic);
        CMat D = M.cast<cplx>() - c.value * CMat::Identity(d, d);
        Eigen::JacobiSVD<CMat> svd(D);
        const auto& s = svd.singularValues();
        int rank = 0;
        for (int j = 0; j < s.size(); ++j)
            if (s(j) > tol * scale) ++rank;
        c.geometric = d - rank;
        out.push_back(c);
    }
    return out;
}

inline bool on_unit_circle(const std::vector<MultiplierCluster>& cs, double tol) {
    for (const auto& c : cs)
        if (std::abs(std::abs(c.value) - 1.0) > tol) return false;
    return true;
}

inline bool semisimple(const std::vector<MultiplierCluster>& cs) {
    for (const auto& c : cs)
        if (c.geometric < c.algebraic) return false;
    return true;
}

}  // namespace symindex
