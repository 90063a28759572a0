/**
 * @file gaussian_info.hpp
 * @brief Gaussian beliefs in moment and information form, and the algebra the
 *        censored distributed information filter is built from.
 *
 * A belief N(x, P) is stored either as (mean, cov) or as the information pair
 * (y, Y) = (P^-1 x, P^-1). Measurement updates are additive in information
 * form, and logarithmic opinion pooling of Gaussians reduces to a convex
 * combination of information pairs.
 *
 * Every type is templated on the state dimension. Dim = Eigen::Dynamic is
 * supported for tests and tools that work with arbitrary sizes; the tracking
 * harness uses Dim = 4.
 */

#ifndef VOI_GAUSSIAN_INFO_HPP
#define VOI_GAUSSIAN_INFO_HPP

#include <cmath>
#include <span>
#include <stdexcept>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/LU>
#include <Eigen/SVD>

namespace voi {

/// Raised when a matrix that must be positive definite or invertible is not.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

template <int Dim = Eigen::Dynamic>
using Vector = Eigen::Matrix<double, Dim, 1>;

template <int Dim = Eigen::Dynamic>
using Matrix = Eigen::Matrix<double, Dim, Dim>;

/// Largest condition number accepted for the dynamics matrix A.
inline constexpr double kMaxDynamicsCondition = 1e12;

/// Most negative KL value tolerated as round-off before it is treated as a bug.
inline constexpr double kKlNegativeTolerance = 1e-9;

template <typename Derived>
auto symmetrize(const Eigen::MatrixBase<Derived>& m) {
    using Plain = typename Derived::PlainObject;
    return Plain(0.5 * (m + m.transpose()));
}

namespace detail {

template <int Dim>
void check_square(const Matrix<Dim>& m, Eigen::Index n, const char* what) {
    if (m.rows() != n || m.cols() != n) {
        throw std::invalid_argument(std::string(what) + ": expected " + std::to_string(n) + "x" +
                                    std::to_string(n) + " matrix, got " + std::to_string(m.rows()) +
                                    "x" + std::to_string(m.cols()));
    }
}

template <int Dim>
Eigen::LLT<Matrix<Dim>> factor_pd(const Matrix<Dim>& m, const char* what) {
    Eigen::LLT<Matrix<Dim>> llt(m);
    if (llt.info() != Eigen::Success || !m.allFinite()) {
        throw NumericalError(std::string(what) + " is not positive definite");
    }
    // LLT accepts some semi-definite inputs with a zero pivot.
    const auto diag = llt.matrixLLT().diagonal();
    if ((diag.array() <= 0.0).any()) {
        throw NumericalError(std::string(what) + " is not positive definite");
    }
    return llt;
}

template <int Dim>
double log_det(const Eigen::LLT<Matrix<Dim>>& llt) {
    return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

}  // namespace detail

/// Gaussian belief N(mean, cov). The covariance is symmetrized on construction
/// and must be positive definite.
template <int Dim = Eigen::Dynamic>
struct MomentEstimate {
    Vector<Dim> mean;
    Matrix<Dim> cov;

    MomentEstimate(Vector<Dim> mean_in, const Matrix<Dim>& cov_in)
        : mean(std::move(mean_in)), cov(symmetrize(cov_in)) {
        detail::check_square<Dim>(cov, mean.size(), "MomentEstimate covariance");
        detail::factor_pd<Dim>(cov, "covariance matrix");
    }

    [[nodiscard]] Eigen::Index dim() const { return mean.size(); }
};

/// Gaussian belief in information form: info_vec = P^-1 x, info_mat = P^-1.
template <int Dim = Eigen::Dynamic>
struct InfoEstimate {
    Vector<Dim> info_vec;
    Matrix<Dim> info_mat;

    InfoEstimate(Vector<Dim> y, const Matrix<Dim>& Y)
        : info_vec(std::move(y)), info_mat(symmetrize(Y)) {
        detail::check_square<Dim>(info_mat, info_vec.size(), "InfoEstimate information matrix");
        detail::factor_pd<Dim>(info_mat, "information matrix");
    }

    [[nodiscard]] Eigen::Index dim() const { return info_vec.size(); }

    /// Diffuse prior centred on `guess`: Y = eps * I, y = eps * guess.
    static InfoEstimate diffuse(const Vector<Dim>& guess, double eps) {
        if (!(eps > 0.0)) {
            throw std::invalid_argument("diffuse prior needs eps > 0");
        }
        const Eigen::Index n = guess.size();
        return InfoEstimate(eps * guess, eps * Matrix<Dim>::Identity(n, n));
    }

    friend bool operator==(const InfoEstimate& a, const InfoEstimate& b) {
        return a.info_vec == b.info_vec && a.info_mat == b.info_mat;
    }
};

/// Information carried by one measurement: ivec = H^T R^-1 z, imat = H^T R^-1 H.
/// imat is PSD and may be rank deficient.
template <int Dim = Eigen::Dynamic>
struct MeasurementContribution {
    Vector<Dim> ivec;
    Matrix<Dim> imat;

    static MeasurementContribution zero(Eigen::Index n = Dim) {
        return {Vector<Dim>::Zero(n), Matrix<Dim>::Zero(n, n)};
    }

    [[nodiscard]] Eigen::Index dim() const { return ivec.size(); }
};

/// Linear dynamics x' = A x + w, w ~ N(0, Q), with A checked for invertibility
/// once so that repeated predictions reuse A^-1.
template <int Dim = Eigen::Dynamic>
class LinearDynamics {
public:
    LinearDynamics(const Matrix<Dim>& A, const Matrix<Dim>& Q) : A_(A), Q_(symmetrize(Q)) {
        if (A_.rows() != A_.cols()) {
            throw std::invalid_argument("dynamics matrix must be square");
        }
        detail::check_square<Dim>(Q_, A_.rows(), "process noise");
        const Eigen::JacobiSVD<Matrix<Dim>> svd(A_);
        const auto& sv = svd.singularValues();
        const double smallest = sv(sv.size() - 1);
        if (!(smallest > 0.0) || sv(0) / smallest > kMaxDynamicsCondition) {
            throw NumericalError("dynamics not invertible, information-form prediction undefined");
        }
        A_inv_ = A_.inverse();
    }

    [[nodiscard]] const Matrix<Dim>& A() const { return A_; }
    [[nodiscard]] const Matrix<Dim>& Q() const { return Q_; }
    [[nodiscard]] const Matrix<Dim>& A_inv() const { return A_inv_; }
    [[nodiscard]] Eigen::Index dim() const { return A_.rows(); }

private:
    Matrix<Dim> A_;
    Matrix<Dim> Q_;
    Matrix<Dim> A_inv_;
};

template <int Dim>
InfoEstimate<Dim> to_information(const MomentEstimate<Dim>& m) {
    const auto llt = detail::factor_pd<Dim>(m.cov, "covariance matrix");
    const Eigen::Index n = m.dim();
    Matrix<Dim> Y = llt.solve(Matrix<Dim>::Identity(n, n));
    Vector<Dim> y = llt.solve(m.mean);
    return InfoEstimate<Dim>(std::move(y), Y);
}

template <int Dim>
MomentEstimate<Dim> to_moment(const InfoEstimate<Dim>& e) {
    const auto llt = detail::factor_pd<Dim>(e.info_mat, "information matrix");
    const Eigen::Index n = e.dim();
    Matrix<Dim> P = llt.solve(Matrix<Dim>::Identity(n, n));
    Vector<Dim> x = llt.solve(e.info_vec);
    return MomentEstimate<Dim>(std::move(x), P);
}

/**
 * KL(p || q) for Gaussians, in nats:
 *
 *   1/2 [ (x_q - x_p)^T P_q^-1 (x_q - x_p) + tr(P_q^-1 P_p) - n + log(det P_q / det P_p) ]
 *
 * Round-off below zero is clamped; anything under -kKlNegativeTolerance throws.
 */
template <int Dim>
double kl_gaussian(const MomentEstimate<Dim>& p, const MomentEstimate<Dim>& q) {
    if (p.dim() != q.dim()) {
        throw std::invalid_argument("kl_gaussian: dimension mismatch");
    }
    const auto llt_q = detail::factor_pd<Dim>(q.cov, "q covariance");
    const auto llt_p = detail::factor_pd<Dim>(p.cov, "p covariance");
    const Vector<Dim> diff = q.mean - p.mean;
    const double mahalanobis = diff.dot(llt_q.solve(diff));
    const double trace = llt_q.solve(p.cov).trace();
    const double log_ratio = detail::log_det<Dim>(llt_q) - detail::log_det<Dim>(llt_p);
    const double kl =
        0.5 * (mahalanobis + trace - static_cast<double>(p.dim()) + log_ratio);
    if (!std::isfinite(kl)) {
        throw NumericalError("kl_gaussian: non-finite divergence");
    }
    if (kl < -kKlNegativeTolerance) {
        throw NumericalError("kl_gaussian: negative divergence " + std::to_string(kl));
    }
    return kl < 0.0 ? 0.0 : kl;
}

/**
 * Logarithmic opinion pool of Gaussians with equal weights over the node's own
 * estimate and the m estimates it received: (y_own + sum y_j) / (m + 1), and
 * likewise for Y. With nothing received the own estimate is returned as is.
 */
template <int Dim>
InfoEstimate<Dim> logop_fuse(const InfoEstimate<Dim>& own,
                             std::span<const InfoEstimate<Dim>> received) {
    if (received.empty()) {
        return own;
    }
    Vector<Dim> y = own.info_vec;
    Matrix<Dim> Y = own.info_mat;
    for (const auto& r : received) {
        if (r.dim() != own.dim()) {
            throw std::invalid_argument("logop_fuse: dimension mismatch");
        }
        y += r.info_vec;
        Y += r.info_mat;
    }
    const double w = 1.0 / static_cast<double>(received.size() + 1);
    return InfoEstimate<Dim>(w * y, w * Y);
}

/// Information-form prediction through x' = A x + w:
/// M = A^-T Y A^-1, y' = (I + M Q)^-1 A^-T y, Y' = (I + M Q)^-1 M.
template <int Dim>
InfoEstimate<Dim> info_predict(const InfoEstimate<Dim>& e, const LinearDynamics<Dim>& dyn) {
    if (e.dim() != dyn.dim()) {
        throw std::invalid_argument("info_predict: dimension mismatch");
    }
    const Eigen::Index n = e.dim();
    const Matrix<Dim> Ainv_T = dyn.A_inv().transpose();
    const Matrix<Dim> M = symmetrize(Ainv_T * e.info_mat * dyn.A_inv());
    const Matrix<Dim> S = Matrix<Dim>::Identity(n, n) + M * dyn.Q();
    const Eigen::PartialPivLU<Matrix<Dim>> lu(S);
    Vector<Dim> y = lu.solve(Ainv_T * e.info_vec);
    const Matrix<Dim> Y = lu.solve(M);
    return InfoEstimate<Dim>(std::move(y), Y);
}

template <int Dim>
InfoEstimate<Dim> info_predict(const InfoEstimate<Dim>& e, const Matrix<Dim>& A,
                               const Matrix<Dim>& Q) {
    return info_predict(e, LinearDynamics<Dim>(A, Q));
}

/// Measurement update in information form: y + i, Y + I.
template <int Dim>
InfoEstimate<Dim> info_update(const InfoEstimate<Dim>& e, const MeasurementContribution<Dim>& c) {
    if (e.dim() != c.dim() || c.imat.rows() != e.dim() || c.imat.cols() != e.dim()) {
        throw std::invalid_argument("info_update: dimension mismatch");
    }
    return InfoEstimate<Dim>(e.info_vec + c.ivec, e.info_mat + c.imat);
}

/**
 * The information-matrix half of the prediction written as
 *
 *   f(Y) = A^-T Y A^-1 - A^-T Y (Y + A^T Q^-1 A)^-1 Y A^-1
 *
 * which is monotone in the PSD order. Q = 0 gives A^-T Y A^-1. A singular but
 * nonzero Q falls back to (I + M Q)^-1 M.
 */
template <int Dim>
Matrix<Dim> f_map(const Matrix<Dim>& Y, const Matrix<Dim>& A, const Matrix<Dim>& Q) {
    const LinearDynamics<Dim> dyn(A, Q);
    detail::check_square<Dim>(Y, dyn.dim(), "f_map information matrix");
    const Eigen::Index n = dyn.dim();
    const Matrix<Dim> Ainv_T = dyn.A_inv().transpose();
    const Matrix<Dim> M = symmetrize(Ainv_T * Y * dyn.A_inv());
    if (dyn.Q().isZero(0.0)) {
        return M;
    }
    const Eigen::LLT<Matrix<Dim>> llt_q(dyn.Q());
    const bool q_pd = llt_q.info() == Eigen::Success &&
                      (llt_q.matrixLLT().diagonal().array() > 0.0).all();
    if (!q_pd) {
        const Matrix<Dim> S = Matrix<Dim>::Identity(n, n) + M * dyn.Q();
        return symmetrize(Matrix<Dim>(S.partialPivLu().solve(M)));
    }
    const Matrix<Dim> Qinv = llt_q.solve(Matrix<Dim>::Identity(n, n));
    const Matrix<Dim> inner = symmetrize(Matrix<Dim>(Y + A.transpose() * Qinv * A));
    const Matrix<Dim> correction = Ainv_T * Y * inner.ldlt().solve(Matrix<Dim>(Y * dyn.A_inv()));
    return symmetrize(Matrix<Dim>(M - correction));
}

}  // namespace voi

#endif  // VOI_GAUSSIAN_INFO_HPP
