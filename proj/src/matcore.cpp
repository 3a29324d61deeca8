#include "hypoprop/matcore.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <sstream>

#include "hypoprop/error.hpp"

namespace hypoprop {
namespace {

constexpr double kSymmetryTol = 1e-12;
constexpr double kPsdTol = 1e-12;

double max_abs(const Matrix& A) { return A.size() == 0 ? 0.0 : A.cwiseAbs().maxCoeff(); }

// Relative spectral gap below which an eigenvalue of Q(t) is treated as zero
// for inversion purposes.
double pd_floor(double lambda_max, int m) {
  return 64.0 * m * std::numeric_limits<double>::epsilon() * lambda_max;
}

}  // namespace

SystemPair::SystemPair(Matrix Q, Matrix B) : Q_(std::move(Q)), B_(std::move(B)) {
  const auto m = Q_.rows();
  if (m < 1) throw Error(ErrorKind::invalid_input, "system dimension must be >= 1");
  if (Q_.cols() != m || B_.rows() != m || B_.cols() != m) {
    std::ostringstream os;
    os << "Q is " << Q_.rows() << "x" << Q_.cols() << ", B is " << B_.rows() << "x" << B_.cols()
       << "; both must be square of equal size";
    throw Error(ErrorKind::invalid_input, os.str());
  }
  if (!Q_.allFinite() || !B_.allFinite())
    throw Error(ErrorKind::invalid_input, "system matrices contain non-finite entries");

  const double scale = max_abs(Q_);
  if (max_abs(Q_ - Q_.transpose()) > kSymmetryTol * std::max(scale, 1e-300))
    throw Error(ErrorKind::invalid_input, "Q is not symmetric");
  Q_ = 0.5 * (Q_ + Q_.transpose());

  if (scale > 0.0) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(Q_, Eigen::EigenvaluesOnly);
    const double lmin = eig.eigenvalues()(0);
    const double lmax = eig.eigenvalues().cwiseAbs().maxCoeff();
    if (lmin < -kPsdTol * lmax) throw Error(ErrorKind::invalid_input, "Q is not positive semidefinite");
  }
}

SystemPair SystemPair::free(int m) { return {Matrix::Identity(m, m), Matrix::Zero(m, m)}; }

SystemPair SystemPair::ornstein_uhlenbeck(int m) {
  return {Matrix::Identity(m, m), -Matrix::Identity(m, m)};
}

SystemPair SystemPair::kolmogorov(int n) {
  Matrix Q = Matrix::Zero(2 * n, 2 * n);
  Matrix B = Matrix::Zero(2 * n, 2 * n);
  Q.topLeftCorner(n, n).setIdentity();
  B.bottomLeftCorner(n, n).setIdentity();
  return {Q, B};
}

SystemPair SystemPair::kramers() {
  Matrix Q{{1.0, 0.0}, {0.0, 0.0}};
  Matrix B{{0.0, -1.0}, {1.0, 0.0}};
  return {Q, B};
}

double norm2(const Matrix& A) {
  if (A.size() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(A);
  return svd.singularValues()(0);
}

Matrix psd_sqrt(const Matrix& Q) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (Q + Q.transpose()));
  Vector lambda = eig.eigenvalues();
  const double scale = lambda.cwiseAbs().maxCoeff();
  for (Eigen::Index i = 0; i < lambda.size(); ++i) {
    if (lambda(i) < 0.0) {
      if (lambda(i) < -kPsdTol * scale)
        throw Error(ErrorKind::invalid_input, "psd_sqrt: matrix has a negative eigenvalue");
      lambda(i) = 0.0;
    }
  }
  const Matrix& V = eig.eigenvectors();
  return V * lambda.cwiseSqrt().asDiagonal() * V.transpose();
}

CovarianceMatrix::CovarianceMatrix(double t, Matrix value, Matrix derivative)
    : t_(t), value_(std::move(value)), derivative_(std::move(derivative)) {
  value_ = 0.5 * (value_ + value_.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(value_);
  eigenvalues_ = eig.eigenvalues();
  eigenvectors_ = eig.eigenvectors();
  det_ = eigenvalues_.prod();
  const int m = static_cast<int>(value_.rows());
  if (lambda_min() > pd_floor(lambda_max(), m)) {
    const Matrix& V = eigenvectors_;
    inverse_ = V * eigenvalues_.cwiseInverse().asDiagonal() * V.transpose();
    inverse_ = 0.5 * (inverse_ + inverse_.transpose());
    inverse_sqrt_ = V * eigenvalues_.cwiseSqrt().cwiseInverse().asDiagonal() * V.transpose();
    inverse_sqrt_ = 0.5 * (inverse_sqrt_ + inverse_sqrt_.transpose());
  }
}

double CovarianceMatrix::log_det() const {
  if (!positive_definite()) throw Error(ErrorKind::singular, "Q(t) is not positive definite");
  return eigenvalues_.array().log().sum();
}

const Matrix& CovarianceMatrix::inverse() const {
  if (inverse_.size() == 0) throw Error(ErrorKind::singular, "Q(t) is not invertible");
  return inverse_;
}

const Matrix& CovarianceMatrix::inverse_sqrt() const {
  if (inverse_sqrt_.size() == 0) throw Error(ErrorKind::singular, "Q(t) is not invertible");
  return inverse_sqrt_;
}

CovarianceMatrix covariance(const SystemPair& sys, double t) {
  if (!(t > 0.0) || !std::isfinite(t))
    throw Error(ErrorKind::domain, "covariance requires t > 0");
  const int m = sys.dim();
  Matrix C = Matrix::Zero(2 * m, 2 * m);
  C.topLeftCorner(m, m) = -sys.B();
  C.topRightCorner(m, m) = sys.Q();
  C.bottomRightCorner(m, m) = sys.B().transpose();
  const Matrix E = mat_exp(C, t);
  const Matrix flow = E.bottomRightCorner(m, m).transpose();  // e^{tB}
  Matrix Qt = flow * E.topRightCorner(m, m);
  Matrix dQt = flow * sys.Q() * flow.transpose();
  if (!Qt.allFinite()) throw Error(ErrorKind::domain, "covariance overflows at this t");
  return {t, std::move(Qt), std::move(dQt)};
}

Matrix covariance_quad(const SystemPair& sys, double t, int subdivisions) {
  if (!(t > 0.0)) throw Error(ErrorKind::domain, "covariance_quad requires t > 0");
  if (subdivisions < 4) throw Error(ErrorKind::invalid_input, "covariance_quad needs >= 4 panels");
  static constexpr std::array<double, 4> kNode = {0.1834346424956498, 0.5255324099163290,
                                                  0.7966664774136267, 0.9602898564975363};
  static constexpr std::array<double, 4> kWeight = {0.3626837833783620, 0.3137066458778873,
                                                    0.2223810344533745, 0.1012285362903763};
  const int m = sys.dim();
  const double h = t / subdivisions;
  Matrix acc = Matrix::Zero(m, m);
  for (int k = 0; k < subdivisions; ++k) {
    const double mid = (k + 0.5) * h;
    for (std::size_t j = 0; j < kNode.size(); ++j) {
      for (const double sign : {-1.0, 1.0}) {
        const Matrix F = mat_exp(sys.B(), mid + sign * 0.5 * h * kNode[j]);
        acc.noalias() += (0.5 * h * kWeight[j]) * (F * sys.Q() * F.transpose());
      }
    }
  }
  return 0.5 * (acc + acc.transpose());
}

int kalman_rank(const SystemPair& sys) {
  const int m = sys.dim();
  const Matrix A = psd_sqrt(sys.Q());
  Matrix ctrb(m, m * m);
  Matrix block = A;
  for (int k = 0; k < m; ++k) {
    ctrb.middleCols(k * m, m) = block;
    block = sys.B() * block;
  }
  Eigen::JacobiSVD<Matrix> svd(ctrb);
  const Vector& sigma = svd.singularValues();
  if (sigma.size() == 0 || sigma(0) == 0.0) return 0;
  const double threshold = m * sigma(0) * std::numeric_limits<double>::epsilon() * 64.0;
  return static_cast<int>((sigma.array() > threshold).count());
}

HypoReport hypoelliptic(const SystemPair& sys, double t_probe, double tol) {
  if (!(t_probe > 0.0)) throw Error(ErrorKind::domain, "hypoelliptic: t_probe must be > 0");
  if (!(tol > 0.0)) throw Error(ErrorKind::domain, "hypoelliptic: tol must be > 0");
  const CovarianceMatrix cov = covariance(sys, t_probe);
  HypoReport report;
  report.t_probe = t_probe;
  report.kalman_rank = kalman_rank(sys);
  report.lambda_min_at_t = cov.lambda_min();
  report.hypoelliptic = cov.lambda_max() > 0.0 && cov.lambda_min() > tol * cov.lambda_max();
  const bool full_rank = report.kalman_rank == sys.dim();
  if (report.hypoelliptic != full_rank) {
    std::ostringstream os;
    os << "spectral test (lambda_min=" << cov.lambda_min() << ", lambda_max=" << cov.lambda_max()
       << ", tol=" << tol << ") disagrees with Kalman rank " << report.kalman_rank << "/"
       << sys.dim();
    throw Error(ErrorKind::inconsistency, os.str());
  }
  return report;
}

Matrix k_matrix(const SystemPair& sys, double t) {
  const CovarianceMatrix cov = covariance(sys, t);
  if (!cov.positive_definite())
    throw Error(ErrorKind::singular, "K(t) requires a positive definite Q(t)");
  const int m = sys.dim();
  Matrix K = (4.0 * pi / t) * cov.value() * mat_exp(sys.B(), -t);
  const double log_det = m * std::log(4.0 * pi / t) - t * sys.trace_B() + cov.log_det();
  const double lu_det = K.partialPivLu().determinant();
  if (!std::isfinite(log_det) || !(lu_det > 0.0))
    throw Error(ErrorKind::singular, "det K(t) is not positive");
  return K;
}

}  // namespace hypoprop
