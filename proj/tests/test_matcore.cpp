#include <gtest/gtest.h>

#include <unsupported/Eigen/MatrixFunctions>

#include "hypoprop/error.hpp"
#include "hypoprop/matcore.hpp"
#include "oracles.hpp"

using namespace hypoprop;

namespace {

double rel(const Matrix& a, const Matrix& b) { return (a - b).norm() / b.norm(); }

TEST(SystemPair, RejectsBadShapes) {
  EXPECT_THROW(SystemPair(Matrix::Identity(2, 2), Matrix::Zero(3, 3)), Error);
  EXPECT_THROW(SystemPair(Matrix::Zero(2, 3), Matrix::Zero(2, 3)), Error);
}

TEST(SystemPair, RejectsAsymmetricAndIndefiniteQ) {
  Matrix Q(2, 2);
  Q << 1, 0.5, 0.4, 1;
  EXPECT_THROW(SystemPair(Q, Matrix::Zero(2, 2)), Error);
  Q << 1, 0, 0, -1;
  try {
    SystemPair(Q, Matrix::Zero(2, 2));
    FAIL() << "indefinite Q accepted";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::invalid_input);
  }
}

TEST(SystemPair, NonFiniteRejected) {
  Matrix B = Matrix::Zero(1, 1);
  B(0, 0) = std::nan("");
  EXPECT_THROW(SystemPair(Matrix::Identity(1, 1), B), Error);
}

TEST(MatExp, ZeroGivesIdentity) {
  EXPECT_EQ(mat_exp(Matrix::Zero(3, 3), 7.0), Matrix::Identity(3, 3));
}

TEST(MatExp, RotationClosedForm) {
  Matrix J(2, 2);
  J << 0, -1, 1, 0;
  const Matrix R = mat_exp(J, pi / 3);
  EXPECT_NEAR(R(0, 0), 0.5, 1e-15);
  EXPECT_NEAR(R(1, 0), std::sqrt(3.0) / 2, 1e-15);
}

TEST(MatExp, NilpotentIsExactPolynomial) {
  Matrix N(2, 2);
  N << 0, 0, 1, 0;
  const Matrix E = mat_exp(N, 5.0);
  EXPECT_DOUBLE_EQ(E(1, 0), 5.0);
  EXPECT_DOUBLE_EQ(E(0, 0), 1.0);
}

TEST(MatExp, AgreesWithTaylorOracleOnRandomMatrices) {
  std::mt19937_64 rng(7);
  for (int k = 0; k < 60; ++k) {
    const int m = 1 + k % 4;
    const double scale = std::pow(10.0, oracle::uniform(rng, -3, 1));
    const Matrix A = oracle::random_matrix(rng, m, m, scale);
    const Matrix expect = oracle::expm_taylor(A);
    EXPECT_LT(rel(mat_exp(A), expect), 1e-13) << "scale " << scale;
  }
}

TEST(MatExp, AgreesWithEigenMatrixFunctions) {
  std::mt19937_64 rng(11);
  for (int k = 0; k < 20; ++k) {
    const Matrix A = oracle::random_matrix(rng, 3, 3, 3.0);
    const Matrix expect = A.exp();
    EXPECT_LT(rel(mat_exp(A), expect), 1e-12);
  }
}

TEST(MatExp, InverseFlow) {
  std::mt19937_64 rng(3);
  const Matrix A = oracle::random_matrix(rng, 3, 3);
  EXPECT_LT((mat_exp(A, 2.0) * mat_exp(A, -2.0) - Matrix::Identity(3, 3)).norm(), 1e-13);
}

TEST(MatExp, OverflowIsDomainError) {
  try {
    mat_exp(Matrix::Identity(1, 1), 1e4);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::domain);
  }
}

TEST(PsdSqrt, SquaresBack) {
  std::mt19937_64 rng(5);
  const Matrix C = oracle::random_matrix(rng, 3, 2);
  const Matrix Q = C * C.transpose();
  const Matrix S = psd_sqrt(Q);
  EXPECT_LT((S * S - Q).norm(), 1e-13);
}

TEST(Covariance, KolmogorovClosedForm) {
  const SystemPair sys = SystemPair::kolmogorov(1);
  for (double t : {0.1, 1.0, 10.0}) {
    Matrix expect(2, 2);
    expect << t, t * t / 2, t * t / 2, t * t * t / 3;
    const CovarianceMatrix Q = covariance(sys, t);
    EXPECT_LT(rel(Q.value(), expect), 1e-10);
    EXPECT_NEAR(Q.det() / (std::pow(t, 4) / 12), 1.0, 1e-10);
  }
}

TEST(Covariance, OrnsteinUhlenbeckClosedForm) {
  const SystemPair sys = SystemPair::ornstein_uhlenbeck(3);
  for (double t : {0.01, 0.5, 3.0}) {
    const double q = (1 - std::exp(-2 * t)) / 2;
    EXPECT_LT(rel(covariance(sys, t).value(), q * Matrix::Identity(3, 3)), 1e-10);
    EXPECT_NEAR(covariance(sys, t).det() / std::pow(q, 3), 1.0, 1e-10);
  }
}

TEST(Covariance, ZeroTimeIsDomainError) {
  try {
    covariance(SystemPair::free(2), 0.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::domain);
  }
}

TEST(Covariance, NegativeTimeRejected) {
  EXPECT_THROW(covariance(SystemPair::free(1), -1.0), Error);
}

TEST(Covariance, DerivativeIsConjugatedDiffusion) {
  const SystemPair sys = SystemPair::kramers();
  const double t = 0.7, h = 1e-5;
  const Matrix fd = (covariance(sys, t + h).value() - covariance(sys, t - h).value()) / (2 * h);
  EXPECT_LT(rel(covariance(sys, t).derivative(), fd), 1e-8);
}

TEST(Covariance, InverseOnlyWhenPositiveDefinite) {
  Matrix Q = Matrix::Zero(2, 2);
  Q(0, 0) = 1;
  const CovarianceMatrix degenerate = covariance(SystemPair(Q, Matrix::Zero(2, 2)), 1.0);
  EXPECT_FALSE(degenerate.positive_definite());
  EXPECT_THROW(degenerate.inverse(), Error);
  const CovarianceMatrix good = covariance(SystemPair::kolmogorov(1), 2.0);
  ASSERT_TRUE(good.positive_definite());
  EXPECT_LT((good.inverse() * good.value() - Matrix::Identity(2, 2)).norm(), 1e-12);
  const Matrix& S = good.inverse_sqrt();
  EXPECT_LT((S * good.value() * S - Matrix::Identity(2, 2)).norm(), 1e-12);
}

// Seeded random systems: Q = C C^T with C entries in [-1, 1], B entries in [-1, 1].
SystemPair random_system(std::mt19937_64& rng, int m) {
  const Matrix C = oracle::random_matrix(rng, m, m);
  return {C * C.transpose(), oracle::random_matrix(rng, m, m)};
}

TEST(CovarianceProperty, Additivity) {
  std::mt19937_64 rng(2024);
  for (int k = 0; k < 100; ++k) {
    const SystemPair sys = random_system(rng, 3);
    const double t = oracle::uniform(rng, 1e-3, 2), s = oracle::uniform(rng, 1e-3, 2);
    const Matrix E = oracle::expm_taylor(t * sys.B());
    const Matrix total = covariance(sys, t + s).value();
    const Matrix gap = total - covariance(sys, t).value() - E * covariance(sys, s).value() * E.transpose();
    EXPECT_LE(norm2(gap), 1e-10 * (1 + norm2(total)));
  }
}

TEST(CovarianceProperty, MonotoneInTime) {
  std::mt19937_64 rng(99);
  for (int k = 0; k < 50; ++k) {
    const SystemPair sys = random_system(rng, 3);
    const double t = oracle::uniform(rng, 0, 2), s = oracle::uniform(rng, 0, 2);
    Eigen::SelfAdjointEigenSolver<Matrix> eig(covariance(sys, t + s).value() - covariance(sys, t).value());
    EXPECT_GE(eig.eigenvalues()(0), -1e-10);
  }
}

TEST(CovarianceProperty, VanLoanMatchesQuadrature) {
  std::mt19937_64 rng(8);
  for (int k = 0; k < 20; ++k) {
    const SystemPair sys = random_system(rng, 3);
    const double t = oracle::uniform(rng, 0.1, 3);
    EXPECT_LT(rel(covariance(sys, t).value(), covariance_quad(sys, t, 32)), 1e-11);
  }
}

TEST(Kalman, RanksOfReferenceSystems) {
  EXPECT_EQ(kalman_rank(SystemPair::kolmogorov(1)), 2);
  EXPECT_EQ(kalman_rank(SystemPair::kolmogorov(2)), 4);
  EXPECT_EQ(kalman_rank(SystemPair::kramers()), 2);
  Matrix Q = Matrix::Zero(2, 2);
  Q(0, 0) = 1;
  EXPECT_EQ(kalman_rank(SystemPair(Q, Matrix::Zero(2, 2))), 1);
}

TEST(Hypoelliptic, ReportsBothCriteria) {
  const HypoReport yes = hypoelliptic(SystemPair::kolmogorov(1));
  EXPECT_TRUE(yes.hypoelliptic);
  EXPECT_EQ(yes.kalman_rank, 2);
  EXPECT_GT(yes.lambda_min_at_t, 0.0);
  Matrix Q = Matrix::Zero(2, 2);
  Q(0, 0) = 1;
  const HypoReport no = hypoelliptic(SystemPair(Q, Matrix::Zero(2, 2)));
  EXPECT_FALSE(no.hypoelliptic);
  EXPECT_EQ(no.kalman_rank, 1);
}

TEST(Hypoelliptic, RandomSystemsAgree) {
  std::mt19937_64 rng(17);
  for (int k = 0; k < 30; ++k) {
    const Matrix c = oracle::random_matrix(rng, 3, 1);
    const SystemPair sys(c * c.transpose(), oracle::random_matrix(rng, 3, 3));
    EXPECT_NO_THROW(hypoelliptic(sys, 1.0));
  }
}

TEST(KMatrix, FreeIsScaledIdentity) {
  const Matrix K = k_matrix(SystemPair::free(2), 2.0);
  EXPECT_LT((K - 4 * pi * Matrix::Identity(2, 2)).norm(), 1e-13);
}

TEST(KMatrix, DegenerateIsSingular) {
  Matrix Q = Matrix::Zero(2, 2);
  Q(0, 0) = 1;
  try {
    k_matrix(SystemPair(Q, Matrix::Zero(2, 2)), 1.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::singular);
  }
}

}  // namespace
