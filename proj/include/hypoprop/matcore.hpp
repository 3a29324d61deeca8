#pragma once

#include <string>

#include "hypoprop/types.hpp"

namespace hypoprop {

/// The pair (Q, B) defining  d/dt f = i tr(Q D^2 f) + <Bx, grad f>.
///
/// Q must be symmetric positive semidefinite. Construction validates shape,
/// symmetry (1e-12 relative) and PSD-ness (eigenvalues >= -1e-12 ||Q||), then
/// stores the exactly symmetrized Q.
class SystemPair {
 public:
  SystemPair(Matrix Q, Matrix B);

  int dim() const noexcept { return static_cast<int>(Q_.rows()); }
  const Matrix& Q() const noexcept { return Q_; }
  const Matrix& B() const noexcept { return B_; }
  double trace_B() const noexcept { return B_.trace(); }

  /// Q = I_m, B = 0.
  static SystemPair free(int m);
  /// Q = I_m, B = -I_m.
  static SystemPair ornstein_uhlenbeck(int m);
  /// Kolmogorov system in R^{2n}: Q = diag(I_n, 0), B = [[0, 0], [I_n, 0]].
  static SystemPair kolmogorov(int n);
  /// Kramers system in R^2: Q = diag(1, 0), B = [[0, -1], [1, 0]].
  static SystemPair kramers();

 private:
  Matrix Q_;
  Matrix B_;
};

/// e^{tM} by scaling and squaring with a diagonal Pade approximant (degrees
/// 3..13, Higham's selection thresholds). Throws invalid_input on non-finite
/// entries and domain if the result overflows.
Matrix mat_exp(const Matrix& M, double t = 1.0);

/// Symmetric PSD square root via eigendecomposition. Eigenvalues in
/// [-1e-12 ||Q||, 0) are clamped to zero; anything more negative is rejected.
Matrix psd_sqrt(const Matrix& Q);

/// Q(t) = int_0^t e^{sB} Q e^{sB^T} ds together with its spectral data.
///
/// The inverse and inverse square root exist only in the positive-definite
/// (hypoelliptic) regime; asking for them otherwise throws `singular`.
class CovarianceMatrix {
 public:
  CovarianceMatrix(double t, Matrix value, Matrix derivative);

  double t() const noexcept { return t_; }
  const Matrix& value() const noexcept { return value_; }
  /// Q'(t) = e^{tB} Q e^{tB^T}.
  const Matrix& derivative() const noexcept { return derivative_; }
  const Vector& eigenvalues() const noexcept { return eigenvalues_; }
  const Matrix& eigenvectors() const noexcept { return eigenvectors_; }
  double lambda_min() const noexcept { return eigenvalues_(0); }
  double lambda_max() const noexcept { return eigenvalues_(eigenvalues_.size() - 1); }
  double det() const noexcept { return det_; }
  double log_det() const;
  /// lambda_min above a 64 m eps lambda_max floor; inverses exist exactly then.
  bool positive_definite() const noexcept { return inverse_.size() != 0; }
  const Matrix& inverse() const;
  const Matrix& inverse_sqrt() const;

 private:
  double t_;
  Matrix value_;
  Matrix derivative_;
  Vector eigenvalues_;
  Matrix eigenvectors_;
  double det_;
  Matrix inverse_;
  Matrix inverse_sqrt_;
};

/// Van Loan: exponentiate t [[-B, Q], [0, B^T]] = [[e^{-tB}, G], [0, e^{tB^T}]]
/// and read Q(t) = e^{tB} G off the blocks.
CovarianceMatrix covariance(const SystemPair& sys, double t);

/// Independent oracle: composite 8-point Gauss-Legendre over `subdivisions`
/// equal panels of [0, t].
Matrix covariance_quad(const SystemPair& sys, double t, int subdivisions);

/// Rank of [A, BA, ..., B^{m-1}A] with A = Q^{1/2}, decided by SVD with
/// threshold m * sigma_max * eps * 64.
int kalman_rank(const SystemPair& sys);

struct HypoReport {
  int kalman_rank = 0;
  double lambda_min_at_t = 0.0;
  bool hypoelliptic = false;
  double t_probe = 1.0;
};

/// Spectral test lambda_min(Q(t)) > tol ||Q(t)|| cross-checked against the
/// Kalman rank; disagreement throws `inconsistency`.
HypoReport hypoelliptic(const SystemPair& sys, double t_probe = 1.0, double tol = 1e-10);

/// K(t) = 4 pi t^{-1} Q(t) e^{-tB}; throws `singular` unless det K(t) > 0.
Matrix k_matrix(const SystemPair& sys, double t);

/// Spectral norm of a real matrix.
double norm2(const Matrix& A);

}  // namespace hypoprop
