#pragma once

#include <limits>
#include <vector>

#include "hypoprop/matcore.hpp"
#include "hypoprop/types.hpp"

namespace hypoprop {

/// c * exp(-<Mx, x> + <w, x>) with M complex symmetric and Re M positive
/// definite. The bracket is bilinear (no conjugation), so for real x the
/// modulus is governed by Re M and Re w alone.
class GaussianPacket {
 public:
  GaussianPacket(CMatrix M, CVector w, cplx c);

  /// c * exp(-a |x|^2).
  static GaussianPacket isotropic(int m, double a, cplx c = 1.0);

  int dim() const noexcept { return static_cast<int>(M_.rows()); }
  const CMatrix& M() const noexcept { return M_; }
  const CVector& w() const noexcept { return w_; }
  cplx c() const noexcept { return c_; }

  /// x -> P(-x).
  GaussianPacket reflected() const;
  /// Multiplies by exp(i <S x, x>) for a real symmetric S (modulus unchanged).
  GaussianPacket chirped(const Matrix& S) const;
  GaussianPacket scaled(cplx factor) const;

 private:
  CMatrix M_;
  CVector w_;
  cplx c_;
};

struct BranchedDet {
  cplx value;
  /// arg of each eigenvalue of the input, in [-pi/2, pi/2].
  std::vector<double> branch_args;
};

cplx packet_eval(const GaussianPacket& P, const Vector& x);

/// sqrt(det A) as the product of principal roots of the eigenvalues of A.
/// Re A >= 0 puts every eigenvalue in the closed right half plane, so the
/// product is the analytic branch that is positive on real SPD matrices.
BranchedDet sqrt_det_branched(const CMatrix& A);

/// Exact transform under F f(xi) = int e^{-2 pi i <xi, x>} f(x) dx:
/// M -> pi^2 M^{-1}, w -> -i pi M^{-1} w,
/// c -> c (det(M/pi))^{-1/2} exp(<M^{-1} w, w> / 4).
GaussianPacket packet_fourier(const GaussianPacket& P);
GaussianPacket packet_inverse_fourier(const GaussianPacket& P);

/// T(t)P evaluated symbolically on the Fourier side:
/// f^(xi) = e^{-t tr B} P^(E xi) exp(-4 pi^2 i <Q(t) E xi, E xi>), E = e^{-tB^T}.
/// Positivity of Q(t) is not needed by this route.
GaussianPacket packet_propagate(const GaussianPacket& P, const SystemPair& sys, double t);

/// Closed-form L^p norm, p in [1, inf]; pass infinity() for the sup norm.
double packet_lp_norm(const GaussianPacket& P, double p);
/// log of packet_lp_norm, finite even when the norm itself would overflow.
double packet_log_lp_norm(const GaussianPacket& P, double p);

inline constexpr double p_infinity = std::numeric_limits<double>::infinity();

/// (L P)(x) with L = i tr(Q D^2) + <Bx, grad>.
cplx packet_generator_eval(const GaussianPacket& P, const SystemPair& sys, const Vector& x);

/// Fourier symbol of the generator applied to a frequency-side packet G = f^:
/// -{ <B^T xi, grad G(xi)> + (4 pi^2 i <Q xi, xi> + tr B) G(xi) }.
cplx packet_fourier_generator_eval(const GaussianPacket& G, const SystemPair& sys,
                                   const Vector& xi);

/// Smallest eigenvalue of Re M.
double real_part_lambda_min(const CMatrix& M);

}  // namespace hypoprop
