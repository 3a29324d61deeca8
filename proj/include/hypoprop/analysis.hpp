#pragma once

#include <vector>

#include "hypoprop/matcore.hpp"
#include "hypoprop/packets.hpp"

namespace hypoprop {

/// Exponent p in [1, 2] with its conjugate p' = p / (p - 1). The p = 1 end
/// keeps p' = infinity and 1/p' = 0 exactly rather than by floating division.
class LpExponent {
 public:
  explicit LpExponent(double p);

  double p() const noexcept { return p_; }
  double conj() const noexcept { return conj_; }
  /// 1/p', exact zero at p = 1.
  double inv_conj() const noexcept { return inv_conj_; }
  bool is_one() const noexcept { return p_ == 1.0; }

 private:
  double p_;
  double conj_;
  double inv_conj_;
};

/// (p^{1/p} / p'^{1/p'})^{m/2}; equals 1 at both p = 1 and p = 2.
double beckner_constant(const LpExponent& p, int m);

/// Operator-norm constant of T(t) from L^p to L^{p'}:
/// (4 pi)^{-m/2 + m/p'} B_p e^{-t tr B / p'} / (det Q(t))^{1/2 - 1/p'}.
double dispersive_bound(const SystemPair& sys, double t, const LpExponent& p);
double log_dispersive_bound(const SystemPair& sys, double t, const LpExponent& p);

struct DispersionReport {
  double t;
  LpExponent p;
  /// ||T(t) P||_{p'}
  double lhs;
  /// dispersive_bound * ||P||_p
  double bound;
  double ratio;
};

/// Evaluates both sides on the packet oracle; throws `sharpness_violation`
/// when ratio > 1 + 1e-6.
DispersionReport dispersive_ratio(const GaussianPacket& P, const SystemPair& sys, double t,
                                  const LpExponent& p);

/// e^{-a|x|^2} e^{-i <Q(t)^{-1} x, x>/4}: after the chirp it is a real Gaussian
/// and attains the dispersive bound for every p.
GaussianPacket sharpness_witness(const SystemPair& sys, double t, double a);

/// count points from start to stop with a constant ratio.
std::vector<double> geometric_grid(double start, double stop, int count);

/// Least-squares slope of log dispersive_bound against log t; `t_grid` must be
/// geometric.
double decay_exponent_fit(const SystemPair& sys, const LpExponent& p,
                          const std::vector<double>& t_grid);

struct HardyReport {
  double a;
  double b;
  double s;
  double product;
};

/// b = lambda_min(K(s)^T Re(M_s) K(s)) for the propagated packet, the best
/// constant in |f(x, s)| <= A e^{-b |K(s)^{-1} x|^2}. P must be c e^{-a|x|^2}.
HardyReport hardy_product(const GaussianPacket& P, const SystemPair& sys, double s);

}  // namespace hypoprop
