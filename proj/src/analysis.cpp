#include "hypoprop/analysis.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "hypoprop/error.hpp"

namespace hypoprop {
namespace {

constexpr double kSharpnessSlack = 1e-6;
constexpr double kHardySlack = 1e-9;

}  // namespace

LpExponent::LpExponent(double p) : p_(p) {
  if (!(p >= 1.0 && p <= 2.0)) {
    std::ostringstream os;
    os << "p = " << p << " lies outside [1, 2]";
    throw Error(ErrorKind::domain, os.str());
  }
  if (p == 1.0) {
    conj_ = std::numeric_limits<double>::infinity();
    inv_conj_ = 0.0;
  } else {
    conj_ = p / (p - 1.0);
    inv_conj_ = 1.0 - 1.0 / p;
  }
}

double beckner_constant(const LpExponent& p, int m) {
  if (m < 1) throw Error(ErrorKind::invalid_input, "dimension must be >= 1");
  const double log_p_part = std::log(p.p()) / p.p();
  const double log_conj_part = p.is_one() ? 0.0 : std::log(p.conj()) * p.inv_conj();
  return std::exp(0.5 * m * (log_p_part - log_conj_part));
}

double log_dispersive_bound(const SystemPair& sys, double t, const LpExponent& p) {
  if (!(t > 0.0)) throw Error(ErrorKind::domain, "dispersive bound needs t > 0");
  const int m = sys.dim();
  const double q = p.inv_conj();
  double out = (-0.5 * m + m * q) * std::log(4.0 * pi) + std::log(beckner_constant(p, m)) -
               sys.trace_B() * t * q;
  const double det_power = 0.5 - q;
  if (det_power != 0.0) out -= det_power * covariance(sys, t).log_det();
  return out;
}

double dispersive_bound(const SystemPair& sys, double t, const LpExponent& p) {
  return std::exp(log_dispersive_bound(sys, t, p));
}

DispersionReport dispersive_ratio(const GaussianPacket& P, const SystemPair& sys, double t,
                                  const LpExponent& p) {
  const GaussianPacket f = packet_propagate(P, sys, t);
  const double log_lhs = packet_log_lp_norm(f, p.conj());
  const double log_bound = log_dispersive_bound(sys, t, p) + packet_log_lp_norm(P, p.p());
  DispersionReport r{t, p, std::exp(log_lhs), std::exp(log_bound), std::exp(log_lhs - log_bound)};
  if (r.ratio > 1.0 + kSharpnessSlack) {
    std::ostringstream os;
    os << "ratio " << r.ratio << " exceeds the dispersive bound at t = " << t
       << ", p = " << p.p();
    throw Error(ErrorKind::sharpness_violation, os.str());
  }
  return r;
}

GaussianPacket sharpness_witness(const SystemPair& sys, double t, double a) {
  if (!(a > 0.0)) throw Error(ErrorKind::invalid_input, "witness needs a > 0");
  const int m = sys.dim();
  const CovarianceMatrix cov = covariance(sys, t);
  const CMatrix M = a * CMatrix::Identity(m, m) + (0.25 * I) * cov.inverse().cast<cplx>();
  return {M, CVector::Zero(m), 1.0};
}

std::vector<double> geometric_grid(double start, double stop, int count) {
  if (!(start > 0.0) || !(stop > 0.0) || count < 1)
    throw Error(ErrorKind::invalid_input, "geometric grid needs positive ends and count >= 1");
  if (count == 1) return {start};
  std::vector<double> out(count);
  const double step = std::log(stop / start) / (count - 1);
  for (int k = 0; k < count; ++k) out[k] = start * std::exp(step * k);
  out.back() = stop;
  return out;
}

double decay_exponent_fit(const SystemPair& sys, const LpExponent& p,
                          const std::vector<double>& t_grid) {
  if (t_grid.size() < 2) throw Error(ErrorKind::invalid_input, "fit needs at least two times");
  for (double t : t_grid)
    if (!(t > 0.0)) throw Error(ErrorKind::invalid_input, "fit times must be positive");
  const double ratio = std::log(t_grid[1] / t_grid[0]);
  if (!(ratio > 0.0)) throw Error(ErrorKind::invalid_input, "fit times must increase");
  for (std::size_t k = 1; k < t_grid.size(); ++k) {
    const double r = std::log(t_grid[k] / t_grid[k - 1]);
    if (std::abs(r - ratio) > 1e-9 * ratio)
      throw Error(ErrorKind::invalid_input, "fit times are not a geometric sequence");
  }
  const std::size_t n = t_grid.size();
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (double t : t_grid) {
    const double x = std::log(t);
    const double y = log_dispersive_bound(sys, t, p);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

HardyReport hardy_product(const GaussianPacket& P, const SystemPair& sys, double s) {
  if (!(s > 0.0)) throw Error(ErrorKind::domain, "Hardy product needs s > 0");
  const int m = P.dim();
  const double a = P.M()(0, 0).real();
  const CMatrix iso = a * CMatrix::Identity(m, m);
  if ((P.M() - iso).cwiseAbs().maxCoeff() > 1e-12 * a || P.w().cwiseAbs().maxCoeff() != 0.0)
    throw Error(ErrorKind::unsupported, "Hardy product needs an isotropic real Gaussian input");

  const GaussianPacket f = packet_propagate(P, sys, s);
  const Matrix K = k_matrix(sys, s);
  const Matrix R = 0.5 * (f.M().real() + f.M().real().transpose());
  const Matrix KRK = K.transpose() * R * K;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (KRK + KRK.transpose()),
                                            Eigen::EigenvaluesOnly);
  HardyReport r{a, eig.eigenvalues()(0), s, 0.0};
  r.product = r.a * r.b * s * s;
  if (!(r.product < pi * pi * (1.0 + kHardySlack))) {
    std::ostringstream os;
    os << "Hardy product " << r.product << " reaches pi^2 at s = " << s;
    throw Error(ErrorKind::invariant_violation, os.str());
  }
  return r;
}

}  // namespace hypoprop
