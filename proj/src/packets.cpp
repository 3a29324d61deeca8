#include "hypoprop/packets.hpp"

#include <cmath>
#include <sstream>

#include "hypoprop/error.hpp"

namespace hypoprop {
namespace {

constexpr double kSymmetryTol = 1e-12;
constexpr double kBranchTol = 1e-12;

double max_abs(const CMatrix& A) { return A.size() == 0 ? 0.0 : A.cwiseAbs().maxCoeff(); }

CMatrix symmetrized(const CMatrix& A) { return 0.5 * (A + A.transpose()); }

// Packets built from intermediate algebra carry rounding-level asymmetry.
GaussianPacket make_packet(const CMatrix& M, CVector w, cplx c) {
  return {symmetrized(M), std::move(w), c};
}

CMatrix inverse_of(const CMatrix& M) {
  Eigen::PartialPivLU<CMatrix> lu(M);
  CMatrix inv = lu.inverse();
  if (!inv.allFinite()) throw Error(ErrorKind::singular, "exponent matrix is singular");
  return symmetrized(inv);
}

}  // namespace

GaussianPacket::GaussianPacket(CMatrix M, CVector w, cplx c)
    : M_(std::move(M)), w_(std::move(w)), c_(c) {
  const auto m = M_.rows();
  if (m < 1 || M_.cols() != m || w_.size() != m) {
    std::ostringstream os;
    os << "packet shapes: M is " << M_.rows() << "x" << M_.cols() << ", w has " << w_.size()
       << " entries";
    throw Error(ErrorKind::invalid_input, os.str());
  }
  if (!M_.allFinite() || !w_.allFinite() || !std::isfinite(c_.real()) || !std::isfinite(c_.imag()))
    throw Error(ErrorKind::invalid_input, "packet parameters contain non-finite entries");
  const double scale = max_abs(M_);
  if (max_abs(M_ - M_.transpose()) > kSymmetryTol * std::max(scale, 1e-300))
    throw Error(ErrorKind::invalid_input, "packet exponent matrix is not complex symmetric");
  M_ = symmetrized(M_);

  const double lmin = real_part_lambda_min(M_);
  if (!(lmin > 0.0)) {
    if (lmin >= -kBranchTol * scale)
      throw Error(ErrorKind::unsupported_limit,
                  "Re M is singular (pure chirp); not representable as a packet");
    throw Error(ErrorKind::invalid_input, "Re M is not positive definite");
  }
}

GaussianPacket GaussianPacket::isotropic(int m, double a, cplx c) {
  if (m < 1) throw Error(ErrorKind::invalid_input, "packet dimension must be >= 1");
  if (!(a > 0.0)) throw Error(ErrorKind::invalid_input, "isotropic packet needs a > 0");
  return {a * CMatrix::Identity(m, m), CVector::Zero(m), c};
}

GaussianPacket GaussianPacket::reflected() const { return {M_, -w_, c_}; }

GaussianPacket GaussianPacket::chirped(const Matrix& S) const {
  if (S.rows() != M_.rows() || S.cols() != M_.cols())
    throw Error(ErrorKind::dimension, "chirp matrix has the wrong size");
  const Matrix Ssym = 0.5 * (S + S.transpose());
  return {M_ - I * Ssym.cast<cplx>(), w_, c_};
}

GaussianPacket GaussianPacket::scaled(cplx factor) const { return {M_, w_, c_ * factor}; }

double real_part_lambda_min(const CMatrix& M) {
  const Matrix R = 0.5 * (M.real() + M.real().transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(R, Eigen::EigenvaluesOnly);
  return eig.eigenvalues()(0);
}

cplx packet_eval(const GaussianPacket& P, const Vector& x) {
  if (x.size() != P.dim()) throw Error(ErrorKind::dimension, "evaluation point has the wrong size");
  const CVector xc = x.cast<cplx>();
  const cplx exponent = -(xc.transpose() * P.M() * xc)(0) + (P.w().transpose() * xc)(0);
  return P.c() * std::exp(exponent);
}

BranchedDet sqrt_det_branched(const CMatrix& A) {
  if (A.rows() != A.cols() || A.rows() < 1)
    throw Error(ErrorKind::invalid_input, "sqrt_det_branched needs a square matrix");
  const double scale = std::max(max_abs(A), 1e-300);
  if (real_part_lambda_min(A) < -kBranchTol * scale)
    throw Error(ErrorKind::branch, "Re A has a negative eigenvalue");

  Eigen::ComplexEigenSolver<CMatrix> eig(A, false);
  if (eig.info() != Eigen::Success) throw Error(ErrorKind::branch, "eigenvalue solver failed");
  BranchedDet out;
  cplx product = 1.0;
  for (Eigen::Index j = 0; j < eig.eigenvalues().size(); ++j) {
    const cplx lambda = eig.eigenvalues()(j);
    if (lambda.real() < -kBranchTol * scale)
      throw Error(ErrorKind::branch, "eigenvalue in the open left half plane");
    // A slightly negative real part from rounding would flip arg to the far
    // side of the cut; fold it back onto the imaginary axis.
    const cplx folded(std::max(lambda.real(), 0.0), lambda.imag());
    out.branch_args.push_back(std::arg(folded));
    product *= std::sqrt(folded);
  }
  // The eigenvalue product fixes the branch; the LU determinant is the more
  // accurate magnitude and phase, so keep whichever root of it lies nearest.
  const cplx det = A.partialPivLu().determinant();
  const cplx root = std::sqrt(det);
  out.value = std::abs(root - product) <= std::abs(root + product) ? root : -root;
  return out;
}

GaussianPacket packet_fourier(const GaussianPacket& P) {
  const CMatrix Minv = inverse_of(P.M());
  const BranchedDet sd = sqrt_det_branched(P.M() / pi);
  const CVector Mw = Minv * P.w();
  const cplx quad = 0.25 * (P.w().transpose() * Mw)(0);
  const CVector w_hat = (-I * pi) * Mw;
  const cplx c_hat = P.c() * std::exp(quad) / sd.value;
  return make_packet(pi * pi * Minv, w_hat, c_hat);
}

GaussianPacket packet_inverse_fourier(const GaussianPacket& P) {
  return packet_fourier(P).reflected();
}

GaussianPacket packet_propagate(const GaussianPacket& P, const SystemPair& sys, double t) {
  if (P.dim() != sys.dim()) throw Error(ErrorKind::dimension, "packet and system sizes differ");
  if (!(t >= 0.0) || !std::isfinite(t)) throw Error(ErrorKind::domain, "propagation needs t >= 0");
  if (t == 0.0) return P;

  const GaussianPacket hat = packet_fourier(P);
  const CovarianceMatrix cov = covariance(sys, t);
  const CMatrix E = mat_exp(sys.B().transpose(), -t).cast<cplx>();
  const CMatrix inner = hat.M() + (4.0 * pi * pi) * I * cov.value().cast<cplx>();
  const CMatrix M2 = E.transpose() * inner * E;
  const CVector w2 = E.transpose() * hat.w();
  const cplx c2 = hat.c() * std::exp(-t * sys.trace_B());
  if (!(real_part_lambda_min(symmetrized(M2)) > 0.0))
    throw Error(ErrorKind::invariant_violation, "propagated symbol lost Re M > 0");

  try {
    return packet_inverse_fourier(make_packet(M2, w2, c2));
  } catch (const Error& e) {
    throw Error(ErrorKind::invariant_violation,
                std::string("propagated packet is not a valid packet: ") + e.what());
  }
}

double packet_log_lp_norm(const GaussianPacket& P, double p) {
  if (!(p >= 1.0)) throw Error(ErrorKind::domain, "L^p norm needs p >= 1");
  const int m = P.dim();
  const Matrix R = 0.5 * (P.M().real() + P.M().real().transpose());
  const Vector u = P.w().real();
  Eigen::LLT<Matrix> llt(R);
  if (llt.info() != Eigen::Success) throw Error(ErrorKind::invariant_violation, "Re M is not SPD");
  const double peak = std::log(std::abs(P.c())) + 0.25 * u.dot(llt.solve(u));
  if (std::isinf(p)) return peak;
  const Matrix L = llt.matrixL();
  const double log_det_R = 2.0 * L.diagonal().array().log().sum();
  const double log_integral = 0.5 * m * (std::log(pi) - std::log(p)) - 0.5 * log_det_R;
  return peak + log_integral / p;
}

double packet_lp_norm(const GaussianPacket& P, double p) {
  if (P.c() == cplx(0.0)) return 0.0;
  return std::exp(packet_log_lp_norm(P, p));
}

cplx packet_generator_eval(const GaussianPacket& P, const SystemPair& sys, const Vector& x) {
  if (P.dim() != sys.dim()) throw Error(ErrorKind::dimension, "packet and system sizes differ");
  const CVector xc = x.cast<cplx>();
  const CMatrix Q = sys.Q().cast<cplx>();
  const CVector grad = -2.0 * (P.M() * xc) + P.w();
  const cplx diffusion = (grad.transpose() * Q * grad)(0) - 2.0 * (Q * P.M()).trace();
  const cplx drift = ((sys.B() * x).cast<cplx>().transpose() * grad)(0);
  return packet_eval(P, x) * (I * diffusion + drift);
}

cplx packet_fourier_generator_eval(const GaussianPacket& G, const SystemPair& sys,
                                   const Vector& xi) {
  if (G.dim() != sys.dim()) throw Error(ErrorKind::dimension, "packet and system sizes differ");
  const CVector xc = xi.cast<cplx>();
  const cplx value = packet_eval(G, xi);
  const CVector grad = value * (-2.0 * (G.M() * xc) + G.w());
  const cplx transport = ((sys.B().transpose() * xi).cast<cplx>().transpose() * grad)(0);
  const cplx symbol = 4.0 * pi * pi * I * xi.dot(sys.Q() * xi) + sys.trace_B();
  return -(transport + symbol * value);
}

}  // namespace hypoprop
