#include <gtest/gtest.h>

#include "hypoprop/error.hpp"
#include "hypoprop/packets.hpp"
#include "hypoprop/verify.hpp"
#include "oracles.hpp"

using namespace hypoprop;

namespace {

GaussianPacket packet_1d(cplx M, cplx w, cplx c) {
  CMatrix m(1, 1);
  m(0, 0) = M;
  CVector v(1);
  v(0) = w;
  return {m, v, c};
}

Vector vec(std::initializer_list<double> xs) {
  Vector v(xs.size());
  int k = 0;
  for (double x : xs) v(k++) = x;
  return v;
}

cplx direct_eval(const GaussianPacket& P, const Vector& x) {
  cplx q = 0.0, l = 0.0;
  for (int a = 0; a < P.dim(); ++a) {
    l += P.w()(a) * x(a);
    for (int b = 0; b < P.dim(); ++b) q += P.M()(a, b) * x(a) * x(b);
  }
  return P.c() * std::exp(-q + l);
}

TEST(GaussianPacket, Validation) {
  EXPECT_THROW(packet_1d(cplx(-1, 0), 0.0, 1.0), Error);
  CMatrix asym(2, 2);
  asym << 1.0, 0.5, 0.1, 1.0;
  EXPECT_THROW(GaussianPacket(asym, CVector::Zero(2), 1.0), Error);
  EXPECT_THROW(GaussianPacket(CMatrix::Identity(2, 2), CVector::Zero(3), 1.0), Error);
  try {
    packet_1d(cplx(0.0, 1.0), 0.0, 1.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::unsupported_limit);
  }
  EXPECT_THROW(GaussianPacket::isotropic(1, 0.0), Error);
}

TEST(GaussianPacket, EvalMatchesFormulaWithoutConjugation) {
  std::mt19937_64 rng(1);
  for (int k = 0; k < 20; ++k) {
    const GaussianPacket P = random_packet(rng, 3);
    const Vector x = oracle::random_matrix(rng, 3, 1, 2.0);
    EXPECT_LT(std::abs(packet_eval(P, x) - direct_eval(P, x)), 1e-13 * std::abs(direct_eval(P, x)) + 1e-300);
  }
}

TEST(GaussianPacket, ReflectedChirpedScaled) {
  std::mt19937_64 rng(2);
  const GaussianPacket P = random_packet(rng, 2);
  const Vector x = vec({0.3, -0.7});
  EXPECT_NEAR(std::abs(packet_eval(P.reflected(), x) - packet_eval(P, -x)), 0.0, 1e-14);
  Matrix S(2, 2);
  S << 0.5, 0.2, 0.2, -1.0;
  const cplx chirp = std::polar(1.0, x.dot(S * x));
  EXPECT_NEAR(std::abs(packet_eval(P.chirped(S), x) - chirp * packet_eval(P, x)), 0.0, 1e-14);
  EXPECT_NEAR(std::abs(packet_eval(P.scaled(cplx(0, 2)), x) - cplx(0, 2) * packet_eval(P, x)), 0.0, 1e-14);
}

TEST(SqrtDet, SquaresToDeterminantAndIsContinuousBranch) {
  std::mt19937_64 rng(3);
  for (int k = 0; k < 30; ++k) {
    const GaussianPacket P = random_packet(rng, 3);
    const BranchedDet d = sqrt_det_branched(P.M());
    EXPECT_LT(std::abs(d.value * d.value - P.M().determinant()), 1e-12 * std::abs(P.M().determinant()));
    // Product of principal roots of the eigenvalues, all in the right half-plane.
    Eigen::ComplexEigenSolver<CMatrix> eig(P.M());
    cplx prod = 1.0;
    for (int a = 0; a < 3; ++a) prod *= std::sqrt(eig.eigenvalues()(a));
    EXPECT_LT(std::abs(d.value - prod), 1e-12 * std::abs(prod));
  }
}

TEST(SqrtDet, DiagonalPurelyImaginaryLimit) {
  CMatrix A = CMatrix::Zero(2, 2);
  A(0, 0) = cplx(1e-3, 1.0);
  A(1, 1) = cplx(1e-3, -1.0);
  const BranchedDet d = sqrt_det_branched(A);
  EXPECT_LT(std::abs(d.value - std::sqrt(A(0, 0)) * std::sqrt(A(1, 1))), 1e-14);
}

TEST(PacketFourier, MatchesDirectQuadrature1d) {
  std::mt19937_64 rng(4);
  for (int k = 0; k < 8; ++k) {
    const GaussianPacket P = random_packet(rng, 1);
    const double L = 20.0;
    const int n = 2048;
    std::vector<cplx> samples(n);
    for (int j = 0; j < n; ++j) samples[j] = direct_eval(P, vec({-L + 2 * L * j / n}));
    const std::vector<cplx> F = oracle::dft_direct_1d(samples, L);
    const GaussianPacket H = packet_fourier(P);
    double worst = 0.0, scale = 0.0;
    for (int slot = n / 2 - 200; slot < n / 2 + 200; slot += 7) {
      const double xi = (slot - n / 2) / (2 * L);
      worst = std::max(worst, std::abs(F[slot] - packet_eval(H, vec({xi}))));
      scale = std::max(scale, std::abs(F[slot]));
    }
    EXPECT_LT(worst / scale, 1e-10);
  }
}

TEST(PacketFourier, MatchesTensorQuadrature2d) {
  std::mt19937_64 rng(5);
  const GaussianPacket P = random_packet(rng, 2);
  const GaussianPacket H = packet_fourier(P);
  const double L = 12.0;
  const int n = 200;
  const double h = 2 * L / n;
  for (int trial = 0; trial < 5; ++trial) {
    const Vector xi = oracle::random_matrix(rng, 2, 1, 0.5);
    cplx acc = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const Vector x = vec({-L + h * i, -L + h * j});
        acc += direct_eval(P, x) * std::polar(1.0, -2 * pi * x.dot(xi));
      }
    acc *= h * h;
    EXPECT_LT(std::abs(acc - packet_eval(H, xi)), 1e-10 * std::abs(P.c()));
  }
}

TEST(PacketFourier, InverseUndoesForward) {
  std::mt19937_64 rng(6);
  for (int k = 0; k < 20; ++k) {
    const GaussianPacket P = random_packet(rng, 3);
    const GaussianPacket back = packet_inverse_fourier(packet_fourier(P));
    EXPECT_LT((back.M() - P.M()).norm(), 1e-12);
    EXPECT_LT((back.w() - P.w()).norm(), 1e-12);
    EXPECT_LT(std::abs(back.c() - P.c()), 1e-12 * std::abs(P.c()));
  }
}

TEST(PacketPropagate, FreeOneDimensionalClosedForm) {
  const SystemPair sys = SystemPair::free(1);
  for (double a : {0.3, 1.0, 4.0})
    for (double t : {0.1, 1.0, 5.0}) {
      const GaussianPacket f = packet_propagate(GaussianPacket::isotropic(1, a), sys, t);
      for (double x : {-2.0, 0.0, 0.7, 3.0}) {
        const cplx expect = oracle::free_gaussian_1d(a, t, x);
        EXPECT_LT(std::abs(packet_eval(f, vec({x})) - expect), 1e-13) << a << " " << t;
      }
    }
}

TEST(PacketPropagate, ZeroTimeIsIdentity) {
  std::mt19937_64 rng(7);
  const GaussianPacket P = random_packet(rng, 2);
  const GaussianPacket f = packet_propagate(P, SystemPair::kramers(), 0.0);
  EXPECT_LT((f.M() - P.M()).norm(), 1e-13);
  EXPECT_LT(std::abs(f.c() - P.c()), 1e-13);
}

TEST(PacketPropagate, DomainAndDimensionErrors) {
  const GaussianPacket P = GaussianPacket::isotropic(2, 1.0);
  EXPECT_THROW(packet_propagate(P, SystemPair::free(2), -1.0), Error);
  EXPECT_THROW(packet_propagate(P, SystemPair::free(1), 1.0), Error);
}

// Finite-difference action of i tr(Q D^2) + <Bx, grad> on point evaluations.
cplx fd_generator(const std::function<cplx(const Vector&)>& f, const SystemPair& sys, const Vector& x) {
  const int m = sys.dim();
  const double h = 1e-4;
  cplx out = 0.0;
  const Vector Bx = sys.B() * x;
  for (int a = 0; a < m; ++a) {
    const Vector ea = Vector::Unit(m, a) * h;
    out += Bx(a) * (f(x + ea) - f(x - ea)) / (2 * h);
    for (int b = 0; b < m; ++b) {
      if (sys.Q()(a, b) == 0.0) continue;
      const Vector eb = Vector::Unit(m, b) * h;
      const cplx d2 = (f(x + ea + eb) - f(x + ea - eb) - f(x - ea + eb) + f(x - ea - eb)) / (4 * h * h);
      out += cplx(0, 1) * sys.Q()(a, b) * d2;
    }
  }
  return out;
}

TEST(PacketGenerator, MatchesFiniteDifferences) {
  std::mt19937_64 rng(8);
  for (const SystemPair& sys : {SystemPair::kramers(), SystemPair::kolmogorov(1), random_system(rng, 2)}) {
    const GaussianPacket P = random_packet(rng, 2);
    for (int k = 0; k < 5; ++k) {
      const Vector x = oracle::random_matrix(rng, 2, 1, 1.0);
      const cplx fd = fd_generator([&](const Vector& y) { return direct_eval(P, y); }, sys, x);
      EXPECT_LT(std::abs(packet_generator_eval(P, sys, x) - fd), 1e-6 * (1 + std::abs(fd)));
    }
  }
}

TEST(PacketGenerator, WorkedValues) {
  const GaussianPacket P = GaussianPacket::isotropic(2, 1.0);
  EXPECT_LT(std::abs(packet_generator_eval(P, SystemPair::free(2), vec({0, 0})) - cplx(0, -4)), 1e-14);
  // d^2/dx1^2 e^{-|x|^2} at (1, 0) is +2/e, and the drift (0, 1) is orthogonal to the gradient.
  EXPECT_LT(std::abs(packet_generator_eval(P, SystemPair::kolmogorov(1), vec({1, 0})) - cplx(0, 2 / std::exp(1.0))),
            1e-14);
}

TEST(PacketPropagate, SolvesTheEquationPointwise) {
  std::mt19937_64 rng(9);
  for (const SystemPair& sys : {SystemPair::kramers(), SystemPair::kolmogorov(1), random_system(rng, 2)}) {
    const GaussianPacket P = random_packet(rng, 2);
    const double t = 0.6, dt = 1e-5;
    const GaussianPacket f = packet_propagate(P, sys, t);
    const GaussianPacket fp = packet_propagate(P, sys, t + dt);
    const GaussianPacket fm = packet_propagate(P, sys, t - dt);
    for (int k = 0; k < 5; ++k) {
      const Vector x = oracle::random_matrix(rng, 2, 1, 1.0);
      const cplx dtf = (packet_eval(fp, x) - packet_eval(fm, x)) / (2 * dt);
      const cplx Lf = fd_generator([&](const Vector& y) { return direct_eval(f, y); }, sys, x);
      EXPECT_LT(std::abs(dtf - Lf), 1e-5 * (1 + std::abs(Lf)));
    }
  }
}

TEST(PacketPropagate, NonHypoellipticSystemsStillPropagate) {
  Matrix Q = Matrix::Zero(2, 2);
  Q(0, 0) = 1;
  const SystemPair sys(Q, Matrix::Zero(2, 2));
  const GaussianPacket P = GaussianPacket::isotropic(2, 1.0);
  const GaussianPacket f = packet_propagate(P, sys, 1.0);
  // Second coordinate is untouched: f(0, y) / f(0, 0) = exp(-y^2).
  EXPECT_NEAR(std::abs(packet_eval(f, vec({0, 0.8})) / packet_eval(f, vec({0, 0})) - std::exp(-0.64)), 0.0,
              1e-13);
}

TEST(PacketProperty, SemigroupPlancherelAndNorm) {
  std::mt19937_64 rng(10);
  for (int k = 0; k < 40; ++k) {
    const int m = 1 + k % 3;
    const SystemPair sys = random_system(rng, m);
    const GaussianPacket P = random_packet(rng, m);
    const double t = oracle::uniform(rng, 0.05, 2), s = oracle::uniform(rng, 0.05, 2);
    const GaussianPacket two = packet_propagate(packet_propagate(P, sys, t), sys, s);
    const GaussianPacket one = packet_propagate(P, sys, t + s);
    EXPECT_LT((two.M() - one.M()).norm() / one.M().norm(), 1e-10);
    EXPECT_LT(std::abs(two.c() / one.c() - 1.0), 1e-10);
    EXPECT_NEAR(packet_lp_norm(packet_fourier(P), 2) / packet_lp_norm(P, 2), 1.0, 1e-12);
    EXPECT_NEAR(packet_lp_norm(one, 2) / packet_lp_norm(P, 2), std::exp(-0.5 * (t + s) * sys.trace_B()), 1e-10);
    EXPECT_GT(real_part_lambda_min(one.M()), 0.0);
  }
}

TEST(PacketLpNorm, MatchesQuadrature1d) {
  std::mt19937_64 rng(11);
  const GaussianPacket P = random_packet(rng, 1);
  const double L = 25.0;
  const int n = 20000;
  const double h = 2 * L / n;
  for (double p : {1.0, 1.3, 2.0, 3.5}) {
    double acc = 0.0;
    for (int j = 0; j < n; ++j) acc += std::pow(std::abs(direct_eval(P, vec({-L + h * j}))), p);
    EXPECT_NEAR(packet_lp_norm(P, p) / std::pow(acc * h, 1 / p), 1.0, 1e-10) << p;
  }
  double peak = 0.0;
  for (int j = 0; j < n; ++j) peak = std::max(peak, std::abs(direct_eval(P, vec({-L + h * j}))));
  EXPECT_NEAR(packet_lp_norm(P, p_infinity) / peak, 1.0, 1e-6);
  EXPECT_NEAR(packet_log_lp_norm(P, 1.7), std::log(packet_lp_norm(P, 1.7)), 1e-13);
  EXPECT_THROW(packet_lp_norm(P, 0.5), Error);
}

TEST(PacketFourierGenerator, IsTransformOfGenerator) {
  // For P = e^{-|x|^2} in 1-D with B = b: (L P)^ compared with the symbol form.
  Matrix Q(1, 1), B(1, 1);
  Q << 0.7;
  B << -0.4;
  const SystemPair sys(Q, B);
  const GaussianPacket P = GaussianPacket::isotropic(1, 1.0);
  const GaussianPacket H = packet_fourier(P);
  const double L = 15.0;
  const int n = 1024;
  std::vector<cplx> LP(n);
  for (int j = 0; j < n; ++j) LP[j] = packet_generator_eval(P, sys, vec({-L + 2 * L * j / n}));
  const auto F = oracle::dft_direct_1d(LP, L);
  for (int slot = n / 2 - 40; slot <= n / 2 + 40; slot += 5) {
    const double xi = (slot - n / 2) / (2 * L);
    EXPECT_LT(std::abs(F[slot] - packet_fourier_generator_eval(H, sys, vec({xi}))), 1e-10);
  }
}

}  // namespace
