#include <cmath>

#include "hypoprop/error.hpp"
#include "hypoprop/gridprop.hpp"

namespace hypoprop {
namespace {

constexpr double kGuardMargin = 1.25;
constexpr std::size_t kPointBudget = std::size_t{1} << 24;

// Spectral support level for the chirp guard and spectral oversampling.
struct Sizing {
  double guard_tol;
  double oversample;
};
// Plans over the point budget fall back to the looser sizing: the guard level
// then matches the runtime check and the zero-padded interpolation does the
// refinement, at the cost of headroom in generator residuals.
constexpr Sizing kStrict{1e-9, 2.0};
constexpr Sizing kLean{1e-7, 1.0};
// Lets the same plan serve nearby times (time differences, semigroup splits).
constexpr double kCoverMargin = 1.05;

// {z : |P(z)| >= tol max|P|} is the ellipsoid (z - c)^T R (z - c) <= log(1/tol)
// with R = Re M and c = R^{-1} Re w / 2.
struct Ellipsoid {
  Vector center;
  Matrix shape_inv;  // R^{-1}
  double level;      // log(1/tol)

  /// max over the ellipsoid of |<row, z>|.
  double reach(const Vector& row) const {
    return std::abs(row.dot(center)) + std::sqrt(level * row.dot(shape_inv * row));
  }
  double axis_reach(int a) const {
    return std::abs(center(a)) + std::sqrt(level * shape_inv(a, a));
  }
};

Ellipsoid support_of(const GaussianPacket& P, double tol) {
  const Matrix R = 0.5 * (P.M().real() + P.M().real().transpose());
  const Matrix Rinv = R.inverse();
  return {0.5 * Rinv * P.w().real(), Rinv, std::log(1.0 / tol)};
}

// v(z) = f(e^{-tB} z) for the propagated packet f.
GaussianPacket drift_removed(const GaussianPacket& f, const Matrix& flow) {
  const CMatrix Einv = flow.inverse().cast<cplx>();
  const CMatrix M = Einv.transpose() * f.M() * Einv;
  return {0.5 * (M + M.transpose()), Einv.transpose() * f.w(), f.c()};
}

// Box needed on the input side of one step of length `step` applied to the
// packet `from`, landing in the box `to_L`.
std::vector<double> input_box(const GaussianPacket& from, const GaussianPacket& to,
                              const SystemPair& sys, double step,
                              const std::vector<double>& to_L, double amp_tol,
                              const Sizing& sizing) {
  const int m = sys.dim();
  const Matrix flow = mat_exp(sys.B(), step);
  const Ellipsoid from_x = support_of(from, amp_tol);
  const Ellipsoid v_x = support_of(step > 0.0 ? drift_removed(to, flow) : to, amp_tol);
  const Ellipsoid guard_xi = support_of(packet_fourier(from), sizing.guard_tol);
  const Matrix Qt = step > 0.0 ? covariance(sys, step).value() : Matrix::Zero(m, m);
  std::vector<double> L(m);
  for (int a = 0; a < m; ++a) {
    double cover = 0.0;
    for (int b = 0; b < m; ++b) cover += std::abs(flow(a, b)) * to_L[b];
    const double guard = kGuardMargin * 4.0 * pi * guard_xi.reach(Qt.row(a).transpose());
    L[a] = std::max({from_x.axis_reach(a), v_x.axis_reach(a), kCoverMargin * cover, guard});
  }
  return L;
}

std::vector<int> samples_for(const GaussianPacket& P, const std::vector<double>& L,
                             double amp_tol, double oversample) {
  const Ellipsoid xi = support_of(packet_fourier(P), amp_tol);
  std::vector<int> n(L.size());
  for (std::size_t a = 0; a < L.size(); ++a)
    n[a] = std::max(16, next_pow2(4.0 * oversample * L[a] * xi.axis_reach(static_cast<int>(a))));
  return n;
}

std::vector<GridGeometry> plan_chain(const std::vector<GaussianPacket>& states, const SystemPair& sys,
                                     const std::vector<double>& steps, double amp_tol,
                                     const Sizing& sizing) {
  const int m = sys.dim();
  const std::size_t k = steps.size();
  std::vector<std::vector<double>> L(k + 1);
  const Ellipsoid last = support_of(states[k], amp_tol);
  L[k].resize(m);
  for (int a = 0; a < m; ++a) L[k][a] = last.axis_reach(a);
  for (std::size_t j = k; j-- > 0;)
    L[j] = input_box(states[j], states[j + 1], sys, steps[j], L[j + 1], amp_tol, sizing);
  if (k > 1) {
    // The first box also serves a single direct step over the whole span.
    double span = 0.0;
    for (double s : steps) span += s;
    const auto direct = input_box(states[0], states[k], sys, span, L[k], amp_tol, sizing);
    for (int a = 0; a < m; ++a) L[0][a] = std::max(L[0][a], direct[a]);
  }
  std::vector<GridGeometry> out;
  out.reserve(k + 1);
  for (std::size_t j = 0; j <= k; ++j)
    out.emplace_back(L[j], samples_for(states[j], L[j], amp_tol, sizing.oversample));
  return out;
}

}  // namespace

std::vector<GridGeometry> suggest_chain(const GaussianPacket& P, const SystemPair& sys,
                                        const std::vector<double>& steps, double amp_tol) {
  const int m = sys.dim();
  if (m > 2) throw Error(ErrorKind::dimension, "grids support m <= 2");
  if (P.dim() != m) throw Error(ErrorKind::dimension, "packet and system sizes differ");
  if (!(amp_tol > 0.0 && amp_tol < 1.0))
    throw Error(ErrorKind::invalid_input, "amp_tol must lie in (0, 1)");
  if (steps.empty()) throw Error(ErrorKind::invalid_input, "chain needs at least one step");

  std::vector<GaussianPacket> states{P};
  states.reserve(steps.size() + 1);
  double time = 0.0;
  for (double step : steps) {
    if (!(step >= 0.0)) throw Error(ErrorKind::domain, "chain steps must be >= 0");
    time += step;
    states.push_back(packet_propagate(P, sys, time));
  }
  auto plan = plan_chain(states, sys, steps, amp_tol, kStrict);
  for (const GridGeometry& g : plan)
    if (g.size() > kPointBudget) return plan_chain(states, sys, steps, amp_tol, kLean);
  return plan;
}

GeometryPlan suggest_geometry(const GaussianPacket& P, const SystemPair& sys, double t,
                              double amp_tol) {
  const auto chain = suggest_chain(P, sys, {t}, amp_tol);
  return {chain[0], chain[1]};
}

}  // namespace hypoprop
