#include <array>
#include <atomic>
#include <cmath>
#include <sstream>

#include "hypoprop/error.hpp"
#include "hypoprop/gridprop.hpp"
#include "parallel.hpp"

namespace hypoprop {
namespace {

constexpr double kSupportTol = 1e-9;

cplx kernel_prefactor(int m, double det_Qt) {
  return std::pow(4.0 * pi, -0.5 * m) * std::polar(1.0, -pi * m / 4.0) / std::sqrt(det_Qt);
}

// Largest per-cell change of the phase <G(z - z0), z - z0>/4 over the box
// [lo, hi] (a linear gradient peaks at a corner).
double max_cell_phase(const Matrix& G, const Vector& z0, const std::vector<double>& lo,
                      const std::vector<double>& hi, const GridGeometry& g) {
  const int m = g.dim();
  double worst = 0.0;
  for (int corner = 0; corner < (1 << m); ++corner) {
    Vector z(m);
    for (int a = 0; a < m; ++a) z(a) = (corner >> a) & 1 ? hi[a] : lo[a];
    const Vector grad = 0.5 * G * (z - z0);
    for (int a = 0; a < m; ++a) worst = std::max(worst, std::abs(grad(a)) * g.spacing(a));
  }
  return worst;
}

std::string phase_message(double phase) {
  std::ostringstream os;
  os << "kernel phase changes by " << phase / pi
     << " pi per cell across the source support; refine the quadrature grid";
  return os.str();
}

}  // namespace

KernelQuadrature::KernelQuadrature(const SourceFn& source, const SystemPair& sys, double t,
                                   const GridGeometry& quad_grid, bool guard)
    : grid_(quad_grid), guard_(guard) {
  const int m = sys.dim();
  if (m != grid_.dim()) throw Error(ErrorKind::dimension, "grid and system sizes differ");
  if (!(t > 0.0)) throw Error(ErrorKind::domain, "kernel propagation needs t > 0");
  const CovarianceMatrix cov = covariance(sys, t);
  Ainv_ = cov.inverse();
  prefactor_ = kernel_prefactor(m, cov.det());
  flow_ = mat_exp(sys.B(), t);

  const GridField phi = grid_sample(source, grid_);
  double peak = 0.0;
  for (const cplx& v : phi.values()) peak = std::max(peak, std::abs(v));
  support_lo_.assign(m, 0.0);
  support_hi_.assign(m, 0.0);
  bool any = false;
  weighted_.resize(phi.size());
  const double cell = grid_.cell_volume();
  for (std::size_t k = 0; k < phi.size(); ++k) {
    const Vector y = grid_.position(k);
    weighted_[k] = phi.values()[k] * std::polar(cell, 0.25 * y.dot(Ainv_ * y));
    if (peak > 0.0 && std::abs(phi.values()[k]) >= kSupportTol * peak) {
      for (int a = 0; a < m; ++a) {
        support_lo_[a] = any ? std::min(support_lo_[a], y(a)) : y(a);
        support_hi_[a] = any ? std::max(support_hi_[a], y(a)) : y(a);
      }
      any = true;
    }
  }
}

double KernelQuadrature::cell_phase(const Vector& x) const {
  return max_cell_phase(Ainv_, flow_ * x, support_lo_, support_hi_, grid_);
}

cplx KernelQuadrature::operator()(const Vector& x) const {
  if (x.size() != grid_.dim()) throw Error(ErrorKind::dimension, "point has the wrong size");
  if (guard_) {
    const double phase = cell_phase(x);
    if (phase > pi) throw Error(ErrorKind::resolution, phase_message(phase));
  }
  const Vector xt = flow_ * x;
  const Vector a = Ainv_ * xt;
  const int m = grid_.dim();
  std::array<std::vector<cplx>, 2> wave;
  for (int ax = 0; ax < m; ++ax) {
    wave[ax].resize(grid_.n[ax]);
    for (int j = 0; j < grid_.n[ax]; ++j)
      wave[ax][j] = std::polar(1.0, -0.5 * a(ax) * grid_.node(ax, j));
  }
  cplx sum = 0.0;
  if (m == 1) {
    for (int j = 0; j < grid_.n[0]; ++j) sum += weighted_[j] * wave[0][j];
  } else {
    const std::size_t n1 = grid_.n[1];
    const cplx* w1 = wave[1].data();
    for (int j0 = 0; j0 < grid_.n[0]; ++j0) {
      const cplx* row = weighted_.data() + j0 * n1;
      // Spelled out in real arithmetic: std::complex products carry NaN
      // recovery branches that block vectorization of this hot loop.
      double re = 0.0, im = 0.0;
      for (std::size_t j1 = 0; j1 < n1; ++j1) {
        re += row[j1].real() * w1[j1].real() - row[j1].imag() * w1[j1].imag();
        im += row[j1].real() * w1[j1].imag() + row[j1].imag() * w1[j1].real();
      }
      sum += wave[0][j0] * cplx(re, im);
    }
  }
  return prefactor_ * std::polar(1.0, 0.25 * xt.dot(a)) * sum;
}

GridField KernelQuadrature::evaluate_on(const GridGeometry& out) const {
  if (out.dim() != grid_.dim()) throw Error(ErrorKind::dimension, "output grid has wrong size");
  if (guard_) {
    for (std::size_t k = 0; k < out.size(); ++k) {
      const double phase = cell_phase(out.position(k));
      if (phase > pi) throw Error(ErrorKind::resolution, phase_message(phase));
    }
  }
  KernelQuadrature unguarded = *this;
  unguarded.guard_ = false;
  std::vector<cplx> values(out.size());
  detail::parallel_for(
      out.size(),
      [&](std::size_t begin, std::size_t end) {
        for (std::size_t k = begin; k < end; ++k) values[k] = unguarded(out.position(k));
      },
      16);
  return {out, Space::position, std::move(values)};
}

cplx kernel_propagate(const SourceFn& source, const SystemPair& sys, double t, const Vector& x,
                      double L, int n) {
  const KernelQuadrature quad(source, sys, t, GridGeometry::uniform(sys.dim(), L, n));
  return quad(x);
}

cplx fresnel_mass(const SystemPair& sys, double t, const Vector& point, double eps, double L,
                  int n, FresnelMode mode, bool guard) {
  if (!(eps > 0.0)) throw Error(ErrorKind::domain, "damping eps must be positive");
  const int m = sys.dim();
  if (point.size() != m) throw Error(ErrorKind::dimension, "point has the wrong size");
  const GridGeometry g = GridGeometry::uniform(m, L, n);
  auto damping = [eps](const Vector& z) { return cplx(std::exp(-eps * z.squaredNorm())); };

  if (mode == FresnelMode::y_integral) {
    const KernelQuadrature quad(damping, sys, t, g, guard);
    return quad(point);
  }

  const CovarianceMatrix cov = covariance(sys, t);
  const Matrix& A = cov.inverse();
  const Matrix E = mat_exp(sys.B(), t);
  const Matrix G = E.transpose() * A * E;
  const Vector center = E.partialPivLu().solve(point);
  if (guard) {
    const double r = std::min(L, std::sqrt(std::log(1.0 / kSupportTol) / eps));
    const double phase = max_cell_phase(G, center, std::vector<double>(m, -r),
                                        std::vector<double>(m, r), g);
    if (phase > pi) throw Error(ErrorKind::resolution, phase_message(phase));
  }
  std::vector<cplx> partial(g.size());
  detail::parallel_for(g.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t k = begin; k < end; ++k) {
      const Vector d = g.position(k) - center;
      partial[k] = damping(g.position(k)) * std::polar(1.0, 0.25 * d.dot(G * d));
    }
  });
  cplx sum = 0.0;
  for (const cplx& v : partial) sum += v;
  return kernel_prefactor(m, cov.det()) * g.cell_volume() * sum;
}

FresnelGeometry fresnel_geometry(const SystemPair& sys, double t, const Vector& point, double eps,
                                 FresnelMode mode, double tol) {
  if (!(eps > 0.0) || !(tol > 0.0 && tol < 1.0))
    throw Error(ErrorKind::domain, "fresnel_geometry needs eps > 0 and tol in (0, 1)");
  const int m = sys.dim();
  if (m > 2) throw Error(ErrorKind::dimension, "Fresnel quadrature supports m <= 2");
  const CovarianceMatrix cov = covariance(sys, t);
  const Matrix& A = cov.inverse();
  const Matrix E = mat_exp(sys.B(), t);
  Matrix G;
  Vector center;
  if (mode == FresnelMode::y_integral) {
    G = A;
    center = E * point;
  } else {
    G = E.transpose() * A * E;
    center = E.partialPivLu().solve(point);
  }
  const double L = std::sqrt(std::log(1.0 / tol) / eps);
  // Unit spacing turns the cell phase into the raw gradient bound.
  const GridGeometry unit(std::vector<double>(m, 8.0), std::vector<int>(m, 16));
  const double gradient =
      max_cell_phase(G, center, std::vector<double>(m, -L), std::vector<double>(m, L), unit);
  const double h = pi / (1.5 * std::max(gradient, 1e-300));
  return {L, std::max(16, next_pow2(2.0 * L / h))};
}

}  // namespace hypoprop
