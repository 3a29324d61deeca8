#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <iostream>
#include <limits>
#include <sstream>

#include "fft.hpp"
#include "hypoprop/error.hpp"
#include "hypoprop/gridprop.hpp"
#include "parallel.hpp"

namespace hypoprop {
namespace {

// The chirp guard ignores the weakest samples whose combined energy is at
// most this fraction of the total (amplitude 1e-6 of the norm).
constexpr double kSupportEnergyTol = 1e-12;
constexpr double kCoverageSlack = 1e-12;

bool is_pow2(int n) { return n > 0 && (n & (n - 1)) == 0; }

// (-1)^k for the signed frequency index held in slot `slot`.
double parity(int slot, int n) { return ((slot - n / 2) & 1) ? -1.0 : 1.0; }

// Slot of the unshifted FFT bin that feeds centered slot `slot`.
int fft_bin(int slot, int n) { return (slot + n / 2) % n; }

void require_space(const GridField& F, Space s, const char* what) {
  if (F.space() != s) {
    std::ostringstream os;
    os << what << " expects a " << to_string(s) << "-space field";
    throw Error(ErrorKind::state, os.str());
  }
}

void require_dim(const GridField& F, const SystemPair& sys) {
  if (F.dim() != sys.dim()) throw Error(ErrorKind::dimension, "field and system sizes differ");
}

// Row-major loop over one or two axes; fn(flat, i0, i1) with i1 = 0 in 1-D.
template <class Fn>
void for_each_node(const GridGeometry& g, Fn&& fn) {
  if (g.dim() == 1) {
    for (int i = 0; i < g.n[0]; ++i) fn(static_cast<std::size_t>(i), i, 0);
    return;
  }
  std::size_t flat = 0;
  for (int i0 = 0; i0 < g.n[0]; ++i0)
    for (int i1 = 0; i1 < g.n[1]; ++i1) fn(flat++, i0, i1);
}

// Frequency coordinates of a centered slot, without allocating.
std::array<double, 2> freq_at(const GridGeometry& g, int i0, int i1) {
  return {g.freq(0, i0), g.dim() == 2 ? g.freq(1, i1) : 0.0};
}

// 4-point Lagrange weights for fractional offset s in [0, 1) from node 0.
std::array<double, 4> lagrange4(double s) {
  return {-s * (s - 1.0) * (s - 2.0) / 6.0, (s + 1.0) * (s - 1.0) * (s - 2.0) / 2.0,
          -(s + 1.0) * s * (s - 2.0) / 2.0, (s + 1.0) * s * (s - 1.0) / 6.0};
}

// Periodic cubic interpolation of position-space samples.
class Interpolator {
 public:
  explicit Interpolator(const GridField& F) : F_(F), g_(F.geometry()) {}

  cplx at(const double* y) const {
    std::array<std::array<int, 4>, 2> idx{};
    std::array<std::array<double, 4>, 2> wt{};
    for (int a = 0; a < g_.dim(); ++a) {
      const double u = (y[a] + g_.L[a]) / g_.spacing(a);
      const double base = std::floor(u);
      wt[a] = lagrange4(u - base);
      const int n = g_.n[a];
      int i = static_cast<int>(base) - 1;
      i %= n;
      if (i < 0) i += n;
      for (int k = 0; k < 4; ++k) idx[a][k] = (i + k) % n;
    }
    const auto& v = F_.values();
    if (g_.dim() == 1) {
      cplx acc = 0.0;
      for (int k = 0; k < 4; ++k) acc += wt[0][k] * v[idx[0][k]];
      return acc;
    }
    const std::size_t n1 = static_cast<std::size_t>(g_.n[1]);
    cplx acc = 0.0;
    for (int k0 = 0; k0 < 4; ++k0) {
      cplx row = 0.0;
      const std::size_t off = idx[0][k0] * n1;
      for (int k1 = 0; k1 < 4; ++k1) row += wt[1][k1] * v[off + idx[1][k1]];
      acc += wt[0][k0] * row;
    }
    return acc;
  }

 private:
  const GridField& F_;
  const GridGeometry& g_;
};

// Trigonometric refinement of a frequency-space field onto a grid with
// `factor` times as many nodes per axis. The Nyquist bin is split evenly
// between the two ends so the refined field stays real for real input.
GridField zero_pad(const GridField& F_hat, int factor) {
  const GridGeometry& g = F_hat.geometry();
  std::vector<int> fine_n(g.n);
  for (int& n : fine_n) n *= factor;
  GridGeometry fine(g.L, fine_n);
  std::vector<cplx> out(fine.size(), cplx(0.0));

  auto targets = [&](int axis, int slot) {
    const int n = g.n[axis];
    const int shift = fine.n[axis] / 2 - n / 2;
    std::vector<std::pair<int, double>> t;
    if (slot == 0) {
      t.emplace_back(shift, 0.5);
      t.emplace_back(shift + n, 0.5);
    } else {
      t.emplace_back(shift + slot, 1.0);
    }
    return t;
  };

  const auto& in = F_hat.values();
  if (g.dim() == 1) {
    for (int i = 0; i < g.n[0]; ++i)
      for (auto [j, w] : targets(0, i)) out[j] += w * in[i];
  } else {
    const std::size_t n1 = g.n[1];
    const std::size_t fn1 = fine.n[1];
    for (int i0 = 0; i0 < g.n[0]; ++i0) {
      const auto t0 = targets(0, i0);
      for (int i1 = 0; i1 < g.n[1]; ++i1) {
        const cplx value = in[i0 * n1 + i1];
        if (value == cplx(0.0)) continue;
        for (auto [j0, w0] : t0)
          for (auto [j1, w1] : targets(1, i1)) out[j0 * fn1 + j1] += w0 * w1 * value;
      }
    }
  }
  return {fine, Space::frequency, std::move(out)};
}

void warn(const PropagationSettings& settings, const std::string& msg) {
  if (settings.on_warning)
    settings.on_warning(msg);
  else
    std::cerr << "warning: " << msg << "\n";
}

// Multiplier stage on the Fourier side; returns the transform of v(., t).
GridField evolve_hat(const GridField& F, const SystemPair& sys, double t,
                     const PropagationSettings& settings) {
  require_space(F, Space::position, "grid propagation");
  require_dim(F, sys);
  GridField hat = grid_dft(F);
  if (t == 0.0) return hat;
  const Matrix Qt = covariance(sys, t).value();

  const ChirpCheck check = chirp_check(hat, Qt);
  if (!check.resolved) {
    std::ostringstream os;
    os << "chirp under-resolved: per-cell phase reaches " << check.worst_ratio
       << " pi at the spectral support; enlarge the box";
    if (settings.chirp_resolution_guard) throw Error(ErrorKind::resolution, os.str());
    warn(settings, os.str());
  }

  const GridGeometry& g = hat.geometry();
  auto& values = hat.values();
  const int m = g.dim();
  for_each_node(g, [&](std::size_t flat, int i0, int i1) {
    const auto xi = freq_at(g, i0, i1);
    double q = 0.0;
    for (int a = 0; a < m; ++a)
      for (int b = 0; b < m; ++b) q += Qt(a, b) * xi[a] * xi[b];
    values[flat] *= std::polar(1.0, -4.0 * pi * pi * q);
  });
  return hat;
}

GridField resample(const GridField& v_hat, const GridGeometry& out, const Matrix& flow,
                   const PropagationSettings& settings) {
  GridField v = settings.interpolation == Interpolation::fourier_zeropad
                    ? grid_idft(zero_pad(v_hat, settings.zeropad_factor))
                    : grid_idft(v_hat);
  const GridGeometry& gin = v.geometry();
  const int m = gin.dim();
  std::vector<cplx> values(out.size());
  const Interpolator interp(v);
  std::atomic<bool> escaped{false};

  detail::parallel_for(out.size(), [&](std::size_t begin, std::size_t end) {
    const int n1 = m == 2 ? out.n[1] : 1;
    for (std::size_t flat = begin; flat < end; ++flat) {
      const int i0 = m == 2 ? static_cast<int>(flat / n1) : static_cast<int>(flat);
      const int i1 = m == 2 ? static_cast<int>(flat % n1) : 0;
      const std::array<double, 2> x = {out.node(0, i0), m == 2 ? out.node(1, i1) : 0.0};
      std::array<double, 2> y{};
      for (int a = 0; a < m; ++a) {
        for (int b = 0; b < m; ++b) y[a] += flow(a, b) * x[b];
        if (std::abs(y[a]) > gin.L[a] * (1.0 + kCoverageSlack)) escaped = true;
      }
      values[flat] = interp.at(y.data());
    }
  });
  if (escaped)
    throw Error(ErrorKind::coverage, "e^{tB} maps output nodes outside the sample box");
  return {out, Space::position, std::move(values)};
}

}  // namespace

const char* to_string(Space s) { return s == Space::position ? "position" : "frequency"; }

int next_pow2(double x) {
  int n = 1;
  while (n < x) {
    if (n > (1 << 29)) throw Error(ErrorKind::resolution, "grid size overflow");
    n <<= 1;
  }
  return n;
}

GridGeometry::GridGeometry(std::vector<double> half_widths, std::vector<int> samples)
    : L(std::move(half_widths)), n(std::move(samples)) {
  if (L.size() != n.size()) throw Error(ErrorKind::invalid_input, "L and n differ in length");
  if (L.empty() || L.size() > 2)
    throw Error(ErrorKind::dimension, "grids support m = 1 or m = 2 only");
  for (std::size_t a = 0; a < L.size(); ++a) {
    if (!(L[a] > 0.0) || !std::isfinite(L[a]))
      throw Error(ErrorKind::invalid_input, "box half-width must be positive");
    if (!is_pow2(n[a]) || n[a] < 16)
      throw Error(ErrorKind::invalid_input, "samples per axis must be a power of two >= 16");
  }
}

GridGeometry GridGeometry::uniform(int m, double L, int n) {
  if (m < 1 || m > 2) throw Error(ErrorKind::dimension, "grids support m = 1 or m = 2 only");
  return {std::vector<double>(m, L), std::vector<int>(m, n)};
}

std::size_t GridGeometry::size() const noexcept {
  std::size_t s = 1;
  for (int k : n) s *= static_cast<std::size_t>(k);
  return s;
}

double GridGeometry::cell_volume() const {
  double v = 1.0;
  for (int a = 0; a < dim(); ++a) v *= spacing(a);
  return v;
}

double GridGeometry::freq_cell_volume() const {
  double v = 1.0;
  for (int a = 0; a < dim(); ++a) v *= freq_spacing(a);
  return v;
}

std::vector<int> GridGeometry::unflatten(std::size_t flat) const {
  std::vector<int> idx(dim());
  for (int a = dim() - 1; a >= 0; --a) {
    idx[a] = static_cast<int>(flat % n[a]);
    flat /= n[a];
  }
  return idx;
}

Vector GridGeometry::position(std::size_t flat) const {
  const auto idx = unflatten(flat);
  Vector x(dim());
  for (int a = 0; a < dim(); ++a) x(a) = node(a, idx[a]);
  return x;
}

Vector GridGeometry::frequency(std::size_t flat) const {
  const auto idx = unflatten(flat);
  Vector xi(dim());
  for (int a = 0; a < dim(); ++a) xi(a) = freq(a, idx[a]);
  return xi;
}

GridField::GridField(GridGeometry geometry, Space space, std::vector<cplx> values)
    : geometry_(std::move(geometry)), space_(space), values_(std::move(values)) {
  if (geometry_.dim() < 1) throw Error(ErrorKind::invalid_input, "field needs a geometry");
  if (values_.size() != geometry_.size())
    throw Error(ErrorKind::invalid_input, "value count does not match the geometry");
}

Vector GridField::coords(std::size_t flat) const {
  return space_ == Space::position ? geometry_.position(flat) : geometry_.frequency(flat);
}

double GridField::l2_norm() const {
  double acc = 0.0;
  for (const cplx& v : values_) acc += std::norm(v);
  const double cell =
      space_ == Space::position ? geometry_.cell_volume() : geometry_.freq_cell_volume();
  return std::sqrt(acc * cell);
}

double relative_l2(const GridField& a, const GridField& b) {
  if (!(a.geometry() == b.geometry()) || a.space() != b.space())
    throw Error(ErrorKind::dimension, "relative_l2 needs fields on the same grid");
  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    num += std::norm(a.values()[k] - b.values()[k]);
    den += std::norm(b.values()[k]);
  }
  if (den == 0.0) return std::sqrt(num) == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return std::sqrt(num / den);
}

GridField grid_sample(const GaussianPacket& P, const GridGeometry& g) {
  if (P.dim() != g.dim()) throw Error(ErrorKind::dimension, "packet and grid sizes differ");
  return grid_sample([&P](const Vector& x) { return packet_eval(P, x); }, g);
}

GridField grid_sample(const SourceFn& source, const GridGeometry& g) {
  if (g.dim() < 1 || g.dim() > 2) throw Error(ErrorKind::dimension, "grids support m <= 2");
  std::vector<cplx> values(g.size());
  for (std::size_t k = 0; k < values.size(); ++k) values[k] = source(g.position(k));
  return {g, Space::position, std::move(values)};
}

GridField grid_dft(const GridField& F) {
  require_space(F, Space::position, "grid_dft");
  const GridGeometry& g = F.geometry();
  std::vector<cplx> buf = F.values();
  detail::fft_inplace(buf, g.n, -1);
  std::vector<cplx> out(buf.size());
  const double cell = g.cell_volume();
  for_each_node(g, [&](std::size_t flat, int i0, int i1) {
    double sign = parity(i0, g.n[0]);
    std::size_t src = fft_bin(i0, g.n[0]);
    if (g.dim() == 2) {
      sign *= parity(i1, g.n[1]);
      src = src * g.n[1] + fft_bin(i1, g.n[1]);
    }
    out[flat] = (cell * sign) * buf[src];
  });
  return {g, Space::frequency, std::move(out)};
}

GridField grid_idft(const GridField& F) {
  require_space(F, Space::frequency, "grid_idft");
  const GridGeometry& g = F.geometry();
  std::vector<cplx> buf(F.size());
  const auto& in = F.values();
  for_each_node(g, [&](std::size_t flat, int i0, int i1) {
    double sign = parity(i0, g.n[0]);
    std::size_t dst = fft_bin(i0, g.n[0]);
    if (g.dim() == 2) {
      sign *= parity(i1, g.n[1]);
      dst = dst * g.n[1] + fft_bin(i1, g.n[1]);
    }
    buf[dst] = sign * in[flat];
  });
  detail::fft_inplace(buf, g.n, +1);
  const double cell = g.freq_cell_volume();
  for (cplx& v : buf) v *= cell;
  return {g, Space::position, std::move(buf)};
}

ChirpCheck chirp_check(const GridField& F_hat, const Matrix& Qt) {
  require_space(F_hat, Space::frequency, "chirp_check");
  const GridGeometry& g = F_hat.geometry();
  const int m = g.dim();
  std::vector<double> energy(F_hat.size());
  double total = 0.0;
  for (std::size_t k = 0; k < energy.size(); ++k) total += energy[k] = std::norm(F_hat.values()[k]);
  ChirpCheck out;
  if (total == 0.0) return out;
  std::vector<double> sorted = energy;
  std::sort(sorted.begin(), sorted.end());
  double floor = sorted.back(), tail = 0.0;
  for (double e : sorted) {
    tail += e;
    if (tail > kSupportEnergyTol * total) {
      floor = e;
      break;
    }
  }
  for_each_node(g, [&](std::size_t flat, int i0, int i1) {
    if (energy[flat] < floor) return;
    const auto xi = freq_at(g, i0, i1);
    for (int a = 0; a < m; ++a) {
      double qx = 0.0;
      for (int b = 0; b < m; ++b) qx += Qt(a, b) * xi[b];
      out.worst_ratio = std::max(out.worst_ratio, 4.0 * pi * std::abs(qx) / g.L[a]);
    }
  });
  out.resolved = out.worst_ratio <= 1.0;
  return out;
}

GridGeometry default_output_geometry(const GridGeometry& in, const Matrix& flow,
                                     const PropagationSettings& settings) {
  if (settings.output) {
    if (settings.output->dim() != in.dim())
      throw Error(ErrorKind::dimension, "output geometry has the wrong dimension");
    return *settings.output;
  }
  double s = 0.0;
  if (settings.margin_factor) {
    s = *settings.margin_factor;
    if (!(s > 0.0)) throw Error(ErrorKind::invalid_input, "margin_factor must be positive");
  } else {
    for (int i = 0; i < in.dim(); ++i) {
      double reach = 0.0;
      for (int j = 0; j < in.dim(); ++j) reach += std::abs(flow(i, j)) * in.L[j];
      s = std::max(s, reach / in.L[i]);
    }
  }
  std::vector<double> Lout(in.L);
  for (double& L : Lout) L /= s;
  return {Lout, in.n};
}

GridField grid_evolve_v(const GridField& F, const SystemPair& sys, double t,
                        const PropagationSettings& settings) {
  if (!(t >= 0.0) || !std::isfinite(t)) throw Error(ErrorKind::domain, "propagation needs t >= 0");
  return grid_idft(evolve_hat(F, sys, t, settings));
}

GridField grid_propagate(const GridField& F, const SystemPair& sys, double t,
                         const PropagationSettings& settings) {
  if (!(t >= 0.0) || !std::isfinite(t)) throw Error(ErrorKind::domain, "propagation needs t >= 0");
  if (settings.zeropad_factor < 1 || !is_pow2(settings.zeropad_factor))
    throw Error(ErrorKind::invalid_input, "zeropad_factor must be a power of two");
  require_dim(F, sys);
  const Matrix flow = mat_exp(sys.B(), t);
  const GridGeometry out = default_output_geometry(F.geometry(), flow, settings);
  if (t == 0.0 && out == F.geometry()) {
    require_space(F, Space::position, "grid propagation");
    return F;
  }
  return resample(evolve_hat(F, sys, t, settings), out, flow, settings);
}

GridField grid_generator(const GridField& F, const SystemPair& sys) {
  require_space(F, Space::position, "grid_generator");
  require_dim(F, sys);
  const GridGeometry& g = F.geometry();
  const int m = g.dim();
  const GridField hat = grid_dft(F);

  // Derivative spectra drop the Nyquist slot (slot 0), whose sign is ambiguous.
  auto derivative = [&](int a, int b) {
    std::vector<cplx> spec(hat.size());
    for_each_node(g, [&](std::size_t flat, int i0, int i1) {
      const std::array<int, 2> slot = {i0, i1};
      const auto xi = freq_at(g, i0, i1);
      cplx factor = 2.0 * pi * I * xi[a];
      if (slot[a] == 0) factor = 0.0;
      if (b >= 0) {
        factor *= 2.0 * pi * I * xi[b];
        if (slot[b] == 0) factor = 0.0;
      }
      spec[flat] = factor * hat.values()[flat];
    });
    return grid_idft(GridField(g, Space::frequency, std::move(spec)));
  };

  std::vector<cplx> out(F.size(), cplx(0.0));
  for (int a = 0; a < m; ++a) {
    for (int b = a; b < m; ++b) {
      const double q = sys.Q()(a, b) * (a == b ? 1.0 : 2.0);
      if (q == 0.0) continue;
      const GridField d2 = derivative(a, b);
      for (std::size_t k = 0; k < out.size(); ++k) out[k] += I * q * d2.values()[k];
    }
  }
  for (int a = 0; a < m; ++a) {
    if (sys.B().row(a).isZero(0.0)) continue;
    const GridField d1 = derivative(a, -1);
    for_each_node(g, [&](std::size_t flat, int i0, int i1) {
      const std::array<double, 2> x = {g.node(0, i0), m == 2 ? g.node(1, i1) : 0.0};
      double bx = 0.0;
      for (int b = 0; b < m; ++b) bx += sys.B()(a, b) * x[b];
      out[flat] += bx * d1.values()[flat];
    });
  }
  return {g, Space::position, std::move(out)};
}

double pde_residual(const GridField& F0, const SystemPair& sys, double t, double dt,
                    const PropagationSettings& settings) {
  if (!(dt > 0.0) || !(t - dt > 0.0))
    throw Error(ErrorKind::domain, "pde_residual needs 0 < dt < t");
  PropagationSettings common = settings;
  if (!common.output) {
    GridGeometry box;
    for (const double s : {t - dt, t, t + dt}) {
      const GridGeometry g = default_output_geometry(F0.geometry(), mat_exp(sys.B(), s), settings);
      if (box.dim() == 0) {
        box = g;
      } else {
        for (int a = 0; a < g.dim(); ++a) box.L[a] = std::min(box.L[a], g.L[a]);
      }
    }
    common.output = box;
  }
  const GridField minus = grid_propagate(F0, sys, t - dt, common);
  const GridField mid = grid_propagate(F0, sys, t, common);
  const GridField plus = grid_propagate(F0, sys, t + dt, common);
  const GridField Lf = grid_generator(mid, sys);

  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k < Lf.size(); ++k) {
    const cplx dfdt = (plus.values()[k] - minus.values()[k]) / (2.0 * dt);
    num += std::norm(dfdt - Lf.values()[k]);
    den += std::norm(Lf.values()[k]);
  }
  return den == 0.0 ? std::sqrt(num) : std::sqrt(num / den);
}

double commutation_residual(const GridField& F0, const SystemPair& sys, double t,
                            const PropagationSettings& settings) {
  PropagationSettings common = settings;
  if (!common.output)
    common.output = default_output_geometry(F0.geometry(), mat_exp(sys.B(), t), settings);
  const GridField after = grid_generator(grid_propagate(F0, sys, t, common), sys);
  const GridField before = grid_propagate(grid_generator(F0, sys), sys, t, common);
  return relative_l2(after, before);
}

}  // namespace hypoprop
