#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "hypoprop/matcore.hpp"
#include "hypoprop/packets.hpp"
#include "hypoprop/types.hpp"

namespace hypoprop {

using SourceFn = std::function<cplx(const Vector&)>;

enum class Space { position, frequency };
const char* to_string(Space s);

/// Uniform periodic box [-L_i, L_i) with n_i samples per axis, m in {1, 2}.
///
/// Position nodes are x_j = -L + 2L j / n. The matching frequency layout is
/// centered: slot k holds xi = (k - n/2) / (2L). Multi-dimensional samples are
/// stored row-major (the last axis varies fastest).
struct GridGeometry {
  std::vector<double> L;
  std::vector<int> n;

  GridGeometry() = default;
  GridGeometry(std::vector<double> half_widths, std::vector<int> samples);
  static GridGeometry uniform(int m, double L, int n);

  int dim() const noexcept { return static_cast<int>(L.size()); }
  std::size_t size() const noexcept;
  double spacing(int axis) const { return 2.0 * L[axis] / n[axis]; }
  double freq_spacing(int axis) const { return 0.5 / L[axis]; }
  double node(int axis, int j) const { return -L[axis] + spacing(axis) * j; }
  double freq(int axis, int k) const { return (k - n[axis] / 2) * freq_spacing(axis); }
  double cell_volume() const;
  double freq_cell_volume() const;
  /// Per-axis sample indices of flat index `flat`.
  std::vector<int> unflatten(std::size_t flat) const;
  Vector position(std::size_t flat) const;
  Vector frequency(std::size_t flat) const;

  bool operator==(const GridGeometry&) const = default;
};

class GridField {
 public:
  GridField(GridGeometry geometry, Space space, std::vector<cplx> values);

  const GridGeometry& geometry() const noexcept { return geometry_; }
  Space space() const noexcept { return space_; }
  const std::vector<cplx>& values() const noexcept { return values_; }
  std::vector<cplx>& values() noexcept { return values_; }
  int dim() const noexcept { return geometry_.dim(); }
  std::size_t size() const noexcept { return values_.size(); }
  /// Node coordinates in the field's own space.
  Vector coords(std::size_t flat) const;
  /// Cell-volume weighted L^2 norm in the field's own space.
  double l2_norm() const;

 private:
  GridGeometry geometry_;
  Space space_;
  std::vector<cplx> values_;
};

/// Cell-weighted ||a - b||_2 / ||b||_2 for fields on identical grids.
double relative_l2(const GridField& a, const GridField& b);

GridField grid_sample(const GaussianPacket& P, const GridGeometry& g);
GridField grid_sample(const SourceFn& source, const GridGeometry& g);

/// Forward transform scaled by the cell volume, so each sample approximates
/// the continuous transform at its centered frequency. Throws `state` when
/// the input is already in frequency space (and vice versa for the inverse).
GridField grid_dft(const GridField& F);
GridField grid_idft(const GridField& F);

enum class Interpolation { fourier_zeropad, cubic };

struct PropagationSettings {
  Interpolation interpolation = Interpolation::fourier_zeropad;
  int zeropad_factor = 4;
  /// Output box is L / margin_factor per axis. Unset picks the smallest factor
  /// with e^{tB}(output box) inside the input box; that factor is below 1 when
  /// the flow contracts, so the output box grows with the solution.
  std::optional<double> margin_factor;
  /// Overrides margin_factor entirely.
  std::optional<GridGeometry> output;
  bool chirp_resolution_guard = true;
  /// Receives guard messages when the guard is off. Unset prints to stderr.
  std::function<void(const std::string&)> on_warning;
};

struct ChirpCheck {
  bool resolved = true;
  /// max_i 4 pi |(Q(t) xi)_i| / L_i over the spectral support; <= 1 is resolved.
  double worst_ratio = 0.0;
};

/// Chirp resolution test at the spectral support of `F_hat` (frequency space),
/// which excludes the weakest samples holding at most 1e-12 of the energy:
/// the phase of e^{-4 pi^2 i <Q(t) xi, xi>} may change by at most pi per cell.
ChirpCheck chirp_check(const GridField& F_hat, const Matrix& Qt);

/// Output geometry used when settings do not fix one.
GridGeometry default_output_geometry(const GridGeometry& in, const Matrix& flow,
                                     const PropagationSettings& settings);

/// Drift-removed solution v(., t) on the input grid (DFT, chirp, IDFT).
GridField grid_evolve_v(const GridField& F, const SystemPair& sys, double t,
                        const PropagationSettings& settings = {});

/// f(x, t) = v(e^{tB} x, t) sampled on the output geometry.
GridField grid_propagate(const GridField& F, const SystemPair& sys, double t,
                         const PropagationSettings& settings = {});

/// Spectral evaluation of i tr(Q D^2 f) + <Bx, grad f> on the field's grid.
GridField grid_generator(const GridField& F, const SystemPair& sys);

/// Relative L^2 residual of the equation at time t using a central time
/// difference of step dt; all three snapshots share one output box.
double pde_residual(const GridField& F0, const SystemPair& sys, double t, double dt,
                    const PropagationSettings& settings = {});

/// Relative L^2 gap between the generator applied after and before T(t).
double commutation_residual(const GridField& F0, const SystemPair& sys, double t,
                            const PropagationSettings& settings = {});

/// Oscillatory-kernel propagator by trapezoidal quadrature over a grid.
///
/// The source is sampled once and premultiplied by the y-only part of the
/// kernel phase, so each evaluation point costs one separable weighted sum.
class KernelQuadrature {
 public:
  KernelQuadrature(const SourceFn& source, const SystemPair& sys, double t,
                   const GridGeometry& quad_grid, bool guard = true);

  /// f(x, t); throws `resolution` when the guard is on and the kernel phase
  /// is under-resolved across the source support.
  cplx operator()(const Vector& x) const;
  /// Largest per-cell phase change (radians) seen from evaluation point x.
  double cell_phase(const Vector& x) const;
  GridField evaluate_on(const GridGeometry& out) const;

 private:
  GridGeometry grid_;
  Matrix flow_;
  Matrix Ainv_;  // Q(t)^{-1}
  cplx prefactor_;
  bool guard_;
  std::vector<cplx> weighted_;  // source * e^{i<A y, y>/4} * cell volume
  std::vector<double> support_lo_, support_hi_;
};

cplx kernel_propagate(const SourceFn& source, const SystemPair& sys, double t, const Vector& x,
                      double L, int n);

enum class FresnelMode {
  /// int S(e^{tB} x, y, t) e^{-eps |y|^2} dy, tends to 1.
  y_integral,
  /// int S(e^{tB} x, y, t) e^{-eps |x|^2} dx at fixed y, tends to e^{-t tr B}.
  x_integral
};

/// Damped kernel mass. `point` is x in y-mode and y in x-mode.
cplx fresnel_mass(const SystemPair& sys, double t, const Vector& point, double eps, double L,
                  int n, FresnelMode mode = FresnelMode::y_integral, bool guard = true);

struct FresnelGeometry {
  double L;
  int n;
};

/// Box wide enough for the damping to fall below `tol` and a step resolving
/// the kernel phase with a 1.5x margin.
FresnelGeometry fresnel_geometry(const SystemPair& sys, double t, const Vector& point, double eps,
                                 FresnelMode mode = FresnelMode::y_integral, double tol = 1e-12);

struct GeometryPlan {
  GridGeometry input;
  GridGeometry output;
};

/// Input and output grids for propagating packet P to time t: boxes cover
/// every sample above amp_tol relative (input, drift-removed and output
/// solutions), the input box covers e^{tB}(output box) and the chirp guard,
/// and n resolves each spectrum with 2x oversampling (plain Nyquist sampling
/// for grids that would exceed 2^24 points).
GeometryPlan suggest_geometry(const GaussianPacket& P, const SystemPair& sys, double t,
                              double amp_tol = 1e-8);

/// Grids G_0 ... G_k for propagating P through successive `steps`, where step
/// j maps a field on G_j to G_{j+1}. G_0 also supports one direct step over
/// the whole span onto G_k, so chained and direct results share a grid.
std::vector<GridGeometry> suggest_chain(const GaussianPacket& P, const SystemPair& sys,
                                        const std::vector<double>& steps,
                                        double amp_tol = 1e-8);

int next_pow2(double x);

}  // namespace hypoprop
