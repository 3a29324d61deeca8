// hypoprop command-line front end.
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "hypoprop/analysis.hpp"
#include "hypoprop/error.hpp"
#include "hypoprop/gridprop.hpp"
#include "hypoprop/io.hpp"
#include "hypoprop/matcore.hpp"
#include "hypoprop/verify.hpp"

using namespace hypoprop;
using io::format_double;

namespace {

constexpr int kExitFail = 2;
constexpr int kExitError = 1;

struct Range {
  double start = 0.0;
  double stop = 0.0;
  int count = 1;
};

// "start:stop:count", or a single number for a one-point range.
Range parse_range(const std::string& text) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
  Range r;
  try {
    if (parts.size() == 1) {
      r.start = r.stop = std::stod(parts[0]);
    } else if (parts.size() == 3) {
      r.start = std::stod(parts[0]);
      r.stop = std::stod(parts[1]);
      r.count = std::stoi(parts[2]);
    } else {
      throw std::invalid_argument("shape");
    }
  } catch (const std::logic_error&) {
    throw Error(ErrorKind::invalid_input, "range must be start:stop:count, got " + text);
  }
  if (r.count < 1) throw Error(ErrorKind::invalid_input, "range count must be >= 1");
  return r;
}

std::vector<double> linear(const Range& r) {
  if (r.count == 1) return {r.start};
  std::vector<double> out(r.count);
  for (int k = 0; k < r.count; ++k)
    out[k] = r.start + (r.stop - r.start) * k / (r.count - 1);
  return out;
}

std::vector<double> geometric(const Range& r) {
  if (r.count == 1) {
    if (!(r.start > 0.0)) throw Error(ErrorKind::domain, "times must be > 0");
    return {r.start};
  }
  return geometric_grid(r.start, r.stop, r.count);
}

// Writes to --out when given, stdout otherwise.
class Sink {
 public:
  explicit Sink(const std::string& path) {
    if (!path.empty()) {
      file_.open(path, std::ios::binary);
      if (!file_) throw Error(ErrorKind::invalid_input, "cannot write " + path);
    }
  }
  std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }

 private:
  std::ofstream file_;
};

std::vector<double> per_axis(std::vector<double> v, int m, const char* name) {
  if (v.size() == 1) v.assign(m, v[0]);
  if (static_cast<int>(v.size()) != m)
    throw Error(ErrorKind::invalid_input, std::string(name) + " needs 1 or m values");
  return v;
}

struct Options {
  std::string system;
  std::string out;
  std::uint64_t seed = 42;
};

int cmd_check(const Options& o) {
  const SystemPair sys = io::load_system(o.system);
  const HypoReport r = hypoelliptic(sys);
  const io::json j = {{"m", sys.dim()},
                      {"kalman_rank", r.kalman_rank},
                      {"lambda_min_at_t", r.lambda_min_at_t},
                      {"t_probe", r.t_probe},
                      {"hypoelliptic", r.hypoelliptic}};
  Sink sink(o.out);
  sink.stream() << j.dump(2) << "\n";
  return r.hypoelliptic ? 0 : kExitFail;
}

int cmd_covariance(const Options& o, const std::string& t_text) {
  const SystemPair sys = io::load_system(o.system);
  const int m = sys.dim();
  Sink sink(o.out);
  std::ostream& os = sink.stream();
  os << "t,det,lambda_min";
  for (int r = 0; r < m; ++r)
    for (int c = 0; c < m; ++c) os << ",Q" << r + 1 << "_" << c + 1;
  os << "\n";
  for (double t : linear(parse_range(t_text))) {
    const CovarianceMatrix Qt = covariance(sys, t);
    os << format_double(t) << "," << format_double(Qt.det()) << ","
       << format_double(Qt.lambda_min());
    for (int r = 0; r < m; ++r)
      for (int c = 0; c < m; ++c) os << "," << format_double(Qt.value()(r, c));
    os << "\n";
  }
  return 0;
}

struct PropagateArgs {
  std::string packet;
  std::string field;
  double t = 0.0;
  std::string backend = "grid";
  std::vector<double> L;
  std::vector<int> n;
  std::string meta;
};

// Source for the kernel backend when the input is a sampled field: exact at
// the field's own nodes, which is where the quadrature samples it.
SourceFn node_lookup(const GridField& F) {
  return [&F](const Vector& x) -> cplx {
    const GridGeometry& g = F.geometry();
    std::size_t flat = 0;
    for (int a = 0; a < g.dim(); ++a) {
      const long j = std::lround((x(a) + g.L[a]) / g.spacing(a));
      if (j < 0 || j >= g.n[a]) return 0.0;
      flat = flat * g.n[a] + static_cast<std::size_t>(j);
    }
    return F.values()[flat];
  };
}

int cmd_propagate(const Options& o, const PropagateArgs& a) {
  const SystemPair sys = io::load_system(o.system);
  const int m = sys.dim();
  if (a.packet.empty() == a.field.empty())
    throw Error(ErrorKind::invalid_input, "give exactly one of --packet or --field");
  if (!(a.t >= 0.0)) throw Error(ErrorKind::domain, "--t must be >= 0");
  if (a.backend != "exact" && a.backend != "grid" && a.backend != "kernel")
    throw Error(ErrorKind::invalid_input, "--backend must be exact, grid or kernel");

  std::optional<GaussianPacket> packet;
  std::optional<GridField> field;
  GridGeometry input, output;
  if (!a.packet.empty()) {
    packet = io::load_packet(a.packet);
    if (packet->dim() != m) throw Error(ErrorKind::dimension, "packet and system sizes differ");
  } else {
    field = io::load_field_csv(a.field);
    if (field->dim() != m) throw Error(ErrorKind::dimension, "field and system sizes differ");
  }

  const Matrix flow = mat_exp(sys.B(), a.t);
  if (field) {
    input = field->geometry();
    output = default_output_geometry(input, flow, {});
  } else if (!a.L.empty() || !a.n.empty()) {
    if (a.L.empty() || a.n.empty()) throw Error(ErrorKind::invalid_input, "--L and --n go together");
    std::vector<int> n = a.n;
    if (n.size() == 1) n.assign(m, n[0]);
    input = GridGeometry(per_axis(a.L, m, "--L"), n);
    output = default_output_geometry(input, flow, {});
  } else {
    const GeometryPlan plan = suggest_geometry(*packet, sys, a.t);
    input = plan.input;
    output = plan.output;
  }

  std::optional<GridField> result;
  if (a.t == 0.0) {
    result = field ? *field : grid_sample(*packet, input);
  } else if (a.backend == "exact") {
    if (!packet) throw Error(ErrorKind::unsupported, "the exact backend needs a --packet input");
    result = grid_sample(packet_propagate(*packet, sys, a.t), output);
  } else if (a.backend == "grid") {
    PropagationSettings settings;
    settings.output = output;
    result = grid_propagate(field ? *field : grid_sample(*packet, input), sys, a.t, settings);
  } else {
    const GridField source = field ? *field : grid_sample(*packet, input);
    const KernelQuadrature kernel(node_lookup(source), sys, a.t, input);
    result = kernel.evaluate_on(output);
  }

  Sink sink(o.out);
  io::write_field_csv(sink.stream(), *result);
  io::json meta = io::field_metadata(*result);
  meta["t"] = a.t;
  meta["backend"] = a.backend;
  meta["input"] = {{"L", input.L}, {"n", input.n}};
  if (!a.meta.empty()) {
    std::ofstream mf(a.meta);
    if (!mf) throw Error(ErrorKind::invalid_input, "cannot write " + a.meta);
    mf << meta.dump(2) << "\n";
  } else {
    std::cerr << meta.dump() << "\n";
  }
  return 0;
}

int cmd_verify(const Options& o, const std::string& suite) {
  const SystemPair sys = io::load_system(o.system);
  const auto rows = run_verify(sys, suite, o.seed);
  Sink sink(o.out);
  std::ostream& os = sink.stream();
  os << "suite,check,value,relation,limit,status\n";
  bool ok = true;
  for (const CheckResult& r : rows) {
    const char* status = !r.skipped.empty() && r.passed ? "SKIP" : (r.passed ? "PASS" : "FAIL");
    ok = ok && r.passed;
    os << r.suite << "," << r.name << "," << format_double(r.value) << "," << r.relation << ","
       << format_double(r.limit) << "," << status << "\n";
    if (!r.skipped.empty()) std::cerr << r.suite << "/" << r.name << ": " << r.skipped << "\n";
  }
  return ok ? 0 : kExitFail;
}

int cmd_dispersion(const Options& o, double p_value, const std::string& t_text,
                   const std::string& packet_path) {
  const SystemPair sys = io::load_system(o.system);
  const LpExponent p(p_value);
  GaussianPacket P = packet_path.empty() ? GaussianPacket::isotropic(sys.dim(), 1.0)
                                         : io::load_packet(packet_path);
  if (P.dim() != sys.dim()) throw Error(ErrorKind::dimension, "packet and system sizes differ");
  P = P.scaled(1.0 / packet_lp_norm(P, p.p()));
  const std::vector<double> times = geometric(parse_range(t_text));
  std::vector<DispersionReport> rows;
  for (double t : times) rows.push_back(dispersive_ratio(P, sys, t, p));
  Sink sink(o.out);
  io::write_dispersion_csv(sink.stream(), rows);
  if (times.size() > 1)
    std::cerr << "fitted_slope=" << format_double(decay_exponent_fit(sys, p, times)) << "\n";
  return 0;
}

int cmd_hardy(const Options& o, double a, const std::string& s_text) {
  const SystemPair sys = io::load_system(o.system);
  const GaussianPacket P = GaussianPacket::isotropic(sys.dim(), a);
  std::vector<HardyReport> rows;
  for (double s : linear(parse_range(s_text))) rows.push_back(hardy_product(P, sys, s));
  Sink sink(o.out);
  io::write_hardy_csv(sink.stream(), rows);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Propagators and checks for Schroedinger equations with drift"};
  app.require_subcommand(1);
  Options o;
  auto common = [&o](CLI::App* sub) {
    sub->add_option("--system", o.system, "System JSON {m, Q, B}")->required();
    sub->add_option("--out", o.out, "Output file (default stdout)");
    sub->add_option("--seed", o.seed, "Seed for random batteries");
  };

  auto* check = app.add_subcommand("check", "Hypoellipticity report as JSON");
  common(check);

  std::string t_range = "1";
  auto* cov = app.add_subcommand("covariance", "Q(t) over a linear time range");
  common(cov);
  cov->add_option("--t", t_range, "start:stop:count")->required();

  PropagateArgs prop;
  auto* propagate = app.add_subcommand("propagate", "Propagate a packet or sampled field");
  common(propagate);
  propagate->add_option("--packet", prop.packet, "Packet JSON");
  propagate->add_option("--field", prop.field, "Position-space field CSV");
  propagate->add_option("--t", prop.t, "Time")->required();
  propagate->add_option("--backend", prop.backend, "exact | grid | kernel");
  propagate->add_option("--L", prop.L, "Input half-width (one value or one per axis)");
  propagate->add_option("--n", prop.n, "Input samples (one value or one per axis)");
  propagate->add_option("--meta", prop.meta, "Metadata JSON path (default stderr)");

  std::string suite = "all";
  auto* verify = app.add_subcommand("verify", "Run a verification suite");
  common(verify);
  verify->add_option("--suite", suite, "covariance | packets | grid | fresnel | analysis | all");

  double p_value = 1.0;
  std::string packet_path;
  auto* disp = app.add_subcommand("dispersion", "Dispersive ratios over a geometric time range");
  common(disp);
  disp->add_option("--p", p_value, "Exponent in [1, 2]");
  disp->add_option("--t", t_range, "start:stop:count (geometric)")->required();
  disp->add_option("--packet", packet_path, "Packet JSON (default e^{-|x|^2})");

  double a_value = 1.0;
  std::string s_range;
  auto* hardy = app.add_subcommand("hardy", "Hardy products for c e^{-a|x|^2}");
  common(hardy);
  hardy->add_option("--a", a_value, "Gaussian width parameter");
  hardy->add_option("--s", s_range, "start:stop:count")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitError;
  }

  try {
    if (*check) return cmd_check(o);
    if (*cov) return cmd_covariance(o, t_range);
    if (*propagate) return cmd_propagate(o, prop);
    if (*verify) return cmd_verify(o, suite);
    if (*disp) return cmd_dispersion(o, p_value, t_range, packet_path);
    if (*hardy) return cmd_hardy(o, a_value, s_range);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}
