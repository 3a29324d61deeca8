#include "hypoprop/io.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <locale>
#include <sstream>
#include <tuple>

#include "hypoprop/error.hpp"

namespace hypoprop::io {
namespace {

constexpr double kJsonSymmetryTol = 1e-9;

Matrix matrix_from_json(const json& j, int m, const char* name) {
  if (!j.is_array() || static_cast<int>(j.size()) != m)
    throw Error(ErrorKind::invalid_input, std::string(name) + " must have m rows");
  Matrix A(m, m);
  for (int r = 0; r < m; ++r) {
    const json& row = j[r];
    if (!row.is_array() || static_cast<int>(row.size()) != m)
      throw Error(ErrorKind::invalid_input, std::string(name) + " must be square m x m");
    for (int c = 0; c < m; ++c) {
      if (!row[c].is_number()) throw Error(ErrorKind::invalid_input, std::string(name) + " entry is not a number");
      A(r, c) = row[c].get<double>();
    }
  }
  return A;
}

Vector vector_from_json(const json& j, int m, const char* name) {
  if (!j.is_array() || static_cast<int>(j.size()) != m)
    throw Error(ErrorKind::invalid_input, std::string(name) + " must have m entries");
  Vector v(m);
  for (int k = 0; k < m; ++k) {
    if (!j[k].is_number()) throw Error(ErrorKind::invalid_input, std::string(name) + " entry is not a number");
    v(k) = j[k].get<double>();
  }
  return v;
}

json matrix_to_json(const Matrix& A) {
  json out = json::array();
  for (Eigen::Index r = 0; r < A.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < A.cols(); ++c) row.push_back(A(r, c));
    out.push_back(row);
  }
  return out;
}

json vector_to_json(const Vector& v) {
  json out = json::array();
  for (Eigen::Index k = 0; k < v.size(); ++k) out.push_back(v(k));
  return out;
}

int dimension_from_json(const json& j) {
  if (!j.is_object()) throw Error(ErrorKind::invalid_input, "expected a JSON object");
  if (!j.contains("m") || !j["m"].is_number_integer())
    throw Error(ErrorKind::invalid_input, "missing integer field \"m\"");
  const int m = j["m"].get<int>();
  if (m < 1) throw Error(ErrorKind::invalid_input, "m must be >= 1");
  return m;
}

json parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::invalid_input, "cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::invalid_input, path + ": " + e.what());
  }
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

double parse_number(const std::string& s) {
  std::istringstream is(s);
  is.imbue(std::locale::classic());
  double v;
  if (!(is >> v)) throw Error(ErrorKind::invalid_input, "bad number in CSV: " + s);
  return v;
}

// Recovers (L, n) from the sorted distinct node coordinates of one axis.
std::pair<double, int> axis_from_nodes(const std::vector<double>& nodes) {
  const int n = static_cast<int>(nodes.size());
  if (n < 2) throw Error(ErrorKind::invalid_input, "field CSV has too few nodes per axis");
  const double L = -nodes.front();
  if (!(L > 0.0)) throw Error(ErrorKind::invalid_input, "field CSV nodes must start at -L < 0");
  for (int j = 0; j < n; ++j) {
    const double expect = -L + 2.0 * L * j / n;
    if (std::abs(nodes[j] - expect) > 1e-9 * L)
      throw Error(ErrorKind::invalid_input, "field CSV nodes are not x_j = -L + 2Lj/n");
  }
  return {L, n};
}

}  // namespace

SystemPair system_from_json(const json& j) {
  const int m = dimension_from_json(j);
  if (!j.contains("Q") || !j.contains("B"))
    throw Error(ErrorKind::invalid_input, "system needs fields \"Q\" and \"B\"");
  Matrix Q = matrix_from_json(j["Q"], m, "Q");
  const Matrix B = matrix_from_json(j["B"], m, "B");
  if ((Q - Q.transpose()).cwiseAbs().maxCoeff() > kJsonSymmetryTol)
    throw Error(ErrorKind::invalid_input, "Q is not symmetric");
  Q = 0.5 * (Q + Q.transpose());
  return {Q, B};
}

json system_to_json(const SystemPair& sys) {
  return {{"m", sys.dim()}, {"Q", matrix_to_json(sys.Q())}, {"B", matrix_to_json(sys.B())}};
}

SystemPair load_system(const std::string& path) { return system_from_json(parse_file(path)); }

GaussianPacket packet_from_json(const json& j) {
  const int m = dimension_from_json(j);
  if (!j.contains("M_re")) throw Error(ErrorKind::invalid_input, "packet needs \"M_re\"");
  const Matrix Mre = matrix_from_json(j["M_re"], m, "M_re");
  const Matrix Mim = j.contains("M_im") ? matrix_from_json(j["M_im"], m, "M_im") : Matrix::Zero(m, m);
  const Vector wre = j.contains("w_re") ? vector_from_json(j["w_re"], m, "w_re") : Vector::Zero(m);
  const Vector wim = j.contains("w_im") ? vector_from_json(j["w_im"], m, "w_im") : Vector::Zero(m);
  const double cre = j.value("c_re", 1.0);
  const double cim = j.value("c_im", 0.0);
  CMatrix M = Mre.cast<cplx>() + I * Mim.cast<cplx>();
  CVector w = wre.cast<cplx>() + I * wim.cast<cplx>();
  return {std::move(M), std::move(w), cplx(cre, cim)};
}

json packet_to_json(const GaussianPacket& P) {
  return {{"m", P.dim()},
          {"M_re", matrix_to_json(P.M().real())},
          {"M_im", matrix_to_json(P.M().imag())},
          {"w_re", vector_to_json(P.w().real())},
          {"w_im", vector_to_json(P.w().imag())},
          {"c_re", P.c().real()},
          {"c_im", P.c().imag()}};
}

GaussianPacket load_packet(const std::string& path) { return packet_from_json(parse_file(path)); }

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_field_csv(std::ostream& os, const GridField& F) {
  const int m = F.dim();
  const char* axis = F.space() == Space::position ? "x" : "xi";
  for (int a = 0; a < m; ++a) os << axis << (a + 1) << ",";
  os << "re,im\n";
  for (std::size_t k = 0; k < F.size(); ++k) {
    const Vector c = F.coords(k);
    for (int a = 0; a < m; ++a) os << format_double(c(a)) << ",";
    os << format_double(F.values()[k].real()) << "," << format_double(F.values()[k].imag())
       << "\n";
  }
}

GridField read_field_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw Error(ErrorKind::invalid_input, "empty field CSV");
  const auto header = split_csv(line);
  int m = 0;
  if (header == std::vector<std::string>{"x1", "re", "im"}) {
    m = 1;
  } else if (header == std::vector<std::string>{"x1", "x2", "re", "im"}) {
    m = 2;
  } else {
    throw Error(ErrorKind::invalid_input,
                "field CSV header must be x1,re,im or x1,x2,re,im (position space)");
  }
  std::vector<std::array<double, 2>> coords;
  std::vector<cplx> values;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    if (static_cast<int>(cells.size()) != m + 2)
      throw Error(ErrorKind::invalid_input, "field CSV row has the wrong column count");
    std::array<double, 2> c{0.0, 0.0};
    for (int a = 0; a < m; ++a) c[a] = parse_number(cells[a]);
    coords.push_back(c);
    values.emplace_back(parse_number(cells[m]), parse_number(cells[m + 1]));
  }
  if (coords.empty()) throw Error(ErrorKind::invalid_input, "field CSV has no rows");

  std::vector<double> L(m);
  std::vector<int> n(m);
  if (m == 1) {
    std::vector<double> nodes;
    for (const auto& c : coords) nodes.push_back(c[0]);
    std::tie(L[0], n[0]) = axis_from_nodes(nodes);
  } else {
    std::vector<double> inner;
    for (const auto& c : coords) {
      if (c[0] != coords.front()[0]) break;
      inner.push_back(c[1]);
    }
    std::tie(L[1], n[1]) = axis_from_nodes(inner);
    if (coords.size() % n[1] != 0)
      throw Error(ErrorKind::invalid_input, "field CSV rows do not form a full grid");
    std::vector<double> outer;
    for (std::size_t k = 0; k < coords.size(); k += n[1]) outer.push_back(coords[k][0]);
    std::tie(L[0], n[0]) = axis_from_nodes(outer);
  }
  GridGeometry g(L, n);
  if (g.size() != values.size())
    throw Error(ErrorKind::invalid_input, "field CSV rows do not form a full grid");
  for (std::size_t k = 0; k < values.size(); ++k) {
    const Vector x = g.position(k);
    for (int a = 0; a < m; ++a)
      if (std::abs(x(a) - coords[k][a]) > 1e-9 * L[a])
        throw Error(ErrorKind::invalid_input, "field CSV rows are not in sample order");
  }
  return {g, Space::position, std::move(values)};
}

GridField load_field_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::invalid_input, "cannot open " + path);
  return read_field_csv(in);
}

json field_metadata(const GridField& F) {
  const GridGeometry& g = F.geometry();
  return {{"m", g.dim()}, {"L", g.L}, {"n", g.n}, {"space", to_string(F.space())}};
}

void write_dispersion_csv(std::ostream& os, const std::vector<DispersionReport>& rows) {
  os << "t,p,p_conj,lhs,bound,ratio\n";
  for (const auto& r : rows) {
    os << format_double(r.t) << "," << format_double(r.p.p()) << ","
       << format_double(r.p.conj()) << "," << format_double(r.lhs) << ","
       << format_double(r.bound) << "," << format_double(r.ratio) << "\n";
  }
}

void write_hardy_csv(std::ostream& os, const std::vector<HardyReport>& rows) {
  os << "s,a,b,product,pi_sq_ratio\n";
  for (const auto& r : rows) {
    os << format_double(r.s) << "," << format_double(r.a) << "," << format_double(r.b) << ","
       << format_double(r.product) << "," << format_double(r.product / (pi * pi)) << "\n";
  }
}

}  // namespace hypoprop::io
