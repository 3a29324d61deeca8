#pragma once
// Reference computations written independently of the library code paths.

#include <cmath>
#include <complex>
#include <random>
#include <vector>

#include "hypoprop/types.hpp"

namespace oracle {

using hypoprop::cplx;
using hypoprop::Matrix;
using hypoprop::pi;

using LMatrix = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;

// Taylor series in long double with enough halvings that ||A|| <= 1/8.
inline Matrix expm_taylor(const Matrix& A) {
  const double norm = A.cwiseAbs().rowwise().sum().maxCoeff();
  int squarings = 0;
  while (std::ldexp(norm, -squarings) > 0.125) ++squarings;
  const LMatrix X = A.cast<long double>() / std::ldexp(1.0L, squarings);
  LMatrix term = LMatrix::Identity(A.rows(), A.cols());
  LMatrix sum = term;
  for (int k = 1; k < 40; ++k) {
    term = term * X / static_cast<long double>(k);
    sum += term;
  }
  for (int s = 0; s < squarings; ++s) sum = sum * sum;
  return sum.cast<double>();
}

// Direct O(n^2) DFT of samples on [-L, L) with centered output frequencies,
// scaled by the cell width so each value approximates the continuous transform.
inline std::vector<cplx> dft_direct_1d(const std::vector<cplx>& f, double L) {
  const int n = static_cast<int>(f.size());
  const double h = 2.0 * L / n;
  std::vector<cplx> out(n);
  for (int k = 0; k < n; ++k) {
    const double xi = (k - n / 2) / (2.0 * L);
    cplx acc = 0.0;
    for (int j = 0; j < n; ++j) {
      const double x = -L + h * j;
      acc += f[j] * std::polar(1.0, -2.0 * pi * x * xi);
    }
    out[k] = acc * h;
  }
  return out;
}

// Solution of d/dt f = i f'' on the line with f(x, 0) = exp(-a x^2).
inline cplx free_gaussian_1d(double a, double t, double x) {
  const cplx d = 1.0 + 4.0 * cplx(0.0, 1.0) * a * t;
  return std::exp(-a * x * x / d) / std::sqrt(d);
}

// int (4 pi i t)^{-1/2} e^{i (x - y)^2 / (4t)} e^{-eps y^2} dy in closed form.
inline cplx damped_fresnel_free_1d(double t, double x, double eps) {
  const cplx i(0.0, 1.0);
  const cplx alpha = eps - i / (4.0 * t);
  const cplx beta = -i * x / (2.0 * t);
  const cplx pref = std::exp(-i * pi / 4.0) / std::sqrt(4.0 * pi * t);
  return pref * std::exp(i * x * x / (4.0 * t)) * std::sqrt(pi / alpha) *
         std::exp(beta * beta / (4.0 * alpha));
}

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline Matrix random_matrix(std::mt19937_64& rng, int rows, int cols, double scale = 1.0) {
  Matrix A(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) A(i, j) = uniform(rng, -scale, scale);
  return A;
}

}  // namespace oracle
