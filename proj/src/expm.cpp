// Scaling and squaring with diagonal Pade approximants, after
// N. J. Higham, "The scaling and squaring method for the matrix exponential
// revisited", SIAM J. Matrix Anal. Appl. 26 (2005) 1179-1193.

#include <array>
#include <cmath>

#include "hypoprop/error.hpp"
#include "hypoprop/matcore.hpp"

namespace hypoprop {
namespace {

// Largest 1-norm for which the degree-k approximant has backward error <= 2^-53.
constexpr std::array<double, 5> kTheta = {1.495585217958292e-2, 2.539398330063230e-1,
                                          9.504178996162932e-1, 2.097847961257068e0,
                                          5.371920351148152e0};

struct PadeTerms {
  Matrix U;  // odd part
  Matrix V;  // even part
};

PadeTerms pade3(const Matrix& A) {
  constexpr double b[] = {120., 60., 12., 1.};
  const Matrix Id = Matrix::Identity(A.rows(), A.cols());
  const Matrix A2 = A * A;
  return {A * (b[3] * A2 + b[1] * Id), b[2] * A2 + b[0] * Id};
}

PadeTerms pade5(const Matrix& A) {
  constexpr double b[] = {30240., 15120., 3360., 420., 30., 1.};
  const Matrix Id = Matrix::Identity(A.rows(), A.cols());
  const Matrix A2 = A * A;
  const Matrix A4 = A2 * A2;
  return {A * (b[5] * A4 + b[3] * A2 + b[1] * Id), b[4] * A4 + b[2] * A2 + b[0] * Id};
}

PadeTerms pade7(const Matrix& A) {
  constexpr double b[] = {17297280., 8648640., 1995840., 277200., 25200., 1512., 56., 1.};
  const Matrix Id = Matrix::Identity(A.rows(), A.cols());
  const Matrix A2 = A * A;
  const Matrix A4 = A2 * A2;
  const Matrix A6 = A4 * A2;
  return {A * (b[7] * A6 + b[5] * A4 + b[3] * A2 + b[1] * Id),
          b[6] * A6 + b[4] * A4 + b[2] * A2 + b[0] * Id};
}

PadeTerms pade9(const Matrix& A) {
  constexpr double b[] = {17643225600., 8821612800., 2075673600., 302702400., 30270240.,
                          2162160.,     110880.,     3960.,       90.,        1.};
  const Matrix Id = Matrix::Identity(A.rows(), A.cols());
  const Matrix A2 = A * A;
  const Matrix A4 = A2 * A2;
  const Matrix A6 = A4 * A2;
  const Matrix A8 = A6 * A2;
  return {A * (b[9] * A8 + b[7] * A6 + b[5] * A4 + b[3] * A2 + b[1] * Id),
          b[8] * A8 + b[6] * A6 + b[4] * A4 + b[2] * A2 + b[0] * Id};
}

PadeTerms pade13(const Matrix& A) {
  constexpr double b[] = {64764752532480000., 32382376266240000., 7771770303897600.,
                          1187353796428800.,  129060195264000.,   10559470521600.,
                          670442572800.,      33522128640.,       1323241920.,
                          40840800.,          960960.,            16380.,
                          182.,               1.};
  const Matrix Id = Matrix::Identity(A.rows(), A.cols());
  const Matrix A2 = A * A;
  const Matrix A4 = A2 * A2;
  const Matrix A6 = A4 * A2;
  Matrix U = A6 * (b[13] * A6 + b[11] * A4 + b[9] * A2) + b[7] * A6 + b[5] * A4 + b[3] * A2 +
             b[1] * Id;
  U = A * U;
  Matrix V = A6 * (b[12] * A6 + b[10] * A4 + b[8] * A2) + b[6] * A6 + b[4] * A4 + b[2] * A2 +
             b[0] * Id;
  return {std::move(U), std::move(V)};
}

Matrix solve_pade(const PadeTerms& p) {
  // r(A) = (V - U)^{-1} (V + U)
  return (p.V - p.U).partialPivLu().solve(p.V + p.U);
}

}  // namespace

Matrix mat_exp(const Matrix& M, double t) {
  if (M.rows() != M.cols()) throw Error(ErrorKind::invalid_input, "mat_exp: matrix is not square");
  if (!M.allFinite() || !std::isfinite(t))
    throw Error(ErrorKind::invalid_input, "mat_exp: non-finite entries");
  if (M.size() == 0) return M;

  const Matrix A = t * M;
  const double norm1 = A.cwiseAbs().colwise().sum().maxCoeff();

  Matrix result;
  if (norm1 <= kTheta[0]) {
    result = solve_pade(pade3(A));
  } else if (norm1 <= kTheta[1]) {
    result = solve_pade(pade5(A));
  } else if (norm1 <= kTheta[2]) {
    result = solve_pade(pade7(A));
  } else if (norm1 <= kTheta[3]) {
    result = solve_pade(pade9(A));
  } else {
    const int s = std::max(0, static_cast<int>(std::ceil(std::log2(norm1 / kTheta[4]))));
    result = solve_pade(pade13(std::ldexp(1.0, -s) * A));
    for (int k = 0; k < s; ++k) result = result * result;
  }
  if (!result.allFinite()) throw Error(ErrorKind::domain, "mat_exp: result overflows");
  return result;
}

}  // namespace hypoprop
