#include "fft.hpp"

#include <fftw3.h>

#include <mutex>

#include "hypoprop/error.hpp"

namespace hypoprop::detail {
namespace {

// Only fftw_execute is thread-safe; planning and destruction are not.
std::mutex& planner_mutex() {
  static std::mutex mu;
  return mu;
}

}  // namespace

void fft_inplace(std::vector<cplx>& data, const std::vector<int>& extents, int sign) {
  std::size_t total = 1;
  for (int e : extents) total *= static_cast<std::size_t>(e);
  if (total != data.size()) throw Error(ErrorKind::dimension, "fft extents do not match data");
  auto* buf = reinterpret_cast<fftw_complex*>(data.data());
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lock(planner_mutex());
    plan = fftw_plan_dft(static_cast<int>(extents.size()), extents.data(), buf, buf,
                         sign < 0 ? FFTW_FORWARD : FFTW_BACKWARD, FFTW_ESTIMATE);
  }
  if (plan == nullptr) throw Error(ErrorKind::state, "fftw planning failed");
  fftw_execute(plan);
  std::lock_guard<std::mutex> lock(planner_mutex());
  fftw_destroy_plan(plan);
}

}  // namespace hypoprop::detail
