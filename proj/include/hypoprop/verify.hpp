#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "hypoprop/matcore.hpp"
#include "hypoprop/packets.hpp"

namespace hypoprop {

struct CheckResult {
  std::string suite;
  std::string name;
  double value;
  /// "<=" or ">=": the check passes when `value relation limit`.
  std::string relation;
  double limit;
  bool passed;
  /// Non-empty when the check could not run for this system.
  std::string skipped;
};

/// Suites: covariance, packets, grid, fresnel, analysis, all.
const std::vector<std::string>& verify_suite_names();

/// Runs one suite against `sys` (the covariance suite adds seeded random 3x3
/// systems). Throws invalid_input for an unknown suite name.
std::vector<CheckResult> run_verify(const SystemPair& sys, const std::string& suite,
                                    std::uint64_t seed);

/// Seeded generators shared with the property tests.
SystemPair random_system(std::mt19937_64& rng, int m);
/// Re M = C C^T / m + 0.3 I, Im M symmetric with entries in [-1, 1], |c| in [0.5, 2].
GaussianPacket random_packet(std::mt19937_64& rng, int m);

}  // namespace hypoprop
