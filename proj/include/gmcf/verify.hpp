#pragma once

#include "gmcf/frame.hpp"

namespace gmcf {

struct IdentityResult {
  std::string name;
  int samples = 0;
  double max_residual = 0.0;
  double tolerance = 0.0;
  bool pass = true;
  bool asserted = true;  // false: residual reported without judgment
  bool skipped = false;  // true: no grid supplied for a grid identity
};

struct IdentitySuiteReport {
  std::vector<IdentityResult> rows;

  bool all_pass() const;
  const IdentityResult& row(const std::string& name) const;
  std::string to_text() const;
};

struct SuiteOptions {
  FdScheme scheme{};
  bool force_fd = false;    // bypass analytic derivative registrations
  double tol_scale = 1.0;
  double omega_gate = 1e-5; // Lagrangian-only identities asserted below this
};

/// Randomized certification of the structural identities of a
/// (geometry, connection) pair, plus the submanifold identities when a grid
/// is supplied (grid identities are marked skipped otherwise).
/// Deterministic for a fixed seed.
IdentitySuiteReport run_suite(const Connection& conn, const ImmersedGrid* grid,
                              int samples, std::uint64_t seed,
                              const SuiteOptions& options = {});

}  // namespace gmcf
