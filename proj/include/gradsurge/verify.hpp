#pragma once

#include <optional>
#include <string>
#include <vector>

namespace gradsurge {

struct VerifyOptions {
  // < 1 tightens every tolerance by that factor
  double tol_scale = 1.0;
  // overrides the Neumann check's step size; values beyond the convergence
  // radius are flagged as divergent with an advisory instead of producing
  // silently wrong numbers
  std::optional<double> neumann_beta;
  std::uint64_t seed = 2024;
};

struct CheckResult {
  std::string module;
  std::string property;
  bool pass = false;
  double observed = 0.0;
  double tolerance = 0.0;
  std::string detail;
};

struct VerifyReport {
  std::vector<CheckResult> checks;
  bool all_pass() const {
    for (const CheckResult& c : checks)
      if (!c.pass) return false;
    return true;
  }
};

// Runs the oracle checks across all modules: finite-difference gradient
// checks, projection orthogonality, combiner reduction identities, the
// Neumann-vs-analytic hypergradient comparison on the quadratic testbed,
// motif brute-force equivalence, the label-rule cross-check, and metric
// brute-force equivalence.
VerifyReport verify(const VerifyOptions& opts = {});

std::string format_verify(const VerifyReport& report);

}  // namespace gradsurge
