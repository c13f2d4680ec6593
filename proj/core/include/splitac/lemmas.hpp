#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace splitac {

/// Outcome of one randomized inequality check. `worst_ratio` is the largest
/// observed lhs/rhs; the check passes when there are no violations.
struct LemmaCheck {
  std::string name;
  std::size_t cases = 0;
  std::size_t violations = 0;
  double worst_ratio = 0.0;
  double constant = 0.0;

  [[nodiscard]] bool passed() const noexcept { return violations == 0; }
};

struct LemmaSuiteOptions {
  std::uint64_t seed = 271828;
  std::size_t cases = 1'000'000;
  double z_max = 50.0;
  /// Time steps are drawn from (0, dt_max).
  double dt_max = 1.0;
  /// Reference step for the constant of the psi consistency bound.
  double dt0 = 0.5;
};

struct LemmaReport {
  std::vector<LemmaCheck> checks;
  /// sup_z |psi_{dt0}(z) - psi_0(z)| / (dt0 (1 + |z|^5)) over a fine z grid.
  double error_psi_sup_at_dt0 = 0.0;

  [[nodiscard]] bool all_passed() const noexcept;
};

/// Constant of the bound |psi_t(z) - psi_0(z)| <= C t (1 + |z|^5), valid for
/// t <= dt0: C = e^{dt0} (1 + e^{2 dt0})^2, from |g''| <= 2 e^{dt0} (1 + e^{2 dt0} z^2)^2
/// for g(t) = (z^2 + (1 - z^2) e^{-2t})^{-1/2}.
double error_psi_constant(double dt0) noexcept;

/// Runs the Lipschitz, one-sided, local-Lipschitz/growth and consistency
/// checks for phi and psi on randomized (z, dt) samples, plus the semigroup law.
LemmaReport run_lemma_suites(const LemmaSuiteOptions& options);

}  // namespace splitac
