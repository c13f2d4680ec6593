#pragma once

#include <span>

#include "splitac/grid.hpp"

namespace splitac {

/// Time argument of the scalar flow of z' = z - z^3, with e^{-2t} precomputed.
class FlowParams {
 public:
  explicit FlowParams(double t);

  [[nodiscard]] double t() const noexcept { return t_; }
  [[nodiscard]] double e2t() const noexcept { return e2t_; }
  /// 1 - e^{-2t}, computed without cancellation.
  [[nodiscard]] double one_minus_e2t() const noexcept { return one_minus_e2t_; }

 private:
  double t_;
  double e2t_;
  double one_minus_e2t_;
};

/// Reaction term z - z^3 (minus the derivative of the double-well potential).
[[nodiscard]] constexpr double reaction(double z) noexcept { return z - z * z * z; }

/// Exact flow: z / sqrt(e^{-2t} + (1 - e^{-2t}) z^2).
[[nodiscard]] double phi(const FlowParams& p, double z) noexcept;

/// Increment map (phi_t(z) - z) / t; equals reaction(z) at t = 0.
[[nodiscard]] double psi(const FlowParams& p, double z) noexcept;

/// Elementwise phi.
[[nodiscard]] GridFunction phi_grid(const FlowParams& p, const GridFunction& x);
void phi_in_place(const FlowParams& p, std::span<double> x) noexcept;

}  // namespace splitac
