#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "splitac/flows.hpp"
#include "splitac/grid.hpp"
#include "splitac/noise.hpp"

namespace splitac {

/// Splitting strategy.
///  - m1:     Y = phi_dt(X);               X' = S_dt (Y + dW)
///  - m2:     Y1 = S_{dt/2} X;             Y2 = phi_dt(Y1);   X' = S_{dt/2}(Y2 + dW)
///  - m3:     Y1 = S_{dt/2}(X + dW/2);     Y2 = phi_dt(Y1);   X' = S_{dt/2}(Y2 + dW/2)
///  - strang: Y1 = phi_{dt/2}(X);          Y2 = S_dt(Y1 + dW); X' = phi_{dt/2}(Y2)
enum class Method { m1, m2, m3, strang };

/// Linear sub-step S.
///  - imp:      (I - dt A_h)^{-1}
///  - expo:     e^{dt A_h}
///  - exact:    e^{dt A_h} y plus an exactly sampled stochastic convolution (m1 only)
///  - identity: S = I; test hook for checking the composition structure
enum class LinearIntegrator { imp, expo, exact, identity };

std::string_view to_string(Method m) noexcept;
std::string_view to_string(LinearIntegrator l) noexcept;
std::optional<Method> parse_method(std::string_view s) noexcept;
std::optional<LinearIntegrator> parse_linear(std::string_view s) noexcept;

struct SchemeSpec {
  Method method = Method::m1;
  LinearIntegrator linear = LinearIntegrator::imp;
  double dt = 0.0;
  /// When false the nonlinear sub-step is the identity (test hook).
  bool reaction = true;
  /// Method 1 with X_n instead of Y_n fed to the linear step, which makes the
  /// nonlinear sub-step dead code. Kept for comparison only.
  bool m1_as_printed = false;

  /// Throws std::invalid_argument unless 0 < dt < 1 and the combination is supported.
  void validate() const;
};

/// Sup-norm beyond which a trajectory is declared blown up.
inline constexpr double kOverflowGuard = 1e8;

struct StepState {
  GridFunction x;
  std::uint64_t n = 0;
  bool blown_up = false;
};

/// One-step map of a splitting scheme on a fixed grid. Holds the factorized
/// linear sub-steps for dt and dt/2; const member functions are thread safe.
class Stepper {
 public:
  Stepper(const DiscreteOperator& op, SchemeSpec spec);

  [[nodiscard]] const SchemeSpec& spec() const noexcept { return spec_; }
  [[nodiscard]] const DiscreteOperator& op() const noexcept { return op_; }

  /// Advances by one step with the method selected in the spec.
  void advance(StepState& s, const IncrementBlock& dw) const;
  [[nodiscard]] StepState step(StepState s, const IncrementBlock& dw) const;

  [[nodiscard]] StepState step_m1(StepState s, const IncrementBlock& dw) const;
  [[nodiscard]] StepState step_m2(StepState s, const IncrementBlock& dw) const;
  [[nodiscard]] StepState step_m3(StepState s, const IncrementBlock& dw) const;
  [[nodiscard]] StepState step_strang(StepState s, const IncrementBlock& dw) const;

  /// Linear sub-steps S_dt and S_{dt/2} applied in place.
  void linear_full(std::span<double> x) const;
  void linear_half(std::span<double> x) const;

 private:
  void check_increment(const IncrementBlock& dw) const;
  void nonlinear(const FlowParams& p, std::span<double> x) const;
  void finish(StepState& s) const;

  void do_m1(StepState& s, const IncrementBlock& dw) const;
  void do_m2(StepState& s, const IncrementBlock& dw) const;
  void do_m3(StepState& s, const IncrementBlock& dw) const;
  void do_strang(StepState& s, const IncrementBlock& dw) const;

  void apply_linear(std::span<double> x, const std::optional<ResolventSolver>& imp,
                    const std::optional<SemigroupFactors>& expo) const;

  DiscreteOperator op_;
  SchemeSpec spec_;
  FlowParams flow_full_;
  FlowParams flow_half_;
  std::optional<ResolventSolver> imp_full_, imp_half_;
  std::optional<SemigroupFactors> expo_full_, expo_half_;
};

struct Snapshot {
  double t = 0.0;
  GridFunction x;
};

struct TrajectoryOptions {
  /// Times at which the state is recorded (first step with n*dt >= t).
  std::vector<double> snapshot_times;
  /// Multiplies every noise increment; 0 gives the deterministic equation.
  double noise_scale = 1.0;
};

struct TrajectoryStats {
  GridFunction terminal;
  /// max over 0 <= n <= N of |X_n|_E and ||X_n||_H.
  double sup_e = 0.0;
  double sup_h = 0.0;
  bool blown_up = false;
  std::uint64_t steps = 0;
  std::vector<Snapshot> snapshots;
};

/// Number of steps floor(T/dt), tolerant to the rounding of exact dyadic ratios.
std::uint64_t step_count(double T, double dt);

/// Runs N = floor(T/dt) steps from x0 with increments from `plan` at the level
/// matching the stepper's dt. Blow-up is recorded, never thrown.
TrajectoryStats run_trajectory(const Stepper& stepper, const GridFunction& x0, const NoisePlan& plan,
                               double T, const TrajectoryOptions& options = {});

}  // namespace splitac
