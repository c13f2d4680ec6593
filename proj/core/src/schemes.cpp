#include "splitac/schemes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace splitac {

std::string_view to_string(Method m) noexcept {
  switch (m) {
    case Method::m1: return "m1";
    case Method::m2: return "m2";
    case Method::m3: return "m3";
    case Method::strang: return "strang";
  }
  return "?";
}

std::string_view to_string(LinearIntegrator l) noexcept {
  switch (l) {
    case LinearIntegrator::imp: return "imp";
    case LinearIntegrator::expo: return "expo";
    case LinearIntegrator::exact: return "exact";
    case LinearIntegrator::identity: return "identity";
  }
  return "?";
}

std::optional<Method> parse_method(std::string_view s) noexcept {
  for (Method m : {Method::m1, Method::m2, Method::m3, Method::strang}) {
    if (s == to_string(m)) return m;
  }
  return std::nullopt;
}

std::optional<LinearIntegrator> parse_linear(std::string_view s) noexcept {
  for (LinearIntegrator l :
       {LinearIntegrator::imp, LinearIntegrator::expo, LinearIntegrator::exact, LinearIntegrator::identity}) {
    if (s == to_string(l)) return l;
  }
  return std::nullopt;
}

void SchemeSpec::validate() const {
  if (!(dt > 0.0 && dt < 1.0)) {
    throw std::invalid_argument("SchemeSpec: dt must lie in (0, 1), got " + std::to_string(dt));
  }
  if (linear == LinearIntegrator::exact && method != Method::m1) {
    throw std::invalid_argument("SchemeSpec: the exact linear integrator is only defined for method m1");
  }
  if (m1_as_printed && method != Method::m1) {
    throw std::invalid_argument("SchemeSpec: m1_as_printed requires method m1");
  }
}

Stepper::Stepper(const DiscreteOperator& op, SchemeSpec spec)
    : op_(op), spec_(spec), flow_full_(spec.dt > 0.0 ? spec.dt : 0.0), flow_half_(spec.dt > 0.0 ? spec.dt / 2 : 0.0) {
  spec_.validate();
  switch (spec_.linear) {
    case LinearIntegrator::imp:
      imp_full_.emplace(op_.mesh(), spec_.dt);
      imp_half_.emplace(op_.mesh(), spec_.dt / 2);
      break;
    case LinearIntegrator::expo:
    case LinearIntegrator::exact:
      expo_full_.emplace(op_, spec_.dt);
      expo_half_.emplace(op_, spec_.dt / 2);
      break;
    case LinearIntegrator::identity:
      break;
  }
}

void Stepper::apply_linear(std::span<double> x, const std::optional<ResolventSolver>& imp,
                           const std::optional<SemigroupFactors>& expo) const {
  if (imp) {
    imp->solve_in_place(x);
  } else if (expo) {
    std::vector<double> scratch(x.size());
    expo->apply_in_place(op_, x, scratch);
  }
}

void Stepper::linear_full(std::span<double> x) const { apply_linear(x, imp_full_, expo_full_); }
void Stepper::linear_half(std::span<double> x) const { apply_linear(x, imp_half_, expo_half_); }

void Stepper::nonlinear(const FlowParams& p, std::span<double> x) const {
  if (spec_.reaction) phi_in_place(p, x);
}

void Stepper::check_increment(const IncrementBlock& dw) const {
  const IncrementKind expected =
      spec_.linear == LinearIntegrator::exact ? IncrementKind::convolution_modes : IncrementKind::nodal;
  if (dw.kind != expected) throw std::invalid_argument("Stepper: increment kind does not match the integrator");
  if (std::abs(dw.span - spec_.dt) > 1e-12 * spec_.dt) {
    throw std::invalid_argument("Stepper: increment spans " + std::to_string(dw.span) + ", step is " +
                                std::to_string(spec_.dt));
  }
  if (!(dw.values.mesh() == op_.mesh())) throw std::invalid_argument("Stepper: increment mesh mismatch");
}

void Stepper::finish(StepState& s) const {
  ++s.n;
  const double sup = norm_e(s.x);
  if (!(sup <= kOverflowGuard)) s.blown_up = true;
}

void Stepper::do_m1(StepState& s, const IncrementBlock& dw) const {
  auto x = s.x.values();
  const auto noise = dw.values.values();
  if (!spec_.m1_as_printed) nonlinear(flow_full_, x);
  if (spec_.linear == LinearIntegrator::exact) {
    // e^{dt A} y + stochastic convolution, assembled in mode space
    std::vector<double> modes(x.size());
    op_.forward(x, modes);
    const auto damping = expo_full_->damping();
    for (std::size_t k = 0; k < modes.size(); ++k) modes[k] = damping[k] * modes[k] + noise[k];
    op_.inverse(modes, x);
    return;
  }
  for (std::size_t i = 0; i < x.size(); ++i) x[i] += noise[i];
  linear_full(x);
}

void Stepper::do_m2(StepState& s, const IncrementBlock& dw) const {
  auto x = s.x.values();
  const auto noise = dw.values.values();
  linear_half(x);
  nonlinear(flow_full_, x);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] += noise[i];
  linear_half(x);
}

void Stepper::do_m3(StepState& s, const IncrementBlock& dw) const {
  auto x = s.x.values();
  const auto noise = dw.values.values();
  for (std::size_t i = 0; i < x.size(); ++i) x[i] += 0.5 * noise[i];
  linear_half(x);
  nonlinear(flow_full_, x);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] += 0.5 * noise[i];
  linear_half(x);
}

void Stepper::do_strang(StepState& s, const IncrementBlock& dw) const {
  auto x = s.x.values();
  const auto noise = dw.values.values();
  nonlinear(flow_half_, x);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] += noise[i];
  linear_full(x);
  nonlinear(flow_half_, x);
}

void Stepper::advance(StepState& s, const IncrementBlock& dw) const {
  if (s.blown_up) return;
  check_increment(dw);
  switch (spec_.method) {
    case Method::m1: do_m1(s, dw); break;
    case Method::m2: do_m2(s, dw); break;
    case Method::m3: do_m3(s, dw); break;
    case Method::strang: do_strang(s, dw); break;
  }
  finish(s);
}

StepState Stepper::step(StepState s, const IncrementBlock& dw) const {
  advance(s, dw);
  return s;
}

namespace {

void require_method(const SchemeSpec& spec, Method m) {
  if (spec.method != m) {
    throw std::invalid_argument("Stepper: spec selects " + std::string(to_string(spec.method)) + ", called " +
                                std::string(to_string(m)));
  }
}

}  // namespace

StepState Stepper::step_m1(StepState s, const IncrementBlock& dw) const {
  require_method(spec_, Method::m1);
  return step(std::move(s), dw);
}

StepState Stepper::step_m2(StepState s, const IncrementBlock& dw) const {
  require_method(spec_, Method::m2);
  return step(std::move(s), dw);
}

StepState Stepper::step_m3(StepState s, const IncrementBlock& dw) const {
  require_method(spec_, Method::m3);
  return step(std::move(s), dw);
}

StepState Stepper::step_strang(StepState s, const IncrementBlock& dw) const {
  require_method(spec_, Method::strang);
  return step(std::move(s), dw);
}

std::uint64_t step_count(double T, double dt) {
  if (!(dt > 0.0) || !(T >= 0.0)) throw std::invalid_argument("step_count: need T >= 0 and dt > 0");
  return static_cast<std::uint64_t>(std::floor(T / dt * (1.0 + 1e-12)));
}

TrajectoryStats run_trajectory(const Stepper& stepper, const GridFunction& x0, const NoisePlan& plan, double T,
                               const TrajectoryOptions& options) {
  const double dt = stepper.spec().dt;
  const unsigned level = plan.level_for(dt);
  const bool modal = stepper.spec().linear == LinearIntegrator::exact;
  const std::uint64_t n_steps = step_count(T, dt);

  std::vector<double> pending = options.snapshot_times;
  std::sort(pending.begin(), pending.end());
  auto next_snapshot = pending.begin();

  TrajectoryStats stats{x0, norm_e(x0), norm_h(x0), false, 0, {}};
  StepState state{x0, 0, !(stats.sup_e <= kOverflowGuard)};

  auto take_snapshots = [&](std::uint64_t n) {
    const double t = static_cast<double>(n) * dt;
    while (next_snapshot != pending.end() && t >= *next_snapshot - 1e-12 * std::max(1.0, *next_snapshot)) {
      stats.snapshots.push_back({*next_snapshot, state.x});
      ++next_snapshot;
    }
  };
  take_snapshots(0);

  for (std::uint64_t n = 0; n < n_steps && !state.blown_up; ++n) {
    IncrementBlock dw = modal ? plan.convolution(stepper.op(), level, n) : plan.increment(level, n);
    if (options.noise_scale != 1.0) dw.values *= options.noise_scale;
    stepper.advance(state, dw);
    stats.sup_e = std::max(stats.sup_e, norm_e(state.x));
    stats.sup_h = std::max(stats.sup_h, norm_h(state.x));
    take_snapshots(state.n);
  }

  stats.blown_up = state.blown_up;
  if (stats.blown_up) stats.sup_e = std::numeric_limits<double>::infinity();
  stats.steps = state.n;
  stats.terminal = std::move(state.x);
  return stats;
}

}  // namespace splitac
