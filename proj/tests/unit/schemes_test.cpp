#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "splitac/experiments.hpp"
#include "splitac/schemes.hpp"

namespace splitac {
namespace {

IncrementBlock nodal_block(const Mesh& mesh, double dt, std::vector<double> values) {
  return {IncrementKind::nodal, 0, 0, dt, GridFunction(mesh, std::move(values))};
}

IncrementBlock zero_block(const Mesh& mesh, double dt) {
  return {IncrementKind::nodal, 0, 0, dt, GridFunction(mesh)};
}

GridFunction random_field(const Mesh& mesh, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  GridFunction x(mesh);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = normal(rng);
  return x;
}

double max_abs_diff(const GridFunction& a, const GridFunction& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

double scalar_step(Method m, double x, double dw) {
  const DiscreteOperator op(Mesh(1));
  const Stepper stepper(op, {m, LinearIntegrator::imp, 0.1});
  StepState s{GridFunction(op.mesh(), {x}), 0, false};
  stepper.advance(s, nodal_block(op.mesh(), 0.1, {dw}));
  EXPECT_EQ(s.n, 1u);
  return s.x[0];
}

TEST(SchemeSpec, Validation) {
  EXPECT_THROW((SchemeSpec{Method::m1, LinearIntegrator::imp, 0.0}).validate(), std::invalid_argument);
  EXPECT_THROW((SchemeSpec{Method::m1, LinearIntegrator::imp, 1.0}).validate(), std::invalid_argument);
  EXPECT_THROW((SchemeSpec{Method::m2, LinearIntegrator::exact, 0.1}).validate(), std::invalid_argument);
  EXPECT_THROW((SchemeSpec{Method::m3, LinearIntegrator::imp, 0.1, true, true}).validate(), std::invalid_argument);
  EXPECT_NO_THROW((SchemeSpec{Method::m1, LinearIntegrator::exact, 0.1}).validate());
  EXPECT_EQ(parse_method("strang"), Method::strang);
  EXPECT_EQ(parse_linear("expo"), LinearIntegrator::expo);
  EXPECT_FALSE(parse_method("m4").has_value());
}

TEST(Schemes, ScalarValuesImplicit) {
  // one interior node: dx = 1/2, lambda = 8, so S_0.1 = 1/1.8 and S_0.05 = 1/1.4
  EXPECT_NEAR(phi(FlowParams(0.1), 2.0), 1.6096571705090292, 1e-14);
  EXPECT_NEAR(scalar_step(Method::m1, 2.0, 0.0), 0.8942539836161274, 1e-14);
  EXPECT_NEAR(scalar_step(Method::m1, 2.0, 0.0), phi(FlowParams(0.1), 2.0) / 1.8, 1e-15);

  EXPECT_NEAR(scalar_step(Method::m2, 2.0, 0.0), 0.9359305860782121, 1e-14);
  EXPECT_NEAR(scalar_step(Method::m2, 2.0, 0.0), phi(FlowParams(0.1), 2.0 / 1.4) / 1.4, 1e-15);

  EXPECT_NEAR(scalar_step(Method::m3, 2.0, 0.5), 1.1904969529659881, 1e-14);
  EXPECT_NEAR(scalar_step(Method::m3, 2.0, 0.5), (phi(FlowParams(0.1), 2.25 / 1.4) + 0.25) / 1.4, 1e-15);

  EXPECT_NEAR(scalar_step(Method::strang, 1.0, 0.0), 0.5747851877946232, 1e-14);
  EXPECT_NEAR(scalar_step(Method::strang, 1.0, 0.0),
              phi(FlowParams(0.05), phi(FlowParams(0.05), 1.0) / 1.8), 1e-15);
}

TEST(Schemes, ZeroIsFixed) {
  const DiscreteOperator op(Mesh(31));
  for (Method m : {Method::m1, Method::m2, Method::m3, Method::strang}) {
    for (LinearIntegrator l : {LinearIntegrator::imp, LinearIntegrator::expo}) {
      const Stepper stepper(op, {m, l, 1.0 / 64});
      const StepState s = stepper.step({GridFunction(op.mesh()), 0, false}, zero_block(op.mesh(), 1.0 / 64));
      EXPECT_EQ(norm_e(s.x), 0.0);
      EXPECT_FALSE(s.blown_up);
    }
  }
  const Stepper exact(op, {Method::m1, LinearIntegrator::exact, 1.0 / 64});
  IncrementBlock modes = zero_block(op.mesh(), 1.0 / 64);
  modes.kind = IncrementKind::convolution_modes;
  EXPECT_EQ(norm_e(exact.step({GridFunction(op.mesh()), 0, false}, modes).x), 0.0);
}

TEST(Schemes, EquilibriaOfSubsteps) {
  const DiscreteOperator op(Mesh(15));
  GridFunction ones(op.mesh());
  for (double& v : ones.values()) v = 1.0;
  const GridFunction after_phi = phi_grid(FlowParams(0.1), ones);
  EXPECT_LE(max_abs_diff(after_phi, ones), 1e-15);
  const Stepper stepper(op, {Method::m1, LinearIntegrator::imp, 0.1});
  GridFunction y = ones;
  stepper.linear_full(y.values());
  EXPECT_LT(norm_e(y), 1.0);
  EXPECT_GT(y[7], 0.0);
}

TEST(Schemes, NoiseEntersLinearly) {
  std::mt19937_64 rng(41);
  const DiscreteOperator op(Mesh(63));
  const double dt = 1.0 / 32;
  for (LinearIntegrator l : {LinearIntegrator::imp, LinearIntegrator::expo}) {
    for (Method m : {Method::m1, Method::m2}) {
      const Stepper stepper(op, {m, l, dt});
      const GridFunction x = random_field(op.mesh(), rng);
      IncrementBlock dw = zero_block(op.mesh(), dt);
      dw.values = random_field(op.mesh(), rng, 0.2);
      const GridFunction with = stepper.step({x, 0, false}, dw).x;
      const GridFunction without = stepper.step({x, 0, false}, zero_block(op.mesh(), dt)).x;
      GridFunction expected = dw.values;
      if (m == Method::m1) {
        stepper.linear_full(expected.values());
      } else {
        stepper.linear_half(expected.values());
      }
      EXPECT_LE(max_abs_diff(with - without, expected), 1e-12) << to_string(m) << " " << to_string(l);
    }
  }
}

TEST(Schemes, AuxiliaryEquationForm) {
  // X' = S X + dt S psi(X) + S dW for method 1 with the implicit step
  std::mt19937_64 rng(42);
  const DiscreteOperator op(Mesh(63));
  for (double dt : {1.0 / 16, 1.0 / 256}) {
    const Stepper stepper(op, {Method::m1, LinearIntegrator::imp, dt});
    const FlowParams p(dt);
    const GridFunction x = random_field(op.mesh(), rng, 1.5);
    IncrementBlock dw = zero_block(op.mesh(), dt);
    dw.values = random_field(op.mesh(), rng, 0.3);
    GridFunction rhs = x;
    for (std::size_t i = 0; i < x.size(); ++i) rhs[i] += dt * psi(p, x[i]) + dw.values[i];
    const GridFunction expected = solve_resolvent(op, dt, rhs);
    EXPECT_LE(max_abs_diff(stepper.step({x, 0, false}, dw).x, expected), 1e-12);
  }
}

TEST(Schemes, Method3WithoutReaction) {
  std::mt19937_64 rng(43);
  const DiscreteOperator op(Mesh(40));
  const double dt = 0.05;
  for (LinearIntegrator l : {LinearIntegrator::imp, LinearIntegrator::expo}) {
    const Stepper stepper(op, {Method::m3, l, dt, false});
    const GridFunction x = random_field(op.mesh(), rng);
    IncrementBlock dw = zero_block(op.mesh(), dt);
    dw.values = random_field(op.mesh(), rng);
    GridFunction a = x + 0.5 * dw.values;
    stepper.linear_half(a.values());
    stepper.linear_half(a.values());
    GridFunction b = 0.5 * dw.values;
    stepper.linear_half(b.values());
    EXPECT_LE(max_abs_diff(stepper.step({x, 0, false}, dw).x, a + b), 1e-12);
  }
}

TEST(Schemes, StrangWithIdentityLinearIsFlow) {
  std::mt19937_64 rng(44);
  const DiscreteOperator op(Mesh(20));
  const double dt = 0.3;
  const Stepper stepper(op, {Method::strang, LinearIntegrator::identity, dt});
  const GridFunction x = random_field(op.mesh(), rng, 3.0);
  const GridFunction out = stepper.step({x, 0, false}, zero_block(op.mesh(), dt)).x;
  const GridFunction expected = phi_grid(FlowParams(dt), x);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(out[i], expected[i], 1e-12 * std::abs(expected[i]));
}

TEST(Schemes, AsPrintedVariantSkipsReaction) {
  std::mt19937_64 rng(45);
  const DiscreteOperator op(Mesh(20));
  const Stepper printed(op, {Method::m1, LinearIntegrator::imp, 0.1, true, true});
  const Stepper linear(op, {Method::m1, LinearIntegrator::imp, 0.1, false});
  const GridFunction x = random_field(op.mesh(), rng, 2.0);
  EXPECT_EQ(max_abs_diff(printed.step({x, 0, false}, zero_block(op.mesh(), 0.1)).x,
                         linear.step({x, 0, false}, zero_block(op.mesh(), 0.1)).x),
            0.0);
}

TEST(Schemes, ExactAgreesWithExponentialWithoutNoise) {
  std::mt19937_64 rng(46);
  const DiscreteOperator op(Mesh(63));
  const double dt = 1.0 / 64;
  const Stepper exact(op, {Method::m1, LinearIntegrator::exact, dt});
  const Stepper expo(op, {Method::m1, LinearIntegrator::expo, dt});
  const GridFunction x = random_field(op.mesh(), rng);
  IncrementBlock modes = zero_block(op.mesh(), dt);
  modes.kind = IncrementKind::convolution_modes;
  EXPECT_LE(max_abs_diff(exact.step({x, 0, false}, modes).x, expo.step({x, 0, false}, zero_block(op.mesh(), dt)).x),
            1e-12);
  EXPECT_THROW((void)exact.step({x, 0, false}, zero_block(op.mesh(), dt)), std::invalid_argument);
}

TEST(Schemes, RejectsMismatchedIncrement) {
  const DiscreteOperator op(Mesh(8));
  const Stepper stepper(op, {Method::m2, LinearIntegrator::imp, 0.1});
  const StepState s{GridFunction(op.mesh()), 0, false};
  EXPECT_THROW((void)stepper.step(s, zero_block(op.mesh(), 0.05)), std::invalid_argument);
  EXPECT_THROW((void)stepper.step(s, zero_block(Mesh(9), 0.1)), std::invalid_argument);
  EXPECT_THROW((void)stepper.step_m1(s, zero_block(op.mesh(), 0.1)), std::invalid_argument);
  EXPECT_NO_THROW((void)stepper.step_m2(s, zero_block(op.mesh(), 0.1)));
}

TEST(Schemes, BlowUpIsRecordedNotThrown) {
  const DiscreteOperator op(Mesh(4));
  const Stepper stepper(op, {Method::m1, LinearIntegrator::imp, 0.1, false});
  StepState s{GridFunction(op.mesh()), 0, false};
  stepper.advance(s, nodal_block(op.mesh(), 0.1, {1e12, 0.0, 0.0, 0.0}));
  EXPECT_TRUE(s.blown_up);
  const GridFunction frozen = s.x;
  stepper.advance(s, nodal_block(op.mesh(), 0.1, {1.0, 1.0, 1.0, 1.0}));
  EXPECT_EQ(s.n, 1u);
  EXPECT_EQ(max_abs_diff(s.x, frozen), 0.0);

  StepState nan_state{GridFunction(op.mesh()), 0, false};
  stepper.advance(nan_state, nodal_block(op.mesh(), 0.1, {std::nan(""), 0.0, 0.0, 0.0}));
  EXPECT_TRUE(nan_state.blown_up);

  StepState inf_state{GridFunction(op.mesh()), 0, false};
  const Stepper reacting(op, {Method::strang, LinearIntegrator::expo, 0.1});
  const double inf = std::numeric_limits<double>::infinity();
  EXPECT_NO_THROW(reacting.advance(inf_state, nodal_block(op.mesh(), 0.1, {inf, 0.0, 0.0, 0.0})));
  EXPECT_TRUE(inf_state.blown_up);
}

// Method of lines for the deterministic equation, classical RK4 with a small step.
GridFunction deterministic_reference(const DiscreteOperator& op, GridFunction x, double T, double h) {
  auto f = [&](const GridFunction& u) {
    GridFunction r = apply_laplacian(op, u);
    for (std::size_t i = 0; i < u.size(); ++i) r[i] += reaction(u[i]);
    return r;
  };
  const auto steps = static_cast<std::size_t>(std::llround(T / h));
  for (std::size_t n = 0; n < steps; ++n) {
    const GridFunction k1 = f(x);
    const GridFunction k2 = f(x + (0.5 * h) * k1);
    const GridFunction k3 = f(x + (0.5 * h) * k2);
    const GridFunction k4 = f(x + h * k3);
    x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return x;
}

TEST(Schemes, DeterministicLimitFirstOrder) {
  const DiscreteOperator op(Mesh(31));
  const double T = 0.25;
  const GridFunction x0 = 3.0 * discrete_eigenvector(op.mesh(), 1);
  const GridFunction ref = deterministic_reference(op, x0, T, 1e-5);
  const NoisePlan plan(1, 0, op.mesh(), 1.0 / 1024, 6);
  TrajectoryOptions quiet;
  quiet.noise_scale = 0.0;
  for (Method m : {Method::m1, Method::m2, Method::m3, Method::strang}) {
    double prev = 0.0;
    for (int k = 5; k <= 10; ++k) {
      const double dt = std::ldexp(1.0, -k);
      const Stepper stepper(op, {m, LinearIntegrator::imp, dt});
      const auto stats = run_trajectory(stepper, x0, plan, T, quiet);
      const double err = norm_e(stats.terminal - ref);
      if (prev > 0.0) {
        EXPECT_GT(prev / err, 1.6) << to_string(m) << " dt=" << dt;
        EXPECT_LT(prev / err, 2.6) << to_string(m) << " dt=" << dt;
      }
      prev = err;
    }
    EXPECT_LT(prev, 5e-3) << to_string(m);
  }
}

TEST(Trajectory, HorizonShorterThanStep) {
  const DiscreteOperator op(Mesh(7));
  const Stepper stepper(op, {Method::m1, LinearIntegrator::imp, 0.25});
  const NoisePlan plan(2, 0, op.mesh(), 0.25, 1);
  const GridFunction x0 = discrete_eigenvector(op.mesh(), 2);
  const auto stats = run_trajectory(stepper, x0, plan, 0.2);
  EXPECT_EQ(stats.steps, 0u);
  EXPECT_EQ(max_abs_diff(stats.terminal, x0), 0.0);
  EXPECT_DOUBLE_EQ(stats.sup_e, norm_e(x0));
}

TEST(Trajectory, QuietStartStaysAtZero) {
  const DiscreteOperator op(Mesh(31));
  const Stepper stepper(op, {Method::m3, LinearIntegrator::expo, 1.0 / 32});
  const NoisePlan plan(3, 0, op.mesh(), 1.0 / 32, 1);
  TrajectoryOptions quiet;
  quiet.noise_scale = 0.0;
  const auto stats = run_trajectory(stepper, GridFunction(op.mesh()), plan, 1.0, quiet);
  EXPECT_EQ(stats.steps, 32u);
  EXPECT_EQ(norm_e(stats.terminal), 0.0);
  EXPECT_EQ(stats.sup_e, 0.0);
  EXPECT_EQ(stats.sup_h, 0.0);
}

TEST(Trajectory, StepCountAndSnapshots) {
  EXPECT_EQ(step_count(1.0, 1.0 / 512), 512u);
  EXPECT_EQ(step_count(1.0, 0.3), 3u);
  EXPECT_EQ(step_count(0.0, 0.1), 0u);
  EXPECT_THROW((void)step_count(1.0, 0.0), std::invalid_argument);

  const DiscreteOperator op(Mesh(15));
  const Stepper stepper(op, {Method::m1, LinearIntegrator::imp, 1.0 / 16});
  const NoisePlan plan(4, 0, op.mesh(), 1.0 / 16, 1);
  TrajectoryOptions opt;
  opt.snapshot_times = {0.5, 0.0, 1.0};
  const auto stats = run_trajectory(stepper, GridFunction(op.mesh()), plan, 1.0, opt);
  ASSERT_EQ(stats.snapshots.size(), 3u);
  EXPECT_EQ(stats.snapshots[0].t, 0.0);
  EXPECT_EQ(stats.snapshots[1].t, 0.5);
  EXPECT_EQ(max_abs_diff(stats.snapshots[2].x, stats.terminal), 0.0);
  EXPECT_GE(stats.sup_e, norm_e(stats.snapshots[1].x));
}

TEST(Trajectory, CoarseLevelUsesSummedNoise) {
  // a linear scheme without reaction and S = I accumulates exactly the noise
  const DiscreteOperator op(Mesh(9));
  const NoisePlan plan(5, 1, op.mesh(), 1.0 / 64, 3);
  const Stepper coarse(op, {Method::m1, LinearIntegrator::identity, 1.0 / 16, false});
  const auto stats = run_trajectory(coarse, GridFunction(op.mesh()), plan, 0.5);
  GridFunction sum(op.mesh());
  for (std::uint64_t n = 0; n < 32; ++n) sum += plan.fine_increment(n).values;
  EXPECT_LE(max_abs_diff(stats.terminal, sum), 1e-13);
}

TEST(Trajectory, SecondMomentOfSupNormStaysBounded) {
  // At fixed dx the sup over a finer time grid picks up more of the rough
  // high modes, so the moment creeps up as dt shrinks; it must level off.
  ExperimentConfig cfg;
  cfg.mesh = Mesh(63);
  cfg.n_replicas = 300;
  cfg.scheme = {Method::m1, LinearIntegrator::imp, 0.0};
  std::vector<Estimate> values;
  for (int k = 4; k <= 9; ++k) {
    const Estimate e = sup_norm_second_moment(cfg, std::ldexp(1.0, -k));
    EXPECT_EQ(e.n_blowup, 0u);
    EXPECT_TRUE(std::isfinite(e.value));
    values.push_back(e);
  }
  for (std::size_t i = 1; i < values.size(); ++i) {
    const double growth = values[i].value / values[i - 1].value;
    EXPECT_LT(growth, 1.6) << i;
  }
  EXPECT_LT(values.back().value, 3.0 * values.front().value);
  EXPECT_LT(values.back().value, 2.0);
}

}  // namespace
}  // namespace splitac
