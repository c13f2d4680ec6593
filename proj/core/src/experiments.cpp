#include "splitac/experiments.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <string>
#include <thread>

#include <boost/math/distributions/students_t.hpp>

#include "splitac/flows.hpp"
#include "splitac/noise.hpp"

namespace splitac {

namespace {

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

constexpr std::uint32_t kMomentSalt = 0x6d6f6d31u;

// Runs fn(i) for i in [0, n). Each index is handled by exactly one worker and
// writes only its own slot, so results do not depend on the worker count.
template <class Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn) {
  const std::size_t workers = std::min<std::size_t>(std::max(1u, threads), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::jthread> pool;
  std::vector<std::exception_ptr> errors(workers);
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < n; i += workers) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  pool.clear();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

// Mean and standard error of the selected values, in replica order.
Estimate mean_estimate(std::span<const CoupledSample> samples, double (*value)(const CoupledSample&)) {
  Estimate est;
  double sum = 0.0;
  for (const auto& s : samples) {
    if (s.blown_up) {
      ++est.n_blowup;
      continue;
    }
    sum += value(s);
    ++est.n_valid;
  }
  const std::size_t total = samples.size();
  est.valid = est.n_blowup * 100 <= total && est.n_valid >= 2;
  if (est.n_valid == 0) return est;
  est.value = sum / static_cast<double>(est.n_valid);
  double ss = 0.0;
  for (const auto& s : samples) {
    if (s.blown_up) continue;
    const double d = value(s) - est.value;
    ss += d * d;
  }
  if (est.n_valid > 1) {
    const auto n = static_cast<double>(est.n_valid);
    est.std_error = std::sqrt(ss / (n - 1.0) / n);
  }
  return est;
}

SchemeSpec with_dt(SchemeSpec spec, double dt) {
  spec.dt = dt;
  return spec;
}

}  // namespace

std::string_view to_string(TestFunction f) noexcept {
  switch (f) {
    case TestFunction::exp_neg_5_h2: return "exp_neg_5_h2";
    case TestFunction::constant: return "constant";
  }
  return "?";
}

std::string_view to_string(InitialCondition c) noexcept {
  switch (c) {
    case InitialCondition::zero: return "zero";
    case InitialCondition::sine: return "sine";
    case InitialCondition::step: return "step";
  }
  return "?";
}

std::optional<TestFunction> parse_test_function(std::string_view s) noexcept {
  for (auto f : {TestFunction::exp_neg_5_h2, TestFunction::constant}) {
    if (s == to_string(f)) return f;
  }
  return std::nullopt;
}

std::optional<InitialCondition> parse_initial_condition(std::string_view s) noexcept {
  for (auto c : {InitialCondition::zero, InitialCondition::sine, InitialCondition::step}) {
    if (s == to_string(c)) return c;
  }
  return std::nullopt;
}

void ExperimentConfig::validate() const {
  if (!(T > 0.0) || !std::isfinite(T)) throw std::invalid_argument("ExperimentConfig: T must be positive");
  if (n_replicas < 2) throw std::invalid_argument("ExperimentConfig: n_replicas must be >= 2");
  if (n_replicas > std::numeric_limits<std::uint32_t>::max()) {
    throw std::invalid_argument("ExperimentConfig: n_replicas exceeds the replica id range");
  }
  for (std::size_t i = 0; i < dt_list.size(); ++i) {
    const double dt = dt_list[i];
    if (!(dt > 0.0 && dt < 1.0)) throw std::invalid_argument("ExperimentConfig: dt values must lie in (0, 1)");
    if (i > 0 && std::abs(dt_list[i - 1] - 2.0 * dt) > 1e-12 * dt_list[i - 1]) {
      throw std::invalid_argument("ExperimentConfig: dt_list must halve at every entry");
    }
  }
  if (localization_M && !(*localization_M > 0.0)) {
    throw std::invalid_argument("ExperimentConfig: localization_M must be positive");
  }
  if (!(noise_scale >= 0.0) || !std::isfinite(initial_amplitude)) {
    throw std::invalid_argument("ExperimentConfig: invalid noise_scale or initial_amplitude");
  }
  if (threads == 0) throw std::invalid_argument("ExperimentConfig: threads must be >= 1");
  with_dt(scheme, 0.5).validate();
}

GridFunction make_initial(const ExperimentConfig& config) {
  const Mesh& mesh = config.mesh;
  GridFunction x(mesh);
  switch (config.initial) {
    case InitialCondition::zero:
      break;
    case InitialCondition::sine:
      x = discrete_eigenvector(mesh, 1);
      x *= config.initial_amplitude;
      break;
    case InitialCondition::step:
      for (std::size_t i = 0; i < x.size(); ++i) {
        x[i] = mesh.node(i + 1) < 0.5 ? -config.initial_amplitude : config.initial_amplitude;
      }
      break;
  }
  return x;
}

double evaluate_test_function(TestFunction f, const GridFunction& x) {
  switch (f) {
    case TestFunction::exp_neg_5_h2: {
      const double h = norm_h(x);
      return std::exp(-5.0 * h * h);
    }
    case TestFunction::constant:
      return 1.0;
  }
  return 0.0;
}

std::uint32_t level_stream(double dt) noexcept {
  return static_cast<std::uint32_t>(splitmix64(std::bit_cast<std::uint64_t>(dt)));
}

std::vector<CoupledSample> simulate_coupled(const ExperimentConfig& config, double dt) {
  config.validate();
  const DiscreteOperator op(config.mesh);
  const Stepper coarse(op, with_dt(config.scheme, dt));
  const Stepper fine(op, with_dt(config.scheme, dt / 2));
  const bool modal = config.scheme.linear == LinearIntegrator::exact;
  const GridFunction x0 = make_initial(config);
  const std::uint64_t n_steps = step_count(config.T, dt);
  const std::uint32_t stream = level_stream(dt);

  std::vector<CoupledSample> out(config.n_replicas);
  parallel_for(config.n_replicas, config.threads, [&](std::size_t r) {
    const NoisePlan plan(config.master_seed, static_cast<std::uint32_t>(r), config.mesh, dt / 2, 2, stream);
    StepState xc{x0, 0, false};
    StepState xf{x0, 0, false};
    CoupledSample s;
    s.sup_e_coarse = s.sup_e_fine = norm_e(x0);
    for (std::uint64_t n = 0; n < n_steps; ++n) {
      IncrementBlock a = modal ? plan.fine_convolution(op, 2 * n) : plan.fine_increment(2 * n);
      IncrementBlock b = modal ? plan.fine_convolution(op, 2 * n + 1) : plan.fine_increment(2 * n + 1);
      if (config.noise_scale != 1.0) {
        a.values *= config.noise_scale;
        b.values *= config.noise_scale;
      }
      fine.advance(xf, a);
      s.sup_e_fine = std::max(s.sup_e_fine, norm_e(xf.x));
      fine.advance(xf, b);
      s.sup_e_fine = std::max(s.sup_e_fine, norm_e(xf.x));
      coarse.advance(xc, modal ? coarsen(op, a, b) : coarsen(a, b));
      s.sup_e_coarse = std::max(s.sup_e_coarse, norm_e(xc.x));
      if (xc.blown_up || xf.blown_up) break;
    }
    s.blown_up = xc.blown_up || xf.blown_up;
    if (!s.blown_up) {
      const double d = norm_h(xc.x - xf.x);
      s.sq_diff = d * d;
      s.phi_coarse = evaluate_test_function(config.test_function, xc.x);
      s.phi_fine = evaluate_test_function(config.test_function, xf.x);
    } else {
      s.sup_e_coarse = std::numeric_limits<double>::infinity();
    }
    out[r] = s;
  });
  return out;
}

Estimate summarize_strong(std::span<const CoupledSample> samples) {
  return mean_estimate(samples, [](const CoupledSample& s) { return s.sq_diff; });
}

Estimate summarize_weak(std::span<const CoupledSample> samples) {
  return mean_estimate(samples, [](const CoupledSample& s) { return s.phi_coarse - s.phi_fine; });
}

Estimate strong_error(const ExperimentConfig& config, double dt) {
  return summarize_strong(simulate_coupled(config, dt));
}

Estimate weak_error_increment(const ExperimentConfig& config, double dt) {
  return summarize_weak(simulate_coupled(config, dt));
}

Estimate telescope(std::span<const Estimate> increments) {
  Estimate total;
  double var = 0.0;
  for (const auto& inc : increments) {
    total.value += inc.value;
    var += inc.std_error * inc.std_error;
    total.n_valid += inc.n_valid;
    total.n_blowup += inc.n_blowup;
    total.valid = total.valid && inc.valid;
  }
  total.std_error = std::sqrt(var);
  return total;
}

Estimate weak_error_telescoped(const ExperimentConfig& config, double dt, unsigned k_levels) {
  if (k_levels < 1) throw std::invalid_argument("weak_error_telescoped: k_levels must be >= 1");
  std::vector<Estimate> increments;
  double h = dt;
  for (unsigned k = 0; k < k_levels; ++k, h /= 2) increments.push_back(weak_error_increment(config, h));
  return telescope(increments);
}

bool usable_for_fit(const ConvergenceRow& row) noexcept {
  const double v = std::abs(row.estimate.value);
  return row.estimate.valid && v > 0.0 && std::isfinite(v) && row.estimate.std_error < 0.3 * v;
}

SlopeFit fit_slope(const ConvergenceTable& table) {
  std::vector<double> xs, ys;
  for (const auto& row : table.rows) {
    if (!usable_for_fit(row)) continue;
    xs.push_back(std::log2(row.dt));
    ys.push_back(std::log2(std::abs(row.estimate.value)));
  }
  const std::size_t n = xs.size();
  if (n < 3) {
    throw EstimationError("fit_slope: need at least 3 usable rows, have " + std::to_string(n));
  }
  const double nd = static_cast<double>(n);
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= nd;
  my /= nd;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  if (!(sxx > 0.0)) throw EstimationError("fit_slope: dt values are not distinct");
  SlopeFit fit;
  fit.slope = sxy / sxx;
  fit.rows_used = n;
  const double intercept = my - fit.slope * mx;
  double ssr = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = ys[i] - (intercept + fit.slope * xs[i]);
    ssr += r * r;
  }
  const double se = std::sqrt(ssr / (nd - 2.0) / sxx);
  const boost::math::students_t dist(nd - 2.0);
  fit.half_width = boost::math::quantile(boost::math::complement(dist, 0.025)) * se;
  return fit;
}

namespace {

ConvergenceTable build_table(const ExperimentConfig& config, Estimate (*summarize)(std::span<const CoupledSample>)) {
  config.validate();
  ConvergenceTable table;
  for (double dt : config.dt_list) table.rows.push_back({dt, summarize(simulate_coupled(config, dt))});
  try {
    const SlopeFit fit = fit_slope(table);
    table.slope = fit.slope;
    table.half_width = fit.half_width;
  } catch (const EstimationError&) {
    // slope stays empty
  }
  return table;
}

}  // namespace

ConvergenceTable strong_table(const ExperimentConfig& config) { return build_table(config, &summarize_strong); }
ConvergenceTable weak_table(const ExperimentConfig& config) { return build_table(config, &summarize_weak); }

std::vector<LocalizationStats> localization_stats(const ExperimentConfig& config, double dt,
                                                  std::span<const double> thresholds) {
  for (double m : thresholds) {
    if (!(m > 0.0)) throw std::invalid_argument("localization_stats: threshold must be > 0");
  }
  const auto samples = simulate_coupled(config, dt);
  const auto n = static_cast<double>(samples.size());
  std::vector<LocalizationStats> out;
  for (double m : thresholds) {
    LocalizationStats st;
    st.threshold = m;
    std::size_t exceed = 0;
    std::vector<CoupledSample> masked(samples.begin(), samples.end());
    for (auto& s : masked) {
      if (!(s.sup_e_coarse <= m)) {
        ++exceed;
        // indicator of the localization event is zero on this replica
        s.sq_diff = 0.0;
        s.blown_up = false;
      }
    }
    st.prob_exceed = static_cast<double>(exceed) / n;
    st.prob_std_error = std::sqrt(st.prob_exceed * (1.0 - st.prob_exceed) / n);
    st.localized = summarize_strong(masked);
    out.push_back(st);
  }
  return out;
}

LocalizationStats localization_stats(const ExperimentConfig& config, double dt, double threshold) {
  const double m[] = {threshold};
  return localization_stats(config, dt, m).front();
}

Estimate sup_norm_second_moment(const ExperimentConfig& config, double dt) {
  config.validate();
  const DiscreteOperator op(config.mesh);
  const Stepper stepper(op, with_dt(config.scheme, dt));
  const GridFunction x0 = make_initial(config);
  const std::uint32_t stream = level_stream(dt) ^ kMomentSalt;
  TrajectoryOptions options;
  options.noise_scale = config.noise_scale;

  std::vector<CoupledSample> out(config.n_replicas);
  parallel_for(config.n_replicas, config.threads, [&](std::size_t r) {
    const NoisePlan plan(config.master_seed, static_cast<std::uint32_t>(r), config.mesh, dt, 1, stream);
    const TrajectoryStats tr = run_trajectory(stepper, x0, plan, config.T, options);
    CoupledSample s;
    s.blown_up = tr.blown_up;
    s.sq_diff = tr.sup_e * tr.sup_e;
    out[r] = s;
  });
  return summarize_strong(out);
}

}  // namespace splitac
