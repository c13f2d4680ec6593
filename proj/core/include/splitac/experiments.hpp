#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "splitac/grid.hpp"
#include "splitac/schemes.hpp"

namespace splitac {

enum class TestFunction {
  /// exp(-5 ||x||_H^2)
  exp_neg_5_h2,
  /// 1 everywhere (test hook: weak increments vanish identically)
  constant,
};

enum class InitialCondition {
  zero,
  /// amplitude * sin(pi x)
  sine,
  /// -amplitude on (0, 1/2), +amplitude on [1/2, 1)
  step,
};

std::string_view to_string(TestFunction f) noexcept;
std::string_view to_string(InitialCondition c) noexcept;
std::optional<TestFunction> parse_test_function(std::string_view s) noexcept;
std::optional<InitialCondition> parse_initial_condition(std::string_view s) noexcept;

struct ExperimentConfig {
  double T = 1.0;
  Mesh mesh{127};
  /// Decreasing time steps, each half the previous one.
  std::vector<double> dt_list;
  std::size_t n_replicas = 2000;
  /// Method and linear integrator; the dt field is ignored.
  SchemeSpec scheme;
  std::uint64_t master_seed = 1;
  TestFunction test_function = TestFunction::exp_neg_5_h2;
  std::optional<double> localization_M;
  InitialCondition initial = InitialCondition::zero;
  double initial_amplitude = 1.0;
  double noise_scale = 1.0;
  /// Worker threads; results do not depend on this value.
  unsigned threads = 1;

  void validate() const;
};

/// Raised when a convergence table does not support a slope fit.
class EstimationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

GridFunction make_initial(const ExperimentConfig& config);

/// Monte Carlo mean with its standard error. Blown-up replicas are excluded
/// and counted; the estimate is invalid when they exceed 1% of the replicas.
struct Estimate {
  double value = 0.0;
  double std_error = 0.0;
  std::size_t n_valid = 0;
  std::size_t n_blowup = 0;
  bool valid = true;
};

/// Per-replica outcome of one coarse (dt) / fine (dt/2) pair driven by the same
/// Brownian path.
struct CoupledSample {
  double sq_diff = 0.0;
  double phi_coarse = 0.0;
  double phi_fine = 0.0;
  double sup_e_coarse = 0.0;
  double sup_e_fine = 0.0;
  bool blown_up = false;
};

/// Noise stream used for the coupled pair at step dt. Distinct dt values map
/// to distinct streams, so different levels use independent paths.
std::uint32_t level_stream(double dt) noexcept;

/// Simulates every replica of the coupled pair at dt. Result i belongs to
/// replica i regardless of the number of threads.
std::vector<CoupledSample> simulate_coupled(const ExperimentConfig& config, double dt);

Estimate summarize_strong(std::span<const CoupledSample> samples);
Estimate summarize_weak(std::span<const CoupledSample> samples);

/// E || X_N^{(dt)} - X_{2N}^{(dt/2)} ||_H^2 on coupled paths.
Estimate strong_error(const ExperimentConfig& config, double dt);
/// E[phi(X_N^{(dt)})] - E[phi(X_{2N}^{(dt/2)})] on coupled paths.
Estimate weak_error_increment(const ExperimentConfig& config, double dt);
/// Sum of weak increments at dt, dt/2, ..., dt/2^{k-1}; errors combined in quadrature.
Estimate weak_error_telescoped(const ExperimentConfig& config, double dt, unsigned k_levels);
Estimate telescope(std::span<const Estimate> increments);

double evaluate_test_function(TestFunction f, const GridFunction& x);
inline double evaluate_test_function(const GridFunction& x) {
  return evaluate_test_function(TestFunction::exp_neg_5_h2, x);
}

struct ConvergenceRow {
  double dt = 0.0;
  Estimate estimate;
};

struct ConvergenceTable {
  std::vector<ConvergenceRow> rows;
  std::optional<double> slope;
  std::optional<double> half_width;
};

struct SlopeFit {
  double slope = 0.0;
  double half_width = 0.0;
  std::size_t rows_used = 0;
};

/// A row takes part in the fit when it is valid, nonzero and its standard
/// error is below 30% of |estimate|.
bool usable_for_fit(const ConvergenceRow& row) noexcept;

/// Least squares slope of log2|estimate| against log2(dt) with a 95%
/// half-width from the Student-t quantile. Throws EstimationError with fewer
/// than 3 usable rows.
SlopeFit fit_slope(const ConvergenceTable& table);

/// Strong and weak-increment tables over config.dt_list, with slope filled in
/// when a fit is possible.
ConvergenceTable strong_table(const ExperimentConfig& config);
ConvergenceTable weak_table(const ExperimentConfig& config);

struct LocalizationStats {
  double threshold = 0.0;
  /// Empirical P(sup_n |X_n|_E > M) for the coarse trajectory; blow-ups count as exceedances.
  double prob_exceed = 0.0;
  double prob_std_error = 0.0;
  /// Strong error with the indicator of {sup_n |X_n|_E <= M} inside the expectation.
  Estimate localized;
};

std::vector<LocalizationStats> localization_stats(const ExperimentConfig& config, double dt,
                                                  std::span<const double> thresholds);
LocalizationStats localization_stats(const ExperimentConfig& config, double dt, double threshold);

/// E[ sup_{0<=n<=N} |X_n|_E^2 ] from independent trajectories at step dt.
Estimate sup_norm_second_moment(const ExperimentConfig& config, double dt);

}  // namespace splitac
