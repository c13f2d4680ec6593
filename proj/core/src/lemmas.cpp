#include "splitac/lemmas.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "splitac/flows.hpp"

namespace splitac {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

class Sampler {
 public:
  Sampler(std::uint64_t seed, double z_max, double dt_max)
      : rng_(seed), z_max_(z_max), dt_max_(dt_max) {}

  // Half the draws are log-uniform in [1e-8 dt_max, dt_max) so that the small
  // step regime is well covered.
  double dt() {
    double t = 0.0;
    while (!(t > 0.0 && t < dt_max_)) {
      if (unit_(rng_) < 0.5) {
        t = dt_max_ * unit_(rng_);
      } else {
        t = dt_max_ * std::pow(10.0, -8.0 * unit_(rng_));
      }
    }
    return t;
  }

  // Mixture: uniform on [-z_max, z_max] and uniform on [-2, 2] where the
  // nonlinearity changes character.
  double z() {
    const double width = unit_(rng_) < 0.75 ? z_max_ : std::min(2.0, z_max_);
    return width * (2.0 * unit_(rng_) - 1.0);
  }

  // Second point: either independent or a small perturbation of the first.
  double z_pair(double z1) {
    if (unit_(rng_) < 0.5) return z();
    const double h = std::pow(10.0, -6.0 * unit_(rng_)) * (2.0 * unit_(rng_) - 1.0);
    return std::clamp(z1 + h, -z_max_, z_max_);
  }

 private:
  std::mt19937_64 rng_;
  std::uniform_real_distribution<double> unit_{0.0, 1.0};
  double z_max_;
  double dt_max_;
};

void record(LemmaCheck& check, double lhs, double rhs) {
  ++check.cases;
  if (lhs > rhs) ++check.violations;
  if (rhs > 0.0) check.worst_ratio = std::max(check.worst_ratio, lhs / rhs);
}

}  // namespace

bool LemmaReport::all_passed() const noexcept {
  return std::all_of(checks.begin(), checks.end(), [](const LemmaCheck& c) { return c.passed(); });
}

double error_psi_constant(double dt0) noexcept {
  const double a = 1.0 + std::exp(2.0 * dt0);
  return std::exp(dt0) * a * a;
}

LemmaReport run_lemma_suites(const LemmaSuiteOptions& options) {
  LemmaReport report;
  Sampler sample(options.seed, options.z_max, options.dt_max);

  const double lip_psi_c = 3.0 * std::exp(3.0 * options.dt_max);
  const double err_c = error_psi_constant(options.dt0);

  LemmaCheck lip_phi{"lip_phi", 0, 0, 0.0, 1.0};
  LemmaCheck one_sided{"one_sided_psi", 0, 0, 0.0, 1.0};
  LemmaCheck lip_psi{"lip_psi_local", 0, 0, 0.0, lip_psi_c};
  LemmaCheck psi_growth{"psi_growth", 0, 0, 0.0, lip_psi_c};
  LemmaCheck error_psi{"error_psi", 0, 0, 0.0, err_c};
  LemmaCheck semigroup{"phi_semigroup", 0, 0, 0.0, 1e-12};

  for (std::size_t i = 0; i < options.cases; ++i) {
    const double dt = sample.dt();
    const FlowParams p(dt);
    const double z1 = sample.z();
    const double z2 = sample.z_pair(z1);
    const double dz = z2 - z1;
    const double grow = std::exp(dt);

    // |phi(z2) - phi(z1)| <= e^dt |z2 - z1|; slack covers rounding of the two evaluations.
    const double f1 = phi(p, z1);
    const double f2 = phi(p, z2);
    record(lip_phi, std::abs(f2 - f1), grow * std::abs(dz) + 4.0 * kEps * (std::abs(f1) + std::abs(f2)));

    const double g1 = psi(p, z1);
    const double g2 = psi(p, z2);
    record(one_sided, (g2 - g1) * dz, grow * dz * dz + 1e-12);

    const double a1 = std::abs(z1);
    const double a2 = std::abs(z2);
    record(lip_psi, std::abs(g2 - g1), lip_psi_c * std::abs(dz) * (1.0 + a1 * a1 * a1 + a2 * a2 * a2));
    record(psi_growth, std::abs(g1), lip_psi_c * (1.0 + a1 * a1 * a1 * a1));

    const double z5 = a1 * a1 * a1 * a1 * a1;
    record(error_psi, std::abs(g1 - reaction(z1)), err_c * dt * (1.0 + z5));

    // phi_s(phi_t(z)) = phi_{s+t}(z), relative
    const double s = sample.dt();
    const double composed = phi(FlowParams(s), f1);
    const double direct = phi(FlowParams(s + dt), z1);
    record(semigroup, std::abs(composed - direct), 1e-12 * std::max(std::abs(direct), 1e-300));
  }

  // Empirical sup of the consistency ratio at dt0 alone, for reporting.
  const FlowParams p0(options.dt0);
  double sup = 0.0;
  constexpr int kGrid = 200001;
  for (int i = 0; i < kGrid; ++i) {
    const double z = options.z_max * (2.0 * i / (kGrid - 1) - 1.0);
    const double r = std::abs(psi(p0, z) - reaction(z)) / (options.dt0 * (1.0 + std::pow(std::abs(z), 5)));
    sup = std::max(sup, r);
  }
  report.error_psi_sup_at_dt0 = sup;

  report.checks = {lip_phi, one_sided, lip_psi, psi_growth, error_psi, semigroup};
  return report;
}

}  // namespace splitac
