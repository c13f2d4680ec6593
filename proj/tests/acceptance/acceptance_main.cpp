// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.
// Usage: splitac_acceptance [criterion numbers...]   (default: all)

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

#include "cli.hpp"
#include "splitac/experiments.hpp"
#include "splitac/flows.hpp"
#include "splitac/lemmas.hpp"
#include "../support/oracles.hpp"

namespace fs = std::filesystem;
using namespace splitac;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

cli::RunConfig desk_config(const std::string& name) {
  return cli::load_config(fs::path(SPLITAC_CONFIG_DIR) / name);
}

std::vector<Method> three_methods() { return {Method::m1, Method::m2, Method::m3}; }

// 1: lemma suites over 10^6 randomized cases in under a minute
Outcome lemma_suites() {
  const auto t0 = std::chrono::steady_clock::now();
  LemmaSuiteOptions opt;
  opt.cases = 1'000'000;
  const LemmaReport report = run_lemma_suites(opt);
  const double secs = seconds_since(t0);
  Outcome out;
  out.pass = secs < 60.0;
  std::ostringstream d;
  for (const auto& c : report.checks) {
    if (c.name == "lip_phi" || c.name == "one_sided_psi" || c.name == "psi_growth" || c.name == "error_psi") {
      out.pass = out.pass && c.passed() && c.cases >= 1'000'000;
      d << c.name << " " << c.violations << "/" << c.cases << " worst=" << fmt("%.3g", c.worst_ratio) << "; ";
    }
  }
  d << "error_psi C(0.5)=" << fmt("%.4g", error_psi_constant(0.5))
    << " sup ratio at 0.5=" << fmt("%.4g", report.error_psi_sup_at_dt0) << "; " << fmt("%.1f s", secs);
  out.detail = d.str();
  return out;
}

// 2: flow semigroup on 10^5 triples and RK4 agreement at 100 points
Outcome flow_semigroup() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(31337);
  std::uniform_real_distribution<double> zd(-50.0, 50.0);
  std::uniform_real_distribution<double> td(0.0, 1.0);
  double worst_semigroup = 0.0;
  for (int i = 0; i < 100'000; ++i) {
    const double z = zd(rng), s = td(rng), t = td(rng);
    const double one = phi(FlowParams(s + t), z);
    const double two = phi(FlowParams(s), phi(FlowParams(t), z));
    if (one != 0.0) worst_semigroup = std::max(worst_semigroup, std::abs(two - one) / std::abs(one));
  }
  std::uniform_real_distribution<double> zs(-3.0, 3.0);
  double worst_rk4 = 0.0;
  for (int i = 0; i < 100; ++i) {
    const double z = zs(rng);
    const double t = 0.01 + 0.99 * td(rng);
    worst_rk4 = std::max(worst_rk4, std::abs(phi(FlowParams(t), z) - splitac::testing::rk4_reaction(z, t)));
  }
  const double secs = seconds_since(t0);
  return {worst_semigroup <= 1e-12 && worst_rk4 <= 1e-8 && secs < 60.0,
          "max rel semigroup defect " + fmt("%.3g", worst_semigroup) + ", max |phi - rk4| " +
              fmt("%.3g", worst_rk4) + "; " + fmt("%.1f s", secs)};
}

std::string table_line(const ConvergenceTable& t) {
  std::ostringstream d;
  d << "slope=" << (t.slope ? fmt("%.3f", *t.slope) : std::string("n/a"))
    << (t.half_width ? "+-" + fmt("%.3f", *t.half_width) : std::string());
  return d.str();
}

// 3: strong order for methods 1-3 with the implicit linear step
Outcome strong_order() {
  const auto t0 = std::chrono::steady_clock::now();
  cli::RunConfig rc = desk_config("desk_strong.cfg");
  Outcome out{true, ""};
  for (Method m : three_methods()) {
    rc.experiment.scheme.method = m;
    const ConvergenceTable t = strong_table(rc.experiment);
    std::size_t blowups = 0;
    for (const auto& row : t.rows) blowups += row.estimate.n_blowup;
    const bool ok = t.slope && *t.slope >= 0.35 && *t.slope <= 0.65 && blowups == 0;
    out.pass = out.pass && ok;
    out.detail += std::string(to_string(m)) + " " + table_line(t) + " blowups=" + std::to_string(blowups) + "; ";
  }
  out.detail += fmt("%.0f s", seconds_since(t0));
  return out;
}

// 4: weak order of the configured scheme (method 1) and non-inferiority of
// method 3 against it; the method 2 slope is reported only
Outcome weak_order() {
  const auto t0 = std::chrono::steady_clock::now();
  cli::RunConfig rc = desk_config("desk_weak.cfg");
  Outcome out{true, ""};
  std::vector<ConvergenceTable> tables;
  for (Method m : three_methods()) {
    rc.experiment.scheme.method = m;
    tables.push_back(weak_table(rc.experiment));
    out.detail += std::string(to_string(m)) + " " + table_line(tables.back()) + "; ";
  }
  const ConvergenceTable& m1 = tables[0];
  out.pass = m1.slope && *m1.slope >= 0.3 && *m1.slope <= 0.7;
  const ConvergenceTable& m3 = tables[2];
  std::size_t worse = 0;
  for (std::size_t i = 0; i < m1.rows.size(); ++i) {
    const Estimate& a = m1.rows[i].estimate;
    const Estimate& b = m3.rows[i].estimate;
    if (std::abs(b.value) > std::abs(a.value) + 3.0 * std::hypot(a.std_error, b.std_error)) ++worse;
  }
  out.pass = out.pass && worse == 0;
  out.detail += "m3 above m1 beyond 3 sigma at " + std::to_string(worse) + " of " + std::to_string(m1.rows.size()) +
                " steps; " + fmt("%.0f s", seconds_since(t0));
  return out;
}

double ks_distance(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / a.size() - static_cast<double>(j) / b.size()));
  }
  return d;
}

// 5: one-node mesh against a dense Euler-Maruyama reference of the same scalar SDE
Outcome scalar_oracle() {
  const auto t0 = std::chrono::steady_clock::now();
  constexpr std::size_t kSamples = 10'000;
  const Mesh mesh(1);
  const DiscreteOperator op(mesh);
  const double lambda = op.eigenvalues()[0];
  const double dt = std::ldexp(1.0, -8);
  const Stepper stepper(op, {Method::m1, LinearIntegrator::imp, dt});

  std::vector<double> scheme(kSamples);
  for (std::size_t r = 0; r < kSamples; ++r) {
    const NoisePlan plan(5150, static_cast<std::uint32_t>(r), mesh, dt, 1);
    scheme[r] = run_trajectory(stepper, GridFunction(mesh), plan, 1.0).terminal[0];
  }

  // dX = (-lambda X + X - X^3) dt + sqrt(1/dx) dW
  const double h = 1e-5;
  const auto steps = static_cast<std::size_t>(std::llround(1.0 / h));
  const double sd = std::sqrt(h / mesh.dx());
  std::mt19937_64 rng(8675309);
  std::normal_distribution<double> normal;
  std::vector<double> reference(kSamples);
  for (auto& v : reference) {
    double x = 0.0;
    for (std::size_t n = 0; n < steps; ++n) x += h * (-lambda * x + x - x * x * x) + sd * normal(rng);
    v = x;
  }

  const double d = ks_distance(scheme, reference);
  const double n = kSamples;
  const double critical = 1.628 * std::sqrt(2.0 / n);
  return {d < critical, "KS distance " + fmt("%.4f", d) + " vs 1% critical " + fmt("%.4f", critical) +
                            " (dt=2^-8, reference dt=1e-5); " + fmt("%.0f s", seconds_since(t0))};
}

// 6: E[sup_n |X_n|_E^2] across dt in {2^-5, 2^-6, 2^-7}
Outcome moment_stability() {
  const auto t0 = std::chrono::steady_clock::now();
  cli::RunConfig rc = desk_config("desk_strong.cfg");
  rc.experiment.n_replicas = 500;
  std::vector<double> values;
  std::string detail;
  std::size_t blowups = 0;
  for (int k = 5; k <= 7; ++k) {
    const Estimate e = sup_norm_second_moment(rc.experiment, std::ldexp(1.0, -k));
    values.push_back(e.value);
    blowups += e.n_blowup;
    detail += "2^-" + std::to_string(k) + ": " + fmt("%.4f", e.value) + "+-" + fmt("%.4f", e.std_error) + "; ";
  }
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  const double spread = (*hi - *lo) / *lo;
  return {spread < 0.2 && blowups == 0,
          detail + "spread " + fmt("%.1f%%", 100.0 * spread) + " (limit 20%); " + fmt("%.0f s", seconds_since(t0))};
}

// 7: P(sup |X|_E > M) decreasing over M in {3, 5, 8}, below 0.5% at M = 8
Outcome localization() {
  const auto t0 = std::chrono::steady_clock::now();
  cli::RunConfig rc = desk_config("desk_strong.cfg");
  const double ms[] = {3.0, 5.0, 8.0};
  bool ok = true;
  double worst_at_8 = 0.0;
  std::string detail;
  for (double dt : rc.experiment.dt_list) {
    const auto stats = localization_stats(rc.experiment, dt, ms);
    ok = ok && stats[1].prob_exceed <= stats[0].prob_exceed && stats[2].prob_exceed <= stats[1].prob_exceed;
    worst_at_8 = std::max(worst_at_8, stats[2].prob_exceed);
    if (dt == rc.experiment.dt_list.back()) {
      detail = "at dt=2^-9 P = " + fmt("%.4f", stats[0].prob_exceed) + ", " + fmt("%.4f", stats[1].prob_exceed) + ", " +
               fmt("%.4f", stats[2].prob_exceed) + "; ";
    }
  }
  ok = ok && worst_at_8 < 0.005;
  return {ok, detail + "max over dt at M=8 " + fmt("%.4f", worst_at_8) + "; " + fmt("%.0f s", seconds_since(t0))};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// 8: the criterion-3 command twice, one and four workers, identical CSV bytes
Outcome determinism() {
  const auto t0 = std::chrono::steady_clock::now();
  const fs::path dir = fs::temp_directory_path() / "splitac_acceptance_determinism";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::string base = slurp(fs::path(SPLITAC_CONFIG_DIR) / "desk_strong.cfg");
  std::vector<std::string> csv;
  int failures = 0;
  for (int threads : {1, 4}) {
    const fs::path cfg = dir / ("threads" + std::to_string(threads) + ".cfg");
    std::ofstream(cfg) << base << "threads = " << threads << "\n";
    const fs::path out = dir / ("out" + std::to_string(threads));
    const std::string cmd = std::string(SPLITAC_CLI_PATH) + " strong --config " + cfg.string() + " --out " +
                            out.string() + " --seed 4242 > /dev/null";
    const int rc = std::system(cmd.c_str());
    if (rc == -1 || WEXITSTATUS(rc) != 0) ++failures;
    csv.push_back(slurp(out / "strong.csv"));
  }
  fs::remove_all(dir);
  const bool same = !csv[0].empty() && csv[0] == csv[1];
  return {failures == 0 && same, std::string(same ? "strong.csv identical" : "strong.csv differs") + " for threads 1 and 4 (" +
                                     std::to_string(csv[0].size()) + " bytes); " + fmt("%.0f s", seconds_since(t0))};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"lemma suites", lemma_suites},
      {"flow semigroup and RK4 oracle", flow_semigroup},
      {"strong order, methods 1-3", strong_order},
      {"weak order, methods 1-3", weak_order},
      {"scalar SDE distribution", scalar_oracle},
      {"sup-norm moment stability", moment_stability},
      {"localization probability", localization},
      {"byte-identical CSV across workers", determinism},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!selected.empty() && !selected.count(id)) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << id << " (" << criteria[i].first << "): " << o.detail
              << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
