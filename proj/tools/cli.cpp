#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "splitac/lemmas.hpp"
#include "splitac/version.hpp"

namespace splitac::cli {

ParseError::ParseError(int line, const std::string& message)
    : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + message : message), line_(line) {}

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

// Accepts plain decimal numbers and powers of two written as `2^k`.
std::optional<double> parse_real(std::string_view text) {
  const std::string s = trim(text);
  if (s.rfind("2^", 0) == 0) {
    int k = 0;
    const auto* b = s.data() + 2;
    const auto* e = s.data() + s.size();
    if (b == e) return std::nullopt;
    auto [p, ec] = std::from_chars(b, e, k);
    if (ec != std::errc() || p != e) return std::nullopt;
    return std::ldexp(1.0, k);
  }
  double v = 0.0;
  const auto* b = s.data();
  const auto* e = s.data() + s.size();
  if (b == e) return std::nullopt;
  auto [p, ec] = std::from_chars(b, e, v);
  if (ec != std::errc() || p != e || !std::isfinite(v)) return std::nullopt;
  return v;
}

template <class Int>
std::optional<Int> parse_int(std::string_view text) {
  const std::string s = trim(text);
  Int v{};
  const auto* b = s.data();
  const auto* e = s.data() + s.size();
  if (b == e) return std::nullopt;
  auto [p, ec] = std::from_chars(b, e, v);
  if (ec != std::errc() || p != e) return std::nullopt;
  return v;
}

std::optional<std::vector<double>> parse_real_list(std::string_view text) {
  std::vector<double> out;
  std::string item;
  std::istringstream in{std::string(text)};
  while (std::getline(in, item, ',')) {
    const auto v = parse_real(item);
    if (!v) return std::nullopt;
    out.push_back(*v);
  }
  if (out.empty()) return std::nullopt;
  return out;
}

std::optional<bool> parse_bool(std::string_view text) {
  const std::string s = trim(text);
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  return std::nullopt;
}

std::string join(const std::vector<double>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i > 0) out += ',';
    out += format_number(xs[i]);
  }
  return out;
}

template <class T>
T require(std::optional<T> v, int line, const std::string& key, const std::string& value) {
  if (!v) throw ParseError(line, "invalid value for '" + key + "': '" + value + "'");
  return *v;
}

}  // namespace

std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

RunConfig parse_config(std::istream& in) {
  RunConfig cfg;
  ExperimentConfig& ex = cfg.experiment;
  std::set<std::string> seen;
  std::string raw;
  int line_no = 0;
  std::size_t n_interior = ex.mesh.n_interior();

  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    const std::string line = trim(std::string_view(raw).substr(0, hash));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(line_no, "expected key = value");
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    if (key.empty()) throw ParseError(line_no, "empty key");
    if (!seen.insert(key).second) throw ParseError(line_no, "duplicate key '" + key + "'");

    if (key == "T") {
      ex.T = require(parse_real(value), line_no, key, value);
    } else if (key == "n_interior") {
      n_interior = require(parse_int<std::size_t>(value), line_no, key, value);
      if (n_interior == 0) throw ParseError(line_no, "n_interior must be >= 1");
    } else if (key == "dt_list") {
      ex.dt_list = require(parse_real_list(value), line_no, key, value);
    } else if (key == "n_replicas") {
      ex.n_replicas = require(parse_int<std::size_t>(value), line_no, key, value);
    } else if (key == "method") {
      ex.scheme.method = require(parse_method(value), line_no, key, value);
    } else if (key == "linear") {
      ex.scheme.linear = require(parse_linear(value), line_no, key, value);
    } else if (key == "m1_as_printed") {
      ex.scheme.m1_as_printed = require(parse_bool(value), line_no, key, value);
    } else if (key == "master_seed") {
      ex.master_seed = require(parse_int<std::uint64_t>(value), line_no, key, value);
    } else if (key == "test_function") {
      ex.test_function = require(parse_test_function(value), line_no, key, value);
    } else if (key == "localization_M") {
      cfg.localization_thresholds = require(parse_real_list(value), line_no, key, value);
      ex.localization_M = cfg.localization_thresholds.front();
    } else if (key == "x0") {
      ex.initial = require(parse_initial_condition(value), line_no, key, value);
    } else if (key == "x0_amplitude") {
      ex.initial_amplitude = require(parse_real(value), line_no, key, value);
    } else if (key == "noise_scale") {
      ex.noise_scale = require(parse_real(value), line_no, key, value);
    } else if (key == "threads") {
      ex.threads = require(parse_int<unsigned>(value), line_no, key, value);
    } else if (key == "lemma_cases") {
      cfg.lemma_cases = require(parse_int<std::size_t>(value), line_no, key, value);
    } else if (key == "dt") {
      cfg.dt = require(parse_real(value), line_no, key, value);
    } else if (key == "snapshot_times") {
      cfg.snapshot_times = require(parse_real_list(value), line_no, key, value);
    } else if (key == "check_slope_min") {
      cfg.check_slope_min = require(parse_real(value), line_no, key, value);
    } else if (key == "check_slope_max") {
      cfg.check_slope_max = require(parse_real(value), line_no, key, value);
    } else {
      throw ParseError(line_no, "unknown key '" + key + "'");
    }
  }
  ex.mesh = Mesh(n_interior);
  try {
    ex.validate();
  } catch (const std::invalid_argument& e) {
    throw ParseError(0, e.what());
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(0, "cannot open config file '" + path.string() + "'");
  return parse_config(in);
}

std::string RunConfig::canonical() const {
  const ExperimentConfig& ex = experiment;
  std::map<std::string, std::string> kv{
      {"T", format_number(ex.T)},
      {"n_interior", std::to_string(ex.mesh.n_interior())},
      {"dt_list", join(ex.dt_list)},
      {"n_replicas", std::to_string(ex.n_replicas)},
      {"method", std::string(to_string(ex.scheme.method))},
      {"linear", std::string(to_string(ex.scheme.linear))},
      {"m1_as_printed", ex.scheme.m1_as_printed ? "true" : "false"},
      {"test_function", std::string(to_string(ex.test_function))},
      {"localization_M", join(localization_thresholds)},
      {"x0", std::string(to_string(ex.initial))},
      {"x0_amplitude", format_number(ex.initial_amplitude)},
      {"noise_scale", format_number(ex.noise_scale)},
      {"lemma_cases", std::to_string(lemma_cases)},
      {"dt", dt ? format_number(*dt) : ""},
      {"snapshot_times", join(snapshot_times)},
      {"check_slope_min", check_slope_min ? format_number(*check_slope_min) : ""},
      {"check_slope_max", check_slope_max ? format_number(*check_slope_max) : ""},
  };
  std::string out;
  for (const auto& [k, v] : kv) out += k + "=" + v + "\n";
  return out;
}

std::uint64_t config_hash(const RunConfig& config) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : config.canonical()) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::optional<Command> parse_command(std::string_view s) noexcept {
  if (s == "lemmas") return Command::lemmas;
  if (s == "simulate") return Command::simulate;
  if (s == "strong") return Command::strong;
  if (s == "weak") return Command::weak;
  if (s == "localize") return Command::localize;
  return std::nullopt;
}

namespace {

std::string header(const std::string& title, const RunConfig& config) {
  char hash[17];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(config_hash(config)));
  return "# config_hash=" + std::string(hash) + " seed=" + std::to_string(config.experiment.master_seed) +
         "\n# splitac " + title + " method=" + std::string(to_string(config.experiment.scheme.method)) +
         " linear=" + std::string(to_string(config.experiment.scheme.linear)) + "\n";
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << content;
}

std::string table_row(double dt, const Estimate& e) {
  return format_number(dt) + "," + format_number(e.value) + "," + format_number(e.std_error) + "," +
         std::to_string(e.n_valid) + "," + std::to_string(e.n_blowup) + "\n";
}

std::string table_csv(const std::string& title, const RunConfig& config, const ConvergenceTable& table) {
  std::string s = header(title, config);
  s += "dt,estimate,stderr,n_valid,n_blowup\n";
  for (const auto& row : table.rows) s += table_row(row.dt, row.estimate);
  s += "# slope=" + (table.slope ? format_number(*table.slope) : std::string("nan")) +
       " half_width=" + (table.half_width ? format_number(*table.half_width) : std::string("nan")) + "\n";
  return s;
}

// Checks a table against --check thresholds; returns an empty string on success.
std::string check_table(const RunConfig& config, const ConvergenceTable& table) {
  for (const auto& row : table.rows) {
    if (!row.estimate.valid) return "row dt=" + format_number(row.dt) + " is invalid (blow-ups above 1%)";
  }
  if (!config.check_slope_min && !config.check_slope_max) return {};
  if (!table.slope) return "slope could not be fitted";
  if (config.check_slope_min && *table.slope < *config.check_slope_min) {
    return "slope " + format_number(*table.slope) + " below check_slope_min";
  }
  if (config.check_slope_max && *table.slope > *config.check_slope_max) {
    return "slope " + format_number(*table.slope) + " above check_slope_max";
  }
  return {};
}

struct Output {
  std::vector<std::pair<std::string, std::string>> files;
  std::string summary;
  std::string check_failure;
};

Output do_lemmas(const RunConfig& config) {
  LemmaSuiteOptions opts;
  opts.seed = config.experiment.master_seed;
  opts.cases = config.lemma_cases;
  const LemmaReport report = run_lemma_suites(opts);
  Output out;
  std::string csv = header("lemmas", config) + "check,cases,violations,worst_ratio,constant,status\n";
  std::ostringstream sum;
  for (const auto& c : report.checks) {
    csv += c.name + "," + std::to_string(c.cases) + "," + std::to_string(c.violations) + "," +
           format_number(c.worst_ratio) + "," + format_number(c.constant) + "," + (c.passed() ? "pass" : "FAIL") +
           "\n";
    sum << (c.passed() ? "PASS " : "FAIL ") << c.name << ": " << c.violations << " violations / " << c.cases
        << " cases, worst lhs/rhs = " << format_number(c.worst_ratio) << "\n";
    if (!c.passed() && out.check_failure.empty()) out.check_failure = c.name + " has violations";
  }
  csv += "# error_psi_sup_at_dt0=" + format_number(report.error_psi_sup_at_dt0) + "\n";
  sum << "psi consistency ratio sup at dt=0.5: " << format_number(report.error_psi_sup_at_dt0) << "\n";
  out.files.emplace_back("lemmas.csv", csv);
  out.summary = sum.str();
  return out;
}

Output do_simulate(const RunConfig& config) {
  const ExperimentConfig& ex = config.experiment;
  const double dt = config.dt ? *config.dt : (ex.dt_list.empty() ? 0.0 : ex.dt_list.back());
  SchemeSpec spec = ex.scheme;
  spec.dt = dt;
  const DiscreteOperator op(ex.mesh);
  const Stepper stepper(op, spec);
  const NoisePlan plan(ex.master_seed, 0, ex.mesh, dt, 1, level_stream(dt));
  TrajectoryOptions topts;
  topts.snapshot_times = config.snapshot_times;
  if (topts.snapshot_times.empty()) topts.snapshot_times = {ex.T};
  topts.noise_scale = ex.noise_scale;
  const TrajectoryStats st = run_trajectory(stepper, make_initial(ex), plan, ex.T, topts);

  Output out;
  std::string csv = header("simulate", config) + "t,xi,value\n";
  for (const auto& snap : st.snapshots) {
    for (std::size_t i = 0; i < snap.x.size(); ++i) {
      csv += format_number(snap.t) + "," + format_number(ex.mesh.node(i + 1)) + "," + format_number(snap.x[i]) +
             "\n";
    }
  }
  csv += "# steps=" + std::to_string(st.steps) + " sup_e=" + format_number(st.sup_e) +
         " sup_h=" + format_number(st.sup_h) + " blown_up=" + (st.blown_up ? "1" : "0") + "\n";
  out.files.emplace_back("trajectory.csv", csv);
  std::ostringstream sum;
  sum << "steps=" << st.steps << " sup_e=" << format_number(st.sup_e) << " sup_h=" << format_number(st.sup_h)
      << " terminal_h=" << format_number(norm_h(st.terminal)) << " blown_up=" << st.blown_up << "\n";
  out.summary = sum.str();
  if (st.blown_up) out.check_failure = "trajectory blew up";
  return out;
}

std::string table_summary(const ConvergenceTable& table) {
  std::ostringstream sum;
  for (const auto& row : table.rows) {
    sum << "dt=" << format_number(row.dt) << " estimate=" << format_number(row.estimate.value)
        << " stderr=" << format_number(row.estimate.std_error) << " n_valid=" << row.estimate.n_valid
        << " n_blowup=" << row.estimate.n_blowup << (row.estimate.valid ? "" : " INVALID") << "\n";
  }
  if (table.slope) {
    sum << "slope=" << format_number(*table.slope) << " half_width=" << format_number(*table.half_width) << "\n";
  } else {
    sum << "slope: not enough usable rows\n";
  }
  return sum.str();
}

Output do_strong(const RunConfig& config) {
  const ConvergenceTable table = strong_table(config.experiment);
  Output out;
  out.files.emplace_back("strong.csv", table_csv("strong", config, table));
  out.summary = table_summary(table);
  out.check_failure = check_table(config, table);
  return out;
}

Output do_weak(const RunConfig& config) {
  const ConvergenceTable table = weak_table(config.experiment);
  // Telescoped totals from each dt down to the finest level in the list.
  ConvergenceTable tele;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    std::vector<Estimate> incs;
    for (std::size_t j = i; j < table.rows.size(); ++j) incs.push_back(table.rows[j].estimate);
    tele.rows.push_back({table.rows[i].dt, telescope(incs)});
  }
  Output out;
  out.files.emplace_back("weak.csv", table_csv("weak", config, table));
  out.files.emplace_back("weak_telescoped.csv", table_csv("weak_telescoped", config, tele));
  out.summary = "per-level increments:\n" + table_summary(table);
  out.check_failure = check_table(config, table);
  return out;
}

Output do_localize(const RunConfig& config) {
  const ExperimentConfig& ex = config.experiment;
  if (ex.dt_list.empty()) throw ParseError(0, "localize needs dt_list");
  std::vector<double> thresholds = config.localization_thresholds;
  if (thresholds.empty()) thresholds = {3.0, 5.0, 8.0};
  Output out;
  std::string csv = header("localize", config) +
                    "dt,M,prob_exceed,prob_stderr,localized_mse,localized_stderr,n_valid,n_blowup\n";
  std::ostringstream sum;
  for (double dt : ex.dt_list) {
    for (const auto& st : localization_stats(ex, dt, thresholds)) {
      csv += format_number(dt) + "," + format_number(st.threshold) + "," + format_number(st.prob_exceed) + "," +
             format_number(st.prob_std_error) + "," + format_number(st.localized.value) + "," +
             format_number(st.localized.std_error) + "," + std::to_string(st.localized.n_valid) + "," +
             std::to_string(st.localized.n_blowup) + "\n";
      sum << "dt=" << format_number(dt) << " M=" << format_number(st.threshold)
          << " P(exceed)=" << format_number(st.prob_exceed) << " localized_mse=" << format_number(st.localized.value)
          << "\n";
    }
  }
  out.files.emplace_back("localize.csv", csv);
  out.summary = sum.str();
  return out;
}

}  // namespace

void write_table_csv(std::ostream& os, const std::string& title, const RunConfig& config,
                     const ConvergenceTable& table) {
  os << table_csv(title, config, table);
}

int run(const RunOptions& options, std::ostream& out, std::ostream& err) {
  RunConfig config;
  try {
    config = load_config(options.config_path);
    if (options.seed) config.experiment.master_seed = *options.seed;
    if ((options.command == Command::strong || options.command == Command::weak) &&
        config.experiment.dt_list.empty()) {
      throw ParseError(0, "dt_list is required for this command");
    }
  } catch (const ParseError& e) {
    err << "splitac: " << options.config_path.string() << ": " << e.what() << "\n";
    return kExitUsage;
  }

  const auto started = std::chrono::steady_clock::now();
  Output result;
  try {
    switch (options.command) {
      case Command::lemmas: result = do_lemmas(config); break;
      case Command::simulate: result = do_simulate(config); break;
      case Command::strong: result = do_strong(config); break;
      case Command::weak: result = do_weak(config); break;
      case Command::localize: result = do_localize(config); break;
    }
  } catch (const std::exception& e) {
    err << "splitac: " << e.what() << "\n";
    return kExitUsage;
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

  try {
    std::filesystem::create_directories(options.out_dir);
    for (const auto& [name, content] : result.files) write_file(options.out_dir / name, content);
    std::string title = "summary";
    std::ostringstream manifest;
    manifest << header(title, config) << "# version=" << kVersion << " wall_clock_s=" << format_number(seconds)
             << " threads=" << config.experiment.threads << "\n"
             << result.summary;
    write_file(options.out_dir / "summary.txt", manifest.str());
  } catch (const std::exception& e) {
    err << "splitac: " << e.what() << "\n";
    return kExitUsage;
  }

  out << result.summary;
  if (options.check && !result.check_failure.empty()) {
    err << "splitac: check failed: " << result.check_failure << "\n";
    return kExitCheckFailed;
  }
  return kExitOk;
}

int main_entry(int argc, char** argv) {
  CLI::App app{"Splitting schemes for the stochastic Allen-Cahn equation"};
  app.set_version_flag("--version", std::string(kVersion));
  std::string command;
  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  bool check = false;
  app.add_option("command", command, "lemmas | simulate | strong | weak | localize")
      ->required()
      ->check(CLI::IsMember({"lemmas", "simulate", "strong", "weak", "localize"}));
  app.add_option("--config", config_path, "key=value configuration file")->required();
  app.add_option("--out", out_dir, "output directory")->required();
  app.add_option("--seed", seed, "override master_seed");
  app.add_flag("--check", check, "exit 1 when validity or slope thresholds are not met");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }
  RunOptions opts;
  opts.command = *parse_command(command);
  opts.config_path = config_path;
  opts.out_dir = out_dir;
  opts.seed = seed;
  opts.check = check;
  return run(opts, std::cout, std::cerr);
}

}  // namespace splitac::cli
