#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "splitac/experiments.hpp"

namespace splitac::cli {

/// Configuration error with the 1-based line it was found on (0 when the file
/// could not be read at all).
class ParseError : public std::runtime_error {
 public:
  ParseError(int line, const std::string& message);
  [[nodiscard]] int line() const noexcept { return line_; }

 private:
  int line_;
};

struct RunConfig {
  ExperimentConfig experiment;

  // lemmas
  std::size_t lemma_cases = 1'000'000;
  // simulate
  std::optional<double> dt;
  std::vector<double> snapshot_times;
  // localize
  std::vector<double> localization_thresholds;
  // --check thresholds for strong / weak slopes
  std::optional<double> check_slope_min;
  std::optional<double> check_slope_max;

  /// Sorted key=value dump of every setting except `threads` and the seed,
  /// which do not change the numbers written.
  [[nodiscard]] std::string canonical() const;
};

/// Parses flat `key = value` text; `#` starts a comment.
RunConfig parse_config(std::istream& in);
RunConfig load_config(const std::filesystem::path& path);

/// FNV-1a of RunConfig::canonical().
std::uint64_t config_hash(const RunConfig& config);

/// %.17g formatting used for every number written to CSV.
std::string format_number(double v);

enum class Command { lemmas, simulate, strong, weak, localize };
std::optional<Command> parse_command(std::string_view s) noexcept;

struct RunOptions {
  Command command = Command::strong;
  std::filesystem::path config_path;
  std::filesystem::path out_dir;
  std::optional<std::uint64_t> seed;
  bool check = false;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitCheckFailed = 1;
inline constexpr int kExitUsage = 2;

/// Executes one command. Diagnostics go to `err`, the human summary to `out`.
int run(const RunOptions& options, std::ostream& out, std::ostream& err);

/// Full command line front end: `splitac <command> --config <path> --out <dir> [--seed N] [--check]`.
int main_entry(int argc, char** argv);

/// Writes a convergence table as CSV with the standard comment header.
void write_table_csv(std::ostream& os, const std::string& title, const RunConfig& config,
                     const ConvergenceTable& table);

}  // namespace splitac::cli
