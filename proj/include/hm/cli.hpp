#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace hm::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitIo = 2;
inline constexpr int kExitInvariant = 3;

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  std::string subcommand;
  std::string curve = "11a1";  // JSON file path or built-in label
  std::optional<std::uint64_t> conductor;
  std::uint64_t ymax = 0;      // density bound; 0 selects the default
  std::vector<std::uint64_t> ylist;
  double t0 = 1.0, t1 = 2.0;
  double contour_c = 0.7;
  std::uint64_t seed = 20240917;
  std::string out = "hm_out";
  unsigned threads = 0;
  std::int64_t d = -7;
  std::uint64_t twist_x = 100000;
  std::size_t twist_count = 100;
  std::uint64_t twist_q_max = 10000;
  std::string twist_baseline;  // file with the recorded twisted-sum constant
  std::string bad_factor = "unshifted";

  /// Fills defaults that depend on the subcommand and throws ConfigError on bad values.
  void finalize();
};

struct Failure {
  std::string invariant;
  std::string detail;
};

struct RunResult {
  int exit_code = kExitOk;
  std::vector<Failure> failures;
  std::map<std::string, std::string> artifacts;  // file name -> contents, all deterministic
  std::string summary_text;                      // human-readable lines for stdout
};

/// Runs one subcommand without touching the output directory.
RunResult run(const RunConfig& config);

/// Parses flags (and an optional --config JSON file), runs, writes the artifacts
/// plus run_meta.json into the output directory, and returns the exit code.
int main_entry(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace hm::cli
