#pragma once

// Command-line driver: config parsing, subcommand execution and self-checks.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "histent/experiments.hpp"
#include "histent/processes.hpp"

namespace histent {

inline constexpr const char* kToolVersion = "0.1.0";

enum class Command { sweep, urn, translate, maxent, check };

struct RunConfig {
  Command command = Command::sweep;
  std::optional<int> figure;
  ModelConfig model = RandomWalkModel{};
  SweepOptions sweep;  // axes, method, count, seed, workers, bootstrap
  // urn
  std::string urn_mode = "surface";  // "surface" | "curves"
  std::vector<int> t1s;
  std::vector<int> ms;
  std::vector<int> ks;
  // translate
  std::vector<int> times;
  std::vector<int> shifts;
  std::optional<double> dx;
  // maxent
  nlohmann::json graining = nlohmann::json::object();
  // output
  std::string out_dir = ".";
  std::string format = "csv";
  bool to_stdout = false;

  std::vector<std::string> warnings;

  // Canonical form (everything that affects results; workers and output
  // location excluded).
  nlohmann::json to_json() const;
  std::uint64_t hash() const;
};

std::string command_name(Command c);

// Parses command-line arguments (without argv[0]). Precedence: figure
// defaults < config file (--config) < flags; HISTENT_SEED (from `env_seed`)
// fills the seed when neither file nor flag sets it. Throws ConfigError.
RunConfig parse_config(const std::vector<std::string>& args, std::optional<std::string> env_seed = std::nullopt);

// Applies a JSON config object onto `config`; unknown keys throw with their path.
void apply_config_json(RunConfig& config, const nlohmann::json& j);

// Runs the subcommand. Results go to files in out_dir, or to `out` with
// --stdout; progress and warnings go to `err`. Returns the exit status
// (0 ok, 1 invariant violation, 2 config error).
int execute(const RunConfig& config, std::ostream& out, std::ostream& err);

// Invariant suites on small default instances; one line per check on `err`.
bool run_checks(std::ostream& err, unsigned workers = 0);

// parse_config + execute with exit codes.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace histent
