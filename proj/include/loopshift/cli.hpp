#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace loopshift::cli {

enum class Command { Bode, Certify, Rate, Curve, Search, Simulate, Robustness, Report };

std::string_view command_name(Command c);
Command parse_command(std::string_view name);

// Everything a run needs, in plain values. Method and oracle specs are kept
// in their string form so the config serializes exactly as typed.
struct RunConfig {
  Command command = Command::Certify;
  std::vector<std::string> methods;
  std::optional<double> m;
  std::optional<double> L;
  std::optional<double> rho;
  std::string oracle;
  std::vector<double> x0;      // empty: x* + 1
  std::optional<int> iters;    // per-command default when unset
  double noise = 0.0;
  std::uint64_t seed = 0;
  int seeds = 20;
  double sigma = 1e-3;
  std::optional<double> tol;
  std::string family = "gradient";  // search
  int alpha_points = 100;
  int beta_points = 20;
  int rounds = 2;
  double f_min = 1e-4;
  int points = 500;
  std::string spacing = "log";
  std::string title;
  bool iterates = false;  // simulate: include x^k columns in the CSV
  std::string json_path;  // "-" writes to stdout
  std::string csv_path;
  std::string svg_path;

  bool operator==(const RunConfig&) const = default;
};

// Raised for anything that should exit with status 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Thrown by parse_args for --help; carries the formatted help text.
struct HelpRequested {
  std::string text;
};

nlohmann::ordered_json config_to_json(const RunConfig& config);
// Fields present in `j` replace those of `base`; unknown keys are a usage error.
RunConfig config_from_json(const nlohmann::json& j, RunConfig base = {});

// Throws UsageError on unknown flags, malformed values, or values that break
// a module precondition (for example m >= L). A --config file overrides the
// flags it mentions.
RunConfig parse_args(int argc, const char* const* argv);

// Re-checks the config (as parse_args does) against module preconditions.
void validate(const RunConfig& config);

// Executes the config. Returns 0 on success, 1 on a computation error (a
// structured error JSON is written to `err`).
int run(const RunConfig& config, std::ostream& out, std::ostream& err);

// parse_args + run, mapping usage errors to 2.
int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace loopshift::cli
