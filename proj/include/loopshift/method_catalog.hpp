#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>
#include "loopshift/transfer_function.hpp"

namespace loopshift {

class SectorClass;

enum class MethodFamily { GradientDescent, HeavyBall, Nesterov, PID, Custom };

std::string_view family_name(MethodFamily family);
// Accepts the canonical names plus a few aliases (gd, hb, heavy-ball, ...).
MethodFamily parse_family(std::string_view name);

// A first-order method described by its family and parameters. The
// controller K = I_p (x) K̄ is only ever stored through its SISO block K̄.
struct MethodSpec {
  MethodFamily family = MethodFamily::GradientDescent;
  double alpha = 0.0;
  double beta = 0.0;                     // unused for GradientDescent and Custom
  std::optional<RationalTF> custom_tf;   // Custom only

  static MethodSpec gradient(double alpha) { return {MethodFamily::GradientDescent, alpha, 0.0, {}}; }
  static MethodSpec heavy_ball(double alpha, double beta) { return {MethodFamily::HeavyBall, alpha, beta, {}}; }
  static MethodSpec nesterov(double alpha, double beta) { return {MethodFamily::Nesterov, alpha, beta, {}}; }
  static MethodSpec pid(double alpha, double beta) { return {MethodFamily::PID, alpha, beta, {}}; }
  static MethodSpec custom(RationalTF tf) { return {MethodFamily::Custom, 0.0, 0.0, std::move(tf)}; }

  bool has_beta() const {
    return family == MethodFamily::HeavyBall || family == MethodFamily::Nesterov ||
           family == MethodFamily::PID;
  }

  // Throws InvalidParameter when alpha <= 0, beta outside [0, 1), or a
  // custom controller is improper or lacks an exact pole at z = 1.
  void validate() const;

  // Canonical CLI form, e.g. "nesterov:alpha=1,beta=0.8181818181818182".
  std::string to_string() const;
};

// Table 1 / PID controller K̄(z).
RationalTF build_controller(const MethodSpec& spec);

enum class PresetKind {
  Standard,       // gradient alpha = 1/L; Nesterov alpha = 1/L, beta = (sqrt L - sqrt m)/(sqrt L + sqrt m)
  OptimalSector,  // gradient alpha = 2/(L + m)
};

// Standard tunings. Heavy-ball, PID and Custom have no preset and throw
// UnsupportedPreset; so does OptimalSector for anything but gradient descent.
MethodSpec preset(MethodFamily family, const SectorClass& sector,
                  PresetKind kind = PresetKind::Standard);

// Integrator x lag x zero-factor x residual decomposition:
//   K̄(z) = integrator_gain/(z-1) * zero_gain (z - zero)/(z - lag_pole) * residual.
// For gradient descent only the integrator is present.
struct FactorForm {
  double integrator_gain = 0.0;
  std::optional<double> lag_pole;
  std::optional<double> zero;
  double zero_gain = 1.0;
  RationalTF residual;

  RationalTF integrator() const;
  // zero_gain (z - zero) / (z - lag_pole); unit gain when no lag is present.
  RationalTF lag() const;
  RationalTF product() const;
};

// Throws UnsupportedFactorization for PID and Custom.
FactorForm factor_controller(const MethodSpec& spec);

// Builds the transfer function of the recursion
//   y^{k+1} = sum_j y_lags[j] y^{k-j} + sum_j v_lags[j] v^{k-j}
// (lag index j = 0 is the current step).
RationalTF recursion_transfer_function(const std::vector<double>& y_lags,
                                       const std::vector<double>& v_lags);

// Compares the derivative-control rewrite of Nesterov's method,
//   y+ = y + beta (y - y-) - alpha g(y) - alpha beta (g(y) - g(y-)),
// against `candidate` coefficient-wise (tolerance 1e-12 relative).
bool derivative_form_check(const MethodSpec& spec, const RationalTF& candidate);
// Same check against build_controller(spec).
bool derivative_form_check(const MethodSpec& spec);

// CLI form: family:alpha=..[,beta=..], family:preset[=standard|optimal_sector],
// custom:num=[c0 c1 ..],den=[d0 d1 ..] (ascending coefficients). Presets
// need `sector`.
MethodSpec parse_method(std::string_view text, const SectorClass* sector = nullptr);
// Splits a comma-joined list of method strings: a token containing ':' starts
// a new method, other tokens continue the previous one.
std::vector<std::string> split_method_list(std::string_view text);

nlohmann::ordered_json method_to_json(const MethodSpec& spec);
// {"family": "...", "alpha": .., "beta": .., "preset": "...", "num": [..], "den": [..]}
MethodSpec method_from_json(const nlohmann::json& j, const SectorClass* sector = nullptr);

}  // namespace loopshift
