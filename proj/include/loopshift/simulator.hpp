#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "loopshift/method_catalog.hpp"
#include "loopshift/sector.hpp"

namespace loopshift {

struct Trajectory {
  std::vector<Vector> iterates;  // x^0 .. x^iters
  std::vector<double> residuals; // |x^k - x*|
  MethodSpec method;
  std::string oracle_id;
  std::uint64_t seed = 0;
};

// Runs the feedback loop
//   xi+ = A xi + B v,  u = C xi,  v = grad f(u + x*) + noise
// with (A, B, C) the realization of the method's SISO controller applied to
// every coordinate. The controller starts from the cold-start state whose
// past outputs all equal x0 - x* and past inputs are zero (x^{-1} = x^0 for
// the two-step methods). The recorded iterate is x^k = u^k + x*: for
// Nesterov's method that is the extrapolated point y^k.
//
// noise is i.i.d. N(0, noise_sigma^2) per coordinate from mt19937_64(seed).
// Throws InvalidParameter for iters < 1 or a controller with feedthrough.
Trajectory simulate_run(const MethodSpec& spec, const GradientOracle& oracle, const Vector& x0, int iters,
                        double noise_sigma = 0.0, std::uint64_t seed = 0);

// Gradient descent written against the loop-shifted plant:
//   xi+ = (1 - a) xi + a v,  v = xi - 2/(L+m) grad f(xi + x*),  a = (m+L) alpha / 2.
Trajectory simulate_shifted_run(const MethodSpec& spec, const GradientOracle& oracle,
                                const SectorClass& sector, const Vector& x0, int iters);

struct RateEstimate {
  double rho_hat = 0.0;
  double c_hat = 0.0;
  int k_start = 0;
  int k_end = 0;
  double r_squared = 0.0;
  bool diverged = false;
};

inline constexpr double kResidualFloor = 1e-12;

// Least-squares fit of ln r_k = ln c' + k ln rho over k in
// [window_start, last k with r_k > 1e-12]; window_start defaults to iters/4.
// Throws InsufficientData with fewer than 10 usable residuals.
RateEstimate estimate_rate(const Trajectory& traj, std::optional<int> window_start = std::nullopt);

void write_trajectory_csv(const Trajectory& traj, std::ostream& out, bool with_iterates);

struct RobustnessArm {
  std::string name;
  double alpha = 0.0;
  std::vector<double> steady_state;  // per seed
  double median_steady_state = 0.0;
};

struct RobustnessReport {
  double noise_sigma = 0.0;
  int iterations = 0;
  std::vector<std::uint64_t> seeds;
  RobustnessArm standard;        // alpha = 1/L
  RobustnessArm optimal_sector;  // alpha = 2/(L+m)
};

// Both gradient presets under identical seeded gradient noise. Steady state
// is the median of the last 10% of residuals, then the median over seeds.
// Requires a quadratic oracle with eigenvalue spread >= 50. iters <= 0
// selects max(1000, 50 * spread).
RobustnessReport noise_robustness_experiment(const SectorClass& sector, const GradientOracle& oracle,
                                             double noise_sigma, const std::vector<std::uint64_t>& seeds,
                                             int iters = 0);

nlohmann::ordered_json robustness_to_json(const RobustnessReport& report);

// Five quadratics and three piecewise-linear oracles inside S(m, L).
std::vector<GradientOracle> default_oracle_suite(const SectorClass& sector);

struct SoundnessRow {
  std::string method;
  std::string oracle;
  double rho_star = 1.0;
  double rho_hat = 0.0;
  bool fitted = true;  // false when the run hit the residual floor too early to fit
  bool sound = false;  // rho_hat <= rho_star + slack
};

// Simulates a method that is certified at rho_star and compares the observed
// rate to it. x0 = x* + 5 * ones.
SoundnessRow soundness_check(const MethodSpec& spec, double rho_star, const GradientOracle& oracle,
                             int iters = 500, double slack = 0.01);

}  // namespace loopshift
