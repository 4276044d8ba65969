#include "loopshift/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <random>

#include <Eigen/Dense>
#include <fmt/format.h>
#include <fmt/format.h>

#include "loopshift/error.hpp"
#include "loopshift/parallel.hpp"
#include "loopshift/transfer_function.hpp"

namespace loopshift {

namespace {

// State giving output 1 for every k >= 0 of the free response when all past
// outputs equal 1 and all past inputs are zero.
Eigen::VectorXd unit_cold_start(const StateSpace& ss, const RationalTF& tf) {
  const int n = ss.order();
  // Free response of den(q) u = num(q) v with constant unit history.
  std::vector<double> u(static_cast<std::size_t>(2 * n), 1.0);
  for (int k = n; k < 2 * n; ++k) {
    double acc = 0.0;
    for (int i = 0; i < n; ++i) acc -= tf.den().coeff(i) * u[static_cast<std::size_t>(k - n + i)];
    u[static_cast<std::size_t>(k)] = acc;
  }
  // Outputs u^0 .. u^{n-1} sit at indices n-1 .. 2n-2.
  Eigen::MatrixXd obs(n, n);
  Eigen::VectorXd target(n);
  Eigen::RowVectorXd row = ss.C;
  for (int k = 0; k < n; ++k) {
    obs.row(k) = row;
    row = row * ss.A;
    target(k) = u[static_cast<std::size_t>(n - 1 + k)];
  }
  return obs.colPivHouseholderQr().solve(target);
}

void check_dimensions(const GradientOracle& oracle, const Vector& x0, int iters) {
  if (iters < 1) throw InvalidParameter(fmt::format("iteration count must be >= 1, got {}", iters));
  if (x0.size() != oracle.dimension()) {
    throw DimensionMismatch(fmt::format("x0 has size {}, oracle dimension is {}", x0.size(), oracle.dimension()));
  }
}

}  // namespace

Trajectory simulate_run(const MethodSpec& spec, const GradientOracle& oracle, const Vector& x0, int iters,
                        double noise_sigma, std::uint64_t seed) {
  check_dimensions(oracle, x0, iters);
  if (!(noise_sigma >= 0.0)) throw InvalidParameter("noise sigma must be non-negative");
  const RationalTF tf = reduce(build_controller(spec));
  const StateSpace ss = realize(tf);
  if (ss.D != 0.0) throw InvalidParameter("simulation needs a strictly proper controller (no feedthrough)");
  if (ss.order() == 0) throw InvalidParameter("controller has no dynamics");

  const Vector& xstar = oracle.xstar();
  const Eigen::VectorXd unit = unit_cold_start(ss, tf);
  // One controller copy per coordinate: column j is the state driving x_j.
  Eigen::MatrixXd state = unit * (x0 - xstar).transpose();

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  Trajectory traj;
  traj.method = spec;
  traj.oracle_id = oracle.id();
  traj.seed = seed;
  traj.iterates.reserve(static_cast<std::size_t>(iters) + 1);
  traj.residuals.reserve(static_cast<std::size_t>(iters) + 1);
  for (int k = 0;; ++k) {
    const Vector u = (ss.C * state).transpose();
    const Vector x = u + xstar;
    traj.iterates.push_back(x);
    traj.residuals.push_back(u.norm());
    if (k == iters) break;
    Vector v = oracle.grad(x);
    if (noise_sigma > 0.0) {
      for (int i = 0; i < v.size(); ++i) v(i) += noise_sigma * normal(rng);
    }
    state = ss.A * state + ss.B * v.transpose();
  }
  return traj;
}

Trajectory simulate_shifted_run(const MethodSpec& spec, const GradientOracle& oracle, const SectorClass& sector,
                                const Vector& x0, int iters) {
  if (spec.family != MethodFamily::GradientDescent) {
    throw InvalidParameter("the shifted interconnection is defined for gradient descent only");
  }
  spec.validate();
  check_dimensions(oracle, x0, iters);
  const double a = 0.5 * (sector.m() + sector.L()) * spec.alpha;
  const Vector& xstar = oracle.xstar();
  Vector xi = x0 - xstar;

  Trajectory traj;
  traj.method = spec;
  traj.oracle_id = oracle.id();
  for (int k = 0;; ++k) {
    traj.iterates.push_back(xi + xstar);
    traj.residuals.push_back(xi.norm());
    if (k == iters) break;
    const Vector v = shifted_plant_apply(oracle, sector, xi);
    xi = (1.0 - a) * xi + a * v;
  }
  return traj;
}

RateEstimate estimate_rate(const Trajectory& traj, std::optional<int> window_start) {
  const auto& r = traj.residuals;
  if (r.empty()) throw InsufficientData("empty trajectory");
  const int iters = static_cast<int>(r.size()) - 1;
  const int start = std::clamp(window_start.value_or(iters / 4), 0, iters);

  int last = -1;
  for (int k = iters; k >= 0; --k) {
    if (std::isfinite(r[static_cast<std::size_t>(k)]) && r[static_cast<std::size_t>(k)] > kResidualFloor) {
      last = k;
      break;
    }
  }
  std::vector<double> ks, logs;
  for (int k = start; k <= last; ++k) {
    const double v = r[static_cast<std::size_t>(k)];
    if (v > kResidualFloor && std::isfinite(v)) {
      ks.push_back(k);
      logs.push_back(std::log(v));
    }
  }
  if (ks.size() < 10) {
    throw InsufficientData(fmt::format("only {} residuals above {} in the fit window", ks.size(), kResidualFloor));
  }

  const double n = static_cast<double>(ks.size());
  double mean_k = 0.0, mean_y = 0.0;
  for (std::size_t i = 0; i < ks.size(); ++i) {
    mean_k += ks[i];
    mean_y += logs[i];
  }
  mean_k /= n;
  mean_y /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < ks.size(); ++i) {
    sxx += (ks[i] - mean_k) * (ks[i] - mean_k);
    sxy += (ks[i] - mean_k) * (logs[i] - mean_y);
    syy += (logs[i] - mean_y) * (logs[i] - mean_y);
  }
  const double slope = sxy / sxx;
  const double intercept = mean_y - slope * mean_k;

  RateEstimate est;
  est.rho_hat = std::exp(slope);
  est.c_hat = r[0] > 0.0 ? std::exp(intercept) / r[0] : 0.0;
  est.k_start = static_cast<int>(ks.front());
  est.k_end = static_cast<int>(ks.back());
  est.r_squared = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;

  double peak = 0.0;
  for (double v : r) peak = std::max(peak, std::isfinite(v) ? v : std::numeric_limits<double>::infinity());
  est.diverged = peak > 1e6 * r[0];
  if (est.diverged && est.rho_hat <= 1.0) est.rho_hat = std::nextafter(1.0, 2.0);
  return est;
}

void write_trajectory_csv(const Trajectory& traj, std::ostream& out, bool with_iterates) {
  const int p = traj.iterates.empty() ? 0 : static_cast<int>(traj.iterates.front().size());
  out << "k,residual";
  if (with_iterates)
    for (int i = 0; i < p; ++i) out << ",x_" << i;
  out << '\n';
  for (std::size_t k = 0; k < traj.residuals.size(); ++k) {
    out << k << ',' << fmt::format("{}", traj.residuals[k]);
    if (with_iterates)
      for (int i = 0; i < p; ++i) out << ',' << fmt::format("{}", traj.iterates[k](i));
    out << '\n';
  }
}

namespace {

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t mid = v.size() / 2;
  return v.size() % 2 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

double steady_state(const Trajectory& traj) {
  const std::size_t n = traj.residuals.size();
  const std::size_t tail = std::max<std::size_t>(1, n / 10);
  return median(std::vector<double>(traj.residuals.end() - static_cast<std::ptrdiff_t>(tail), traj.residuals.end()));
}

}  // namespace

RobustnessReport noise_robustness_experiment(const SectorClass& sector, const GradientOracle& oracle,
                                             double noise_sigma, const std::vector<std::uint64_t>& seeds,
                                             int iters) {
  if (oracle.kind() != GradientOracle::Kind::Quadratic) {
    throw InvalidParameter("noise robustness experiment needs a quadratic oracle");
  }
  const double spread = oracle.slope_max() / oracle.slope_min();
  if (!(oracle.slope_min() > 0.0) || spread < 50.0) {
    throw InvalidParameter(fmt::format("noise robustness experiment needs condition number >= 50, got {}", spread));
  }
  if (seeds.empty()) throw InvalidParameter("noise robustness experiment needs at least one seed");

  RobustnessReport report;
  report.noise_sigma = noise_sigma;
  report.iterations = iters > 0 ? iters : std::max(1000, static_cast<int>(std::ceil(50.0 * spread)));
  report.seeds = seeds;

  const Vector x0 = oracle.xstar() + Vector::Ones(oracle.dimension());
  auto run_arm = [&](std::string name, const MethodSpec& spec) {
    RobustnessArm arm;
    arm.name = std::move(name);
    arm.alpha = spec.alpha;
    arm.steady_state = parallel_map<double>(seeds.size(), [&](std::size_t i) {
      return steady_state(simulate_run(spec, oracle, x0, report.iterations, noise_sigma, seeds[i]));
    });
    arm.median_steady_state = median(arm.steady_state);
    return arm;
  };
  report.standard = run_arm("standard", preset(MethodFamily::GradientDescent, sector, PresetKind::Standard));
  report.optimal_sector =
      run_arm("optimal_sector", preset(MethodFamily::GradientDescent, sector, PresetKind::OptimalSector));
  return report;
}

nlohmann::ordered_json robustness_to_json(const RobustnessReport& report) {
  auto arm = [](const RobustnessArm& a) {
    nlohmann::ordered_json j;
    j["name"] = a.name;
    j["alpha"] = a.alpha;
    j["median_steady_state"] = a.median_steady_state;
    j["steady_state"] = a.steady_state;
    return j;
  };
  nlohmann::ordered_json j;
  j["noise_sigma"] = report.noise_sigma;
  j["iterations"] = report.iterations;
  j["seeds"] = report.seeds;
  j["standard"] = arm(report.standard);
  j["optimal_sector"] = arm(report.optimal_sector);
  j["fragile_exceeds_robust"] = report.optimal_sector.median_steady_state > report.standard.median_steady_state;
  return j;
}

std::vector<GradientOracle> default_oracle_suite(const SectorClass& sector) {
  const double m = sector.m();
  const double L = sector.L();
  std::vector<GradientOracle> suite;
  suite.push_back(GradientOracle::quadratic({m, L}));
  suite.push_back(GradientOracle::quadratic({m, 0.5 * (m + L), L}));
  suite.push_back(GradientOracle::rotated_quadratic({m, std::sqrt(m * L), L}, 7));
  suite.push_back(GradientOracle::quadratic({m, m + 0.25 * (L - m), m + 0.75 * (L - m), L}));
  suite.push_back(GradientOracle::quadratic({L}));
  suite.push_back(GradientOracle::piecewise_linear({0.0, 1.0}, {m, L}));
  suite.push_back(GradientOracle::piecewise_linear({-1.0, 0.0, 1.0}, {L, m, L}));
  {
    Vector offset(2);
    offset << 1.0, -2.0;
    suite.push_back(GradientOracle::separable({GradientOracle::piecewise_linear({0.0, 2.0}, {L, m}),
                                               GradientOracle::quadratic({m})})
                        .translated(offset));
  }
  return suite;
}

SoundnessRow soundness_check(const MethodSpec& spec, double rho_star, const GradientOracle& oracle, int iters,
                             double slack) {
  const Vector x0 = oracle.xstar() + 5.0 * Vector::Ones(oracle.dimension());
  const Trajectory traj = simulate_run(spec, oracle, x0, iters);

  SoundnessRow row;
  row.method = spec.to_string();
  row.oracle = oracle.id();
  row.rho_star = rho_star;

  int last = 0;
  for (int k = 0; k < static_cast<int>(traj.residuals.size()); ++k)
    if (traj.residuals[static_cast<std::size_t>(k)] > kResidualFloor) last = k;
  try {
    row.rho_hat = estimate_rate(traj).rho_hat;
  } catch (const InsufficientData&) {
    // Fast runs reach the floor before the default window fills: fit over
    // the last three quarters of the usable prefix instead.
    try {
      row.rho_hat = estimate_rate(traj, last / 4).rho_hat;
    } catch (const InsufficientData&) {
      row.fitted = false;
      row.rho_hat = last == 0 ? 0.0 : std::pow(traj.residuals[static_cast<std::size_t>(last)] / traj.residuals[0],
                                               1.0 / last);
    }
  }
  row.sound = row.rho_hat <= rho_star + slack;
  return row;
}

}  // namespace loopshift
