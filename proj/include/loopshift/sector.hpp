#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

namespace loopshift {

using Vector = Eigen::VectorXd;

// The sector S(m, L), 0 < m < L.
class SectorClass {
 public:
  // Throws InvalidParameter unless 0 < m < L (both finite).
  SectorClass(double m, double L);

  double m() const noexcept { return m_; }
  double L() const noexcept { return L_; }
  double condition_number() const noexcept { return L_ / m_; }
  // (L - m)/(L + m): gain bound of the loop-shifted plant.
  double sector_gain() const noexcept { return (L_ - m_) / (L_ + m_); }
  // (L + m)/(L - m): small-gain threshold for the shifted controller.
  double threshold() const noexcept { return (L_ + m_) / (L_ - m_); }
  // 2/(L + m): loop-shift gain.
  double shift() const noexcept { return 2.0 / (L_ + m_); }

 private:
  double m_;
  double L_;
};

// (v - m u)^T (L u - v) >= -1e-9 (1 + |u|^2 + |v|^2). Half of the quadratic
// form of the sector inequality. Throws DimensionMismatch on unequal sizes.
bool sector_check(const Vector& u, const Vector& v, const SectorClass& sector);

// A gradient map with a known stationary point, built so that membership
// in a sector can be decided from its construction data.
//
//  * Quadratic: grad f(x) = Q diag(lambda) Q^T (x - x*), Q orthogonal.
//  * PiecewiseLinearScalar: grad f(x) = g(x - x*) with g(0) = 0 and g' equal
//    to slopes[i] on [breakpoints[i], breakpoints[i+1]), slopes[0] below the
//    first breakpoint. g is continuous; its chord slopes g(t)/t lie between
//    the extreme segment slopes. Not a C^2 function: the second derivative
//    jumps at the breakpoints.
//  * SeparableComposite: scalar oracles applied coordinate-wise.
class GradientOracle {
 public:
  enum class Kind { Quadratic, PiecewiseLinearScalar, SeparableComposite };

  static GradientOracle quadratic(std::vector<double> eigenvalues);
  // Rotated quadratic Q diag(lambda) Q^T with a seeded random orthogonal Q.
  static GradientOracle rotated_quadratic(std::vector<double> eigenvalues, std::uint64_t seed);
  static GradientOracle piecewise_linear(std::vector<double> breakpoints, std::vector<double> slopes);
  // Every component must be one-dimensional.
  static GradientOracle separable(std::vector<GradientOracle> components);

  Kind kind() const noexcept { return kind_; }
  int dimension() const noexcept { return dimension_; }
  const Vector& xstar() const noexcept { return xstar_; }

  // Exact gradient. Throws DimensionMismatch.
  Vector grad(const Vector& x) const;

  // Copy with x* moved by `offset`.
  GradientOracle translated(const Vector& offset) const;

  // Smallest and largest slope/eigenvalue of the construction data. The
  // oracle belongs to S(m, L) whenever m <= slope_min and slope_max <= L.
  double slope_min() const noexcept;
  double slope_max() const noexcept;
  bool belongs_to(const SectorClass& sector) const noexcept;

  // Short identifier (the CLI spelling), used in reports.
  std::string id() const;

  const std::vector<double>& eigenvalues() const noexcept { return values_; }
  const std::vector<double>& breakpoints() const noexcept { return breakpoints_; }
  const std::vector<double>& slopes() const noexcept { return values_; }
  const std::vector<GradientOracle>& components() const noexcept { return components_; }
  const Eigen::MatrixXd& rotation() const noexcept { return rotation_; }
  std::uint64_t rotation_seed() const noexcept { return rotation_seed_; }

 private:
  GradientOracle() = default;
  double scalar_gradient(double t) const;

  Kind kind_ = Kind::Quadratic;
  int dimension_ = 0;
  std::vector<double> values_;       // eigenvalues or segment slopes
  std::vector<double> breakpoints_;  // PiecewiseLinearScalar
  std::vector<GradientOracle> components_;
  Eigen::MatrixXd rotation_;         // empty when unrotated
  std::uint64_t rotation_seed_ = 0;
  Vector xstar_;
};

// grad f(u + x*): the plant P. Maps 0 to 0.
Vector plant_apply(const GradientOracle& oracle, const Vector& u);
// u - 2/(L+m) grad f(u + x*): the loop-shifted plant P'.
Vector shifted_plant_apply(const GradientOracle& oracle, const SectorClass& sector, const Vector& u);

// Draws `samples` points x around x* (Gaussian, scales spread over six
// decades) and returns true when sector_check(x - x*, grad f(x)) holds for all.
bool sampled_sector_membership(const GradientOracle& oracle, const SectorClass& sector,
                               int samples, std::uint64_t seed);

// CLI forms:
//   quadratic:1,10            eigenvalues
//   pwl:0:1,1:10              breakpoint:slope list
//   sep:quadratic:2|pwl:0:1,1:10
// An optional "@x1,x2,.." suffix translates x*.
GradientOracle parse_oracle(std::string_view text);

nlohmann::ordered_json oracle_to_json(const GradientOracle& oracle);
// {"kind": "quadratic", "eigenvalues": [..], "rotation_seed": n, "xstar": [..]}
// {"kind": "pwl", "breakpoints": [..], "slopes": [..], "xstar": [..]}
// {"kind": "separable", "components": [..], "xstar": [..]}
GradientOracle oracle_from_json(const nlohmann::json& j);

}  // namespace loopshift
