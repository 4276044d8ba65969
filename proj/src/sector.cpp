#include "loopshift/sector.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>

#include <Eigen/QR>
#include <fmt/format.h>

#include "loopshift/error.hpp"
#include "text_util.hpp"

namespace loopshift {

SectorClass::SectorClass(double m, double L) : m_(m), L_(L) {
  if (!std::isfinite(m) || !std::isfinite(L) || !(m > 0.0) || !(m < L)) {
    throw InvalidParameter(fmt::format("sector needs 0 < m < L, got m = {}, L = {}", m, L));
  }
}

bool sector_check(const Vector& u, const Vector& v, const SectorClass& sector) {
  if (u.size() != v.size()) {
    throw DimensionMismatch(fmt::format("sector check on sizes {} and {}", u.size(), v.size()));
  }
  const double form = (v - sector.m() * u).dot(sector.L() * u - v);
  const double tol = 1e-9 * (1.0 + u.squaredNorm() + v.squaredNorm());
  return form >= -tol;
}

GradientOracle GradientOracle::quadratic(std::vector<double> eigenvalues) {
  if (eigenvalues.empty()) throw InvalidInput("quadratic oracle needs at least one eigenvalue");
  for (double l : eigenvalues) {
    if (!std::isfinite(l)) throw InvalidInput("quadratic eigenvalues must be finite");
  }
  GradientOracle o;
  o.kind_ = Kind::Quadratic;
  o.dimension_ = static_cast<int>(eigenvalues.size());
  o.values_ = std::move(eigenvalues);
  o.xstar_ = Vector::Zero(o.dimension_);
  return o;
}

GradientOracle GradientOracle::rotated_quadratic(std::vector<double> eigenvalues, std::uint64_t seed) {
  GradientOracle o = quadratic(std::move(eigenvalues));
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd g(o.dimension_, o.dimension_);
  for (int j = 0; j < g.cols(); ++j)
    for (int i = 0; i < g.rows(); ++i) g(i, j) = normal(rng);
  o.rotation_ = Eigen::HouseholderQR<Eigen::MatrixXd>(g).householderQ();
  o.rotation_seed_ = seed;
  return o;
}

GradientOracle GradientOracle::piecewise_linear(std::vector<double> breakpoints, std::vector<double> slopes) {
  if (breakpoints.empty() || breakpoints.size() != slopes.size()) {
    throw InvalidInput("piecewise-linear oracle needs one slope per breakpoint");
  }
  for (std::size_t i = 1; i < breakpoints.size(); ++i) {
    if (!(breakpoints[i] > breakpoints[i - 1])) {
      throw InvalidInput("piecewise-linear breakpoints must be strictly increasing");
    }
  }
  for (double s : slopes) {
    if (!std::isfinite(s)) throw InvalidInput("piecewise-linear slopes must be finite");
  }
  GradientOracle o;
  o.kind_ = Kind::PiecewiseLinearScalar;
  o.dimension_ = 1;
  o.breakpoints_ = std::move(breakpoints);
  o.values_ = std::move(slopes);
  o.xstar_ = Vector::Zero(1);
  return o;
}

GradientOracle GradientOracle::separable(std::vector<GradientOracle> components) {
  if (components.empty()) throw InvalidInput("separable oracle needs at least one component");
  GradientOracle o;
  o.kind_ = Kind::SeparableComposite;
  o.dimension_ = static_cast<int>(components.size());
  o.xstar_ = Vector::Zero(o.dimension_);
  for (std::size_t i = 0; i < components.size(); ++i) {
    const GradientOracle& c = components[i];
    if (c.dimension() != 1 || c.kind() == Kind::SeparableComposite) {
      throw InvalidInput("separable components must be scalar quadratic or piecewise-linear oracles");
    }
    o.xstar_(static_cast<Eigen::Index>(i)) = c.xstar()(0);
  }
  o.components_ = std::move(components);
  return o;
}

// g(t) = integral_0^t slope(s) ds for the piecewise-constant slope profile.
double GradientOracle::scalar_gradient(double t) const {
  if (kind_ == Kind::Quadratic) return values_[0] * t;
  auto slope_index = [this](double s) {
    // Last breakpoint <= s, or 0 below the first one.
    const auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), s);
    return it == breakpoints_.begin() ? std::size_t{0}
                                      : static_cast<std::size_t>(it - breakpoints_.begin()) - 1;
  };
  const double lo = std::min(0.0, t);
  const double hi = std::max(0.0, t);
  double integral = 0.0;
  double cursor = lo;
  while (cursor < hi) {
    const std::size_t i = slope_index(cursor);
    double next = hi;
    if (i + 1 < breakpoints_.size()) next = std::min(hi, breakpoints_[i + 1]);
    if (cursor < breakpoints_[0]) next = std::min(hi, breakpoints_[0]);
    integral += values_[i] * (next - cursor);
    cursor = next;
  }
  return t >= 0.0 ? integral : -integral;
}

Vector GradientOracle::grad(const Vector& x) const {
  if (x.size() != dimension_) {
    throw DimensionMismatch(fmt::format("oracle of dimension {} evaluated at a point of size {}",
                                        dimension_, x.size()));
  }
  const Vector d = x - xstar_;
  switch (kind_) {
    case Kind::Quadratic: {
      const Eigen::Map<const Vector> lambda(values_.data(), dimension_);
      if (rotation_.size() == 0) return lambda.cwiseProduct(d);
      return rotation_ * lambda.cwiseProduct(rotation_.transpose() * d);
    }
    case Kind::PiecewiseLinearScalar:
      return Vector::Constant(1, scalar_gradient(d(0)));
    case Kind::SeparableComposite: {
      Vector g(dimension_);
      for (int i = 0; i < dimension_; ++i) g(i) = components_[static_cast<std::size_t>(i)].scalar_gradient(d(i));
      return g;
    }
  }
  return Vector::Zero(dimension_);
}

GradientOracle GradientOracle::translated(const Vector& offset) const {
  if (offset.size() != dimension_) throw DimensionMismatch("translation offset has the wrong size");
  GradientOracle o = *this;
  o.xstar_ += offset;
  return o;
}

double GradientOracle::slope_min() const noexcept {
  if (kind_ == Kind::SeparableComposite) {
    double s = components_.front().slope_min();
    for (const auto& c : components_) s = std::min(s, c.slope_min());
    return s;
  }
  return *std::min_element(values_.begin(), values_.end());
}

double GradientOracle::slope_max() const noexcept {
  if (kind_ == Kind::SeparableComposite) {
    double s = components_.front().slope_max();
    for (const auto& c : components_) s = std::max(s, c.slope_max());
    return s;
  }
  return *std::max_element(values_.begin(), values_.end());
}

bool GradientOracle::belongs_to(const SectorClass& sector) const noexcept {
  return slope_min() >= sector.m() && slope_max() <= sector.L();
}

namespace {

std::string join(const std::vector<double>& v, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += sep;
    out += fmt::format("{}", v[i]);
  }
  return out;
}

}  // namespace

std::string GradientOracle::id() const {
  std::string out;
  switch (kind_) {
    case Kind::Quadratic:
      out = "quadratic:" + join(values_, ",");
      if (rotation_.size() != 0) out += fmt::format(";rot={}", rotation_seed_);
      break;
    case Kind::PiecewiseLinearScalar: {
      out = "pwl:";
      for (std::size_t i = 0; i < values_.size(); ++i) {
        if (i) out += ',';
        out += fmt::format("{}:{}", breakpoints_[i], values_[i]);
      }
      break;
    }
    case Kind::SeparableComposite: {
      out = "sep:";
      for (std::size_t i = 0; i < components_.size(); ++i) {
        if (i) out += '|';
        GradientOracle centered = components_[i];
        centered.xstar_.setZero();
        out += centered.id();
      }
      break;
    }
  }
  if (!xstar_.isZero(0.0)) {
    out += '@' + join(std::vector<double>(xstar_.data(), xstar_.data() + xstar_.size()), ",");
  }
  return out;
}

Vector plant_apply(const GradientOracle& oracle, const Vector& u) { return oracle.grad(u + oracle.xstar()); }

Vector shifted_plant_apply(const GradientOracle& oracle, const SectorClass& sector, const Vector& u) {
  return u - sector.shift() * plant_apply(oracle, u);
}

bool sampled_sector_membership(const GradientOracle& oracle, const SectorClass& sector, int samples,
                               std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> decade(-3.0, 3.0);
  for (int s = 0; s < samples; ++s) {
    const double scale = std::pow(10.0, decade(rng));
    Vector u(oracle.dimension());
    for (int i = 0; i < u.size(); ++i) u(i) = scale * normal(rng);
    if (!sector_check(u, oracle.grad(u + oracle.xstar()), sector)) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Parsing

namespace {

GradientOracle parse_scalar_or_quadratic(std::string_view text) {
  const std::string_view t = detail::trim(text);
  const auto colon = t.find(':');
  if (colon == std::string_view::npos) throw InvalidInput(fmt::format("oracle '{}' has no kind prefix", text));
  const std::string kind = detail::lower(t.substr(0, colon));
  std::string_view body = t.substr(colon + 1);
  if (kind == "quadratic" || kind == "quad") {
    std::optional<std::uint64_t> rot;
    if (const auto semi = body.find(';'); semi != std::string_view::npos) {
      const std::string_view opt = detail::trim(body.substr(semi + 1));
      if (opt.rfind("rot=", 0) != 0) throw InvalidInput(fmt::format("unknown quadratic option '{}'", opt));
      rot = static_cast<std::uint64_t>(detail::parse_double(opt.substr(4)));
      body = body.substr(0, semi);
    }
    std::vector<double> eig = detail::parse_double_list(body);
    return rot ? GradientOracle::rotated_quadratic(std::move(eig), *rot) : GradientOracle::quadratic(std::move(eig));
  }
  if (kind == "pwl") {
    std::vector<double> bps, slopes;
    for (const std::string& pair : detail::split_any(body, ",")) {
      const auto c = pair.find(':');
      if (c == std::string::npos) throw InvalidInput(fmt::format("pwl segment '{}' must be breakpoint:slope", pair));
      bps.push_back(detail::parse_double(pair.substr(0, c)));
      slopes.push_back(detail::parse_double(pair.substr(c + 1)));
    }
    return GradientOracle::piecewise_linear(std::move(bps), std::move(slopes));
  }
  throw InvalidInput(fmt::format("unknown oracle kind '{}'", kind));
}

}  // namespace

GradientOracle parse_oracle(std::string_view text) {
  std::string_view t = detail::trim(text);
  std::optional<std::vector<double>> offset;
  if (const auto at = t.rfind('@'); at != std::string_view::npos) {
    offset = detail::parse_double_list(t.substr(at + 1));
    t = t.substr(0, at);
  }
  GradientOracle o = [&] {
    if (detail::lower(t.substr(0, 4)) == "sep:") {
      std::vector<GradientOracle> comps;
      for (const std::string& c : detail::split_any(t.substr(4), "|")) comps.push_back(parse_scalar_or_quadratic(c));
      return GradientOracle::separable(std::move(comps));
    }
    return parse_scalar_or_quadratic(t);
  }();
  if (offset) {
    if (static_cast<int>(offset->size()) != o.dimension()) {
      throw InvalidInput(fmt::format("x* offset has {} entries, oracle dimension is {}", offset->size(), o.dimension()));
    }
    o = o.translated(Eigen::Map<const Vector>(offset->data(), o.dimension()));
  }
  return o;
}

nlohmann::ordered_json oracle_to_json(const GradientOracle& oracle) {
  nlohmann::ordered_json j;
  switch (oracle.kind()) {
    case GradientOracle::Kind::Quadratic:
      j["kind"] = "quadratic";
      j["eigenvalues"] = oracle.eigenvalues();
      if (oracle.rotation().size() != 0) j["rotation_seed"] = oracle.rotation_seed();
      break;
    case GradientOracle::Kind::PiecewiseLinearScalar:
      j["kind"] = "pwl";
      j["breakpoints"] = oracle.breakpoints();
      j["slopes"] = oracle.slopes();
      break;
    case GradientOracle::Kind::SeparableComposite: {
      j["kind"] = "separable";
      nlohmann::ordered_json comps = nlohmann::ordered_json::array();
      for (GradientOracle c : oracle.components()) {
        c = c.translated(-c.xstar());
        comps.push_back(oracle_to_json(c));
      }
      j["components"] = comps;
      break;
    }
  }
  j["xstar"] = std::vector<double>(oracle.xstar().data(), oracle.xstar().data() + oracle.xstar().size());
  return j;
}

GradientOracle oracle_from_json(const nlohmann::json& j) {
  if (j.is_string()) return parse_oracle(j.get<std::string>());
  const std::string kind = detail::lower(j.at("kind").get<std::string>());
  GradientOracle o = [&] {
    if (kind == "quadratic") {
      auto eig = j.at("eigenvalues").get<std::vector<double>>();
      if (j.contains("rotation_seed")) {
        return GradientOracle::rotated_quadratic(std::move(eig), j.at("rotation_seed").get<std::uint64_t>());
      }
      return GradientOracle::quadratic(std::move(eig));
    }
    if (kind == "pwl") {
      return GradientOracle::piecewise_linear(j.at("breakpoints").get<std::vector<double>>(),
                                              j.at("slopes").get<std::vector<double>>());
    }
    if (kind == "separable") {
      std::vector<GradientOracle> comps;
      for (const auto& c : j.at("components")) comps.push_back(oracle_from_json(c));
      return GradientOracle::separable(std::move(comps));
    }
    throw InvalidInput(fmt::format("unknown oracle kind '{}'", kind));
  }();
  if (j.contains("xstar")) {
    const auto xs = j.at("xstar").get<std::vector<double>>();
    if (static_cast<int>(xs.size()) != o.dimension()) throw InvalidInput("xstar has the wrong dimension");
    o = o.translated(Eigen::Map<const Vector>(xs.data(), o.dimension()) - o.xstar());
  }
  return o;
}

}  // namespace loopshift
