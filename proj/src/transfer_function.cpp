#include "loopshift/transfer_function.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <fmt/format.h>

#include "loopshift/error.hpp"

namespace loopshift {

RationalTF::RationalTF(Polynomial num, Polynomial den) {
  if (den.is_zero()) throw InvalidInput("transfer function denominator is zero");
  if (!num.is_zero() && num.degree() > den.degree()) {
    throw ImproperSystem(fmt::format("improper transfer function: deg num {} > deg den {}",
                                     num.degree(), den.degree()));
  }
  const double lead = den.leading();
  num_ = num.scaled(1.0 / lead);
  den_ = den.scaled(1.0 / lead);
}

RationalTF operator+(const RationalTF& a, const RationalTF& b) {
  if (a.den_ == b.den_) return RationalTF(a.num_ + b.num_, a.den_);
  return RationalTF(a.num_ * b.den_ + b.num_ * a.den_, a.den_ * b.den_);
}

RationalTF operator-(const RationalTF& a, const RationalTF& b) { return a + (-1.0) * b; }

RationalTF operator*(const RationalTF& a, const RationalTF& b) {
  return RationalTF(a.num_ * b.num_, a.den_ * b.den_);
}

RationalTF operator*(double c, const RationalTF& t) { return RationalTF(t.num_.scaled(c), t.den_); }

std::string RationalTF::to_string() const {
  return fmt::format("({}) / ({})", num_.to_string(), den_.to_string());
}

namespace {

double poly_distance(const Polynomial& a, const Polynomial& b) {
  const int n = std::max(a.degree(), b.degree());
  double d = 0.0;
  for (int i = 0; i <= n; ++i) d = std::max(d, std::abs(a.coeff(i) - b.coeff(i)));
  return d;
}

}  // namespace

double coefficient_distance(const RationalTF& a, const RationalTF& b) {
  return std::max(poly_distance(a.num(), b.num()), poly_distance(a.den(), b.den()));
}

RationalTF reduce(const RationalTF& t, double tolerance) {
  if (t.num().is_zero() || t.num().degree() < 1 || t.den().degree() < 1) return t;
  std::vector<Complex> zeros = roots(t.num());
  std::vector<Complex> poles = roots(t.den());
  std::vector<bool> pole_used(poles.size(), false);
  std::vector<Complex> kept_zeros;
  bool cancelled = false;
  for (const Complex& z : zeros) {
    std::size_t best = poles.size();
    double best_dist = tolerance;
    for (std::size_t j = 0; j < poles.size(); ++j) {
      if (pole_used[j]) continue;
      const double d = std::abs(z - poles[j]);
      if (d < best_dist) {
        best_dist = d;
        best = j;
      }
    }
    if (best < poles.size()) {
      pole_used[best] = true;
      cancelled = true;
    } else {
      kept_zeros.push_back(z);
    }
  }
  if (!cancelled) return t;
  std::vector<Complex> kept_poles;
  for (std::size_t j = 0; j < poles.size(); ++j)
    if (!pole_used[j]) kept_poles.push_back(poles[j]);
  return RationalTF(Polynomial::from_roots(std::span<const Complex>(kept_zeros), t.num().leading()),
                    Polynomial::from_roots(std::span<const Complex>(kept_poles), 1.0));
}

RationalTF arg_scale(const RationalTF& t, double rho) {
  if (!(rho > 0.0)) throw InvalidParameter(fmt::format("rho must be positive, got {}", rho));
  return RationalTF(t.num().arg_scaled(rho), t.den().arg_scaled(rho));
}

double stability_radius(const RationalTF& t) {
  const RationalTF r = reduce(t);
  return max_root_modulus(r.den());
}

Complex freq_response(const RationalTF& t, double f_hz) {
  if (!(f_hz > 0.0 && f_hz <= 0.5)) {
    throw InvalidParameter(fmt::format("frequency must lie in (0, 0.5], got {}", f_hz));
  }
  const Complex z = std::polar(1.0, 2.0 * std::numbers::pi * f_hz);
  const Complex d = t.den().evaluate(z);
  if (std::abs(d) <= 1e-15 * t.den().max_abs_coeff()) {
    return {std::numeric_limits<double>::infinity(), std::numeric_limits<double>::quiet_NaN()};
  }
  return t.num().evaluate(z) / d;
}

HinfNorm hinf_norm(const RationalTF& t) {
  constexpr int kGrid = 4096;
  constexpr double kAngleTol = 1e-10;

  const double radius = stability_radius(t);
  if (!(radius < 1.0)) {
    throw UnstableSystem(fmt::format("H-infinity norm needs a stable system; pole modulus {}", radius));
  }
  if (t.is_constant()) return {std::abs(t.num().coeff(0)), 0.0, 0.0};

  auto gain = [&t](double theta) { return std::abs(t.evaluate(std::polar(1.0, theta))); };
  const double step = std::numbers::pi / (kGrid - 1);

  int best_index = 0;
  double best = -1.0;
  for (int i = 0; i < kGrid; ++i) {
    const double g = gain(i == kGrid - 1 ? std::numbers::pi : i * step);
    if (g > best) {
      best = g;
      best_index = i;
    }
  }
  double peak_angle = best_index == kGrid - 1 ? std::numbers::pi : best_index * step;

  // Golden-section maximization over the two grid intervals flanking the argmax.
  double a = std::max(0.0, (best_index - 1) * step);
  double b = std::min(std::numbers::pi, (best_index + 1) * step);
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double gc = gain(c);
  double gd = gain(d);
  while (b - a > kAngleTol * std::numbers::pi) {
    if (gc >= gd) {
      b = d;
      d = c;
      gd = gc;
      c = b - inv_phi * (b - a);
      gc = gain(c);
    } else {
      a = c;
      c = d;
      gc = gd;
      d = a + inv_phi * (b - a);
      gd = gain(d);
    }
  }
  const double mid = 0.5 * (a + b);
  const double gmid = gain(mid);
  if (gmid > best) {
    best = gmid;
    peak_angle = mid;
  }
  return {best, peak_angle, peak_angle / (2.0 * std::numbers::pi)};
}

std::vector<double> StateSpace::impulse_response(int steps) const {
  std::vector<double> h;
  if (steps <= 0) return h;
  h.reserve(static_cast<std::size_t>(steps));
  h.push_back(D);
  Eigen::VectorXd x = B;
  for (int k = 1; k < steps; ++k) {
    h.push_back(order() == 0 ? 0.0 : (C * x)(0));
    if (order() > 0) x = A * x;
  }
  return h;
}

StateSpace realize(const RationalTF& t) {
  const int n = t.order();
  StateSpace ss;
  // den is monic, so the direct feedthrough is the numerator's degree-n coefficient.
  ss.D = t.num().coeff(n);
  ss.A = Eigen::MatrixXd::Zero(n, n);
  ss.B = Eigen::VectorXd::Zero(n);
  ss.C = Eigen::RowVectorXd::Zero(n);
  if (n == 0) return ss;
  for (int i = 0; i + 1 < n; ++i) ss.A(i, i + 1) = 1.0;
  for (int j = 0; j < n; ++j) {
    ss.A(n - 1, j) = -t.den().coeff(j);
    ss.C(j) = t.num().coeff(j) - ss.D * t.den().coeff(j);
  }
  ss.B(n - 1) = 1.0;
  return ss;
}

}  // namespace loopshift
