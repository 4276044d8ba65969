#pragma once

// Helpers shared by the unit tests: seeded generators and a few oracles that
// deliberately avoid the library code they check.

#include <cmath>
#include <complex>
#include <random>
#include <vector>

#include "loopshift/method_catalog.hpp"
#include "loopshift/polynomial.hpp"
#include "loopshift/transfer_function.hpp"

namespace testing_support {

using loopshift::Complex;
using loopshift::Polynomial;
using loopshift::RationalTF;

inline std::mt19937_64& rng() {
  static std::mt19937_64 gen(20240611);
  return gen;
}

inline double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng()); }

inline Polynomial random_polynomial(int degree) {
  std::vector<double> c(static_cast<std::size_t>(degree) + 1);
  for (double& v : c) v = uniform(-2.0, 2.0);
  if (std::abs(c.back()) < 0.2) c.back() = 1.0;
  return Polynomial(c);
}

// Roots drawn inside the disc of radius `radius`, conjugate pairs mixed with
// real roots.
inline std::vector<Complex> random_roots(int degree, double radius) {
  std::vector<Complex> r;
  while (static_cast<int>(r.size()) + 1 < degree) {
    const double mod = uniform(0.05, radius);
    const double ang = uniform(0.2, 2.9);
    r.push_back(std::polar(mod, ang));
    r.push_back(std::polar(mod, -ang));
  }
  while (static_cast<int>(r.size()) < degree) r.emplace_back(uniform(-radius, radius), 0.0);
  return r;
}

// Schur-stable proper transfer function of the given order.
inline RationalTF random_stable_tf(int order, double radius = 0.9) {
  const auto poles = random_roots(order, radius);
  Polynomial den = Polynomial::from_roots(std::span<const Complex>(poles));
  Polynomial num = random_polynomial(order);
  return RationalTF(num, den);
}

// Markov parameters of num/den by power-series long division in 1/z.
inline std::vector<double> long_division(const RationalTF& t, int steps) {
  const auto& n = t.num().coeffs();
  const auto& d = t.den().coeffs();
  const int nd = static_cast<int>(d.size()) - 1;
  // In descending powers: num(z) = sum a_j z^{nd-j}, den(z) = sum b_j z^{nd-j}.
  std::vector<double> a(static_cast<std::size_t>(nd) + 1, 0.0), b(static_cast<std::size_t>(nd) + 1, 0.0);
  for (int j = 0; j <= nd; ++j) {
    b[j] = d[nd - j];
    const int idx = nd - j;
    a[j] = idx < static_cast<int>(n.size()) ? n[idx] : 0.0;
  }
  std::vector<double> h(static_cast<std::size_t>(steps), 0.0);
  for (int k = 0; k < steps; ++k) {
    double v = k <= nd ? a[k] : 0.0;
    for (int j = 1; j <= std::min(k, nd); ++j) v -= b[j] * h[k - j];
    h[k] = v / b[0];
  }
  return h;
}

// Brute-force peak gain on a dense grid of the closed upper half circle.
inline double grid_peak(const RationalTF& t, int points = 200000) {
  double best = 0.0;
  for (int i = 0; i <= points; ++i) {
    const double th = M_PI * i / points;
    best = std::max(best, std::abs(t.evaluate(std::polar(1.0, th))));
  }
  return best;
}

// Closed-form certified rate of gradient descent over S(m, L).
inline double gd_rate_oracle(double alpha, double m, double L) {
  return std::max(1.0 - alpha * m, alpha * L - 1.0);
}

inline std::vector<loopshift::MethodSpec> random_catalog_methods(int count) {
  using loopshift::MethodSpec;
  std::vector<MethodSpec> out;
  for (int i = 0; i < count; ++i) {
    const double a = uniform(0.01, 1.5);
    const double b = uniform(0.0, 0.95);
    switch (i % 4) {
      case 0: out.push_back(MethodSpec::gradient(a)); break;
      case 1: out.push_back(MethodSpec::heavy_ball(a, b)); break;
      case 2: out.push_back(MethodSpec::nesterov(a, b)); break;
      default: out.push_back(MethodSpec::pid(a, b)); break;
    }
  }
  return out;
}

inline double max_coeff_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < std::max(a.size(), b.size()); ++i) {
    const double x = i < a.size() ? a[i] : 0.0;
    const double y = i < b.size() ? b[i] : 0.0;
    d = std::max(d, std::abs(x - y));
  }
  return d;
}

}  // namespace testing_support
