#include "loopshift/polynomial.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "loopshift/error.hpp"

namespace loopshift {

Polynomial::Polynomial(std::vector<double> coeffs) : coeffs_(std::move(coeffs)) {
  normalize();
}

void Polynomial::normalize() {
  if (coeffs_.empty()) {
    coeffs_.push_back(0.0);
    return;
  }
  const double scale = max_abs_coeff();
  const double cutoff = kTrimTolerance * scale;
  while (coeffs_.size() > 1 && std::abs(coeffs_.back()) <= cutoff) coeffs_.pop_back();
  if (coeffs_.size() == 1 && std::abs(coeffs_[0]) <= cutoff) coeffs_[0] = 0.0;
}

Polynomial Polynomial::monomial(int degree, double coefficient) {
  if (degree < 0) throw InvalidParameter("monomial degree must be non-negative");
  std::vector<double> c(static_cast<std::size_t>(degree) + 1, 0.0);
  c.back() = coefficient;
  return Polynomial(std::move(c));
}

Polynomial Polynomial::from_roots(std::span<const double> roots, double leading) {
  std::vector<double> c{leading};
  for (double r : roots) {
    std::vector<double> next(c.size() + 1, 0.0);
    for (std::size_t i = 0; i < c.size(); ++i) {
      next[i + 1] += c[i];
      next[i] -= r * c[i];
    }
    c = std::move(next);
  }
  return Polynomial(std::move(c));
}

Polynomial Polynomial::from_roots(std::span<const Complex> roots, double leading) {
  std::vector<Complex> c{Complex(leading, 0.0)};
  for (const Complex& r : roots) {
    std::vector<Complex> next(c.size() + 1, Complex(0.0, 0.0));
    for (std::size_t i = 0; i < c.size(); ++i) {
      next[i + 1] += c[i];
      next[i] -= r * c[i];
    }
    c = std::move(next);
  }
  std::vector<double> real(c.size());
  std::transform(c.begin(), c.end(), real.begin(), [](const Complex& v) { return v.real(); });
  return Polynomial(std::move(real));
}

double Polynomial::max_abs_coeff() const noexcept {
  double m = 0.0;
  for (double c : coeffs_) m = std::max(m, std::abs(c));
  return m;
}

Complex Polynomial::evaluate(Complex z) const noexcept {
  Complex acc(0.0, 0.0);
  for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it) acc = acc * z + *it;
  return acc;
}

double Polynomial::evaluate(double x) const noexcept {
  double acc = 0.0;
  for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it) acc = acc * x + *it;
  return acc;
}

Polynomial Polynomial::derivative() const {
  if (coeffs_.size() == 1) return Polynomial();
  std::vector<double> d(coeffs_.size() - 1);
  for (std::size_t i = 1; i < coeffs_.size(); ++i) d[i - 1] = static_cast<double>(i) * coeffs_[i];
  return Polynomial(std::move(d));
}

Polynomial Polynomial::scaled(double c) const {
  std::vector<double> s(coeffs_);
  for (double& v : s) v *= c;
  return Polynomial(std::move(s));
}

Polynomial Polynomial::arg_scaled(double rho) const {
  if (!(rho > 0.0)) throw InvalidParameter(fmt::format("argument scale must be positive, got {}", rho));
  std::vector<double> s(coeffs_);
  double power = 1.0;
  for (double& v : s) {
    v *= power;
    power *= rho;
  }
  return Polynomial(std::move(s));
}

Polynomial operator+(const Polynomial& a, const Polynomial& b) {
  std::vector<double> s(std::max(a.coeffs_.size(), b.coeffs_.size()), 0.0);
  for (std::size_t i = 0; i < a.coeffs_.size(); ++i) s[i] += a.coeffs_[i];
  for (std::size_t i = 0; i < b.coeffs_.size(); ++i) s[i] += b.coeffs_[i];
  return Polynomial(std::move(s));
}

Polynomial operator-(const Polynomial& a, const Polynomial& b) { return a + (-b); }

Polynomial operator*(const Polynomial& a, const Polynomial& b) {
  std::vector<double> s(a.coeffs_.size() + b.coeffs_.size() - 1, 0.0);
  for (std::size_t i = 0; i < a.coeffs_.size(); ++i)
    for (std::size_t j = 0; j < b.coeffs_.size(); ++j) s[i + j] += a.coeffs_[i] * b.coeffs_[j];
  return Polynomial(std::move(s));
}

std::string Polynomial::to_string() const {
  std::string out;
  for (int i = degree(); i >= 0; --i) {
    const double c = coeffs_[static_cast<std::size_t>(i)];
    if (c == 0.0 && degree() > 0) continue;
    if (!out.empty()) out += c < 0 ? " - " : " + ";
    else if (c < 0) out += "-";
    const double mag = std::abs(c);
    if (i == 0 || mag != 1.0) out += fmt::format("{:.6g}", mag);
    if (i >= 1) out += "z";
    if (i >= 2) out += fmt::format("^{}", i);
  }
  return out;
}

namespace {

std::vector<Complex> quadratic_roots(double a, double b, double c) {
  // Numerically stable form: q = -(b + sign(b) sqrt(disc)) / 2, roots q/a and c/q.
  const Complex disc = Complex(b * b - 4.0 * a * c, 0.0);
  const Complex sq = std::sqrt(disc);
  const double sign = b >= 0.0 ? 1.0 : -1.0;
  const Complex q = -0.5 * (b + sign * sq);
  if (std::abs(q) == 0.0) return {Complex(0.0, 0.0), Complex(0.0, 0.0)};
  return {q / a, c / q};
}

std::vector<Complex> companion_roots(const Polynomial& p) {
  const int n = p.degree();
  const double lead = p.leading();
  Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(n, n);
  companion.block(1, 0, n - 1, n - 1).setIdentity();
  for (int i = 0; i < n; ++i) companion(i, n - 1) = -p.coeff(i) / lead;
  Eigen::EigenSolver<Eigen::MatrixXd> solver(companion, /*computeEigenvectors=*/false);
  const Eigen::VectorXcd values = solver.eigenvalues();
  return std::vector<Complex>(values.data(), values.data() + values.size());
}

// Newton steps on p at r, kept only while they reduce |p(r)|.
Complex polish(const Polynomial& p, const Polynomial& dp, Complex r) {
  Complex best = r;
  double best_residual = std::abs(p.evaluate(r));
  for (int iter = 0; iter < 4 && best_residual > 0.0; ++iter) {
    const Complex slope = dp.evaluate(best);
    if (std::abs(slope) == 0.0) break;
    const Complex candidate = best - p.evaluate(best) / slope;
    const double residual = std::abs(p.evaluate(candidate));
    if (!(residual < best_residual)) break;
    best = candidate;
    best_residual = residual;
  }
  return best;
}

}  // namespace

std::vector<Complex> roots(const Polynomial& p) {
  if (p.is_zero()) throw InvalidInput("roots of the zero polynomial are undefined");
  std::vector<Complex> out;

  // Exact roots at the origin.
  std::size_t shift = 0;
  while (shift < p.coeffs().size() - 1 && p.coeffs()[shift] == 0.0) ++shift;
  out.assign(shift, Complex(0.0, 0.0));
  const Polynomial q(std::vector<double>(p.coeffs().begin() + static_cast<std::ptrdiff_t>(shift),
                                         p.coeffs().end()));

  std::vector<Complex> found;
  switch (q.degree()) {
    case 0:
      break;
    case 1:
      found.emplace_back(-q.coeff(0) / q.coeff(1), 0.0);
      break;
    case 2:
      found = quadratic_roots(q.coeff(2), q.coeff(1), q.coeff(0));
      break;
    default:
      found = companion_roots(q);
      break;
  }
  if (q.degree() >= 2) {
    const Polynomial dq = q.derivative();
    for (Complex& r : found) {
      r = polish(q, dq, r);
      // Snap numerically real roots onto the real axis.
      if (std::abs(r.imag()) <= 1e-14 * std::max(1.0, std::abs(r)) &&
          std::abs(q.evaluate(Complex(r.real(), 0.0))) <= std::abs(q.evaluate(r))) {
        r = Complex(r.real(), 0.0);
      }
    }
  }
  out.insert(out.end(), found.begin(), found.end());
  return out;
}

double max_root_modulus(const Polynomial& p) {
  if (p.degree() < 1) return 0.0;
  double radius = 0.0;
  for (const Complex& r : roots(p)) radius = std::max(radius, std::abs(r));
  return radius;
}

}  // namespace loopshift
