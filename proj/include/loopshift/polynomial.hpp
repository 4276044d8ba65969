#pragma once

#include <complex>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace loopshift {

using Complex = std::complex<double>;

// Real-coefficient univariate polynomial. Coefficients are stored in
// ascending degree order: coeffs()[i] multiplies z^i.
//
// The representation is always normalized: high-order coefficients whose
// magnitude is below 1e-12 times the largest coefficient magnitude are
// trimmed, and the zero polynomial is stored as the single coefficient 0.
class Polynomial {
 public:
  // Relative trim tolerance applied on construction and after arithmetic.
  static constexpr double kTrimTolerance = 1e-12;

  Polynomial() : coeffs_{0.0} {}
  explicit Polynomial(std::vector<double> coeffs);
  Polynomial(std::initializer_list<double> coeffs)
      : Polynomial(std::vector<double>(coeffs)) {}

  static Polynomial constant(double c) { return Polynomial({c}); }
  // z^n
  static Polynomial monomial(int degree, double coefficient = 1.0);
  // leading * prod (z - r_i) for a set of real roots.
  static Polynomial from_roots(std::span<const double> roots, double leading = 1.0);
  // leading * prod (z - r_i); complex roots are expected to come in conjugate
  // pairs, the imaginary residue of the product is discarded.
  static Polynomial from_roots(std::span<const Complex> roots, double leading = 1.0);

  const std::vector<double>& coeffs() const noexcept { return coeffs_; }
  int degree() const noexcept { return static_cast<int>(coeffs_.size()) - 1; }
  bool is_zero() const noexcept { return coeffs_.size() == 1 && coeffs_[0] == 0.0; }
  double leading() const noexcept { return coeffs_.back(); }
  double coeff(int i) const noexcept {
    return i >= 0 && i < static_cast<int>(coeffs_.size()) ? coeffs_[i] : 0.0;
  }
  double max_abs_coeff() const noexcept;

  // Horner evaluation, highest degree first.
  Complex evaluate(Complex z) const noexcept;
  double evaluate(double x) const noexcept;
  Complex operator()(Complex z) const noexcept { return evaluate(z); }

  Polynomial derivative() const;
  Polynomial scaled(double c) const;
  // q(z) = p(rho * z), i.e. coeffs[i] * rho^i. Throws InvalidParameter for rho <= 0.
  Polynomial arg_scaled(double rho) const;

  friend Polynomial operator+(const Polynomial& a, const Polynomial& b);
  friend Polynomial operator-(const Polynomial& a, const Polynomial& b);
  friend Polynomial operator*(const Polynomial& a, const Polynomial& b);
  friend Polynomial operator*(double c, const Polynomial& p) { return p.scaled(c); }
  Polynomial operator-() const { return scaled(-1.0); }

  friend bool operator==(const Polynomial&, const Polynomial&) = default;

  std::string to_string() const;

 private:
  void normalize();

  std::vector<double> coeffs_;
};

// All complex roots with multiplicity. Degrees 1 and 2 are solved in closed
// form; higher degrees via eigenvalues of the companion matrix followed by
// a Newton polish of every root. Throws InvalidInput on the zero polynomial;
// a nonzero constant has no roots.
std::vector<Complex> roots(const Polynomial& p);

// Largest root modulus, 0 for constants.
double max_root_modulus(const Polynomial& p);

}  // namespace loopshift
