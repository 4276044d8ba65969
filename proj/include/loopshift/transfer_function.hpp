#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "loopshift/polynomial.hpp"

namespace loopshift {

// SISO discrete-time transfer function num(z) / den(z).
//
// Invariants maintained by every constructor:
//  * den is nonzero and monic (num rescaled accordingly);
//  * the system is proper, deg(num) <= deg(den).
// Common factors are never cancelled implicitly; see reduce().
class RationalTF {
 public:
  // The unit gain 1.
  RationalTF() : num_({1.0}), den_({1.0}) {}
  // Throws InvalidInput for a zero denominator, ImproperSystem if deg num > deg den.
  RationalTF(Polynomial num, Polynomial den);

  static RationalTF constant(double c) { return RationalTF(Polynomial::constant(c), Polynomial{1.0}); }

  const Polynomial& num() const noexcept { return num_; }
  const Polynomial& den() const noexcept { return den_; }
  int order() const noexcept { return den_.degree(); }
  bool is_constant() const noexcept { return den_.degree() == 0; }
  bool is_strictly_proper() const noexcept { return num_.is_zero() || num_.degree() < den_.degree(); }

  Complex evaluate(Complex z) const noexcept { return num_.evaluate(z) / den_.evaluate(z); }
  Complex operator()(Complex z) const noexcept { return evaluate(z); }

  friend RationalTF operator+(const RationalTF& a, const RationalTF& b);
  friend RationalTF operator-(const RationalTF& a, const RationalTF& b);
  friend RationalTF operator*(const RationalTF& a, const RationalTF& b);
  friend RationalTF operator*(double c, const RationalTF& t);

  friend bool operator==(const RationalTF&, const RationalTF&) = default;

  std::string to_string() const;

 private:
  Polynomial num_;
  Polynomial den_;
};

// Largest absolute difference between corresponding coefficients of the
// (monic-normalized) numerators and denominators. Degree mismatch counts the
// missing coefficients as zero.
double coefficient_distance(const RationalTF& a, const RationalTF& b);

// Cancels numerator/denominator root pairs closer than `tolerance`.
// Returns the input unchanged when nothing cancels.
RationalTF reduce(const RationalTF& t, double tolerance = 1e-8);

// t(rho * z). Throws InvalidParameter for rho <= 0.
RationalTF arg_scale(const RationalTF& t, double rho);

// max |pole| after reduce(); 0 for constants. t(rho z) is Schur stable iff
// stability_radius(t) < rho.
double stability_radius(const RationalTF& t);

// t(exp(i 2 pi f)) for unit sample time. Requires 0 < f <= 0.5. At a pole
// on the unit circle the result is (+inf, NaN): infinite magnitude, phase
// undefined.
Complex freq_response(const RationalTF& t, double f_hz);

struct HinfNorm {
  double norm = 0.0;
  double peak_angle = 0.0;      // radians in [0, pi]
  double peak_frequency = 0.0;  // cycles per sample, peak_angle / (2 pi)
};

// Peak gain over the unit circle of a Schur-stable system: 4096-point grid on
// [0, pi] followed by golden-section refinement around the grid maximum.
// Throws UnstableSystem if stability_radius(t) >= 1.
HinfNorm hinf_norm(const RationalTF& t);

// x+ = A x + B v, u = C x + D v.
struct StateSpace {
  Eigen::MatrixXd A;
  Eigen::VectorXd B;
  Eigen::RowVectorXd C;
  double D = 0.0;

  int order() const { return static_cast<int>(A.rows()); }
  // First `steps` Markov parameters D, CB, CAB, ...
  std::vector<double> impulse_response(int steps) const;
};

// Controllable canonical realization.
StateSpace realize(const RationalTF& t);

}  // namespace loopshift
