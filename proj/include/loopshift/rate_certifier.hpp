#pragma once

#include <optional>
#include <utility>
#include <vector>

#include <json.hpp>

#include "loopshift/method_catalog.hpp"
#include "loopshift/sector.hpp"
#include "loopshift/transfer_function.hpp"

namespace loopshift {

// Pole moduli must stay below rho * (1 - kStabilityMargin) for the scaled
// controller to count as stable.
inline constexpr double kStabilityMargin = 1e-9;

// Small-gain rate certificate for one (method, sector, rho).
//
// certified means: the loop-shifted controller scaled by rho is stable and
// its H-infinity norm is below (L + m)/(L - m), which guarantees linear
// convergence at rate rho for every f in S(m, L). The certificate is
// sufficient, not necessary, and says nothing about the constant c in
// |x^k - x*| <= c rho^k |x^0 - x*|.
struct RateCertificate {
  double rho = 0.0;
  bool stable = false;
  double hinf = 0.0;            // +inf when not stable
  double threshold = 0.0;
  bool certified = false;
  double margin = 0.0;          // threshold - hinf
  double peak_frequency = 0.0;  // cycles per sample; NaN when not stable
};

struct RateSearchResult {
  double rho_star = 1.0;
  RateCertificate certificate_at_rho_star;
  int iterations = 0;
  std::vector<std::pair<double, double>> bracket_history;
};

// K̄' = K̄ / (K̄ - 2/(m+L)), reduced and monic. Throws ImproperShift when the
// leading coefficients cancel and the result becomes improper.
RationalTF loop_shift(const RationalTF& controller, const SectorClass& sector);

// K̄'(rho z) computed by scaling the controller first:
// K̄(rho z) / (K̄(rho z) - 2/(m+L)). Equals arg_scale(loop_shift(K̄), rho).
RationalTF complementary_sensitivity(const RationalTF& controller, const SectorClass& sector, double rho);

// Requires 0 < rho < 1 (InvalidParameter otherwise).
RateCertificate certify_rate(const RationalTF& controller, const SectorClass& sector, double rho);
RateCertificate certify_rate(const MethodSpec& spec, const SectorClass& sector, double rho);

struct BisectionOptions {
  double tolerance = 1e-6;
  // Number of interior scan points tried before bisecting.
  int scan_points = 64;
};

// Smallest certifiable rate. A 64-point scan over (stability radius, 1)
// locates the first certified point, then bisection tightens the bracket
// between it and the last uncertified point to `tolerance`.
// Returns nullopt when the method is not certified even at rho = 1 - 1e-9.
std::optional<RateSearchResult> bisect_rate(const RationalTF& controller, const SectorClass& sector,
                                            const BisectionOptions& options = {});
std::optional<RateSearchResult> bisect_rate(const MethodSpec& spec, const SectorClass& sector,
                                            const BisectionOptions& options = {});

struct CurvePoint {
  double alpha = 0.0;
  std::optional<double> rho_star;
};

// Gradient-descent certified rate as a function of the step size.
std::vector<CurvePoint> certified_rate_curve(const SectorClass& sector, const std::vector<double>& alphas,
                                             const BisectionOptions& options = {});

struct StepsizeSearchResult {
  double alpha = 0.0;
  double rho_star = 1.0;
  int evaluations = 0;
};

// Golden-section search of the certified gradient rate over alpha in (0, 2/L).
StepsizeSearchResult search_stepsize(const SectorClass& sector, double tolerance = 1e-7);

struct TwoParamResult {
  double alpha = 0.0;
  double beta = 0.0;
  double rho_star = 1.0;
  int evaluations = 0;
};

struct TwoParamOptions {
  int refinement_rounds = 2;
  BisectionOptions bisection;
};

// Exhaustive (alpha, beta) grid search, then `refinement_rounds` re-gridding
// passes over the neighbours of the incumbent. Ties go to the smaller alpha,
// then the smaller beta. nullopt when no grid point is certified.
std::optional<TwoParamResult> search_two_param(MethodFamily family, const SectorClass& sector,
                                               const std::vector<double>& alpha_grid,
                                               const std::vector<double>& beta_grid,
                                               const TwoParamOptions& options = {});

// {method, m, L, rho, stable, hinf, threshold, certified, margin, peak_frequency}.
// Non-finite numbers are written as null.
nlohmann::ordered_json certificate_to_json(const RateCertificate& cert, const MethodSpec& spec,
                                           const SectorClass& sector);

}  // namespace loopshift
