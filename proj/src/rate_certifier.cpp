#include "loopshift/rate_certifier.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <tuple>

#include <fmt/format.h>

#include "loopshift/error.hpp"
#include "loopshift/parallel.hpp"

namespace loopshift {

namespace {

constexpr double kTopRho = 1.0 - 1e-9;

// Certificate for an already loop-shifted controller whose pole radius is known.
RateCertificate certify_shifted(const RationalTF& shifted, double radius, const SectorClass& sector,
                                double rho) {
  RateCertificate c;
  c.rho = rho;
  c.threshold = sector.threshold();
  c.stable = radius < rho * (1.0 - kStabilityMargin);
  if (c.stable) {
    const HinfNorm h = hinf_norm(arg_scale(shifted, rho));
    c.hinf = h.norm;
    c.peak_frequency = h.peak_frequency;
  } else {
    c.hinf = std::numeric_limits<double>::infinity();
    c.peak_frequency = std::numeric_limits<double>::quiet_NaN();
  }
  c.certified = c.stable && c.hinf < c.threshold;
  c.margin = c.threshold - c.hinf;
  return c;
}

void check_rho(double rho) {
  if (!(rho > 0.0 && rho < 1.0)) throw InvalidParameter(fmt::format("rho must lie in (0, 1), got {}", rho));
}

}  // namespace

RationalTF loop_shift(const RationalTF& controller, const SectorClass& sector) {
  const Polynomial& n = controller.num();
  const Polynomial& d = controller.den();
  const Polynomial shifted_den = n - d.scaled(sector.shift());
  try {
    return reduce(RationalTF(n, shifted_den));
  } catch (const ImproperSystem& e) {
    throw ImproperShift(fmt::format("loop shift of {} is improper: {}", controller.to_string(), e.what()));
  } catch (const InvalidInput& e) {
    throw ImproperShift(fmt::format("loop shift of {} is degenerate: {}", controller.to_string(), e.what()));
  }
}

RationalTF complementary_sensitivity(const RationalTF& controller, const SectorClass& sector, double rho) {
  // Feedback of the scaled controller K̄(rho z) around the static gain -(m+L)/2.
  return loop_shift(arg_scale(controller, rho), sector);
}

RateCertificate certify_rate(const RationalTF& controller, const SectorClass& sector, double rho) {
  check_rho(rho);
  const RationalTF shifted = loop_shift(controller, sector);
  return certify_shifted(shifted, stability_radius(shifted), sector, rho);
}

RateCertificate certify_rate(const MethodSpec& spec, const SectorClass& sector, double rho) {
  return certify_rate(build_controller(spec), sector, rho);
}

std::optional<RateSearchResult> bisect_rate(const RationalTF& controller, const SectorClass& sector,
                                            const BisectionOptions& options) {
  if (!(options.tolerance > 0.0)) throw InvalidParameter("bisection tolerance must be positive");
  const RationalTF shifted = loop_shift(controller, sector);
  const double radius = stability_radius(shifted);
  auto certified_at = [&](double rho) { return certify_shifted(shifted, radius, sector, rho); };

  RateCertificate top = certified_at(kTopRho);
  if (!top.certified) return std::nullopt;

  RateSearchResult result;
  const double floor = std::max(0.0, radius);

  // Scan first so that a non-monotone certificate cannot mislead the bisection.
  double lo = floor;
  double hi = kTopRho;
  RateCertificate hi_cert = top;
  const int n = std::max(0, options.scan_points);
  for (int j = 1; j <= n; ++j) {
    const double rho = floor + (kTopRho - floor) * j / (n + 1);
    RateCertificate c = certified_at(rho);
    if (c.certified) {
      hi = rho;
      hi_cert = c;
      break;
    }
    lo = rho;
  }
  result.bracket_history.emplace_back(lo, hi);

  while (hi - lo > options.tolerance) {
    const double mid = 0.5 * (lo + hi);
    RateCertificate c = certified_at(mid);
    if (c.certified) {
      hi = mid;
      hi_cert = c;
    } else {
      lo = mid;
    }
    ++result.iterations;
    result.bracket_history.emplace_back(lo, hi);
  }
  result.rho_star = hi;
  result.certificate_at_rho_star = hi_cert;
  return result;
}

std::optional<RateSearchResult> bisect_rate(const MethodSpec& spec, const SectorClass& sector,
                                            const BisectionOptions& options) {
  return bisect_rate(build_controller(spec), sector, options);
}

std::vector<CurvePoint> certified_rate_curve(const SectorClass& sector, const std::vector<double>& alphas,
                                             const BisectionOptions& options) {
  for (double a : alphas) {
    if (!(a > 0.0)) throw InvalidParameter(fmt::format("step sizes must be positive, got {}", a));
  }
  return parallel_map<CurvePoint>(alphas.size(), [&](std::size_t i) {
    CurvePoint p{alphas[i], std::nullopt};
    if (auto r = bisect_rate(MethodSpec::gradient(alphas[i]), sector, options)) p.rho_star = r->rho_star;
    return p;
  });
}

StepsizeSearchResult search_stepsize(const SectorClass& sector, double tolerance) {
  BisectionOptions bisection;
  bisection.tolerance = std::min(1e-7, tolerance);
  StepsizeSearchResult out;
  auto rate = [&](double alpha) {
    ++out.evaluations;
    const auto r = bisect_rate(MethodSpec::gradient(alpha), sector, bisection);
    return r ? r->rho_star : 1.0;
  };

  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = 0.0;
  double b = 2.0 / sector.L();
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = rate(c);
  double fd = rate(d);
  while (b - a > tolerance) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = rate(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = rate(d);
    }
  }
  out.alpha = 0.5 * (a + b);
  out.rho_star = rate(out.alpha);
  return out;
}

namespace {

std::vector<double> refine_axis(const std::vector<double>& grid, std::size_t index, double upper_exclusive) {
  if (grid.size() < 2) return grid;
  const double lo = grid[index == 0 ? 0 : index - 1];
  const double hi = grid[std::min(index + 1, grid.size() - 1)];
  std::vector<double> out(grid.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(out.size() - 1);
  }
  for (double& v : out) v = std::min(v, std::nextafter(upper_exclusive, 0.0));
  return out;
}

}  // namespace

std::optional<TwoParamResult> search_two_param(MethodFamily family, const SectorClass& sector,
                                               const std::vector<double>& alpha_grid,
                                               const std::vector<double>& beta_grid,
                                               const TwoParamOptions& options) {
  if (family != MethodFamily::HeavyBall && family != MethodFamily::Nesterov && family != MethodFamily::PID) {
    throw InvalidParameter("two-parameter search applies to heavyball, nesterov, or pid");
  }
  if (alpha_grid.empty() || beta_grid.empty()) return std::nullopt;

  std::vector<double> alphas = alpha_grid;
  std::vector<double> betas = beta_grid;
  std::sort(alphas.begin(), alphas.end());
  std::sort(betas.begin(), betas.end());

  std::optional<TwoParamResult> best;
  int evaluations = 0;
  auto better = [](const TwoParamResult& x, const TwoParamResult& y) {
    return std::tie(x.rho_star, x.alpha, x.beta) < std::tie(y.rho_star, y.alpha, y.beta);
  };

  for (int round = 0; round <= options.refinement_rounds; ++round) {
    const std::size_t total = alphas.size() * betas.size();
    const auto rates = parallel_map<std::optional<double>>(total, [&](std::size_t k) -> std::optional<double> {
      const double a = alphas[k / betas.size()];
      const double b = betas[k % betas.size()];
      if (!(a > 0.0) || !(b >= 0.0 && b < 1.0)) return std::nullopt;
      MethodSpec spec{family, a, b, {}};
      const auto r = bisect_rate(spec, sector, options.bisection);
      if (!r) return std::nullopt;
      return r->rho_star;
    });
    evaluations += static_cast<int>(total);

    std::optional<std::pair<std::size_t, std::size_t>> round_best;
    std::optional<TwoParamResult> round_value;
    for (std::size_t k = 0; k < total; ++k) {
      if (!rates[k]) continue;
      TwoParamResult cand{alphas[k / betas.size()], betas[k % betas.size()], *rates[k], 0};
      if (!round_value || better(cand, *round_value)) {
        round_value = cand;
        round_best = {k / betas.size(), k % betas.size()};
      }
    }
    if (!round_value) break;
    if (!best || better(*round_value, *best)) best = round_value;
    if (round == options.refinement_rounds) break;
    alphas = refine_axis(alphas, round_best->first, std::numeric_limits<double>::infinity());
    betas = refine_axis(betas, round_best->second, 1.0);
  }
  if (best) best->evaluations = evaluations;
  return best;
}

nlohmann::ordered_json certificate_to_json(const RateCertificate& cert, const MethodSpec& spec,
                                           const SectorClass& sector) {
  auto num = [](double v) -> nlohmann::ordered_json {
    if (!std::isfinite(v)) return nullptr;
    return v;
  };
  nlohmann::ordered_json j;
  j["method"] = spec.to_string();
  j["m"] = sector.m();
  j["L"] = sector.L();
  j["rho"] = cert.rho;
  j["stable"] = cert.stable;
  j["hinf"] = num(cert.hinf);
  j["threshold"] = cert.threshold;
  j["certified"] = cert.certified;
  j["margin"] = num(cert.margin);
  j["peak_frequency"] = num(cert.peak_frequency);
  return j;
}

}  // namespace loopshift
