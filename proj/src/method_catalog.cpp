#include "loopshift/method_catalog.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include <fmt/format.h>

#include "loopshift/error.hpp"
#include "loopshift/sector.hpp"
#include "text_util.hpp"

namespace loopshift {

std::string_view family_name(MethodFamily family) {
  switch (family) {
    case MethodFamily::GradientDescent: return "gradient";
    case MethodFamily::HeavyBall: return "heavyball";
    case MethodFamily::Nesterov: return "nesterov";
    case MethodFamily::PID: return "pid";
    case MethodFamily::Custom: return "custom";
  }
  return "unknown";
}

MethodFamily parse_family(std::string_view name) {
  std::string key;
  for (char c : name) {
    if (c == '-' || c == '_' || c == ' ') continue;
    key += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  if (key == "gradient" || key == "gd" || key == "gradientdescent") return MethodFamily::GradientDescent;
  if (key == "heavyball" || key == "hb") return MethodFamily::HeavyBall;
  if (key == "nesterov" || key == "nag") return MethodFamily::Nesterov;
  if (key == "pid") return MethodFamily::PID;
  if (key == "custom") return MethodFamily::Custom;
  throw InvalidInput(fmt::format("unknown method family '{}'", name));
}

namespace {

bool has_integral_action(const RationalTF& tf) {
  return std::abs(tf.den().evaluate(1.0)) <= 1e-12 * std::max(1.0, tf.den().max_abs_coeff());
}

std::string coeff_list(const Polynomial& p) {
  std::string out = "[";
  for (std::size_t i = 0; i < p.coeffs().size(); ++i) {
    if (i) out += ' ';
    out += fmt::format("{}", p.coeffs()[i]);
  }
  return out + "]";
}

}  // namespace

void MethodSpec::validate() const {
  if (family == MethodFamily::Custom) {
    if (!custom_tf) throw InvalidParameter("custom method requires a transfer function");
    if (!has_integral_action(*custom_tf)) {
      throw InvalidParameter("custom controller must have an exact pole at z = 1 (integral action)");
    }
    return;
  }
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw InvalidParameter(fmt::format("step size alpha must be positive, got {}", alpha));
  }
  if (has_beta() && !(beta >= 0.0 && beta < 1.0)) {
    throw InvalidParameter(fmt::format("momentum beta must lie in [0, 1), got {}", beta));
  }
}

std::string MethodSpec::to_string() const {
  if (family == MethodFamily::Custom) {
    if (!custom_tf) return "custom:";
    return fmt::format("custom:num={},den={}", coeff_list(custom_tf->num()), coeff_list(custom_tf->den()));
  }
  if (!has_beta()) return fmt::format("{}:alpha={}", family_name(family), alpha);
  return fmt::format("{}:alpha={},beta={}", family_name(family), alpha, beta);
}

RationalTF build_controller(const MethodSpec& spec) {
  spec.validate();
  const double a = spec.alpha;
  const double b = spec.beta;
  switch (spec.family) {
    case MethodFamily::GradientDescent:
      return RationalTF(Polynomial{-a}, Polynomial{-1.0, 1.0});
    case MethodFamily::HeavyBall:
      return RationalTF(Polynomial{0.0, -a}, Polynomial{b, -(1.0 + b), 1.0});
    case MethodFamily::Nesterov:
      return RationalTF(Polynomial{a * b, -a * (1.0 + b)}, Polynomial{b, -(1.0 + b), 1.0});
    case MethodFamily::PID:
      return RationalTF(Polynomial{a * b, -a * (1.0 + b)}, Polynomial{0.0, -1.0, 1.0});
    case MethodFamily::Custom:
      return *spec.custom_tf;
  }
  throw InvalidParameter("unknown method family");
}

MethodSpec preset(MethodFamily family, const SectorClass& sector, PresetKind kind) {
  const double m = sector.m();
  const double L = sector.L();
  switch (family) {
    case MethodFamily::GradientDescent:
      return MethodSpec::gradient(kind == PresetKind::OptimalSector ? 2.0 / (L + m) : 1.0 / L);
    case MethodFamily::Nesterov:
      if (kind != PresetKind::Standard) {
        throw UnsupportedPreset("Nesterov's method only has the standard preset");
      }
      return MethodSpec::nesterov(1.0 / L, (std::sqrt(L) - std::sqrt(m)) / (std::sqrt(L) + std::sqrt(m)));
    case MethodFamily::HeavyBall:
      throw UnsupportedPreset(
          "heavy-ball has no built-in preset: its quadratic-optimal tuning comes from an external "
          "reference; pass alpha and beta explicitly");
    case MethodFamily::PID:
      throw UnsupportedPreset("the PID form has no preset; pass alpha and beta explicitly");
    case MethodFamily::Custom:
      throw UnsupportedPreset("custom controllers have no preset");
  }
  throw UnsupportedPreset("unknown method family");
}

RationalTF FactorForm::integrator() const {
  return RationalTF(Polynomial{integrator_gain}, Polynomial{-1.0, 1.0});
}

RationalTF FactorForm::lag() const {
  if (!lag_pole) return RationalTF();
  const double z0 = zero.value_or(0.0);
  return RationalTF(Polynomial{-zero_gain * z0, zero_gain}, Polynomial{-*lag_pole, 1.0});
}

RationalTF FactorForm::product() const { return integrator() * lag() * residual; }

FactorForm factor_controller(const MethodSpec& spec) {
  spec.validate();
  FactorForm f;
  f.integrator_gain = -spec.alpha;
  switch (spec.family) {
    case MethodFamily::GradientDescent:
      break;
    case MethodFamily::HeavyBall:
      f.lag_pole = spec.beta;
      f.zero = 0.0;
      break;
    case MethodFamily::Nesterov:
      f.lag_pole = spec.beta;
      f.zero_gain = 1.0 + spec.beta;
      f.zero = spec.beta / (1.0 + spec.beta);
      break;
    case MethodFamily::PID:
    case MethodFamily::Custom:
      throw UnsupportedFactorization(
          fmt::format("no lag/integrator factorization for family '{}'", family_name(spec.family)));
  }
  return f;
}

RationalTF recursion_transfer_function(const std::vector<double>& y_lags,
                                       const std::vector<double>& v_lags) {
  const std::size_t n = std::max<std::size_t>({y_lags.size(), v_lags.size(), 1});
  // z^{n-1} (z - sum a_j z^{-j}) Y = z^{n-1} sum b_j z^{-j} V
  std::vector<double> den(n + 1, 0.0);
  std::vector<double> num(n, 0.0);
  den[n] = 1.0;
  for (std::size_t j = 0; j < y_lags.size(); ++j) den[n - 1 - j] -= y_lags[j];
  for (std::size_t j = 0; j < v_lags.size(); ++j) num[n - 1 - j] += v_lags[j];
  return RationalTF(Polynomial(num), Polynomial(den));
}

bool derivative_form_check(const MethodSpec& spec, const RationalTF& candidate) {
  if (spec.family != MethodFamily::Nesterov) {
    throw InvalidParameter("derivative form check applies to Nesterov's method only");
  }
  const double a = spec.alpha;
  const double b = spec.beta;
  // y+ = y + b (y - y-) - a g - a b (g - g-)
  const std::vector<double> y_lags{1.0 + b, -b};
  const std::vector<double> v_lags{-a - a * b, a * b};
  const RationalTF rewritten = recursion_transfer_function(y_lags, v_lags);
  const double scale = std::max({1.0, rewritten.num().max_abs_coeff(), rewritten.den().max_abs_coeff()});
  return rewritten.order() == candidate.order() &&
         coefficient_distance(rewritten, candidate) <= 1e-12 * scale;
}

bool derivative_form_check(const MethodSpec& spec) {
  return derivative_form_check(spec, build_controller(spec));
}

// ---------------------------------------------------------------------------
// Parsing

std::vector<std::string> split_method_list(std::string_view text) {
  std::vector<std::string> out;
  for (const std::string& token : detail::split_top_level(text, ',')) {
    if (token.find(':') != std::string::npos || out.empty()) {
      out.push_back(token);
    } else {
      out.back() += ',';
      out.back() += token;
    }
  }
  return out;
}

namespace {

PresetKind parse_preset_kind(std::string_view name) {
  const std::string key = detail::lower(name);
  if (key.empty() || key == "standard") return PresetKind::Standard;
  if (key == "optimal_sector" || key == "optimal" || key == "sector") return PresetKind::OptimalSector;
  throw InvalidInput(fmt::format("unknown preset '{}'", name));
}

Polynomial parse_coeff_list(std::string_view text) {
  std::string_view body = detail::trim(text);
  if (body.size() < 2 || body.front() != '[' || body.back() != ']') {
    throw InvalidInput(fmt::format("coefficient list must be bracketed, got '{}'", text));
  }
  body = body.substr(1, body.size() - 2);
  std::vector<double> c;
  for (const std::string& tok : detail::split_any(body, " ;,")) c.push_back(detail::parse_double(tok));
  if (c.empty()) throw InvalidInput("empty coefficient list");
  return Polynomial(std::move(c));
}

MethodSpec preset_or_throw(MethodFamily family, const SectorClass* sector, PresetKind kind) {
  if (!sector) throw InvalidInput("method presets need the sector (m, L)");
  return preset(family, *sector, kind);
}

}  // namespace

MethodSpec parse_method(std::string_view text, const SectorClass* sector) {
  const std::string_view trimmed = detail::trim(text);
  const auto colon = trimmed.find(':');
  if (colon == std::string_view::npos) {
    throw InvalidInput(fmt::format("method '{}' must look like family:alpha=..[,beta=..]", text));
  }
  const MethodFamily family = parse_family(trimmed.substr(0, colon));
  const std::string_view body = trimmed.substr(colon + 1);

  MethodSpec spec;
  spec.family = family;
  bool have_alpha = false;
  bool have_beta = false;
  std::optional<Polynomial> num, den;
  for (const std::string& item : detail::split_top_level(body, ',')) {
    const auto eq = item.find('=');
    const std::string key = detail::lower(detail::trim(item.substr(0, eq)));
    const std::string value = eq == std::string::npos ? "" : std::string(detail::trim(item.substr(eq + 1)));
    if (key == "preset") {
      const MethodSpec p = preset_or_throw(family, sector, parse_preset_kind(value));
      spec.alpha = p.alpha;
      spec.beta = p.beta;
      have_alpha = true;
      have_beta = true;
    } else if (key == "alpha") {
      spec.alpha = detail::parse_double(value);
      have_alpha = true;
    } else if (key == "beta") {
      spec.beta = detail::parse_double(value);
      have_beta = true;
    } else if (key == "num") {
      num = parse_coeff_list(value);
    } else if (key == "den") {
      den = parse_coeff_list(value);
    } else {
      throw InvalidInput(fmt::format("unknown method parameter '{}' in '{}'", key, text));
    }
  }

  if (family == MethodFamily::Custom) {
    if (!num || !den) throw InvalidInput("custom method needs num=[..] and den=[..]");
    spec.custom_tf = RationalTF(*num, *den);
  } else {
    if (num || den) throw InvalidInput("num/den are only valid for custom methods");
    if (!have_alpha) throw InvalidInput(fmt::format("method '{}' is missing alpha", text));
    if (spec.has_beta() && !have_beta) throw InvalidInput(fmt::format("method '{}' is missing beta", text));
    if (!spec.has_beta() && have_beta && spec.beta != 0.0) {
      throw InvalidInput("gradient descent takes no beta");
    }
  }
  spec.validate();
  return spec;
}

nlohmann::ordered_json method_to_json(const MethodSpec& spec) {
  nlohmann::ordered_json j;
  j["family"] = family_name(spec.family);
  if (spec.family == MethodFamily::Custom) {
    if (spec.custom_tf) {
      j["num"] = spec.custom_tf->num().coeffs();
      j["den"] = spec.custom_tf->den().coeffs();
    }
    return j;
  }
  j["alpha"] = spec.alpha;
  if (spec.has_beta()) j["beta"] = spec.beta;
  return j;
}

MethodSpec method_from_json(const nlohmann::json& j, const SectorClass* sector) {
  if (j.is_string()) return parse_method(j.get<std::string>(), sector);
  if (!j.is_object() || !j.contains("family")) throw InvalidInput("method JSON needs a 'family' field");
  MethodSpec spec;
  spec.family = parse_family(j.at("family").get<std::string>());
  if (j.contains("preset")) {
    const MethodSpec p =
        preset_or_throw(spec.family, sector, parse_preset_kind(j.at("preset").get<std::string>()));
    spec.alpha = p.alpha;
    spec.beta = p.beta;
  }
  if (spec.family == MethodFamily::Custom) {
    spec.custom_tf = RationalTF(Polynomial(j.at("num").get<std::vector<double>>()),
                                Polynomial(j.at("den").get<std::vector<double>>()));
  } else {
    if (j.contains("alpha")) spec.alpha = j.at("alpha").get<double>();
    if (j.contains("beta")) spec.beta = j.at("beta").get<double>();
    if (!j.contains("alpha") && !j.contains("preset")) throw InvalidInput("method JSON is missing alpha");
    if (spec.has_beta() && !j.contains("beta") && !j.contains("preset")) {
      throw InvalidInput("method JSON is missing beta");
    }
  }
  spec.validate();
  return spec;
}

}  // namespace loopshift
