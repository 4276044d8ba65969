#include "loopshift/cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

#include <unistd.h>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "loopshift/bode.hpp"
#include "loopshift/error.hpp"
#include "loopshift/method_catalog.hpp"
#include "loopshift/parallel.hpp"
#include "loopshift/rate_certifier.hpp"
#include "loopshift/sector.hpp"
#include "loopshift/simulator.hpp"
#include "text_util.hpp"

namespace loopshift::cli {

using nlohmann::ordered_json;

namespace {

constexpr std::pair<Command, std::string_view> kCommands[] = {
    {Command::Bode, "bode"},         {Command::Certify, "certify"},   {Command::Rate, "rate"},
    {Command::Curve, "curve"},       {Command::Search, "search"},     {Command::Simulate, "simulate"},
    {Command::Robustness, "robustness"}, {Command::Report, "report"},
};

ordered_json num(double v) {
  if (!std::isfinite(v)) return nullptr;
  return v;
}

template <typename T>
ordered_json opt(const std::optional<T>& v) {
  if (!v) return nullptr;
  if constexpr (std::is_floating_point_v<T>) return num(*v);
  else return *v;
}

}  // namespace

std::string_view command_name(Command c) {
  for (const auto& [cmd, name] : kCommands)
    if (cmd == c) return name;
  return "unknown";
}

Command parse_command(std::string_view name) {
  for (const auto& [cmd, n] : kCommands)
    if (n == name) return cmd;
  throw UsageError(fmt::format("unknown command '{}'", name));
}

// ---------------------------------------------------------------------------
// JSON form

ordered_json config_to_json(const RunConfig& c) {
  ordered_json j;
  j["command"] = command_name(c.command);
  j["methods"] = c.methods;
  j["m"] = opt(c.m);
  j["L"] = opt(c.L);
  j["rho"] = opt(c.rho);
  j["oracle"] = c.oracle;
  j["x0"] = c.x0;
  j["iters"] = opt(c.iters);
  j["noise"] = c.noise;
  j["seed"] = c.seed;
  j["seeds"] = c.seeds;
  j["sigma"] = c.sigma;
  j["tol"] = opt(c.tol);
  j["family"] = c.family;
  j["alpha_points"] = c.alpha_points;
  j["beta_points"] = c.beta_points;
  j["rounds"] = c.rounds;
  j["f_min"] = c.f_min;
  j["points"] = c.points;
  j["spacing"] = c.spacing;
  j["title"] = c.title;
  j["iterates"] = c.iterates;
  j["json"] = c.json_path;
  j["csv"] = c.csv_path;
  j["svg"] = c.svg_path;
  return j;
}

namespace {

template <typename T>
void read_optional(const nlohmann::json& v, std::optional<T>& dst) {
  if (v.is_null()) dst.reset();
  else dst = v.get<T>();
}

std::vector<std::string> methods_from_json(const nlohmann::json& v, const RunConfig& c) {
  std::vector<std::string> out;
  auto one = [&](const nlohmann::json& item) {
    if (item.is_string()) {
      for (auto& s : split_method_list(item.get<std::string>())) out.push_back(s);
      return;
    }
    std::optional<SectorClass> sector;
    if (c.m && c.L) {
      try {
        sector.emplace(*c.m, *c.L);
      } catch (const Error&) {
      }
    }
    out.push_back(method_from_json(item, sector ? &*sector : nullptr).to_string());
  };
  if (v.is_array()) {
    for (const auto& item : v) one(item);
  } else {
    one(v);
  }
  return out;
}

}  // namespace

RunConfig config_from_json(const nlohmann::json& j, RunConfig c) {
  if (!j.is_object()) throw UsageError("config must be a JSON object");
  try {
    // Sector first so that method presets inside the config can resolve.
    if (j.contains("m")) read_optional(j["m"], c.m);
    if (j.contains("L")) read_optional(j["L"], c.L);
    for (const auto& [key, v] : j.items()) {
      if (key == "m" || key == "L") continue;
      if (key == "command") c.command = parse_command(v.get<std::string>());
      else if (key == "methods" || key == "method") c.methods = methods_from_json(v, c);
      else if (key == "rho") read_optional(v, c.rho);
      else if (key == "oracle") c.oracle = v.get<std::string>();
      else if (key == "x0") c.x0 = v.get<std::vector<double>>();
      else if (key == "iters") read_optional(v, c.iters);
      else if (key == "noise") c.noise = v.get<double>();
      else if (key == "seed") c.seed = v.get<std::uint64_t>();
      else if (key == "seeds") c.seeds = v.get<int>();
      else if (key == "sigma") c.sigma = v.get<double>();
      else if (key == "tol") read_optional(v, c.tol);
      else if (key == "family") c.family = v.get<std::string>();
      else if (key == "alpha_points") c.alpha_points = v.get<int>();
      else if (key == "beta_points") c.beta_points = v.get<int>();
      else if (key == "rounds") c.rounds = v.get<int>();
      else if (key == "f_min") c.f_min = v.get<double>();
      else if (key == "points") c.points = v.get<int>();
      else if (key == "spacing") c.spacing = v.get<std::string>();
      else if (key == "title") c.title = v.get<std::string>();
      else if (key == "iterates") c.iterates = v.get<bool>();
      else if (key == "json") c.json_path = v.get<std::string>();
      else if (key == "csv") c.csv_path = v.get<std::string>();
      else if (key == "svg") c.svg_path = v.get<std::string>();
      else throw UsageError(fmt::format("unknown config key '{}'", key));
    }
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(fmt::format("bad config value: {}", e.what()));
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  return c;
}

// ---------------------------------------------------------------------------
// Validation

namespace {

bool needs_one_method(Command c) {
  return c == Command::Certify || c == Command::Rate || c == Command::Simulate;
}

SectorClass sector_of(const RunConfig& c) {
  if (!c.m || !c.L) throw UsageError("--m and --L are required");
  try {
    return SectorClass(*c.m, *c.L);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
}

std::vector<MethodSpec> methods_of(const RunConfig& c, const SectorClass& sector) {
  std::vector<MethodSpec> out;
  for (const auto& text : c.methods) {
    try {
      MethodSpec spec = parse_method(text, &sector);
      spec.validate();
      out.push_back(std::move(spec));
    } catch (const Error& e) {
      throw UsageError(fmt::format("bad method '{}': {}", text, e.what()));
    }
  }
  return out;
}

GradientOracle oracle_of(const RunConfig& c, const SectorClass& sector) {
  std::string text = c.oracle;
  if (text.empty()) text = fmt::format("quadratic:{},{}", sector.m(), sector.L());
  try {
    return parse_oracle(text);
  } catch (const Error& e) {
    throw UsageError(fmt::format("bad oracle '{}': {}", text, e.what()));
  }
}

MethodFamily search_family(const RunConfig& c) {
  try {
    const MethodFamily f = parse_family(c.family);
    if (f == MethodFamily::Custom) throw UsageError("search does not take custom controllers");
    return f;
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
}

void require(bool ok, const std::string& message) {
  if (!ok) throw UsageError(message);
}

}  // namespace

void validate(const RunConfig& c) {
  const SectorClass sector = sector_of(c);
  const auto methods = methods_of(c, sector);

  if (needs_one_method(c.command)) {
    require(methods.size() == 1, fmt::format("{} needs exactly one --method", command_name(c.command)));
  } else if (c.command == Command::Bode) {
    require(!methods.empty(), "bode needs --method or --methods");
  } else {
    require(methods.empty(), fmt::format("{} takes no method", command_name(c.command)));
  }

  if (c.command == Command::Certify) {
    require(c.rho.has_value(), "certify needs --rho");
  }
  if (c.rho) require(*c.rho > 0.0 && *c.rho < 1.0, fmt::format("--rho must lie in (0, 1), got {}", *c.rho));
  if (c.iters) require(*c.iters >= 1, fmt::format("--iters must be at least 1, got {}", *c.iters));
  if (c.tol) require(std::isfinite(*c.tol) && *c.tol > 0.0, "--tol must be positive");
  require(std::isfinite(c.noise) && c.noise >= 0.0, "--noise must be non-negative");
  require(std::isfinite(c.sigma) && c.sigma >= 0.0, "--sigma must be non-negative");
  require(c.seeds >= 1, "--seeds must be at least 1");
  require(c.alpha_points >= 1, "--alpha-points must be at least 1");
  require(c.beta_points >= 1, "--beta-points must be at least 1");
  require(c.rounds >= 0, "--rounds must be non-negative");
  require(c.f_min > 0.0 && c.f_min < 0.5, "--f-min must lie in (0, 0.5)");
  require(c.points >= 2, "--points must be at least 2");
  require(c.spacing == "log" || c.spacing == "linear", "--spacing must be log or linear");

  if (c.command == Command::Search) search_family(c);

  if (c.command == Command::Simulate) {
    require(!c.oracle.empty(), "simulate needs --oracle");
    const GradientOracle oracle = oracle_of(c, sector);
    require(c.x0.empty() || static_cast<int>(c.x0.size()) == oracle.dimension(),
            fmt::format("--x0 has {} entries, the oracle is {}-dimensional", c.x0.size(), oracle.dimension()));
  }
  if (c.command == Command::Robustness) {
    const GradientOracle oracle = oracle_of(c, sector);
    require(oracle.kind() == GradientOracle::Kind::Quadratic, "robustness needs a quadratic oracle");
    require(oracle.slope_max() / oracle.slope_min() >= 50.0,
            "robustness needs an eigenvalue spread of at least 50");
  }
}

// ---------------------------------------------------------------------------
// Argument parsing

RunConfig parse_args(int argc, const char* const* argv) {
  CLI::App app{"Convergence-rate certificates for first-order methods seen as feedback controllers", "loopshift"};
  app.require_subcommand(1, 1);
  app.fallthrough();

  std::string config_path;
  app.add_option("--config", config_path, "JSON config; its fields override the flags");

  RunConfig c;
  double m = 0, L = 0, rho = 0, tol = 0;
  int iters = 0;
  std::string method, methods, x0;

  struct Sub {
    Command command;
    CLI::App* app;
  };
  std::vector<Sub> subs;
  auto add = [&](Command cmd, const char* help) {
    CLI::App* s = app.add_subcommand(std::string(command_name(cmd)), help);
    s->add_option("--m", m, "strong convexity modulus");
    s->add_option("--L", L, "Lipschitz constant of the gradient");
    s->add_option("--json", c.json_path, "write machine-readable output here (- for stdout)");
    subs.push_back({cmd, s});
    return s;
  };
  auto add_method = [&](CLI::App* s) { s->add_option("--method", method, "family:alpha=..[,beta=..]"); };

  {
    CLI::App* s = add(Command::Certify, "certify one rate");
    add_method(s);
    s->add_option("--rho", rho, "candidate rate in (0, 1)");
  }
  {
    CLI::App* s = add(Command::Rate, "smallest certifiable rate");
    add_method(s);
    s->add_option("--tol", tol, "bisection tolerance");
  }
  {
    CLI::App* s = add(Command::Curve, "gradient descent certified rate versus step size");
    s->add_option("--alpha-points", c.alpha_points, "step sizes in (0, 2/L)");
    s->add_option("--tol", tol, "bisection tolerance");
    s->add_option("--csv", c.csv_path, "alpha,rho_star table");
  }
  {
    CLI::App* s = add(Command::Search, "best certifiable tuning");
    s->add_option("--family", c.family, "gradient, heavyball, nesterov or pid");
    s->add_option("--tol", tol, "tolerance");
    s->add_option("--alpha-points", c.alpha_points, "alpha grid size (two-parameter families)");
    s->add_option("--beta-points", c.beta_points, "beta grid size (two-parameter families)");
    s->add_option("--rounds", c.rounds, "grid refinement rounds");
  }
  {
    CLI::App* s = add(Command::Simulate, "run a method on an oracle");
    add_method(s);
    s->add_option("--oracle", c.oracle, "quadratic:1,10 | pwl:0:1,1:10 | sep:..|..");
    s->add_option("--x0", x0, "comma-separated start point (default x* + 1)");
    s->add_option("--iters", iters, "iterations");
    s->add_option("--noise", c.noise, "gradient noise standard deviation");
    s->add_option("--seed", c.seed, "noise seed");
    s->add_option("--csv", c.csv_path, "trajectory table");
    s->add_flag("--iterates", c.iterates, "include iterates in the CSV");
  }
  {
    CLI::App* s = add(Command::Robustness, "both gradient presets under gradient noise");
    s->add_option("--oracle", c.oracle, "quadratic oracle (default quadratic:m,L)");
    s->add_option("--sigma", c.sigma, "noise standard deviation");
    s->add_option("--seeds", c.seeds, "number of seeds");
    s->add_option("--seed", c.seed, "first seed");
    s->add_option("--iters", iters, "iterations (default max(1000, 50 kappa))");
    s->add_option("--csv", c.csv_path, "per-seed steady-state table");
  }
  {
    CLI::App* s = add(Command::Bode, "frequency response of one or more controllers");
    add_method(s);
    s->add_option("--methods", methods, "comma-joined list of methods");
    s->add_option("--f-min", c.f_min, "lowest frequency (cycles per iteration)");
    s->add_option("--points", c.points, "rows per table");
    s->add_option("--spacing", c.spacing, "log or linear");
    s->add_option("--csv", c.csv_path, "Bode table (name_<k> per method when several)");
    s->add_option("--svg", c.svg_path, "magnitude plot");
    s->add_option("--title", c.title, "plot title");
  }
  {
    CLI::App* s = add(Command::Report, "presets, curve, and soundness summary");
    s->add_option("--iters", iters, "iterations per soundness run");
    s->add_option("--alpha-points", c.alpha_points, "curve points");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    std::ostringstream out, err;
    app.exit(e, out, err);
    throw HelpRequested{out.str()};
  } catch (const CLI::CallForAllHelp& e) {
    std::ostringstream out, err;
    app.exit(e, out, err);
    throw HelpRequested{out.str()};
  } catch (const CLI::ParseError& e) {
    throw UsageError(e.what());
  }

  for (const Sub& s : subs) {
    if (!s.app->parsed()) continue;
    c.command = s.command;
    auto given = [&](const char* flag) {
      const CLI::Option* o = s.app->get_option_no_throw(flag);
      return o && o->count() > 0;
    };
    if (given("--m")) c.m = m;
    if (given("--L")) c.L = L;
    if (given("--rho")) c.rho = rho;
    if (given("--tol")) c.tol = tol;
    if (given("--iters")) c.iters = iters;
    if (given("--method")) c.methods.push_back(method);
    if (given("--methods")) {
      for (auto& t : split_method_list(methods)) c.methods.push_back(t);
    }
    if (given("--x0")) {
      try {
        c.x0 = detail::parse_double_list(x0);
      } catch (const Error& e) {
        throw UsageError(fmt::format("bad --x0: {}", e.what()));
      }
    }
  }

  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in) throw UsageError(fmt::format("cannot read config '{}'", config_path));
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw UsageError(fmt::format("config '{}' is not valid JSON: {}", config_path, e.what()));
    }
    c = config_from_json(j, std::move(c));
  }

  validate(c);
  return c;
}

// ---------------------------------------------------------------------------
// Running

namespace {

void write_atomic(const std::string& path, std::ostream& stdout_stream,
                  const std::function<void(std::ostream&)>& body) {
  if (path == "-") {
    body(stdout_stream);
    return;
  }
  namespace fs = std::filesystem;
  const fs::path target(path);
  fs::path tmp = target;
  tmp += fmt::format(".tmp-{}", ::getpid());
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw Error("io_error", fmt::format("cannot open '{}' for writing", tmp.string()));
    body(f);
    f.flush();
    if (!f) throw Error("io_error", fmt::format("failed writing '{}'", tmp.string()));
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw Error("io_error", fmt::format("cannot move output into '{}'", path));
  }
}

void emit_json(const RunConfig& c, std::ostream& out, const ordered_json& j) {
  if (c.json_path.empty()) return;
  write_atomic(c.json_path, out, [&](std::ostream& s) { s << j.dump(2) << '\n'; });
}

std::string fmt_num(double v) { return fmt::format("{:.6f}", v); }

BisectionOptions bisection_of(const RunConfig& c) {
  BisectionOptions b;
  if (c.tol) b.tolerance = *c.tol;
  return b;
}

ordered_json rate_json(const MethodSpec& spec, const SectorClass& sector,
                       const std::optional<RateSearchResult>& r) {
  ordered_json j;
  j["method"] = spec.to_string();
  j["m"] = sector.m();
  j["L"] = sector.L();
  j["certified"] = r.has_value();
  j["rho_star"] = r ? ordered_json(r->rho_star) : ordered_json(nullptr);
  j["iterations"] = r ? r->iterations : 0;
  j["certificate"] = r ? certificate_to_json(r->certificate_at_rho_star, spec, sector) : ordered_json(nullptr);
  return j;
}

int run_certify(const RunConfig& c, std::ostream& out) {
  const SectorClass sector = sector_of(c);
  const MethodSpec spec = methods_of(c, sector).front();
  const RateCertificate cert = certify_rate(spec, sector, *c.rho);
  out << fmt::format("{} at rho={}: {} (hinf={}, threshold={})\n", spec.to_string(), *c.rho,
                     cert.certified ? "certified" : "not certified",
                     std::isfinite(cert.hinf) ? fmt_num(cert.hinf) : "inf", fmt_num(cert.threshold));
  emit_json(c, out, certificate_to_json(cert, spec, sector));
  return 0;
}

int run_rate(const RunConfig& c, std::ostream& out) {
  const SectorClass sector = sector_of(c);
  const MethodSpec spec = methods_of(c, sector).front();
  const auto r = bisect_rate(spec, sector, bisection_of(c));
  if (r) out << fmt::format("{}: rho_star = {}\n", spec.to_string(), fmt_num(r->rho_star));
  else out << fmt::format("{}: not certified for any rho < 1\n", spec.to_string());
  emit_json(c, out, rate_json(spec, sector, r));
  return 0;
}

std::vector<double> curve_alphas(const SectorClass& sector, int n) {
  std::vector<double> a(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) a[static_cast<std::size_t>(i)] = 2.0 / sector.L() * (i + 1) / (n + 1);
  return a;
}

ordered_json curve_json(const std::vector<CurvePoint>& curve) {
  ordered_json pts = ordered_json::array();
  for (const auto& p : curve) {
    ordered_json row;
    row["alpha"] = p.alpha;
    row["rho_star"] = opt(p.rho_star);
    pts.push_back(row);
  }
  return pts;
}

int run_curve(const RunConfig& c, std::ostream& out) {
  const SectorClass sector = sector_of(c);
  const auto curve = certified_rate_curve(sector, curve_alphas(sector, c.alpha_points), bisection_of(c));
  int certified = 0;
  std::optional<CurvePoint> best;
  for (const auto& p : curve) {
    if (!p.rho_star) continue;
    ++certified;
    if (!best || *p.rho_star < *best->rho_star) best = p;
  }
  if (best) {
    out << fmt::format("{} of {} step sizes certified; best rho_star = {} at alpha = {}\n", certified, curve.size(),
                       fmt_num(*best->rho_star), fmt_num(best->alpha));
  } else {
    out << fmt::format("0 of {} step sizes certified\n", curve.size());
  }
  if (!c.csv_path.empty()) {
    write_atomic(c.csv_path, out, [&](std::ostream& s) {
      s << "alpha,rho_star\n";
      for (const auto& p : curve) s << fmt::format("{},{}\n", p.alpha, p.rho_star ? fmt::format("{}", *p.rho_star) : "");
    });
  }
  ordered_json j;
  j["m"] = sector.m();
  j["L"] = sector.L();
  j["points"] = curve_json(curve);
  emit_json(c, out, j);
  return 0;
}

int run_search(const RunConfig& c, std::ostream& out) {
  const SectorClass sector = sector_of(c);
  const MethodFamily family = search_family(c);
  ordered_json j;
  j["family"] = family_name(family);
  j["m"] = sector.m();
  j["L"] = sector.L();
  if (family == MethodFamily::GradientDescent) {
    const StepsizeSearchResult r = search_stepsize(sector, c.tol.value_or(1e-7));
    out << fmt::format("gradient: alpha* = {}, rho* = {}\n", fmt_num(r.alpha), fmt_num(r.rho_star));
    j["certified"] = r.rho_star < 1.0;
    j["alpha"] = r.alpha;
    j["beta"] = nullptr;
    j["rho_star"] = r.rho_star;
    j["evaluations"] = r.evaluations;
  } else {
    // Momentum methods tolerate step sizes up to about 2(1 + beta)/L.
    std::vector<double> alphas(static_cast<std::size_t>(c.alpha_points));
    for (int i = 0; i < c.alpha_points; ++i) alphas[i] = 4.0 / sector.L() * (i + 1) / (c.alpha_points + 1);
    std::vector<double> betas(static_cast<std::size_t>(c.beta_points));
    for (int i = 0; i < c.beta_points; ++i) betas[i] = c.beta_points == 1 ? 0.0 : 0.98 * i / (c.beta_points - 1);
    TwoParamOptions options;
    options.refinement_rounds = c.rounds;
    if (c.tol) options.bisection.tolerance = *c.tol;
    const auto r = search_two_param(family, sector, alphas, betas, options);
    if (r) {
      out << fmt::format("{}: alpha* = {}, beta* = {}, rho* = {}\n", family_name(family), fmt_num(r->alpha),
                         fmt_num(r->beta), fmt_num(r->rho_star));
    } else {
      out << fmt::format("{}: no grid point certified\n", family_name(family));
    }
    j["certified"] = r.has_value();
    j["alpha"] = r ? ordered_json(r->alpha) : ordered_json(nullptr);
    j["beta"] = r ? ordered_json(r->beta) : ordered_json(nullptr);
    j["rho_star"] = r ? ordered_json(r->rho_star) : ordered_json(nullptr);
    j["evaluations"] = r ? r->evaluations : 0;
  }
  emit_json(c, out, j);
  return 0;
}

ordered_json rate_estimate_json(const RateEstimate& e) {
  ordered_json j;
  j["rho_hat"] = num(e.rho_hat);
  j["c_hat"] = num(e.c_hat);
  j["k_start"] = e.k_start;
  j["k_end"] = e.k_end;
  j["r_squared"] = num(e.r_squared);
  j["diverged"] = e.diverged;
  return j;
}

int run_simulate(const RunConfig& c, std::ostream& out) {
  const SectorClass sector = sector_of(c);
  const MethodSpec spec = methods_of(c, sector).front();
  const GradientOracle oracle = oracle_of(c, sector);
  Vector x0;
  if (c.x0.empty()) {
    x0 = oracle.xstar() + Vector::Ones(oracle.dimension());
  } else {
    x0 = Eigen::Map<const Vector>(c.x0.data(), static_cast<Eigen::Index>(c.x0.size()));
  }
  const int iters = c.iters.value_or(500);
  const Trajectory traj = simulate_run(spec, oracle, x0, iters, c.noise, c.seed);

  std::optional<RateEstimate> est;
  try {
    est = estimate_rate(traj);
  } catch (const InsufficientData&) {
  }
  out << fmt::format("{} on {}: {} iterations, final residual {:.6e}{}\n", spec.to_string(), oracle.id(), iters,
                     traj.residuals.back(), est ? fmt::format(", rho_hat = {}", fmt_num(est->rho_hat)) : "");

  if (!c.csv_path.empty()) {
    write_atomic(c.csv_path, out, [&](std::ostream& s) { write_trajectory_csv(traj, s, c.iterates); });
  }
  ordered_json j;
  j["method"] = spec.to_string();
  j["oracle"] = oracle.id();
  j["iters"] = iters;
  j["noise"] = c.noise;
  j["seed"] = c.seed;
  j["final_residual"] = num(traj.residuals.back());
  j["rate"] = est ? rate_estimate_json(*est) : ordered_json(nullptr);
  ordered_json res = ordered_json::array();
  for (double r : traj.residuals) res.push_back(num(r));
  j["residuals"] = res;
  emit_json(c, out, j);
  return 0;
}

int run_robustness(const RunConfig& c, std::ostream& out) {
  const SectorClass sector = sector_of(c);
  const GradientOracle oracle = oracle_of(c, sector);
  std::vector<std::uint64_t> seeds(static_cast<std::size_t>(c.seeds));
  for (int i = 0; i < c.seeds; ++i) seeds[static_cast<std::size_t>(i)] = c.seed + static_cast<std::uint64_t>(i);
  const RobustnessReport r = noise_robustness_experiment(sector, oracle, c.sigma, seeds, c.iters.value_or(0));
  out << fmt::format("median steady state: alpha=1/L {:.6e}, alpha=2/(L+m) {:.6e} over {} seeds\n",
                     r.standard.median_steady_state, r.optimal_sector.median_steady_state, seeds.size());
  if (!c.csv_path.empty()) {
    write_atomic(c.csv_path, out, [&](std::ostream& s) {
      s << "seed,standard,optimal_sector\n";
      for (std::size_t i = 0; i < seeds.size(); ++i) {
        s << fmt::format("{},{},{}\n", seeds[i], r.standard.steady_state[i], r.optimal_sector.steady_state[i]);
      }
    });
  }
  emit_json(c, out, robustness_to_json(r));
  return 0;
}

std::string indexed_path(const std::string& path, std::size_t k) {
  const std::filesystem::path p(path);
  std::filesystem::path out = p.parent_path() / (p.stem().string() + fmt::format("_{}", k) + p.extension().string());
  return out.string();
}

ordered_json factor_json(const FactorForm& f) {
  ordered_json j;
  j["integrator_gain"] = f.integrator_gain;
  j["lag_pole"] = opt(f.lag_pole);
  j["zero"] = opt(f.zero);
  j["zero_gain"] = f.zero_gain;
  j["residual"] = f.residual.to_string();
  return j;
}

int run_bode(const RunConfig& c, std::ostream& out) {
  const SectorClass sector = sector_of(c);
  const auto specs = methods_of(c, sector);
  const Spacing spacing = c.spacing == "linear" ? Spacing::Linear : Spacing::Log;

  std::vector<BodeCurve> curves;
  ordered_json items = ordered_json::array();
  std::vector<std::string> crossovers;
  for (std::size_t k = 0; k < specs.size(); ++k) {
    const MethodSpec& spec = specs[k];
    const RationalTF tf = build_controller(spec);
    BodeCurve curve{spec.to_string(), bode_table(tf, c.f_min, c.points, spacing)};
    const GainMetrics g = gain_metrics(tf);

    ordered_json item;
    item["method"] = spec.to_string();
    item["num"] = tf.num().coeffs();
    item["den"] = tf.den().coeffs();
    item["low_gain_db"] = num(g.low_gain_db);
    item["high_gain_db"] = num(g.high_gain_db);
    item["crossover"] = opt(g.crossover);
    item["slope_at_crossover_db_per_decade"] = opt(g.slope_at_crossover_db_per_decade);
    try {
      item["factorization"] = factor_json(factor_controller(spec));
    } catch (const UnsupportedFactorization&) {
      item["factorization"] = nullptr;
    }
    items.push_back(item);
    crossovers.push_back(g.crossover ? fmt::format("{:.4f}", *g.crossover) : "none");

    if (!c.csv_path.empty()) {
      const std::string path = specs.size() == 1 ? c.csv_path : indexed_path(c.csv_path, k);
      write_atomic(path, out, [&](std::ostream& s) { write_bode_csv(curve.rows, s); });
    }
    curves.push_back(std::move(curve));
  }
  if (!c.svg_path.empty()) {
    write_atomic(c.svg_path, out, [&](std::ostream& s) { write_bode_svg(curves, s, c.title); });
  }
  std::string joined;
  for (std::size_t k = 0; k < crossovers.size(); ++k) joined += (k ? ", " : "") + crossovers[k];
  out << fmt::format("bode: {} controller(s), crossover frequencies {}\n", specs.size(), joined);

  ordered_json j;
  j["m"] = sector.m();
  j["L"] = sector.L();
  j["controllers"] = items;
  emit_json(c, out, j);
  return 0;
}

int run_report(const RunConfig& c, std::ostream& out) {
  const SectorClass sector = sector_of(c);
  const int iters = c.iters.value_or(500);

  struct Preset {
    std::string name;
    MethodSpec spec;
  };
  const std::vector<Preset> presets = {
      {"gradient_standard", preset(MethodFamily::GradientDescent, sector, PresetKind::Standard)},
      {"gradient_optimal_sector", preset(MethodFamily::GradientDescent, sector, PresetKind::OptimalSector)},
      {"nesterov_standard", preset(MethodFamily::Nesterov, sector, PresetKind::Standard)},
  };
  const auto rates = parallel_map<std::optional<RateSearchResult>>(
      presets.size(), [&](std::size_t i) { return bisect_rate(presets[i].spec, sector); });

  ordered_json table = ordered_json::array();
  for (std::size_t i = 0; i < presets.size(); ++i) {
    ordered_json row = rate_json(presets[i].spec, sector, rates[i]);
    row.erase("m");
    row.erase("L");
    ordered_json named;
    named["name"] = presets[i].name;
    named.update(row);
    table.push_back(named);
  }

  const auto curve = certified_rate_curve(sector, curve_alphas(sector, c.alpha_points));
  const StepsizeSearchResult best = search_stepsize(sector);

  const auto oracles = default_oracle_suite(sector);
  struct Job {
    std::size_t preset;
    std::size_t oracle;
  };
  std::vector<Job> jobs;
  for (std::size_t i = 0; i < presets.size(); ++i) {
    if (!rates[i]) continue;
    for (std::size_t o = 0; o < oracles.size(); ++o) jobs.push_back({i, o});
  }
  const auto rows = parallel_map<SoundnessRow>(jobs.size(), [&](std::size_t k) {
    const Job& jb = jobs[k];
    return soundness_check(presets[jb.preset].spec, rates[jb.preset]->rho_star, oracles[jb.oracle], iters);
  });
  int sound = 0;
  ordered_json srows = ordered_json::array();
  for (const auto& r : rows) {
    sound += r.sound ? 1 : 0;
    ordered_json row;
    row["method"] = r.method;
    row["oracle"] = r.oracle;
    row["rho_star"] = r.rho_star;
    row["rho_hat"] = num(r.rho_hat);
    row["fitted"] = r.fitted;
    row["sound"] = r.sound;
    srows.push_back(row);
  }

  ordered_json j;
  j["m"] = sector.m();
  j["L"] = sector.L();
  j["presets"] = table;
  ordered_json cj;
  cj["points"] = curve_json(curve);
  j["curve"] = cj;
  ordered_json sj;
  sj["alpha"] = best.alpha;
  sj["rho_star"] = best.rho_star;
  sj["evaluations"] = best.evaluations;
  j["stepsize_search"] = sj;
  ordered_json snd;
  snd["iterations"] = iters;
  snd["rows"] = srows;
  snd["sound"] = sound;
  snd["total"] = static_cast<int>(rows.size());
  j["soundness"] = snd;

  out << fmt::format("report m={} L={}: alpha* = {}, rho* = {}, soundness {}/{}\n", sector.m(), sector.L(),
                     fmt_num(best.alpha), fmt_num(best.rho_star), sound, rows.size());
  emit_json(c, out, j);
  return 0;
}

void write_error(std::ostream& err, const std::string& kind, const std::string& message) {
  ordered_json j;
  j["error"]["kind"] = kind;
  j["error"]["message"] = message;
  err << j.dump() << '\n';
}

}  // namespace

int run(const RunConfig& config, std::ostream& out, std::ostream& err) {
  try {
    validate(config);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return 2;
  }
  try {
    switch (config.command) {
      case Command::Certify: return run_certify(config, out);
      case Command::Rate: return run_rate(config, out);
      case Command::Curve: return run_curve(config, out);
      case Command::Search: return run_search(config, out);
      case Command::Simulate: return run_simulate(config, out);
      case Command::Robustness: return run_robustness(config, out);
      case Command::Bode: return run_bode(config, out);
      case Command::Report: return run_report(config, out);
    }
  } catch (const Error& e) {
    write_error(err, e.kind(), e.what());
    return 1;
  } catch (const std::exception& e) {
    write_error(err, "internal", e.what());
    return 1;
  }
  return 1;
}

int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  RunConfig config;
  try {
    config = parse_args(argc, argv);
  } catch (const HelpRequested& h) {
    out << h.text;
    return 0;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return 2;
  }
  return run(config, out, err);
}

}  // namespace loopshift::cli
