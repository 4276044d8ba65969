#include "loopshift/bode.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>

#include <fmt/format.h>

#include "loopshift/error.hpp"

namespace loopshift {

namespace {

constexpr double kNyquist = 0.5;

double magnitude(const RationalTF& tf, double f) { return std::abs(freq_response(tf, f)); }

double to_db(double mag) { return 20.0 * std::log10(mag); }

}  // namespace

std::vector<FrequencyRow> bode_table(const RationalTF& tf, double f_min, int n, Spacing spacing) {
  if (!(f_min > 0.0 && f_min < kNyquist)) {
    throw InvalidParameter(fmt::format("f_min must lie in (0, 0.5), got {}", f_min));
  }
  if (n < 2) throw InvalidParameter(fmt::format("a Bode table needs at least 2 rows, got {}", n));

  std::vector<FrequencyRow> rows(static_cast<std::size_t>(n));
  const double log_lo = std::log10(f_min);
  const double log_hi = std::log10(kNyquist);
  double prev_phase = std::numeric_limits<double>::quiet_NaN();
  double unwrap_offset = 0.0;
  for (int i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / (n - 1);
    double f = spacing == Spacing::Log ? std::pow(10.0, log_lo + t * (log_hi - log_lo))
                                       : f_min + t * (kNyquist - f_min);
    if (i == 0) f = f_min;
    if (i == n - 1) f = kNyquist;

    FrequencyRow& row = rows[static_cast<std::size_t>(i)];
    row.f = f;
    const Complex h = freq_response(tf, f);
    if (!std::isfinite(std::abs(h))) {
      row.infinite = true;
      row.magnitude_db = std::numeric_limits<double>::infinity();
      row.phase_deg = std::numeric_limits<double>::quiet_NaN();
      row.phase_unwrapped_deg = std::numeric_limits<double>::quiet_NaN();
      continue;
    }
    row.magnitude_db = to_db(std::abs(h));
    double phase = std::arg(h) * 180.0 / std::numbers::pi;
    if (phase <= -180.0) phase += 360.0;
    row.phase_deg = phase;
    if (!std::isnan(prev_phase)) {
      double step = phase + unwrap_offset - prev_phase;
      while (step > 180.0) {
        unwrap_offset -= 360.0;
        step -= 360.0;
      }
      while (step < -180.0) {
        unwrap_offset += 360.0;
        step += 360.0;
      }
    }
    row.phase_unwrapped_deg = phase + unwrap_offset;
    prev_phase = row.phase_unwrapped_deg;
  }
  return rows;
}

void write_bode_csv(const std::vector<FrequencyRow>& rows, std::ostream& out) {
  out << "f_hz,mag_db,phase_deg,phase_unwrapped_deg\n";
  auto num = [](double v) { return std::isfinite(v) ? fmt::format("{}", v) : std::string(std::isnan(v) ? "nan" : "inf"); };
  for (const FrequencyRow& r : rows) {
    out << fmt::format("{},{},{},{}\n", r.f, num(r.magnitude_db), num(r.phase_deg), num(r.phase_unwrapped_deg));
  }
}

std::optional<double> crossover_frequency(const RationalTF& tf) {
  constexpr int kGrid = 4000;
  const double log_lo = -9.0;
  const double log_hi = std::log10(kNyquist);
  auto excess = [&](double f) { return magnitude(tf, f) - 1.0; };

  double f_prev = std::pow(10.0, log_lo);
  double e_prev = excess(f_prev);
  if (e_prev == 0.0) return f_prev;
  for (int i = 1; i < kGrid; ++i) {
    const double f = i == kGrid - 1 ? kNyquist : std::pow(10.0, log_lo + (log_hi - log_lo) * i / (kGrid - 1));
    const double e = excess(f);
    if (e == 0.0) return f;
    if ((e_prev > 0.0) != (e > 0.0)) {
      double lo = f_prev;
      double hi = f;
      const bool lo_above = e_prev > 0.0;
      while (hi - lo > 1e-10 * hi) {
        const double mid = 0.5 * (lo + hi);
        if ((excess(mid) > 0.0) == lo_above) lo = mid;
        else hi = mid;
      }
      return 0.5 * (lo + hi);
    }
    f_prev = f;
    e_prev = e;
  }
  return std::nullopt;
}

GainMetrics gain_metrics(const RationalTF& tf, double f_low, double f_high) {
  GainMetrics g;
  g.low_gain_db = to_db(magnitude(tf, f_low));
  g.high_gain_db = to_db(magnitude(tf, f_high));
  g.crossover = crossover_frequency(tf);
  if (g.crossover) {
    const double half = std::pow(10.0, 0.25);
    const double f1 = *g.crossover / half;
    const double f2 = std::min(kNyquist, *g.crossover * half);
    g.slope_at_crossover_db_per_decade =
        (to_db(magnitude(tf, f2)) - to_db(magnitude(tf, f1))) / std::log10(f2 / f1);
  }
  return g;
}

namespace {

std::string xml_escape(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out += c; break;
    }
  }
  return out;
}

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

}  // namespace

void write_bode_svg(const std::vector<BodeCurve>& curves, std::ostream& out, const std::string& title) {
  constexpr double kWidth = 820.0, kHeight = 520.0;
  constexpr double kLeft = 70.0, kRight = 30.0, kTop = 40.0, kBottom = 55.0;
  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;

  double f_lo = kNyquist, f_hi = 0.0, db_lo = std::numeric_limits<double>::infinity(), db_hi = -db_lo;
  for (const auto& c : curves) {
    for (const auto& r : c.rows) {
      f_lo = std::min(f_lo, r.f);
      f_hi = std::max(f_hi, r.f);
      if (std::isfinite(r.magnitude_db)) {
        db_lo = std::min(db_lo, r.magnitude_db);
        db_hi = std::max(db_hi, r.magnitude_db);
      }
    }
  }
  if (!(f_lo < f_hi)) {
    f_lo = 1e-4;
    f_hi = kNyquist;
  }
  if (!std::isfinite(db_lo)) {
    db_lo = -20.0;
    db_hi = 20.0;
  }
  db_lo = std::floor(db_lo / 10.0) * 10.0;
  db_hi = std::ceil(db_hi / 10.0) * 10.0;
  if (db_hi - db_lo < 10.0) db_hi = db_lo + 10.0;

  const double lx_lo = std::log10(f_lo), lx_hi = std::log10(f_hi);
  auto px = [&](double f) { return kLeft + (std::log10(f) - lx_lo) / (lx_hi - lx_lo) * plot_w; };
  auto py = [&](double db) { return kTop + (db_hi - db) / (db_hi - db_lo) * plot_h; };

  out << fmt::format(R"svg(<svg xmlns="http://www.w3.org/2000/svg" width="{:.0f}" height="{:.0f}" viewBox="0 0 {:.0f} {:.0f}">)svg",
                     kWidth, kHeight, kWidth, kHeight)
      << '\n';
  out << R"svg(<rect width="100%" height="100%" fill="white"/>)svg" << '\n';
  if (!title.empty()) {
    out << fmt::format(R"svg(<text x="{:.1f}" y="24" font-family="sans-serif" font-size="15" text-anchor="middle">{}</text>)svg",
                       kLeft + plot_w / 2, xml_escape(title))
        << '\n';
  }

  // Decade grid and labels.
  for (int d = static_cast<int>(std::ceil(lx_lo)); d <= static_cast<int>(std::floor(lx_hi)); ++d) {
    const double x = px(std::pow(10.0, d));
    out << fmt::format(R"svg(<line x1="{0:.2f}" y1="{1:.2f}" x2="{0:.2f}" y2="{2:.2f}" stroke="#dddddd"/>)svg", x, kTop,
                       kTop + plot_h)
        << '\n';
    out << fmt::format(R"svg(<text x="{:.2f}" y="{:.2f}" font-family="sans-serif" font-size="12" text-anchor="middle">1e{}</text>)svg",
                       x, kTop + plot_h + 18, d)
        << '\n';
  }
  const double db_step = (db_hi - db_lo) > 100.0 ? 20.0 : 10.0;
  for (double db = db_lo; db <= db_hi + 1e-9; db += db_step) {
    const double y = py(db);
    out << fmt::format(R"svg(<line x1="{:.2f}" y1="{:.2f}" x2="{:.2f}" y2="{:.2f}" stroke="{}"/>)svg", kLeft, y,
                       kLeft + plot_w, y, std::abs(db) < 1e-9 ? "#999999" : "#dddddd")
        << '\n';
    out << fmt::format(R"svg(<text x="{:.2f}" y="{:.2f}" font-family="sans-serif" font-size="12" text-anchor="end">{:.0f}</text>)svg",
                       kLeft - 6, y + 4, db)
        << '\n';
  }
  out << fmt::format(R"svg(<rect x="{:.2f}" y="{:.2f}" width="{:.2f}" height="{:.2f}" fill="none" stroke="black"/>)svg",
                     kLeft, kTop, plot_w, plot_h)
      << '\n';
  out << fmt::format(R"svg(<text x="{:.2f}" y="{:.2f}" font-family="sans-serif" font-size="13" text-anchor="middle">frequency (cycles/iteration)</text>)svg",
                     kLeft + plot_w / 2, kHeight - 12)
      << '\n';
  out << fmt::format(R"svg(<text x="16" y="{:.2f}" font-family="sans-serif" font-size="13" text-anchor="middle" transform="rotate(-90 16 {:.2f})">magnitude (dB)</text>)svg",
                     kTop + plot_h / 2, kTop + plot_h / 2)
      << '\n';

  for (std::size_t i = 0; i < curves.size(); ++i) {
    const char* color = kPalette[i % std::size(kPalette)];
    std::string points;
    for (const auto& r : curves[i].rows) {
      if (!std::isfinite(r.magnitude_db)) continue;
      const double y = std::clamp(py(r.magnitude_db), kTop, kTop + plot_h);
      if (!points.empty()) points += ' ';
      points += fmt::format("{:.2f},{:.2f}", px(r.f), y);
    }
    out << fmt::format(R"svg(<polyline fill="none" stroke="{}" stroke-width="1.8" points="{}"/>)svg", color, points) << '\n';
  }

  // Legend, top right.
  const double lx = kLeft + plot_w - 10.0;
  for (std::size_t i = 0; i < curves.size(); ++i) {
    const double ly = kTop + 18.0 + 18.0 * static_cast<double>(i);
    const char* color = kPalette[i % std::size(kPalette)];
    out << fmt::format(R"svg(<line x1="{:.2f}" y1="{:.2f}" x2="{:.2f}" y2="{:.2f}" stroke="{}" stroke-width="2.5"/>)svg",
                       lx - 30, ly - 4, lx - 6, ly - 4, color)
        << '\n';
    out << fmt::format(R"svg(<text x="{:.2f}" y="{:.2f}" font-family="sans-serif" font-size="12" text-anchor="end">{}</text>)svg",
                       lx - 36, ly, xml_escape(curves[i].label))
        << '\n';
  }
  out << "</svg>\n";
}

}  // namespace loopshift
