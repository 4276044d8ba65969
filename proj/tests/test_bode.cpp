#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "loopshift/bode.hpp"
#include "loopshift/error.hpp"
#include "loopshift/method_catalog.hpp"
#include "loopshift/sector.hpp"
#include "support.hpp"

using namespace loopshift;

namespace {

RationalTF gd(double alpha) { return build_controller(MethodSpec::gradient(alpha)); }

double wrap180(double d) {
  double x = std::fmod(d + 180.0, 360.0);
  if (x <= 0) x += 360.0;
  return x - 180.0;
}

}  // namespace

TEST(BodeTable, GradientRows) {
  const auto rows = bode_table(gd(1.0), 1e-4, 300);
  ASSERT_EQ(rows.size(), 300u);
  EXPECT_DOUBLE_EQ(rows.front().f, 1e-4);
  EXPECT_DOUBLE_EQ(rows.back().f, 0.5);
  EXPECT_NEAR(rows.back().magnitude_db, 20 * std::log10(0.5), 1e-12);
  EXPECT_NEAR(rows.front().magnitude_db, 20 * std::log10(1.0 / (2 * M_PI * 1e-4)), 1e-3);
  for (const auto& r : rows) {
    EXPECT_FALSE(r.infinite);
    EXPECT_GT(r.phase_deg, -180.0);
    EXPECT_LE(r.phase_deg, 180.0);
    EXPECT_NEAR(wrap180(r.phase_unwrapped_deg), r.phase_deg, 1e-9);
  }
  for (std::size_t i = 1; i < rows.size(); ++i) EXPECT_GT(rows[i].f, rows[i - 1].f);
}

TEST(BodeTable, EndpointsAndSpacing) {
  const auto two = bode_table(gd(0.5), 0.01, 2);
  ASSERT_EQ(two.size(), 2u);
  EXPECT_DOUBLE_EQ(two[0].f, 0.01);
  EXPECT_DOUBLE_EQ(two[1].f, 0.5);
  const auto lin = bode_table(gd(0.5), 0.1, 5, Spacing::Linear);
  EXPECT_NEAR(lin[1].f - lin[0].f, 0.1, 1e-15);
  EXPECT_THROW(bode_table(gd(0.5), 0.0, 5), InvalidParameter);
  EXPECT_THROW(bode_table(gd(0.5), 0.01, 1), InvalidParameter);
}

TEST(BodeTable, PoleOnGridIsFlagged) {
  // Pole at z = -1 sits exactly on f = 0.5.
  const RationalTF t(Polynomial({1.0}), Polynomial({1.0, 1.0}));
  const auto rows = bode_table(t, 0.1, 3);
  EXPECT_TRUE(rows.back().infinite);
  EXPECT_TRUE(std::isinf(rows.back().magnitude_db));
}

TEST(Crossover, ClosedForms) {
  for (double alpha : {0.05, 0.3, 1.0, 1.5, 1.98}) {
    const auto fc = crossover_frequency(gd(alpha));
    ASSERT_TRUE(fc);
    EXPECT_NEAR(*fc, std::asin(alpha / 2.0) / M_PI, 1e-8) << alpha;
  }
  EXPECT_NEAR(*crossover_frequency(gd(1.0)), 1.0 / 6.0, 1e-9);
  EXPECT_NEAR(*crossover_frequency(gd(2.0 / 1.01)), 0.4547, 1e-3);
  const auto tiny = crossover_frequency(gd(1e-6));
  ASSERT_TRUE(tiny);
  EXPECT_NEAR(*tiny, 1e-6 / (2 * M_PI), 1e-12);
  // |K| stays above one on the whole axis.
  EXPECT_FALSE(crossover_frequency(gd(2.5)).has_value());
}

TEST(GainMetrics, IntegratorSlope) {
  const GainMetrics g = gain_metrics(gd(0.01));
  ASSERT_TRUE(g.slope_at_crossover_db_per_decade);
  EXPECT_NEAR(*g.slope_at_crossover_db_per_decade, -20.0, 0.1);
  EXPECT_NEAR(g.high_gain_db, 20 * std::log10(0.005), 1e-10);
}

TEST(GainMetrics, HeavyBallSteeperThanGradient) {
  const SectorClass s(0.01, 1);
  const GainMetrics hb = gain_metrics(build_controller(MethodSpec::heavy_ball(3.3058, 0.66942)));
  for (const MethodSpec& g : {preset(MethodFamily::GradientDescent, s, PresetKind::OptimalSector),
                              preset(MethodFamily::GradientDescent, s)}) {
    const GainMetrics gm = gain_metrics(build_controller(g));
    EXPECT_LT(*hb.slope_at_crossover_db_per_decade, *gm.slope_at_crossover_db_per_decade) << g.to_string();
  }
}

TEST(LagFactor, BoostAndAttenuation) {
  for (double beta : {0.3, 0.66942, 0.9}) {
    const FactorForm f = factor_controller(MethodSpec::heavy_ball(1.0, beta));
    const RationalTF lag = f.lag();
    EXPECT_NEAR(std::abs(freq_response(lag, 1e-4)) * (1 - beta), 1.0, 0.05);
    EXPECT_NEAR(std::abs(freq_response(lag, 0.5)) * (1 + beta), 1.0, 0.05);
  }
}

TEST(BodeProperty, MagnitudeSymmetry) {
  for (const MethodSpec& spec : testing_support::random_catalog_methods(40)) {
    const RationalTF k = build_controller(spec);
    for (double th : {0.1, 0.7, 1.9, 3.0}) {
      EXPECT_NEAR(std::abs(k.evaluate(std::polar(1.0, th))), std::abs(k.evaluate(std::polar(1.0, -th))),
                  1e-12 * std::abs(k.evaluate(std::polar(1.0, th))));
    }
  }
}

TEST(BodeProperty, ProductTableIsSumOfFactors) {
  for (const MethodSpec& spec : testing_support::random_catalog_methods(24)) {
    if (spec.family == MethodFamily::PID) continue;
    const FactorForm f = factor_controller(spec);
    const auto a = bode_table(f.integrator(), 1e-3, 100);
    const auto b = bode_table(f.lag(), 1e-3, 100);
    const auto p = bode_table(f.integrator() * f.lag(), 1e-3, 100);
    for (std::size_t i = 0; i < p.size(); ++i) {
      EXPECT_NEAR(p[i].magnitude_db, a[i].magnitude_db + b[i].magnitude_db, 1e-8);
      EXPECT_NEAR(wrap180(p[i].phase_deg - a[i].phase_deg - b[i].phase_deg), 0.0, 1e-8);
    }
  }
}

TEST(BodeProperty, GradientPresetsDifferByConstantGain) {
  for (const SectorClass& s : {SectorClass(0.01, 1), SectorClass(1, 10)}) {
    const auto hi = bode_table(build_controller(preset(MethodFamily::GradientDescent, s, PresetKind::OptimalSector)));
    const auto lo = bode_table(build_controller(preset(MethodFamily::GradientDescent, s)));
    const double gap = 20 * std::log10(2 * s.L() / (s.L() + s.m()));
    for (std::size_t i = 0; i < hi.size(); ++i) EXPECT_NEAR(hi[i].magnitude_db - lo[i].magnitude_db, gap, 1e-10);
  }
}

TEST(BodeOutput, CsvAndSvg) {
  const auto rows = bode_table(gd(1.0), 1e-3, 10);
  std::ostringstream csv;
  write_bode_csv(rows, csv);
  const std::string text = csv.str();
  EXPECT_EQ(text.substr(0, text.find('\n')), "f_hz,mag_db,phase_deg,phase_unwrapped_deg");
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 11);

  std::vector<BodeCurve> curves = {{"gradient <a>", rows}, {"other", bode_table(gd(0.2), 1e-3, 10)}};
  std::ostringstream s1, s2;
  write_bode_svg(curves, s1, "title & more");
  write_bode_svg(curves, s2, "title & more");
  const std::string svg = s1.str();
  EXPECT_EQ(svg, s2.str());
  EXPECT_EQ(svg.rfind("<svg", 0), 0u);
  EXPECT_NE(svg.find("</svg>"), std::string::npos);
  std::size_t polylines = 0;
  for (std::size_t pos = svg.find("<polyline"); pos != std::string::npos; pos = svg.find("<polyline", pos + 1)) {
    ++polylines;
  }
  EXPECT_EQ(polylines, 2u);
  EXPECT_NE(svg.find("gradient &lt;a&gt;"), std::string::npos);
  EXPECT_NE(svg.find("title &amp; more"), std::string::npos);
}
