#include <cmath>

#include <gtest/gtest.h>

#include "loopshift/error.hpp"
#include "loopshift/method_catalog.hpp"
#include "loopshift/sector.hpp"
#include "support.hpp"

using namespace loopshift;
using testing_support::uniform;

TEST(BuildController, CatalogRows) {
  const RationalTF g = build_controller(MethodSpec::gradient(0.1));
  EXPECT_LT(coefficient_distance(g, RationalTF(Polynomial({-0.1}), Polynomial({-1.0, 1.0}))), 1e-15);

  const RationalTF hb0 = reduce(build_controller(MethodSpec::heavy_ball(1.0, 0.0)));
  EXPECT_LT(coefficient_distance(hb0, RationalTF(Polynomial({-1.0}), Polynomial({-1.0, 1.0}))), 1e-12);

  const SectorClass s(0.01, 1.0);
  const MethodSpec n = preset(MethodFamily::Nesterov, s);
  const RationalTF k = build_controller(n);
  const RationalTF expect(Polynomial({9.0 / 11.0, -20.0 / 11.0}), Polynomial({9.0 / 11.0, -20.0 / 11.0, 1.0}));
  EXPECT_LT(coefficient_distance(k, expect), 1e-14);

  const RationalTF pid = build_controller(MethodSpec::pid(0.5, 0.4));
  const RationalTF pid_expect(Polynomial({0.5 * 0.4, -0.5 * 1.4}), Polynomial({0.0, -1.0, 1.0}));
  EXPECT_LT(coefficient_distance(pid, pid_expect), 1e-15);
}

TEST(Presets, Values) {
  EXPECT_NEAR(preset(MethodFamily::GradientDescent, SectorClass(1, 10), PresetKind::OptimalSector).alpha, 2.0 / 11.0,
              1e-15);
  const MethodSpec n = preset(MethodFamily::Nesterov, SectorClass(0.01, 1.0));
  EXPECT_NEAR(n.alpha, 1.0, 1e-15);
  EXPECT_NEAR(n.beta, 0.9 / 1.1, 1e-15);
  EXPECT_NEAR(preset(MethodFamily::GradientDescent, SectorClass(1.0, 1.0 + 1e-9)).alpha, 1.0, 1e-8);
  EXPECT_THROW(preset(MethodFamily::HeavyBall, SectorClass(1, 10)), UnsupportedPreset);
  EXPECT_THROW(preset(MethodFamily::PID, SectorClass(1, 10)), UnsupportedPreset);
  EXPECT_THROW(preset(MethodFamily::Nesterov, SectorClass(1, 10), PresetKind::OptimalSector), UnsupportedPreset);
}

TEST(Validate, RejectsBadParameters) {
  EXPECT_THROW(MethodSpec::gradient(0.0).validate(), InvalidParameter);
  EXPECT_THROW(MethodSpec::gradient(-1.0).validate(), InvalidParameter);
  EXPECT_THROW(MethodSpec::heavy_ball(0.1, 1.0).validate(), InvalidParameter);
  EXPECT_THROW(MethodSpec::nesterov(0.1, -0.1).validate(), InvalidParameter);
  EXPECT_THROW(build_controller(MethodSpec::gradient(std::nan(""))), InvalidParameter);
  // No integral action.
  EXPECT_THROW(MethodSpec::custom(RationalTF(Polynomial({1.0}), Polynomial({-0.5, 1.0}))).validate(),
               InvalidParameter);
  EXPECT_NO_THROW(MethodSpec::custom(RationalTF(Polynomial({-1.0}), Polynomial({-1.0, 1.0}))).validate());
}

TEST(Factorization, Examples) {
  const FactorForm hb = factor_controller(MethodSpec::heavy_ball(1.0, 0.5));
  EXPECT_DOUBLE_EQ(hb.integrator_gain, -1.0);
  ASSERT_TRUE(hb.lag_pole && hb.zero);
  EXPECT_DOUBLE_EQ(*hb.lag_pole, 0.5);
  EXPECT_DOUBLE_EQ(*hb.zero, 0.0);
  EXPECT_LT(coefficient_distance(hb.product(), build_controller(MethodSpec::heavy_ball(1.0, 0.5))), 1e-12);

  const FactorForm n = factor_controller(MethodSpec::nesterov(1.0, 9.0 / 11.0));
  ASSERT_TRUE(n.zero);
  EXPECT_NEAR(*n.zero, 0.45, 1e-15);

  const FactorForm g = factor_controller(MethodSpec::gradient(0.3));
  EXPECT_FALSE(g.lag_pole.has_value());
  EXPECT_TRUE(g.residual.is_constant());
  EXPECT_DOUBLE_EQ(g.residual.num().coeff(0), 1.0);

  EXPECT_THROW(factor_controller(MethodSpec::pid(0.1, 0.2)), UnsupportedFactorization);
}

TEST(DerivativeForm, Checks) {
  EXPECT_TRUE(derivative_form_check(MethodSpec::nesterov(1.0, 9.0 / 11.0)));
  EXPECT_TRUE(derivative_form_check(MethodSpec::nesterov(0.3, 0.2)));
  RationalTF k = build_controller(MethodSpec::nesterov(0.3, 0.2));
  RationalTF perturbed(k.num() + Polynomial({1e-6}), k.den());
  EXPECT_FALSE(derivative_form_check(MethodSpec::nesterov(0.3, 0.2), perturbed));
  EXPECT_THROW(derivative_form_check(MethodSpec::gradient(0.3)), InvalidParameter);
}

TEST(CatalogProperty, IntegralActionAndFactorProducts) {
  for (const MethodSpec& spec : testing_support::random_catalog_methods(200)) {
    const RationalTF k = build_controller(spec);
    const Polynomial& d = k.den();
    EXPECT_LE(std::abs(d.evaluate(1.0)), 1e-12 * d.max_abs_coeff()) << spec.to_string();
    if (spec.family == MethodFamily::PID) continue;
    const FactorForm f = factor_controller(spec);
    EXPECT_LT(coefficient_distance(f.product(), k), 1e-10) << spec.to_string();
    if (spec.family == MethodFamily::Nesterov) {
      EXPECT_NEAR(*f.zero, spec.beta / (1 + spec.beta), 1e-12);
    }
  }
}

TEST(CatalogProperty, HeavyBallWithoutMomentumIsGradient) {
  for (int i = 0; i < 50; ++i) {
    const double a = uniform(0.01, 2.0);
    const RationalTF hb = reduce(build_controller(MethodSpec::heavy_ball(a, 0.0)));
    EXPECT_LT(coefficient_distance(hb, build_controller(MethodSpec::gradient(a))), 1e-12);
  }
}

TEST(ParseMethod, Forms) {
  const SectorClass s(1, 10);
  MethodSpec g = parse_method("gradient:alpha=0.18182");
  EXPECT_EQ(g.family, MethodFamily::GradientDescent);
  EXPECT_DOUBLE_EQ(g.alpha, 0.18182);

  MethodSpec n = parse_method("nesterov:alpha=1,beta=0.8182");
  EXPECT_EQ(n.family, MethodFamily::Nesterov);
  EXPECT_DOUBLE_EQ(n.beta, 0.8182);

  EXPECT_NEAR(parse_method("gd:preset=optimal_sector", &s).alpha, 2.0 / 11.0, 1e-15);
  EXPECT_NEAR(parse_method("nesterov:preset", &s).alpha, 0.1, 1e-15);
  EXPECT_THROW(parse_method("nesterov:preset"), InvalidInput);
  EXPECT_THROW(parse_method("gradient"), InvalidInput);
  EXPECT_THROW(parse_method("gradient:alpha=abc"), InvalidInput);
  EXPECT_THROW(parse_method("gradient:alpha=0.1,beta=0.2"), InvalidInput);
  EXPECT_THROW(parse_method("heavyball:alpha=0.1"), InvalidInput);
  EXPECT_THROW(parse_method("newton:alpha=1"), InvalidInput);
  EXPECT_THROW(parse_method("gradient:alpha=0.1,gamma=2"), InvalidInput);

  MethodSpec c = parse_method("custom:num=[-0.5],den=[-1 1]");
  ASSERT_TRUE(c.custom_tf.has_value());
  EXPECT_LT(coefficient_distance(*c.custom_tf, build_controller(MethodSpec::gradient(0.5))), 1e-15);
}

TEST(ParseMethod, RoundTrips) {
  for (const MethodSpec& spec : testing_support::random_catalog_methods(40)) {
    const MethodSpec back = parse_method(spec.to_string());
    EXPECT_EQ(back.family, spec.family);
    EXPECT_EQ(back.alpha, spec.alpha);
    EXPECT_EQ(back.beta, spec.beta);
    const MethodSpec from_json = method_from_json(nlohmann::json::parse(method_to_json(spec).dump()));
    EXPECT_EQ(from_json.alpha, spec.alpha);
    EXPECT_EQ(from_json.beta, spec.beta);
    EXPECT_EQ(from_json.family, spec.family);
  }
}

TEST(SplitMethodList, JoinsParameters) {
  const auto v = split_method_list("gradient:alpha=1,gradient:alpha=1.9802,nesterov:preset,heavyball:alpha=3,beta=0.6");
  ASSERT_EQ(v.size(), 4u);
  EXPECT_EQ(v[0], "gradient:alpha=1");
  EXPECT_EQ(v[3], "heavyball:alpha=3,beta=0.6");
}
