#include <cmath>

#include <gtest/gtest.h>

#include "loopshift/error.hpp"
#include "loopshift/rate_certifier.hpp"
#include "support.hpp"

using namespace loopshift;
using testing_support::uniform;

TEST(LoopShift, GradientClosedForms) {
  const SectorClass s(1, 10);
  const RationalTF opt = loop_shift(build_controller(MethodSpec::gradient(2.0 / 11.0)), s);
  EXPECT_EQ(opt.num().degree(), 0);
  EXPECT_NEAR(opt.num().coeff(0), 1.0, 1e-12);
  EXPECT_NEAR(opt.den().coeff(0), 0.0, 1e-12);
  EXPECT_NEAR(opt.den().coeff(1), 1.0, 1e-12);

  const double kappa = 10.0;
  const RationalTF std_form = loop_shift(build_controller(MethodSpec::gradient(0.1)), s);
  const RationalTF expect(Polynomial({1.0 + kappa}), Polynomial({1.0 - kappa, 2.0 * kappa}));
  EXPECT_LT(coefficient_distance(std_form, expect), 1e-12);
}

TEST(LoopShiftProperty, MatchesGradientFormula) {
  for (int i = 0; i < 100; ++i) {
    const double m = uniform(0.01, 2.0);
    const SectorClass s(m, m + uniform(0.1, 50.0));
    const double a = uniform(0.001, 3.0) / s.L();
    // a (m + L) / (2 z - 2 + a (m + L))
    const double c = a * (s.m() + s.L());
    const RationalTF expect(Polynomial({c}), Polynomial({c - 2.0, 2.0}));
    EXPECT_LT(coefficient_distance(loop_shift(build_controller(MethodSpec::gradient(a)), s), expect), 1e-12);
  }
}

TEST(CertifyRate, Examples) {
  const SectorClass s(1, 10);
  const MethodSpec g = MethodSpec::gradient(2.0 / 11.0);
  const RateCertificate c = certify_rate(g, s, 0.9);
  EXPECT_TRUE(c.stable);
  EXPECT_NEAR(c.hinf, 1.0 / 0.9, 1e-9);
  EXPECT_NEAR(c.threshold, 11.0 / 9.0, 1e-15);
  EXPECT_TRUE(c.certified);

  const RateCertificate d = certify_rate(g, s, 0.8);
  EXPECT_NEAR(d.hinf, 1.25, 1e-9);
  EXPECT_FALSE(d.certified);

  const MethodSpec std_gd = MethodSpec::gradient(0.1);
  EXPECT_TRUE(certify_rate(std_gd, s, 0.9 + 1e-6).certified);
  EXPECT_FALSE(certify_rate(std_gd, s, 0.9 - 1e-6).certified);

  EXPECT_THROW(certify_rate(g, s, 1.0), InvalidParameter);
  EXPECT_THROW(certify_rate(g, s, 0.0), InvalidParameter);
}

TEST(CertifyRate, UnstableBelowPoleRadius) {
  const SectorClass s(1, 10);
  // Pole of the shifted controller at 1 - a = 0.45 for alpha = 0.1.
  const RateCertificate c = certify_rate(MethodSpec::gradient(0.1), s, 0.3);
  EXPECT_FALSE(c.stable);
  EXPECT_FALSE(c.certified);
  EXPECT_TRUE(std::isinf(c.hinf));
  const auto j = certificate_to_json(c, MethodSpec::gradient(0.1), s);
  EXPECT_TRUE(j["hinf"].is_null());
  EXPECT_EQ(j.begin().key(), "method");
}

TEST(BisectRate, RecoversKnownRates) {
  const SectorClass s(1, 10);
  auto r = bisect_rate(MethodSpec::gradient(2.0 / 11.0), s);
  ASSERT_TRUE(r);
  EXPECT_NEAR(r->rho_star, 9.0 / 11.0, 1e-5);
  EXPECT_TRUE(r->certificate_at_rho_star.certified);

  r = bisect_rate(MethodSpec::gradient(0.1), s);
  ASSERT_TRUE(r);
  EXPECT_NEAR(r->rho_star, 0.9, 1e-5);

  EXPECT_FALSE(bisect_rate(MethodSpec::gradient(0.3), s).has_value());
}

TEST(CertifiedRateCurve, MatchesClosedForm) {
  const SectorClass s(1, 10);
  std::vector<double> alphas;
  for (int i = 1; i <= 100; ++i) alphas.push_back(2.0 / s.L() * i / 101.0);
  alphas.push_back(0.15);
  alphas.push_back(2.0 / 11.0);
  const auto curve = certified_rate_curve(s, alphas);
  for (const auto& p : curve) {
    const double oracle = testing_support::gd_rate_oracle(p.alpha, s.m(), s.L());
    if (oracle < 1.0 - 1e-6) {
      ASSERT_TRUE(p.rho_star) << p.alpha;
      EXPECT_LT(std::abs(*p.rho_star - oracle), 1e-5) << p.alpha;
    } else if (oracle >= 1.0) {
      EXPECT_FALSE(p.rho_star) << p.alpha;
    }
  }
  EXPECT_THROW(certified_rate_curve(s, {0.0}), InvalidParameter);
}

TEST(SearchStepsize, FindsOptimum) {
  const auto r = search_stepsize(SectorClass(1, 10));
  EXPECT_NEAR(r.alpha, 2.0 / 11.0, 1e-4);
  EXPECT_NEAR(r.rho_star, 9.0 / 11.0, 1e-4);

  const auto ill = search_stepsize(SectorClass(0.01, 1));
  EXPECT_NEAR(ill.rho_star, 0.99 / 1.01, 1e-4);

  const auto good = search_stepsize(SectorClass(1, 1.001));
  EXPECT_LT(good.rho_star, 1e-3);
}

TEST(SearchTwoParam, ZeroMomentumReducesToGradient) {
  const SectorClass s(1, 10);
  std::vector<double> alphas;
  for (int i = 1; i <= 40; ++i) alphas.push_back(0.2 * i / 40.0);
  TwoParamOptions opts;
  opts.refinement_rounds = 0;
  const auto hb = search_two_param(MethodFamily::HeavyBall, s, alphas, {0.0}, opts);
  ASSERT_TRUE(hb);
  double best = 1.0;
  for (const auto& p : certified_rate_curve(s, alphas)) {
    if (p.rho_star) best = std::min(best, *p.rho_star);
  }
  EXPECT_NEAR(hb->rho_star, best, 1e-9);
  EXPECT_EQ(hb->beta, 0.0);
}

TEST(SearchTwoParam, NesterovAroundPreset) {
  const SectorClass s(1, 10);
  const MethodSpec p = preset(MethodFamily::Nesterov, s);
  std::vector<double> alphas, betas;
  for (int i = 0; i < 7; ++i) alphas.push_back(p.alpha * (0.4 + 0.2 * i));
  for (int i = 0; i < 7; ++i) betas.push_back(p.beta * (0.4 + 0.1 * i));
  const auto r = search_two_param(MethodFamily::Nesterov, s, alphas, betas);
  ASSERT_TRUE(r);
  EXPECT_GT(r->rho_star, 0.0);
  EXPECT_LT(r->rho_star, 1.0);
  // The winner must itself certify at its reported rate.
  EXPECT_TRUE(certify_rate(MethodSpec::nesterov(r->alpha, r->beta), s, std::min(r->rho_star + 1e-6, 0.999999))
                  .certified);
}

TEST(SearchTwoParam, EmptyWhenNothingCertifies) {
  const SectorClass s(1, 10);
  EXPECT_FALSE(search_two_param(MethodFamily::HeavyBall, s, {5.0, 6.0}, {0.1, 0.2}).has_value());
  EXPECT_THROW(search_two_param(MethodFamily::GradientDescent, s, {0.1}, {0.0}), InvalidParameter);
}

TEST(ComplementarySensitivity, Examples) {
  const SectorClass s(1, 10);
  const RationalTF k = build_controller(MethodSpec::gradient(2.0 / 11.0));
  const RationalTF t = complementary_sensitivity(k, s, 0.9);
  EXPECT_LT(coefficient_distance(t, RationalTF(Polynomial({1.0 / 0.9}), Polynomial({0.0, 1.0}))), 1e-12);
  EXPECT_LT(coefficient_distance(complementary_sensitivity(k, s, 1.0), loop_shift(k, s)), 1e-15);
}

TEST(ComplementarySensitivityProperty, RoutesAgree) {
  for (const MethodSpec& spec : testing_support::random_catalog_methods(80)) {
    const double m = uniform(0.01, 1.0);
    const SectorClass s(m, m + uniform(0.5, 20.0));
    const double rho = uniform(0.3, 1.0);
    const RationalTF k = build_controller(spec);
    const RationalTF a = complementary_sensitivity(k, s, rho);
    const RationalTF b = arg_scale(loop_shift(k, s), rho);
    EXPECT_LT(coefficient_distance(a, b), 1e-10) << spec.to_string();
  }
}

TEST(CertificateProperty, MonotoneInRho) {
  const SectorClass s(1, 10);
  std::vector<MethodSpec> specs = {MethodSpec::gradient(0.05), MethodSpec::gradient(2.0 / 11.0),
                                   MethodSpec::gradient(0.1), preset(MethodFamily::Nesterov, s),
                                   MethodSpec::heavy_ball(0.1, 0.1), MethodSpec::pid(0.05, 0.1)};
  for (const auto& spec : specs) {
    bool seen = false;
    for (int i = 1; i < 200; ++i) {
      const double rho = i / 200.0;
      const bool c = certify_rate(spec, s, rho).certified;
      if (seen) EXPECT_TRUE(c) << spec.to_string() << " rho=" << rho;
      seen = seen || c;
    }
  }
}

TEST(BisectRate, AgreesWithDenseScan) {
  const SectorClass s(1, 10);
  for (const auto& spec : {preset(MethodFamily::Nesterov, s), MethodSpec::heavy_ball(0.1, 0.1)}) {
    const auto r = bisect_rate(spec, s);
    ASSERT_TRUE(r) << spec.to_string();
    EXPECT_TRUE(certify_rate(spec, s, r->rho_star).certified);
    EXPECT_FALSE(certify_rate(spec, s, r->rho_star - 2e-6).certified);
  }
}
