#include <gtest/gtest.h>

#include "oracles.hpp"
#include "qaconv/dynamics.hpp"
#include "qaconv/experiment.hpp"
#include "qaconv/reparam.hpp"

using namespace qaconv;

namespace {

double log_cosh_hp(double t) {
  using boost::multiprecision::cosh;
  using boost::multiprecision::log;
  return log(cosh(oracle::Real50(t))).convert_to<double>();
}

}  // namespace

TEST(TTilde, TanhClosedForms) {
  const auto s = SFunction::tanh();
  EXPECT_EQ(t_tilde(s, 0.0), 0.0);
  EXPECT_NEAR(t_tilde(s, 2.0), log_cosh_hp(2.0), 1e-15);
  EXPECT_NEAR(t_tilde(s, 2.0), 1.3250027, 1e-7);
  EXPECT_NEAR(t_tilde(s, 20.0), 19.3068528, 1e-7);
  EXPECT_NEAR(t_tilde(s, 25.0), 25.0 - std::log(2.0), 1e-8);
  EXPECT_NEAR(t_tilde(s, 800.0), 800.0 - std::log(2.0), 1e-12);
}

TEST(TTilde, TanhAgreesWithQuadrature) {
  const auto s = SFunction::tanh();
  for (double t : {0.3, 1.0, 4.0}) {
    const double q = numerics::integrate([](double u) { return std::tanh(u); }, 0.0, t, 20).value;
    EXPECT_NEAR(t_tilde(s, t), q, 1e-13);
  }
}

TEST(TTilde, TabulatedLinearRamp) {
  // Collinear samples: the monotone interpolant is the line s = t / 3.
  const auto s = SFunction::tabulated({0.0, 1.0, 2.0, 3.0}, {0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0});
  EXPECT_NEAR(t_tilde(s, 0.5), 0.25 / 6.0, 1e-12);
  EXPECT_NEAR(t_tilde(s, 1.5), 2.25 / 6.0, 1e-12);
  EXPECT_NEAR(t_tilde(s, 3.0), 1.5, 1e-12);
}

TEST(TTilde, RationalFromScheduleIsIntegralOfS) {
  const Schedule sched(0.1, 1.0, GFunction::constant(0.25), 1);
  const auto s = SFunction::rational_from_schedule(sched, 500.0);
  for (double t : {0.5, 5.0, 50.0, 300.0}) {
    const double q = numerics::integrate([&](double u) { return s(u); }, 0.0, t, 200).value;
    EXPECT_NEAR(t_tilde(s, t), q, 1e-6 * q) << t;
    // gamma of the image equals the schedule at t~.
    EXPECT_NEAR(gamma_of_ttilde(s, t), gamma(sched, t_tilde(s, t)), 1e-8);
  }
}

TEST(GammaOfTTilde, ClosedForms) {
  EXPECT_EQ(gamma_from_s(0.5), 1.0);
  EXPECT_EQ(gamma_from_s(1.0), 0.0);
  EXPECT_NEAR(gamma_of_ttilde(SFunction::tanh(), 1.0), 0.3130352854993313, 1e-14);
}

TEST(GammaOfTTilde, ZeroSIsDomainError) {
  try {
    gamma_of_ttilde(SFunction::tanh(), 0.0);
    FAIL();
  } catch (const std::domain_error& e) {
    EXPECT_NE(std::string(e.what()).find("annealing not started"), std::string::npos);
  }
}

TEST(SFromSchedule, ClosedForms) {
  const Schedule sched(1.0, 1.0, GFunction::constant(0.125), 1);
  EXPECT_DOUBLE_EQ(s_from_schedule(sched, 1.0).s, 0.5);
  EXPECT_NEAR(s_from_schedule(sched, 16.0).s, 1.0 / (1.0 + std::pow(2.0, -0.5)), 1e-15);
  EXPECT_NEAR(s_from_schedule(sched, 16.0).s, 0.5857864, 1e-7);
  for (double tt : {1e2, 1e4, 1e6}) {
    const auto r = s_from_schedule(sched, tt);
    EXPECT_LE(std::abs(r.s - r.asymptotic), std::pow(tt, -0.25));
  }
  EXPECT_THROW(s_from_schedule(sched, 0.0), ValidationError);
}

TEST(SFromSchedule, RoundTripOverSixDecades) {
  const Schedule kinds[] = {{1.0, 1.0, GFunction::constant(0.125), 2},
                            {1.0, 1.0, GFunction::power_decay(0.05, 0.1, 0.5), 3}};
  for (const auto& sched : kinds) {
    for (int i = 0; i <= 600; ++i) {
      const double tt = std::pow(10.0, i / 100.0);
      const double expect = std::pow(tt, -sched.g.value(tt));
      const double got = gamma_from_s(s_from_schedule(sched, tt).s);
      EXPECT_NEAR(got, expect, 1e-10 * expect) << tt;
    }
  }
}

TEST(ReparamMap, MonotoneAndInvertible) {
  const auto s = SFunction::tanh();
  const auto grid = numerics::log1p_grid(25.0, 300);
  const auto map = build_reparam_map(s, grid);
  EXPECT_TRUE(map.is_monotone());
  EXPECT_EQ(map.t_tilde.front(), 0.0);
  for (double t : {0.5, 3.0, 20.0}) EXPECT_NEAR(map.t_of_t_tilde(t_tilde(s, t)), t, 1e-3);
}

TEST(ReparamMap, FlatStretchWhereSIsZero) {
  const auto s = SFunction::tabulated({0.0, 1.0, 2.0, 4.0}, {0.0, 0.0, 0.5, 1.0});
  const auto map = build_reparam_map(s, numerics::linspace(0.0, 4.0, 41));
  EXPECT_TRUE(map.is_monotone());
  EXPECT_EQ(map.t_tilde[5], 0.0);
}

TEST(SFunction, TabulatedValidation) {
  EXPECT_THROW(SFunction::tabulated({0.0, 1.0}, {0.5, 0.2}), ValidationError);
  EXPECT_THROW(SFunction::tabulated({0.0, 1.0}, {0.5, 1.2}), ValidationError);
  EXPECT_THROW(SFunction::tabulated({0.5, 1.0}, {0.5, 0.6}), ValidationError);
}

TEST(SFunction, JsonRoundTrip) {
  const nlohmann::json j = {{"kind", "tabulated"}, {"t", {0.0, 1.0, 2.0}}, {"s", {0.1, 0.5, 0.9}}};
  EXPECT_EQ(nlohmann::json(s_function_from_json(j)), j);
  EXPECT_THROW(s_function_from_json({{"kind", "sigmoid"}}, "/reparam/s"), ConfigError);
}

TEST(Drives, BoundedFormEquivalentToRescaledTime) {
  const auto p = generate_random_problem({6, 2, 2, 1.0, 0.5});
  const auto diag = build_diagonal(p);
  const auto s = SFunction::tanh();
  const double t0 = tanh_start_time(0.1);
  const double span = 6.0;
  const BoundedFormDrive original{&s, t0};
  const TanhRescaledDrive rescaled{t_tilde(s, t0)};
  const auto psi0 = instantaneous_spectrum(diag, original, 0.0).ground_state;
  const auto psi0_r = instantaneous_spectrum(diag, rescaled, 0.0).ground_state;
  EXPECT_NEAR(std::abs(inner(psi0, psi0_r)), 1.0, 1e-12);

  IntegratorConfig cfg;
  cfg.dt = 1e-3;
  cfg.record_count = 1;
  cfg.max_time = span;
  const auto a = propagate(diag, original, psi0, 0.0, cfg);
  cfg.max_time = t_tilde(s, t0 + span) - t_tilde(s, t0);
  const auto b = propagate(diag, rescaled, psi0_r, 0.0, cfg);
  EXPECT_NEAR(std::abs(inner(a.final_state, b.final_state)), 1.0, 1e-6);
  EXPECT_NEAR(a.final_excitation, b.final_excitation, 1e-5);
}
