#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include <json.hpp>

#include "keen/model.hpp"

using namespace keen;
using nlohmann::json;

TEST_CASE("generalized exponential: value, floor limit, clip") {
  GenExpParams g{1.0 / 25, 1.0 / 25, 2.0, 0.0};  // investment shape
  // At the anchor, G equals y_nu.
  CHECK(gen_exp(1.0 / 25, g) == doctest::Approx(1.0 / 25).epsilon(1e-15));
  // Deep negative arguments approach the floor.
  CHECK(gen_exp(-100.0, g) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(gen_exp_limit_neg(g) == 0.0);
  // Far positive arguments are clipped, not overflowed.
  const double big = gen_exp(1e6, g);
  CHECK(std::isfinite(big));
  CHECK(big == doctest::Approx((1.0 / 25) * std::exp(700.0)).epsilon(1e-12));

  GenExpParams ph{0.96, 0.0, 2.0, -1.0 / 25};  // Phillips shape
  CHECK(gen_exp(0.96, ph) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(gen_exp_limit_neg(ph) == -1.0 / 25);
  CHECK(gen_exp(-50.0, ph) == doctest::Approx(-1.0 / 25).epsilon(1e-12));
}

TEST_CASE("parameter validation") {
  ModelParams p;
  CHECK_NOTHROW(p.validate());
  SUBCASE("negative v") {
    p.v = -1;
    CHECK_THROWS_AS(p.validate(), ModelError);
  }
  SUBCASE("s outside (0,1)") {
    p.s = 1.5;
    CHECK_THROWS_AS(p.validate(), ModelError);
  }
  SUBCASE("equal rates") {
    p.r_D = p.r_L;
    CHECK_THROWS_AS(p.validate(), ModelError);
  }
  SUBCASE("nonpositive time constant") {
    p.tau_W = 0;
    CHECK_THROWS_AS(p.validate(), ModelError);
  }
}

TEST_CASE("conserved constant reconstruction at t=0") {
  const State ic = State::table2();
  const double cst = ic.F_L - ic.F_D - ic.B_PL - 13.0;
  CHECK(cst == doctest::Approx(12.0).epsilon(1e-15));
  CHECK(reconstruct_wd(ic, cst) == doctest::Approx(13.0).epsilon(1e-15));
}

TEST_CASE("profit rate and derived quantities at the initial state") {
  ModelParams p;
  const State ic = State::table2();
  // pi_r = (P_C Y_r - W Y_r / a - (r_L F_L - r_D F_D)) / (v P_C Y_r)
  const double yr = ic.K_r / p.v;
  const double expect =
      (ic.P_C * yr - ic.W * yr / 1.0 - (p.r_L * ic.F_L - p.r_D * ic.F_D)) /
      (p.v * ic.P_C * yr);
  CHECK(profit_rate(ic, 0.0, p) == doctest::Approx(expect).epsilon(1e-14));

  const Derived d = derived_quantities(ic, 0.0, p, 12.0);
  CHECK(d.pi_r == doctest::Approx(expect).epsilon(1e-14));
  CHECK(d.g == doctest::Approx(gen_exp(expect, p.g_inv) / p.v - p.delta)
                   .epsilon(1e-14));

  State zero = ic;
  zero.P_C = 0.0;
  CHECK_THROWS_AS(profit_rate(zero, 0.0, p), NumericalError);
}

TEST_CASE("right-hand side is finite and respects conservation") {
  ModelParams p;
  const State ic = State::table2();
  const State d = rhs(0.0, ic, p, 12.0);
  for (double v : d.to_array()) CHECK(std::isfinite(v));
  // d(F_L - F_D - B_PL)/dt must equal d(W_D)/dt by construction:
  // check the balance-sheet identity at the initial point.
  const double wd = reconstruct_wd(ic, 12.0);
  const double a = p.growth.a(0.0);
  const double yr = ic.K_r / p.v;
  const double dwd = p.r_D * wd - wd / p.tau_W + ic.W * yr / a;
  CHECK(d.F_L - d.F_D - d.B_PL == doctest::Approx(dwd).epsilon(1e-12));
}

TEST_CASE("config parsing: defaults, overrides, unknown keys") {
  ModelParams p = params_from_json(json::parse("{}"));
  CHECK(p.s == doctest::Approx(0.27));
  CHECK(p.v == doctest::Approx(3.0));

  p = params_from_json(json::parse(R"({"s":0.285,"v":2.9})"));
  CHECK(p.s == doctest::Approx(0.285));
  CHECK(p.v == doctest::Approx(2.9));

  CHECK_THROWS_WITH_AS(params_from_json(json::parse(R"({"tua_B":1})")),
                       doctest::Contains("tua_B"), ModelError);
  // extra_allowed lets callers reserve top-level keys.
  CHECK_NOTHROW(params_from_json(json::parse(R"({"ic":{}})"), {"ic"}));

  // Round trip through JSON preserves every scannable parameter.
  const json round = params_to_json(p);
  const ModelParams q = params_from_json(round);
  for (const auto& name : scannable_params())
    CHECK(get_param(q, name) == doctest::Approx(get_param(p, name)).epsilon(1e-15));
}

TEST_CASE("named parameter access") {
  ModelParams p;
  CHECK(get_param(p, "s") == doctest::Approx(0.27));
  set_param(p, "v", 2.7263);
  CHECK(p.v == doctest::Approx(2.7263));
  CHECK_THROWS_AS(get_param(p, "nope"), ModelError);
  CHECK(scannable_params().size() == 10);
  // alpha/beta stay in sync with the growth model.
  set_param(p, "alpha", 0.02);
  CHECK(p.growth.alpha_t(5.0) == doctest::Approx(0.02));
}

TEST_CASE("algebraic productivity growth") {
  ModelParams p;
  p.growth.variant = GrowthVariant::Algebraic;
  p.growth.t0 = 1.0;
  p.growth.nu_g = 2.0;
  // a(t) = a0 (t0 + alpha t)^nu_g
  CHECK(p.growth.a(0.0) == doctest::Approx(1.0));
  CHECK(p.growth.a(10.0) ==
        doctest::Approx(std::pow(1.0 + 0.015 * 10.0, 2.0)).epsilon(1e-14));
  // alpha_t = d ln a / dt
  const double h = 1e-6;
  const double fd =
      (std::log(p.growth.a(10 + h)) - std::log(p.growth.a(10 - h))) / (2 * h);
  CHECK(p.growth.alpha_t(10.0) == doctest::Approx(fd).epsilon(1e-8));
}
