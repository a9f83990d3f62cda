#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "keen/integrate.hpp"
#include "keen/model.hpp"

using namespace keen;

namespace {
IntegrationResult run_standard(double t_end, bool nine_state = false,
                               double rel_tol = 1e-9) {
  ModelParams p;
  IntegrationConfig cfg;
  cfg.t_end = t_end;
  cfg.nine_state = nine_state;
  cfg.rel_tol = rel_tol;
  return integrate(p, State::table2(), 12.0, cfg);
}
}  // namespace

TEST_CASE("nine-state validation run conserves F_L - F_D - B_PL - W_D") {
  const IntegrationResult r = run_standard(150.0, true);
  CHECK(r.conservation_drift < 1e-6);
  CHECK(r.traj.size() == 3001);
  CHECK(r.traj.times.front() == doctest::Approx(0.0));
  CHECK(r.traj.times.back() == doctest::Approx(150.0));
}

TEST_CASE("eight- and nine-state runs agree") {
  const IntegrationResult a = run_standard(60.0, false);
  const IntegrationResult b = run_standard(60.0, true);
  REQUIRE(a.traj.size() == b.traj.size());
  for (std::size_t i = 0; i < a.traj.size(); i += 100) {
    const auto ya = a.traj.states[i].to_array();
    const auto yb = b.traj.states[i].to_array();
    for (int k = 0; k < 8; ++k) {
      const double scale = std::max(std::abs(ya[k]), 1.0);
      CHECK(std::abs(ya[k] - yb[k]) / scale < 1e-7);
    }
  }
}

TEST_CASE("self-convergence under tolerance tightening") {
  const IntegrationResult a = run_standard(60.0, false, 1e-9);
  const IntegrationResult b = run_standard(60.0, false, 1e-11);
  REQUIRE(a.traj.size() == b.traj.size());
  double worst = 0.0;
  for (std::size_t i = 0; i < a.traj.size(); ++i) {
    const auto ya = a.traj.states[i].to_array();
    const auto yb = b.traj.states[i].to_array();
    for (int k = 0; k < 8; ++k)
      worst = std::max(worst, std::abs(ya[k] - yb[k]) /
                                  std::max(std::abs(yb[k]), 1.0));
  }
  CHECK(worst < 1e-6);
}

TEST_CASE("deterministic reruns are bit-identical") {
  const IntegrationResult a = run_standard(80.0);
  const IntegrationResult b = run_standard(80.0);
  REQUIRE(a.traj.size() == b.traj.size());
  for (std::size_t i = 0; i < a.traj.size(); ++i) {
    const auto ya = a.traj.states[i].to_array();
    const auto yb = b.traj.states[i].to_array();
    for (int k = 0; k < 8; ++k) CHECK(ya[k] == yb[k]);
  }
}

TEST_CASE("collapse event for the standard unstable run") {
  const IntegrationResult r = run_standard(150.0);
  REQUIRE(r.has_event("collapse"));
  // Crossing of pi_r through -1, confirmed decreasing for a year.
  const double tc = r.event_time("collapse");
  CHECK(tc == doctest::Approx(67.56).epsilon(1e-3));
  // The collapse event is non-terminal: the run continues to t_end.
  CHECK_FALSE(r.terminated_early);
  CHECK(r.traj.times.back() == doctest::Approx(150.0));
}

TEST_CASE("blowup termination is flagged") {
  ModelParams p;
  p.s = 0.30;  // stable growth, B_C ~ e^{0.1317 t}
  IntegrationConfig cfg;
  cfg.t_end = 200.0;
  cfg.blowup_norm = 1e6;
  const IntegrationResult r = integrate(p, State::table2(), 12.0, cfg);
  CHECK(r.terminated_early);
  REQUIRE(r.has_event("blowup"));
  // ln(1e6/900)/0.1317 ~ 53 years; the event must precede the horizon.
  CHECK(r.event_time("blowup") < 80.0);
}

TEST_CASE("dense output matches the sample grid") {
  const IntegrationResult r = run_standard(40.0);
  for (std::size_t i = 10; i < r.traj.size(); i += 321) {
    const double t = r.traj.times[i];
    CHECK(r.dense.eval1(t, 0) ==
          doctest::Approx(r.traj.states[i].B_C).epsilon(1e-12));
  }
}

TEST_CASE("trajectory CSV round trip is lossless") {
  const IntegrationResult r = run_standard(30.0);
  const std::string csv = trajectory_csv(r.traj);
  CHECK(csv.rfind("t,B_C,B_PL,F_L,F_D,W_D,W,P_C,K_r,lambda,pi_r,g\n", 0) == 0);
  ModelParams p;
  const Trajectory back = trajectory_from_csv(csv, p, 12.0);
  REQUIRE(back.size() == r.traj.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    CHECK(back.times[i] == r.traj.times[i]);
    const auto ya = r.traj.states[i].to_array();
    const auto yb = back.states[i].to_array();
    for (int k = 0; k < 8; ++k) CHECK(ya[k] == yb[k]);
    CHECK(back.derived[i].pi_r == r.traj.derived[i].pi_r);
  }
}

TEST_CASE("config validation") {
  IntegrationConfig cfg;
  cfg.t_end = cfg.t_begin - 1.0;
  CHECK_THROWS_AS(cfg.validate(), ModelError);
  cfg = IntegrationConfig{};
  cfg.rel_tol = -1;
  CHECK_THROWS_AS(cfg.validate(), ModelError);
}
