#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "keen/collapse.hpp"
#include "keen/integrate.hpp"

using namespace keen;

namespace {
IntegrationResult deep_run(double s, double t_end) {
  ModelParams p;
  p.s = s;
  IntegrationConfig cfg;
  cfg.t_end = t_end;
  return integrate(p, State::table2(), 12.0, cfg);
}
}  // namespace

TEST_CASE("saturation limits for the standard shapes") {
  const SaturationLimits sat = saturation_limits(ModelParams{});
  CHECK(sat.inv_sat == 0.0);               // investment floor
  CHECK(sat.tau_rl_sat == doctest::Approx(3.0));  // repayment floor
  CHECK(sat.ph_sat == doctest::Approx(-0.04));    // Phillips floor
  CHECK(sat.g_sat == doctest::Approx(-0.01));     // -delta
}

TEST_CASE("bp0 prediction") {
  // Steady balance of the bank profit/loss equation: bp0 = r_D cst /
  // (1/tau_B - r_D).
  const ModelParams p;
  CHECK(bp0_predicted(p, 12.0) == doctest::Approx(12.0 / 99).epsilon(1e-14));
  CHECK(bp0_predicted(p, 0.0) == doctest::Approx(0.0));
}

TEST_CASE("closed-form decay constants for the standard collapse") {
  const IntegrationResult r = deep_run(0.27, 400.0);
  REQUIRE(r.has_event("collapse"));
  const CollapseFit f = fit_collapse(r, ModelParams{}, 250.0, 350.0);

  // Freely fitted rates against the predicted exponents.
  CHECK(f.kr_rate == doctest::Approx(-0.01).epsilon(1e-6));
  CHECK(f.lambda_rate == doctest::Approx(-0.045).epsilon(1e-6));
  CHECK(f.fl_rate == doctest::Approx(-1.0 / 3).epsilon(1e-6));

  // Asymptotic constants.
  CHECK(f.bp0 == doctest::Approx(12.0 / 99).epsilon(1e-6));
  CHECK(f.fd0 == doctest::Approx(-12.0 / 99 - 12.0).epsilon(1e-6));
  CHECK(f.mu_c == doctest::Approx(0.1 * 0.045).epsilon(1e-12));
  CHECK(f.ph_sat == doctest::Approx(-0.04).epsilon(1e-12));

  // The closed forms reproduce every field over the window.
  for (const auto& [field, resid] : f.residuals.items())
    CHECK_MESSAGE(resid.get<double>() < 1e-6, field);
}

TEST_CASE("closed forms evaluate consistently with the fit") {
  const IntegrationResult r = deep_run(0.27, 400.0);
  const ModelParams p;
  const CollapseFit f = fit_collapse(r, p, 250.0, 350.0);
  const double t = 300.0;
  const State pred = collapse_predict(t, f, p);
  std::size_t idx = 0;
  for (std::size_t i = 0; i < r.traj.size(); ++i)
    if (std::abs(r.traj.times[i] - t) < std::abs(r.traj.times[idx] - t))
      idx = i;
  const auto yp = pred.to_array();
  const auto ym = r.traj.states[idx].to_array();
  for (int k = 0; k < 8; ++k) {
    const double scale = std::max(std::abs(ym[k]), 1e-12);
    CHECK(std::abs(yp[k] - ym[k]) / scale < 1e-5);
  }
}

TEST_CASE("near-critical transition detection at s = 0.285") {
  const IntegrationResult r = deep_run(0.285, 400.0);
  ModelParams p;
  p.s = 0.285;
  const LeadingMode mode = classify(p);
  const TransitionInfo tr = transition_detect(r, mode, 60.0, 90.0);
  CHECK(tr.onset_t == doctest::Approx(96.95).epsilon(0.05));
  CHECK(tr.departure_t > tr.onset_t);
  CHECK(tr.departure_t < r.event_time("collapse"));
  // Bridge growth rate of the log residual.
  CHECK(tr.transient_rate == doctest::Approx(0.237).epsilon(0.05));
}

TEST_CASE("transition detection refuses stable runs") {
  ModelParams p;
  p.s = 0.30;
  const LeadingMode mode = classify(p);
  IntegrationConfig cfg;
  cfg.t_end = 100.0;
  cfg.blowup_norm = 1e18;
  const IntegrationResult r = integrate(p, State::table2(), 12.0, cfg);
  CHECK_THROWS_AS(transition_detect(r, mode, 60.0, 90.0), ModelError);
}

TEST_CASE("fit window must follow the collapse event") {
  const IntegrationResult r = deep_run(0.27, 150.0);
  CHECK_THROWS_AS(fit_collapse(r, ModelParams{}, 10.0, 40.0), ModelError);
}
