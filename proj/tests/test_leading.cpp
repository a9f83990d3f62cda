#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <complex>

#include "keen/leading.hpp"
#include "keen/model.hpp"

using namespace keen;

namespace {

ModelParams with_s(double s) {
  ModelParams p;
  p.s = s;
  return p;
}

// Match each root of `a` to its nearest root of `b`; return the worst gap.
double root_set_distance(std::vector<cplx> a, std::vector<cplx> b) {
  REQUIRE(a.size() == b.size());
  double worst = 0.0;
  for (const cplx& ra : a) {
    double best = 1e300;
    for (const cplx& rb : b) best = std::min(best, std::abs(ra - rb));
    worst = std::max(worst, best);
  }
  return worst;
}

}  // namespace

TEST_CASE("equilibrium constants for standard parameters") {
  const Equilibrium eq = leading_equilibrium(ModelParams{});
  CHECK(eq.inv0 == doctest::Approx(3 * (0.015 + 0.02 + 0.01)).epsilon(1e-14));
  CHECK(eq.pi_r0 == doctest::Approx(0.0643279065).epsilon(1e-8));
  // lambda0 = 0.96 + ln(1 + 25 alpha)/50 for the standard Phillips shape
  CHECK(eq.lambda0 ==
        doctest::Approx(0.96 + std::log(1 + 25 * 0.015) / 50).epsilon(1e-12));
  // tau_RL0 and tau_LC0 are G evaluated at pi_r0.
  const ModelParams p;
  CHECK(eq.tau_rl0 ==
        doctest::Approx(gen_exp(eq.pi_r0, p.g_tau_rl)).epsilon(1e-12));
  CHECK(eq.tau_rl0 == doctest::Approx(14.431).epsilon(1e-4));
  CHECK(eq.tau_lc0 ==
        doctest::Approx(gen_exp(eq.pi_r0, p.g_tau_lc)).epsilon(1e-12));
  CHECK(eq.tau_lc0 == doctest::Approx(0.97774).epsilon(1e-4));
}

TEST_CASE("lambda0 depends only on alpha") {
  ModelParams a, b;
  b.s = 0.31;
  b.v = 2.2;
  b.r_L = 0.06;
  b.tau_W = 0.1;
  CHECK(leading_equilibrium(a).lambda0 ==
        doctest::Approx(leading_equilibrium(b).lambda0).epsilon(1e-13));
  ModelParams c;
  c.alpha = 0.03;
  c.growth.alpha = 0.03;
  CHECK(leading_equilibrium(c).lambda0 !=
        doctest::Approx(leading_equilibrium(a).lambda0).epsilon(1e-6));
}

TEST_CASE("characteristic quintic: degree check and dominant roots") {
  const Quintic q = char_quintic(ModelParams{});
  CHECK(q.node_residual < 1e-8);
  const auto roots = poly_roots(q.coeffs_complex());
  REQUIRE(roots.size() == 5);
  // Complex dominant pair (independently computed).
  double best = 1e300;
  for (const auto& r : roots)
    best = std::min(best, std::abs(r - cplx(0.06987903, 0.04598105)));
  CHECK(best < 1e-7);
  // Three real negative roots.
  int neg = 0;
  for (const auto& r : roots)
    if (r.real() < 0 && std::abs(r.imag()) < 1e-9) ++neg;
  CHECK(neg == 3);
}

TEST_CASE("quintic is independent of a0 and initial conditions") {
  ModelParams p;
  const auto r1 = poly_roots(char_quintic(p).coeffs_complex());
  p.growth.a0 = 2.5;
  const auto r2 = poly_roots(char_quintic(p).coeffs_complex());
  CHECK(root_set_distance(r1, r2) < 1e-9);
}

TEST_CASE("dominant root across the s family") {
  // Independently computed dominant roots.
  auto mu0_of = [](double s) {
    const auto roots = poly_roots(char_quintic(with_s(s)).coeffs_complex());
    cplx best(-1e300, 0);
    for (const auto& r : roots)
      if (r.real() > best.real()) best = r;
    return best;
  };
  CHECK(std::abs(mu0_of(0.285) - cplx(0.0814705988, 0.0225095881)) < 1e-7);
  CHECK(std::abs(mu0_of(0.3) - cplx(0.13171714, 0.0)) < 1e-7);
}

TEST_CASE("regime classification") {
  CHECK(classify(with_s(0.27)).regime == RegimeClass::DeferredCollapse);
  CHECK(classify(with_s(0.285)).regime == RegimeClass::DeferredCollapse);
  CHECK(classify(with_s(0.3)).regime == RegimeClass::StableGrowth);
  // Deep left of the regime diagram: all roots in the left half plane.
  CHECK(classify(with_s(0.27 / 4)).regime == RegimeClass::ImmediateCollapse);
  // Above the critical v the economy must collapse.
  ModelParams p;
  p.v = 12.0;
  CHECK(classify(p).regime == RegimeClass::ImmediateCollapse);
}

TEST_CASE("amplitude table at s = 0.285") {
  const LeadingMode m = classify(with_s(0.285));
  const AmplitudeTable& t = m.amplitudes;
  CHECK(t.dropped_residual < 1e-8);
  CHECK(t.realizable);

  CHECK(t.B_PL0.amp == doctest::Approx(0.5949050).epsilon(1e-6));
  CHECK(t.F_D0.amp == doctest::Approx(15.0526978).epsilon(1e-6));
  CHECK(t.F_L0.amp == doctest::Approx(15.9390976).epsilon(1e-6));
  CHECK(t.W0.amp == doctest::Approx(23.8111979).epsilon(1e-6));
  CHECK(t.P_C0.amp == doctest::Approx(31.8161573).epsilon(1e-6));

  CHECK(t.B_PL0.phase_years == doctest::Approx(-0.0277274).epsilon(1e-4));
  CHECK(t.F_D0.phase_years == doctest::Approx(0.6862392).epsilon(1e-5));
  CHECK(t.F_L0.phase_years == doctest::Approx(0.9054319).epsilon(1e-5));
  CHECK(t.W0.phase_years == doctest::Approx(13.7830358).epsilon(1e-6));
  CHECK(t.P_C0.phase_years == doctest::Approx(12.8275901).epsilon(1e-6));

  CHECK(std::abs(t.F_L0.coef - cplx(15.935787, 0.32483068)) < 1e-5);
  CHECK(std::abs(t.F_D0.coef - cplx(15.050902, 0.23250923)) < 1e-5);
  CHECK(t.F_L0.amp / t.F_D0.amp == doctest::Approx(1.058886).epsilon(1e-5));
}

TEST_CASE("phases vanish for a real dominant root") {
  const LeadingMode m = classify(with_s(0.3));
  for (const FieldAmplitude* f : m.amplitudes.fields()) {
    CHECK(f->phase_years == 0.0);
    CHECK(f->coef.imag() == doctest::Approx(0.0).epsilon(1e-12));
  }
  CHECK(std::isinf(m.T));
}

TEST_CASE("period estimates at s = 0.285") {
  const LeadingMode m = classify(with_s(0.285));
  CHECK(m.T == doctest::Approx(M_PI / 0.0225095881).epsilon(1e-7));
  // T* = T minus the largest phase lead (W at 13.78 years).
  CHECK(m.T_star == doctest::Approx(m.T - 13.7830358).epsilon(1e-7));
}

TEST_CASE("closed-form wage coefficient matches the linear solve") {
  for (double s : {0.275, 0.28, 0.285}) {
    const LeadingMode m = classify(with_s(s));
    const cplx w0 = wage_coefficient_closed_form(m.mu0, with_s(s));
    CHECK(std::abs(w0 - m.amplitudes.W0.coef) / std::abs(w0) < 1e-6);
  }
  // Refuses non-standard shapes rather than silently misusing the formula.
  ModelParams p;
  p.g_inv.slope = 3.0;
  const LeadingMode m = classify(p);
  CHECK_THROWS_AS(wage_coefficient_closed_form(m.mu0, p), ModelError);
}

TEST_CASE("augmented determinant vanishes at a quintic root") {
  const ModelParams p;
  const LeadingMode m = classify(p);
  // Normalize by a nearby non-root value.
  const cplx off = augmented_det(m.mu0 + cplx(0.05, 0.0), p);
  CHECK(std::abs(augmented_det(m.mu0, p)) / std::abs(off) < 1e-6);
}
