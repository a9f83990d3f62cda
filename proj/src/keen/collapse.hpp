#pragma once
// Terminal-collapse closed forms: saturation limits, predicted decay shapes,
// coefficient fitting, and growth-to-collapse transition detection.

#include <json.hpp>

#include "keen/integrate.hpp"
#include "keen/leading.hpp"
#include "keen/model.hpp"

namespace keen {

struct SaturationLimits {
  double inv_sat = 0.0;
  double tau_rl_sat = 0.0;
  double tau_lc_sat = 0.0;  // +inf for the standard shape
  double ph_sat = 0.0;
  double g_sat = 0.0;       // -delta
};
SaturationLimits saturation_limits(const ModelParams& p);

struct CollapseFit {
  double bc0 = 0.0, bc1 = 0.0;
  double fl1 = 0.0;
  double kr1 = 0.0, lambda1 = 0.0;
  double fd0 = 0.0, fd1 = 0.0;
  double bp0 = 0.0, bp1 = 0.0;
  double c1 = 0.0, c2 = 0.0;   // wage/price constants
  double mu_c = 0.0;           // omega (alpha + beta + delta)
  double ph_sat = 0.0;
  double tau_rl_sat = 0.0;
  // Freely fitted decay rates, for comparison against the predicted ones.
  double kr_rate = 0.0, lambda_rate = 0.0, fl_rate = 0.0;
  double onset_t = 0.0;
  double transient_rate = 0.0;
  // Per-field RMS residuals of the closed forms over the fit window,
  // relative to the field scale.
  nlohmann::json residuals;
};

// bp0 generalized from the steady balance of the profit/loss equation.
double bp0_predicted(const ModelParams& p, double cst);

State collapse_predict(double t, const CollapseFit& fit, const ModelParams& p);

CollapseFit fit_collapse(const IntegrationResult& run, const ModelParams& p,
                         double window_begin, double window_end);

struct TransitionInfo {
  double onset_t = 0.0;
  double transient_rate = 0.0;
  double departure_t = 0.0;  // where the residual reaches 10% of the envelope
};
// Detects the departure from the leading-order growth solution of a
// deferred-collapse trajectory via sustained growth of the log residual of
// B_C against its fitted leading-order form (fit window fit_begin..fit_end).
TransitionInfo transition_detect(const IntegrationResult& run,
                                 const LeadingMode& mode, double fit_begin,
                                 double fit_end);

nlohmann::json collapse_fit_to_json(const CollapseFit& f);

}  // namespace keen
