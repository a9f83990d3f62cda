#pragma once
// Numerical experiments: exponential/phase fitting, lagged-ratio diagnostics,
// Monte Carlo over initial conditions and parameters, bistability branch
// switching, and separatrix search.

#include <complex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "keen/collapse.hpp"
#include "keen/integrate.hpp"
#include "keen/leading.hpp"
#include "keen/model.hpp"

namespace keen {

struct ExpFit {
  cplx rate;
  double amplitude = 0.0;
  double phase = 0.0;  // radians
  double window_begin = 0.0, window_end = 0.0;
  double residual = 0.0;  // RMS
};

// Real mode: linear regression of log|y|. Complex mode: least squares of
// A e^{Re(rate) t} sin(Im(rate) t + phi) with the rate held at the seed.
ExpFit fit_complex_exponential(const std::vector<double>& times,
                               const std::vector<double>& values,
                               double window_begin, double window_end,
                               bool complex_mode, cplx seed_rate);

struct RatioSeries {
  std::vector<double> times;
  std::vector<double> ratio;  // normalized so the prediction is 1
  double lag = 0.0;           // years
};

// Growth- and phase-adjusted ratio of two fields against the predicted
// amplitude ratio. Field names follow the state declaration order.
RatioSeries ratio_diagnostic(const Trajectory& traj,
                             const AmplitudeTable& table,
                             const std::string& numerator,
                             const std::string& denominator,
                             double window_begin, double window_end,
                             bool phase_adjust = true);

struct McIcSummary {
  int n = 0;
  unsigned long long seed = 0;
  std::vector<double> dt_shift;  // per-run, excluded runs absent
  std::vector<int> excluded_runs;
  double mean_shift = 0.0;
  double sd_shift = 0.0;
};

McIcSummary monte_carlo_ic(const ModelParams& p, double sigma, int n,
                           unsigned long long seed, int jobs = 0);

struct McParamsSummary {
  int n = 0;
  unsigned long long seed = 0;
  std::vector<double> lags;  // deferred-collapse models only
  int nonviable = 0;
  int non_oscillatory = 0;
  double lag_min = 0.0, lag_max = 0.0, lag_mean = 0.0;
};

McParamsSummary monte_carlo_params(const ModelParams& p, double sigma, int n,
                                   unsigned long long seed, int jobs = 0);

enum class BranchOutcome { Growth, Collapse };

struct BranchResult {
  BranchOutcome outcome = BranchOutcome::Collapse;
  double late_slope = 0.0;  // d ln B_C / dt over the last 20 years
  double mu0_after = 0.0;   // predicted growth rate for the continued system
  IntegrationResult run;
};

BranchResult branch_switch(const ModelParams& p_before,
                           const ModelParams& p_after, double t_switch,
                           const State& ic, double cst,
                           double horizon = 420.0);

struct SeparatrixResult {
  double t_star = 0.0;
  double bracket_lo = 0.0, bracket_hi = 0.0;
  double intermediate_slope = 0.0;
  double span_begin = 0.0, span_end = 0.0;
};

SeparatrixResult separatrix_search(const ModelParams& p_before,
                                   const ModelParams& p_after, double t1,
                                   double t2, const State& ic, double cst,
                                   double horizon = 420.0);

nlohmann::json exp_fit_to_json(const ExpFit& f);
nlohmann::json mc_ic_to_json(const McIcSummary& s);
nlohmann::json mc_params_to_json(const McParamsSummary& s);

// Counter-based per-run stream: deterministic given (seed, run index).
std::vector<double> normal_draws(unsigned long long seed,
                                 unsigned long long run, int count);

}  // namespace keen
