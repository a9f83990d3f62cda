#include "keen/collapse.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <limits>

namespace keen {

namespace {

// Slope/intercept of a least-squares line y = a + b t.
std::pair<double, double> linfit(const std::vector<double>& t,
                                 const std::vector<double>& y) {
  const std::size_t n = t.size();
  double st = 0, sy = 0, stt = 0, sty = 0;
  for (std::size_t i = 0; i < n; ++i) {
    st += t[i];
    sy += y[i];
    stt += t[i] * t[i];
    sty += t[i] * y[i];
  }
  const double det = n * stt - st * st;
  const double b = (n * sty - st * sy) / det;
  const double a = (sy - b * st) / n;
  return {a, b};
}

// Least squares of y against {1, exp(-(t - t0)/tau)}.
std::pair<double, double> const_plus_exp_fit(const std::vector<double>& t,
                                             const std::vector<double>& y,
                                             double t0, double tau) {
  Eigen::MatrixXd M(t.size(), 2);
  Eigen::VectorXd z(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    M(i, 0) = 1.0;
    M(i, 1) = std::exp(-(t[i] - t0) / tau);
    z(i) = y[i];
  }
  const Eigen::Vector2d c = M.colPivHouseholderQr().solve(z);
  return {c(0), c(1)};
}

}  // namespace

SaturationLimits saturation_limits(const ModelParams& p) {
  SaturationLimits s;
  s.inv_sat = gen_exp_limit_neg(p.g_inv);
  s.tau_rl_sat = gen_exp_limit_neg(p.g_tau_rl);
  s.tau_lc_sat = gen_exp_limit_neg(p.g_tau_lc);
  s.ph_sat = p.g_ph.floor;  // limit as lambda -> 0+
  s.g_sat = s.inv_sat / p.v - p.delta;
  return s;
}

double bp0_predicted(const ModelParams& p, double cst) {
  return p.r_D * cst / (1.0 / p.tau_B - p.r_D);
}

State collapse_predict(double t, const CollapseFit& fit,
                       const ModelParams& p) {
  const double kappa = p.alpha - fit.ph_sat + fit.mu_c;
  State s;
  const double es = std::exp(-t / fit.tau_rl_sat);
  s.B_C = fit.bc0 + fit.bc1 * es;
  s.F_L = fit.fl1 * es;
  s.K_r = fit.kr1 * std::exp(-p.delta * t);
  s.lambda = fit.lambda1 * std::exp(-(p.alpha + p.beta + p.delta) * t);
  const double ln_pc = (1.0 - t) / p.tau_Pc +
                       (fit.c1 * std::exp(-kappa * t) - fit.c2) / kappa;
  s.P_C = std::exp(ln_pc);
  s.W = fit.c1 * (p.s - 1.0) * p.growth.a0 * p.tau_Pc *
        std::exp((fit.ph_sat - fit.mu_c) * t) * s.P_C;
  s.F_D = fit.fd0 + fit.fd1 * es;
  s.B_PL = fit.bp0 + fit.bp1 * es;
  return s;
}

CollapseFit fit_collapse(const IntegrationResult& run, const ModelParams& p,
                         double window_begin, double window_end) {
  const Trajectory& traj = run.traj;
  if (!run.has_event("collapse"))
    throw ModelError("fit_collapse: trajectory has no collapse event");
  if (window_begin < run.event_time("collapse"))
    throw ModelError("fit_collapse: window precedes collapse onset");

  const SaturationLimits sat = saturation_limits(p);
  CollapseFit f;
  f.mu_c = p.omega * (p.alpha + p.beta + p.delta);
  f.ph_sat = sat.ph_sat;
  f.tau_rl_sat = sat.tau_rl_sat;
  const double kappa = p.alpha - f.ph_sat + f.mu_c;

  std::vector<double> ts;
  std::vector<const State*> ss;
  for (std::size_t i = 0; i < traj.size(); ++i)
    if (traj.times[i] >= window_begin && traj.times[i] <= window_end) {
      ts.push_back(traj.times[i]);
      ss.push_back(&traj.states[i]);
    }
  if (ts.size() < 10)
    throw ModelError("fit_collapse: window contains too few samples");
  const std::size_t n = ts.size();

  // c1 from the saturating wage-to-price ratio, then c2 from the price form.
  {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      acc += ss[i]->W / ((p.s - 1.0) * p.growth.a0 * p.tau_Pc *
                         std::exp((f.ph_sat - f.mu_c) * ts[i]) * ss[i]->P_C);
    f.c1 = acc / n;
    acc = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      acc += f.c1 * std::exp(-kappa * ts[i]) -
             kappa * (std::log(ss[i]->P_C) - (1.0 - ts[i]) / p.tau_Pc);
    f.c2 = acc / n;
  }

  // Pure-exponential fields: free decay rates for diagnostics, coefficients
  // at the predicted rates.
  auto rate_and_coef = [&](auto getter, double pred_rate, double& rate,
                           double& coef) {
    std::vector<double> ly(n);
    for (std::size_t i = 0; i < n; ++i) ly[i] = std::log(std::abs(getter(i)));
    auto [a, b] = linfit(ts, ly);
    rate = b;
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      acc += getter(i) * std::exp(-pred_rate * ts[i]);
    coef = acc / n;
  };
  rate_and_coef([&](std::size_t i) { return ss[i]->K_r; }, -p.delta, f.kr_rate,
                f.kr1);
  rate_and_coef([&](std::size_t i) { return ss[i]->lambda; },
                -(p.alpha + p.beta + p.delta), f.lambda_rate, f.lambda1);
  rate_and_coef([&](std::size_t i) { return ss[i]->F_L; },
                -1.0 / sat.tau_rl_sat, f.fl_rate, f.fl1);

  // Constant-plus-exponential fields.
  auto cpe = [&](auto getter, double& c0, double& c1c) {
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = getter(i);
    auto [a, b] = const_plus_exp_fit(ts, y, ts.front(), sat.tau_rl_sat);
    c0 = a;
    c1c = b * std::exp(ts.front() / sat.tau_rl_sat);
  };
  cpe([&](std::size_t i) { return ss[i]->B_C; }, f.bc0, f.bc1);
  cpe([&](std::size_t i) { return ss[i]->F_D; }, f.fd0, f.fd1);
  cpe([&](std::size_t i) { return ss[i]->B_PL; }, f.bp0, f.bp1);

  // Residuals of the assembled closed forms.
  nlohmann::json res;
  const char* names[] = {"B_C", "B_PL", "F_L", "F_D", "W", "P_C", "K_r",
                         "lambda"};
  std::array<double, 8> sum2{}, scale{};
  for (std::size_t i = 0; i < n; ++i) {
    const State pred = collapse_predict(ts[i], f, p);
    const auto pa = pred.to_array();
    const auto da = ss[i]->to_array();
    for (int k = 0; k < 8; ++k) {
      sum2[k] += (pa[k] - da[k]) * (pa[k] - da[k]);
      scale[k] = std::max(scale[k], std::abs(da[k]));
    }
  }
  for (int k = 0; k < 8; ++k)
    res[names[k]] = std::sqrt(sum2[k] / n) / std::max(scale[k], 1e-300);
  f.residuals = res;
  return f;
}

TransitionInfo transition_detect(const IntegrationResult& run,
                                 const LeadingMode& mode, double fit_begin,
                                 double fit_end) {
  if (mode.regime != RegimeClass::DeferredCollapse)
    throw ModelError("transition_detect: stable run");
  const Trajectory& traj = run.traj;
  const double r = mode.mu0.real(), w = mode.mu0.imag();

  // Fit the leading-order sinusoid with the rates held at mu0.
  std::vector<double> ft, fy;
  for (std::size_t i = 0; i < traj.size(); ++i)
    if (traj.times[i] >= fit_begin && traj.times[i] <= fit_end) {
      ft.push_back(traj.times[i]);
      fy.push_back(traj.states[i].B_C);
    }
  if (ft.size() < 10)
    throw ModelError("transition_detect: fit window too small");
  Eigen::MatrixXd M(ft.size(), 2);
  Eigen::VectorXd z(ft.size());
  for (std::size_t i = 0; i < ft.size(); ++i) {
    const double E = std::exp(r * ft[i]);
    M(i, 0) = E * std::sin(w * ft[i]);
    M(i, 1) = E * std::cos(w * ft[i]);
    z(i) = fy[i];
  }
  const Eigen::Vector2d ab = M.colPivHouseholderQr().solve(z);
  const double A = std::hypot(ab(0), ab(1));
  const double phi = std::atan2(ab(1), ab(0));

  // Log residual against the leading-order prediction.
  std::vector<double> ts, lr, resid;
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const double t = traj.times[i];
    if (t < 20.0) continue;
    const double pred = A * std::exp(r * t) * std::sin(w * t + phi);
    const double rs = std::abs(traj.states[i].B_C - pred);
    ts.push_back(t);
    resid.push_back(rs);
    lr.push_back(std::log(std::max(rs, 1e-300)));
  }
  const double dt = traj.times[1] - traj.times[0];
  const int need = static_cast<int>(std::lround(2.0 / dt));

  // Onset: end of the first two-year window of strictly growing residual.
  double onset = std::numeric_limits<double>::quiet_NaN();
  int runlen = 0;
  for (std::size_t i = 1; i < lr.size(); ++i) {
    runlen = (lr[i] > lr[i - 1]) ? runlen + 1 : 0;
    if (runlen >= need) {
      onset = ts[i];
      break;
    }
  }
  if (!std::isfinite(onset))
    throw ModelError("transition_detect: no sustained residual growth found");

  // Departure: residual reaches 10% of the fitted envelope.
  double t_dep = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t i = 0; i < ts.size(); ++i)
    if (resid[i] > 0.1 * A * std::exp(r * ts[i])) {
      t_dep = ts[i];
      break;
    }
  if (!std::isfinite(t_dep) || t_dep <= onset)
    throw NumericalError("transition_detect: no departure point found");

  std::vector<double> rt, ry;
  for (std::size_t i = 0; i < ts.size(); ++i)
    if (ts[i] >= onset && ts[i] <= t_dep) {
      rt.push_back(ts[i]);
      ry.push_back(lr[i]);
    }
  auto [ia, slope] = linfit(rt, ry);
  (void)ia;
  return TransitionInfo{onset, slope, t_dep};
}

nlohmann::json collapse_fit_to_json(const CollapseFit& f) {
  return nlohmann::json{
      {"bc0", f.bc0},       {"bc1", f.bc1},
      {"fl1", f.fl1},       {"kr1", f.kr1},
      {"lambda1", f.lambda1}, {"fd0", f.fd0},
      {"fd1", f.fd1},       {"bp0", f.bp0},
      {"bp1", f.bp1},       {"c1", f.c1},
      {"c2", f.c2},         {"mu_c", f.mu_c},
      {"ph_sat", f.ph_sat}, {"tau_rl_sat", f.tau_rl_sat},
      {"kr_rate", f.kr_rate}, {"lambda_rate", f.lambda_rate},
      {"fl_rate", f.fl_rate}, {"onset_t", f.onset_t},
      {"transient_rate", f.transient_rate}, {"residuals", f.residuals}};
}

}  // namespace keen
