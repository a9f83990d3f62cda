#include "keen/experiments.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <thread>

namespace keen {

namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
  x += 0x9E3779B97F4A7C15ull;
  std::uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

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

int resolve_jobs(int jobs) {
  if (jobs > 0) return jobs;
  const unsigned hc = std::thread::hardware_concurrency();
  return hc ? static_cast<int>(hc) : 1;
}

void parallel_runs(int n, int jobs, const std::function<void(int)>& body) {
  std::atomic<int> next{0};
  auto worker = [&]() {
    for (;;) {
      const int k = next.fetch_add(1);
      if (k >= n) return;
      body(k);
    }
  };
  const int nthreads = std::min(resolve_jobs(jobs), std::max(n, 1));
  std::vector<std::thread> pool;
  for (int k = 1; k < nthreads; ++k) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
}

int state_column(const std::string& name) {
  static const std::vector<std::string> cols = {"B_C", "B_PL", "F_L", "F_D",
                                                "W",   "P_C",  "K_r", "lambda"};
  const auto it = std::find(cols.begin(), cols.end(), name);
  if (it == cols.end()) throw ModelError("unknown field name: " + name);
  return static_cast<int>(it - cols.begin());
}

const FieldAmplitude& table_field(const AmplitudeTable& t,
                                  const std::string& name) {
  static const FieldAmplitude bc{cplx(1.0, 0.0), 1.0, 0.0};
  if (name == "B_C") return bc;
  if (name == "B_PL") return t.B_PL0;
  if (name == "F_L") return t.F_L0;
  if (name == "F_D") return t.F_D0;
  if (name == "W") return t.W0;
  if (name == "P_C") return t.P_C0;
  if (name == "W_D") return t.W_D0;
  throw ModelError("no amplitude entry for field: " + name);
}

}  // namespace

std::vector<double> normal_draws(unsigned long long seed,
                                 unsigned long long run, int count) {
  std::uint64_t x = seed ^ (0xD1B54A32D192ED03ull * (run + 1));
  auto u01 = [&]() {
    return (static_cast<double>(splitmix64(x) >> 11) + 0.5) * 0x1p-53;
  };
  std::vector<double> out;
  out.reserve(count);
  while (static_cast<int>(out.size()) < count) {
    const double u1 = u01(), u2 = u01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    out.push_back(r * std::cos(2.0 * std::numbers::pi * u2));
    if (static_cast<int>(out.size()) < count)
      out.push_back(r * std::sin(2.0 * std::numbers::pi * u2));
  }
  return out;
}

ExpFit fit_complex_exponential(const std::vector<double>& times,
                               const std::vector<double>& values,
                               double window_begin, double window_end,
                               bool complex_mode, cplx seed_rate) {
  std::vector<double> ts, ys;
  for (std::size_t i = 0; i < times.size(); ++i)
    if (times[i] >= window_begin && times[i] <= window_end) {
      ts.push_back(times[i]);
      ys.push_back(values[i]);
    }
  if (ts.size() < 10)
    throw ModelError("fit_complex_exponential: window must contain at least "
                     "10 samples");
  ExpFit f;
  f.window_begin = window_begin;
  f.window_end = window_end;
  if (!complex_mode) {
    std::vector<double> ly(ts.size());
    for (std::size_t i = 0; i < ts.size(); ++i) {
      if (ys[i] <= 0.0)
        throw ModelError(
            "fit_complex_exponential: nonpositive value in real-mode log fit");
      ly[i] = std::log(ys[i]);
    }
    auto [a, b] = linfit(ts, ly);
    f.rate = b;
    f.amplitude = std::exp(a);
    f.phase = 0.0;
    double acc = 0.0;
    for (std::size_t i = 0; i < ts.size(); ++i) {
      const double e = ly[i] - (a + b * ts[i]);
      acc += e * e;
    }
    f.residual = std::sqrt(acc / ts.size());
    return f;
  }
  const double r = seed_rate.real(), w = seed_rate.imag();
  Eigen::MatrixXd M(ts.size(), 2);
  Eigen::VectorXd z(ts.size());
  for (std::size_t i = 0; i < ts.size(); ++i) {
    const double E = std::exp(r * ts[i]);
    M(i, 0) = E * std::sin(w * ts[i]);
    M(i, 1) = E * std::cos(w * ts[i]);
    z(i) = ys[i];
  }
  const Eigen::Vector2d ab = M.colPivHouseholderQr().solve(z);
  f.rate = seed_rate;
  f.amplitude = std::hypot(ab(0), ab(1));
  f.phase = std::atan2(ab(1), ab(0));
  const Eigen::VectorXd resid = z - M * ab;
  f.residual = std::sqrt(resid.squaredNorm() / ts.size());
  return f;
}

RatioSeries ratio_diagnostic(const Trajectory& traj,
                             const AmplitudeTable& table,
                             const std::string& numerator,
                             const std::string& denominator,
                             double window_begin, double window_end,
                             bool phase_adjust) {
  const int cn = state_column(numerator);
  const int cd = state_column(denominator);
  const FieldAmplitude& fn = table_field(table, numerator);
  const FieldAmplitude& fd = table_field(table, denominator);
  const double pred = fn.amp / fd.amp;
  RatioSeries out;
  out.lag = phase_adjust ? fn.phase_years - fd.phase_years : 0.0;
  const double growth =
      phase_adjust ? std::exp(table.mu0.real() * out.lag) : 1.0;
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const double t = traj.times[i];
    if (t < window_begin || t > window_end) continue;
    const double tl = t - out.lag;
    if (tl < traj.times.front() || tl > traj.times.back()) continue;
    const double num = traj.interp(tl, cn) * growth;
    const double den = traj.states[i].to_array()[cd];
    out.times.push_back(t);
    out.ratio.push_back(num / den / pred);
  }
  if (out.times.empty())
    throw NumericalError(
        "ratio_diagnostic: no trajectory samples inside the window");
  return out;
}

McIcSummary monte_carlo_ic(const ModelParams& p, double sigma, int n,
                           unsigned long long seed, int jobs) {
  const LeadingMode mode = classify(p);
  if (mode.regime != RegimeClass::DeferredCollapse)
    throw ModelError("monte_carlo_ic: requires a deferred-collapse regime");
  const cplx mu0 = mode.mu0;

  McIcSummary sum;
  sum.n = n;
  sum.seed = seed;
  std::vector<double> dts(n);
  std::vector<char> ok(n, 0);
  const State base = State::table2();
  const double wd0 = 13.0;

  parallel_runs(n, jobs, [&](int k) {
    const auto d = normal_draws(seed, k, 8);
    auto a = base.to_array();
    for (int i = 0; i < 8; ++i) a[i] *= 1.0 + sigma * d[i];
    const State ic = State::from_array(a.data());
    const double cst = ic.F_L - ic.F_D - ic.B_PL - wd0;
    IntegrationConfig cfg;
    cfg.t_end = 90.01;
    cfg.rel_tol = 1e-9;
    cfg.abs_tol = 1e-11;
    try {
      const IntegrationResult run = integrate(p, ic, cst, cfg);
      if (run.has_event("collapse") || run.terminated_early) return;
      std::vector<double> bc(run.traj.size());
      for (std::size_t i = 0; i < run.traj.size(); ++i)
        bc[i] = run.traj.states[i].B_C;
      const ExpFit fit =
          fit_complex_exponential(run.traj.times, bc, 60.0, 90.0, true, mu0);
      dts[k] = fit.phase / mu0.imag();
      ok[k] = 1;
    } catch (const std::exception&) {
      // counted as an excluded run
    }
  });
  for (int k = 0; k < n; ++k) {
    if (ok[k])
      sum.dt_shift.push_back(dts[k]);
    else
      sum.excluded_runs.push_back(k);
  }
  const std::size_t m = sum.dt_shift.size();
  if (m > 0) {
    double acc = 0.0;
    for (double v : sum.dt_shift) acc += v;
    sum.mean_shift = acc / m;
    if (m > 1) {
      double s2 = 0.0;
      for (double v : sum.dt_shift)
        s2 += (v - sum.mean_shift) * (v - sum.mean_shift);
      sum.sd_shift = std::sqrt(s2 / (m - 1));
    }
  }
  return sum;
}

McParamsSummary monte_carlo_params(const ModelParams& p, double sigma, int n,
                                   unsigned long long seed, int jobs) {
  McParamsSummary sum;
  sum.n = n;
  sum.seed = seed;
  if (n == 0) return sum;
  const auto& names = scannable_params();
  std::vector<double> lags(n);
  std::vector<int> status(n, 0);  // 0 nonviable, 1 non-oscillatory, 2 lag

  parallel_runs(n, jobs, [&](int k) {
    const auto d = normal_draws(seed, k, static_cast<int>(names.size()));
    try {
      ModelParams q = p;
      for (std::size_t i = 0; i < names.size(); ++i)
        set_param(q, names[i],
                  get_param(p, names[i]) * (1.0 + sigma * d[i]));
      q.validate();
      const LeadingMode m = classify(q);
      if (m.regime == RegimeClass::DeferredCollapse) {
        lags[k] = m.amplitudes.F_L0.phase_years - m.amplitudes.F_D0.phase_years;
        status[k] = 2;
      } else {
        status[k] = 1;
      }
    } catch (const std::exception&) {
      status[k] = 0;
    }
  });
  for (int k = 0; k < n; ++k) {
    if (status[k] == 2)
      sum.lags.push_back(lags[k]);
    else if (status[k] == 1)
      ++sum.non_oscillatory;
    else
      ++sum.nonviable;
  }
  if (!sum.lags.empty()) {
    sum.lag_min = *std::min_element(sum.lags.begin(), sum.lags.end());
    sum.lag_max = *std::max_element(sum.lags.begin(), sum.lags.end());
    double acc = 0.0;
    for (double v : sum.lags) acc += v;
    sum.lag_mean = acc / sum.lags.size();
  }
  return sum;
}

namespace {

struct OutcomeInfo {
  bool growth = false;
  double late_slope = 0.0;
};

OutcomeInfo classify_outcome(const IntegrationResult& run, double mu0_after) {
  const Trajectory& traj = run.traj;
  const double t_end = traj.times.back();
  std::vector<double> ts, ly;
  for (std::size_t i = 0; i < traj.size(); ++i)
    if (traj.times[i] >= t_end - 20.0) {
      ts.push_back(traj.times[i]);
      ly.push_back(std::log(std::abs(traj.states[i].B_C)));
    }
  auto [a, slope] = linfit(ts, ly);
  (void)a;
  OutcomeInfo o;
  o.late_slope = slope;
  const double lam_end = traj.states.back().lambda;
  if (run.has_event("collapse") && lam_end < 1e-3) {
    o.growth = false;
  } else {
    o.growth = slope > 0.01 && lam_end > 1e-3;
  }
  return o;
}

IntegrationResult continue_from(const ModelParams& p_after, double t_switch,
                                const std::vector<double>& y, double cst,
                                double horizon) {
  IntegrationConfig cfg;
  cfg.t_begin = t_switch;
  cfg.t_end = horizon;
  cfg.rel_tol = 1e-10;
  cfg.abs_tol = 1e-12;
  cfg.max_step = 0.5;
  cfg.blowup_norm = 1e18;
  return integrate(p_after, State::from_array(y.data()), cst, cfg);
}

}  // namespace

BranchResult branch_switch(const ModelParams& p_before,
                           const ModelParams& p_after, double t_switch,
                           const State& ic, double cst, double horizon) {
  if (t_switch < 0 || t_switch >= horizon)
    throw ModelError("branch_switch: t_switch must lie in [0, horizon)");
  std::vector<double> y(ic.to_array().begin(), ic.to_array().end());
  if (t_switch > 0) {
    IntegrationConfig cfg;
    cfg.t_end = t_switch;
    cfg.rel_tol = 1e-11;
    cfg.abs_tol = 1e-13;
    const IntegrationResult leg1 = integrate(p_before, ic, cst, cfg);
    if (leg1.terminated_early)
      throw NumericalError("branch_switch: first leg terminated early");
    leg1.dense.eval(t_switch, y.data());
  }
  BranchResult res;
  res.mu0_after = classify(p_after).mu0.real();
  res.run = continue_from(p_after, t_switch, y, cst, horizon);
  const OutcomeInfo o = classify_outcome(res.run, res.mu0_after);
  res.late_slope = o.late_slope;
  const bool slope_growth =
      std::abs(o.late_slope - res.mu0_after) <= 0.2 * std::abs(res.mu0_after);
  res.outcome = (!res.run.has_event("collapse") && slope_growth &&
                 res.run.traj.states.back().lambda > 1e-3)
                    ? BranchOutcome::Growth
                    : BranchOutcome::Collapse;
  return res;
}

SeparatrixResult separatrix_search(const ModelParams& p_before,
                                   const ModelParams& p_after, double t1,
                                   double t2, const State& ic, double cst,
                                   double horizon) {
  if (!(t2 > t1))
    throw ModelError("separatrix_search: bracket must have t1 < t2");
  IntegrationConfig cfg1;
  cfg1.t_end = t2 + 1e-6;
  cfg1.rel_tol = 1e-11;
  cfg1.abs_tol = 1e-13;
  const IntegrationResult leg1 = integrate(p_before, ic, cst, cfg1);
  if (leg1.terminated_early)
    throw NumericalError("separatrix_search: first leg terminated early");
  const double mu0_after = classify(p_after).mu0.real();

  std::vector<double> y(8);
  auto outcome = [&](double ts) {
    leg1.dense.eval(ts, y.data());
    const IntegrationResult run = continue_from(p_after, ts, y, cst, horizon);
    return classify_outcome(run, mu0_after).growth;
  };
  double lo = t1, hi = t2;
  const bool olo = outcome(lo);
  if (outcome(hi) == olo)
    throw ModelError(
        "separatrix_search: both bracket endpoints yield the same outcome");
  while (hi - lo > 1e-7) {
    const double mid = 0.5 * (lo + hi);
    if (outcome(mid) == olo)
      lo = mid;
    else
      hi = mid;
  }
  SeparatrixResult res;
  res.bracket_lo = lo;
  res.bracket_hi = hi;
  res.t_star = 0.5 * (lo + hi);

  // Near-critical run: the intermediate slope over the longest quasi-linear
  // span of ln B_C.
  leg1.dense.eval(res.t_star, y.data());
  const IntegrationResult run =
      continue_from(p_after, res.t_star, y, cst, horizon);
  const Trajectory& traj = run.traj;
  const double t_end = traj.times.back();
  const double w = 10.0, step = 5.0;
  std::vector<double> wt, ws;
  for (double t0 = res.t_star + 20.0; t0 + w <= t_end - 5.0; t0 += step) {
    std::vector<double> ts, ly;
    for (std::size_t i = 0; i < traj.size(); ++i)
      if (traj.times[i] >= t0 && traj.times[i] <= t0 + w) {
        ts.push_back(traj.times[i]);
        ly.push_back(std::log(std::abs(traj.states[i].B_C)));
      }
    if (ts.size() < 10) continue;
    auto [a, b] = linfit(ts, ly);
    (void)a;
    wt.push_back(t0);
    ws.push_back(b);
  }
  if (ws.size() < 3)
    throw NumericalError("separatrix_search: trajectory too short for the "
                         "slope analysis");
  std::size_t best_begin = 0, best_len = 1, cur_begin = 0, cur_len = 1;
  for (std::size_t i = 1; i < ws.size(); ++i) {
    if (std::abs(ws[i] - ws[i - 1]) < 0.002) {
      ++cur_len;
    } else {
      cur_begin = i;
      cur_len = 1;
    }
    if (cur_len > best_len) {
      best_len = cur_len;
      best_begin = cur_begin;
    }
  }
  res.span_begin = wt[best_begin];
  res.span_end = wt[best_begin + best_len - 1] + w;
  std::vector<double> ts, ly;
  for (std::size_t i = 0; i < traj.size(); ++i)
    if (traj.times[i] >= res.span_begin && traj.times[i] <= res.span_end) {
      ts.push_back(traj.times[i]);
      ly.push_back(std::log(std::abs(traj.states[i].B_C)));
    }
  auto [a, b] = linfit(ts, ly);
  (void)a;
  res.intermediate_slope = b;
  return res;
}

nlohmann::json exp_fit_to_json(const ExpFit& f) {
  return nlohmann::json{
      {"rate", {{"re", f.rate.real()}, {"im", f.rate.imag()}}},
      {"amplitude", f.amplitude},
      {"phase", f.phase},
      {"window", {f.window_begin, f.window_end}},
      {"residual", f.residual}};
}

nlohmann::json mc_ic_to_json(const McIcSummary& s) {
  return nlohmann::json{{"n", s.n},
                        {"seed", s.seed},
                        {"dt_shift", s.dt_shift},
                        {"excluded_runs", s.excluded_runs},
                        {"mean_shift", s.mean_shift},
                        {"sd_shift", s.sd_shift}};
}

nlohmann::json mc_params_to_json(const McParamsSummary& s) {
  return nlohmann::json{{"n", s.n},
                        {"seed", s.seed},
                        {"lags", s.lags},
                        {"nonviable", s.nonviable},
                        {"non_oscillatory", s.non_oscillatory},
                        {"lag_min", s.lag_min},
                        {"lag_max", s.lag_max},
                        {"lag_mean", s.lag_mean}};
}

}  // namespace keen
