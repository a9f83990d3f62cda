#include "keen/integrate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace keen {

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                 a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                 b5 = -2187.0 / 6784, b6 = 11.0 / 84;
// Error coefficients (b - bhat).
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5= -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
// Continuous-extension coefficients.
constexpr double d1 = -12715105075.0 / 11282082432.0,
                 d3 = 87487479700.0 / 32700410799.0,
                 d4 = -10690763975.0 / 1880347072.0,
                 d5 = 701980252875.0 / 199316789632.0,
                 d6 = -1453857185.0 / 822651844.0,
                 d7 = 69997945.0 / 29380423.0;

double seg_eval(const DenseSegment& s, double t, int i) {
  const double th = (t - s.t0) / s.h;
  const double th1 = 1.0 - th;
  return s.r1[i] +
         th * (s.r2[i] + th1 * (s.r3[i] + th * (s.r4[i] + th1 * s.r5[i])));
}

}  // namespace

void IntegrationConfig::validate() const {
  if (rel_tol <= 0 || abs_tol <= 0)
    throw ModelError("IntegrationConfig: tolerances must be positive");
  if (!(t_end > t_begin))
    throw ModelError("IntegrationConfig: t_span must be increasing");
  if (sample_dt <= 0 || max_step <= 0)
    throw ModelError("IntegrationConfig: sample_dt and max_step must be positive");
}

void DenseOutput::eval(double t, double* out) const {
  if (segments.empty()) throw NumericalError("DenseOutput: empty");
  auto it = std::upper_bound(
      segments.begin(), segments.end(), t,
      [](double v, const DenseSegment& s) { return v < s.t0; });
  const DenseSegment& s = (it == segments.begin()) ? *it : *(it - 1);
  for (int i = 0; i < dim; ++i) out[i] = seg_eval(s, t, i);
}

double DenseOutput::eval1(double t, int comp) const {
  std::vector<double> buf(dim);
  eval(t, buf.data());
  return buf[comp];
}

double DenseOutput::t_front() const { return segments.front().t0; }
double DenseOutput::t_back() const {
  const auto& s = segments.back();
  return s.t0 + s.h;
}

bool IntegrationResult::has_event(const std::string& kind) const {
  for (const auto& e : events)
    if (e.kind == kind) return true;
  return false;
}

double IntegrationResult::event_time(const std::string& kind) const {
  for (const auto& e : events)
    if (e.kind == kind) return e.t;
  throw NumericalError("no event of kind " + kind);
}

IntegrationResult integrate_generic(
    const std::function<void(double, const double*, double*)>& f, int dim,
    const std::vector<double>& y0, const IntegrationConfig& cfg,
    const std::function<double(double, const double*)>& collapse_indicator) {
  cfg.validate();
  const int n = dim;
  std::vector<double> y = y0, ynew(n), err_v(n);
  std::vector<std::vector<double>> k(7, std::vector<double>(n));
  double t = cfg.t_begin;
  double h = std::min(cfg.max_step, 1e-2);
  double facold = 1e-4;
  constexpr double safe = 0.9, fmin = 0.2, fmax = 10.0;
  constexpr double expo1 = 0.17, beta_pi = 0.04;

  IntegrationResult res;
  res.dense.dim = n;
  auto sample_state = [&](double ts, const double* ys) {
    res.traj.times.push_back(ts);
    res.traj.states.push_back(State::from_array(ys));
  };
  long next_sample = 0;
  auto sample_tt = [&](long m) { return cfg.t_begin + m * cfg.sample_dt; };
  sample_state(t, y.data());
  ++next_sample;

  f(t, y.data(), k[0].data());

  // Collapse bookkeeping: candidate crossing awaiting its persistence check.
  bool collapse_armed = static_cast<bool>(collapse_indicator);
  bool collapse_pending = false;
  double collapse_tc = 0.0;
  double prev_ind = collapse_armed ? collapse_indicator(t, y.data()) : 0.0;

  std::vector<double> buf(n);
  auto dense_ind = [&](double tt) {
    res.dense.eval(tt, buf.data());
    return collapse_indicator(tt, buf.data());
  };
  auto dense_maxabs = [&](double tt) {
    res.dense.eval(tt, buf.data());
    double m = 0.0;
    for (int i = 0; i < n; ++i) m = std::max(m, std::abs(buf[i]));
    return m;
  };

  const double t_eps = 1e-14 * std::max(1.0, std::abs(cfg.t_end));
  while (t < cfg.t_end - t_eps) {
    if (h < 1e-12) {
      std::ostringstream os;
      os << "integrate: step size underflow at t=" << t << " state=[";
      for (int i = 0; i < n; ++i) os << (i ? "," : "") << y[i];
      os << "]";
      throw NumericalError(os.str());
    }
    if (t + h > cfg.t_end) h = cfg.t_end - t;

    auto stage = [&](int s, double cs, const double* coef, int ns) {
      for (int i = 0; i < n; ++i) {
        double acc = y[i];
        for (int j = 0; j < ns; ++j) acc += h * coef[j] * k[j][i];
        ynew[i] = acc;
      }
      f(t + cs * h, ynew.data(), k[s].data());
    };
    {
      const double w2[] = {a21};
      const double w3[] = {a31, a32};
      const double w4[] = {a41, a42, a43};
      const double w5[] = {a51, a52, a53, a54};
      const double w6[] = {a61, a62, a63, a64, a65};
      stage(1, c2, w2, 1);
      stage(2, c3, w3, 2);
      stage(3, c4, w4, 3);
      stage(4, c5, w5, 4);
      stage(5, 1.0, w6, 5);
    }
    for (int i = 0; i < n; ++i)
      ynew[i] = y[i] + h * (b1 * k[0][i] + b3 * k[2][i] + b4 * k[3][i] +
                            b5 * k[4][i] + b6 * k[5][i]);
    f(t + h, ynew.data(), k[6].data());
    double err = 0.0;
    for (int i = 0; i < n; ++i) {
      const double e = h * (e1 * k[0][i] + e3 * k[2][i] + e4 * k[3][i] +
                            e5 * k[4][i] + e6 * k[5][i] + e7 * k[6][i]);
      const double sc =
          cfg.abs_tol +
          cfg.rel_tol * std::max(std::abs(y[i]), std::abs(ynew[i]));
      err += (e / sc) * (e / sc);
    }
    err = std::sqrt(err / n);
    if (!std::isfinite(err)) err = 2.0;

    if (err > 1.0) {  // rejected
      h *= std::clamp(safe * std::pow(err, -0.2), 0.1, 1.0);
      continue;
    }

    // Accepted: store the continuous extension for this step.
    DenseSegment seg;
    seg.t0 = t;
    seg.h = h;
    seg.r1.resize(n);
    seg.r2.resize(n);
    seg.r3.resize(n);
    seg.r4.resize(n);
    seg.r5.resize(n);
    for (int i = 0; i < n; ++i) {
      const double dy = ynew[i] - y[i];
      seg.r1[i] = y[i];
      seg.r2[i] = dy;
      seg.r3[i] = h * k[0][i] - dy;
      seg.r4[i] = dy - h * k[6][i] - seg.r3[i];
      seg.r5[i] = h * (d1 * k[0][i] + d3 * k[2][i] + d4 * k[3][i] +
                       d5 * k[4][i] + d6 * k[5][i] + d7 * k[6][i]);
    }
    res.dense.segments.push_back(std::move(seg));
    const double tnew = t + h;

    // Blowup check, localized by bisection on the dense output.
    double mx = 0.0;
    for (int i = 0; i < n; ++i) mx = std::max(mx, std::abs(ynew[i]));
    if (mx > cfg.blowup_norm) {
      double lo = t, hi = tnew;
      while (hi - lo > 1e-8)
        (dense_maxabs(0.5 * (lo + hi)) > cfg.blowup_norm ? hi : lo) =
            0.5 * (lo + hi);
      const double tb = 0.5 * (lo + hi);
      while (sample_tt(next_sample) <= tb) {
        res.dense.eval(sample_tt(next_sample), buf.data());
        sample_state(sample_tt(next_sample), buf.data());
        ++next_sample;
      }
      res.events.push_back({"blowup", tb});
      res.terminated_early = true;
      break;
    }

    while (sample_tt(next_sample) <= tnew + t_eps &&
           sample_tt(next_sample) <= cfg.t_end + t_eps) {
      const double ts = std::min(sample_tt(next_sample), tnew);
      res.dense.eval(ts, buf.data());
      sample_state(ts, buf.data());
      ++next_sample;
    }

    if (collapse_armed) {
      const double ind = collapse_indicator(tnew, ynew.data());
      if (!collapse_pending && prev_ind >= 0.0 && ind < 0.0) {
        double lo = t, hi = tnew;
        while (hi - lo > 1e-8)
          (dense_ind(0.5 * (lo + hi)) < 0.0 ? hi : lo) = 0.5 * (lo + hi);
        collapse_tc = 0.5 * (lo + hi);
        collapse_pending = true;
      }
      if (collapse_pending && tnew >= collapse_tc + cfg.collapse_persist) {
        bool decreasing = true;
        const int m = 21;
        double prev = dense_ind(collapse_tc);
        for (int q = 1; q < m && decreasing; ++q) {
          const double tt =
              collapse_tc + q * cfg.collapse_persist / (m - 1);
          const double v = dense_ind(tt);
          if (v > prev + 1e-12 * std::max(1.0, std::abs(prev)))
            decreasing = false;
          prev = v;
        }
        if (decreasing) {
          res.events.push_back({"collapse", collapse_tc});
          collapse_armed = false;  // record the first confirmed onset only
        }
        collapse_pending = false;
      }
      prev_ind = ind;
    }

    t = tnew;
    std::swap(y, ynew);
    std::swap(k[0], k[6]);  // FSAL

    double fac = safe * std::pow(err, -expo1) * std::pow(facold, beta_pi);
    fac = std::clamp(fac, fmin, fmax);
    h = std::min(h * fac, cfg.max_step);
    facold = std::max(err, 1e-4);
  }
  return res;
}

IntegrationResult integrate(const ModelParams& p, const State& ic, double cst,
                            const IntegrationConfig& cfg) {
  p.validate();
  if (!ic.finite()) throw ModelError("integrate: non-finite initial state");
  const int dim = cfg.nine_state ? 9 : 8;
  std::vector<double> y0(ic.to_array().begin(), ic.to_array().end());
  y0.resize(dim);
  if (cfg.nine_state) y0[8] = reconstruct_wd(ic, cst);

  std::function<void(double, const double*, double*)> f;
  if (!cfg.nine_state) {
    f = [&p, cst](double t, const double* y, double* dy) {
      const State st = State::from_array(y);
      const State d = rhs(t, st, p, cst);
      auto a = d.to_array();
      std::copy(a.begin(), a.end(), dy);
    };
  } else {
    f = [&p](double t, const double* y, double* dy) {
      const State st = State::from_array(y);
      const double wd = y[8];
      // Reconstruct the constant that makes the identity produce wd, so the
      // eight equations consume the explicitly integrated deposits.
      const double cst_eff = st.F_L - st.F_D - st.B_PL - wd;
      const State d = rhs(t, st, p, cst_eff);
      auto a = d.to_array();
      std::copy(a.begin(), a.end(), dy);
      const double av = p.growth.a(t);
      dy[8] = p.r_D * wd - wd / p.tau_W + st.W * (st.K_r / p.v) / av;
    };
  }

  auto indicator = [&p, cst, &cfg](double t, const double* y) {
    const State st = State::from_array(y);
    return profit_rate(st, t, p) - cfg.collapse_pi_threshold;
  };

  IntegrationResult res = integrate_generic(f, dim, y0, cfg, indicator);
  res.traj.cst = cst;
  res.traj.params = p;
  res.traj.derived.reserve(res.traj.times.size());
  for (std::size_t i = 0; i < res.traj.times.size(); ++i)
    res.traj.derived.push_back(derived_quantities(
        res.traj.states[i], res.traj.times[i], p, cst));
  if (cfg.nine_state) {
    double drift = 0.0;
    // Samples carry only the eight model fields; re-evaluate W_D from the
    // dense output to compare against the identity.
    std::vector<double> buf(9);
    for (double tt : res.traj.times) {
      res.dense.eval(tt, buf.data());
      const State st = State::from_array(buf.data());
      drift = std::max(drift,
                       std::abs(st.F_L - st.F_D - st.B_PL - buf[8] - cst));
    }
    res.conservation_drift = drift;
  }
  return res;
}

std::string trajectory_csv(const Trajectory& traj) {
  std::string out = "t,B_C,B_PL,F_L,F_D,W_D,W,P_C,K_r,lambda,pi_r,g\n";
  char buf[64];
  auto put = [&](double v, char sep) {
    std::snprintf(buf, sizeof buf, "%.17g%c", v, sep);
    out += buf;
  };
  for (std::size_t i = 0; i < traj.times.size(); ++i) {
    const State& s = traj.states[i];
    const Derived& d = traj.derived[i];
    put(traj.times[i], ',');
    put(s.B_C, ',');
    put(s.B_PL, ',');
    put(s.F_L, ',');
    put(s.F_D, ',');
    put(d.W_D, ',');
    put(s.W, ',');
    put(s.P_C, ',');
    put(s.K_r, ',');
    put(s.lambda, ',');
    put(d.pi_r, ',');
    put(d.g, '\n');
  }
  return out;
}

Trajectory trajectory_from_csv(const std::string& csv, const ModelParams& p,
                               double cst) {
  Trajectory traj;
  traj.params = p;
  traj.cst = cst;
  std::istringstream is(csv);
  std::string line;
  if (!std::getline(is, line)) throw ModelError("empty CSV");
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::vector<double> vals;
    std::string tok;
    while (std::getline(ls, tok, ',')) vals.push_back(std::stod(tok));
    if (vals.size() != 12) throw ModelError("CSV row has wrong column count");
    traj.times.push_back(vals[0]);
    State s{vals[1], vals[2], vals[3], vals[4], vals[6],
            vals[7], vals[8], vals[9]};
    traj.states.push_back(s);
    traj.derived.push_back(
        derived_quantities(s, vals[0], p, cst));
  }
  return traj;
}

}  // namespace keen
