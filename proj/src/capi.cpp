// C API: opaque handle holding a model configuration, string-in/string-out
// operations returning JSON, error codes 0/1/2.

#include "keen/keen.h"

#include <cmath>
#include <complex>
#include <cstring>
#include <new>
#include <sstream>
#include <string>

#include <json.hpp>

#include "keen/collapse.hpp"
#include "keen/experiments.hpp"
#include "keen/integrate.hpp"
#include "keen/leading.hpp"
#include "keen/modal.hpp"
#include "keen/model.hpp"
#include "keen/scans.hpp"
#include "keen/svg.hpp"

using nlohmann::json;
using namespace keen;

namespace {

constexpr const char* kVersion = "1.0.0";

struct Handle {
  ModelParams params;
  State ic = State::table2();
  double cst = 12.0;  // F_L - F_D - B_PL - W_D at t=0
  json config;        // full parsed config (for per-command blocks)
  bool config_ok = false;
  std::string config_error;
  std::string last_error;
};

const std::vector<std::string>& op_names() {
  static const std::vector<std::string> ops = {
      "simulate",   "classify",  "quintic",       "amplitudes", "modes",
      "collapse-fit", "sweep1d", "regime2d",      "mc-ic",      "mc-params",
      "branch-switch", "separatrix", "ratio"};
  return ops;
}

void load_config(Handle& h, const char* config_json) {
  json j = json::object();
  if (config_json && *config_json) {
    j = json::parse(config_json);  // throws on malformed input
    if (!j.is_object()) throw ModelError("config: top level must be an object");
  }
  std::vector<std::string> extra = op_names();
  extra.push_back("ic");
  extra.push_back("W_D0");
  h.params = params_from_json(j, extra);
  h.ic = State::table2();
  double wd0 = 13.0;
  if (j.contains("W_D0")) wd0 = j.at("W_D0").get<double>();
  if (j.contains("ic")) {
    const json& ji = j.at("ic");
    if (ji.is_array()) {
      if (ji.size() != 8)
        throw ModelError("config: ic array must have 8 entries");
      double y[8];
      for (int k = 0; k < 8; ++k) y[k] = ji[k].get<double>();
      h.ic = State::from_array(y);
    } else if (ji.is_object()) {
      static const std::vector<std::string> names = {
          "B_C", "B_PL", "F_L", "F_D", "W", "P_C", "K_r", "lambda"};
      auto a = h.ic.to_array();
      for (auto it = ji.begin(); it != ji.end(); ++it) {
        auto pos = std::find(names.begin(), names.end(), it.key());
        if (pos == names.end())
          throw ModelError("config: unknown key ic." + it.key());
        a[pos - names.begin()] = it.value().get<double>();
      }
      h.ic = State::from_array(a.data());
    } else {
      throw ModelError("config: ic must be an array or object");
    }
  }
  h.cst = h.ic.F_L - h.ic.F_D - h.ic.B_PL - wd0;
  h.config = j;
  h.config_ok = true;
}

// Request keys not in `allowed` are an error, mirroring the config policy.
void check_keys(const json& req, const std::vector<std::string>& allowed,
                const std::string& op) {
  if (!req.is_object())
    throw ModelError(op + ": request must be a JSON object");
  std::ostringstream bad;
  bool any = false;
  for (auto it = req.begin(); it != req.end(); ++it) {
    if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end()) {
      bad << " " << it.key();
      any = true;
    }
  }
  if (any) throw ModelError(op + ": unknown request keys:" + bad.str());
}

double get_or(const json& req, const char* key, double dflt) {
  return req.contains(key) ? req.at(key).get<double>() : dflt;
}
int get_or_int(const json& req, const char* key, int dflt) {
  return req.contains(key) ? req.at(key).get<int>() : dflt;
}
bool get_or_bool(const json& req, const char* key, bool dflt) {
  return req.contains(key) ? req.at(key).get<bool>() : dflt;
}
std::string get_or_str(const json& req, const char* key, const char* dflt) {
  return req.contains(key) ? req.at(key).get<std::string>()
                           : std::string(dflt);
}
std::pair<double, double> get_window(const json& req, const char* key,
                                     double lo, double hi) {
  if (!req.contains(key)) return {lo, hi};
  const json& w = req.at(key);
  if (!w.is_array() || w.size() != 2)
    throw ModelError(std::string("request: ") + key +
                     " must be a [begin, end] array");
  return {w[0].get<double>(), w[1].get<double>()};
}

json events_to_json(const IntegrationResult& r) {
  json ev = json::array();
  for (const auto& e : r.events) ev.push_back({{"kind", e.kind}, {"t", e.t}});
  return ev;
}

json op_simulate(Handle& h, const json& req) {
  check_keys(req,
             {"t_begin", "t_end", "rel_tol", "abs_tol", "max_step",
              "sample_dt", "blowup_norm", "nine_state", "plot"},
             "simulate");
  IntegrationConfig cfg;
  cfg.t_begin = get_or(req, "t_begin", 0.0);
  cfg.t_end = get_or(req, "t_end", 150.0);
  cfg.rel_tol = get_or(req, "rel_tol", cfg.rel_tol);
  cfg.abs_tol = get_or(req, "abs_tol", cfg.abs_tol);
  cfg.max_step = get_or(req, "max_step", cfg.max_step);
  cfg.sample_dt = get_or(req, "sample_dt", cfg.sample_dt);
  cfg.blowup_norm = get_or(req, "blowup_norm", cfg.blowup_norm);
  cfg.nine_state = get_or_bool(req, "nine_state", false);
  IntegrationResult r = integrate(h.params, h.ic, h.cst, cfg);
  json out{{"csv", trajectory_csv(r.traj)},
           {"events", events_to_json(r)},
           {"terminated_early", r.terminated_early},
           {"conservation_drift", r.conservation_drift},
           {"n_samples", r.traj.size()}};
  if (get_or_bool(req, "plot", false)) {
    SvgSeries pi{"pi_r", r.traj.times, {}};
    SvgSeries lm{"lambda", r.traj.times, {}};
    for (const auto& d : r.traj.derived) pi.y.push_back(d.pi_r);
    for (const auto& st : r.traj.states) lm.y.push_back(st.lambda);
    out["svg"] = svg_line_chart({pi, lm}, "profit rate and employment", "t",
                                "value");
  }
  return out;
}

json op_classify(Handle& h, const json& req) {
  check_keys(req, {}, "classify");
  return leading_mode_to_json(classify(h.params));
}

json op_quintic(Handle& h, const json& req) {
  check_keys(req, {}, "quintic");
  Quintic q = char_quintic(h.params);
  auto roots = poly_roots(q.coeffs_complex());
  json jr = json::array();
  for (const auto& r : roots) jr.push_back({{"re", r.real()}, {"im", r.imag()}});
  return json{{"coefficients", q.c},
              {"node_residual", q.node_residual},
              {"roots", jr}};
}

json op_amplitudes(Handle& h, const json& req) {
  check_keys(req, {}, "amplitudes");
  LeadingMode m = classify(h.params);
  const AmplitudeTable& t = m.amplitudes;
  json fields = json::array();
  auto names = t.field_names();
  auto ptrs = t.fields();
  for (std::size_t k = 0; k < ptrs.size(); ++k) {
    fields.push_back({{"name", names[k]},
                      {"re", ptrs[k]->coef.real()},
                      {"im", ptrs[k]->coef.imag()},
                      {"amp", ptrs[k]->amp},
                      {"phase_years", ptrs[k]->phase_years}});
  }
  json out{{"mu0", {{"re", t.mu0.real()}, {"im", t.mu0.imag()}}},
           {"dropped_row", t.dropped_row},
           {"dropped_residual", t.dropped_residual},
           {"realizable", t.realizable},
           {"fields", fields},
           {"T", std::isfinite(m.T) ? json(m.T) : json()},
           {"T_star", std::isfinite(m.T_star) ? json(m.T_star) : json()}};
  try {
    cplx w0 = wage_coefficient_closed_form(t.mu0, h.params);
    out["w0_closed_form"] = {{"re", w0.real()}, {"im", w0.imag()}};
  } catch (const ModelError&) {
    out["w0_closed_form"] = nullptr;  // non-standard shapes
  }
  return out;
}

json op_modes(Handle& h, const json& req) {
  check_keys(req, {"fit", "window"}, "modes");
  ModeSpectrum sp = mode_spectrum(h.params);
  json out = mode_spectrum_to_json(sp);
  if (get_or_bool(req, "fit", true)) {
    auto [w0, w1] = get_window(req, "window", 60.0, 90.0);
    IntegrationConfig cfg;
    cfg.t_end = w1 + 1.0;
    cfg.blowup_norm = 1e18;
    IntegrationResult r = integrate(h.params, h.ic, h.cst, cfg);
    TransientFit f = fit_transients(r.traj, sp.mu0, sp, w0, w1);
    out["transient_fit"] = {{"pi_r1", f.pi_r1},
                            {"pi_r2_mod", f.pi_r2_mod},
                            {"pi_r2_phase", f.pi_r2_phase},
                            {"window", {f.window_begin, f.window_end}}};
  }
  return out;
}

// Rebuild an integration result from a stored trajectory CSV: the collapse
// event is recovered by linear interpolation of the sampled profit rate
// through the threshold.
IntegrationResult result_from_csv(const Handle& h, const std::string& csv) {
  IntegrationResult r;
  r.traj = trajectory_from_csv(csv, h.params, h.cst);
  const double thr = -1.0;
  for (std::size_t k = 1; k < r.traj.size(); ++k) {
    const double a = r.traj.derived[k - 1].pi_r, b = r.traj.derived[k].pi_r;
    if (a >= thr && b < thr) {
      const double f = (a - thr) / (a - b);
      r.events.push_back(
          {"collapse",
           r.traj.times[k - 1] + f * (r.traj.times[k] - r.traj.times[k - 1])});
      break;
    }
  }
  return r;
}

json op_collapse_fit(Handle& h, const json& req) {
  check_keys(req, {"t_end", "window", "fit_window", "rel_tol", "csv"},
             "collapse-fit");
  const double t_end = get_or(req, "t_end", 400.0);
  auto [w0, w1] = get_window(req, "window", 250.0, 350.0);
  auto [f0, f1] = get_window(req, "fit_window", 60.0, 90.0);
  IntegrationResult r;
  if (req.contains("csv")) {
    r = result_from_csv(h, req.at("csv").get<std::string>());
  } else {
    IntegrationConfig cfg;
    cfg.t_end = t_end;
    cfg.rel_tol = get_or(req, "rel_tol", 1e-9);
    r = integrate(h.params, h.ic, h.cst, cfg);
  }
  LeadingMode mode = classify(h.params);
  CollapseFit fit = fit_collapse(r, h.params, w0, w1);
  json out;
  // Transition detection needs a long pre-collapse growth phase (near-critical
  // runs); report nulls when there is none instead of failing the fit.
  try {
    TransitionInfo tr = transition_detect(r, mode, f0, f1);
    fit.onset_t = tr.onset_t;
    fit.transient_rate = tr.transient_rate;
    out = collapse_fit_to_json(fit);
    out["departure_t"] = tr.departure_t;
  } catch (const std::exception&) {
    out = collapse_fit_to_json(fit);
    out["onset_t"] = nullptr;
    out["transient_rate"] = nullptr;
    out["departure_t"] = nullptr;
  }
  out["collapse_event_t"] =
      r.has_event("collapse") ? json(r.event_time("collapse")) : json();
  SaturationLimits sat = saturation_limits(h.params);
  out["saturation"] = {{"inv_sat", sat.inv_sat},
                       {"tau_rl_sat", sat.tau_rl_sat},
                       {"ph_sat", sat.ph_sat},
                       {"g_sat", sat.g_sat}};
  out["bp0_predicted"] = bp0_predicted(h.params, h.cst);
  return out;
}

json op_sweep1d(Handle& h, const json& req) {
  check_keys(req, {"param", "n", "lo_factor", "hi_factor", "refine", "plot"},
             "sweep1d");
  if (!req.contains("param"))
    throw ModelError("sweep1d: request key 'param' is required");
  const std::string name = req.at("param").get<std::string>();
  SweepResult r =
      sweep_1d(h.params, name, get_or_int(req, "n", 33),
               get_or(req, "lo_factor", 0.25), get_or(req, "hi_factor", 4.0));
  json out = sweep_to_json(r);
  if (get_or_bool(req, "refine", true)) {
    json refined = json::array();
    for (const auto& [lo, hi] : r.im_bifurcations) {
      try {
        refined.push_back(find_bifurcation(h.params, name, lo, hi));
      } catch (const std::exception&) {
        // leave unrefinable brackets out; the bracket list still reports them
      }
    }
    out["im_bifurcations_refined"] = refined;
  }
  if (get_or_bool(req, "plot", false)) {
    SvgSeries re{"Re mu0", {}, {}}, im{"Im mu0", {}, {}};
    for (const auto& pt : r.points) {
      if (!pt.ok) continue;
      re.x.push_back(pt.value);
      re.y.push_back(pt.mu0.real());
      im.x.push_back(pt.value);
      im.y.push_back(pt.mu0.imag());
    }
    out["svg"] = svg_line_chart({re, im}, "dominant root vs " + name, name,
                                "mu0");
  }
  return out;
}

json op_regime2d(Handle& h, const json& req) {
  check_keys(req, {"s_lo", "s_hi", "v_lo", "v_hi", "ns", "nv", "jobs", "plot"},
             "regime2d");
  RegimeGrid g = regime_grid(
      h.params, get_or(req, "s_lo", 0.20), get_or(req, "s_hi", 0.40),
      get_or(req, "v_lo", 2.0), get_or(req, "v_hi", 4.0),
      get_or_int(req, "ns", 25), get_or_int(req, "nv", 25),
      get_or_int(req, "jobs", 0));
  json out{{"csv", regime_grid_csv(g)}, {"ns", g.ns}, {"nv", g.nv}};
  if (get_or_bool(req, "plot", false))
    out["svg"] = svg_regime_map(g, "regime diagram (s, v)");
  return out;
}

json op_mc_ic(Handle& h, const json& req) {
  check_keys(req, {"sigma", "n", "seed", "jobs"}, "mc-ic");
  McIcSummary s = monte_carlo_ic(
      h.params, get_or(req, "sigma", 0.01), get_or_int(req, "n", 100),
      req.contains("seed") ? req.at("seed").get<unsigned long long>() : 0ULL,
      get_or_int(req, "jobs", 0));
  json out = mc_ic_to_json(s);
  std::ostringstream csv;
  csv << "run,dt_shift\n";
  std::size_t idx = 0;
  for (int run = 0; run < s.n; ++run) {
    if (std::find(s.excluded_runs.begin(), s.excluded_runs.end(), run) !=
        s.excluded_runs.end())
      continue;
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%d,%.17g\n", run, s.dt_shift[idx++]);
    csv << buf;
  }
  out["csv"] = csv.str();
  return out;
}

json op_mc_params(Handle& h, const json& req) {
  check_keys(req, {"sigma", "n", "seed", "jobs"}, "mc-params");
  McParamsSummary s = monte_carlo_params(
      h.params, get_or(req, "sigma", 0.10), get_or_int(req, "n", 100),
      req.contains("seed") ? req.at("seed").get<unsigned long long>() : 0ULL,
      get_or_int(req, "jobs", 0));
  json out = mc_params_to_json(s);
  std::ostringstream csv;
  csv << "sample,lag\n";
  for (std::size_t k = 0; k < s.lags.size(); ++k) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%zu,%.17g\n", k, s.lags[k]);
    csv << buf;
  }
  out["csv"] = csv.str();
  return out;
}

std::pair<ModelParams, ModelParams> switch_params(const Handle& h,
                                                  const json& req,
                                                  const char* op) {
  if (!req.contains("param") || !req.contains("before") ||
      !req.contains("after"))
    throw ModelError(std::string(op) +
                     ": request keys 'param', 'before', 'after' are required");
  const std::string name = req.at("param").get<std::string>();
  ModelParams before = h.params, after = h.params;
  set_param(before, name, req.at("before").get<double>());
  set_param(after, name, req.at("after").get<double>());
  before.validate();
  after.validate();
  return {before, after};
}

json op_branch_switch(Handle& h, const json& req) {
  check_keys(req, {"param", "before", "after", "t_switch", "horizon"},
             "branch-switch");
  if (!req.contains("t_switch"))
    throw ModelError("branch-switch: request key 't_switch' is required");
  auto [before, after] = switch_params(h, req, "branch-switch");
  BranchResult r =
      branch_switch(before, after, req.at("t_switch").get<double>(), h.ic,
                    h.cst, get_or(req, "horizon", 420.0));
  return json{
      {"outcome", r.outcome == BranchOutcome::Growth ? "growth" : "collapse"},
      {"late_slope", r.late_slope},
      {"mu0_after", r.mu0_after},
      {"t_switch", req.at("t_switch").get<double>()},
      {"events", events_to_json(r.run)}};
}

json op_separatrix(Handle& h, const json& req) {
  check_keys(req, {"param", "before", "after", "t1", "t2", "horizon"},
             "separatrix");
  if (!req.contains("t1") || !req.contains("t2"))
    throw ModelError("separatrix: request keys 't1', 't2' are required");
  auto [before, after] = switch_params(h, req, "separatrix");
  SeparatrixResult r = separatrix_search(
      before, after, req.at("t1").get<double>(), req.at("t2").get<double>(),
      h.ic, h.cst, get_or(req, "horizon", 420.0));
  return json{{"t_star", r.t_star},
              {"bracket", {r.bracket_lo, r.bracket_hi}},
              {"intermediate_slope", r.intermediate_slope},
              {"span", {r.span_begin, r.span_end}}};
}

json op_ratio(Handle& h, const json& req) {
  check_keys(req,
             {"numerator", "denominator", "window", "t_end", "phase_adjust",
              "plot", "csv"},
             "ratio");
  const std::string num = get_or_str(req, "numerator", "F_L");
  const std::string den = get_or_str(req, "denominator", "F_D");
  auto [w0, w1] = get_window(req, "window", 60.0, 100.0);
  LeadingMode mode = classify(h.params);
  IntegrationResult r;
  if (req.contains("csv")) {
    r = result_from_csv(h, req.at("csv").get<std::string>());
  } else {
    IntegrationConfig cfg;
    cfg.t_end = get_or(req, "t_end", w1 + 5.0);
    cfg.blowup_norm = 1e18;
    r = integrate(h.params, h.ic, h.cst, cfg);
  }
  RatioSeries rs =
      ratio_diagnostic(r.traj, mode.amplitudes, num, den, w0, w1,
                       get_or_bool(req, "phase_adjust", true));
  double max_dev = 0.0;
  for (double v : rs.ratio) max_dev = std::max(max_dev, std::abs(v - 1.0));
  std::ostringstream csv;
  csv << "t,ratio\n";
  for (std::size_t k = 0; k < rs.times.size(); ++k) {
    char buf[80];
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g\n", rs.times[k], rs.ratio[k]);
    csv << buf;
  }
  json out{{"lag", rs.lag},
           {"max_dev", max_dev},
           {"numerator", num},
           {"denominator", den},
           {"csv", csv.str()}};
  if (get_or_bool(req, "plot", false))
    out["svg"] = svg_line_chart({{num + "/" + den, rs.times, rs.ratio}},
                                "normalized lagged ratio", "t", "ratio");
  return out;
}

json dispatch(Handle& h, const std::string& op, const json& req) {
  if (op == "simulate") return op_simulate(h, req);
  if (op == "classify") return op_classify(h, req);
  if (op == "quintic") return op_quintic(h, req);
  if (op == "amplitudes") return op_amplitudes(h, req);
  if (op == "modes") return op_modes(h, req);
  if (op == "collapse-fit") return op_collapse_fit(h, req);
  if (op == "sweep1d") return op_sweep1d(h, req);
  if (op == "regime2d") return op_regime2d(h, req);
  if (op == "mc-ic") return op_mc_ic(h, req);
  if (op == "mc-params") return op_mc_params(h, req);
  if (op == "branch-switch") return op_branch_switch(h, req);
  if (op == "separatrix") return op_separatrix(h, req);
  if (op == "ratio") return op_ratio(h, req);
  throw ModelError("unknown operation: " + op);
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out) std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

}  // namespace

extern "C" {

keen_handle* keen_create(const char* config_json) {
  Handle* h = new (std::nothrow) Handle();
  if (!h) return nullptr;
  try {
    load_config(*h, config_json);
  } catch (const std::exception& e) {
    h->config_ok = false;
    h->config_error = e.what();
    h->last_error = e.what();
  }
  return reinterpret_cast<keen_handle*>(h);
}

void keen_destroy(keen_handle* h) { delete reinterpret_cast<Handle*>(h); }

const char* keen_last_error(const keen_handle* h) {
  if (!h) return "null handle";
  return reinterpret_cast<const Handle*>(h)->last_error.c_str();
}

int keen_run(keen_handle* hh, const char* op, const char* request_json,
             char** out) {
  if (out) *out = nullptr;
  if (!hh) return KEEN_ERR_USAGE;
  Handle& h = *reinterpret_cast<Handle*>(hh);
  if (!op || !out) {
    h.last_error = "keen_run: op and out must be non-null";
    return KEEN_ERR_USAGE;
  }
  if (!h.config_ok) {
    h.last_error = h.config_error;
    return KEEN_ERR_USAGE;
  }
  try {
    json req = json::object();
    if (request_json && *request_json) {
      req = json::parse(request_json);
      if (!req.is_object())
        throw ModelError("request: top level must be an object");
    }
    json resp = dispatch(h, op, req);
    *out = dup_string(resp.dump());
    if (!*out) {
      h.last_error = "out of memory";
      return KEEN_ERR_NUMERICAL;
    }
    h.last_error.clear();
    return KEEN_OK;
  } catch (const ModelError& e) {
    h.last_error = e.what();
    return KEEN_ERR_USAGE;
  } catch (const json::exception& e) {
    h.last_error = std::string("request: ") + e.what();
    return KEEN_ERR_USAGE;
  } catch (const std::exception& e) {
    h.last_error = e.what();
    return KEEN_ERR_NUMERICAL;
  }
}

void keen_string_free(char* s) { std::free(s); }

const char* keen_version(void) { return kVersion; }

}  // extern "C"
