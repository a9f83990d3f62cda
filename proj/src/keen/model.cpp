#include "keen/model.hpp"

#include <algorithm>
#include <limits>
#include <sstream>

namespace keen {

double gen_exp(double x, const GenExpParams& p) {
  if (!std::isfinite(x)) throw ModelError("gen_exp: non-finite argument");
  if (p.y_nu == p.floor) throw ModelError("gen_exp: y_nu equals floor");
  double e = p.slope * (x - p.x_nu) / (p.y_nu - p.floor);
  e = std::clamp(e, -700.0, 700.0);
  return (p.y_nu - p.floor) * std::exp(e) + p.floor;
}

double gen_exp_limit_neg(const GenExpParams& p) {
  if (p.y_nu == p.floor) throw ModelError("gen_exp: y_nu equals floor");
  if (p.slope / (p.y_nu - p.floor) > 0.0) return p.floor;
  return p.y_nu > p.floor ? std::numeric_limits<double>::infinity()
                          : -std::numeric_limits<double>::infinity();
}

double GrowthModel::a(double t) const {
  if (variant == GrowthVariant::Exponential) return a0 * std::exp(alpha * t);
  return a0 * std::pow(t0 + alpha * t, nu_g);
}

double GrowthModel::alpha_t(double t) const {
  if (variant == GrowthVariant::Exponential) return alpha;
  return nu_g * alpha / (t0 + alpha * t);
}

double GrowthModel::beta_t(double t) const {
  if (variant == GrowthVariant::Exponential) return beta;
  return nu_g * beta / (t0 + beta * t);
}

void ModelParams::validate() const {
  if (v <= 0) throw ModelError("ModelParams: v must be positive");
  if (tau_B <= 0 || tau_W <= 0 || tau_Pc <= 0)
    throw ModelError("ModelParams: time constants must be positive");
  if (!(s > 0 && s < 1)) throw ModelError("ModelParams: s must lie in (0,1)");
  if (r_L == r_D) throw ModelError("ModelParams: r_L must differ from r_D");
  for (const GenExpParams* g : {&g_inv, &g_ph, &g_tau_rl, &g_tau_lc})
    if (g->y_nu == g->floor)
      throw ModelError("ModelParams: G parameter set has y_nu == floor");
}

bool ModelParams::standard_g_shapes() const {
  const ModelParams d;
  auto same = [](const GenExpParams& a, const GenExpParams& b) {
    return a.x_nu == b.x_nu && a.y_nu == b.y_nu && a.slope == b.slope &&
           a.floor == b.floor;
  };
  return same(g_inv, d.g_inv) && same(g_ph, d.g_ph) &&
         same(g_tau_rl, d.g_tau_rl) && same(g_tau_lc, d.g_tau_lc);
}

bool State::finite() const {
  for (double x : to_array())
    if (!std::isfinite(x)) return false;
  return true;
}

double reconstruct_wd(const State& st, double cst) {
  return st.F_L - st.F_D - st.B_PL - cst;
}

double profit_rate(const State& st, double t, const ModelParams& p) {
  if (st.P_C == 0.0) throw NumericalError("profit_rate: division by zero P_C");
  if (st.K_r == 0.0) throw NumericalError("profit_rate: division by zero K_r");
  const double a = p.growth.a(t);
  const double Y_r = st.K_r / p.v;
  return (st.P_C * Y_r - st.W * Y_r / a - (p.r_L * st.F_L - p.r_D * st.F_D)) /
         (p.v * st.P_C * Y_r);
}

Derived derived_quantities(const State& st, double t, const ModelParams& p,
                           double cst) {
  Derived d;
  d.a = p.growth.a(t);
  d.Y_r = st.K_r / p.v;
  d.W_D = reconstruct_wd(st, cst);
  d.pi_r = profit_rate(st, t, p);
  d.inv = gen_exp(d.pi_r, p.g_inv);
  d.ph = gen_exp(st.lambda, p.g_ph);
  d.tau_rl = gen_exp(d.pi_r, p.g_tau_rl);
  d.tau_lc = gen_exp(d.pi_r, p.g_tau_lc);
  d.g = d.inv / p.v - p.delta;
  return d;
}

State rhs(double t, const State& st, const ModelParams& p, double cst) {
  const Derived d = derived_quantities(st, t, p, cst);
  const double al = p.growth.alpha_t(t);
  const double be = p.growth.beta_t(t);
  State out;
  out.B_C = st.F_L / d.tau_rl - st.B_C / d.tau_lc;
  out.B_PL = p.r_L * st.F_L - p.r_D * st.F_D - p.r_D * d.W_D -
             st.B_PL / p.tau_B;
  out.F_L = st.B_C / d.tau_lc - st.F_L / d.tau_rl + st.P_C * d.Y_r * d.inv;
  out.F_D = p.r_D * st.F_D - p.r_L * st.F_L + st.B_C / d.tau_lc -
            st.F_L / d.tau_rl + st.B_PL / p.tau_B + d.W_D / p.tau_W -
            d.Y_r * st.W / d.a + st.P_C * d.Y_r * d.inv;
  out.W = (d.ph + p.omega * (d.g - (al + be)) -
           (1.0 / p.tau_Pc) * (1.0 - st.W / (d.a * (1.0 - p.s) * st.P_C))) *
          st.W;
  out.P_C = -(1.0 / p.tau_Pc) * (st.P_C - st.W / (d.a * (1.0 - p.s)));
  out.K_r = d.g * st.K_r;
  out.lambda = (d.g - (al + be)) * st.lambda;
  return out;
}

double Trajectory::interp(double t, int col) const {
  const std::size_t n = times.size();
  if (n < 4) throw NumericalError("Trajectory::interp: too few samples");
  if (t < times.front() || t > times.back())
    throw NumericalError("Trajectory::interp: time outside trajectory span");
  const double dt = times[1] - times[0];
  std::ptrdiff_t i =
      static_cast<std::ptrdiff_t>(std::floor((t - times[0]) / dt));
  i = std::clamp<std::ptrdiff_t>(i - 1, 0, static_cast<std::ptrdiff_t>(n) - 4);
  double r = 0.0;
  for (int k = 0; k < 4; ++k) {
    double lk = 1.0;
    for (int m = 0; m < 4; ++m) {
      if (m == k) continue;
      lk *= (t - times[i + m]) / (times[i + k] - times[i + m]);
    }
    r += lk * states[i + k].to_array()[col];
  }
  return r;
}

namespace {

void read_gen_exp(const nlohmann::json& j, const std::string& where,
                  GenExpParams& g) {
  static const std::vector<std::string> keys = {"x_nu", "y_nu", "slope",
                                                "floor"};
  for (auto it = j.begin(); it != j.end(); ++it)
    if (std::find(keys.begin(), keys.end(), it.key()) == keys.end())
      throw ModelError("config: unknown key " + where + "." + it.key());
  if (j.contains("x_nu")) g.x_nu = j.at("x_nu").get<double>();
  if (j.contains("y_nu")) g.y_nu = j.at("y_nu").get<double>();
  if (j.contains("slope")) g.slope = j.at("slope").get<double>();
  if (j.contains("floor")) g.floor = j.at("floor").get<double>();
}

}  // namespace

ModelParams params_from_json(const nlohmann::json& j,
                             const std::vector<std::string>& extra_allowed) {
  ModelParams p;
  static const std::vector<std::string> scalar_keys = {
      "alpha", "beta", "delta", "omega", "tau_B", "tau_W",
      "tau_Pc", "s",    "a0",   "v",     "r_L",   "r_D"};
  std::vector<std::string> unknown;
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& k = it.key();
    if (std::find(scalar_keys.begin(), scalar_keys.end(), k) !=
        scalar_keys.end())
      continue;
    if (k == "growth" || k == "G") continue;
    if (std::find(extra_allowed.begin(), extra_allowed.end(), k) !=
        extra_allowed.end())
      continue;
    unknown.push_back(k);
  }
  if (!unknown.empty()) {
    std::ostringstream os;
    os << "config: unknown keys:";
    for (const auto& k : unknown) os << " " << k;
    throw ModelError(os.str());
  }
  auto rd = [&](const char* k, double& dst) {
    if (j.contains(k)) dst = j.at(k).get<double>();
  };
  rd("alpha", p.alpha);
  rd("beta", p.beta);
  rd("delta", p.delta);
  rd("omega", p.omega);
  rd("tau_B", p.tau_B);
  rd("tau_W", p.tau_W);
  rd("tau_Pc", p.tau_Pc);
  rd("s", p.s);
  rd("a0", p.growth.a0);
  rd("v", p.v);
  rd("r_L", p.r_L);
  rd("r_D", p.r_D);
  if (j.contains("growth")) {
    const auto& g = j.at("growth");
    static const std::vector<std::string> gkeys = {"variant", "t0", "nu_g"};
    for (auto it = g.begin(); it != g.end(); ++it)
      if (std::find(gkeys.begin(), gkeys.end(), it.key()) == gkeys.end())
        throw ModelError("config: unknown key growth." + it.key());
    if (g.contains("variant")) {
      const std::string v = g.at("variant").get<std::string>();
      if (v == "exponential")
        p.growth.variant = GrowthVariant::Exponential;
      else if (v == "algebraic")
        p.growth.variant = GrowthVariant::Algebraic;
      else
        throw ModelError("config: growth.variant must be exponential or algebraic");
    }
    if (g.contains("t0")) p.growth.t0 = g.at("t0").get<double>();
    if (g.contains("nu_g")) p.growth.nu_g = g.at("nu_g").get<double>();
  }
  if (j.contains("G")) {
    const auto& G = j.at("G");
    static const std::vector<std::string> names = {"inv", "ph", "tau_rl",
                                                   "tau_lc"};
    for (auto it = G.begin(); it != G.end(); ++it)
      if (std::find(names.begin(), names.end(), it.key()) == names.end())
        throw ModelError("config: unknown key G." + it.key());
    if (G.contains("inv")) read_gen_exp(G.at("inv"), "G.inv", p.g_inv);
    if (G.contains("ph")) read_gen_exp(G.at("ph"), "G.ph", p.g_ph);
    if (G.contains("tau_rl"))
      read_gen_exp(G.at("tau_rl"), "G.tau_rl", p.g_tau_rl);
    if (G.contains("tau_lc"))
      read_gen_exp(G.at("tau_lc"), "G.tau_lc", p.g_tau_lc);
  }
  p.growth.alpha = p.alpha;
  p.growth.beta = p.beta;
  p.validate();
  return p;
}

nlohmann::json params_to_json(const ModelParams& p) {
  auto gj = [](const GenExpParams& g) {
    return nlohmann::json{{"x_nu", g.x_nu},
                          {"y_nu", g.y_nu},
                          {"slope", g.slope},
                          {"floor", g.floor}};
  };
  return nlohmann::json{
      {"alpha", p.alpha},
      {"beta", p.beta},
      {"delta", p.delta},
      {"omega", p.omega},
      {"tau_B", p.tau_B},
      {"tau_W", p.tau_W},
      {"tau_Pc", p.tau_Pc},
      {"s", p.s},
      {"a0", p.growth.a0},
      {"v", p.v},
      {"r_L", p.r_L},
      {"r_D", p.r_D},
      {"growth",
       {{"variant", p.growth.variant == GrowthVariant::Exponential
                        ? "exponential"
                        : "algebraic"},
        {"t0", p.growth.t0},
        {"nu_g", p.growth.nu_g}}},
      {"G",
       {{"inv", gj(p.g_inv)},
        {"ph", gj(p.g_ph)},
        {"tau_rl", gj(p.g_tau_rl)},
        {"tau_lc", gj(p.g_tau_lc)}}}};
}

const std::vector<std::string>& scannable_params() {
  static const std::vector<std::string> names = {
      "tau_B", "tau_W", "r_L", "tau_Pc", "r_D",
      "s",     "v",     "alpha", "delta", "beta"};
  return names;
}

double get_param(const ModelParams& p, const std::string& name) {
  if (name == "tau_B") return p.tau_B;
  if (name == "tau_W") return p.tau_W;
  if (name == "r_L") return p.r_L;
  if (name == "tau_Pc") return p.tau_Pc;
  if (name == "r_D") return p.r_D;
  if (name == "s") return p.s;
  if (name == "v") return p.v;
  if (name == "alpha") return p.alpha;
  if (name == "delta") return p.delta;
  if (name == "beta") return p.beta;
  throw ModelError("unknown parameter name: " + name);
}

void set_param(ModelParams& p, const std::string& name, double value) {
  if (name == "tau_B")
    p.tau_B = value;
  else if (name == "tau_W")
    p.tau_W = value;
  else if (name == "r_L")
    p.r_L = value;
  else if (name == "tau_Pc")
    p.tau_Pc = value;
  else if (name == "r_D")
    p.r_D = value;
  else if (name == "s")
    p.s = value;
  else if (name == "v")
    p.v = value;
  else if (name == "alpha") {
    p.alpha = value;
    p.growth.alpha = value;
  } else if (name == "delta")
    p.delta = value;
  else if (name == "beta") {
    p.beta = value;
    p.growth.beta = value;
  } else
    throw ModelError("unknown parameter name: " + name);
}

}  // namespace keen
