#pragma once
// Keen-type endogenous-money macroeconomic model: data types, the generalized
// exponential family, auxiliary functions, the profit rate and the ODE
// right-hand side, for exponential and algebraic productivity growth.

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace keen {

struct ModelError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
// Numerical failure distinct from bad input/usage.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct GenExpParams {
  double x_nu = 0.0;   // abscissa offset
  double y_nu = 0.0;   // value at x_nu
  double slope = 0.0;  // steepness factor
  double floor = 0.0;  // horizontal asymptote m
};

// G(x) = (y_nu - m) * exp(slope * (x - x_nu) / (y_nu - m)) + m,
// with the exponent clipped to [-700, 700] so deep-collapse states saturate
// instead of overflowing.
double gen_exp(double x, const GenExpParams& p);

// Limit of G as x -> -inf (the floor when the exponent decays, +/-inf when it
// grows on that side).
double gen_exp_limit_neg(const GenExpParams& p);

enum class GrowthVariant { Exponential, Algebraic };

struct GrowthModel {
  GrowthVariant variant = GrowthVariant::Exponential;
  double a0 = 1.0;     // initial productivity
  double alpha = 0.015;
  double beta = 0.02;
  double t0 = 1.0;     // algebraic offset (Algebraic only)
  double nu_g = 2.5;   // algebraic exponent (Algebraic only)

  double a(double t) const;        // productivity a(t)
  double alpha_t(double t) const;  // instantaneous productivity rate
  double beta_t(double t) const;   // instantaneous population rate
};

struct ModelParams {
  double alpha = 0.015;
  double beta = 0.02;
  double delta = 0.01;
  double omega = 0.1;
  double tau_B = 1.0;
  double tau_W = 1.0 / 26.0;
  double tau_Pc = 1.0;
  double s = 0.27;   // return to capital
  double v = 3.0;    // capital-output ratio
  double r_L = 0.05;
  double r_D = 0.01;
  GenExpParams g_inv{1.0 / 25.0, 1.0 / 25.0, 2.0, 0.0};
  GenExpParams g_ph{96.0 / 100.0, 0.0, 2.0, -1.0 / 25.0};
  GenExpParams g_tau_rl{3.0 / 100.0, 10.0, 100.0, 3.0};
  GenExpParams g_tau_lc{3.0 / 100.0, 2.0, -50.0, 0.5};
  GrowthModel growth{};

  static ModelParams standard() { return ModelParams{}; }
  void validate() const;
  // True when the four G shapes equal their default parameter sets.
  bool standard_g_shapes() const;
};

struct State {
  double B_C = 0.0;   // bank capital
  double B_PL = 0.0;  // bank profit/loss stock
  double F_L = 0.0;   // firm loans
  double F_D = 0.0;   // firm deposits
  double W = 0.0;     // wage rate
  double P_C = 0.0;   // price level
  double K_r = 0.0;   // real capital
  double lambda = 0.0;  // employment rate

  static State table2() { return State{12, 5, 100, 70, 1, 1, 900, 1}; }
  std::array<double, 8> to_array() const {
    return {B_C, B_PL, F_L, F_D, W, P_C, K_r, lambda};
  }
  static State from_array(const double* y) {
    return State{y[0], y[1], y[2], y[3], y[4], y[5], y[6], y[7]};
  }
  bool finite() const;
};

struct Derived {
  double W_D = 0.0;
  double pi_r = 0.0;
  double g = 0.0;
  double inv = 0.0;
  double ph = 0.0;
  double tau_rl = 0.0;
  double tau_lc = 0.0;
  double Y_r = 0.0;
  double a = 0.0;
};

double reconstruct_wd(const State& st, double cst);
double profit_rate(const State& st, double t, const ModelParams& p);
Derived derived_quantities(const State& st, double t, const ModelParams& p,
                           double cst);
State rhs(double t, const State& st, const ModelParams& p, double cst);

struct Trajectory {
  std::vector<double> times;
  std::vector<State> states;
  std::vector<Derived> derived;
  double cst = 0.0;
  ModelParams params;

  // Centered 4-point Lagrange interpolation of a state component on the
  // uniform sample grid; col in [0,8): state fields in declaration order.
  double interp(double t, int col) const;
  std::size_t size() const { return times.size(); }
};

// JSON configuration. Unknown keys raise ModelError listing them; absent keys
// keep their defaults. extra_allowed lists additional top-level keys that the
// caller handles itself (e.g. per-command blocks).
ModelParams params_from_json(const nlohmann::json& j,
                             const std::vector<std::string>& extra_allowed = {});
nlohmann::json params_to_json(const ModelParams& p);

// Named access to the ten scannable parameters:
// tau_B, tau_W, r_L, tau_Pc, r_D, s, v, alpha, delta, beta.
double get_param(const ModelParams& p, const std::string& name);
void set_param(ModelParams& p, const std::string& name, double value);
const std::vector<std::string>& scannable_params();

}  // namespace keen
