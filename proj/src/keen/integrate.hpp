#pragma once
// Adaptive explicit Runge-Kutta (Dormand-Prince 5(4)) time stepping with a
// continuous extension, PI step-size control, uniform-grid resampling and
// event detection (collapse onset, numerical blowup, step underflow).

#include <functional>
#include <string>
#include <vector>

#include "keen/model.hpp"

namespace keen {

struct IntegrationConfig {
  double rel_tol = 1e-9;
  double abs_tol = 1e-12;
  double max_step = 0.25;      // years
  double t_begin = 0.0;
  double t_end = 150.0;
  double sample_dt = 0.05;     // output grid spacing, years
  double blowup_norm = 1e12;   // terminate (flagged) when max |y_i| exceeds it
  double collapse_pi_threshold = -1.0;  // pi_r below this ...
  double collapse_persist = 1.0;        // ... and decreasing this long (years)
  bool nine_state = false;     // integrate W_D explicitly for validation

  void validate() const;
};

struct Event {
  std::string kind;  // "collapse" | "blowup"
  double t = 0.0;
};

// One accepted step's continuous extension.
struct DenseSegment {
  double t0 = 0.0, h = 0.0;
  std::vector<double> r1, r2, r3, r4, r5;  // per-component interpolant data
};

// Piecewise interpolant over the whole integration span.
struct DenseOutput {
  std::vector<DenseSegment> segments;
  int dim = 0;
  void eval(double t, double* out) const;
  double eval1(double t, int comp) const;
  double t_front() const;
  double t_back() const;
};

struct IntegrationResult {
  Trajectory traj;
  std::vector<Event> events;
  DenseOutput dense;
  bool terminated_early = false;
  // Conservation drift diagnostic (nine-state mode): max |cst(t)-cst(0)|.
  double conservation_drift = 0.0;

  bool has_event(const std::string& kind) const;
  double event_time(const std::string& kind) const;  // first occurrence
};

// Generic dense integrator used by the model front end below and by the
// rescaled systems elsewhere. f(t, y, dy) with dim components.
IntegrationResult integrate_generic(
    const std::function<void(double, const double*, double*)>& f, int dim,
    const std::vector<double>& y0, const IntegrationConfig& cfg,
    const std::function<double(double, const double*)>& collapse_indicator);

IntegrationResult integrate(const ModelParams& p, const State& ic, double cst,
                            const IntegrationConfig& cfg);

// CSV with header t,B_C,B_PL,F_L,F_D,W_D,W,P_C,K_r,lambda,pi_r,g at 17
// significant digits.
std::string trajectory_csv(const Trajectory& traj);
Trajectory trajectory_from_csv(const std::string& csv, const ModelParams& p,
                               double cst);

}  // namespace keen
