#pragma once
// One-parameter sensitivity sweeps, bifurcation-point location, and the
// two-dimensional (s, v) regime diagram with its borders.

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "keen/leading.hpp"
#include "keen/model.hpp"

namespace keen {

struct SweepPoint {
  double factor = 0.0;
  double value = 0.0;
  bool ok = false;
  std::string error;
  cplx mu0;
  std::string regime;
  std::vector<cplx> roots;
};

struct SweepResult {
  std::string name;
  std::vector<SweepPoint> points;
  // Grid values bracketing a sign change of the oscillation indicator
  // (Im mu0 != 0) or of Re mu0.
  std::vector<std::pair<double, double>> im_bifurcations;
  std::vector<std::pair<double, double>> re_bifurcations;
};

SweepResult sweep_1d(const ModelParams& p, const std::string& name,
                     int n = 33, double lo_factor = 0.25,
                     double hi_factor = 4.0);

// Bisection (relative width 1e-7) on the indicator Im(mu0) != 0.
double find_bifurcation(const ModelParams& p, const std::string& name,
                        double lo, double hi);

struct GridRecord {
  double s = 0.0, v = 0.0;
  bool ok = false;
  std::string regime;
  double re_mu0 = 0.0, im_mu0 = 0.0;
  double T = 0.0;
  bool realizable = false;
  double re_fd0 = 0.0;
  bool border_stability = false;
  bool border_price_neutral = false;
  bool border_wage_neutral = false;
  bool border_fd_zero = false;
};

struct RegimeGrid {
  std::vector<GridRecord> records;  // row-major, s fastest
  int ns = 0, nv = 0;
  std::vector<double> s_values, v_values;
};

RegimeGrid regime_grid(const ModelParams& p, double s_lo, double s_hi,
                       double v_lo, double v_hi, int ns, int nv, int jobs = 0);

std::string regime_grid_csv(const RegimeGrid& g);
nlohmann::json sweep_to_json(const SweepResult& r);

}  // namespace keen
