#pragma once
// Leading-order exponential ansatz: equilibrium constants, the augmented 6x6
// linear system, the characteristic quintic, root classification, amplitude
// and phase tables, period estimates, and the closed-form wage coefficient.

#include <complex>
#include <vector>

#include <json.hpp>

#include "keen/model.hpp"

namespace keen {

using cplx = std::complex<double>;

struct Equilibrium {
  double pi_r0 = 0.0;
  double lambda0 = 0.0;
  double inv0 = 0.0;
  double tau_rl0 = 0.0;
  double tau_lc0 = 0.0;
};

Equilibrium leading_equilibrium(const ModelParams& p);

// The ansatz-reduced linear system A x = b with unknowns
// x = [B_PL0, F_L0, F_D0, W0, P_C0], B_C0 = 1 and
// W_D0 = F_L0 - F_D0 - B_PL0 eliminated. Exactly five rows depend affinely
// on mu; the profit row does not.
struct LinearSystem {
  // 6x5 coefficient matrix, row-major.
  std::vector<std::vector<cplx>> A;
  std::vector<cplx> b;
};
LinearSystem build_linear_system(cplx mu, const ModelParams& p);

// det [A | -b] as a function of mu; vanishes when the overdetermined system
// is consistent.
cplx augmented_det(cplx mu, const ModelParams& p);

struct Quintic {
  // c[k] multiplies mu^k; overall scale is arbitrary.
  std::array<double, 6> c{};
  double node_residual = 0.0;  // degree check at the 7th interpolation node
  std::vector<cplx> coeffs_complex() const {
    return std::vector<cplx>(c.begin(), c.end());
  }
};
Quintic char_quintic(const ModelParams& p);

std::vector<cplx> poly_roots(const std::vector<cplx>& coeffs);

struct FieldAmplitude {
  cplx coef;
  double amp = 0.0;
  double phase_years = 0.0;
};

struct AmplitudeTable {
  cplx mu0;
  FieldAmplitude B_PL0, F_L0, F_D0, W0, P_C0, W_D0;
  bool realizable = false;
  int dropped_row = -1;
  double dropped_residual = 0.0;

  std::vector<const FieldAmplitude*> fields() const {
    return {&B_PL0, &F_L0, &F_D0, &W0, &P_C0, &W_D0};
  }
  std::vector<std::string> field_names() const {
    return {"B_PL", "F_L", "F_D", "W", "P_C", "W_D"};
  }
};
AmplitudeTable solve_amplitudes(cplx mu0, const ModelParams& p);

enum class RegimeClass {
  StableGrowth,
  DeferredCollapse,
  ImmediateCollapse,
  Degenerate
};
std::string regime_name(RegimeClass r);

struct LeadingMode {
  cplx mu0;
  std::vector<cplx> all_roots;
  double lambda0 = 0.0;
  double pi_r0 = 0.0;
  RegimeClass regime = RegimeClass::Degenerate;
  double T = 0.0;       // half-period estimate; +inf for real mu0
  double T_star = 0.0;  // phase-corrected period
  AmplitudeTable amplitudes;
};
LeadingMode classify(const ModelParams& p);

// (T, T*) from the dominant root and the field phases.
std::pair<double, double> period_estimates(cplx mu0,
                                           const AmplitudeTable& table);

// Closed-form W0 for the standard G shapes, normalized to the B_C0 = 1
// convention used by solve_amplitudes.
cplx wage_coefficient_closed_form(cplx mu0, const ModelParams& p);

nlohmann::json leading_mode_to_json(const LeadingMode& m);

}  // namespace keen
