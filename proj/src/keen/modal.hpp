#pragma once
// Second-order mode spectrum: rescale the system to autonomous form,
// linearize about the leading-order fixed point, and extract the exponents
// nu_k, including the spontaneous complex pair behind the slow decaying
// oscillation superimposed on stable growth.

#include <complex>
#include <vector>

#include <json.hpp>

#include "keen/integrate.hpp"
#include "keen/leading.hpp"
#include "keen/model.hpp"

namespace keen {

struct ModeSpectrum {
  double mu0 = 0.0;
  std::vector<cplx> sigma;  // eigenvalues of the rescaled Jacobian
  std::vector<cplx> nu;     // nu_k = sigma_k + mu0
  int zero_modes = 0;       // count of |sigma| < 1e-6
  cplx spontaneous_pair;    // the complex nu with largest |Im|
  double moderation_period = 0.0;  // 2 pi / Im(spontaneous nu)
  double relative_decay = 0.0;     // Re(spontaneous nu) - mu0
};

// u = (B_C, B_PL, F_L, F_D) e^{-mu0 t}, W e^{-(mu0-beta) t},
// P_C e^{-(mu0-beta-alpha) t}, K_r e^{-(alpha+beta) t}, lambda.
// Requires real mu0 (stable-growth regime) and exponential growth.
std::array<double, 8> rescaled_rhs(const std::array<double, 8>& u,
                                   const ModelParams& p, double mu0);

ModeSpectrum mode_spectrum(const ModelParams& p);

struct TransientFit {
  double pi_r1 = 0.0;       // slow-mode amplitude
  double pi_r2_mod = 0.0;   // oscillatory-mode modulus
  double pi_r2_phase = 0.0; // radians
  double window_begin = 0.0, window_end = 0.0;
};

// Least squares of pi_r(t) - pi_r0 against
// pi_r1 e^{(nu1-mu0) t} + |pi_r2| e^{(Re nu2 - mu0) t} sin(Im nu2 t + phi)
// with the rates held at the spectrum values.
TransientFit fit_transients(const Trajectory& traj, double mu0,
                            const ModeSpectrum& spectrum, double window_begin,
                            double window_end);

nlohmann::json mode_spectrum_to_json(const ModeSpectrum& m);

}  // namespace keen
