#include "keen/modal.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <numbers>

namespace keen {

std::array<double, 8> rescaled_rhs(const std::array<double, 8>& u,
                                   const ModelParams& p, double mu0) {
  if (p.growth.variant != GrowthVariant::Exponential)
    throw ModelError("rescaled_rhs: requires exponential growth mode");
  const double u1 = u[0], u2 = u[1], u3 = u[2], u4 = u[3], u5 = u[4],
               u6 = u[5], u7 = u[6], u8 = u[7];
  const double a0 = p.growth.a0;
  const double pir = (u6 * u7 / p.v - u5 * u7 / (p.v * a0) - p.r_L * u3 +
                      p.r_D * u4) /
                     (u6 * u7);
  const double inv = gen_exp(pir, p.g_inv);
  const double ph = gen_exp(u8, p.g_ph);
  const double trl = gen_exp(pir, p.g_tau_rl);
  const double tlc = gen_exp(pir, p.g_tau_lc);
  const double g = inv / p.v - p.delta;
  const double al = p.alpha, be = p.beta;
  const double wd = u3 - u4 - u2;  // the conserved-constant term is dropped
  return {
      u3 / trl - u1 / tlc - mu0 * u1,
      p.r_L * u3 - p.r_D * u4 - p.r_D * wd - u2 / p.tau_B - mu0 * u2,
      u1 / tlc - u3 / trl + u6 * u7 * inv / p.v - mu0 * u3,
      p.r_D * u4 - p.r_L * u3 + u1 / tlc - u3 / trl + u2 / p.tau_B +
          wd / p.tau_W - u5 * u7 / (p.v * a0) + u6 * u7 * inv / p.v -
          mu0 * u4,
      (ph + p.omega * (g - al - be) -
       (1.0 / p.tau_Pc) * (1.0 - u5 / (a0 * (1.0 - p.s) * u6))) *
              u5 -
          (mu0 - be) * u5,
      -(1.0 / p.tau_Pc) * (u6 - u5 / (a0 * (1.0 - p.s))) -
          (mu0 - be - al) * u6,
      g * u7 - (al + be) * u7,
      (g - al - be) * u8};
}

namespace {

Eigen::MatrixXd fd_jacobian(const std::array<double, 8>& u0,
                            const ModelParams& p, double mu0, double scale) {
  Eigen::MatrixXd J(8, 8);
  for (int j = 0; j < 8; ++j) {
    const double h = scale * std::max(std::abs(u0[j]), 1.0);
    auto up = u0, um = u0;
    up[j] += h;
    um[j] -= h;
    const auto fp = rescaled_rhs(up, p, mu0);
    const auto fm = rescaled_rhs(um, p, mu0);
    for (int i = 0; i < 8; ++i) J(i, j) = (fp[i] - fm[i]) / (2.0 * h);
  }
  return J;
}

}  // namespace

ModeSpectrum mode_spectrum(const ModelParams& p) {
  const LeadingMode mode = classify(p);
  if (mode.regime != RegimeClass::StableGrowth)
    throw ModelError("mode_spectrum: requires a stable-growth (real mu0) regime");
  const double mu0 = mode.mu0.real();
  const AmplitudeTable& amp = mode.amplitudes;
  const std::array<double, 8> u0 = {
      1.0,
      amp.B_PL0.coef.real(),
      amp.F_L0.coef.real(),
      amp.F_D0.coef.real(),
      amp.W0.coef.real(),
      amp.P_C0.coef.real(),
      1.0,  // K_r0 fiducial scale
      mode.lambda0};
  const auto r0 = rescaled_rhs(u0, p, mu0);
  double rn = 0.0;
  for (double v : r0) rn += v * v;
  rn = std::sqrt(rn);
  if (!(rn < 1e-8))
    throw NumericalError(
        "mode_spectrum: fixed-point residual too large: " + std::to_string(rn));

  // Central differences with Richardson verification.
  const Eigen::MatrixXd J1 = fd_jacobian(u0, p, mu0, 1e-6);
  const Eigen::MatrixXd J2 = fd_jacobian(u0, p, mu0, 5e-7);
  const Eigen::MatrixXd Jr = (4.0 * J2 - J1) / 3.0;
  const double disagree =
      (Jr - J2).cwiseAbs().maxCoeff() / (1.0 + Jr.cwiseAbs().maxCoeff());
  if (!(disagree < 1e-8))
    throw NumericalError("mode_spectrum: Jacobian verification failed");

  Eigen::EigenSolver<Eigen::MatrixXd> es(Jr);
  if (es.info() != Eigen::Success)
    throw NumericalError("mode_spectrum: eigensolver failed");

  ModeSpectrum m;
  m.mu0 = mu0;
  for (int i = 0; i < 8; ++i) m.sigma.push_back(es.eigenvalues()(i));
  std::sort(m.sigma.begin(), m.sigma.end(),
            [](const cplx& a, const cplx& b) { return a.real() > b.real(); });
  for (const cplx& s : m.sigma) {
    m.nu.push_back(s + mu0);
    if (std::abs(s) < 1e-6) ++m.zero_modes;
  }
  double best_im = 0.0;
  for (const cplx& n : m.nu)
    if (std::abs(n.imag()) > best_im) {
      best_im = std::abs(n.imag());
      m.spontaneous_pair = n.imag() > 0 ? n : std::conj(n);
    }
  if (best_im > 0.0) {
    m.moderation_period = 2.0 * std::numbers::pi / best_im;
    m.relative_decay = m.spontaneous_pair.real() - mu0;
  }
  return m;
}

TransientFit fit_transients(const Trajectory& traj, double mu0,
                            const ModeSpectrum& spectrum, double window_begin,
                            double window_end) {
  // nu1: the largest nonzero real exponent; nu2: the spontaneous pair.
  double nu1 = 0.0;
  bool found = false;
  for (const cplx& n : spectrum.nu) {
    if (std::abs(n.imag()) > 1e-9) continue;
    if (std::abs(n.real() - mu0) < 1e-6) continue;  // zero modes
    if (!found || n.real() > nu1) {
      nu1 = n.real();
      found = true;
    }
  }
  if (!found || spectrum.moderation_period == 0.0)
    throw NumericalError("fit_transients: spectrum lacks the needed modes");
  const cplx nu2 = spectrum.spontaneous_pair;

  const Equilibrium eq = leading_equilibrium(traj.params);
  std::vector<double> ts, zs;
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const double t = traj.times[i];
    if (t < window_begin || t > window_end) continue;
    ts.push_back(t);
    zs.push_back(traj.derived[i].pi_r - eq.pi_r0);
  }
  if (ts.size() < 10)
    throw ModelError("fit_transients: window contains too few samples");

  Eigen::MatrixXd M(ts.size(), 3);
  Eigen::VectorXd z(ts.size());
  const double r1 = nu1 - mu0, r2 = nu2.real() - mu0, w2 = nu2.imag();
  for (std::size_t i = 0; i < ts.size(); ++i) {
    M(i, 0) = std::exp(r1 * ts[i]);
    M(i, 1) = std::exp(r2 * ts[i]) * std::sin(w2 * ts[i]);
    M(i, 2) = std::exp(r2 * ts[i]) * std::cos(w2 * ts[i]);
    z(i) = zs[i];
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(M, Eigen::ComputeThinU |
                                               Eigen::ComputeThinV);
  const double cond =
      svd.singularValues()(0) / svd.singularValues()(2);
  if (!(cond < 1e10))
    throw NumericalError(
        "fit_transients: ill-conditioned fit; try a different window");
  const Eigen::VectorXd c = svd.solve(z);
  TransientFit f;
  f.pi_r1 = c(0);
  f.pi_r2_mod = std::hypot(c(1), c(2));
  f.pi_r2_phase = std::atan2(c(2), c(1));
  f.window_begin = window_begin;
  f.window_end = window_end;
  return f;
}

nlohmann::json mode_spectrum_to_json(const ModeSpectrum& m) {
  nlohmann::json sig = nlohmann::json::array(), nu = nlohmann::json::array();
  for (const cplx& s : m.sigma) sig.push_back({{"re", s.real()}, {"im", s.imag()}});
  for (const cplx& n : m.nu) nu.push_back({{"re", n.real()}, {"im", n.imag()}});
  return nlohmann::json{{"mu0", m.mu0},
                        {"sigma", sig},
                        {"nu", nu},
                        {"zero_modes", m.zero_modes},
                        {"moderation_period", m.moderation_period},
                        {"relative_decay", m.relative_decay}};
}

}  // namespace keen
