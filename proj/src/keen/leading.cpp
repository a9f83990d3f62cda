#include "keen/leading.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace keen {

namespace {

constexpr double kBorderTol = 1e-9;

// Solve G(x) = target by bisection, relying on monotonicity of the
// generalized exponential.
double solve_gen_exp(const GenExpParams& g, double target,
                     const std::string& what) {
  auto f = [&](double x) { return gen_exp(x, g) - target; };
  // Find a sign-changing bracket around x_nu by doubling.
  double lo = g.x_nu, hi = g.x_nu, w = 1.0;
  const double f0 = f(g.x_nu);
  if (f0 == 0.0) return g.x_nu;
  const bool up = gen_exp(g.x_nu + 1.0, g) > gen_exp(g.x_nu, g);
  const bool go_right = (f0 < 0.0) == up;
  for (int i = 0; i < 80; ++i) {
    if (go_right)
      hi = g.x_nu + w;
    else
      lo = g.x_nu - w;
    if (f(lo) * f(hi) <= 0.0) break;
    w *= 2.0;
    if (i == 79)
      throw ModelError("leading_equilibrium: no solution for " + what +
                       " (nonviable parameters)");
  }
  if (f(lo) * f(hi) > 0.0)
    throw ModelError("leading_equilibrium: no solution for " + what +
                     " (nonviable parameters)");
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (f(lo) * f(mid) <= 0.0)
      hi = mid;
    else
      lo = mid;
    if (hi - lo < 1e-16 * std::max(1.0, std::abs(mid))) break;
  }
  return 0.5 * (lo + hi);
}

Eigen::MatrixXcd to_eigen(const LinearSystem& sys) {
  Eigen::MatrixXcd A(6, 5);
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 5; ++j) A(i, j) = sys.A[i][j];
  return A;
}

}  // namespace

Equilibrium leading_equilibrium(const ModelParams& p) {
  p.validate();
  if (p.growth.variant != GrowthVariant::Exponential)
    throw ModelError("leading_equilibrium: requires exponential growth mode");
  Equilibrium eq;
  eq.inv0 = p.v * (p.alpha + p.beta + p.delta);
  eq.pi_r0 = solve_gen_exp(p.g_inv, eq.inv0, "Inv = v(alpha+beta+delta)");
  eq.lambda0 = solve_gen_exp(p.g_ph, p.alpha, "Ph = alpha");
  eq.tau_rl0 = gen_exp(eq.pi_r0, p.g_tau_rl);
  eq.tau_lc0 = gen_exp(eq.pi_r0, p.g_tau_lc);
  return eq;
}

LinearSystem build_linear_system(cplx mu, const ModelParams& p) {
  const Equilibrium eq = leading_equilibrium(p);
  const double a0 = p.growth.a0;
  LinearSystem sys;
  sys.A.assign(6, std::vector<cplx>(5, 0.0));
  sys.b.assign(6, 0.0);
  // Unknown order: [B_PL0, F_L0, F_D0, W0, P_C0].
  // Bank-capital balance.
  sys.A[0][1] = 1.0 / eq.tau_rl0;
  sys.b[0] = mu + 1.0 / eq.tau_lc0;
  // Bank profit/loss balance.
  sys.A[1][0] = mu - p.r_D + 1.0 / p.tau_B;
  sys.A[1][1] = -(p.r_L - p.r_D);
  // Loan balance.
  sys.A[2][1] = mu + 1.0 / eq.tau_rl0;
  sys.A[2][4] = -eq.inv0 / p.v;
  sys.b[2] = 1.0 / eq.tau_lc0;
  // Firm-deposit balance.
  sys.A[3][0] = -(1.0 / p.tau_B - 1.0 / p.tau_W);
  sys.A[3][1] = p.r_L + 1.0 / eq.tau_rl0 - 1.0 / p.tau_W;
  sys.A[3][2] = mu - p.r_D + 1.0 / p.tau_W;
  sys.A[3][3] = 1.0 / (p.v * a0);
  sys.A[3][4] = -eq.inv0 / p.v;
  sys.b[3] = 1.0 / eq.tau_lc0;
  // Price relaxation.
  sys.A[4][3] = -1.0 / (p.tau_Pc * a0 * (1.0 - p.s));
  sys.A[4][4] = mu - p.beta - p.alpha + 1.0 / p.tau_Pc;
  // Profit-rate definition.
  sys.A[5][1] = p.r_L;
  sys.A[5][2] = -p.r_D;
  sys.A[5][3] = 1.0 / (p.v * a0);
  sys.A[5][4] = eq.pi_r0 - 1.0 / p.v;
  return sys;
}

cplx augmented_det(cplx mu, const ModelParams& p) {
  const LinearSystem sys = build_linear_system(mu, p);
  Eigen::MatrixXcd M(6, 6);
  for (int i = 0; i < 6; ++i) {
    for (int j = 0; j < 5; ++j) M(i, j) = sys.A[i][j];
    M(i, 5) = -sys.b[i];
  }
  return M.determinant();
}

Quintic char_quintic(const ModelParams& p) {
  // Chebyshev nodes on [-2, 2]; interpolate through six, check the seventh.
  std::array<double, 7> nodes{};
  for (int k = 0; k < 7; ++k)
    nodes[k] = 2.0 * std::cos(std::numbers::pi * (2 * k + 1) / 14.0);
  std::array<double, 7> vals{};
  for (int k = 0; k < 7; ++k) vals[k] = augmented_det(nodes[k], p).real();

  Eigen::MatrixXd V(6, 6);
  Eigen::VectorXd rhs_v(6);
  for (int i = 0; i < 6; ++i) {
    double pw = 1.0;
    for (int j = 0; j < 6; ++j) {
      V(i, j) = pw;
      pw *= nodes[i];
    }
    rhs_v(i) = vals[i];
  }
  const Eigen::VectorXd c = V.fullPivLu().solve(rhs_v);
  Quintic q;
  double cmax = 0.0;
  for (int j = 0; j < 6; ++j) {
    q.c[j] = c(j);
    cmax = std::max(cmax, std::abs(c(j)));
  }
  double pred = 0.0, pw = 1.0;
  for (int j = 0; j < 6; ++j) {
    pred += q.c[j] * pw;
    pw *= nodes[6];
  }
  q.node_residual = std::abs(pred - vals[6]) / cmax;
  if (!(q.node_residual < 1e-8))
    throw NumericalError(
        "char_quintic: determinant is not degree 5 (node residual " +
        std::to_string(q.node_residual) + ")");
  if (q.c[5] == 0.0)
    throw NumericalError("char_quintic: vanishing leading coefficient");
  return q;
}

std::vector<cplx> poly_roots(const std::vector<cplx>& coeffs) {
  if (coeffs.size() < 2) throw ModelError("poly_roots: degree must be >= 1");
  const int deg = static_cast<int>(coeffs.size()) - 1;
  if (coeffs[deg] == cplx(0.0))
    throw ModelError("poly_roots: leading coefficient is zero");
  Eigen::MatrixXcd C = Eigen::MatrixXcd::Zero(deg, deg);
  for (int i = 1; i < deg; ++i) C(i, i - 1) = 1.0;
  for (int i = 0; i < deg; ++i) C(i, deg - 1) = -coeffs[i] / coeffs[deg];
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(C);
  if (es.info() != Eigen::Success)
    throw NumericalError("poly_roots: eigensolver failed to converge");
  std::vector<cplx> roots(deg);
  for (int i = 0; i < deg; ++i) roots[i] = es.eigenvalues()(i);
  for (const cplx& r : roots) {
    cplx pv = 0.0;
    double scale = 0.0, rp = 1.0;
    cplx rpow = 1.0;
    for (int k = 0; k <= deg; ++k) {
      pv += coeffs[k] * rpow;
      scale += std::abs(coeffs[k]) * rp;
      rpow *= r;
      rp *= std::abs(r);
    }
    if (!(std::abs(pv) / std::max(scale, 1e-300) < 1e-12))
      throw NumericalError("poly_roots: backward residual check failed");
  }
  return roots;
}

AmplitudeTable solve_amplitudes(cplx mu0, const ModelParams& p) {
  const LinearSystem sys = build_linear_system(mu0, p);
  const Eigen::MatrixXcd A = to_eigen(sys);
  Eigen::VectorXcd b(6);
  for (int i = 0; i < 6; ++i) b(i) = sys.b[i];

  // Drop the row whose removal leaves the best-conditioned 5x5 block.
  int drop = -1;
  double best_sv = -1.0;
  for (int d = 0; d < 6; ++d) {
    Eigen::MatrixXcd A5(5, 5);
    int r = 0;
    for (int i = 0; i < 6; ++i) {
      if (i == d) continue;
      A5.row(r++) = A.row(i);
    }
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(A5);
    const double smin = svd.singularValues().minCoeff();
    if (smin > best_sv) {
      best_sv = smin;
      drop = d;
    }
  }
  Eigen::MatrixXcd A5(5, 5);
  Eigen::VectorXcd b5(5);
  {
    int r = 0;
    for (int i = 0; i < 6; ++i) {
      if (i == drop) continue;
      A5.row(r) = A.row(i);
      b5(r++) = b(i);
    }
  }
  const Eigen::VectorXcd x = A5.fullPivLu().solve(b5);
  cplx resid = -b(drop);
  double scale = std::abs(b(drop));
  for (int j = 0; j < 5; ++j) {
    resid += A(drop, j) * x(j);
    scale += std::abs(A(drop, j)) * std::abs(x(j));
  }
  const double rel = std::abs(resid) / std::max(scale, 1e-300);
  if (!(rel < 1e-8))
    throw NumericalError(
        "solve_amplitudes: dropped-row residual too large (mu0 is not a root "
        "or the system is ill conditioned)");

  AmplitudeTable t;
  t.mu0 = mu0;
  t.dropped_row = drop;
  t.dropped_residual = rel;
  const bool complex_mode = std::abs(mu0.imag()) > kBorderTol;
  auto fill = [&](FieldAmplitude& f, cplx v) {
    f.coef = v;
    f.amp = std::abs(v);
    f.phase_years = complex_mode ? std::arg(v) / mu0.imag() : 0.0;
  };
  fill(t.B_PL0, x(0));
  fill(t.F_L0, x(1));
  fill(t.F_D0, x(2));
  fill(t.W0, x(3));
  fill(t.P_C0, x(4));
  fill(t.W_D0, x(1) - x(2) - x(0));
  t.realizable = true;
  for (const FieldAmplitude* f : t.fields())
    if (f->coef.real() < 0.0) t.realizable = false;
  return t;
}

std::pair<double, double> period_estimates(cplx mu0,
                                           const AmplitudeTable& table) {
  if (std::abs(mu0.imag()) <= kBorderTol)
    return {std::numeric_limits<double>::infinity(),
            std::numeric_limits<double>::infinity()};
  const double T = std::numbers::pi / std::abs(mu0.imag());
  double max_phase = 0.0;  // leads shorten the period; lags never extend it
  for (const FieldAmplitude* f : table.fields())
    max_phase = std::max(max_phase, f->phase_years);
  return {T, T - max_phase};
}

std::string regime_name(RegimeClass r) {
  switch (r) {
    case RegimeClass::StableGrowth: return "StableGrowth";
    case RegimeClass::DeferredCollapse: return "DeferredCollapse";
    case RegimeClass::ImmediateCollapse: return "ImmediateCollapse";
    case RegimeClass::Degenerate: return "Degenerate";
  }
  return "?";
}

LeadingMode classify(const ModelParams& p) {
  const Quintic q = char_quintic(p);
  LeadingMode m;
  m.all_roots = poly_roots(q.coeffs_complex());
  cplx mu0 = m.all_roots[0];
  for (const cplx& r : m.all_roots)
    if (r.real() > mu0.real()) mu0 = r;
  if (mu0.imag() < 0.0) mu0 = std::conj(mu0);
  m.mu0 = mu0;
  const Equilibrium eq = leading_equilibrium(p);
  m.lambda0 = eq.lambda0;
  m.pi_r0 = eq.pi_r0;
  m.amplitudes = solve_amplitudes(mu0, p);
  const bool im_zero = std::abs(mu0.imag()) <= kBorderTol;
  if (std::abs(mu0.real()) <= kBorderTol)
    m.regime = RegimeClass::Degenerate;
  else if (mu0.real() <= 0.0 || (im_zero && !m.amplitudes.realizable))
    m.regime = RegimeClass::ImmediateCollapse;
  else if (im_zero)
    m.regime = RegimeClass::StableGrowth;
  else
    m.regime = RegimeClass::DeferredCollapse;
  std::tie(m.T, m.T_star) = period_estimates(mu0, m.amplitudes);
  return m;
}

cplx wage_coefficient_closed_form(cplx mu0, const ModelParams& p) {
  if (p.growth.variant != GrowthVariant::Exponential)
    throw ModelError(
        "wage_coefficient_closed_form: requires exponential growth mode");
  if (!p.standard_g_shapes())
    throw ModelError(
        "wage_coefficient_closed_form: requires the standard G shapes");
  const double e = std::numbers::e;
  const double g = std::pow(p.v * (p.alpha + p.beta + p.delta), 1.0 / 21.0);
  auto pw = [](double x, double y) { return std::pow(x, y); };
  const cplx N =
      6125.0 * pw(5.0 * e * e, 1.0 / 7.0) * (mu0 + 2.0) * pw(g, 26) +
      175.0 * pw(625.0 * e, 1.0 / 7.0) * (6.0 * mu0 + 13.0) * pw(g, 20) +
      75.0 * (3.0 * mu0 + 7.0) * pw(g, 14) +
      735.0 * mu0 * pw(pw(5.0, 17) / e, 1.0 / 21.0) * pw(g, 12) +
      105.0 * pw(pw(5.0, 5) / pw(e, 4), 1.0 / 21.0) * (6.0 * mu0 + 1.0) *
          pw(g, 6) +
      9.0 * pw(25.0 / e, 1.0 / 3.0) * (3.0 * mu0 + 1.0);
  const double D = (7.0 * pw(625.0 * e, 1.0 / 7.0) * pw(g, 6) + 3.0) *
                   (25.0 * pw(g, 14) + 3.0 * pw(25.0 / e, 1.0 / 3.0));
  const cplx w0 = mu0 * (p.s - 1.0) / (p.alpha + p.beta + p.delta) *
                  (1.0 + p.tau_Pc * (mu0 - p.alpha - p.beta)) * N / D;
  // Normalize the sign to the B_C0 = 1 convention of solve_amplitudes.
  return -w0;
}

nlohmann::json leading_mode_to_json(const LeadingMode& m) {
  nlohmann::json roots = nlohmann::json::array();
  for (const cplx& r : m.all_roots)
    roots.push_back({{"re", r.real()}, {"im", r.imag()}});
  nlohmann::json amps;
  const auto names = m.amplitudes.field_names();
  const auto fields = m.amplitudes.fields();
  for (std::size_t i = 0; i < names.size(); ++i)
    amps[names[i]] = {{"re", fields[i]->coef.real()},
                      {"im", fields[i]->coef.imag()},
                      {"amp", fields[i]->amp},
                      {"phase_years", fields[i]->phase_years}};
  nlohmann::json j{{"mu0", {{"re", m.mu0.real()}, {"im", m.mu0.imag()}}},
                   {"roots", roots},
                   {"regime", regime_name(m.regime)},
                   {"lambda0", m.lambda0},
                   {"pi_r0", m.pi_r0},
                   {"amplitudes", amps},
                   {"realizable", m.amplitudes.realizable}};
  if (std::isfinite(m.T)) {
    j["T"] = m.T;
    j["T_star"] = m.T_star;
  } else {
    j["T"] = nullptr;
    j["T_star"] = nullptr;
  }
  return j;
}

}  // namespace keen
