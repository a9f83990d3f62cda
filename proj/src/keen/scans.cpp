#include "keen/scans.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <thread>

namespace keen {

namespace {

constexpr double kImTol = 1e-9;

bool oscillatory(const ModelParams& p, const std::string& name, double value) {
  ModelParams q = p;
  set_param(q, name, value);
  const Quintic quint = char_quintic(q);
  const auto roots = poly_roots(quint.coeffs_complex());
  cplx mu0 = roots[0];
  for (const cplx& r : roots)
    if (r.real() > mu0.real()) mu0 = r;
  return std::abs(mu0.imag()) > kImTol;
}

int resolve_jobs(int jobs) {
  if (jobs > 0) return jobs;
  const unsigned hc = std::thread::hardware_concurrency();
  return hc ? static_cast<int>(hc) : 1;
}

}  // namespace

SweepResult sweep_1d(const ModelParams& p, const std::string& name, int n,
                     double lo_factor, double hi_factor) {
  const auto& names = scannable_params();
  if (std::find(names.begin(), names.end(), name) == names.end())
    throw ModelError("sweep_1d: parameter must be one of the ten scannable "
                     "names, got " + name);
  if (n < 2) throw ModelError("sweep_1d: need at least two grid points");
  const double base = get_param(p, name);
  SweepResult res;
  res.name = name;
  for (int i = 0; i < n; ++i) {
    const double f = lo_factor * std::pow(hi_factor / lo_factor,
                                          static_cast<double>(i) / (n - 1));
    SweepPoint pt;
    pt.factor = f;
    pt.value = base * f;
    try {
      ModelParams q = p;
      set_param(q, name, pt.value);
      const LeadingMode m = classify(q);
      pt.ok = true;
      pt.mu0 = m.mu0;
      pt.regime = regime_name(m.regime);
      pt.roots = m.all_roots;
    } catch (const std::exception& e) {
      pt.ok = false;
      pt.error = e.what();
    }
    res.points.push_back(std::move(pt));
  }
  for (std::size_t i = 1; i < res.points.size(); ++i) {
    const SweepPoint& a = res.points[i - 1];
    const SweepPoint& b = res.points[i];
    if (!a.ok || !b.ok) continue;
    const bool osc_a = std::abs(a.mu0.imag()) > kImTol;
    const bool osc_b = std::abs(b.mu0.imag()) > kImTol;
    if (osc_a != osc_b) res.im_bifurcations.push_back({a.value, b.value});
    if ((a.mu0.real() > 0) != (b.mu0.real() > 0))
      res.re_bifurcations.push_back({a.value, b.value});
  }
  return res;
}

double find_bifurcation(const ModelParams& p, const std::string& name,
                        double lo, double hi) {
  bool flo = oscillatory(p, name, lo);
  const bool fhi = oscillatory(p, name, hi);
  if (flo == fhi)
    throw ModelError("find_bifurcation: indicator does not change over the "
                     "bracket");
  while (std::abs(hi - lo) >
         1e-7 * std::max(std::abs(lo), std::abs(hi))) {
    const double mid = 0.5 * (lo + hi);
    if (oscillatory(p, name, mid) == flo)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

RegimeGrid regime_grid(const ModelParams& p, double s_lo, double s_hi,
                       double v_lo, double v_hi, int ns, int nv, int jobs) {
  if (!(s_lo > 0 && v_lo > 0 && s_hi > s_lo && v_hi > v_lo))
    throw ModelError("regime_grid: ranges must be positive and increasing");
  if (ns < 2 || nv < 2) throw ModelError("regime_grid: grid too small");
  RegimeGrid g;
  g.ns = ns;
  g.nv = nv;
  for (int i = 0; i < ns; ++i)
    g.s_values.push_back(s_lo + (s_hi - s_lo) * i / (ns - 1));
  for (int j = 0; j < nv; ++j)
    g.v_values.push_back(v_lo + (v_hi - v_lo) * j / (nv - 1));
  g.records.resize(static_cast<std::size_t>(ns) * nv);

  std::atomic<int> next{0};
  auto worker = [&]() {
    for (;;) {
      const int idx = next.fetch_add(1);
      if (idx >= ns * nv) return;
      const int j = idx / ns, i = idx % ns;
      GridRecord rec;
      rec.s = g.s_values[i];
      rec.v = g.v_values[j];
      try {
        ModelParams q = p;
        set_param(q, "s", rec.s);
        set_param(q, "v", rec.v);
        if (rec.s >= 1.0) throw ModelError("s out of range");
        const LeadingMode m = classify(q);
        rec.ok = true;
        rec.regime = regime_name(m.regime);
        rec.re_mu0 = m.mu0.real();
        rec.im_mu0 = m.mu0.imag();
        rec.T = m.T;
        rec.realizable = m.amplitudes.realizable;
        rec.re_fd0 = m.amplitudes.F_D0.coef.real();
      } catch (const std::exception& e) {
        rec.ok = false;
        rec.regime = std::string("error: ") + e.what();
      }
      g.records[idx] = std::move(rec);
    }
  };
  const int nthreads = std::min(resolve_jobs(jobs), ns * nv);
  std::vector<std::thread> pool;
  for (int k = 1; k < nthreads; ++k) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();

  // Border flags: sign change of the respective indicator against the right
  // or upper neighbor.
  auto at = [&](int i, int j) -> GridRecord& { return g.records[j * ns + i]; };
  auto differs = [](double a, double b) { return (a > 0) != (b > 0); };
  for (int j = 0; j < nv; ++j)
    for (int i = 0; i < ns; ++i) {
      GridRecord& r = at(i, j);
      if (!r.ok) continue;
      for (auto [di, dj] : {std::pair{1, 0}, std::pair{0, 1}}) {
        if (i + di >= ns || j + dj >= nv) continue;
        const GridRecord& q = at(i + di, j + dj);
        if (!q.ok) continue;
        if ((std::abs(r.im_mu0) > kImTol) != (std::abs(q.im_mu0) > kImTol))
          r.border_stability = true;
        if (differs(r.re_mu0 - p.alpha - p.beta, q.re_mu0 - p.alpha - p.beta))
          r.border_price_neutral = true;
        if (differs(r.re_mu0 - p.beta, q.re_mu0 - p.beta))
          r.border_wage_neutral = true;
        if (differs(r.re_fd0, q.re_fd0)) r.border_fd_zero = true;
      }
    }
  return g;
}

std::string regime_grid_csv(const RegimeGrid& g) {
  std::string out =
      "s,v,regime,re_mu0,im_mu0,T,realizable,border_stability,"
      "border_price_neutral,border_wage_neutral,border_fd_zero\n";
  char buf[256];
  for (const GridRecord& r : g.records) {
    std::snprintf(buf, sizeof buf,
                  "%.17g,%.17g,%s,%.17g,%.17g,%.17g,%d,%d,%d,%d,%d\n", r.s,
                  r.v, r.ok ? r.regime.c_str() : "error", r.re_mu0, r.im_mu0,
                  r.T, r.realizable ? 1 : 0, r.border_stability ? 1 : 0,
                  r.border_price_neutral ? 1 : 0,
                  r.border_wage_neutral ? 1 : 0, r.border_fd_zero ? 1 : 0);
    out += buf;
  }
  return out;
}

nlohmann::json sweep_to_json(const SweepResult& r) {
  nlohmann::json pts = nlohmann::json::array();
  for (const SweepPoint& p : r.points) {
    nlohmann::json jp{{"factor", p.factor}, {"value", p.value}, {"ok", p.ok}};
    if (p.ok) {
      jp["mu0"] = {{"re", p.mu0.real()}, {"im", p.mu0.imag()}};
      jp["regime"] = p.regime;
      nlohmann::json roots = nlohmann::json::array();
      for (const cplx& rt : p.roots)
        roots.push_back({{"re", rt.real()}, {"im", rt.imag()}});
      jp["roots"] = roots;
    } else {
      jp["error"] = p.error;
    }
    pts.push_back(std::move(jp));
  }
  nlohmann::json imb = nlohmann::json::array(), reb = nlohmann::json::array();
  for (auto& [a, b] : r.im_bifurcations) imb.push_back({a, b});
  for (auto& [a, b] : r.re_bifurcations) reb.push_back({a, b});
  return nlohmann::json{{"name", r.name},
                        {"points", pts},
                        {"im_bifurcations", imb},
                        {"re_bifurcations", reb}};
}

}  // namespace keen
