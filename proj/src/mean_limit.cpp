#include "rotwind/mean_limit.hpp"

#include <cmath>
#include <random>
#include <thread>

#include "rotwind/ekman_sources.hpp"
#include "rotwind/errors.hpp"
#include "rotwind/rng.hpp"

namespace rotwind {

namespace {

const cplx I(0.0, 1.0);

}  // namespace

Vorticity2D::Vorticity2D(const TorusGeometry& g, int truncation)
    : g_(g), n_(truncation), c_(std::size_t(2 * truncation + 1) * (2 * truncation + 1)) {
  if (truncation < 1) throw InvalidArgument("Vorticity2D: truncation must be >= 1");
}

std::size_t Vorticity2D::index(int k1, int k2) const {
  if (std::abs(k1) > n_ || std::abs(k2) > n_) throw InvalidArgument("Vorticity2D: mode out of range");
  return std::size_t(k1 + n_) * (2 * n_ + 1) + std::size_t(k2 + n_);
}

std::pair<int, int> Vorticity2D::mode(std::size_t i) const {
  const int side = 2 * n_ + 1;
  return {int(i / side) - n_, int(i % side) - n_};
}

double Vorticity2D::max_abs() const {
  double m = 0.0;
  for (const cplx& v : c_) m = std::max(m, std::abs(v));
  return m;
}

Vec2 Vorticity2D::wavevector(std::size_t i) const {
  const auto [k1, k2] = mode(i);
  return Vec2(2.0 * kPi * k1 / g_.a1, 2.0 * kPi * k2 / g_.a2);
}

Vorticity2D horizontal_vorticity(const SpectralField& w) {
  const TorusGeometry& g = w.geometry();
  Vorticity2D om(g, w.truncation());
  const double s = std::sqrt(g.volume());
  for (std::size_t i = 0; i < om.size(); ++i) {
    const auto [k1, k2] = om.mode(i);
    if (k1 == 0 && k2 == 0) continue;
    om[i] = w.at({k1, k2, 0}) * om.wavevector(i).norm() / s;
  }
  return om;
}

SpectralField field_from_vorticity(const Vorticity2D& om, int truncation) {
  const TorusGeometry& g = om.geometry();
  SpectralField w(g, truncation);
  const double s = std::sqrt(g.volume());
  for (std::size_t i = 0; i < om.size(); ++i) {
    const auto [k1, k2] = om.mode(i);
    if ((k1 == 0 && k2 == 0) || std::abs(k1) > truncation || std::abs(k2) > truncation) continue;
    w.set({k1, k2, 0}, om[i] * s / om.wavevector(i).norm());
  }
  return w;
}

CVec2 velocity_from_vorticity(const Vorticity2D& om, std::size_t i) {
  const Vec2 k = om.wavevector(i);
  const double k2 = k.squaredNorm();
  if (k2 == 0.0) return CVec2::Zero();
  return -I * om[i] * CVec2(-k(1), k(0)) / k2;
}

Vorticity2D transport_term(const Vorticity2D& om) {
  const int n = om.truncation();
  Vorticity2D out(om.geometry(), n);
  std::vector<CVec2> u(om.size());
  for (std::size_t i = 0; i < om.size(); ++i) u[i] = velocity_from_vorticity(om, i);
  for (std::size_t p = 0; p < om.size(); ++p) {
    if (om[p] == cplx(0.0)) continue;
    const auto [p1, p2] = om.mode(p);
    for (std::size_t q = 0; q < om.size(); ++q) {
      if (om[q] == cplx(0.0)) continue;
      const auto [q1, q2] = om.mode(q);
      const int k1 = p1 + q1, k2 = p2 + q2;
      if (std::abs(k1) > n || std::abs(k2) > n) continue;
      const Vec2 qv = om.wavevector(q);
      out[out.index(k1, k2)] += (u[p](0) * I * qv(0) + u[p](1) * I * qv(1)) * om[q];
    }
  }
  return out;
}

namespace {

struct MeanStepper {
  const EnvelopeConfig& cfg;
  int n;
  WindStress mean_wind;
  std::shared_ptr<const TriadTable> table;
  std::vector<double> om_rate;
  std::vector<cplx> rate;

  MeanStepper(const TorusGeometry& g, const WindStress& ws, const EnvelopeConfig& c,
              std::shared_ptr<const TriadTable> t)
      : cfg(c), n(c.truncation), mean_wind(ws.deterministic_part()), table(std::move(t)) {
    if (!table) table = std::make_shared<TriadTable>(TriadTable::build(g, n));
    Vorticity2D om(g, n);
    om_rate.resize(om.size());
    for (std::size_t i = 0; i < om.size(); ++i)
      om_rate[i] = om.wavevector(i).squaredNorm() + cfg.pumping_scale() / (std::sqrt(2.0) * g.a);
    SpectralField f(g, n);
    rate.resize(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) {
      const ModeIndex k = f.modes().mode(i);
      const Vec3 kp = rotwind::wavevector(g, k);
      rate[i] = kp(0) * kp(0) + kp(1) * kp(1) + cfg.pumping_scale() * pumping_coefficient_A(g, k);
    }
  }

  SpectralField mean_source(const TorusGeometry& g, double t) const {
    if (mean_wind.empty() || cfg.beta == 0.0) return SpectralField(g, n);
    SpectralField s = cfg.delta > 0.0
                          ? S_T_delta(mean_wind, cfg.delta, t, mean_wind.zero_phases(), n)
                          : S_T_limit(mean_wind, t, mean_wind.zero_phases(), n, cfg.h2_eta);
    s *= cfg.nu * cfg.beta;
    return s;
  }

  Vorticity2D advance(const Vorticity2D& om, double h, const Vorticity2D& rhs) const {
    Vorticity2D out(om.geometry(), n);
    for (std::size_t i = 0; i < om.size(); ++i) {
      const double r = 0.5 * h * om_rate[i];
      out[i] = ((1.0 - r) * om[i] - h * rhs[i]) / (1.0 + r);
    }
    return out;
  }

  SpectralField advance(const SpectralField& w, double h, const SpectralField& rhs) const {
    SpectralField out(w.geometry(), n);
    for (std::size_t i = 0; i < w.size(); ++i) {
      const cplx r = 0.5 * h * rate[i];
      out[i] = ((1.0 - r) * w[i] - h * rhs[i]) / (1.0 + r);
    }
    return out;
  }

  SpectralField coupling(const SpectralField& wbar, const SpectralField& u) const {
    if (!cfg.nonlinear) return SpectralField(u.geometry(), n);
    SpectralField q = table->qbar_apply(wbar, u);
    q *= 2.0;
    return q;
  }
};

Vorticity2D add(Vorticity2D a, const Vorticity2D& b, double sb = 1.0) {
  for (std::size_t i = 0; i < a.size(); ++i) a[i] += sb * b[i];
  return a;
}

}  // namespace

MeanLimitResult solve_mean_limit(const SpectralField& u0, const WindStress& ws,
                                 const EnvelopeConfig& cfg,
                                 std::shared_ptr<const TriadTable> table) {
  cfg.validate();
  const TorusGeometry& g = u0.geometry();
  MeanStepper st(g, ws, cfg, std::move(table));
  const int n = cfg.truncation;
  const SpectralField w0 = u0.retruncated(n);
  Vorticity2D om = horizontal_vorticity(w0);
  SpectralField wt = w0 - field_from_vorticity(om, n);
  auto J = [&](const Vorticity2D& o) {
    return cfg.nonlinear ? transport_term(o) : Vorticity2D(g, n);
  };
  auto F = [&](double t) { return horizontal_vorticity(st.mean_source(g, t)); };

  MeanLimitResult r;
  r.times.push_back(0.0);
  r.vorticity.push_back(om);
  r.wbar.push_back(field_from_vorticity(om, n));
  r.wtilde.push_back(wt);

  const auto steps = static_cast<std::size_t>(std::llround(cfg.T_final / cfg.dt));
  const double h = cfg.dt;
  double t = 0.0;
  Vorticity2D jprev(g, n);
  SpectralField cprev(g, n);
  for (std::size_t s = 0; s < steps; ++s) {
    const SpectralField wb = field_from_vorticity(om, n);
    const Vorticity2D jn = J(om);
    const SpectralField cn = st.coupling(wb, wt);
    Vorticity2D om_next(g, n);
    SpectralField wt_next;
    if (s == 0) {
      const Vorticity2D om_half = st.advance(om, 0.5 * h, add(jn, F(t + 0.25 * h)));
      const SpectralField wt_half = st.advance(wt, 0.5 * h, cn);
      r.wbar_predictor = field_from_vorticity(om_half, n);
      om_next = st.advance(om, h, add(J(om_half), F(t + 0.5 * h)));
      wt_next = st.advance(wt, h, st.coupling(r.wbar_predictor, wt_half));
    } else {
      const Vorticity2D ab = add(add(Vorticity2D(g, n), jn, 1.5), jprev, -0.5);
      om_next = st.advance(om, h, add(ab, F(t + 0.5 * h)));
      SpectralField cab = 1.5 * cn;
      cab -= 0.5 * cprev;
      wt_next = st.advance(wt, h, cab);
    }
    jprev = jn;
    cprev = cn;
    om = om_next;
    wt = std::move(wt_next);
    t += h;
    r.times.push_back(t);
    r.vorticity.push_back(om);
    r.wtilde.push_back(wt);
    r.wbar.push_back(field_from_vorticity(om, n));
  }
  return r;
}

std::vector<SpectralField> solve_fluctuation(const WindStress& ws, const EnvelopeConfig& cfg,
                                             const PhasePoint& w, const MeanLimitResult& mean,
                                             std::shared_ptr<const TriadTable> table) {
  cfg.validate();
  const TorusGeometry& g = mean.wbar.front().geometry();
  MeanStepper st(g, ws, cfg, std::move(table));
  const int n = cfg.truncation;
  const std::size_t steps = mean.times.size() - 1;
  if (mean.wbar.size() != steps + 1)
    throw InvalidArgument("solve_fluctuation: mean trajectory has unexpected layout");
  EnvelopeSolver full(SpectralField(g, n), ws, cfg, w, st.table);
  auto F = [&](double t) { return full.source(t) - st.mean_source(g, t); };

  std::vector<SpectralField> out{SpectralField(g, n)};
  SpectralField u(g, n), cprev(g, n);
  const double h = cfg.dt;
  for (std::size_t s = 0; s < steps; ++s) {
    const double t = mean.times[s];
    const SpectralField cn = st.coupling(mean.wbar[s], u);
    SpectralField next;
    if (s == 0) {
      const SpectralField half = st.advance(u, 0.5 * h, cn + F(t + 0.25 * h));
      next = st.advance(u, h, st.coupling(mean.wbar_predictor, half) + F(t + 0.5 * h));
    } else {
      SpectralField ab = 1.5 * cn;
      ab -= 0.5 * cprev;
      next = st.advance(u, h, ab + F(t + 0.5 * h));
    }
    cprev = cn;
    u = std::move(next);
    out.push_back(u);
  }
  return out;
}

DecouplingReport decoupling_check(const TorusGeometry& g, int truncation, int samples,
                                  std::uint64_t seed, std::shared_ptr<const TriadTable> table) {
  if (!table) table = std::make_shared<TriadTable>(TriadTable::build(g, truncation));
  DecouplingReport rep;
  const NonresonanceReport nr = check_nonresonant_torus(g, truncation);
  rep.nonresonant = nr.nonresonant;
  rep.torus_violations = nr.violation_count;
  const ModeSet ms(truncation);
  for (const Triad& t : table->triads()) {
    if (ms.mode(t.k).k3 == 0 || ms.mode(t.l).k3 == 0) continue;
    ++rep.coupling_count;
    if (rep.coupling_triads.size() < 100) rep.coupling_triads.push_back(t);
  }
  std::mt19937_64 rng(seed);
  for (int s = 0; s < samples; ++s) {
    SpectralField u = random_real_field(g, truncation, rng);
    for (std::size_t i = 0; i < u.size(); ++i)
      if (u.modes().mode(i).k3 == 0) u[i] = 0.0;
    rep.max_qbar = std::max(rep.max_qbar, table->qbar_apply(u, u).max_abs());
  }
  return rep;
}

MonteCarloCheck monte_carlo_mean_check(const SpectralField& u0, const WindStress& ws,
                                       const EnvelopeConfig& cfg, const MeanLimitResult& m,
                                       int draws, std::uint64_t seed,
                                       std::shared_ptr<const TriadTable> table, int threads) {
  if (draws < 2) throw InvalidArgument("monte_carlo_mean_check: need at least two draws");
  if (m.wbar.empty()) throw InvalidArgument("monte_carlo_mean_check: empty mean-limit result");
  if (cfg.nonlinear && !table)
    table = std::make_shared<const TriadTable>(TriadTable::build(u0.geometry(), cfg.truncation));
  std::vector<SpectralField> finals(draws);
  auto work = [&](int first, int stride) {
    for (int r = first; r < draws; r += stride) {
      std::mt19937_64 rng(derive_seed(seed, 0, std::uint64_t(r)));
      finals[r] = solve_envelope(u0, ws, cfg, ws.sample_phases(rng), table).snapshots.back();
    }
  };
  const int nt = std::max(1, std::min(threads, draws));
  if (nt == 1) {
    work(0, 1);
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < nt; ++t) pool.emplace_back(work, t, nt);
    for (auto& th : pool) th.join();
  }

  const SpectralField& wbar = m.wbar.back();
  const SpectralField pred = wbar + m.wtilde.back();
  MonteCarloCheck c;
  c.draws = draws;
  std::vector<cplx> s(pred.size());
  std::vector<double> sq(pred.size());
  for (const SpectralField& w : finals) {
    for (std::size_t i = 0; i < w.size(); ++i) {
      s[i] += w[i];
      sq[i] += std::norm(w[i]);
    }
    SpectralField h(w.geometry(), w.truncation());
    for (std::size_t i = 0; i < w.size(); ++i)
      if (w.modes().mode(i).k3 == 0) h[i] = w[i];
    c.horizontal_distance = std::max(c.horizontal_distance, (h - wbar).norm());
  }
  double dist2 = 0.0, var_sum = 0.0;
  c.max_mode_excess = -1e300;
  const double n = draws;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const cplx mean = s[i] / n;
    const double var = std::max(0.0, sq[i] / n - std::norm(mean)) * n / (n - 1.0);
    dist2 += std::norm(mean - pred[i]);
    var_sum += var;
    c.max_mode_excess =
        std::max(c.max_mode_excess, std::abs(mean - pred[i]) - 3.0 * std::sqrt(var / n));
  }
  c.l2_distance = std::sqrt(dist2);
  c.l2_bound = 3.0 * std::sqrt(var_sum / n);
  return c;
}

}  // namespace rotwind
