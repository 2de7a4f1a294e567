#include "rotwind/boundary_layers.hpp"

#include <algorithm>
#include <cmath>

#include "rotwind/errors.hpp"
#include "rotwind/quadrature.hpp"
#include "rotwind/resonance.hpp"

namespace rotwind {

namespace {

const cplx I(0.0, 1.0);

Vec2 horizontal_wavevector(const TorusGeometry& g, int k1, int k2) {
  return Vec2(2.0 * kPi * k1 / g.a1, 2.0 * kPi * k2 / g.a2);
}

// Principal root; Re >= 0 always holds for std::sqrt.
cplx decay_root(cplx p) { return std::sqrt(p); }

// int_0^S f(s) ds for f smooth on [0, inf) except near s = 0, split as
// s = r^2 on [0, 1] (graded panels) and unit panels on [1, S].
template <class F>
auto layer_integral(F&& f, double smax) {
  using R = decltype(f(1.0));
  R acc = R();
  static const GaussRule g20 = gauss_legendre(20, 0.0, 1.0);
  // r in [0, 1]: panels [0, 1e-4], then geometric to 1.
  std::vector<double> edges{0.0};
  for (double r = 1e-4; r < 1.0; r *= 2.0) edges.push_back(r);
  edges.push_back(1.0);
  for (std::size_t p = 0; p + 1 < edges.size(); ++p) {
    const double lo = edges[p], hi = edges[p + 1];
    for (std::size_t q = 0; q < g20.x.size(); ++q) {
      const double r = lo + (hi - lo) * g20.x[q];
      acc += f(r * r) * (2.0 * r * (hi - lo) * g20.w[q]);
    }
  }
  static const GaussRule g16 = gauss_legendre(16, 0.0, 1.0);
  for (double lo = 1.0; lo < smax; lo += 1.0) {
    const double hi = std::min(lo + 1.0, smax);
    for (std::size_t q = 0; q < g16.x.size(); ++q)
      acc += f(lo + (hi - lo) * g16.x[q]) * ((hi - lo) * g16.w[q]);
  }
  return acc;
}

double tail_length(double delta) { return std::max(40.0 / delta, 40.0); }

}  // namespace

void LayerParams::validate() const {
  if (!(epsilon > 0.0) || !(nu > 0.0) || !(beta > 0.0))
    throw InvalidArgument("epsilon, nu and beta must be positive");
  if (!(delta > 0.0)) throw InvalidArgument("delta must be positive");
}

double LayerParams::eta() const { return std::sqrt(epsilon * nu); }

std::vector<std::string> LayerParams::regime_flags(double bound) const {
  std::vector<std::string> out;
  if (nu / epsilon > bound) out.push_back("nu/epsilon exceeds regime bound");
  if (beta * eta() > bound) out.push_back("beta*sqrt(epsilon*nu) exceeds regime bound");
  return out;
}

double kernel_G_delta(double tau, double zeta, double delta) {
  if (!(tau > 0.0)) throw InvalidArgument("kernel_G_delta: tau must be positive");
  if (zeta < 0.0) throw InvalidArgument("kernel_G_delta: zeta must be nonnegative");
  return zeta / (std::sqrt(4.0 * kPi) * std::pow(tau, 1.5)) *
         std::exp(-zeta * zeta / (4.0 * tau) - delta * tau);
}

// ---------------------------------------------------------------- top layer

CVec3 top_layer_mode(const WindStress& ws, const LayerParams& p, int k1, int k2, double t,
                     double tau, double zeta, const PhasePoint& w) {
  p.validate();
  if (zeta < 0.0) throw InvalidArgument("top layer: zeta must be nonnegative");
  const TorusGeometry& g = ws.geometry();
  const Vec2 kh = horizontal_wavevector(g, k1, k2);
  const Vec2 khp(-kh(1), kh(0));
  const double env = ws.envelope(t);
  const double eta = p.eta();
  CVec3 out = CVec3::Zero();
  for (const auto& [mu, amp] : ws.mode_spectrum(k1, k2, w)) {
    const CVec2 c = env * amp;
    const cplx ph = std::exp(I * (mu * tau));
    for (int s : {1, -1}) {
      const cplx pp(p.delta, mu - s);
      const cplx r = decay_root(pp);
      const cplx dec = std::exp(-zeta * r);
      const CVec2 ch = c + double(s) * I * perp(c);
      out.head<2>() += (0.5 * p.beta * eta) * ch * (ph * dec / r);
      const cplx cpm = I * kh.cast<cplx>().dot(c) + double(s) * khp.cast<cplx>().dot(c);
      out(2) += -(0.5 * p.nu * p.epsilon * p.beta) * cpm * ph * dec / pp;
    }
  }
  return out;
}

CVec2 top_layer_uh(const WindStress& ws, const LayerParams& p, double t, double tau,
                   const Vec2& xh, double zeta, const PhasePoint& w) {
  CVec2 out = CVec2::Zero();
  const TorusGeometry& g = ws.geometry();
  for (const auto& [k1, k2] : ws.horizontal_support()) {
    const Vec2 kh = horizontal_wavevector(g, k1, k2);
    out += top_layer_mode(ws, p, k1, k2, t, tau, zeta, w).head<2>() *
           std::exp(I * kh.dot(xh));
  }
  return out;
}

cplx top_layer_u3(const WindStress& ws, const LayerParams& p, double t, double tau,
                  const Vec2& xh, double zeta, const PhasePoint& w) {
  cplx out = 0.0;
  const TorusGeometry& g = ws.geometry();
  for (const auto& [k1, k2] : ws.horizontal_support()) {
    const Vec2 kh = horizontal_wavevector(g, k1, k2);
    out += top_layer_mode(ws, p, k1, k2, t, tau, zeta, w)(2) * std::exp(I * kh.dot(xh));
  }
  return out;
}

CVec2 top_layer_uh_quadrature(const std::function<CVec2(double)>& c, const LayerParams& p,
                              double tau, double zeta) {
  p.validate();
  CVec2 acc = CVec2::Zero();
  for (int s : {1, -1}) {
    auto f = [&](double u) -> CVec2 {
      if (u <= 0.0) return CVec2::Zero();
      const CVec2 v = c(tau - u);
      const double wt = std::exp(-zeta * zeta / (4.0 * u)) / std::sqrt(u);
      return (v + double(s) * I * perp(v)) * (wt * std::exp(cplx(-p.delta * u, s * u)));
    };
    acc += layer_integral(f, tail_length(p.delta));
  }
  const CVec2 out = acc * (p.beta * p.eta() / std::sqrt(4.0 * kPi));
  if (!out.allFinite()) throw NumericalError("top layer quadrature did not converge");
  return out;
}

cplx top_layer_u3_quadrature(const std::function<CVec2(double)>& c, const Vec2& kh,
                             const LayerParams& p, double tau, double zeta) {
  p.validate();
  const Vec2 khp(-kh(1), kh(0));
  cplx acc = 0.0;
  for (int s : {1, -1}) {
    auto f = [&](double u) -> cplx {
      const CVec2 v = c(tau - u);
      const cplx cpm = I * kh.cast<cplx>().dot(v) + double(s) * khp.cast<cplx>().dot(v);
      const double phi =
          u > 0.0 ? -std::sqrt(kPi) * std::erfc(zeta / (2.0 * std::sqrt(u))) : (zeta > 0 ? 0.0 : -std::sqrt(kPi));
      return cpm * phi * std::exp(cplx(-p.delta * u, s * u));
    };
    acc += layer_integral(f, tail_length(p.delta));
  }
  const cplx out = acc * (p.nu * p.epsilon * p.beta / std::sqrt(4.0 * kPi));
  if (!std::isfinite(out.real()) || !std::isfinite(out.imag()))
    throw NumericalError("top layer quadrature did not converge");
  return out;
}

// ------------------------------------------------------------- bottom layer

cplx bottom_decay_rate(double lambda, int sign) {
  const double m = 1.0 - sign * lambda;
  if (m < 0.0) throw InvalidArgument("bottom_decay_rate: |lambda| must not exceed 1");
  return std::sqrt(m) * cplx(1.0, double(sign)) / std::sqrt(2.0);
}

BottomLayerMode make_bottom_mode(const TorusGeometry& g, const ModeIndex& k,
                                 const CVec2& c_hat) {
  if (k.horizontal_zero()) throw InvalidArgument("bottom layer mode requires k_h != 0");
  BottomLayerMode m;
  m.k = k;
  m.lambda = eigenvalue(g, k);
  m.c_hat = c_hat;
  m.w_plus = 0.5 * (c_hat(0) + I * c_hat(1)) * CVec2(1.0, -I);
  m.w_minus = 0.5 * (c_hat(0) - I * c_hat(1)) * CVec2(1.0, I);
  m.eta_plus = bottom_decay_rate(m.lambda, 1);
  m.eta_minus = bottom_decay_rate(m.lambda, -1);
  return m;
}

BottomLayerSpec BottomLayerSpec::from_coefficients(const TorusGeometry& g,
                                                   const std::map<ModeIndex, CVec2>& c_hat) {
  BottomLayerSpec s;
  s.geom = g;
  for (const auto& [k, c] : c_hat) {
    if (k.is_zero()) throw InvalidArgument("bottom layer: k = 0 is not a mode");
    if (!k.horizontal_zero()) {
      s.modes.emplace(k, make_bottom_mode(g, k, c));
      continue;
    }
    // lambda = -sgn(k3): e^{-i lambda tau} = e^{+i tau} for k3 > 0.
    const cplx a = 0.5 * (c(0) - double(k.k3 > 0 ? 1 : -1) * I * c(1));
    const cplx b = 0.5 * (c(0) + double(k.k3 > 0 ? 1 : -1) * I * c(1));
    if (k.k3 > 0) {
      s.alpha_plus += a;
      s.gamma_plus += b;
    } else {
      s.alpha_minus += a;
      s.gamma_minus += b;
    }
  }
  return s;
}

BottomLayerSpec BottomLayerSpec::from_interior(const SpectralField& w) {
  std::map<ModeIndex, CVec2> c;
  const TorusGeometry& g = w.geometry();
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (w[i] == cplx(0.0)) continue;
    const ModeIndex k = w.modes().mode(i);
    c[k] = -w[i] * eigenvector(g, k).head<2>();
  }
  return from_coefficients(g, c);
}

CVec3 bottom_layer(const TorusGeometry& g, const BottomLayerMode& m, double tau, const Vec2& xh,
                   double zeta, const LayerParams& p) {
  if (zeta < 0.0) throw InvalidArgument("bottom layer: zeta must be nonnegative");
  const Vec2 kh = horizontal_wavevector(g, m.k.k1, m.k.k2);
  const cplx base = std::exp(I * (kh.dot(xh) - m.lambda * tau));
  CVec3 out = CVec3::Zero();
  for (int s : {1, -1}) {
    const CVec2& wv = s > 0 ? m.w_plus : m.w_minus;
    const cplx e = s > 0 ? m.eta_plus : m.eta_minus;
    const cplx f = base * std::exp(-e * zeta);
    out.head<2>() += wv * f;
    out(2) += p.eta() / e * (I * kh.cast<cplx>().dot(wv)) * f;
  }
  return out;
}

CVec3 bottom_layer(const BottomLayerSpec& spec, const ModeIndex& k, double tau, const Vec2& xh,
                   double zeta, const LayerParams& p) {
  if (k.horizontal_zero())
    throw InvalidArgument("bottom_layer: k_h = 0 is handled by the classical/resonant split");
  auto it = spec.modes.find(k);
  if (it == spec.modes.end()) return CVec3::Zero();
  return bottom_layer(spec.geom, it->second, tau, xh, zeta, p);
}

CVec2 bottom_classical_kh0(const BottomLayerSpec& spec, double tau, double zeta) {
  const cplx ep = std::exp(I * tau - cplx(1.0, 1.0) * zeta);
  const cplx em = std::exp(-I * tau - cplx(1.0, -1.0) * zeta);
  return spec.gamma_plus * ep * CVec2(1.0, -I) + spec.gamma_minus * em * CVec2(1.0, I);
}

double psi(double X) { return std::erfc(X / 2.0); }

CVec2 resonant_layer(cplx alpha_plus, cplx alpha_minus, double t, double tau, double z,
                     double nu) {
  if (!(t > 0.0)) throw InvalidArgument("resonant_layer: t must be positive");
  const double s = psi(z / std::sqrt(nu * t));
  return s * (alpha_plus * std::exp(I * tau) * CVec2(1.0, I) +
              alpha_minus * std::exp(-I * tau) * CVec2(1.0, -I));
}

// ------------------------------------------------------ interior correctors

void OscillatorySeries::add(const HorizontalKey& kh, double freq, cplx amp) {
  auto& v = terms[kh];
  for (auto& [f, a] : v)
    if (f == freq) {
      a += amp;
      return;
    }
  v.emplace_back(freq, amp);
}

cplx OscillatorySeries::value(const HorizontalKey& kh, double tau) const {
  auto it = terms.find(kh);
  if (it == terms.end()) return 0.0;
  cplx s = 0.0;
  for (const auto& [f, a] : it->second) s += a * std::exp(I * (f * tau));
  return s;
}

cplx OscillatorySeries::dtau(const HorizontalKey& kh, double tau) const {
  auto it = terms.find(kh);
  if (it == terms.end()) return 0.0;
  cplx s = 0.0;
  for (const auto& [f, a] : it->second) s += I * f * a * std::exp(I * (f * tau));
  return s;
}

std::map<HorizontalKey, cplx> OscillatorySeries::values(double tau) const {
  std::map<HorizontalKey, cplx> out;
  for (const auto& [kh, v] : terms) out[kh] = value(kh, tau);
  return out;
}

cplx OscillatorySeries::mean_at(const HorizontalKey& kh, double freq, double tol) const {
  auto it = terms.find(kh);
  if (it == terms.end()) return 0.0;
  cplx s = 0.0;
  for (const auto& [f, a] : it->second)
    if (std::abs(f - freq) <= tol) s += a;
  return s;
}

OscillatorySeries compute_cB3(const SpectralField& w) {
  const TorusGeometry& g = w.geometry();
  const double area = g.a1 * g.a2;
  const BottomLayerSpec spec = BottomLayerSpec::from_interior(w);
  OscillatorySeries out;
  for (const auto& [k, m] : spec.modes) {
    const Vec2 kh = horizontal_wavevector(g, k.k1, k.k2);
    cplx s = 0.0;
    for (int sg : {1, -1}) {
      const CVec2& wv = sg > 0 ? m.w_plus : m.w_minus;
      const cplx e = sg > 0 ? m.eta_plus : m.eta_minus;
      s += I * kh.cast<cplx>().dot(wv) / e;
    }
    out.add({k.k1, k.k2}, -m.lambda, -area * s);
  }
  return out;
}

OscillatorySeries compute_cT3(const WindStress& ws, const LayerParams& p, double t,
                              const PhasePoint& w) {
  p.validate();
  const TorusGeometry& g = ws.geometry();
  const double area = g.a1 * g.a2;
  const double env = ws.envelope(t);
  OscillatorySeries out;
  for (const auto& [k1, k2] : ws.horizontal_support()) {
    const Vec2 kh = horizontal_wavevector(g, k1, k2);
    const Vec2 khp(-kh(1), kh(0));
    for (const auto& [mu, amp] : ws.mode_spectrum(k1, k2, w)) {
      const CVec2 c = env * amp;
      cplx s = 0.0;
      for (int sg : {1, -1}) {
        const cplx cpm = I * kh.cast<cplx>().dot(c) + double(sg) * khp.cast<cplx>().dot(c);
        s += cpm / cplx(p.delta, mu - sg);
      }
      out.add({k1, k2}, mu, 0.5 * area * s);
    }
  }
  return out;
}

cplx compute_cT3_quadrature(const TorusGeometry& g, const std::function<CVec2(double)>& c,
                            const Vec2& kh, double delta, double tau) {
  const Vec2 khp(-kh(1), kh(0));
  cplx acc = 0.0;
  static const GaussRule g16 = gauss_legendre(16, 0.0, 1.0);
  const double smax = tail_length(delta);
  for (int sg : {1, -1}) {
    for (double lo = 0.0; lo < smax; lo += 1.0) {
      const double hi = std::min(lo + 1.0, smax);
      for (std::size_t q = 0; q < g16.x.size(); ++q) {
        const double s = lo + (hi - lo) * g16.x[q];
        const CVec2 v = c(tau - s);
        const cplx cpm = I * kh.cast<cplx>().dot(v) + double(sg) * khp.cast<cplx>().dot(v);
        acc += cpm * std::exp(cplx(-delta * s, sg * s)) * ((hi - lo) * g16.w[q]);
      }
    }
  }
  return 0.5 * g.a1 * g.a2 * acc;
}

CVec3 vint_mode(const TorusGeometry& g, int k1, int k2, cplx cB3, cplx cT3, const LayerParams& p,
                double z, LiftProfile lift) {
  const double area = g.a1 * g.a2;
  const cplx b = cB3 / area, tt = cT3 / area;
  const double eta = p.eta();
  const cplx top = p.epsilon * p.nu * p.beta * tt;
  const cplx bot = eta * b;
  double gz = 0.0, dgz = 0.0;
  switch (lift) {
    case LiftProfile::Linear:
      gz = z / g.a;
      dgz = 1.0 / g.a;
      break;
    case LiftProfile::Quadratic:
      gz = (z / g.a) * (z / g.a);
      dgz = 2.0 * z / (g.a * g.a);
      break;
  }
  CVec3 out = CVec3::Zero();
  out(2) = top * gz + bot * (1.0 - gz);
  if (k1 == 0 && k2 == 0) {
    if (std::abs(bot - top) > 1e-14 * (1.0 + std::abs(bot) + std::abs(top)))
      throw InvalidArgument("corrector_vint: nonzero horizontal mean in the flux difference");
    return out;
  }
  const Vec2 kh = horizontal_wavevector(g, k1, k2);
  out.head<2>() = -(I * kh.cast<cplx>() / kh.squaredNorm()) * (dgz * (bot - top));
  return out;
}

CVec3 corrector_vint(const TorusGeometry& g, const std::map<HorizontalKey, cplx>& cB3,
                     const std::map<HorizontalKey, cplx>& cT3, const LayerParams& p,
                     const Vec2& xh, double z, LiftProfile lift) {
  std::map<HorizontalKey, std::pair<cplx, cplx>> all;
  for (const auto& [k, v] : cB3) all[k].first = v;
  for (const auto& [k, v] : cT3) all[k].second = v;
  CVec3 out = CVec3::Zero();
  for (const auto& [k, v] : all) {
    const Vec2 kh = horizontal_wavevector(g, k.first, k.second);
    out += vint_mode(g, k.first, k.second, v.first, v.second, p, z, lift) *
           std::exp(I * kh.dot(xh));
  }
  return out;
}

cplx sigma_projection(const TorusGeometry& g, const ModeIndex& k, cplx cB, cplx dcB, cplx cT,
                      cplx dcT, const LayerParams& p, double s) {
  if (k.horizontal_zero()) return 0.0;
  const Vec3 kp = wavevector(g, k);
  const double kh = std::hypot(kp(0), kp(1));
  const double pref = 1.0 / std::sqrt(g.volume());
  const double eta = p.eta();
  const double en = p.epsilon * p.nu * p.beta;
  if (k.k3 == 0) return pref / kh * (eta * cB - en * cT);
  const double lam = eigenvalue(g, k);
  const double sgn = (k.k3 % 2 == 0) ? 1.0 : -1.0;
  return -I * pref * kh / (kp(2) * kp.norm()) * std::exp(I * (lam * s)) *
         (eta * dcB - sgn * en * dcT);
}

cplx sbar_coefficient(const TorusGeometry& g, const ModeIndex& k, const OscillatorySeries& cB,
                      const OscillatorySeries& cT, const LayerParams& p) {
  if (k.horizontal_zero()) return 0.0;
  const Vec3 kp = wavevector(g, k);
  const double kh = std::hypot(kp(0), kp(1));
  const double lam = eigenvalue(g, k);
  const double sgn = (k.k3 % 2 == 0) ? 1.0 : -1.0;
  const HorizontalKey key{k.k1, k.k2};
  return kh / (std::sqrt(g.volume()) * kp.squaredNorm()) *
         (p.eta() * cB.mean_at(key, -lam) -
          sgn * p.beta * p.epsilon * p.nu * cT.mean_at(key, -lam));
}

DeltaUintResult compute_delta_uint(const TorusGeometry& g, int truncation, int out_truncation,
                                   const SpectralField& w, const OscillatorySeries& cB,
                                   const OscillatorySeries& cT, const LayerParams& p,
                                   const std::vector<double>& tau_grid) {
  if (tau_grid.empty() || tau_grid.front() != 0.0)
    throw InvalidArgument("compute_delta_uint: tau grid must start at 0");
  for (std::size_t i = 1; i < tau_grid.size(); ++i)
    if (!(tau_grid[i] > tau_grid[i - 1]))
      throw InvalidArgument("compute_delta_uint: tau grid must be increasing");
  for (std::size_t i = 0; i < w.size(); ++i)
    if (w[i] != cplx(0.0) && !ModeSet(truncation).contains(w.modes().mode(i)))
      throw InvalidArgument("compute_delta_uint: w has modes beyond the truncation");

  const int nmax = std::max(truncation, out_truncation);
  const SpectralField wt = w.retruncated(nmax);
  QTauOperator q(g, nmax);
  const auto terms = q.terms(wt, wt);
  const ModeSet outset(out_truncation);

  // Source integrand per output mode, integrated panel by panel.
  std::vector<cplx> sbar(outset.size());
  for (std::size_t i = 0; i < outset.size(); ++i)
    sbar[i] = sbar_coefficient(g, outset.mode(i), cB, cT, p);
  auto integrand = [&](std::size_t i, double s) {
    const ModeIndex k = outset.mode(i);
    if (k.horizontal_zero()) return cplx(0.0);
    const HorizontalKey key{k.k1, k.k2};
    return sbar[i] - sigma_projection(g, k, cB.value(key, s), cB.dtau(key, s), cT.value(key, s),
                                      cT.dtau(key, s), p, s);
  };

  DeltaUintResult res;
  std::vector<cplx> src(outset.size(), 0.0);
  static const GaussRule g10 = gauss_legendre(10, 0.0, 1.0);
  double prev = 0.0;
  for (double tau : tau_grid) {
    const int pieces = std::max(1, int(std::ceil((tau - prev) / 0.25)));
    const double hstep = (tau - prev) / pieces;
    for (int piece = 0; piece < pieces; ++piece) {
      const double lo = prev + piece * hstep;
      for (std::size_t qn = 0; qn < g10.x.size(); ++qn) {
        const double s = lo + hstep * g10.x[qn];
        for (std::size_t i = 0; i < outset.size(); ++i)
          src[i] += integrand(i, s) * (hstep * g10.w[qn]);
      }
    }
    prev = tau;

    SpectralField full(g, nmax);
    for (const auto& t : terms) {
      if (t.resonant) continue;
      const cplx ph = (std::exp(I * (t.detuning * tau)) - 1.0) / (I * t.detuning);
      full[t.m] -= p.epsilon * t.alpha * wt[t.k] * wt[t.l] * ph;
    }
    SpectralField out = full.retruncated(out_truncation);
    for (std::size_t i = 0; i < outset.size(); ++i) out[i] += src[i];
    res.taus.push_back(tau);
    res.fields.push_back(semigroup_apply(out, tau, 1));
  }
  return res;
}

// ----------------------------------------------------------------- residuals

LayerResidual layer_residual(const std::function<CVec2(double, double)>& profile, double delta,
                             const std::vector<double>& taus, const std::vector<double>& zetas,
                             double h) {
  LayerResidual r;
  for (double tau : taus)
    for (double z : zetas) {
      if (z - h < 0.0) throw InvalidArgument("layer_residual: zeta - h must be nonnegative");
      const CVec2 u = profile(tau, z);
      const CVec2 ut = (profile(tau + h, z) - profile(tau - h, z)) / (2.0 * h);
      const CVec2 uzz = (profile(tau, z + h) - 2.0 * u + profile(tau, z - h)) / (h * h);
      const CVec2 res = ut - uzz + perp(u) + delta * u;
      r.max_residual = std::max(r.max_residual, res.cwiseAbs().maxCoeff());
      r.max_value = std::max(r.max_value, u.cwiseAbs().maxCoeff());
    }
  return r;
}

double psi_ode_residual(const std::vector<double>& xs, double h) {
  double m = 0.0;
  for (double x : xs) {
    const double d1 = (psi(x + h) - psi(x - h)) / (2.0 * h);
    const double d2 = (psi(x + h) - 2.0 * psi(x) + psi(x - h)) / (h * h);
    m = std::max(m, std::abs(-0.5 * x * d1 - d2));
  }
  return m;
}

}  // namespace rotwind
