#include "rotwind/ekman_sources.hpp"

#include <cmath>

#include "rotwind/errors.hpp"
#include "rotwind/quadrature.hpp"

namespace rotwind {

namespace {

const cplx I(0.0, 1.0);

double parity(int k3) { return (k3 % 2 == 0) ? 1.0 : -1.0; }

}  // namespace

cplx pumping_coefficient_A(const TorusGeometry& g, const ModeIndex& k) {
  if (k.is_zero()) throw InvalidArgument("pumping coefficient: k = 0 is not a mode");
  if (k.horizontal_zero()) return 0.0;
  const Vec3 kp = wavevector(g, k);
  const double lam = eigenvalue(g, k);
  if (std::abs(std::abs(lam) - 1.0) < 1e-15)
    throw NumericalError("pumping coefficient: |lambda| = 1 with k_h != 0");
  // ratio first so that k3 = 0 gives exactly 1/(sqrt2 a)
  const double ratio = (kp(0) * kp(0) + kp(1) * kp(1)) / kp.squaredNorm();
  cplx s = 0.0;
  for (int sg : {1, -1})
    s += (1.0 + sg * lam) / std::sqrt(1.0 - sg * lam) * cplx(1.0, double(sg));
  return ratio / (2.0 * std::sqrt(2.0) * g.a) * s;
}

SpectralField S_B_apply(const SpectralField& w) {
  SpectralField out = w;
  for (std::size_t i = 0; i < out.size(); ++i)
    if (out[i] != cplx(0.0)) out[i] *= pumping_coefficient_A(w.geometry(), w.modes().mode(i));
  return out;
}

namespace {

// E_{-lambda_k}[sigma_hat(k_h)] with the unnormalized convention sigma_hat = a1 a2 c.
CVec2 sigma_hat_mean(const WindStress& ws, const ModeIndex& k, double t, const PhasePoint& w) {
  const TorusGeometry& g = ws.geometry();
  return (g.a1 * g.a2 * ws.envelope(t)) * ergodic_limit(ws, k.k1, k.k2, -eigenvalue(g, k), w);
}

template <class F>
SpectralField assemble_top(const WindStress& ws, double t, const PhasePoint& w, int truncation,
                           F&& coefficient) {
  const TorusGeometry& g = ws.geometry();
  SpectralField out(g, truncation);
  std::vector<std::pair<int, int>> support = ws.horizontal_support();
  for (std::size_t i = 0; i < out.size(); ++i) {
    const ModeIndex k = out.modes().mode(i);
    if (k.horizontal_zero()) continue;
    bool present = false;
    for (const auto& [a, b] : support) present |= (a == k.k1 && b == k.k2);
    if (!present) continue;
    const CVec2 s = sigma_hat_mean(ws, k, t, w);
    if (s.isZero(0.0)) continue;
    out[i] = coefficient(k, s);
  }
  return out;
}

}  // namespace

SpectralField S_T_delta(const WindStress& ws, double delta, double t, const PhasePoint& w,
                        int truncation) {
  if (!(delta > 0.0)) throw InvalidArgument("S_T_delta: delta must be positive");
  const TorusGeometry& g = ws.geometry();
  const double pref = 0.5 / std::sqrt(g.volume());
  return assemble_top(ws, t, w, truncation, [&](const ModeIndex& k, const CVec2& s) {
    const Vec3 kp = wavevector(g, k);
    const Vec2 kh = kp.head<2>();
    const Vec2 khp(-kh(1), kh(0));
    const double lam = eigenvalue(g, k);
    cplx acc = 0.0;
    for (int sg : {1, -1}) {
      const cplx spm = I * kh.cast<cplx>().dot(s) + double(sg) * khp.cast<cplx>().dot(s);
      acc += spm / cplx(-delta, lam + sg);
    }
    return pref * parity(k.k3) * kh.norm() / kp.squaredNorm() * acc;
  });
}

SpectralField S_T_limit(const WindStress& ws, double t, const PhasePoint& w, int truncation,
                        double h2_eta) {
  const TorusGeometry& g = ws.geometry();
  const double pref = 1.0 / std::sqrt(g.volume());
  return assemble_top(ws, t, w, truncation, [&](const ModeIndex& k, const CVec2& s) {
    const Vec3 kp = wavevector(g, k);
    const Vec2 kh = kp.head<2>();
    const Vec2 khp(-kh(1), kh(0));
    const double lam = eigenvalue(g, k);
    if (std::min(std::abs(lam - 1.0), std::abs(lam + 1.0)) < h2_eta)
      throw HypothesisError("S_T_limit: forcing frequency within " + std::to_string(h2_eta) +
                            " of an inertial frequency at mode " + k.str());
    const CVec2 v = lam * kh.cast<cplx>() + I * khp.cast<cplx>();
    return cplx(-pref * parity(k.k3) / kh.norm() * v.cwiseProduct(s).sum());
  });
}

SpectralField S_T_limit_mean(const WindStress& ws, double t, int truncation) {
  const WindStress d = ws.deterministic_part();
  return S_T_limit(d, t, d.zero_phases(), truncation);
}

SpectralField S_bar(const TorusGeometry& g, int truncation, const OscillatorySeries& cB,
                    const OscillatorySeries& cT, const LayerParams& p) {
  SpectralField out(g, truncation);
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = sbar_coefficient(g, out.modes().mode(i), cB, cT, p);
  return out;
}

SpectralField source_average_Stheta(const TorusGeometry& g, int truncation,
                                    const OscillatorySeries& cB, const OscillatorySeries& cT,
                                    const LayerParams& p, double theta, LiftProfile lift,
                                    double panel_length) {
  if (!(theta > 0.0)) throw InvalidArgument("source_average_Stheta: theta must be positive");
  SpectralField out(g, truncation);
  const GaussRule zq = gauss_legendre(12 * truncation + 32, 0.0, g.a);
  const double area = g.a1 * g.a2;

  struct Response {
    std::size_t index;
    HorizontalKey key;
    double lambda;
    cplx dB, dT, B, T;  // coefficients of dcB, dcT, cB, cT
  };
  std::vector<Response> resp;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const ModeIndex k = out.modes().mode(i);
    const HorizontalKey key{k.k1, k.k2};
    if (!cB.terms.count(key) && !cT.terms.count(key)) continue;
    Response r{i, key, eigenvalue(g, k), 0.0, 0.0, 0.0, 0.0};
    for (std::size_t q = 0; q < zq.x.size(); ++q) {
      const CVec3 prof = mode_profile(g, k, zq.x[q]);
      const CVec3 vb = vint_mode(g, k.k1, k.k2, 1.0, 0.0, p, zq.x[q], lift);
      const CVec3 vt = vint_mode(g, k.k1, k.k2, 0.0, 1.0, p, zq.x[q], lift);
      const double wq = area * zq.w[q];
      r.dB += wq * prof.dot(vb);
      r.dT += wq * prof.dot(vt);
      r.B += wq * prof.dot(e3_wedge(vb));
      r.T += wq * prof.dot(e3_wedge(vt));
    }
    resp.push_back(r);
  }
  const GaussRule tq = gauss_legendre(8, 0.0, 1.0);
  const int panels = std::max(1, int(std::ceil(theta / panel_length)));
  const double h = theta / panels;
  std::vector<cplx> acc(resp.size(), 0.0);
  for (int pn = 0; pn < panels; ++pn)
    for (std::size_t q = 0; q < tq.x.size(); ++q) {
      const double tau = (pn + tq.x[q]) * h;
      const double wt = h * tq.w[q];
      for (std::size_t j = 0; j < resp.size(); ++j) {
        const Response& r = resp[j];
        const cplx val = r.dB * cB.dtau(r.key, tau) + r.dT * cT.dtau(r.key, tau) +
                         r.B * cB.value(r.key, tau) + r.T * cT.value(r.key, tau);
        acc[j] += wt * std::exp(I * (r.lambda * tau)) * val;
      }
    }
  for (std::size_t j = 0; j < resp.size(); ++j) out[resp[j].index] = acc[j] / theta;
  return out;
}

}  // namespace rotwind
