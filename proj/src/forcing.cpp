#include "rotwind/forcing.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <set>

#include "rotwind/errors.hpp"
#include "rotwind/json_util.hpp"
#include "rotwind/quadrature.hpp"

namespace rotwind {

namespace {

cplx expi(double x) { return {std::cos(x), std::sin(x)}; }

// (e^{i d theta} - 1) / (i d theta), continuous at d = 0.
cplx mean_phase(double d, double theta) {
  const double x = d * theta;
  if (std::abs(x) < 1e-8) return {1.0, 0.5 * x};
  return (expi(x) - 1.0) / cplx(0.0, x);
}

double phase_value(const SpectralLine& l, const PhasePoint& w) {
  return l.phase < 0 ? 0.0 : l.sign * w.at(static_cast<std::size_t>(l.phase));
}

}  // namespace

WindStress WindStress::deterministic_part() const {
  std::vector<WindMode> det = modes_;
  for (auto& m : det) std::erase_if(m.atoms, [](const FrequencyAtom& a) { return a.phase >= 0; });
  return WindStress(g_, det, base_, env_);
}

WindStress::WindStress(const TorusGeometry& g, std::vector<WindMode> modes,
                       std::vector<double> base_frequencies, std::vector<double> envelope)
    : g_(g), modes_(std::move(modes)), base_(std::move(base_frequencies)), env_(std::move(envelope)) {
  g_.validate();
  if (env_.empty()) env_ = {1.0};
  for (const auto& m : modes_)
    for (const auto& a : m.atoms) {
      if (!std::isfinite(a.mu) || !a.coeff.allFinite())
        throw InvalidArgument("wind atom has non-finite data");
      if (a.phase >= static_cast<int>(base_.size()))
        throw InvalidArgument("wind atom phase index out of range");
      if (a.phase >= 0 && std::abs(base_[a.phase] - a.mu) > 1e-12 * std::max(1.0, std::abs(a.mu)))
        throw InvalidArgument("wind atom frequency differs from its base frequency");
    }
  rebuild_lines();
}

void WindStress::rebuild_lines() {
  lines_.clear();
  for (const auto& m : modes_)
    for (const auto& a : m.atoms) {
      lines_.push_back({m.k1, m.k2, a.mu, a.coeff, a.phase, 1});
      lines_.push_back({-m.k1, -m.k2, -a.mu, a.coeff.conjugate(), a.phase, -1});
    }
}

WindStress WindStress::from_json(const TorusGeometry& g, const nlohmann::json& j,
                                 const std::string& path) {
  using namespace jsonu;
  check_keys(j, path, {"modes", "base_frequencies", "seed", "envelope"});
  std::vector<double> base;
  if (j.contains("base_frequencies")) {
    const std::string bp = join(path, "base_frequencies");
    const auto& arr = array(j.at("base_frequencies"), bp);
    for (std::size_t i = 0; i < arr.size(); ++i) base.push_back(number(arr[i], index(bp, i)));
  }
  std::vector<double> env{1.0};
  if (j.contains("envelope")) {
    const std::string ep = join(path, "envelope");
    env.clear();
    const auto& arr = array(j.at("envelope"), ep);
    for (std::size_t i = 0; i < arr.size(); ++i) env.push_back(number(arr[i], index(ep, i)));
  }
  std::vector<WindMode> modes;
  const std::string mp = join(path, "modes");
  const auto& marr = array(field(j, path, "modes"), mp);
  for (std::size_t i = 0; i < marr.size(); ++i) {
    const std::string p = index(mp, i);
    check_keys(marr[i], p, {"kh", "atoms"});
    const auto& kh = array(field(marr[i], p, "kh"), join(p, "kh"));
    if (kh.size() != 2) throw ConfigError(join(p, "kh"), "expected two integers");
    WindMode m;
    m.k1 = static_cast<int>(integer(kh[0], index(join(p, "kh"), 0)));
    m.k2 = static_cast<int>(integer(kh[1], index(join(p, "kh"), 1)));
    const std::string ap = join(p, "atoms");
    const auto& aarr = array(field(marr[i], p, "atoms"), ap);
    for (std::size_t q = 0; q < aarr.size(); ++q) {
      const std::string pa = index(ap, q);
      check_keys(aarr[q], pa, {"mu", "re1", "im1", "re2", "im2", "phase"});
      FrequencyAtom a;
      a.mu = number(field(aarr[q], pa, "mu"), join(pa, "mu"));
      a.coeff = CVec2(cplx(number_or(aarr[q], pa, "re1", 0.0), number_or(aarr[q], pa, "im1", 0.0)),
                      cplx(number_or(aarr[q], pa, "re2", 0.0), number_or(aarr[q], pa, "im2", 0.0)));
      if (aarr[q].contains("phase")) {
        a.phase = static_cast<int>(integer(aarr[q].at("phase"), join(pa, "phase")));
        if (a.phase >= static_cast<int>(base.size()) || a.phase < -1)
          throw ConfigError(join(pa, "phase"), "phase index out of range");
        if (a.phase >= 0 && std::abs(base[a.phase] - a.mu) > 1e-12 * std::max(1.0, std::abs(a.mu)))
          throw ConfigError(join(pa, "mu"), "atom frequency differs from its base frequency");
      } else {
        a.phase = -2;
        for (std::size_t b = 0; b < base.size(); ++b)
          if (std::abs(base[b] - a.mu) <= 1e-12 * std::max(1.0, std::abs(a.mu))) {
            a.phase = static_cast<int>(b);
            break;
          }
        if (a.phase == -2) {
          if (a.mu != 0.0)
            throw ConfigError(join(pa, "mu"), "atom frequency is not a base frequency");
          a.phase = -1;
        }
      }
      m.atoms.push_back(a);
    }
    modes.push_back(std::move(m));
  }
  return WindStress(g, std::move(modes), std::move(base), std::move(env));
}

nlohmann::json WindStress::to_json() const {
  nlohmann::json modes = nlohmann::json::array();
  for (const auto& m : modes_) {
    nlohmann::json atoms = nlohmann::json::array();
    for (const auto& a : m.atoms)
      atoms.push_back({{"mu", a.mu},
                       {"re1", a.coeff(0).real()},
                       {"im1", a.coeff(0).imag()},
                       {"re2", a.coeff(1).real()},
                       {"im2", a.coeff(1).imag()},
                       {"phase", a.phase}});
    modes.push_back({{"kh", {m.k1, m.k2}}, {"atoms", atoms}});
  }
  return {{"modes", modes}, {"base_frequencies", base_}, {"envelope", env_}};
}

double WindStress::envelope(double t) const {
  double v = 0.0;
  for (auto it = env_.rbegin(); it != env_.rend(); ++it) v = v * t + *it;
  return v;
}

PhasePoint WindStress::sample_phases(std::mt19937_64& rng) const {
  std::uniform_real_distribution<double> u(0.0, 2.0 * kPi);
  PhasePoint w(base_.size());
  for (auto& p : w) p = u(rng);
  return w;
}

PhasePoint WindStress::shift(const PhasePoint& w, double s) const {
  PhasePoint out = w;
  for (std::size_t j = 0; j < out.size(); ++j) out[j] += base_[j] * s;
  return out;
}

Vec2 WindStress::sample(double t, double tau, const Vec2& xh, const PhasePoint& w) const {
  CVec2 s = CVec2::Zero();
  for (const auto& l : lines_) {
    const double kx = 2.0 * kPi * (l.k1 * xh(0) / g_.a1 + l.k2 * xh(1) / g_.a2);
    s += l.amp * expi(kx + l.mu * tau + phase_value(l, w));
  }
  return envelope(t) * s.real();
}

CVec2 WindStress::mode_amplitude(int k1, int k2, double t, double tau, const PhasePoint& w) const {
  CVec2 s = CVec2::Zero();
  for (const auto& l : lines_)
    if (l.k1 == k1 && l.k2 == k2) s += l.amp * expi(l.mu * tau + phase_value(l, w));
  return envelope(t) * s;
}

std::vector<std::pair<double, CVec2>> WindStress::mode_spectrum(int k1, int k2,
                                                                const PhasePoint& w) const {
  std::vector<std::pair<double, CVec2>> out;
  for (const auto& l : lines_)
    if (l.k1 == k1 && l.k2 == k2) out.emplace_back(l.mu, l.amp * expi(phase_value(l, w)));
  return out;
}

std::vector<std::pair<int, int>> WindStress::horizontal_support() const {
  std::set<std::pair<int, int>> s;
  for (const auto& l : lines_)
    if (l.amp.norm() > 0.0) s.insert({l.k1, l.k2});
  return {s.begin(), s.end()};
}

double WindStress::distance_to_inertial() const {
  double d = std::numeric_limits<double>::infinity();
  for (const auto& l : lines_)
    if (l.amp.norm() > 0.0) d = std::min({d, std::abs(l.mu - 1.0), std::abs(l.mu + 1.0)});
  return d;
}

CVec2 spectral_density_Falpha(const WindStress& ws, double lambda, double alpha, int k1, int k2,
                              const PhasePoint& w) {
  if (!(alpha > 0.0)) throw InvalidArgument("alpha must be positive");
  CVec2 s = CVec2::Zero();
  for (const auto& [mu, amp] : ws.mode_spectrum(k1, k2, w))
    s += amp * (2.0 * alpha / (alpha * alpha + (mu - lambda) * (mu - lambda)));
  return s / (2.0 * kPi);
}

double lorentzian_sum(const std::vector<double>& mu, const std::vector<double>& phi, double lambda,
                      double alpha) {
  if (!(alpha > 0.0)) throw InvalidArgument("alpha must be positive");
  double s = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i)
    s += phi[i] * 2.0 * alpha / (alpha * alpha + (mu[i] - lambda) * (mu[i] - lambda));
  return s;
}

double falpha_l1_norm(const std::vector<double>& mu, const std::vector<double>& phi, double alpha) {
  using boost::math::quadrature::gauss_kronrod;
  if (mu.empty()) return 0.0;
  std::vector<double> m = mu;
  std::sort(m.begin(), m.end());
  m.erase(std::unique(m.begin(), m.end()), m.end());
  auto f = [&](double lam) { return std::abs(lorentzian_sum(mu, phi, lam, alpha)) / (2.0 * kPi); };
  double total = 0.0;
  for (std::size_t j = 0; j < m.size(); ++j) {
    const double left = j == 0 ? -std::numeric_limits<double>::infinity() : 0.5 * (m[j - 1] + m[j]);
    const double right =
        j + 1 == m.size() ? std::numeric_limits<double>::infinity() : 0.5 * (m[j] + m[j + 1]);
    for (double end : {left, right}) {
      const double thmax = std::isinf(end) ? 0.5 * kPi : std::atan(std::abs(end - m[j]) / alpha);
      const double dir = end > m[j] ? 1.0 : -1.0;
      auto g = [&](double th) {
        const double c = std::cos(th);
        return f(m[j] + dir * alpha * std::tan(th)) * alpha / (c * c);
      };
      total += gauss_kronrod<double, 61>::integrate(g, 0.0, thmax, 20, 1e-12);
    }
  }
  return total;
}

H1Report check_H1(const WindStress& ws) {
  H1Report r;
  for (const auto& [k1, k2] : ws.horizontal_support()) {
    double s = 0.0;
    for (const auto& [mu, amp] : ws.mode_spectrum(k1, k2, ws.zero_phases())) s += amp.norm();
    r.bound = std::max(r.bound, s);
  }
  r.holds = std::isfinite(r.bound);
  return r;
}

H2Report check_H2(const WindStress& ws, double eta, const std::vector<double>& alphas) {
  H2Report r;
  r.distance = ws.distance_to_inertial();
  r.holds = eta > 0.0 && r.distance >= eta;
  const std::vector<double> as = alphas.empty() ? std::vector<double>{1e-1, 1e-2, 1e-3} : alphas;
  const PhasePoint w = ws.zero_phases();
  for (double a : as) {
    double sup = 0.0;
    for (const auto& [k1, k2] : ws.horizontal_support())
      for (double c : {-1.0, 1.0})
        for (int i = 0; i <= 2000; ++i) {
          const double lam = c - 0.5 * eta + eta * i / 2000.0;
          sup = std::max(sup, spectral_density_Falpha(ws, lam, a, k1, k2, w).norm());
        }
    r.curve.emplace_back(a, sup);
  }
  return r;
}

ScalarProcess h2_counterexample(int count) {
  ScalarProcess p;
  for (int n = 1; n <= count; ++n) {
    p.mu.push_back(1.0 - 1.0 / n);
    p.phi.push_back(std::ldexp(1.0, -n));
  }
  return p;
}

SigmaAlphaResult reconstruct_sigma_alpha(const std::function<Vec2(double)>& sigma, double alpha,
                                         double tau) {
  if (!(alpha > 0.0)) throw InvalidArgument("alpha must be positive");
  // Offset r = alpha s in [-50, 50]; Lorentzian weight alpha / (pi (alpha^2 + r^2)).
  const double rmax = 50.0, core = 20.0 * alpha;
  std::set<double> bp{-rmax, rmax, -core, core};
  for (double r = core * 2.0; r < 0.5; r *= 2.0) {
    bp.insert(r);
    bp.insert(-r);
  }
  for (double r = 0.5; r < rmax; r += 0.5) {
    bp.insert(r);
    bp.insert(-r);
  }
  if (-tau > -rmax && -tau < rmax) bp.insert(-tau);
  const std::vector<double> pts(bp.begin(), bp.end());
  const GaussRule g20 = gauss_legendre(20, -1.0, 1.0);
  const GaussRule g40 = gauss_legendre(40, -1.0, 1.0);
  Vec2 acc = Vec2::Zero();
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const double lo = pts[i], hi = pts[i + 1];
    if (lo >= -core && hi <= core) {
      const double t0 = std::atan(lo / alpha), t1 = std::atan(hi / alpha);
      for (std::size_t q = 0; q < g40.x.size(); ++q) {
        const double th = 0.5 * (t0 + t1) + 0.5 * (t1 - t0) * g40.x[q];
        const double r = alpha * std::tan(th);
        acc += 0.5 * (t1 - t0) * g40.w[q] / kPi * std::exp(-alpha * std::abs(tau + r)) * sigma(tau + r);
      }
    } else {
      for (std::size_t q = 0; q < g20.x.size(); ++q) {
        const double r = 0.5 * (lo + hi) + 0.5 * (hi - lo) * g20.x[q];
        const double wgt = alpha / (kPi * (alpha * alpha + r * r));
        acc += 0.5 * (hi - lo) * g20.w[q] * wgt * std::exp(-alpha * std::abs(tau + r)) * sigma(tau + r);
      }
    }
  }
  SigmaAlphaResult res;
  res.value = acc;
  res.tail_bound = (2.0 / kPi) * (0.5 * kPi - std::atan(rmax / alpha));
  return res;
}

SigmaAlphaResult reconstruct_sigma_alpha(const WindStress& ws, double alpha, double t, double tau,
                                         const Vec2& xh, const PhasePoint& w) {
  auto f = [&](double s) { return ws.sample(t, s, xh, w); };
  SigmaAlphaResult r = reconstruct_sigma_alpha(f, alpha, tau);
  double sup = 0.0;
  for (const auto& l : ws.lines()) sup += l.amp.norm();
  r.tail_bound *= sup * std::abs(ws.envelope(t));
  return r;
}

CVec2 ergodic_average(const WindStress& ws, int k1, int k2, double lambda, double theta,
                      const PhasePoint& w) {
  if (!(theta > 0.0)) throw InvalidArgument("theta must be positive");
  CVec2 s = CVec2::Zero();
  for (const auto& [mu, amp] : ws.mode_spectrum(k1, k2, w)) s += amp * mean_phase(mu - lambda, theta);
  return s;
}

CVec2 ergodic_limit(const WindStress& ws, int k1, int k2, double lambda, const PhasePoint& w,
                    double tol) {
  CVec2 s = CVec2::Zero();
  for (const auto& [mu, amp] : ws.mode_spectrum(k1, k2, w))
    if (std::abs(mu - lambda) <= tol) s += amp;
  return s;
}

cplx ergodic_average(const std::function<cplx(double)>& phi, double lambda, double theta) {
  if (!(theta > 0.0)) throw InvalidArgument("theta must be positive");
  const int panels = std::max(1, static_cast<int>(std::ceil(theta)));
  const GaussRule g = gauss_legendre(16, -1.0, 1.0);
  const double h = theta / panels;
  cplx s(0.0);
  for (int p = 0; p < panels; ++p)
    for (std::size_t q = 0; q < g.x.size(); ++q) {
      const double tau = (p + 0.5) * h + 0.5 * h * g.x[q];
      s += 0.5 * h * g.w[q] * phi(tau) * expi(-lambda * tau);
    }
  return s / theta;
}

std::vector<std::vector<int>> rational_relations(const std::vector<double>& base, int maxcoef) {
  std::vector<std::vector<int>> rel;
  const std::size_t d = base.size();
  for (std::size_t j = 0; j < d; ++j)
    if (base[j] == 0.0) {
      std::vector<int> v(d, 0);
      v[j] = 1;
      rel.push_back(v);
    }
  std::vector<std::size_t> idx;
  for (std::size_t j = 0; j < d; ++j)
    if (base[j] != 0.0) idx.push_back(j);
  // All subsets of size 2..min(4, |idx|).
  const std::size_t n = idx.size();
  for (std::size_t mask = 1; mask < (std::size_t(1) << n); ++mask) {
    std::vector<std::size_t> sub;
    for (std::size_t b = 0; b < n; ++b)
      if (mask & (std::size_t(1) << b)) sub.push_back(idx[b]);
    if (sub.size() < 2 || sub.size() > 4) continue;
    std::vector<int> c(sub.size(), 1);
    // Enumerate nonzero coefficient vectors with first entry positive.
    std::function<void(std::size_t)> rec = [&](std::size_t pos) {
      if (pos == sub.size()) {
        double s = 0.0, scale = 0.0;
        for (std::size_t i = 0; i < sub.size(); ++i) {
          s += c[i] * base[sub[i]];
          scale += std::abs(c[i] * base[sub[i]]);
        }
        if (std::abs(s) <= 1e-12 * scale) {
          std::vector<int> v(d, 0);
          for (std::size_t i = 0; i < sub.size(); ++i) v[sub[i]] = c[i];
          rel.push_back(v);
        }
        return;
      }
      const int lo = pos == 0 ? 1 : -maxcoef;
      for (int v = lo; v <= maxcoef; ++v) {
        if (v == 0) continue;
        c[pos] = v;
        rec(pos + 1);
      }
    };
    rec(0);
  }
  return rel;
}

}  // namespace rotwind
