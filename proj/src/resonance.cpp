#include "rotwind/resonance.hpp"

#include <boost/multiprecision/cpp_int.hpp>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include "rotwind/errors.hpp"

namespace rotwind {

namespace {

using boost::multiprecision::cpp_int;

int sgn(const cpp_int& v) { return v > 0 ? 1 : (v < 0 ? -1 : 0); }

// sum_i x_i / sqrt(D_i) == 0 for integers x_i and D_i > 0.
bool radical_sum_zero(std::vector<std::pair<std::int64_t, std::int64_t>> t) {
  std::erase_if(t, [](const auto& e) { return e.first == 0; });
  if (t.empty()) return true;
  if (t.size() == 1) return false;
  if (t.size() == 2) {
    const cpp_int x = t[0].first, a = t[0].second, y = t[1].first, b = t[1].second;
    return sgn(x) == -sgn(y) && x * x * b == y * y * a;
  }
  const cpp_int x = t[0].first, a = t[0].second;
  const cpp_int y = t[1].first, b = t[1].second;
  const cpp_int z = t[2].first, c = t[2].second;
  const cpp_int s = x * x * b * c + y * y * a * c - z * z * a * b;
  if (s * s != 4 * x * x * y * y * a * b * c * c) return false;
  if (sgn(x) * sgn(y) != -sgn(s)) return false;
  int sum_sign;
  if (sgn(x) == sgn(y)) {
    sum_sign = sgn(x);
  } else {
    const cpp_int px = x * x * b, qy = y * y * a;
    if (px == qy) return false;
    sum_sign = px > qy ? sgn(x) : sgn(y);
  }
  return sum_sign == -sgn(z);
}

std::vector<int> vertical_candidates(int m3, int k3, int n) {
  std::set<int> s{m3 - k3, m3 + k3, k3 - m3, -m3 - k3};
  std::vector<int> out;
  for (int v : s)
    if (std::abs(v) <= n) out.push_back(v);
  return out;
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string hex_bits(double v) {
  std::uint64_t b;
  std::memcpy(&b, &v, sizeof b);
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(b));
  return buf;
}

}  // namespace

EigenvalueRelation::EigenvalueRelation(const TorusGeometry& g, double tol)
    : g_(g), tol_(tol), metric_(RationalMetric::detect(g)) {}

bool EigenvalueRelation::holds(int s1, const ModeIndex& a, int s2, const ModeIndex& b, int s3,
                               const ModeIndex& c) const {
  const double f = s1 * eigenvalue(g_, a) + s2 * eigenvalue(g_, b) + s3 * eigenvalue(g_, c);
  if (!metric_) return std::abs(f) < tol_;
  if (std::abs(f) > 1e-8) return false;
  return radical_sum_zero({{std::int64_t(s1) * a.k3, metric_->scaled_norm2(a)},
                           {std::int64_t(s2) * b.k3, metric_->scaled_norm2(b)},
                           {std::int64_t(s3) * c.k3, metric_->scaled_norm2(c)}});
}

ModeProfiles::ModeProfiles(const TorusGeometry& g, int truncation, const QuadratureSpec& q)
    : g_(g), modes_(truncation), q_(q), gz_(gauss_legendre(q.nz, 0.0, g.a)), nq_(gz_.x.size()) {
  prof_.resize(modes_.size() * nq_);
  dprof_.resize(modes_.size() * nq_);
  for (std::size_t i = 0; i < modes_.size(); ++i)
    for (std::size_t j = 0; j < nq_; ++j) {
      prof_[i * nq_ + j] = mode_profile(g, modes_.mode(i), gz_.x[j]);
      dprof_[i * nq_ + j] = mode_profile_dz(g, modes_.mode(i), gz_.x[j]);
    }
}

cplx ModeProfiles::advective(const ModeIndex& k, const ModeIndex& l, const ModeIndex& m) const {
  const cplx h = horizontal_trapezoid_factor(g_, k.k1 + l.k1 - m.k1, k.k2 + l.k2 - m.k2, q_.nx, q_.ny);
  if (std::abs(h) < 1e-12 * g_.a1 * g_.a2) return {0.0, 0.0};
  const std::size_t ik = modes_.index(k), il = modes_.index(l), im = modes_.index(m);
  const Vec3 lp = wavevector(g_, l);
  const cplx I(0.0, 1.0);
  cplx s(0.0, 0.0);
  for (std::size_t j = 0; j < nq_; ++j) {
    const CVec3& pk = p(ik, j);
    const cplx grad_h = I * lp(0) * pk(0) + I * lp(1) * pk(1);
    const CVec3 v = grad_h * p(il, j) + pk(2) * dp(il, j);
    s += gz_.w[j] * p(im, j).dot(v);
  }
  return h * s;
}

cplx ModeProfiles::alpha(const ModeIndex& k, const ModeIndex& l, const ModeIndex& m) const {
  return 0.5 * (advective(k, l, m) + advective(l, k, m));
}

cplx interaction_coefficient(const TorusGeometry& g, const ModeIndex& k, const ModeIndex& l,
                             const ModeIndex& m, const QuadratureSpec& q) {
  const int n = std::max({std::abs(k.k1), std::abs(k.k2), std::abs(k.k3), std::abs(l.k1),
                          std::abs(l.k2), std::abs(l.k3), std::abs(m.k1), std::abs(m.k2),
                          std::abs(m.k3)});
  return ModeProfiles(g, n, q).alpha(k, l, m);
}

std::vector<std::pair<ModeIndex, ModeIndex>> resonant_set(const TorusGeometry& g,
                                                          const ModeIndex& m, int truncation,
                                                          double tol) {
  const ModeSet modes(truncation);
  const EigenvalueRelation rel(g, tol);
  std::vector<std::pair<ModeIndex, ModeIndex>> out;
  for (std::size_t i = 0; i < modes.size(); ++i) {
    const ModeIndex k = modes.mode(i);
    const int l1 = m.k1 - k.k1, l2 = m.k2 - k.k2;
    if (std::abs(l1) > truncation || std::abs(l2) > truncation) continue;
    for (int l3 : vertical_candidates(m.k3, k.k3, truncation)) {
      const ModeIndex l{l1, l2, l3};
      if (l.is_zero()) continue;
      if (rel.holds(1, k, 1, l, -1, m)) out.emplace_back(k, l);
    }
  }
  return out;
}

TriadTable TriadTable::build(const TorusGeometry& g, int truncation, double tol, int threads) {
  TriadTable t;
  t.g_ = g;
  t.n_ = truncation;
  t.tol_ = tol;
  const ModeSet modes(truncation);
  const ModeProfiles prof(g, truncation, QuadratureSpec::for_truncation(truncation));
  const EigenvalueRelation rel(g, tol);
  std::vector<std::vector<Triad>> per_m(modes.size());
  auto work = [&](std::size_t first, std::size_t stride) {
    for (std::size_t im = first; im < modes.size(); im += stride) {
      const ModeIndex m = modes.mode(im);
      for (std::size_t ik = 0; ik < modes.size(); ++ik) {
        const ModeIndex k = modes.mode(ik);
        const int l1 = m.k1 - k.k1, l2 = m.k2 - k.k2;
        if (std::abs(l1) > truncation || std::abs(l2) > truncation) continue;
        for (int l3 : vertical_candidates(m.k3, k.k3, truncation)) {
          const ModeIndex l{l1, l2, l3};
          if (l.is_zero() || !rel.holds(1, k, 1, l, -1, m)) continue;
          const cplx a = prof.alpha(k, l, m);
          if (std::abs(a) < 1e-13) continue;
          per_m[im].push_back({static_cast<std::uint32_t>(ik),
                               static_cast<std::uint32_t>(modes.index(l)),
                               static_cast<std::uint32_t>(im), a});
        }
      }
    }
  };
  const int nt = std::max(1, threads);
  if (nt == 1) {
    work(0, 1);
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < nt; ++i) pool.emplace_back(work, std::size_t(i), std::size_t(nt));
    for (auto& th : pool) th.join();
  }
  for (auto& v : per_m) t.triads_.insert(t.triads_.end(), v.begin(), v.end());
  return t;
}

SpectralField TriadTable::qbar_apply(const SpectralField& w1, const SpectralField& w2) const {
  if (!(w1.geometry() == g_) || !(w2.geometry() == g_) || w1.truncation() != n_ ||
      w2.truncation() != n_)
    throw InvalidArgument("qbar_apply: field does not match the triad table");
  SpectralField out(g_, n_);
  for (const Triad& t : triads_) out[t.m] += t.alpha * w1[t.k] * w2[t.l];
  return out;
}

std::string triad_cache_key(const TorusGeometry& g, int truncation, double tol) {
  return "g" + hex_bits(g.a1) + hex_bits(g.a2) + hex_bits(g.a) + "_N" +
         std::to_string(truncation) + "_t" + hex_bits(tol);
}

std::string TriadTable::cache_key() const { return triad_cache_key(g_, n_, tol_); }

nlohmann::json TriadTable::to_json() const {
  const ModeSet modes(n_);
  nlohmann::json rows = nlohmann::json::array();
  for (const Triad& t : triads_) {
    const ModeIndex k = modes.mode(t.k), l = modes.mode(t.l), m = modes.mode(t.m);
    rows.push_back({k.k1, k.k2, k.k3, l.k1, l.k2, l.k3, m.k1, m.k2, m.k3, t.alpha.real(),
                    t.alpha.imag()});
  }
  return {{"key", cache_key()},
          {"geometry", geometry_to_json(g_)},
          {"truncation", n_},
          {"tolerance", tol_},
          {"triads", rows}};
}

TriadTable TriadTable::from_json(const nlohmann::json& j) {
  TriadTable t;
  t.g_ = geometry_from_json(j.at("geometry"));
  t.n_ = j.at("truncation").get<int>();
  t.tol_ = j.at("tolerance").get<double>();
  const ModeSet modes(t.n_);
  for (const auto& r : j.at("triads")) {
    const ModeIndex k{r[0], r[1], r[2]}, l{r[3], r[4], r[5]}, m{r[6], r[7], r[8]};
    t.triads_.push_back({static_cast<std::uint32_t>(modes.index(k)),
                         static_cast<std::uint32_t>(modes.index(l)),
                         static_cast<std::uint32_t>(modes.index(m)),
                         cplx(r[9].get<double>(), r[10].get<double>())});
  }
  return t;
}

TriadTable TriadTable::load_or_build(const std::filesystem::path& cache_dir,
                                     const TorusGeometry& g, int truncation, double tol,
                                     bool rebuild, int threads) {
  const std::string key = triad_cache_key(g, truncation, tol);
  char name[64];
  std::snprintf(name, sizeof name, "triads_%016llx.json",
                static_cast<unsigned long long>(fnv1a(key)));
  const std::filesystem::path file = cache_dir / name;
  if (!rebuild && std::filesystem::exists(file)) {
    try {
      std::ifstream in(file);
      const auto j = nlohmann::json::parse(in);
      if (j.at("key").get<std::string>() == key) return from_json(j);
    } catch (const std::exception&) {
      // unreadable cache: rebuild below
    }
  }
  TriadTable t = build(g, truncation, tol, threads);
  std::filesystem::create_directories(cache_dir);
  const std::filesystem::path tmp = file.string() + ".tmp";
  {
    std::ofstream out(tmp);
    out << t.to_json().dump();
  }
  std::filesystem::rename(tmp, file);
  return t;
}

QTauOperator::QTauOperator(const TorusGeometry& g, int truncation, double tol)
    : g_(g), n_(truncation), prof_(g, truncation, QuadratureSpec::for_truncation(truncation)),
      rel_(g, tol) {}

std::vector<QTauOperator::Term> QTauOperator::terms(const SpectralField& w1,
                                                    const SpectralField& w2) const {
  const ModeSet modes(n_);
  if (w1.truncation() != n_ || w2.truncation() != n_)
    throw InvalidArgument("q_tau: truncation mismatch");
  std::vector<Term> out;
  const std::uint64_t sz = modes.size();
  for (std::size_t ik = 0; ik < w1.size(); ++ik) {
    if (w1[ik] == cplx(0.0)) continue;
    const ModeIndex k = modes.mode(ik);
    for (std::size_t il = 0; il < w2.size(); ++il) {
      if (w2[il] == cplx(0.0)) continue;
      const ModeIndex l = modes.mode(il);
      std::set<int> m3s{k.k3 + l.k3, k.k3 - l.k3, l.k3 - k.k3, -k.k3 - l.k3};
      for (int m3 : m3s) {
        const ModeIndex m{k.k1 + l.k1, k.k2 + l.k2, m3};
        if (!modes.contains(m)) continue;
        const std::size_t im = modes.index(m);
        const std::uint64_t key = (ik * sz + il) * sz + im;
        auto it = cache_.find(key);
        if (it == cache_.end())
          it = cache_.emplace(key, std::make_pair(prof_.alpha(k, l, m), rel_.holds(1, k, 1, l, -1, m)))
                   .first;
        if (std::abs(it->second.first) < 1e-13) continue;
        const double det = eigenvalue(g_, m) - eigenvalue(g_, k) - eigenvalue(g_, l);
        out.push_back({ik, il, im, it->second.first, det, it->second.second});
      }
    }
  }
  return out;
}

SpectralField QTauOperator::apply(const SpectralField& w1, const SpectralField& w2,
                                  double tau) const {
  SpectralField out(g_, n_);
  for (const Term& t : terms(w1, w2)) {
    const cplx ph = t.resonant ? cplx(1.0) : std::exp(cplx(0.0, t.detuning * tau));
    out[t.m] += ph * t.alpha * w1[t.k] * w2[t.l];
  }
  return out;
}

SpectralField QTauOperator::average(const SpectralField& w1, const SpectralField& w2,
                                    double theta) const {
  SpectralField out(g_, n_);
  for (const Term& t : terms(w1, w2)) {
    cplx f(1.0);
    if (!t.resonant)
      f = (std::exp(cplx(0.0, t.detuning * theta)) - 1.0) / cplx(0.0, t.detuning * theta);
    out[t.m] += f * t.alpha * w1[t.k] * w2[t.l];
  }
  return out;
}

SpectralField QTauOperator::resonant_part(const SpectralField& w1, const SpectralField& w2) const {
  SpectralField out(g_, n_);
  for (const Term& t : terms(w1, w2))
    if (t.resonant) out[t.m] += t.alpha * w1[t.k] * w2[t.l];
  return out;
}

NonresonanceReport check_nonresonant_torus(const TorusGeometry& g, int cutoff, double tol) {
  const ModeSet modes(cutoff);
  const EigenvalueRelation rel(g, tol);
  NonresonanceReport rep;
  const int etas[4][3] = {{1, 1, 1}, {1, 1, -1}, {1, -1, 1}, {1, -1, -1}};
  for (std::size_t a = 0; a < modes.size(); ++a) {
    const ModeIndex k = modes.mode(a);
    for (std::size_t b = 0; b < modes.size(); ++b) {
      if (a == b) continue;
      const ModeIndex n = modes.mode(b);
      const ModeIndex d{n.k1 - k.k1, n.k2 - k.k2, n.k3 - k.k3};
      ++rep.checked;
      if (k.k3 * n.k3 * (n.k3 - k.k3) == 0) continue;
      for (const auto& e : etas) {
        if (!rel.holds(e[0], k, e[1], d, -e[2], n)) continue;
        rep.nonresonant = false;
        ++rep.violation_count;
        if (rep.violations.size() < 100) rep.violations.push_back({k, n, e[0], e[1], e[2]});
      }
    }
  }
  return rep;
}

}  // namespace rotwind
