#include "rotwind/spectral_field.hpp"

#include <cmath>

#include "rotwind/errors.hpp"

namespace rotwind {

ModeSet::ModeSet(int truncation) : n_(truncation) {
  if (truncation < 1) throw InvalidArgument("truncation must be >= 1");
  side_ = 2 * n_ + 1;
  const std::size_t s = static_cast<std::size_t>(side_);
  size_ = s * s * s - 1;
  zero_pos_ = (static_cast<std::size_t>(n_) * s + static_cast<std::size_t>(n_)) * s +
              static_cast<std::size_t>(n_);
}

bool ModeSet::contains(const ModeIndex& k) const {
  return !k.is_zero() && std::abs(k.k1) <= n_ && std::abs(k.k2) <= n_ && std::abs(k.k3) <= n_;
}

std::size_t ModeSet::index(const ModeIndex& k) const {
  if (!contains(k)) throw InvalidArgument("mode " + k.str() + " outside truncation");
  const std::size_t s = static_cast<std::size_t>(side_);
  const std::size_t raw = (static_cast<std::size_t>(k.k3 + n_) * s +
                           static_cast<std::size_t>(k.k1 + n_)) * s +
                          static_cast<std::size_t>(k.k2 + n_);
  return raw > zero_pos_ ? raw - 1 : raw;
}

ModeIndex ModeSet::mode(std::size_t i) const {
  const std::size_t raw = i >= zero_pos_ ? i + 1 : i;
  const std::size_t s = static_cast<std::size_t>(side_);
  const int k2 = static_cast<int>(raw % s) - n_;
  const int k1 = static_cast<int>((raw / s) % s) - n_;
  const int k3 = static_cast<int>(raw / (s * s)) - n_;
  return {k1, k2, k3};
}

SpectralField::SpectralField(const TorusGeometry& g, int truncation)
    : geom_(g), modes_(truncation), c_(modes_.size(), cplx(0.0, 0.0)) {
  g.validate();
}

cplx SpectralField::at(const ModeIndex& k) const {
  if (!modes_.contains(k)) return {0.0, 0.0};
  return c_[modes_.index(k)];
}

void SpectralField::set(const ModeIndex& k, cplx v) { c_[modes_.index(k)] = v; }

void SpectralField::check_compatible(const SpectralField& o) const {
  if (!(geom_ == o.geom_) || truncation() != o.truncation())
    throw InvalidArgument("spectral fields differ in geometry or truncation");
}

SpectralField& SpectralField::operator+=(const SpectralField& o) {
  check_compatible(o);
  for (std::size_t i = 0; i < c_.size(); ++i) c_[i] += o.c_[i];
  return *this;
}

SpectralField& SpectralField::operator-=(const SpectralField& o) {
  check_compatible(o);
  for (std::size_t i = 0; i < c_.size(); ++i) c_[i] -= o.c_[i];
  return *this;
}

SpectralField& SpectralField::operator*=(cplx s) {
  for (auto& v : c_) v *= s;
  return *this;
}

cplx SpectralField::inner(const SpectralField& o) const {
  check_compatible(o);
  cplx s(0.0, 0.0);
  for (std::size_t i = 0; i < c_.size(); ++i) s += std::conj(c_[i]) * o.c_[i];
  return s;
}

double SpectralField::norm() const {
  double s = 0.0;
  for (const auto& v : c_) s += std::norm(v);
  return std::sqrt(s);
}

double SpectralField::max_abs() const {
  double m = 0.0;
  for (const auto& v : c_) m = std::max(m, std::abs(v));
  return m;
}

SpectralField SpectralField::retruncated(int truncation) const {
  SpectralField out(geom_, truncation);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = at(out.modes().mode(i));
  return out;
}

nlohmann::json geometry_to_json(const TorusGeometry& g) {
  return {{"a1", g.a1}, {"a2", g.a2}, {"a", g.a}};
}

TorusGeometry geometry_from_json(const nlohmann::json& j) {
  TorusGeometry g{j.at("a1").get<double>(), j.at("a2").get<double>(), j.at("a").get<double>()};
  g.validate();
  return g;
}

nlohmann::json SpectralField::to_json() const {
  nlohmann::json entries = nlohmann::json::array();
  for (std::size_t i = 0; i < c_.size(); ++i) {
    if (c_[i] == cplx(0.0, 0.0)) continue;
    const ModeIndex k = modes_.mode(i);
    entries.push_back({k.k1, k.k2, k.k3, c_[i].real(), c_[i].imag()});
  }
  return {{"geometry", geometry_to_json(geom_)}, {"truncation", truncation()}, {"entries", entries}};
}

SpectralField SpectralField::from_json(const nlohmann::json& j) {
  SpectralField f(geometry_from_json(j.at("geometry")), j.at("truncation").get<int>());
  for (const auto& e : j.at("entries")) {
    if (!e.is_array() || e.size() != 5) throw InvalidArgument("spectral entry must have 5 numbers");
    const ModeIndex k{e[0].get<int>(), e[1].get<int>(), e[2].get<int>()};
    f.set(k, cplx(e[3].get<double>(), e[4].get<double>()));
  }
  return f;
}

SpectralField operator+(SpectralField a, const SpectralField& b) { return a += b; }
SpectralField operator-(SpectralField a, const SpectralField& b) { return a -= b; }
SpectralField operator*(cplx s, SpectralField a) { return a *= s; }

SpectralField semigroup_apply(const SpectralField& w, double tau, int direction) {
  if (direction != 1 && direction != -1) throw InvalidArgument("direction must be +1 or -1");
  SpectralField out = w;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double lam = eigenvalue(w.geometry(), w.modes().mode(i));
    out[i] *= std::exp(cplx(0.0, -direction * lam * tau));
  }
  return out;
}

SpectralField random_real_field(const TorusGeometry& g, int truncation, std::mt19937_64& rng,
                                double decay) {
  SpectralField f(g, truncation);
  std::normal_distribution<double> nd(0.0, 1.0);
  for (std::size_t i = 0; i < f.size(); ++i) {
    const ModeIndex k = f.modes().mode(i);
    const ModeIndex mk = -k;
    if (mk < k) continue;
    const double kn = std::sqrt(double(k.k1 * k.k1 + k.k2 * k.k2 + k.k3 * k.k3));
    const double amp = std::pow(kn, -decay);
    cplx v(amp * nd(rng), amp * nd(rng));
    f[i] = v;
    f.set(mk, double(conjugate_partner_sign(k)) * std::conj(v));
  }
  return f;
}

double reality_defect(const SpectralField& w) {
  double d = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const ModeIndex k = w.modes().mode(i);
    d = std::max(d, std::abs(w.at(-k) - double(conjugate_partner_sign(k)) * std::conj(w[i])));
  }
  return d;
}

CVec3 evaluate_field(const SpectralField& w, const Vec3& x) {
  CVec3 u = CVec3::Zero();
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (w[i] == cplx(0.0, 0.0)) continue;
    u += w[i] * evaluate_mode(w.geometry(), w.modes().mode(i), x);
  }
  return u;
}

}  // namespace rotwind
