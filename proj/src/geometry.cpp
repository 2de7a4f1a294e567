#include "rotwind/geometry.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include "rotwind/errors.hpp"

namespace rotwind {

std::string ModeIndex::str() const {
  std::ostringstream os;
  os << "(" << k1 << "," << k2 << "," << k3 << ")";
  return os.str();
}

void TorusGeometry::validate() const {
  auto bad = [](double v) { return !(v > 0.0) || !std::isfinite(v); };
  if (bad(a1) || bad(a2) || bad(a))
    throw InvalidArgument("geometry lengths must be positive and finite");
}

Vec3 wavevector(const TorusGeometry& g, const ModeIndex& k) {
  return Vec3(2.0 * kPi * k.k1 / g.a1, 2.0 * kPi * k.k2 / g.a2, kPi * k.k3 / g.a);
}

double horizontal_norm(const TorusGeometry& g, const ModeIndex& k) {
  const Vec3 kp = wavevector(g, k);
  return std::hypot(kp(0), kp(1));
}

double eigenvalue(const TorusGeometry& g, const ModeIndex& k) {
  if (k.is_zero()) throw InvalidArgument("mode k = 0 is not part of the basis");
  const Vec3 kp = wavevector(g, k);
  return -kp(2) / kp.norm();
}

CVec3 eigenvector(const TorusGeometry& g, const ModeIndex& k) {
  if (k.is_zero()) throw InvalidArgument("mode k = 0 is not part of the basis");
  const double s = std::sqrt(g.volume());
  const cplx I(0.0, 1.0);
  if (k.horizontal_zero()) {
    const double sg = k.k3 > 0 ? 1.0 : -1.0;
    return CVec3(sg / s, I / s, 0.0);
  }
  const Vec3 kp = wavevector(g, k);
  const double kh = std::hypot(kp(0), kp(1));
  const double lam = -kp(2) / kp.norm();
  return CVec3((I * kp(1) + kp(0) * lam) / (s * kh),
               (-I * kp(0) + kp(1) * lam) / (s * kh),
               I * kh / (s * kp.norm()));
}

CVec3 mode_profile(const TorusGeometry& g, const ModeIndex& k, double z) {
  const CVec3 n = eigenvector(g, k);
  const double q = kPi * k.k3 / g.a;
  const double c = std::cos(q * z), s = std::sin(q * z);
  return CVec3(c * n(0), c * n(1), s * n(2));
}

CVec3 mode_profile_dz(const TorusGeometry& g, const ModeIndex& k, double z) {
  const CVec3 n = eigenvector(g, k);
  const double q = kPi * k.k3 / g.a;
  const double c = std::cos(q * z), s = std::sin(q * z);
  return CVec3(-q * s * n(0), -q * s * n(1), q * c * n(2));
}

CVec3 evaluate_mode(const TorusGeometry& g, const ModeIndex& k, const Vec3& x) {
  const Vec3 kp = wavevector(g, k);
  const cplx ph = std::exp(cplx(0.0, kp(0) * x(0) + kp(1) * x(1)));
  return ph * mode_profile(g, k, x(2));
}

int conjugate_partner_sign(const ModeIndex& k) {
  return k.horizontal_zero() ? -1 : 1;
}

namespace {

std::optional<std::pair<std::int64_t, std::int64_t>> small_rational(double x) {
  for (std::int64_t q = 1; q <= 64; ++q) {
    const double pr = std::round(x * static_cast<double>(q));
    if (pr < 1.0 || pr > 4096.0) continue;
    const auto p = static_cast<std::int64_t>(pr);
    if (std::abs(x - static_cast<double>(p) / static_cast<double>(q)) <= 1e-14 * x)
      return std::make_pair(p, q);
  }
  return std::nullopt;
}

}  // namespace

std::optional<RationalMetric> RationalMetric::detect(const TorusGeometry& g) {
  auto r1 = small_rational(g.a1), r2 = small_rational(g.a2), r3 = small_rational(g.a);
  if (!r1 || !r2 || !r3) return std::nullopt;
  using i128 = __int128;
  const i128 p1 = r1->first * r1->first, p2 = r2->first * r2->first,
             p3 = r3->first * r3->first;
  i128 L = std::lcm(static_cast<std::int64_t>(p1), static_cast<std::int64_t>(p2));
  L = std::lcm(static_cast<std::int64_t>(L), static_cast<std::int64_t>(p3));
  const i128 c1 = 4 * r1->second * r1->second * (L / p1);
  const i128 c2 = 4 * r2->second * r2->second * (L / p2);
  const i128 c3 = r3->second * r3->second * (L / p3);
  const i128 cap = static_cast<i128>(1) << 40;
  if (c1 > cap || c2 > cap || c3 > cap) return std::nullopt;
  RationalMetric m;
  m.c1_ = static_cast<std::int64_t>(c1);
  m.c2_ = static_cast<std::int64_t>(c2);
  m.c3_ = static_cast<std::int64_t>(c3);
  return m;
}

std::int64_t RationalMetric::scaled_norm2(const ModeIndex& k) const {
  return c1_ * k.k1 * k.k1 + c2_ * k.k2 * k.k2 + c3_ * k.k3 * k.k3;
}

}  // namespace rotwind
