#pragma once

#include <Eigen/Dense>
#include <compare>
#include <complex>
#include <cstdint>
#include <optional>
#include <string>

namespace rotwind {

using cplx = std::complex<double>;
using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using CVec2 = Eigen::Vector2cd;
using CVec3 = Eigen::Vector3cd;

inline constexpr double kPi = 3.14159265358979323846;

/// Integer wavenumber triple. Ordered lexicographically on (k3, k1, k2).
struct ModeIndex {
  int k1 = 0;
  int k2 = 0;
  int k3 = 0;

  bool is_zero() const { return k1 == 0 && k2 == 0 && k3 == 0; }
  bool horizontal_zero() const { return k1 == 0 && k2 == 0; }
  ModeIndex operator-() const { return {-k1, -k2, -k3}; }
  bool operator==(const ModeIndex&) const = default;
  std::strong_ordering operator<=>(const ModeIndex& o) const {
    if (auto c = k3 <=> o.k3; c != 0) return c;
    if (auto c = k1 <=> o.k1; c != 0) return c;
    return k2 <=> o.k2;
  }
  std::string str() const;
};

/// Periodic in x1, x2 with periods a1, a2; z in (0, a).
struct TorusGeometry {
  double a1 = 1.0;
  double a2 = 1.0;
  double a = 1.0;

  void validate() const;
  double volume() const { return a1 * a2 * a; }
  bool operator==(const TorusGeometry&) const = default;
};

Vec3 wavevector(const TorusGeometry& g, const ModeIndex& k);
double horizontal_norm(const TorusGeometry& g, const ModeIndex& k);
double eigenvalue(const TorusGeometry& g, const ModeIndex& k);

/// Coefficient vector (n1, n2, n3) of the normalized eigenmode.
CVec3 eigenvector(const TorusGeometry& g, const ModeIndex& k);

/// Vertical profile (cos n1, cos n2, sin n3) at height z, without e^{ik_h.x}.
CVec3 mode_profile(const TorusGeometry& g, const ModeIndex& k, double z);
CVec3 mode_profile_dz(const TorusGeometry& g, const ModeIndex& k, double z);

/// Full eigenmode at x = (x1, x2, z).
CVec3 evaluate_mode(const TorusGeometry& g, const ModeIndex& k, const Vec3& x);

/// Real-valued fields satisfy c_{-k} = s_k conj(c_k) with s_k from here.
int conjugate_partner_sign(const ModeIndex& k);

/// e3 wedge v = (-v2, v1, 0).
inline CVec3 e3_wedge(const CVec3& v) { return CVec3(-v(1), v(0), 0.0); }
inline CVec2 perp(const CVec2& v) { return CVec2(-v(1), v(0)); }

/// When all three lengths are small rationals, |k'|^2 is pi^2 D(k)/L with D
/// an integer. Used for exact eigenvalue comparisons.
class RationalMetric {
 public:
  static std::optional<RationalMetric> detect(const TorusGeometry& g);
  std::int64_t scaled_norm2(const ModeIndex& k) const;

 private:
  std::int64_t c1_ = 0, c2_ = 0, c3_ = 0;
};

}  // namespace rotwind
