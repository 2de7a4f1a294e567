#include "rotwind/quadrature.hpp"

#include <boost/math/special_functions/legendre.hpp>
#include <cmath>

#include "rotwind/errors.hpp"

namespace rotwind {

GaussRule gauss_legendre(int n, double lo, double hi) {
  if (n < 1) throw InvalidArgument("Gauss rule needs at least one node");
  const std::vector<double> zeros = boost::math::legendre_p_zeros<double>(n);
  GaussRule r;
  const double c = 0.5 * (lo + hi), h = 0.5 * (hi - lo);
  auto push = [&](double t) {
    const double dp = boost::math::legendre_p_prime(n, t);
    r.x.push_back(c + h * t);
    r.w.push_back(h * 2.0 / ((1.0 - t * t) * dp * dp));
  };
  for (auto it = zeros.rbegin(); it != zeros.rend(); ++it)
    if (*it != 0.0) push(-*it);
  for (double t : zeros) push(t);
  return r;
}

QuadratureSpec QuadratureSpec::for_truncation(int n) {
  QuadratureSpec q;
  q.nx = std::max(8, 4 * n);
  q.ny = q.nx;
  q.nz = 12 * n + 24;
  return q;
}

cplx horizontal_trapezoid_factor(const TorusGeometry& g, int q1, int q2, int nx, int ny) {
  cplx s1(0.0, 0.0), s2(0.0, 0.0);
  for (int j = 0; j < nx; ++j) s1 += std::exp(cplx(0.0, 2.0 * kPi * q1 * j / nx));
  for (int j = 0; j < ny; ++j) s2 += std::exp(cplx(0.0, 2.0 * kPi * q2 * j / ny));
  return g.a1 * g.a2 * (s1 / double(nx)) * (s2 / double(ny));
}

SpectralField project_function(const TorusGeometry& g, int truncation,
                               const std::function<CVec3(const Vec3&)>& u,
                               const QuadratureSpec& q) {
  SpectralField out(g, truncation);
  const int n = truncation, side = 2 * n + 1;
  const GaussRule gz = gauss_legendre(q.nz, 0.0, g.a);
  const double cell = g.a1 * g.a2 / (double(q.nx) * double(q.ny));
  std::vector<CVec3> samples(static_cast<std::size_t>(q.nx * q.ny));
  std::vector<CVec3> hat(static_cast<std::size_t>(side * side));
  for (int iz = 0; iz < q.nz; ++iz) {
    const double z = gz.x[iz];
    for (int i = 0; i < q.nx; ++i)
      for (int j = 0; j < q.ny; ++j)
        samples[i * q.ny + j] = u(Vec3(g.a1 * i / q.nx, g.a2 * j / q.ny, z));
    for (int k1 = -n; k1 <= n; ++k1)
      for (int k2 = -n; k2 <= n; ++k2) {
        CVec3 acc = CVec3::Zero();
        for (int i = 0; i < q.nx; ++i)
          for (int j = 0; j < q.ny; ++j) {
            const double ph = -2.0 * kPi * (double(k1) * i / q.nx + double(k2) * j / q.ny);
            acc += std::exp(cplx(0.0, ph)) * samples[i * q.ny + j];
          }
        hat[(k1 + n) * side + (k2 + n)] = cell * acc;
      }
    for (std::size_t m = 0; m < out.size(); ++m) {
      const ModeIndex k = out.modes().mode(m);
      const CVec3 p = mode_profile(g, k, z);
      out[m] += gz.w[iz] * p.dot(hat[(k.k1 + n) * side + (k.k2 + n)]);
    }
  }
  return out;
}

OrthonormalityReport orthonormality_report(const TorusGeometry& g, int truncation,
                                           const QuadratureSpec& q) {
  const ModeSet modes(truncation);
  const GaussRule gz = gauss_legendre(q.nz, 0.0, g.a);
  const std::size_t nm = modes.size(), nq = gz.x.size();
  std::vector<CVec3> prof(nm * nq);
  for (std::size_t m = 0; m < nm; ++m)
    for (std::size_t iz = 0; iz < nq; ++iz)
      prof[m * nq + iz] = mode_profile(g, modes.mode(m), gz.x[iz]);
  const int side = 4 * truncation + 1;
  std::vector<cplx> hfac(static_cast<std::size_t>(side * side));
  for (int q1 = -2 * truncation; q1 <= 2 * truncation; ++q1)
    for (int q2 = -2 * truncation; q2 <= 2 * truncation; ++q2)
      hfac[(q1 + 2 * truncation) * side + (q2 + 2 * truncation)] =
          horizontal_trapezoid_factor(g, q1, q2, q.nx, q.ny);

  OrthonormalityReport rep;
  for (std::size_t a = 0; a < nm; ++a) {
    const ModeIndex ka = modes.mode(a);
    for (std::size_t b = a; b < nm; ++b) {
      const ModeIndex kb = modes.mode(b);
      const cplx h = hfac[(kb.k1 - ka.k1 + 2 * truncation) * side + (kb.k2 - ka.k2 + 2 * truncation)];
      cplx zint(0.0, 0.0);
      for (std::size_t iz = 0; iz < nq; ++iz)
        zint += gz.w[iz] * prof[a * nq + iz].dot(prof[b * nq + iz]);
      const cplx gram = h * zint;
      const double d = std::abs(gram - (a == b ? 1.0 : 0.0));
      if (d > rep.max_gram_defect) {
        rep.max_gram_defect = d;
        rep.worst_gram_k = ka;
        rep.worst_gram_l = kb;
      }
    }
    cplx cor(0.0, 0.0);
    for (std::size_t iz = 0; iz < nq; ++iz)
      cor += gz.w[iz] * prof[a * nq + iz].dot(e3_wedge(prof[a * nq + iz]));
    cor *= hfac[(2 * truncation) * side + 2 * truncation];
    const double d = std::abs(cor - cplx(0.0, eigenvalue(g, ka)));
    if (d > rep.max_coriolis_defect) {
      rep.max_coriolis_defect = d;
      rep.worst_coriolis = ka;
    }
  }
  return rep;
}

}  // namespace rotwind
