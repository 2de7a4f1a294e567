#pragma once

#include <functional>
#include <vector>

#include "rotwind/spectral_field.hpp"

namespace rotwind {

struct GaussRule {
  std::vector<double> x;
  std::vector<double> w;
};

/// n-point Gauss-Legendre rule mapped to [lo, hi].
GaussRule gauss_legendre(int n, double lo, double hi);

/// Trapezoidal in x1, x2 and Gauss-Legendre in z.
struct QuadratureSpec {
  int nx = 8;
  int ny = 8;
  int nz = 32;

  /// Horizontal points 4N; vertical points 12N + 24 so that triple products of
  /// modes up to 2N in k3 are integrated to roundoff.
  static QuadratureSpec for_truncation(int n);
};

/// (1/(nx ny)) sum over the grid of exp(i (2 pi q1 x1/a1 + 2 pi q2 x2/a2)), times a1 a2.
cplx horizontal_trapezoid_factor(const TorusGeometry& g, int q1, int q2, int nx, int ny);

/// Coefficients <N_k, u> for all |k_i| <= N by tensor-product quadrature.
SpectralField project_function(const TorusGeometry& g, int truncation,
                               const std::function<CVec3(const Vec3&)>& u,
                               const QuadratureSpec& q);

struct OrthonormalityReport {
  double max_gram_defect = 0.0;      // max |<N_k, N_l> - delta_kl|
  double max_coriolis_defect = 0.0;  // max |<N_k, e3 ^ N_k> - i lambda_k|
  ModeIndex worst_gram_k, worst_gram_l, worst_coriolis;
};

OrthonormalityReport orthonormality_report(const TorusGeometry& g, int truncation,
                                           const QuadratureSpec& q);

}  // namespace rotwind
