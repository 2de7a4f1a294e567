#pragma once

#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "rotwind/forcing.hpp"
#include "rotwind/spectral_field.hpp"

namespace rotwind {

struct LayerParams {
  double epsilon = 1e-2;
  double nu = 1e-2;
  double beta = 1.0;
  double delta = 1e-3;

  void validate() const;
  double eta() const;  // sqrt(epsilon nu)
  /// Warnings when nu/epsilon or beta sqrt(epsilon nu) exceed `bound`.
  std::vector<std::string> regime_flags(double bound = 10.0) const;
};

/// zeta / (sqrt(4 pi) tau^{3/2}) exp(-zeta^2/(4 tau) - delta tau), tau > 0.
double kernel_G_delta(double tau, double zeta, double delta);

// ---------------------------------------------------------------- top layer

/// Amplitude of exp(i k_h'.x_h) in the top layer: (u1, u2, u3), closed form per atom.
CVec3 top_layer_mode(const WindStress& ws, const LayerParams& p, int k1, int k2, double t,
                     double tau, double zeta, const PhasePoint& w);

/// Physical top-layer velocity (complex type, real up to roundoff).
CVec2 top_layer_uh(const WindStress& ws, const LayerParams& p, double t, double tau,
                   const Vec2& xh, double zeta, const PhasePoint& w);
cplx top_layer_u3(const WindStress& ws, const LayerParams& p, double t, double tau,
                  const Vec2& xh, double zeta, const PhasePoint& w);

/// Quadrature route for one horizontal mode whose stress amplitude history is c(tau).
CVec2 top_layer_uh_quadrature(const std::function<CVec2(double)>& c, const LayerParams& p,
                              double tau, double zeta);
cplx top_layer_u3_quadrature(const std::function<CVec2(double)>& c, const Vec2& kh,
                             const LayerParams& p, double tau, double zeta);

// ------------------------------------------------------------- bottom layer

/// sqrt(1 -+ lambda) (1 +- i)/sqrt(2) for sign = +1 / -1.
cplx bottom_decay_rate(double lambda, int sign);

struct BottomLayerMode {
  ModeIndex k;
  double lambda = 0.0;
  CVec2 c_hat = CVec2::Zero();  // boundary coefficient of exp(-i lambda tau + i k_h'.x_h)
  CVec2 w_plus = CVec2::Zero(), w_minus = CVec2::Zero();
  cplx eta_plus, eta_minus;
};

BottomLayerMode make_bottom_mode(const TorusGeometry& g, const ModeIndex& k, const CVec2& c_hat);

struct BottomLayerSpec {
  TorusGeometry geom;
  std::map<ModeIndex, BottomLayerMode> modes;  // k_h != 0
  // k_h = 0 split: resonant part alpha_pm e^{pm i tau}(1, pm i), classical gamma_pm e^{pm i tau}(1, -+ i).
  cplx alpha_plus, alpha_minus, gamma_plus, gamma_minus;

  /// Boundary data c_hat(k) = -<N_k, w> n_h(k) cancelling the interior flow at z = 0.
  static BottomLayerSpec from_interior(const SpectralField& w);
  /// Explicit boundary coefficients, any k.
  static BottomLayerSpec from_coefficients(const TorusGeometry& g,
                                           const std::map<ModeIndex, CVec2>& c_hat);
};

/// Contribution of one mode k (k_h != 0); u3 carries the sqrt(eps nu) factor.
CVec3 bottom_layer(const BottomLayerSpec& spec, const ModeIndex& k, double tau, const Vec2& xh,
                   double zeta, const LayerParams& p);
CVec3 bottom_layer(const TorusGeometry& g, const BottomLayerMode& m, double tau, const Vec2& xh,
                   double zeta, const LayerParams& p);

/// Classical k_h = 0 layer with rates 1 +- i.
CVec2 bottom_classical_kh0(const BottomLayerSpec& spec, double tau, double zeta);

/// erfc(X/2).
double psi(double X);
/// psi(z/sqrt(nu t)) sum alpha_pm e^{pm i tau}(1, pm i), tau = t/eps.
CVec2 resonant_layer(cplx alpha_plus, cplx alpha_minus, double t, double tau, double z,
                     double nu);

// ------------------------------------------------------ interior correctors

using HorizontalKey = std::pair<int, int>;

/// Per horizontal mode, a finite sum of amp * exp(i freq tau).
struct OscillatorySeries {
  std::map<HorizontalKey, std::vector<std::pair<double, cplx>>> terms;

  cplx value(const HorizontalKey& kh, double tau) const;
  cplx dtau(const HorizontalKey& kh, double tau) const;
  std::map<HorizontalKey, cplx> values(double tau) const;
  /// Amplitude at frequency `freq` (the almost-periodic mean E_{-freq}).
  cplx mean_at(const HorizontalKey& kh, double freq, double tol = 1e-12) const;
  void add(const HorizontalKey& kh, double freq, cplx amp);
};

/// Unnormalized coefficients: c(x_h) = (1/(a1 a2)) sum c_hat(k_h) exp(i k_h'.x_h).
/// c_hat_B3 = -a1 a2 sum_k3 sum_pm i k_h'.w_k^pm / eta_k^pm exp(-i lambda_k tau).
OscillatorySeries compute_cB3(const SpectralField& w);
/// c_hat_T3 = (1/2) sum_pm int_0^inf sigma_hat^pm(tau - s) e^{-delta s pm i s} ds, per atom.
OscillatorySeries compute_cT3(const WindStress& ws, const LayerParams& p, double t,
                              const PhasePoint& w);
/// Single-mode c_T3 by quadrature; c(tau) is the normalized stress amplitude.
cplx compute_cT3_quadrature(const TorusGeometry& g, const std::function<CVec2(double)>& c,
                            const Vec2& kh, double delta, double tau);

enum class LiftProfile { Linear, Quadratic };

/// Amplitude of exp(i k_h'.x_h) in v^int for unnormalized boundary coefficients.
CVec3 vint_mode(const TorusGeometry& g, int k1, int k2, cplx cB3, cplx cT3, const LayerParams& p,
                double z, LiftProfile lift = LiftProfile::Linear);

CVec3 corrector_vint(const TorusGeometry& g, const std::map<HorizontalKey, cplx>& cB3,
                     const std::map<HorizontalKey, cplx>& cT3, const LayerParams& p,
                     const Vec2& xh, double z, LiftProfile lift = LiftProfile::Linear);

/// <N_k, L(-s) P(d_s v + e3 ^ v)>, linear lift, from the closed mode formulas.
cplx sigma_projection(const TorusGeometry& g, const ModeIndex& k, cplx cB, cplx dcB, cplx cT,
                      cplx dcT, const LayerParams& p, double s);

/// S_bar coefficient for mode k from the almost-periodic means of the sources.
cplx sbar_coefficient(const TorusGeometry& g, const ModeIndex& k, const OscillatorySeries& cB,
                      const OscillatorySeries& cT, const LayerParams& p);

struct DeltaUintResult {
  std::vector<double> taus;
  std::vector<SpectralField> fields;
};

/// delta u^int on a tau grid: triad part by exact phase integrals, source part by
/// Gauss-Legendre panels between consecutive grid points (grid must start at 0).
DeltaUintResult compute_delta_uint(const TorusGeometry& g, int truncation, int out_truncation,
                                   const SpectralField& w, const OscillatorySeries& cB,
                                   const OscillatorySeries& cT, const LayerParams& p,
                                   const std::vector<double>& tau_grid);

// ----------------------------------------------------------------- residuals

struct LayerResidual {
  double max_residual = 0.0;
  double max_value = 0.0;
};

/// Centered FD residual of d_tau u - d_zeta^2 u + u^perp + delta u on a (tau, zeta) grid.
LayerResidual layer_residual(const std::function<CVec2(double, double)>& profile, double delta,
                             const std::vector<double>& taus, const std::vector<double>& zetas,
                             double h);

/// FD residual of -(X/2) psi' - psi'' on the given points.
double psi_ode_residual(const std::vector<double>& xs, double h);

}  // namespace rotwind
