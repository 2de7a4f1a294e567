#pragma once

#include <memory>
#include <vector>

#include "rotwind/envelope.hpp"

namespace rotwind {

/// Vorticity coefficients on |k1|, |k2| <= N: omega = sum omega_k exp(i k_h'.x_h).
class Vorticity2D {
 public:
  Vorticity2D(const TorusGeometry& g, int truncation);
  const TorusGeometry& geometry() const { return g_; }
  int truncation() const { return n_; }
  std::size_t size() const { return c_.size(); }
  std::size_t index(int k1, int k2) const;
  std::pair<int, int> mode(std::size_t i) const;
  cplx at(int k1, int k2) const { return c_[index(k1, k2)]; }
  cplx& operator[](std::size_t i) { return c_[i]; }
  cplx operator[](std::size_t i) const { return c_[i]; }
  double max_abs() const;
  Vec2 wavevector(std::size_t i) const;

 private:
  TorusGeometry g_;
  int n_;
  std::vector<cplx> c_;
};

/// rot_h of the vertical average: omega_k = c_(k,0) |k_h'| / sqrt(a1 a2 a).
Vorticity2D horizontal_vorticity(const SpectralField& w);
/// Inverse map onto the k3 = 0 modes.
SpectralField field_from_vorticity(const Vorticity2D& om, int truncation);
/// Velocity amplitude -i k^perp omega / |k|^2 of one mode.
CVec2 velocity_from_vorticity(const Vorticity2D& om, std::size_t i);
/// Galerkin u . grad omega truncated to |k_i| <= N.
Vorticity2D transport_term(const Vorticity2D& om);

struct MeanLimitResult {
  std::vector<double> times;
  std::vector<Vorticity2D> vorticity;
  std::vector<SpectralField> wbar;    // k3 = 0 modes only
  std::vector<SpectralField> wtilde;  // deterministic linear part
  SpectralField wbar_predictor;       // half-step predictor of the first step
};

/// 2D Navier-Stokes for the vertical mean with damping sqrt(nu/eps)/(a sqrt2) and source
/// nu beta E[S_T]_h, coupled to the deterministic linear w~ equation. Same time scheme
/// as the envelope solver; every step is recorded.
MeanLimitResult solve_mean_limit(const SpectralField& u0, const WindStress& ws,
                                 const EnvelopeConfig& cfg,
                                 std::shared_ptr<const TriadTable> table = nullptr);

/// Zero-mean random part u~ for one phase point; `mean` holds w-bar at every step.
std::vector<SpectralField> solve_fluctuation(const WindStress& ws, const EnvelopeConfig& cfg,
                                             const PhasePoint& w, const MeanLimitResult& mean,
                                             std::shared_ptr<const TriadTable> table = nullptr);

struct DecouplingReport {
  bool nonresonant = true;
  std::size_t torus_violations = 0;
  double max_qbar = 0.0;  // max |Qbar(u, u)| over samples with zero horizontal mean
  std::vector<Triad> coupling_triads;  // triads with both inputs off k3 = 0 (capped at 100)
  std::size_t coupling_count = 0;
  bool pass() const { return nonresonant && max_qbar < 1e-10; }
};

struct MonteCarloCheck {
  int draws = 0;
  double l2_distance = 0.0;          // ||sample mean - (wbar + wtilde)|| at T_final
  double l2_bound = 0.0;             // 3 (sum of coefficient variances)^{1/2} / sqrt(draws)
  double max_mode_excess = 0.0;      // max_k |mean_k - pred_k| - 3 sd_k / sqrt(draws)
  double horizontal_distance = 0.0;  // max over draws of ||P_h w - wbar||
  bool pass(double horizontal_tol = 1e-10) const {
    return l2_distance <= l2_bound && horizontal_distance <= horizontal_tol;
  }
};

/// Full envelope solves for `draws` phase points (draw r uses derive_seed(seed, 0, r))
/// compared with the decomposition `m` at the final time. Draws run on `threads` workers;
/// the reduction is in draw order.
MonteCarloCheck monte_carlo_mean_check(const SpectralField& u0, const WindStress& ws,
                                       const EnvelopeConfig& cfg, const MeanLimitResult& m,
                                       int draws, std::uint64_t seed,
                                       std::shared_ptr<const TriadTable> table = nullptr,
                                       int threads = 1);

DecouplingReport decoupling_check(const TorusGeometry& g, int truncation, int samples = 8,
                                  std::uint64_t seed = 1,
                                  std::shared_ptr<const TriadTable> table = nullptr);

}  // namespace rotwind
