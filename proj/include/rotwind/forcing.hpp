#pragma once

#include <functional>
#include <random>
#include <vector>

#include "rotwind/geometry.hpp"
#include <json.hpp>

namespace rotwind {

/// coeff * exp(i (k_h'.x + mu tau + phi_j)) plus its complex conjugate.
struct FrequencyAtom {
  double mu = 0.0;
  CVec2 coeff = CVec2::Zero();
  int phase = -1;  // index into the phase vector; -1 means no random phase
};

struct WindMode {
  int k1 = 0;
  int k2 = 0;
  std::vector<FrequencyAtom> atoms;
};

/// Point of the probability space: one phase per base frequency.
using PhasePoint = std::vector<double>;

/// One term amp * exp(i (k_h'.x + mu tau + sign * phi_phase)) of the full real expansion.
struct SpectralLine {
  int k1 = 0, k2 = 0;
  double mu = 0.0;
  CVec2 amp = CVec2::Zero();
  int phase = -1;
  int sign = 1;
};

class WindStress {
 public:
  WindStress() = default;
  WindStress(const TorusGeometry& g, std::vector<WindMode> modes,
             std::vector<double> base_frequencies, std::vector<double> envelope = {1.0});

  /// {"modes":[{"kh":[k1,k2],"atoms":[{"mu","re1","im1","re2","im2"[,"phase"]}]}],
  ///  "base_frequencies":[...], optional "envelope":[c0,c1,...]}. Atoms whose mu equals a
  /// base frequency get that phase; mu = 0 without a match is deterministic.
  static WindStress from_json(const TorusGeometry& g, const nlohmann::json& j,
                              const std::string& path = "wind");
  nlohmann::json to_json() const;

  const TorusGeometry& geometry() const { return g_; }
  const std::vector<WindMode>& modes() const { return modes_; }
  const std::vector<double>& base_frequencies() const { return base_; }
  const std::vector<SpectralLine>& lines() const { return lines_; }
  bool empty() const { return lines_.empty(); }

  double envelope(double t) const;
  /// Phase average: atoms carrying a random phase have zero mean and are dropped.
  WindStress deterministic_part() const;
  const std::vector<double>& envelope_coefficients() const { return env_; }
  PhasePoint sample_phases(std::mt19937_64& rng) const;
  PhasePoint zero_phases() const { return PhasePoint(base_.size(), 0.0); }
  /// theta_s: phi_j -> phi_j + nu_j s.
  PhasePoint shift(const PhasePoint& w, double s) const;

  /// Real wind stress at (t, tau, x_h).
  Vec2 sample(double t, double tau, const Vec2& xh, const PhasePoint& w) const;
  /// Fourier amplitude c(k_h, tau) with sigma = sum_kh c e^{i k_h'.x}, at slow time t.
  CVec2 mode_amplitude(int k1, int k2, double t, double tau, const PhasePoint& w) const;
  /// (mu, amplitude including phase) pairs for one horizontal mode, envelope excluded.
  std::vector<std::pair<double, CVec2>> mode_spectrum(int k1, int k2, const PhasePoint& w) const;
  /// Horizontal modes carrying energy, partners included, sorted.
  std::vector<std::pair<int, int>> horizontal_support() const;
  /// Smallest distance of the frequency set (with -mu) to {+1, -1}.
  double distance_to_inertial() const;

 private:
  void rebuild_lines();
  TorusGeometry g_;
  std::vector<WindMode> modes_;
  std::vector<double> base_;
  std::vector<double> env_{1.0};
  std::vector<SpectralLine> lines_;
};

/// (1/2pi) sum phi_mu 2 alpha / (alpha^2 + (mu - lambda)^2) for one horizontal mode.
CVec2 spectral_density_Falpha(const WindStress& ws, double lambda, double alpha, int k1, int k2,
                              const PhasePoint& w);

/// sum phi_n 2 alpha / (alpha^2 + (mu_n - lambda)^2) for scalar atoms, i.e. 2 pi F_alpha.
double lorentzian_sum(const std::vector<double>& mu, const std::vector<double>& phi, double lambda,
                      double alpha);

/// int |F_alpha(lambda)| d lambda for scalar atoms by adaptive quadrature.
double falpha_l1_norm(const std::vector<double>& mu, const std::vector<double>& phi, double alpha);

struct H1Report {
  bool holds = true;
  double bound = 0.0;  // max over modes of sum |phi_mu|
};
H1Report check_H1(const WindStress& ws);

struct H2Report {
  bool holds = false;
  double distance = 0.0;                         // d(M, {+1,-1})
  std::vector<std::pair<double, double>> curve;  // (alpha, sup_{V+ u V-} |F_alpha|)
};
/// V_pm = (pm1 - eta/2, pm1 + eta/2).
H2Report check_H2(const WindStress& ws, double eta, const std::vector<double>& alphas = {});

/// Atoms mu_n = 1 - 1/n, phi_n = 2^-n, n = 1..count.
struct ScalarProcess {
  std::vector<double> mu;
  std::vector<double> phi;
};
ScalarProcess h2_counterexample(int count);

struct SigmaAlphaResult {
  Vec2 value = Vec2::Zero();
  double tail_bound = 0.0;
};
/// Kernel form (1/pi) int exp(-alpha |tau + alpha s|) sigma(tau + alpha s) / (1 + s^2) ds over
/// |s| <= 50/alpha.
SigmaAlphaResult reconstruct_sigma_alpha(const std::function<Vec2(double)>& sigma, double alpha,
                                         double tau);
SigmaAlphaResult reconstruct_sigma_alpha(const WindStress& ws, double alpha, double t, double tau,
                                         const Vec2& xh, const PhasePoint& w);

/// (1/theta) int_0^theta c(k_h, tau) e^{-i lambda tau} dtau, exact per atom.
CVec2 ergodic_average(const WindStress& ws, int k1, int k2, double lambda, double theta,
                      const PhasePoint& w);
/// theta -> infinity limit: sum of amplitudes with mu == lambda (|mu - lambda| <= tol).
CVec2 ergodic_limit(const WindStress& ws, int k1, int k2, double lambda, const PhasePoint& w,
                    double tol = 1e-12);
/// Same average for a sampled callable by Gauss-Legendre panels.
cplx ergodic_average(const std::function<cplx(double)>& phi, double lambda, double theta);

/// Integer relations sum n_j nu_j = 0 with |n_j| <= maxcoef among nonzero base frequencies.
std::vector<std::vector<int>> rational_relations(const std::vector<double>& base, int maxcoef = 20);

}  // namespace rotwind
