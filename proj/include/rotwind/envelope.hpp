#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "rotwind/forcing.hpp"
#include "rotwind/resonance.hpp"
#include "rotwind/spectral_field.hpp"

namespace rotwind {

struct EnvelopeConfig {
  double epsilon = 1e-2;
  double nu = 1e-2;
  double beta = 1.0;
  double delta = 1e-3;  // 0 selects the delta -> 0 source (requires H2)
  int truncation = 2;
  double dt = 1e-2;
  double T_final = 1.0;
  int output_every = 1;
  std::uint64_t seed = 0;
  std::string scheme = "cn-ab2";
  bool nonlinear = true;
  double energy_bound = 1e8;
  double h2_eta = 1e-3;

  void validate() const;
  double pumping_scale() const;  // sqrt(nu/epsilon)
  static EnvelopeConfig from_json(const nlohmann::json& j, const std::string& path = "envelope");
  nlohmann::json to_json() const;
};

/// Rates entering d/dt (1/2)|w|^2 = -(dissipation + pumping + source_work).
struct Diagnostics {
  double time = 0.0;
  double energy = 0.0;       // (1/2) sum |w_k|^2
  double dissipation = 0.0;  // sum |k_h'|^2 |w_k|^2
  double pumping = 0.0;      // sqrt(nu/eps) Re <S_B w, w>
  double source_work = 0.0;  // nu beta Re <S_T, w>
  double h01 = 0.0;          // sum (1 + |k3|^2) |w_k|^2
};

struct TrajectoryRecord {
  std::vector<double> times;
  std::vector<SpectralField> snapshots;
  std::vector<Diagnostics> diagnostics;  // one per step, including t = 0
};

/// Second-order IMEX: Crank-Nicolson on the diagonal |k_h'|^2 + sqrt(nu/eps) A_k,
/// Adams-Bashforth 2 on Qbar, source at the step midpoint. First step by a midpoint
/// predictor.
class EnvelopeSolver {
 public:
  EnvelopeSolver(const SpectralField& u0, const WindStress& ws, const EnvelopeConfig& cfg,
                 const PhasePoint& w, std::shared_ptr<const TriadTable> table = nullptr);

  void step();
  double time() const { return t_; }
  const SpectralField& state() const { return w_; }
  std::size_t steps_taken() const { return n_; }

  /// nu beta S_T at slow time t (closed-form ergodic means).
  SpectralField source(double t) const;
  SpectralField nonlinear_term(const SpectralField& w) const;
  Diagnostics diagnostics() const;
  const std::vector<cplx>& linear_rates() const { return rate_; }

 private:
  SpectralField advance(const SpectralField& w, double h, const SpectralField& explicit_rhs) const;

  TorusGeometry g_;
  EnvelopeConfig cfg_;
  WindStress ws_;
  PhasePoint phases_;
  std::shared_ptr<const TriadTable> table_;
  std::vector<cplx> rate_;
  SpectralField w_, nl_prev_;
  double t_ = 0.0;
  std::size_t n_ = 0;
};

TrajectoryRecord solve_envelope(const SpectralField& u0, const WindStress& ws,
                                const EnvelopeConfig& cfg, const PhasePoint& w,
                                std::shared_ptr<const TriadTable> table = nullptr);

/// Largest |d/dt E + D + P + S| along the record using centered differences.
/// Only steps with time >= t_min are checked.
double energy_budget_residual(const TrajectoryRecord& r, double t_min = 0.0);

}  // namespace rotwind
