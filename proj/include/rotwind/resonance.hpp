#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <unordered_map>
#include <vector>

#include "rotwind/quadrature.hpp"
#include "rotwind/spectral_field.hpp"

namespace rotwind {

/// Decides s1 lambda_a + s2 lambda_b + s3 lambda_c == 0. Uses integer
/// arithmetic when the geometry is rational, otherwise |sum| < tol.
class EigenvalueRelation {
 public:
  EigenvalueRelation(const TorusGeometry& g, double tol = 1e-12);
  bool holds(int s1, const ModeIndex& a, int s2, const ModeIndex& b, int s3,
             const ModeIndex& c) const;
  bool exact() const { return metric_.has_value(); }
  double tolerance() const { return tol_; }

 private:
  TorusGeometry g_;
  double tol_;
  std::optional<RationalMetric> metric_;
};

/// Gauss-node tables of the mode profiles up to a truncation.
class ModeProfiles {
 public:
  ModeProfiles(const TorusGeometry& g, int truncation, const QuadratureSpec& q);
  /// <N_m, (N_k . grad) N_l> by tensor-product quadrature.
  cplx advective(const ModeIndex& k, const ModeIndex& l, const ModeIndex& m) const;
  /// Symmetrized coefficient alpha_{k l m}.
  cplx alpha(const ModeIndex& k, const ModeIndex& l, const ModeIndex& m) const;
  const TorusGeometry& geometry() const { return g_; }

 private:
  const CVec3& p(std::size_t mode, std::size_t node) const { return prof_[mode * nq_ + node]; }
  const CVec3& dp(std::size_t mode, std::size_t node) const { return dprof_[mode * nq_ + node]; }
  TorusGeometry g_;
  ModeSet modes_;
  QuadratureSpec q_;
  GaussRule gz_;
  std::size_t nq_;
  std::vector<CVec3> prof_, dprof_;
};

cplx interaction_coefficient(const TorusGeometry& g, const ModeIndex& k, const ModeIndex& l,
                             const ModeIndex& m, const QuadratureSpec& q);

/// Pairs (k, l), |k_i|, |l_i| <= N, with k_h + l_h = m_h, lambda_k + lambda_l = lambda_m and
/// eta1 k3 + eta2 l3 = m3 for some signs.
std::vector<std::pair<ModeIndex, ModeIndex>> resonant_set(const TorusGeometry& g,
                                                          const ModeIndex& m, int truncation,
                                                          double tol = 1e-12);

struct Triad {
  std::uint32_t k = 0, l = 0, m = 0;  // indices in ModeSet(truncation)
  cplx alpha;
};

/// Resonant triads with nonzero coefficient, grouped by output mode.
class TriadTable {
 public:
  static TriadTable build(const TorusGeometry& g, int truncation, double tol = 1e-12,
                          int threads = 1);

  const TorusGeometry& geometry() const { return g_; }
  int truncation() const { return n_; }
  double tolerance() const { return tol_; }
  const std::vector<Triad>& triads() const { return triads_; }

  /// Qbar(w1, w2) truncated at the table's truncation.
  SpectralField qbar_apply(const SpectralField& w1, const SpectralField& w2) const;

  nlohmann::json to_json() const;
  static TriadTable from_json(const nlohmann::json& j);
  std::string cache_key() const;

  /// Loads a matching cache file if present, otherwise builds and writes it.
  static TriadTable load_or_build(const std::filesystem::path& cache_dir, const TorusGeometry& g,
                                  int truncation, double tol, bool rebuild, int threads = 1);

 private:
  TorusGeometry g_;
  int n_ = 1;
  double tol_ = 1e-12;
  std::vector<Triad> triads_;
};

std::string triad_cache_key(const TorusGeometry& g, int truncation, double tol);

/// Q(tau, w1, w2): all interacting triads, phase exp(i (lambda_m - lambda_k - lambda_l) tau).
class QTauOperator {
 public:
  QTauOperator(const TorusGeometry& g, int truncation, double tol = 1e-12);
  SpectralField apply(const SpectralField& w1, const SpectralField& w2, double tau) const;
  /// (1/theta) int_0^theta Q(tau) dtau in closed form.
  SpectralField average(const SpectralField& w1, const SpectralField& w2, double theta) const;
  /// Same triads with exactly resonant phases only.
  SpectralField resonant_part(const SpectralField& w1, const SpectralField& w2) const;

  struct Term {
    std::size_t k, l, m;
    cplx alpha;
    double detuning;  // lambda_m - lambda_k - lambda_l
    bool resonant;
  };
  /// Interacting triads restricted to the supports of w1 and w2.
  std::vector<Term> terms(const SpectralField& w1, const SpectralField& w2) const;

 private:
  TorusGeometry g_;
  int n_;
  ModeProfiles prof_;
  EigenvalueRelation rel_;
  mutable std::unordered_map<std::uint64_t, std::pair<cplx, bool>> cache_;
};

struct ResonanceViolation {
  ModeIndex k, n;
  int eta1, eta2, eta3;
};

struct NonresonanceReport {
  bool nonresonant = true;
  std::size_t checked = 0;
  std::vector<ResonanceViolation> violations;  // capped at 100 entries
  std::size_t violation_count = 0;
};

/// Searches |k_i|, |n_i| <= K for eta1 lambda_k + eta2 lambda_{n-k} - eta3 lambda_n = 0 with
/// k3 n3 (n3 - k3) != 0.
NonresonanceReport check_nonresonant_torus(const TorusGeometry& g, int cutoff,
                                           double tol = 1e-12);

}  // namespace rotwind
