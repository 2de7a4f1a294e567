#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include <json.hpp>

#include "rotwind/boundary_layers.hpp"
#include "rotwind/envelope.hpp"
#include "rotwind/forcing.hpp"
#include "rotwind/spectral_field.hpp"

namespace rotwind {

struct GridConfig {
  int Nz = 256;          // number of intervals in z
  double stretch = 0.0;  // tanh clustering; 0 picks the smallest value resolving the layers
  int Nh = 1;            // horizontal modes |k1|, |k2| <= Nh
  double dt = 0.0;       // 0 selects epsilon / 32
  double T_final = 0.5;
  int output_every = 0;  // 0 selects about 40 outputs
  int threads = 1;

  void validate() const;
  static GridConfig from_json(const nlohmann::json& j, const std::string& path = "grid");
  nlohmann::json to_json() const;
};

/// Nodes z_0 = 0 < ... < z_M = a with sixth-order quadrature weights.
class VerticalGrid {
 public:
  VerticalGrid() = default;
  static VerticalGrid tanh(double a, int intervals, double stretch);

  const std::vector<double>& z() const { return z_; }
  const std::vector<double>& weights() const { return w_; }
  std::size_t size() const { return z_.size(); }
  double height() const { return z_.back(); }
  double stretch() const { return stretch_; }
  /// Nodes other than the wall within distance d of the bottom (or top) wall.
  int points_within(double d, bool bottom) const;

 private:
  std::vector<double> z_, w_;
  double stretch_ = 0.0;
};

/// Smallest stretch with at least `min_points` nodes inside `thickness` of each wall.
/// Returns a negative value when no stretch up to 20 suffices.
double resolving_stretch(double a, int intervals, double thickness, int min_points = 8);

/// Fourier profile u_hat(z) of one horizontal mode on the grid; columns u1, u2, u3.
using ProfileMatrix = Eigen::MatrixX3cd;

struct DirectTrajectory {
  TorusGeometry geom;
  VerticalGrid grid;
  std::vector<HorizontalKey> kh;
  std::vector<double> times;
  std::vector<std::vector<ProfileMatrix>> fields;  // [output][kh]
  std::vector<double> divergence;                  // max |i k_h.u_h + d_z u3| per output
  std::vector<std::string> warnings;

  std::size_t kh_index(int k1, int k2) const;
  double l2_norm(std::size_t out) const;
};

/// Linearized rotating system with u = 0 at z = 0, d_z u_h = beta sigma(t/eps) and
/// u3 = 0 at z = a. Per horizontal mode the unknowns are u3, phi = u3'' - |k_h|^2 u3 and
/// the vertical vorticity, so the discrete velocity is divergence free by construction.
/// Second-order finite differences, trapezoidal stepping after two backward Euler
/// half steps.
DirectTrajectory solve_direct_linear(const SpectralField& u0, const WindStress& ws,
                                     const LayerParams& p, const GridConfig& grid,
                                     const PhasePoint& w);

/// Grid profiles of an eigenmode expansion, one matrix per entry of `kh`.
std::vector<ProfileMatrix> sample_on_grid(const SpectralField& f, const VerticalGrid& grid,
                                          const std::vector<HorizontalKey>& kh);

/// <N_k, u> for |k| <= N by quadrature in z.
SpectralField project_profiles(const TorusGeometry& g, const VerticalGrid& grid,
                               const std::vector<HorizontalKey>& kh,
                               const std::vector<ProfileMatrix>& u, int truncation);

/// Projection followed by the filter L(-t/eps), per output.
std::vector<SpectralField> filter_project(const DirectTrajectory& tr, int truncation,
                                          double epsilon);

struct ErrorNorms {
  double linf_l2 = 0.0;  // sup_t ||e||_{L2}
  double l2_h10 = 0.0;   // (int_0^T ||grad_h e||^2 dt)^{1/2}
};

/// Distance between the direct solution and L(t/eps) w on the grid, layers included.
/// `envelope` must hold one snapshot per output time of `tr`.
ErrorNorms compare_with_envelope(const DirectTrajectory& tr,
                                 const std::vector<SpectralField>& envelope, double epsilon);

/// Same norms for filtered coefficients against w; horizontal gradient from |k_h'|.
ErrorNorms compare_filtered(const std::vector<double>& times,
                            const std::vector<SpectralField>& filtered,
                            const std::vector<SpectralField>& envelope);

struct ConvergenceConfig {
  int truncation = 1;
  double T_final = 0.5;
  double nu_ratio = 1.0;   // nu = nu_ratio * epsilon
  double beta_eta = 1.0;   // beta sqrt(eps nu)
  double delta = 0.0;      // envelope source regularization, 0 for the limit
  int Nz = 256;
  double dt_fraction = 1.0 / 32.0;  // direct dt = dt_fraction * epsilon
  int outputs = 40;
  double envelope_dt = 2.5e-3;
  int threads = 1;

  void validate() const;
  static ConvergenceConfig from_json(const nlohmann::json& j, const std::string& path = "compare");
  nlohmann::json to_json() const;
};

struct ConvergenceRow {
  double epsilon = 0.0, nu = 0.0, beta = 0.0;
  double err_LinfL2 = 0.0, err_L2H10 = 0.0;  // filtered direct vs w
  double full_LinfL2 = 0.0, full_L2H10 = 0.0;  // u vs L(t/eps) w on the grid, layers included
  double runtime_s = 0.0;
};

std::vector<ConvergenceRow> convergence_study(const SpectralField& u0, const WindStress& ws,
                                              const std::vector<double>& eps_list,
                                              const ConvergenceConfig& cfg, const PhasePoint& w);

}  // namespace rotwind
