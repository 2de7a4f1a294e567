#include "rotwind/direct_sim.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <thread>

#include "rotwind/errors.hpp"
#include "rotwind/json_util.hpp"
#include "rotwind/quadrature.hpp"

namespace rotwind {

namespace {

const cplx I(0.0, 1.0);

// Fornberg's recursion: weights c[j][m] of derivative m at x0 from nodes x[0..n-1].
std::vector<std::vector<double>> fd_weights(double x0, const std::vector<double>& x, int mmax) {
  const int n = static_cast<int>(x.size());
  std::vector<std::vector<double>> c(n, std::vector<double>(mmax + 1, 0.0));
  double c1 = 1.0, c4 = x[0] - x0;
  c[0][0] = 1.0;
  for (int i = 1; i < n; ++i) {
    const int mn = std::min(i, mmax);
    double c2 = 1.0;
    const double c5 = c4;
    c4 = x[i] - x0;
    for (int j = 0; j < i; ++j) {
      const double c3 = x[i] - x[j];
      c2 *= c3;
      if (j == i - 1) {
        for (int m = mn; m >= 1; --m) c[i][m] = c1 * (m * c[i - 1][m - 1] - c5 * c[i - 1][m]) / c2;
        c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
      }
      for (int m = mn; m >= 1; --m) c[j][m] = (c4 * c[j][m] - m * c[j][m - 1]) / c3;
      c[j][0] = c4 * c[j][0] / c3;
    }
    c1 = c2;
  }
  return c;
}

struct Stencil {
  int first = 0;               // index of the first node
  std::vector<double> d1, d2;  // weights
};

// Three-point stencils; one-sided at the walls.
std::vector<Stencil> make_stencils(const std::vector<double>& z) {
  const int M = static_cast<int>(z.size()) - 1;
  std::vector<Stencil> out(M + 1);
  for (int j = 0; j <= M; ++j) {
    const int s = std::clamp(j - 1, 0, M - 2);
    const std::vector<double> nodes{z[s], z[s + 1], z[s + 2]};
    const auto c = fd_weights(z[j], nodes, 2);
    out[j].first = s;
    for (int q = 0; q < 3; ++q) {
      out[j].d1.push_back(c[q][1]);
      out[j].d2.push_back(c[q][2]);
    }
  }
  return out;
}

using SpMat = Eigen::SparseMatrix<cplx>;
using Triplets = std::vector<Eigen::Triplet<cplx>>;

// One horizontal mode: M x' = A x + boundary data, where M is the identity on evolution
// rows and zero on constraint rows.
class ModeSystem {
 public:
  ModeSystem(const TorusGeometry& g, const VerticalGrid& grid, const std::vector<Stencil>& st,
             int k1, int k2, const LayerParams& p, double dt)
      : k1_(k1), k2_(k2), M_(static_cast<int>(grid.size()) - 1), st_(st), p_(p) {
    const Vec3 kp = wavevector(g, {k1, k2, 0});
    kh_ = kp.head<2>();
    K2_ = kh_.squaredNorm();
    horizontal_zero_ = (k1 == 0 && k2 == 0);
    nvar_ = horizontal_zero_ ? 2 : 3;
    build(dt);
  }

  int size() const { return nvar_ * (M_ + 1); }
  int idx(int var, int j) const { return nvar_ * j + var; }

  Eigen::VectorXcd state_from(const ProfileMatrix& u) const {
    Eigen::VectorXcd x = Eigen::VectorXcd::Zero(size());
    for (int j = 0; j <= M_; ++j) {
      if (horizontal_zero_) {
        x(idx(0, j)) = u(j, 0) + I * u(j, 1);
        x(idx(1, j)) = u(j, 0) - I * u(j, 1);
      } else {
        x(idx(0, j)) = u(j, 2);
        x(idx(2, j)) = I * kh_(0) * u(j, 1) - I * kh_(1) * u(j, 0);
      }
    }
    if (!horizontal_zero_)
      for (int j = 1; j < M_; ++j)
        x(idx(1, j)) = apply(st_[j].d2, 0, x, j) - K2_ * x(idx(0, j));
    return x;
  }

  ProfileMatrix profile(const Eigen::VectorXcd& x) const {
    ProfileMatrix u = ProfileMatrix::Zero(M_ + 1, 3);
    for (int j = 0; j <= M_; ++j) {
      if (horizontal_zero_) {
        const cplx up = x(idx(0, j)), um = x(idx(1, j));
        u(j, 0) = 0.5 * (up + um);
        u(j, 1) = (up - um) / (2.0 * I);
      } else {
        const cplx d = -apply(st_[j].d1, 0, x, j);
        const cplx om = x(idx(2, j));
        // u_h = -i (d k_h + omega k_h^perp) / |k_h|^2
        u(j, 0) = -I * (d * kh_(0) - om * kh_(1)) / K2_;
        u(j, 1) = -I * (d * kh_(1) + om * kh_(0)) / K2_;
        u(j, 2) = x(idx(0, j));
      }
    }
    return u;
  }

  double divergence(const ProfileMatrix& u) const {
    double worst = 0.0;
    for (int j = 0; j <= M_; ++j) {
      cplx du3 = 0.0;
      for (int q = 0; q < 3; ++q) du3 += st_[j].d1[q] * u(st_[j].first + q, 2);
      worst = std::max(worst, std::abs(I * kh_(0) * u(j, 0) + I * kh_(1) * u(j, 1) + du3));
    }
    return worst;
  }

  // Boundary data at fast time tau given the stress amplitude c.
  Eigen::VectorXcd boundary(const CVec2& c) const {
    Eigen::VectorXcd g = Eigen::VectorXcd::Zero(size());
    const CVec2 s = p_.beta * c;
    if (horizontal_zero_) {
      g(idx(0, M_)) = s(0) + I * s(1);
      g(idx(1, M_)) = s(0) - I * s(1);
    } else {
      g(idx(1, M_)) = -I * (kh_(0) * s(0) + kh_(1) * s(1));
      g(idx(2, M_)) = I * (kh_(0) * s(1) - kh_(1) * s(0));
    }
    return g;
  }

  // Trapezoidal step; constraint rows hold at the new time.
  Eigen::VectorXcd trapezoidal(const Eigen::VectorXcd& x, const Eigen::VectorXcd& g_new) {
    Eigen::VectorXcd rhs = explicit_ * x + g_new;
    return solve(rhs);
  }
  // Backward Euler over dt/2 uses the same matrix.
  Eigen::VectorXcd backward_half(const Eigen::VectorXcd& x, const Eigen::VectorXcd& g_new) {
    Eigen::VectorXcd rhs = evolution_mask_.cwiseProduct(x) + g_new;
    return solve(rhs);
  }

 private:
  cplx apply(const std::vector<double>& wts, int var, const Eigen::VectorXcd& x, int j) const {
    cplx s = 0.0;
    for (int q = 0; q < 3; ++q) s += wts[q] * x(idx(var, st_[j].first + q));
    return s;
  }

  Eigen::VectorXcd solve(const Eigen::VectorXcd& rhs) {
    Eigen::VectorXcd out = lu_.solve(rhs);
    if (lu_.info() != Eigen::Success) throw NumericalError("direct: linear solve failed");
    return out;
  }

  // A on evolution rows.
  void add_operator(Triplets& t, double scale) const {
    const double nu = p_.nu, eps = p_.epsilon;
    for (int j = 1; j < M_; ++j) {
      const Stencil& s = st_[j];
      if (horizontal_zero_) {
        for (int v = 0; v < 2; ++v) {
          const double sg = v == 0 ? 1.0 : -1.0;
          const int r = idx(v, j);
          t.emplace_back(r, r, scale * (-sg * I / eps));
          for (int q = 0; q < 3; ++q) t.emplace_back(r, idx(v, s.first + q), scale * nu * s.d2[q]);
        }
      } else {
        const int rp = idx(1, j), rw = idx(2, j);
        t.emplace_back(rp, rp, scale * (-K2_));
        t.emplace_back(rw, rw, scale * (-K2_));
        for (int q = 0; q < 3; ++q) {
          const int n = s.first + q;
          t.emplace_back(rp, idx(1, n), scale * nu * s.d2[q]);
          t.emplace_back(rp, idx(2, n), scale * (-s.d1[q] / eps));
          t.emplace_back(rw, idx(2, n), scale * nu * s.d2[q]);
          t.emplace_back(rw, idx(0, n), scale * (s.d1[q] / eps));
        }
      }
    }
  }

  void build(double dt) {
    const int n = size();
    Triplets lhs, rhs;
    evolution_mask_ = Eigen::VectorXcd::Zero(n);
    for (int j = 1; j < M_; ++j)
      for (int v = horizontal_zero_ ? 0 : 1; v < nvar_; ++v) {
        const int r = idx(v, j);
        evolution_mask_(r) = 1.0;
        lhs.emplace_back(r, r, 1.0);
        rhs.emplace_back(r, r, 1.0);
      }
    add_operator(lhs, -0.5 * dt);
    add_operator(rhs, 0.5 * dt);
    const Stencil& bot = st_[0];
    const Stencil& top = st_[M_];
    if (horizontal_zero_) {
      for (int v = 0; v < 2; ++v) {
        lhs.emplace_back(idx(v, 0), idx(v, 0), 1.0);
        for (int q = 0; q < 3; ++q) lhs.emplace_back(idx(v, M_), idx(v, top.first + q), top.d1[q]);
      }
    } else {
      for (int j = 1; j < M_; ++j) {
        const Stencil& s = st_[j];
        const int r = idx(0, j);
        for (int q = 0; q < 3; ++q) lhs.emplace_back(r, idx(0, s.first + q), s.d2[q]);
        lhs.emplace_back(r, r, -K2_);
        lhs.emplace_back(r, idx(1, j), -1.0);
      }
      lhs.emplace_back(idx(0, 0), idx(0, 0), 1.0);    // u3(0) = 0
      lhs.emplace_back(idx(0, M_), idx(0, M_), 1.0);  // u3(a) = 0
      for (int q = 0; q < 3; ++q)                     // u3'(0) = 0 in the phi_0 slot
        lhs.emplace_back(idx(1, 0), idx(0, bot.first + q), bot.d1[q]);
      // u3''(a) = -i k_h.beta sigma, written with the same nested stencil that rebuilds
      // d = -u3' and then differentiates it, so d_z u_h(a) holds exactly on the grid
      for (int q = 0; q < 3; ++q) {
        const Stencil& inner = st_[top.first + q];
        for (int r = 0; r < 3; ++r)
          lhs.emplace_back(idx(1, M_), idx(0, inner.first + r), top.d1[q] * inner.d1[r]);
      }
      lhs.emplace_back(idx(2, 0), idx(2, 0), 1.0);    // omega(0) = 0
      for (int q = 0; q < 3; ++q)                     // omega'(a) = i k_h^ wedge beta sigma
        lhs.emplace_back(idx(2, M_), idx(2, top.first + q), top.d1[q]);
    }
    SpMat L(n, n);
    L.setFromTriplets(lhs.begin(), lhs.end());
    explicit_.resize(n, n);
    explicit_.setFromTriplets(rhs.begin(), rhs.end());
    L.makeCompressed();
    lu_.compute(L);
    if (lu_.info() != Eigen::Success) throw NumericalError("direct: factorization failed");
  }

  int k1_, k2_;
  int M_;
  const std::vector<Stencil>& st_;
  LayerParams p_;
  Vec2 kh_;
  double K2_ = 0.0;
  bool horizontal_zero_ = false;
  int nvar_ = 3;
  Eigen::VectorXcd evolution_mask_;
  SpMat explicit_;
  Eigen::SparseLU<SpMat> lu_;

 public:
  int k1() const { return k1_; }
  int k2() const { return k2_; }
};

double l2_sq(const VerticalGrid& grid, const ProfileMatrix& u) {
  double s = 0.0;
  for (std::size_t j = 0; j < grid.size(); ++j) s += grid.weights()[j] * u.row(j).squaredNorm();
  return s;
}

}  // namespace

// ------------------------------------------------------------------- configs

void GridConfig::validate() const {
  if (Nz < 8) throw ConfigError("grid.Nz", "must be at least 8");
  if (!(stretch >= 0.0)) throw ConfigError("grid.stretch", "must be nonnegative");
  if (Nh < 0) throw ConfigError("grid.Nh", "must be nonnegative");
  if (!(dt >= 0.0)) throw ConfigError("grid.dt", "must be nonnegative");
  if (!(T_final >= 0.0)) throw ConfigError("grid.T_final", "must be nonnegative");
  if (output_every < 0) throw ConfigError("grid.output_every", "must be nonnegative");
  if (threads < 1) throw ConfigError("grid.threads", "must be at least 1");
}

GridConfig GridConfig::from_json(const nlohmann::json& j, const std::string& path) {
  using namespace jsonu;
  check_keys(j, path, {"Nz", "stretch", "Nh", "dt", "T_final", "output_every", "threads"});
  GridConfig c;
  c.Nz = static_cast<int>(integer_or(j, path, "Nz", c.Nz));
  c.stretch = number_or(j, path, "stretch", c.stretch);
  c.Nh = static_cast<int>(integer_or(j, path, "Nh", c.Nh));
  c.dt = number_or(j, path, "dt", c.dt);
  c.T_final = number_or(j, path, "T_final", c.T_final);
  c.output_every = static_cast<int>(integer_or(j, path, "output_every", c.output_every));
  c.threads = static_cast<int>(integer_or(j, path, "threads", c.threads));
  try {
    c.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(path + e.path().substr(std::string("grid").size()), e.what());
  }
  return c;
}

nlohmann::json GridConfig::to_json() const {
  return {{"Nz", Nz},           {"stretch", stretch},       {"Nh", Nh},          {"dt", dt},
          {"T_final", T_final}, {"output_every", output_every}, {"threads", threads}};
}

void ConvergenceConfig::validate() const {
  if (truncation < 1) throw ConfigError("compare.N", "must be at least 1");
  if (!(T_final > 0.0)) throw ConfigError("compare.T_final", "must be positive");
  if (!(nu_ratio > 0.0)) throw ConfigError("compare.nu_ratio", "must be positive");
  if (!(beta_eta >= 0.0)) throw ConfigError("compare.beta_eta", "must be nonnegative");
  if (!(delta >= 0.0)) throw ConfigError("compare.delta", "must be nonnegative");
  if (Nz < 8) throw ConfigError("compare.Nz", "must be at least 8");
  if (!(dt_fraction > 0.0)) throw ConfigError("compare.dt_fraction", "must be positive");
  if (outputs < 1) throw ConfigError("compare.outputs", "must be at least 1");
  if (!(envelope_dt > 0.0)) throw ConfigError("compare.envelope_dt", "must be positive");
  if (threads < 1) throw ConfigError("compare.threads", "must be at least 1");
}

ConvergenceConfig ConvergenceConfig::from_json(const nlohmann::json& j, const std::string& path) {
  using namespace jsonu;
  check_keys(j, path,
             {"N", "T_final", "nu_ratio", "beta_eta", "delta", "Nz", "dt_fraction", "outputs",
              "envelope_dt", "threads"});
  ConvergenceConfig c;
  c.truncation = static_cast<int>(integer_or(j, path, "N", c.truncation));
  c.T_final = number_or(j, path, "T_final", c.T_final);
  c.nu_ratio = number_or(j, path, "nu_ratio", c.nu_ratio);
  c.beta_eta = number_or(j, path, "beta_eta", c.beta_eta);
  c.delta = number_or(j, path, "delta", c.delta);
  c.Nz = static_cast<int>(integer_or(j, path, "Nz", c.Nz));
  c.dt_fraction = number_or(j, path, "dt_fraction", c.dt_fraction);
  c.outputs = static_cast<int>(integer_or(j, path, "outputs", c.outputs));
  c.envelope_dt = number_or(j, path, "envelope_dt", c.envelope_dt);
  c.threads = static_cast<int>(integer_or(j, path, "threads", c.threads));
  try {
    c.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(path + e.path().substr(std::string("compare").size()), e.what());
  }
  return c;
}

nlohmann::json ConvergenceConfig::to_json() const {
  return {{"N", truncation},       {"T_final", T_final},     {"nu_ratio", nu_ratio},
          {"beta_eta", beta_eta},  {"delta", delta},         {"Nz", Nz},
          {"dt_fraction", dt_fraction}, {"outputs", outputs}, {"envelope_dt", envelope_dt},
          {"threads", threads}};
}

// ---------------------------------------------------------------------- grid

VerticalGrid VerticalGrid::tanh(double a, int intervals, double stretch) {
  if (!(a > 0.0)) throw InvalidArgument("VerticalGrid: height must be positive");
  if (intervals < 6) throw InvalidArgument("VerticalGrid: need at least 6 intervals");
  if (!(stretch >= 0.0)) throw InvalidArgument("VerticalGrid: stretch must be nonnegative");
  VerticalGrid g;
  g.stretch_ = stretch;
  const int M = intervals;
  g.z_.resize(M + 1);
  for (int j = 0; j <= M; ++j) {
    const double xi = double(j) / M;
    g.z_[j] = stretch < 1e-8
                  ? a * xi
                  : 0.5 * a * (1.0 + std::tanh(stretch * (2.0 * xi - 1.0)) / std::tanh(stretch));
  }
  g.z_[0] = 0.0;
  g.z_[M] = a;
  // integrate the degree-5 interpolant through six neighbouring nodes on each interval
  g.w_.assign(M + 1, 0.0);
  const GaussRule ref = gauss_legendre(3, 0.0, 1.0);
  for (int j = 0; j < M; ++j) {
    const int s = std::clamp(j - 2, 0, M - 5);
    const double h = g.z_[j + 1] - g.z_[j];
    for (std::size_t q = 0; q < ref.x.size(); ++q) {
      const double x = g.z_[j] + h * ref.x[q];
      for (int m = 0; m < 6; ++m) {
        double l = 1.0;
        for (int n = 0; n < 6; ++n)
          if (n != m) l *= (x - g.z_[s + n]) / (g.z_[s + m] - g.z_[s + n]);
        g.w_[s + m] += h * ref.w[q] * l;
      }
    }
  }
  return g;
}

int VerticalGrid::points_within(double d, bool bottom) const {
  int count = 0;
  const double a = height();
  for (std::size_t j = 1; j + 1 < z_.size(); ++j)
    if ((bottom ? z_[j] : a - z_[j]) <= d) ++count;
  return count;
}

double resolving_stretch(double a, int intervals, double thickness, int min_points) {
  for (double s = 0.0; s <= 20.0 + 1e-12; s += 0.05) {
    const VerticalGrid g = VerticalGrid::tanh(a, intervals, s);
    if (g.points_within(thickness, true) >= min_points &&
        g.points_within(thickness, false) >= min_points)
      return s;
  }
  return -1.0;
}

// ------------------------------------------------------------ trajectories

std::size_t DirectTrajectory::kh_index(int k1, int k2) const {
  for (std::size_t i = 0; i < kh.size(); ++i)
    if (kh[i].first == k1 && kh[i].second == k2) return i;
  throw InvalidArgument("DirectTrajectory: horizontal mode not present");
}

double DirectTrajectory::l2_norm(std::size_t out) const {
  double s = 0.0;
  for (const auto& u : fields.at(out)) s += l2_sq(grid, u);
  return std::sqrt(geom.a1 * geom.a2 * s);
}

std::vector<ProfileMatrix> sample_on_grid(const SpectralField& f, const VerticalGrid& grid,
                                          const std::vector<HorizontalKey>& kh) {
  const TorusGeometry& g = f.geometry();
  std::vector<ProfileMatrix> out(kh.size(), ProfileMatrix::Zero(grid.size(), 3));
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (f[i] == 0.0) continue;
    const ModeIndex k = f.modes().mode(i);
    const auto it = std::find(kh.begin(), kh.end(), HorizontalKey{k.k1, k.k2});
    if (it == kh.end()) throw InvalidArgument("sample_on_grid: mode " + k.str() + " outside Nh");
    ProfileMatrix& u = out[it - kh.begin()];
    for (std::size_t j = 0; j < grid.size(); ++j)
      u.row(j) += (f[i] * mode_profile(g, k, grid.z()[j])).transpose();
  }
  return out;
}

SpectralField project_profiles(const TorusGeometry& g, const VerticalGrid& grid,
                               const std::vector<HorizontalKey>& kh,
                               const std::vector<ProfileMatrix>& u, int truncation) {
  SpectralField f(g, truncation);
  const double area = g.a1 * g.a2;
  for (std::size_t i = 0; i < f.size(); ++i) {
    const ModeIndex k = f.modes().mode(i);
    const auto it = std::find(kh.begin(), kh.end(), HorizontalKey{k.k1, k.k2});
    if (it == kh.end()) continue;
    const ProfileMatrix& v = u[it - kh.begin()];
    cplx s = 0.0;
    for (std::size_t j = 0; j < grid.size(); ++j)
      s += grid.weights()[j] * mode_profile(g, k, grid.z()[j]).dot(v.row(j).transpose());
    f[i] = area * s;
  }
  return f;
}

DirectTrajectory solve_direct_linear(const SpectralField& u0, const WindStress& ws,
                                     const LayerParams& p, const GridConfig& grid_cfg,
                                     const PhasePoint& w) {
  if (!(p.epsilon > 0.0) || !(p.nu > 0.0) || !(p.beta >= 0.0))
    throw InvalidArgument("direct: epsilon and nu must be positive, beta nonnegative");
  grid_cfg.validate();
  const TorusGeometry& g = u0.geometry();
  if (!ws.empty() && !(ws.geometry() == g))
    throw InvalidArgument("direct: wind and initial data use different geometries");

  DirectTrajectory tr;
  tr.geom = g;
  tr.warnings = p.regime_flags();
  const double layer = p.eta();
  double stretch = grid_cfg.stretch;
  if (stretch == 0.0) {
    // 8 points keep the solver stable but leave a few percent error in the layer
    // profile of modes with k_h != 0; 32 bring it down to O(eta).
    stretch = resolving_stretch(g.a, grid_cfg.Nz, layer, 32);
    if (stretch < 0.0) stretch = resolving_stretch(g.a, grid_cfg.Nz, layer, 8);
    if (stretch < 0.0) stretch = 20.0;
  }
  tr.grid = VerticalGrid::tanh(g.a, grid_cfg.Nz, stretch);
  if (tr.grid.points_within(layer, true) < 8 || tr.grid.points_within(layer, false) < 8)
    tr.warnings.push_back("unresolved layer: fewer than 8 points within sqrt(eps nu) of a wall");

  const int nh = grid_cfg.Nh;
  for (int k1 = -nh; k1 <= nh; ++k1)
    for (int k2 = -nh; k2 <= nh; ++k2) tr.kh.emplace_back(k1, k2);
  for (const auto& [k1, k2] : ws.horizontal_support())
    if (std::abs(k1) > nh || std::abs(k2) > nh)
      throw InvalidArgument("direct: wind mode outside the horizontal truncation Nh");

  const double dt_target = grid_cfg.dt > 0.0 ? grid_cfg.dt : p.epsilon / 32.0;
  const long steps = std::max(1L, static_cast<long>(std::ceil(grid_cfg.T_final / dt_target - 1e-9)));
  const double dt = grid_cfg.T_final > 0.0 ? grid_cfg.T_final / steps : 0.0;
  const long nsteps = grid_cfg.T_final > 0.0 ? steps : 0;
  const long every =
      grid_cfg.output_every > 0 ? grid_cfg.output_every : std::max(1L, nsteps / 40);
  for (long n = 0; n <= nsteps; ++n)
    if (n % every == 0 || n == nsteps) tr.times.push_back(n * dt);

  const std::vector<ProfileMatrix> init = sample_on_grid(u0, tr.grid, tr.kh);
  const std::vector<Stencil> st = make_stencils(tr.grid.z());
  const std::size_t nkh = tr.kh.size(), nout = tr.times.size();
  tr.fields.assign(nout, std::vector<ProfileMatrix>(nkh));
  std::vector<std::vector<double>> div(nkh, std::vector<double>(nout, 0.0));

  auto run_mode = [&](std::size_t m) {
    const int k1 = tr.kh[m].first, k2 = tr.kh[m].second;
    ModeSystem sys(g, tr.grid, st, k1, k2, p, dt > 0.0 ? dt : 1.0);
    auto data = [&](double t) {
      return sys.boundary(ws.empty() ? CVec2(CVec2::Zero())
                                     : ws.mode_amplitude(k1, k2, t, t / p.epsilon, w));
    };
    Eigen::VectorXcd x = sys.state_from(init[m]);
    std::size_t out = 0;
    auto record = [&](long n) {
      if (out < nout && std::abs(tr.times[out] - n * dt) < 1e-12 * (1.0 + n * dt)) {
        ProfileMatrix u = n == 0 ? init[m] : sys.profile(x);
        if (!u.allFinite() || u.norm() > 1e10) throw NumericalError("direct: solver diverged");
        div[m][out] = n == 0 ? 0.0 : sys.divergence(u);
        tr.fields[out][m] = std::move(u);
        ++out;
      }
    };
    record(0);
    for (long n = 1; n <= nsteps; ++n) {
      const double t0 = (n - 1) * dt;
      if (n <= 2) {
        // two backward Euler half steps damp the incompatible initial data
        x = sys.backward_half(x, data(t0 + 0.5 * dt));
        x = sys.backward_half(x, data(t0 + dt));
      } else {
        x = sys.trapezoidal(x, data(t0 + dt));
      }
      record(n);
    }
  };

  const int nthreads = std::max(1, std::min<int>(grid_cfg.threads, static_cast<int>(nkh)));
  if (nthreads == 1) {
    for (std::size_t m = 0; m < nkh; ++m) run_mode(m);
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errs(nthreads);
    for (int t = 0; t < nthreads; ++t)
      pool.emplace_back([&, t] {
        try {
          for (std::size_t m = t; m < nkh; m += nthreads) run_mode(m);
        } catch (...) {
          errs[t] = std::current_exception();
        }
      });
    for (auto& th : pool) th.join();
    for (auto& e : errs)
      if (e) std::rethrow_exception(e);
  }
  tr.divergence.assign(nout, 0.0);
  for (std::size_t o = 0; o < nout; ++o)
    for (std::size_t m = 0; m < nkh; ++m) tr.divergence[o] = std::max(tr.divergence[o], div[m][o]);
  return tr;
}

std::vector<SpectralField> filter_project(const DirectTrajectory& tr, int truncation,
                                          double epsilon) {
  if (!(epsilon > 0.0)) throw InvalidArgument("filter_project: epsilon must be positive");
  const int need = 12 * truncation + 24;
  if (static_cast<int>(tr.grid.size()) < need) {
    // the projection quadrature cannot resolve the highest vertical modes
    throw InvalidArgument("filter_project: grid too coarse for truncation (aliasing)");
  }
  std::vector<SpectralField> out;
  out.reserve(tr.times.size());
  for (std::size_t o = 0; o < tr.times.size(); ++o) {
    const SpectralField f = project_profiles(tr.geom, tr.grid, tr.kh, tr.fields[o], truncation);
    out.push_back(semigroup_apply(f, tr.times[o] / epsilon, -1));
  }
  return out;
}

ErrorNorms compare_with_envelope(const DirectTrajectory& tr,
                                 const std::vector<SpectralField>& envelope, double epsilon) {
  if (envelope.size() != tr.times.size())
    throw InvalidArgument("compare_with_envelope: one envelope snapshot per output required");
  const double area = tr.geom.a1 * tr.geom.a2;
  std::vector<double> l2(tr.times.size()), h10(tr.times.size());
  for (std::size_t o = 0; o < tr.times.size(); ++o) {
    const SpectralField interior = semigroup_apply(envelope[o], tr.times[o] / epsilon, 1);
    const std::vector<ProfileMatrix> ref = sample_on_grid(interior, tr.grid, tr.kh);
    double s0 = 0.0, s1 = 0.0;
    for (std::size_t m = 0; m < tr.kh.size(); ++m) {
      const double e = l2_sq(tr.grid, tr.fields[o][m] - ref[m]);
      const Vec3 kp = wavevector(tr.geom, {tr.kh[m].first, tr.kh[m].second, 0});
      s0 += e;
      s1 += kp.squaredNorm() * e;
    }
    l2[o] = std::sqrt(area * s0);
    h10[o] = area * s1;
  }
  ErrorNorms n;
  n.linf_l2 = *std::max_element(l2.begin(), l2.end());
  double integral = 0.0;
  for (std::size_t o = 1; o < tr.times.size(); ++o)
    integral += 0.5 * (tr.times[o] - tr.times[o - 1]) * (h10[o] + h10[o - 1]);
  n.l2_h10 = std::sqrt(integral);
  return n;
}

ErrorNorms compare_filtered(const std::vector<double>& times,
                            const std::vector<SpectralField>& filtered,
                            const std::vector<SpectralField>& envelope) {
  if (filtered.size() != times.size() || envelope.size() != times.size())
    throw InvalidArgument("compare_filtered: one snapshot per output time required");
  ErrorNorms n;
  double integral = 0.0, prev = 0.0;
  for (std::size_t o = 0; o < times.size(); ++o) {
    const SpectralField& f = filtered[o];
    const SpectralField e = f - envelope[o].retruncated(f.truncation());
    double h = 0.0;
    for (std::size_t i = 0; i < e.size(); ++i) {
      const Vec3 kp = wavevector(e.geometry(), e.modes().mode(i));
      h += (kp(0) * kp(0) + kp(1) * kp(1)) * std::norm(e[i]);
    }
    n.linf_l2 = std::max(n.linf_l2, e.norm());
    if (o > 0) integral += 0.5 * (times[o] - times[o - 1]) * (h + prev);
    prev = h;
  }
  n.l2_h10 = std::sqrt(integral);
  return n;
}

std::vector<ConvergenceRow> convergence_study(const SpectralField& u0, const WindStress& ws,
                                              const std::vector<double>& eps_list,
                                              const ConvergenceConfig& cfg, const PhasePoint& w) {
  cfg.validate();
  const SpectralField start_field = u0.retruncated(cfg.truncation);
  int nh = cfg.truncation;
  for (const auto& [k1, k2] : ws.horizontal_support())
    nh = std::max({nh, std::abs(k1), std::abs(k2)});
  std::vector<ConvergenceRow> rows;
  for (double eps : eps_list) {
    const auto start = std::chrono::steady_clock::now();
    ConvergenceRow row;
    row.epsilon = eps;
    row.nu = cfg.nu_ratio * eps;
    row.beta = cfg.beta_eta / std::sqrt(eps * row.nu);

    LayerParams p;
    p.epsilon = eps;
    p.nu = row.nu;
    p.beta = row.beta;
    p.delta = 0.0;
    GridConfig gc;
    gc.Nz = cfg.Nz;
    gc.Nh = nh;
    gc.T_final = cfg.T_final;
    gc.threads = cfg.threads;
    const double out_dt = cfg.T_final / cfg.outputs;
    const long per_out = std::max(1L, static_cast<long>(std::ceil(out_dt / (cfg.dt_fraction * eps))));
    gc.dt = out_dt / per_out;
    gc.output_every = static_cast<int>(per_out);
    const DirectTrajectory tr = solve_direct_linear(start_field, ws, p, gc, w);

    EnvelopeConfig ec;
    ec.epsilon = eps;
    ec.nu = row.nu;
    ec.beta = row.beta;
    ec.delta = cfg.delta;
    ec.truncation = cfg.truncation;
    ec.nonlinear = false;
    ec.T_final = cfg.T_final;
    const int env_per_out = std::max(1, static_cast<int>(std::ceil(out_dt / cfg.envelope_dt)));
    ec.dt = out_dt / env_per_out;
    ec.output_every = env_per_out;
    const TrajectoryRecord env = solve_envelope(start_field, ws, ec, w);
    if (env.snapshots.size() != tr.times.size())
      throw NumericalError("convergence_study: envelope and direct outputs do not align");

    const ErrorNorms e =
        compare_filtered(tr.times, filter_project(tr, cfg.truncation, eps), env.snapshots);
    row.err_LinfL2 = e.linf_l2;
    row.err_L2H10 = e.l2_h10;
    const ErrorNorms full = compare_with_envelope(tr, env.snapshots, eps);
    row.full_LinfL2 = full.linf_l2;
    row.full_L2H10 = full.l2_h10;
    row.runtime_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    rows.push_back(row);
  }
  return rows;
}

}  // namespace rotwind
