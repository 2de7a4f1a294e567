#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "rotwind/direct_sim.hpp"
#include "rotwind/errors.hpp"

namespace rotwind {
namespace {

const TorusGeometry kGeom{1.0, 1.3, 0.7};
const TorusGeometry kWide{2.0 * kPi, 2.6 * kPi, 1.0};
const cplx I(0.0, 1.0);

LayerParams params(double eps, double nu, double beta) {
  LayerParams p;
  p.epsilon = eps;
  p.nu = nu;
  p.beta = beta;
  return p;
}

WindStress two_mode_wind(const TorusGeometry& g) {
  nlohmann::json j = {
      {"base_frequencies", {2.0}},
      {"modes",
       {{{"kh", {0, 1}}, {"atoms", {{{"mu", 0.0}, {"re1", 0.2}, {"re2", 0.1}}}}},
        {{"kh", {1, 0}}, {"atoms", {{{"mu", 2.0}, {"re1", 0.3}, {"im2", 0.2}}}}}}}};
  return WindStress::from_json(g, j);
}

SpectralField smooth_field(const TorusGeometry& g, int n, unsigned seed, double norm = 1.0) {
  std::mt19937_64 rng(seed);
  SpectralField f = random_real_field(g, n, rng);
  f *= norm / f.norm();
  return f;
}

TEST(VerticalGrid, QuadratureIsExactForQuintics) {
  const VerticalGrid g = VerticalGrid::tanh(0.7, 64, 2.5);
  for (int p = 0; p <= 5; ++p) {
    double s = 0.0;
    for (std::size_t j = 0; j < g.size(); ++j) s += g.weights()[j] * std::pow(g.z()[j], p);
    EXPECT_NEAR(s, std::pow(0.7, p + 1) / (p + 1), 1e-14);
  }
  EXPECT_DOUBLE_EQ(g.z().front(), 0.0);
  EXPECT_DOUBLE_EQ(g.z().back(), 0.7);
}

TEST(VerticalGrid, ResolvingStretchPlacesEightPointsInLayer) {
  const double d = 1e-2;
  const double s = resolving_stretch(0.7, 200, d);
  ASSERT_GT(s, 0.0);
  const VerticalGrid g = VerticalGrid::tanh(0.7, 200, s);
  EXPECT_GE(g.points_within(d, true), 8);
  EXPECT_GE(g.points_within(d, false), 8);
  const VerticalGrid coarser = VerticalGrid::tanh(0.7, 200, std::max(0.0, s - 0.05));
  EXPECT_LT(std::min(coarser.points_within(d, true), coarser.points_within(d, false)), 8);
}

TEST(DirectSim, ZeroDataStaysZero) {
  GridConfig gc;
  gc.Nz = 64;
  gc.T_final = 0.05;
  const DirectTrajectory tr =
      solve_direct_linear(SpectralField(kGeom, 1), WindStress(), params(0.1, 0.1, 1.0), gc, {});
  for (const auto& out : tr.fields)
    for (const auto& u : out) EXPECT_EQ(u.norm(), 0.0);
}

// U+- = u1 +- i u2 obeys a heat equation times exp(-+ i t/eps); the oracle is the
// sine series for u(0) = 0, u'(a) = 0.
cplx heat_series(double amp, double a, double k3p, double nu, double t, double z) {
  cplx s = 0.0;
  for (int n = 0; n < 4000; ++n) {
    const double m = (n + 0.5) * kPi / a;
    const double cp = m + k3p, cm = m - k3p;
    const double integral = 0.5 * ((1.0 - std::cos(cp * a)) / cp + (1.0 - std::cos(cm * a)) / cm);
    s += (2.0 / a) * amp * integral * std::exp(-nu * m * m * t) * std::sin(m * z);
  }
  return s;
}

TEST(DirectSim, HorizontallyUniformModeMatchesHeatOracle) {
  const ModeIndex k{0, 0, 1};
  const double nu = 0.05, T = 0.05;
  for (double eps : {1e3, 0.2}) {
    std::vector<double> errs;
    for (int nz : {128, 256}) {
      SpectralField u0(kGeom, 1);
      u0.set(k, 1.0);
      GridConfig gc;
      gc.Nz = nz;
      gc.stretch = 1.0;
      gc.Nh = 0;
      gc.T_final = T;
      gc.dt = 2.5e-5;
      gc.output_every = 100000;
      const DirectTrajectory tr = solve_direct_linear(u0, WindStress(), params(eps, nu, 1.0), gc, {});
      const ProfileMatrix& u = tr.fields.back()[0];
      const CVec3 n = eigenvector(kGeom, k);
      const double k3p = kPi / kGeom.a;
      const cplx up0 = n(0) + I * n(1), um0 = n(0) - I * n(1);
      double err = 0.0, ref = 0.0;
      for (std::size_t j = 0; j < tr.grid.size(); ++j) {
        const double z = tr.grid.z()[j];
        const cplx h = heat_series(1.0, kGeom.a, k3p, nu, T, z);
        const cplx up = up0 * h * std::exp(-I * T / eps), um = um0 * h * std::exp(I * T / eps);
        err = std::max(err, std::abs(u(j, 0) + I * u(j, 1) - up));
        err = std::max(err, std::abs(u(j, 0) - I * u(j, 1) - um));
        ref = std::max({ref, std::abs(up), std::abs(um)});
      }
      errs.push_back(err / ref);
    }
    EXPECT_LT(errs[1], 2e-4) << eps;
    EXPECT_GT(errs[0] / errs[1], 3.0) << eps;
  }
}

TEST(DirectSim, PeriodicWindApproachesTopLayerClosedForm) {
  const double eps = 1e-3;
  nlohmann::json j = {
      {"base_frequencies", {2.0}},
      {"modes", {{{"kh", {1, 0}}, {"atoms", {{{"mu", 2.0}, {"re1", 0.3}, {"im2", 0.2}}}}}}}};
  const WindStress ws = WindStress::from_json(kGeom, j);
  LayerParams p = params(eps, eps, 1.0 / eps);
  GridConfig gc;
  gc.Nz = 256;
  gc.T_final = 0.1;  // tau = 100
  gc.output_every = 100000;
  const DirectTrajectory tr = solve_direct_linear(SpectralField(kGeom, 1), ws, p, gc, {0.0});
  const ProfileMatrix& u = tr.fields.back()[tr.kh_index(1, 0)];
  // horizontal diffusion acts as damping eps |k_h'|^2 in fast time
  p.delta = eps * std::pow(2.0 * kPi, 2);
  double err = 0.0, ref = 0.0;
  const double t = tr.times.back();
  for (std::size_t jz = 0; jz < tr.grid.size(); ++jz) {
    const double zeta = (kGeom.a - tr.grid.z()[jz]) / p.eta();
    if (zeta > 6.0) continue;
    const CVec3 L = top_layer_mode(ws, p, 1, 0, t, t / eps, zeta, {0.0});
    err = std::max(err, (u.row(jz).head<2>().transpose() - L.head<2>()).norm());
    ref = std::max(ref, L.head<2>().norm());
  }
  EXPECT_LT(err / ref, 0.03);
}

TEST(DirectSim, BoundaryConditionsAndDivergence) {
  const WindStress ws = two_mode_wind(kGeom);
  const LayerParams p = params(0.05, 0.05, 20.0);
  GridConfig gc;
  gc.Nz = 128;
  gc.T_final = 0.1;
  const DirectTrajectory tr = solve_direct_linear(smooth_field(kGeom, 1, 2), ws, p, gc, {0.3});
  const auto& z = tr.grid.z();
  const std::size_t M = z.size() - 1;
  for (std::size_t o = 1; o < tr.times.size(); ++o) {
    EXPECT_LT(tr.divergence[o], 1e-10);
    for (std::size_t m = 0; m < tr.kh.size(); ++m) {
      const ProfileMatrix& u = tr.fields[o][m];
      EXPECT_LT(u.row(0).norm(), 1e-12);
      EXPECT_LT(std::abs(u(M, 2)), 1e-12);
      // one-sided derivative at the top against beta sigma
      const double h1 = z[M] - z[M - 1], h2 = z[M - 1] - z[M - 2];
      const double c0 = (2.0 * h1 + h2) / (h1 * (h1 + h2)), c1 = -(h1 + h2) / (h1 * h2),
                   c2 = h1 / (h2 * (h1 + h2));
      const CVec2 du = (c0 * u.row(M) + c1 * u.row(M - 1) + c2 * u.row(M - 2)).head<2>().transpose();
      const double t = tr.times[o];
      const CVec2 want =
          p.beta * ws.mode_amplitude(tr.kh[m].first, tr.kh[m].second, t, t / p.epsilon, {0.3});
      EXPECT_LT((du - want).norm(), 1e-9 * (1.0 + want.norm()));
    }
  }
}

TEST(DirectSim, EnergyNonIncreasingWithoutWind) {
  GridConfig gc;
  gc.Nz = 128;
  gc.Nh = 2;
  gc.T_final = 0.2;
  const DirectTrajectory tr = solve_direct_linear(smooth_field(kGeom, 2, 4), WindStress(),
                                                  params(0.05, 0.05, 1.0), gc, {});
  // the first output carries the incompatible initial data
  for (std::size_t o = 2; o < tr.times.size(); ++o)
    EXPECT_LE(tr.l2_norm(o), tr.l2_norm(o - 1) * (1.0 + 1e-12)) << o;
}

TEST(DirectSim, ThreadedRunIsBitwiseIdentical) {
  const WindStress ws = two_mode_wind(kGeom);
  GridConfig gc;
  gc.Nz = 64;
  gc.T_final = 0.02;
  const SpectralField u0 = smooth_field(kGeom, 1, 8);
  const DirectTrajectory a = solve_direct_linear(u0, ws, params(0.05, 0.05, 20.0), gc, {0.1});
  gc.threads = 4;
  const DirectTrajectory b = solve_direct_linear(u0, ws, params(0.05, 0.05, 20.0), gc, {0.1});
  for (std::size_t o = 0; o < a.times.size(); ++o)
    for (std::size_t m = 0; m < a.kh.size(); ++m)
      EXPECT_EQ((a.fields[o][m] - b.fields[o][m]).norm(), 0.0);
}

TEST(DirectSim, UnresolvedLayerIsFlagged) {
  GridConfig gc;
  gc.Nz = 32;
  gc.stretch = 0.5;
  gc.T_final = 0.001;
  const DirectTrajectory tr =
      solve_direct_linear(SpectralField(kGeom, 1), WindStress(), params(1e-3, 1e-3, 1.0), gc, {});
  bool flagged = false;
  for (const auto& w : tr.warnings) flagged = flagged || w.find("unresolved") != std::string::npos;
  EXPECT_TRUE(flagged);
}

TEST(DirectSim, WindOutsideHorizontalTruncationIsRejected) {
  GridConfig gc;
  gc.Nh = 0;
  EXPECT_THROW(solve_direct_linear(SpectralField(kGeom, 1), two_mode_wind(kGeom),
                                   params(0.1, 0.1, 1.0), gc, {0.0}),
               InvalidArgument);
}

TEST(GridConfig, JsonRoundTripAndErrors) {
  GridConfig c;
  c.Nz = 100;
  c.stretch = 2.0;
  const GridConfig d = GridConfig::from_json(c.to_json());
  EXPECT_EQ(d.Nz, 100);
  EXPECT_EQ(d.stretch, 2.0);
  try {
    GridConfig::from_json({{"Nz", 10}, {"bogus", 1}}, "run.grid");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.path(), "run.grid.bogus");
  }
  try {
    GridConfig::from_json({{"Nz", 2}}, "run.grid");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.path(), "run.grid.Nz");
  }
}

// ---------------------------------------------------------------- filtering

DirectTrajectory synthetic(const SpectralField& f, const std::vector<double>& times, double eps,
                           int nz) {
  DirectTrajectory tr;
  tr.geom = f.geometry();
  tr.grid = VerticalGrid::tanh(tr.geom.a, nz, 1.5);
  for (int k1 = -2; k1 <= 2; ++k1)
    for (int k2 = -2; k2 <= 2; ++k2) tr.kh.emplace_back(k1, k2);
  tr.times = times;
  for (double t : times) tr.fields.push_back(sample_on_grid(semigroup_apply(f, t / eps, 1), tr.grid, tr.kh));
  return tr;
}

TEST(FilterProject, OscillatingEigenmodeFiltersToConstant) {
  SpectralField f(kGeom, 2);
  f.set({1, -1, 2}, cplx(0.4, -0.2));
  const double eps = 1e-2;
  const auto filtered = filter_project(synthetic(f, {0.0, 0.013, 0.05, 0.21}, eps, 256), 2, eps);
  for (const auto& w : filtered) EXPECT_LT((w - f).max_abs(), 1e-10);
}

TEST(FilterProject, ZeroFieldGivesZero) {
  const auto filtered = filter_project(synthetic(SpectralField(kGeom, 2), {0.0, 0.1}, 0.1, 64), 2, 0.1);
  for (const auto& w : filtered) EXPECT_EQ(w.max_abs(), 0.0);
}

TEST(FilterProject, SmoothFieldRoundTrip) {
  const SpectralField f = smooth_field(kGeom, 2, 17);
  const auto filtered = filter_project(synthetic(f, {0.0}, 0.1, 256), 2, 0.1);
  EXPECT_LT((filtered[0] - f).norm() / f.norm(), 1e-6);
}

TEST(FilterProject, CoarseGridIsRejected) {
  const SpectralField f = smooth_field(kGeom, 2, 17);
  EXPECT_THROW(filter_project(synthetic(f, {0.0}, 0.1, 16), 2, 0.1), InvalidArgument);
}

// -------------------------------------------------------------- convergence

ConvergenceConfig quick_config() {
  ConvergenceConfig c;
  c.truncation = 1;
  c.T_final = 0.5;
  c.Nz = 192;
  c.outputs = 20;
  return c;
}

TEST(Convergence, ZeroWindAndZeroDataGiveZeroErrors) {
  ConvergenceConfig c = quick_config();
  c.beta_eta = 0.0;
  c.T_final = 0.1;
  const auto rows = convergence_study(SpectralField(kGeom, 1), two_mode_wind(kGeom), {0.1}, c, {0.0});
  EXPECT_EQ(rows[0].beta, 0.0);
  EXPECT_EQ(rows[0].err_LinfL2, 0.0);
  EXPECT_EQ(rows[0].err_L2H10, 0.0);
}

TEST(Convergence, SingleModeWithoutWindDecreasesInEpsilon) {
  SpectralField u0(kGeom, 1);
  u0.set({1, 0, 1}, 0.5);
  u0.set({-1, 0, -1}, double(conjugate_partner_sign({1, 0, 1})) * 0.5);
  const auto rows = convergence_study(u0, WindStress(), {1e-1, 3e-2, 1e-2}, quick_config(), {});
  for (std::size_t i = 1; i < rows.size(); ++i) {
    EXPECT_LT(rows[i].err_LinfL2, rows[i - 1].err_LinfL2);
    EXPECT_LT(rows[i].err_L2H10, rows[i - 1].err_L2H10);
  }
}

TEST(Convergence, WindDrivenErrorsDecreaseMonotonically) {
  const WindStress ws = two_mode_wind(kWide);
  const auto rows =
      convergence_study(smooth_field(kWide, 1, 3), ws, {1e-1, 3e-2, 1e-2}, quick_config(), {0.0});
  for (std::size_t i = 1; i < rows.size(); ++i) {
    EXPECT_LT(rows[i].err_LinfL2, rows[i - 1].err_LinfL2);
    EXPECT_LT(rows[i].err_L2H10, rows[i - 1].err_L2H10);
    EXPECT_LT(rows[i].full_LinfL2, rows[i - 1].full_LinfL2);
    EXPECT_LT(rows[i].full_L2H10, rows[i - 1].full_L2H10);
  }
  EXPECT_NEAR(rows[0].beta * std::sqrt(rows[0].epsilon * rows[0].nu), 1.0, 1e-12);
}

TEST(Convergence, FilteredCoefficientsVarySlowly) {
  const WindStress ws = two_mode_wind(kGeom);
  std::vector<double> rates;
  for (double eps : {3e-2, 1e-2}) {
    GridConfig gc;
    gc.Nz = 192;
    gc.T_final = 0.3;
    gc.dt = 0.3 / 20 / std::ceil(0.3 / 20 / (eps / 32));
    gc.output_every = static_cast<int>(std::round(0.3 / 20 / gc.dt));
    const SpectralField u0 = smooth_field(kGeom, 1, 5);
    const DirectTrajectory tr = solve_direct_linear(u0, ws, params(eps, eps, 1.0 / eps), gc, {0.0});
    const auto f = filter_project(tr, 1, eps);
    double worst = 0.0;
    for (std::size_t o = 2; o < f.size(); ++o)
      worst = std::max(worst, (f[o] - f[o - 1]).norm() / (tr.times[o] - tr.times[o - 1]));
    rates.push_back(worst);
  }
  EXPECT_LT(rates[1], 2.0 * rates[0]);
}

}  // namespace
}  // namespace rotwind
