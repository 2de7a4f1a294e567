#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "rotwind/ekman_sources.hpp"
#include "rotwind/envelope.hpp"
#include "rotwind/errors.hpp"

namespace rotwind {
namespace {

const TorusGeometry kGeom{1.0, 1.3, 0.7};

std::shared_ptr<const TriadTable> table(int n) {
  static std::map<int, std::shared_ptr<const TriadTable>> cache;
  auto& t = cache[n];
  if (!t) t = std::make_shared<TriadTable>(TriadTable::build(kGeom, n));
  return t;
}

WindStress resonant_wind() {
  const double mu = -eigenvalue(kGeom, {1, 0, 1});
  nlohmann::json j = {
      {"base_frequencies", {mu}},
      {"modes",
       {{{"kh", {1, 0}}, {"atoms", {{{"mu", mu}, {"re1", 0.4}, {"im2", 0.3}}}}},
        {{"kh", {0, 1}}, {"atoms", {{{"mu", 0.0}, {"re1", 0.2}, {"re2", 0.1}}}}}}}};
  return WindStress::from_json(kGeom, j);
}

EnvelopeConfig config(double dt, double T) {
  EnvelopeConfig c;
  c.epsilon = 1e-2;
  c.nu = 1e-2;
  c.beta = 5.0;
  c.delta = 1e-2;
  c.truncation = 1;
  c.dt = dt;
  c.T_final = T;
  return c;
}

SpectralField initial(int n, unsigned seed = 7) {
  std::mt19937_64 rng(seed);
  SpectralField w = random_real_field(kGeom, n, rng);
  w *= 2.0 / w.norm();
  return w;
}

TEST(Envelope, ZeroStaysZero) {
  const WindStress none(kGeom, {}, {});
  const auto r = solve_envelope(SpectralField(kGeom, 1), none, config(0.01, 0.2), {}, table(1));
  for (const auto& s : r.snapshots) EXPECT_EQ(s.max_abs(), 0.0);
}

TEST(Envelope, SingleHorizontalModeMatchesScalarDecay) {
  const WindStress none(kGeom, {}, {});
  SpectralField u0(kGeom, 1);
  u0.set({1, 0, 0}, cplx(0.3, 0.2));
  u0.set({-1, 0, 0}, double(conjugate_partner_sign({1, 0, 0})) * cplx(0.3, -0.2));
  ASSERT_LT(reality_defect(u0), 1e-15);
  const EnvelopeConfig c0 = config(0.01, 0.1);
  const double kx = 2 * kPi / kGeom.a1;
  const double rate = kx * kx + c0.pumping_scale() / (std::sqrt(2.0) * kGeom.a);
  std::vector<double> err;
  const cplx exact = cplx(0.3, 0.2) * std::exp(-rate * c0.T_final);
  for (double dt : {0.01, 0.005}) {
    EnvelopeConfig c = c0;
    c.dt = dt;
    const auto r = solve_envelope(u0, none, c, {}, table(1));
    err.push_back(std::abs(r.snapshots.back().at({1, 0, 0}) - exact));
  }
  EXPECT_NEAR(err[0] / err[1], 4.0, 0.3);
  EXPECT_LT(err[1], 0.02 * std::abs(exact));
}

TEST(Envelope, DampingExactnessPerMode) {
  const WindStress none(kGeom, {}, {});
  const SpectralField u0 = initial(1);
  EnvelopeConfig c = config(0.002, 0.1);
  c.nonlinear = false;
  EnvelopeSolver s(u0, none, c, {});
  const std::vector<cplx> rates = s.linear_rates();
  for (int n = 0; n < 50; ++n) s.step();
  double worst = 0.0;
  for (std::size_t i = 0; i < u0.size(); ++i) {
    EXPECT_GE(rates[i].real(), 0.0);
    worst = std::max(worst, std::abs(s.state()[i] - u0[i] * std::exp(-rates[i] * 0.1)));
  }
  EXPECT_LT(worst, 1e-4);
}

TEST(Envelope, SecondOrderRichardson) {
  const WindStress ws = resonant_wind();
  const SpectralField u0 = initial(1);
  std::vector<SpectralField> out;
  for (double dt : {0.02, 0.01, 0.005})
    out.push_back(solve_envelope(u0, ws, config(dt, 0.4), {0.3}, table(1)).snapshots.back());
  const double r = (out[0] - out[1]).norm() / (out[1] - out[2]).norm();
  EXPECT_NEAR(r, 4.0, 0.5);
}

TEST(Envelope, QbarConservesEnergy) {
  for (unsigned seed : {1u, 2u, 3u}) {
    const SpectralField w = initial(2, seed);
    EXPECT_LT(std::abs(w.inner(table(2)->qbar_apply(w, w)).real()), 1e-10);
  }
}

TEST(Envelope, EnergyBudgetCloses) {
  const WindStress ws = resonant_wind();
  const SpectralField u0 = initial(1);
  std::vector<double> res;
  for (double dt : {2e-3, 1e-3}) {
    const auto r = solve_envelope(u0, ws, config(dt, 0.3), {0.3}, table(1));
    res.push_back(energy_budget_residual(r, 0.05));
  }
  EXPECT_LT(res[1], 0.35 * res[0]);
  EXPECT_LT(res[1], 1e-2);
}

TEST(Envelope, RealityIsPreserved) {
  const auto r = solve_envelope(initial(1), resonant_wind(), config(0.01, 0.3), {1.2}, table(1));
  EXPECT_LT(reality_defect(r.snapshots.back()), 1e-13);
}

TEST(Envelope, DampedSourceApproachesLimit) {
  const WindStress ws = resonant_wind();
  const SpectralField u0 = initial(1);
  EnvelopeConfig c = config(0.01, 0.5);
  c.delta = 0.0;
  const auto lim = solve_envelope(u0, ws, c, {0.3}, table(1)).snapshots.back();
  std::vector<double> diff, bound;
  for (double d : {1e-2, 5e-3}) {
    c.delta = d;
    diff.push_back((solve_envelope(u0, ws, c, {0.3}, table(1)).snapshots.back() - lim).norm());
    const double ds = (S_T_delta(ws, d, 0.0, {0.3}, 1) - S_T_limit(ws, 0.0, {0.3}, 1)).norm();
    bound.push_back(c.nu * c.beta * ds * c.T_final);
  }
  EXPECT_LE(diff[0], 2.0 * bound[0]);
  EXPECT_LE(diff[1], 2.0 * bound[1]);
  EXPECT_NEAR(diff[0] / diff[1], 2.0, 0.1);
}

TEST(Envelope, LimitSourceRejectsH2Violation) {
  const double mu = -eigenvalue(kGeom, {1, 0, 1});
  nlohmann::json j = {{"base_frequencies", {mu}},
                      {"modes", {{{"kh", {1, 0}}, {"atoms", {{{"mu", mu}, {"re1", 1.0}}}}}}}};
  const WindStress ws = WindStress::from_json(kGeom, j);
  EnvelopeConfig c = config(0.01, 0.05);
  c.delta = 0.0;
  c.h2_eta = 1.0;
  EXPECT_THROW(solve_envelope(initial(1), ws, c, {0.0}, table(1)), HypothesisError);
}

TEST(Envelope, BitwiseDeterministic) {
  const auto a = solve_envelope(initial(1), resonant_wind(), config(0.01, 0.2), {0.5}, table(1));
  const auto b = solve_envelope(initial(1), resonant_wind(), config(0.01, 0.2), {0.5}, table(1));
  ASSERT_EQ(a.snapshots.size(), b.snapshots.size());
  for (std::size_t i = 0; i < a.snapshots.size(); ++i)
    EXPECT_TRUE(a.snapshots[i].data() == b.snapshots[i].data());
}

TEST(Envelope, BlowUpIsDetected) {
  EnvelopeConfig c = config(0.01, 0.1);
  c.energy_bound = 1e-3;
  EXPECT_THROW(solve_envelope(initial(1), resonant_wind(), c, {0.5}, table(1)), NumericalError);
}

TEST(Envelope, ConfigParsing) {
  const EnvelopeConfig c = EnvelopeConfig::from_json(
      {{"epsilon", 0.01}, {"nu", 0.02}, {"N", 3}, {"dt", 0.001}, {"T_final", 2.0}});
  EXPECT_EQ(c.truncation, 3);
  EXPECT_DOUBLE_EQ(c.nu, 0.02);
  try {
    EnvelopeConfig::from_json({{"epsilon", 0.01}, {"bogus", 1}});
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.path(), "envelope.bogus");
  }
  try {
    EnvelopeConfig::from_json({{"dt", -1.0}}, "run.envelope");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.path(), "run.envelope.dt");
  }
  const EnvelopeConfig back = EnvelopeConfig::from_json(c.to_json());
  EXPECT_EQ(back.to_json(), c.to_json());
}

}  // namespace
}  // namespace rotwind
