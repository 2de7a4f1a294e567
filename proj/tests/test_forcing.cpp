#include <gtest/gtest.h>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>

#include "rotwind/errors.hpp"
#include "rotwind/forcing.hpp"

namespace rotwind {
namespace {

const TorusGeometry kGeom{1.0, 1.0, 1.0};
const cplx I(0.0, 1.0);

WindStress two_atom_wind() {
  nlohmann::json j = {
      {"base_frequencies", {0.3, -0.45}},
      {"modes",
       {{{"kh", {1, 0}}, {"atoms", {{{"mu", 0.3}, {"re1", 0.5}, {"im2", 0.2}}}}},
        {{"kh", {0, 1}}, {"atoms", {{{"mu", -0.45}, {"re2", 0.25}, {"im1", -0.1}}}}}}}};
  return WindStress::from_json(kGeom, j);
}

TEST(Forcing, SingleConstantAtomSample) {
  nlohmann::json j = {{"base_frequencies", {0.0}},
                      {"modes", {{{"kh", {0, 0}}, {"atoms", {{{"mu", 0.0}, {"re1", 1.0}}}}}}}};
  const WindStress ws = WindStress::from_json(kGeom, j);
  const PhasePoint w{0.7};
  const Vec2 s = ws.sample(0.0, 3.3, Vec2(0.2, 0.4), w);
  EXPECT_NEAR(s(0), 2.0 * std::cos(0.7), 1e-14);
  EXPECT_NEAR(s(1), 0.0, 1e-14);
}

TEST(Forcing, EmptyWindIsZero) {
  const WindStress ws(kGeom, {}, {});
  EXPECT_EQ(ws.sample(0.0, 1.0, Vec2(0.1, 0.1), {}), Vec2::Zero());
  EXPECT_EQ(reconstruct_sigma_alpha(ws, 0.1, 0.0, 1.0, Vec2(0.1, 0.1), {}).value, Vec2::Zero());
}

TEST(Forcing, StationarityUnderPhaseShift) {
  const WindStress ws = two_atom_wind();
  std::mt19937_64 rng(1);
  const PhasePoint w = ws.sample_phases(rng);
  for (double tau : {0.0, 2.5, 11.0})
    for (double s : {0.4, 7.0}) {
      const Vec2 a = ws.sample(0.0, tau + s, Vec2(0.3, 0.6), w);
      const Vec2 b = ws.sample(0.0, tau, Vec2(0.3, 0.6), ws.shift(w, s));
      EXPECT_NEAR((a - b).norm(), 0.0, 1e-13);
    }
}

TEST(Forcing, HermitianModeAmplitudes) {
  const WindStress ws = two_atom_wind();
  const PhasePoint w{0.4, 1.9};
  for (const auto& [k1, k2] : ws.horizontal_support()) {
    const CVec2 a = ws.mode_amplitude(k1, k2, 0.0, 1.7, w);
    const CVec2 b = ws.mode_amplitude(-k1, -k2, 0.0, 1.7, w);
    EXPECT_NEAR((a - b.conjugate()).norm(), 0.0, 1e-15);
  }
}

TEST(Forcing, FalphaMatchesDirectFourierIntegral) {
  nlohmann::json j = {{"base_frequencies", {0.3}},
                      {"modes", {{{"kh", {1, 0}}, {"atoms", {{{"mu", 0.3}, {"re1", 0.8}}}}}}}};
  const WindStress ws = WindStress::from_json(kGeom, j);
  const double alpha = 0.2;
  for (double lambda : {0.3, 0.1, -0.4}) {
    // (1/2pi) int e^{-alpha |tau|} e^{-i lambda tau} phi e^{i mu tau} d tau
    auto re = [&](double t) { return std::exp(-alpha * t) * std::cos((0.3 - lambda) * t); };
    const double integral = 2.0 * boost::math::quadrature::exp_sinh<double>().integrate(re);
    const double want = 0.8 * integral / (2.0 * kPi);
    const CVec2 got = spectral_density_Falpha(ws, lambda, alpha, 1, 0, ws.zero_phases());
    EXPECT_NEAR(got(0).real(), want, 1e-10);
    EXPECT_NEAR(std::abs(got(1)), 0.0, 1e-15);
  }
  EXPECT_NEAR(spectral_density_Falpha(ws, 0.3, alpha, 1, 0, ws.zero_phases())(0).real(),
              0.8 / (kPi * alpha), 1e-12);
  EXPECT_THROW(spectral_density_Falpha(ws, 0.3, 0.0, 1, 0, ws.zero_phases()), InvalidArgument);
}

TEST(Forcing, FalphaL1Norm) {
  for (double alpha : {1e-1, 1e-2, 1e-3, 1e-4}) {
    EXPECT_NEAR(falpha_l1_norm({0.2}, {0.5}, alpha), 0.5, 1e-8);
    EXPECT_NEAR(falpha_l1_norm({0.3, 2.0}, {0.5, 0.25}, alpha), 0.75, 0.0075);
  }
  const WindStress ws = two_atom_wind();
  EXPECT_NEAR(check_H1(ws).bound, std::hypot(0.5, 0.2), 1e-15);
}

TEST(Forcing, H2HoldsAwayFromInertialFrequencies) {
  const WindStress ws = two_atom_wind();
  const H2Report r = check_H2(ws, 0.4, {1e-1, 1e-2, 1e-3});
  EXPECT_TRUE(r.holds);
  EXPECT_NEAR(r.distance, 0.55, 1e-14);
  for (const auto& [a, sup] : r.curve) EXPECT_LT(sup / a, 2.0);
  EXPECT_LT(r.curve.back().second, r.curve.front().second);
  EXPECT_FALSE(check_H2(ws, 0.6).holds);
}

TEST(Forcing, H2Counterexample) {
  const ScalarProcess p = h2_counterexample(30);
  for (double alpha : {1e-1, 1e-2, 1e-3})
    for (int k : {2, 5, 10}) {
      const double phik = p.phi[k - 1];
      EXPECT_GE(lorentzian_sum(p.mu, p.phi, p.mu[k - 1], alpha), 2.0 * phik / alpha);
    }
  // sup near +1 grows as alpha -> 0
  auto sup_near_one = [&](double alpha) {
    double s = 0.0;
    for (double lam : p.mu) s = std::max(s, lorentzian_sum(p.mu, p.phi, lam, alpha) / (2 * kPi));
    return s;
  };
  EXPECT_GT(sup_near_one(1e-3), 5.0 * sup_near_one(1e-2));
}

TEST(Forcing, SigmaAlphaConstant) {
  for (double alpha : {0.5, 0.1, 0.01}) {
    const auto r = reconstruct_sigma_alpha([](double) { return Vec2(2.0, -1.0); }, alpha, 0.0);
    auto f = [&](double s) { return std::exp(-alpha * alpha * s) / (1.0 + s * s); };
    const double want = (2.0 / kPi) * boost::math::quadrature::exp_sinh<double>().integrate(f);
    EXPECT_NEAR(r.value(0), 2.0 * want, 2e-12 + 2.0 * r.tail_bound);
    EXPECT_NEAR(r.value(1), -want, 1e-12 + r.tail_bound);
  }
}

TEST(Forcing, SigmaAlphaMatchesFrequencyRoute) {
  // sigma = cos(mu tau): sigma_alpha = int e^{-alpha |lambda|} e^{i lambda tau} F_alpha d lambda.
  const double mu = 0.6, alpha = 0.05, tau = 1.3;
  auto lor = [&](double lam, double m) { return alpha / (kPi * (alpha * alpha + (m - lam) * (m - lam))); };
  auto integrand = [&](double lam) {
    return std::exp(-alpha * std::abs(lam)) * std::cos(lam * tau) * 0.5 * (lor(lam, mu) + lor(lam, -mu));
  };
  double want = 0.0;
  using GK = boost::math::quadrature::gauss_kronrod<double, 61>;
  const double pts[] = {-1e4, -1.0, -mu - 0.5, -mu, -mu + 0.5, 0.0, mu - 0.5, mu, mu + 0.5, 1.0, 1e4};
  for (int i = 0; i + 1 < 11; ++i) want += GK::integrate(integrand, pts[i], pts[i + 1], 25, 1e-13);
  const auto got = reconstruct_sigma_alpha([&](double s) { return Vec2(std::cos(mu * s), 0.0); }, alpha, tau);
  EXPECT_NEAR(got.value(0), want, got.tail_bound);
  EXPECT_NEAR(got.value(0), want, 1e-5);
}

TEST(Forcing, SigmaAlphaConvergesAsAlphaShrinks) {
  const WindStress ws = two_atom_wind();
  const PhasePoint w{0.3, 1.1};
  double prev = 1e300;
  for (double alpha : {1e-1, 1e-2, 1e-3}) {
    double sup = 0.0;
    for (int i = 0; i <= 20; ++i) {
      const double tau = 0.5 * i;
      const auto r = reconstruct_sigma_alpha(ws, alpha, 0.0, tau, Vec2(0.1, 0.7), w);
      sup = std::max(sup, (r.value - ws.sample(0.0, tau, Vec2(0.1, 0.7), w)).norm());
    }
    EXPECT_LT(sup, prev);
    prev = sup;
  }
  EXPECT_LT(prev, 0.05);
}

TEST(Forcing, ErgodicAverages) {
  const WindStress ws = two_atom_wind();
  const PhasePoint w{0.9, 2.0};
  const CVec2 lim = ergodic_limit(ws, 1, 0, 0.3, w);
  EXPECT_NEAR((lim - CVec2(0.5, 0.2 * I) * std::exp(I * 0.9)).norm(), 0.0, 1e-15);
  EXPECT_NEAR((ergodic_average(ws, 1, 0, 0.3, 50.0, w) - lim).norm(), 0.0, 1e-14);
  for (double theta : {10.0, 100.0, 1000.0}) {
    const CVec2 off = ergodic_average(ws, 1, 0, 0.8, theta, w);
    EXPECT_LE(off.norm(), 2.0 * std::hypot(0.5, 0.2) / (0.5 * theta) + 1e-15);
  }
  // callable route agrees with the per-atom closed form
  auto phi = [&](double tau) { return ws.mode_amplitude(1, 0, 0.0, tau, w)(0); };
  EXPECT_NEAR(std::abs(ergodic_average(phi, 0.1, 37.0) - ergodic_average(ws, 1, 0, 0.1, 37.0, w)(0)),
              0.0, 1e-12);
}

TEST(Forcing, ErgodicShiftIdentityAndZeroMean) {
  const WindStress ws = two_atom_wind();
  std::mt19937_64 rng(77);
  const PhasePoint w = ws.sample_phases(rng);
  for (double s : {0.5, 3.0, 40.0}) {
    const CVec2 a = ergodic_limit(ws, 1, 0, 0.3, ws.shift(w, s));
    const CVec2 b = std::exp(I * 0.3 * s) * ergodic_limit(ws, 1, 0, 0.3, w);
    EXPECT_NEAR((a - b).norm(), 0.0, 1e-14);
  }
  const int n = 4000;
  CVec2 mean = CVec2::Zero();
  double m2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const CVec2 e = ergodic_limit(ws, 1, 0, 0.3, ws.sample_phases(rng));
    mean += e;
    m2 += e.squaredNorm();
  }
  mean /= double(n);
  const double sd = std::sqrt(m2 / n - mean.squaredNorm());
  EXPECT_LT(mean.norm(), 3.0 * sd / std::sqrt(double(n)));
}

TEST(Forcing, ConfigValidation) {
  nlohmann::json bad = {{"modes", {{{"kh", {1, 0}}, {"atoms", {{{"mu", 0.3}, {"bogus", 1}}}}}}},
                        {"base_frequencies", {0.3}}};
  try {
    WindStress::from_json(kGeom, bad);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.path(), "wind.modes[0].atoms[0].bogus");
  }
  nlohmann::json nobase = {{"modes", {{{"kh", {1, 0}}, {"atoms", {{{"mu", 0.3}}}}}}}};
  try {
    WindStress::from_json(kGeom, nobase);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.path(), "wind.modes[0].atoms[0].mu");
  }
  EXPECT_THROW(WindStress::from_json(kGeom, nlohmann::json::object()), ConfigError);
}

TEST(Forcing, RationalRelations) {
  EXPECT_FALSE(rational_relations({1.0, 2.0}).empty());
  EXPECT_TRUE(rational_relations({1.0, std::sqrt(2.0), std::sqrt(3.0)}).empty());
  EXPECT_FALSE(rational_relations({0.0, 1.0}).empty());
}

}  // namespace
}  // namespace rotwind
