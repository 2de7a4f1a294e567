#include <gtest/gtest.h>

#include <random>

#include "rotwind/errors.hpp"
#include "rotwind/quadrature.hpp"
#include "rotwind/spectral_field.hpp"

namespace rotwind {
namespace {

TEST(ModeSet, OrderingAndIndex) {
  const ModeSet s(2);
  EXPECT_EQ(s.size(), 124u);
  EXPECT_EQ(s.mode(0), (ModeIndex{-2, -2, -2}));
  for (std::size_t i = 0; i + 1 < s.size(); ++i) {
    EXPECT_LT(s.mode(i), s.mode(i + 1));
    EXPECT_EQ(s.index(s.mode(i)), i);
  }
  EXPECT_FALSE(s.contains({0, 0, 0}));
  EXPECT_THROW(s.index({3, 0, 0}), InvalidArgument);
}

TEST(SpectralField, JsonRoundTripIsExact) {
  std::mt19937_64 rng(42);
  const TorusGeometry g{1.0, 1.7, 0.9};
  const SpectralField w = random_real_field(g, 3, rng);
  const SpectralField r = SpectralField::from_json(nlohmann::json::parse(w.to_json().dump()));
  ASSERT_EQ(r.size(), w.size());
  for (std::size_t i = 0; i < w.size(); ++i) EXPECT_EQ(r[i], w[i]);
  EXPECT_EQ(r.geometry(), g);
}

TEST(SpectralField, SemigroupGroupProperty) {
  std::mt19937_64 rng(7);
  const TorusGeometry g{1.0, 1.0, 1.0};
  const SpectralField w = random_real_field(g, 3, rng);
  const SpectralField a = semigroup_apply(semigroup_apply(w, 1.3), 2.1);
  const SpectralField b = semigroup_apply(w, 3.4);
  EXPECT_LT((a - b).norm(), 1e-13);
  const SpectralField back = semigroup_apply(semigroup_apply(w, 5.0), 5.0, -1);
  EXPECT_LT((back - w).norm(), 1e-13);
  EXPECT_NEAR(semigroup_apply(w, 17.0).norm(), w.norm(), 1e-12);
  EXPECT_LT(reality_defect(semigroup_apply(w, 0.7)), 1e-13);
}

TEST(SpectralField, RandomRealFieldIsReal) {
  std::mt19937_64 rng(3);
  const TorusGeometry g{1.0, 1.2, 0.8};
  const SpectralField w = random_real_field(g, 2, rng);
  EXPECT_EQ(reality_defect(w), 0.0);
  for (const Vec3 x : {Vec3(0.1, 0.2, 0.3), Vec3(0.9, 1.1, 0.05)})
    EXPECT_LT(evaluate_field(w, x).imag().norm(), 1e-13);
}

TEST(SpectralField, ProjectionRoundTrip) {
  std::mt19937_64 rng(11);
  const TorusGeometry g{1.0, 1.3, 0.7};
  const SpectralField w = random_real_field(g, 3, rng);
  const SpectralField p = project_function(
      g, 3, [&](const Vec3& x) { return evaluate_field(w, x); }, QuadratureSpec::for_truncation(3));
  EXPECT_LT((p - w).norm(), 1e-12 * w.norm());
}

TEST(SpectralField, ConstantHorizontalFlowHasNoComponents) {
  const TorusGeometry g{1.0, 1.0, 1.0};
  const SpectralField p = project_function(
      g, 2, [](const Vec3&) { return CVec3(1.0, 0.0, 0.0); }, QuadratureSpec::for_truncation(2));
  EXPECT_LT(p.max_abs(), 1e-13);
}

TEST(SpectralField, MismatchedTruncationRejected) {
  const TorusGeometry g{1.0, 1.0, 1.0};
  SpectralField a(g, 2), b(g, 3);
  EXPECT_THROW(a += b, InvalidArgument);
  EXPECT_EQ(b.retruncated(2).size(), a.size());
}

}  // namespace
}  // namespace rotwind
