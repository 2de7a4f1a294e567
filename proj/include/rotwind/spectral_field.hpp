#pragma once

#include <json.hpp>
#include <random>
#include <vector>

#include "rotwind/geometry.hpp"

namespace rotwind {

/// All k != 0 with |k1|, |k2|, |k3| <= N, in (k3, k1, k2) lexicographic order.
class ModeSet {
 public:
  explicit ModeSet(int truncation);
  int truncation() const { return n_; }
  std::size_t size() const { return size_; }
  bool contains(const ModeIndex& k) const;
  std::size_t index(const ModeIndex& k) const;
  ModeIndex mode(std::size_t i) const;

 private:
  int n_;
  int side_;
  std::size_t size_;
  std::size_t zero_pos_;
};

/// Coefficients of a field in the eigenbasis, truncated at N.
class SpectralField {
 public:
  SpectralField() : SpectralField(TorusGeometry{}, 1) {}
  SpectralField(const TorusGeometry& g, int truncation);

  const TorusGeometry& geometry() const { return geom_; }
  int truncation() const { return modes_.truncation(); }
  const ModeSet& modes() const { return modes_; }
  std::size_t size() const { return c_.size(); }

  cplx& operator[](std::size_t i) { return c_[i]; }
  cplx operator[](std::size_t i) const { return c_[i]; }
  cplx at(const ModeIndex& k) const;
  void set(const ModeIndex& k, cplx v);
  std::vector<cplx>& data() { return c_; }
  const std::vector<cplx>& data() const { return c_; }

  SpectralField& operator+=(const SpectralField& o);
  SpectralField& operator-=(const SpectralField& o);
  SpectralField& operator*=(cplx s);

  /// sum conj(c_k) d_k; the basis is orthonormal.
  cplx inner(const SpectralField& o) const;
  double norm() const;
  double max_abs() const;

  /// Same geometry, truncation raised or lowered.
  SpectralField retruncated(int truncation) const;

  nlohmann::json to_json() const;
  static SpectralField from_json(const nlohmann::json& j);

 private:
  void check_compatible(const SpectralField& o) const;
  TorusGeometry geom_;
  ModeSet modes_;
  std::vector<cplx> c_;
};

SpectralField operator+(SpectralField a, const SpectralField& b);
SpectralField operator-(SpectralField a, const SpectralField& b);
SpectralField operator*(cplx s, SpectralField a);

/// L(tau): coefficient k times exp(-i lambda_k tau); direction -1 is the filter.
SpectralField semigroup_apply(const SpectralField& w, double tau, int direction = 1);

/// Random real-valued field with coefficient variance decaying like |k|^-decay.
SpectralField random_real_field(const TorusGeometry& g, int truncation, std::mt19937_64& rng,
                                double decay = 2.0);

/// Largest violation of c_{-k} = s_k conj(c_k).
double reality_defect(const SpectralField& w);

/// Physical value of the field at x.
CVec3 evaluate_field(const SpectralField& w, const Vec3& x);

nlohmann::json geometry_to_json(const TorusGeometry& g);
TorusGeometry geometry_from_json(const nlohmann::json& j);

}  // namespace rotwind
