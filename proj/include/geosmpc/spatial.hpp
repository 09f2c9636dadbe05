#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "geosmpc/crypto.hpp"

namespace geosmpc {

/// Attribute values keyed by region id, in a fixed order shared by both parties.
struct RegionVector {
  std::vector<std::string> ids;
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
  /// Throws DuplicateGid / DimensionError / NonFiniteValue.
  void validate() const;
  /// SHA-256 over the ordered id list; parties compare it during the handshake.
  Digest id_hash() const;

  friend bool operator==(const RegionVector&, const RegionVector&) = default;
};

/// Dense n x n spatial weights, row-major.
class WeightMatrix {
 public:
  WeightMatrix() = default;
  explicit WeightMatrix(std::size_t n) : n_(n), w_(n * n, 0.0) {}
  /// Throws DimensionError unless `rows` is square.
  explicit WeightMatrix(const std::vector<std::vector<double>>& rows);

  std::size_t size() const { return n_; }
  double operator()(std::size_t i, std::size_t j) const { return w_[i * n_ + j]; }
  double& operator()(std::size_t i, std::size_t j) { return w_[i * n_ + j]; }
  const std::vector<double>& data() const { return w_; }

  /// Zero diagonal, nonnegative, each nonzero row sums to 1 within `tol`.
  /// Throws DimensionError.
  void validate(double tol = 1e-9) const;

  /// Rescales every nonzero row to sum to one.
  void row_normalize();

  friend bool operator==(const WeightMatrix&, const WeightMatrix&) = default;

 private:
  std::size_t n_ = 0;
  std::vector<double> w_;
};

}  // namespace geosmpc
