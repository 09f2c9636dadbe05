#include "geosmpc/spatial.hpp"

#include <cmath>
#include <unordered_set>
#include <fmt/format.h>

#include "geosmpc/errors.hpp"

namespace geosmpc {

void RegionVector::validate() const {
  if (ids.size() != values.size()) {
    throw DimensionError(fmt::format("{} region ids for {} values", ids.size(), values.size()));
  }
  std::unordered_set<std::string> seen;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (!seen.insert(ids[i]).second) throw DuplicateGid(fmt::format("duplicate gid '{}'", ids[i]));
    if (!std::isfinite(values[i])) throw NonFiniteValue(fmt::format("gid '{}' has non-finite value", ids[i]));
  }
}

Digest RegionVector::id_hash() const {
  Sha256 h;
  h.update("geosmpc.ids");
  for (const auto& id : ids) {
    h.update_u64(id.size());
    h.update(id);
  }
  return h.finish();
}

WeightMatrix::WeightMatrix(const std::vector<std::vector<double>>& rows) : n_(rows.size()), w_() {
  w_.reserve(n_ * n_);
  for (std::size_t i = 0; i < n_; ++i) {
    if (rows[i].size() != n_) {
      throw DimensionError(fmt::format("weight row {} has {} entries, expected {}", i, rows[i].size(), n_));
    }
    w_.insert(w_.end(), rows[i].begin(), rows[i].end());
  }
}

void WeightMatrix::validate(double tol) const {
  if (w_.size() != n_ * n_) throw DimensionError("weight matrix is not square");
  for (std::size_t i = 0; i < n_; ++i) {
    double sum = 0.0;
    for (std::size_t j = 0; j < n_; ++j) {
      const double v = (*this)(i, j);
      if (!std::isfinite(v) || v < 0.0) throw DimensionError(fmt::format("weight ({},{}) = {} is invalid", i, j, v));
      if (i == j && v != 0.0) throw DimensionError(fmt::format("weight diagonal ({},{}) is nonzero", i, i));
      sum += v;
    }
    if (sum != 0.0 && std::fabs(sum - 1.0) > tol) {
      throw DimensionError(fmt::format("weight row {} sums to {}, not 1", i, sum));
    }
  }
}

void WeightMatrix::row_normalize() {
  for (std::size_t i = 0; i < n_; ++i) {
    double sum = 0.0;
    for (std::size_t j = 0; j < n_; ++j) sum += (*this)(i, j);
    if (sum == 0.0) continue;
    for (std::size_t j = 0; j < n_; ++j) (*this)(i, j) /= sum;
  }
}

}  // namespace geosmpc
