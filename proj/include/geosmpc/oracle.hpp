#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "geosmpc/circuit_builder.hpp"
#include "geosmpc/esda.hpp"
#include "geosmpc/fixedpoint.hpp"

namespace geosmpc {

// Plaintext reference implementations of the whole pipeline. The float
// path is the numerical ground truth; the fixed path reproduces the
// circuits bit for bit.

/// Interaction terms in double precision, i outer, j inner.
double float_global_interaction(std::span<const double> z_x, std::span<const double> z_y, const WeightMatrix& w);
std::vector<double> float_local_interaction(std::span<const double> z_x, std::span<const double> z_y,
                                            const WeightMatrix& w);

/// Global / local Moran's I from raw x, y. Throws DegenerateData.
double float_global_moran(std::span<const double> x, std::span<const double> y, const WeightMatrix& w);
std::vector<double> float_local_moran(std::span<const double> x, std::span<const double> y, const WeightMatrix& w);

/// Interaction terms on already-encoded words, using exactly the circuits'
/// arithmetic (encoded weights, fx_mul truncation, the same summation order).
FixedWord fixed_global_interaction(std::span<const FixedWord> z_x, std::span<const FixedWord> z_y,
                                   const WeightMatrix& w, FixedPointFormat fmt);
std::vector<FixedWord> fixed_local_interaction(std::span<const FixedWord> z_x, std::span<const FixedWord> z_y,
                                               const WeightMatrix& w, FixedPointFormat fmt);

/// Spatial lag of encoded z_x with encoded weights, as the circuits compute it.
std::vector<FixedWord> fixed_spatial_lag(std::span<const FixedWord> z_x, const WeightMatrix& w, FixedPointFormat fmt);

/// m_g word for raw x, y: standardize, encode, then fixed_global_interaction.
FixedWord fixed_global_moran(std::span<const double> x, std::span<const double> y, const WeightMatrix& w,
                             FixedPointFormat fmt);
std::vector<FixedWord> fixed_local_moran(std::span<const double> x, std::span<const double> y,
                                         const WeightMatrix& w, FixedPointFormat fmt);

enum class OracleMode { Float, Fixed };

struct OracleOptions {
  OracleMode mode = OracleMode::Float;
  FixedPointFormat fmt = kDefaultFormat;
  std::uint32_t permutations = 0;
  std::uint64_t seed = 0;
  double alpha = 0.05;
};

/// Full pipeline including the permutation test, in which round r permutes
/// the standardized y vector by round_permutation(n, seed, r) while x stays
/// fixed. In Fixed mode this is what a secure run with the same seed returns.
MoranResult oracle_moran(Statistic stat, const RegionVector& x, const RegionVector& y, const WeightMatrix& w,
                         const OracleOptions& options);

}  // namespace geosmpc
