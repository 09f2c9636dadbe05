#include "geosmpc/oracle.hpp"

#include <fmt/format.h>

#include "geosmpc/errors.hpp"

namespace geosmpc {

namespace {

void check_dims(std::size_t nx, std::size_t ny, const WeightMatrix& w) {
  if (nx != ny || nx != w.size()) {
    throw DimensionError(fmt::format("x has {} values, y {}, weights are {}x{}", nx, ny, w.size(), w.size()));
  }
}

std::vector<std::vector<FixedWord>> encode_weight_rows(const WeightMatrix& w, FixedPointFormat fmt) {
  std::vector<std::vector<FixedWord>> rows(w.size(), std::vector<FixedWord>(w.size()));
  for (std::size_t i = 0; i < w.size(); ++i)
    for (std::size_t j = 0; j < w.size(); ++j) rows[i][j] = encode(w(i, j), fmt);
  return rows;
}

}  // namespace

std::vector<FixedWord> fixed_spatial_lag(std::span<const FixedWord> z_x, const WeightMatrix& w, FixedPointFormat fmt) {
  check_dims(z_x.size(), z_x.size(), w);
  const auto rows = encode_weight_rows(w, fmt);
  std::vector<FixedWord> lags;
  lags.reserve(rows.size());
  for (const auto& row : rows) {
    FixedWord sum{0};
    for (std::size_t j = 0; j < row.size(); ++j) sum = fx_add(sum, fx_mul(row[j], z_x[j], fmt), fmt);
    lags.push_back(sum);
  }
  return lags;
}

double float_global_interaction(std::span<const double> z_x, std::span<const double> z_y, const WeightMatrix& w) {
  check_dims(z_x.size(), z_y.size(), w);
  double output = 0.0;
  for (std::size_t i = 0; i < z_y.size(); ++i) {
    double sum = 0.0;
    for (std::size_t j = 0; j < z_x.size(); ++j) sum += w(i, j) * z_x[j];
    output += sum * z_y[i];
  }
  return output;
}

std::vector<double> float_local_interaction(std::span<const double> z_x, std::span<const double> z_y,
                                            const WeightMatrix& w) {
  check_dims(z_x.size(), z_y.size(), w);
  std::vector<double> output(z_x.size());
  for (std::size_t i = 0; i < z_x.size(); ++i) {
    double sum = 0.0;
    for (std::size_t j = 0; j < z_y.size(); ++j) sum += w(i, j) * z_x[j];
    output[i] = sum * z_y[i];
  }
  return output;
}

double float_global_moran(std::span<const double> x, std::span<const double> y, const WeightMatrix& w) {
  const auto zx = standardize(x);
  const auto zy = standardize(y);
  return global_moran_post(float_global_interaction(zx, zy, w), zx);
}

std::vector<double> float_local_moran(std::span<const double> x, std::span<const double> y, const WeightMatrix& w) {
  const auto zx = standardize(x);
  const auto zy = standardize(y);
  return local_moran_post(float_local_interaction(zx, zy, w), zx);
}

FixedWord fixed_global_interaction(std::span<const FixedWord> z_x, std::span<const FixedWord> z_y,
                                   const WeightMatrix& w, FixedPointFormat fmt) {
  check_dims(z_x.size(), z_y.size(), w);
  const auto lags = fixed_spatial_lag(z_x, w, fmt);
  FixedWord output{0};
  for (std::size_t i = 0; i < lags.size(); ++i) output = fx_add(output, fx_mul(lags[i], z_y[i], fmt), fmt);
  return output;
}

std::vector<FixedWord> fixed_local_interaction(std::span<const FixedWord> z_x, std::span<const FixedWord> z_y,
                                               const WeightMatrix& w, FixedPointFormat fmt) {
  check_dims(z_x.size(), z_y.size(), w);
  const auto lags = fixed_spatial_lag(z_x, w, fmt);
  std::vector<FixedWord> output;
  output.reserve(lags.size());
  for (std::size_t i = 0; i < lags.size(); ++i) output.push_back(fx_mul(lags[i], z_y[i], fmt));
  return output;
}

FixedWord fixed_global_moran(std::span<const double> x, std::span<const double> y, const WeightMatrix& w,
                             FixedPointFormat fmt) {
  return fixed_global_interaction(encode(standardize(x), fmt), encode(standardize(y), fmt), w, fmt);
}

std::vector<FixedWord> fixed_local_moran(std::span<const double> x, std::span<const double> y,
                                         const WeightMatrix& w, FixedPointFormat fmt) {
  return fixed_local_interaction(encode(standardize(x), fmt), encode(standardize(y), fmt), w, fmt);
}

MoranResult oracle_moran(Statistic stat, const RegionVector& x, const RegionVector& y, const WeightMatrix& w,
                         const OracleOptions& options) {
  x.validate();
  y.validate();
  if (x.ids != y.ids) throw DimensionError("x and y list different regions or a different order");
  check_dims(x.size(), y.size(), w);
  const auto zx = standardize(x.values);
  const auto zy = standardize(y.values);
  const auto fmt = options.fmt;
  const auto zx_words = encode(zx, fmt);
  const auto zy_words = encode(zy, fmt);

  // Interaction terms for z_y permuted by `perm` (identity when empty).
  auto interaction = [&](std::span<const std::size_t> perm) -> std::vector<double> {
    if (options.mode == OracleMode::Float) {
      const auto y_perm = perm.empty() ? zy : apply_permutation<double>(zy, perm);
      if (stat == Statistic::Global) return {float_global_interaction(zx, y_perm, w)};
      return float_local_interaction(zx, y_perm, w);
    }
    const auto y_perm = perm.empty() ? zy_words : apply_permutation<FixedWord>(zy_words, perm);
    if (stat == Statistic::Global) return {decode(fixed_global_interaction(zx_words, y_perm, w, fmt), fmt)};
    return decode(fixed_local_interaction(zx_words, y_perm, w, fmt), fmt);
  };

  const auto observed = interaction({});
  std::vector<std::vector<double>> permuted;
  for (std::uint32_t r = 1; r <= options.permutations; ++r) {
    permuted.push_back(interaction(round_permutation(x.size(), options.seed, r)));
  }

  MoranResult result;
  result.region_ids = x.ids;
  result.permutations = options.permutations;
  result.alpha = options.alpha;
  if (stat == Statistic::Global) {
    std::vector<double> flat;
    for (const auto& p : permuted) flat.push_back(p[0]);
    result.global = finish_global(observed[0], flat, zx);
  } else {
    std::vector<double> lag;
    if (options.mode == OracleMode::Float) {
      lag = spatial_lag(w, zx);
    } else {
      lag = decode(fixed_spatial_lag(zx_words, w, fmt), fmt);
    }
    result.local = finish_local(observed, permuted, zx, lag, options.alpha);
  }
  return result;
}

}  // namespace geosmpc
