#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "geosmpc/spatial.hpp"

namespace geosmpc {

// ---------------------------------------------------------------------------
// Pre-processing

/// z_i = (v_i - mean) / sd with the population SD (divisor n).
/// Throws DegenerateData when n < 2 or every value is equal.
std::vector<double> standardize(std::span<const double> values);

enum class DistanceMetric { Planar, Haversine };

struct Centroid {
  std::string id;
  double x = 0.0;  ///< easting, or longitude in degrees for Haversine
  double y = 0.0;  ///< northing, or latitude in degrees for Haversine
};

/// Great-circle distance in kilometres on a sphere of mean Earth radius.
double haversine_km(double lon1, double lat1, double lon2, double lat2);

/// Row-normalized inverse-distance weights with a zero diagonal.
/// Throws CoincidentPoints naming the first pair at distance zero.
WeightMatrix build_weights(std::span<const Centroid> centroids, DistanceMetric metric);

// ---------------------------------------------------------------------------
// Post-processing

double sum_of_squares(std::span<const double> z);

/// I = m_g / sum(z_x^2)
double global_moran_post(double m_g, std::span<const double> z_x);
/// I_i = (n - 1) * m_l[i] / sum(z_x^2), n = z_x.size()
std::vector<double> local_moran_post(std::span<const double> m_l, std::span<const double> z_x);

/// Spatial lag sum_j w[i][j] * z[j] for every row.
std::vector<double> spatial_lag(const WeightMatrix& w, std::span<const double> z);

// ---------------------------------------------------------------------------
// Significance

struct Significance {
  std::uint32_t greater = 0;  ///< permuted values strictly above the observed one
  std::uint32_t lesser = 0;   ///< permuted values strictly below
  std::uint32_t r = 0;        ///< min(greater, lesser)
  double p = 1.0;             ///< (r + 1) / (K + 1)
  double pseudo_sd = 0.0;     ///< sum of squared deviations of the permuted values

  friend bool operator==(const Significance&, const Significance&) = default;
};

/// Sum of squared deviations from the mean; no division, no root.
double pseudo_sd(std::span<const double> values);
/// Population standard deviation, for diagnostics.
double population_sd(std::span<const double> values);

/// Counts and p-value for one statistic from its K permuted replicates.
Significance summarize_permutations(double observed, std::span<const double> permuted);

/// Produces the statistic vector of permutation round `round` (1-based).
using RoundExecutor = std::function<std::vector<double>(std::uint32_t round)>;

/// Runs rounds 1..K through `executor` and summarizes each statistic
/// position independently against `observed`.
std::vector<Significance> permutation_test(std::span<const double> observed, std::uint32_t k,
                                           const RoundExecutor& executor);

/// Fisher-Yates permutation of [0, n) for one round, from a generator
/// seeded with seed XOR round.
std::vector<std::size_t> round_permutation(std::size_t n, std::uint64_t seed, std::uint32_t round);

template <typename T>
std::vector<T> apply_permutation(std::span<const T> values, std::span<const std::size_t> perm) {
  std::vector<T> out;
  out.reserve(perm.size());
  for (auto idx : perm) out.push_back(values[idx]);
  return out;
}

// ---------------------------------------------------------------------------
// Clusters

enum class Cluster : std::uint8_t { NS = 0, HH = 1, LL = 2, HL = 3, LH = 4 };
const char* to_string(Cluster c);

/// NS when p > alpha or either sign is exactly zero; otherwise the quadrant
/// of (own value, spatial lag).
std::vector<Cluster> classify_clusters(std::span<const double> own, std::span<const double> lag,
                                       std::span<const double> p, double alpha = 0.05);

// ---------------------------------------------------------------------------
// Results

struct GlobalMoran {
  double interaction = 0.0;  ///< m_g
  double moran_i = 0.0;
  std::optional<Significance> significance;

  friend bool operator==(const GlobalMoran&, const GlobalMoran&) = default;
};

struct LocalMoran {
  std::vector<double> interaction;  ///< m_l
  std::vector<double> moran_i;
  std::vector<Significance> significance;  ///< empty without permutations
  std::vector<Cluster> clusters;

  friend bool operator==(const LocalMoran&, const LocalMoran&) = default;
};

struct MoranResult {
  std::vector<std::string> region_ids;
  std::uint32_t permutations = 0;
  double alpha = 0.05;
  std::optional<GlobalMoran> global;
  std::optional<LocalMoran> local;

  friend bool operator==(const MoranResult&, const MoranResult&) = default;
};

/// Global result from the observed and permuted interaction terms.
GlobalMoran finish_global(double observed_m, std::span<const double> permuted_m, std::span<const double> z_x);

/// Local result. The sign of each region's own value is recovered from
/// sign(m_l[i]) * sign(lag_x[i]), which the output already reveals.
LocalMoran finish_local(std::span<const double> observed_m, std::span<const std::vector<double>> permuted_m,
                        std::span<const double> z_x, std::span<const double> lag_x, double alpha);

// ---------------------------------------------------------------------------
// Accuracy

struct AccuracyReport {
  std::vector<double> differences;  ///< X_i - Xhat_i
  double max_abs = 0.0;
};

/// Throws LengthError on mismatched lengths.
AccuracyReport accuracy_report(std::span<const double> x, std::span<const double> reference);

}  // namespace geosmpc
