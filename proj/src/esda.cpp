#include "geosmpc/esda.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <fmt/format.h>

#include "geosmpc/crypto.hpp"
#include "geosmpc/errors.hpp"

namespace geosmpc {

namespace {

double mean_of(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

int sign_of(double v) { return (v > 0.0) - (v < 0.0); }

}  // namespace

std::vector<double> standardize(std::span<const double> values) {
  if (values.size() < 2) throw DegenerateData("standardization needs at least two values");
  const double mean = mean_of(values);
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / static_cast<double>(values.size()));
  if (!(sd > 0.0)) throw DegenerateData("all values are equal (standard deviation is zero); nothing to standardize");
  std::vector<double> z;
  z.reserve(values.size());
  for (double v : values) z.push_back((v - mean) / sd);
  return z;
}

double haversine_km(double lon1, double lat1, double lon2, double lat2) {
  constexpr double kEarthRadiusKm = 6371.0088;
  constexpr double kDeg = std::numbers::pi / 180.0;
  const double dlat = (lat2 - lat1) * kDeg;
  const double dlon = (lon2 - lon1) * kDeg;
  const double h = std::sin(dlat / 2) * std::sin(dlat / 2) +
                   std::cos(lat1 * kDeg) * std::cos(lat2 * kDeg) * std::sin(dlon / 2) * std::sin(dlon / 2);
  return 2.0 * kEarthRadiusKm * std::asin(std::min(1.0, std::sqrt(h)));
}

WeightMatrix build_weights(std::span<const Centroid> centroids, DistanceMetric metric) {
  const std::size_t n = centroids.size();
  if (n < 2) throw DimensionError("weights need at least two centroids");
  WeightMatrix w(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const auto& a = centroids[i];
      const auto& b = centroids[j];
      const double d = metric == DistanceMetric::Haversine ? haversine_km(a.x, a.y, b.x, b.y)
                                                           : std::hypot(a.x - b.x, a.y - b.y);
      if (!(d > 0.0)) {
        throw CoincidentPoints(fmt::format("regions '{}' and '{}' share the same location", a.id, b.id));
      }
      w(i, j) = 1.0 / d;
    }
  }
  w.row_normalize();
  return w;
}

double sum_of_squares(std::span<const double> z) {
  double s = 0.0;
  for (double v : z) s += v * v;
  return s;
}

double global_moran_post(double m_g, std::span<const double> z_x) { return m_g / sum_of_squares(z_x); }

std::vector<double> local_moran_post(std::span<const double> m_l, std::span<const double> z_x) {
  const double denom = sum_of_squares(z_x);
  const double scale = static_cast<double>(z_x.size()) - 1.0;
  std::vector<double> out;
  out.reserve(m_l.size());
  for (double m : m_l) out.push_back(scale * m / denom);
  return out;
}

std::vector<double> spatial_lag(const WeightMatrix& w, std::span<const double> z) {
  if (w.size() != z.size()) throw DimensionError(fmt::format("{}x{} weights for {} values", w.size(), w.size(), z.size()));
  std::vector<double> lag(z.size(), 0.0);
  for (std::size_t i = 0; i < z.size(); ++i) {
    double sum = 0.0;
    for (std::size_t j = 0; j < z.size(); ++j) sum += w(i, j) * z[j];
    lag[i] = sum;
  }
  return lag;
}

double pseudo_sd(std::span<const double> values) {
  if (values.empty()) return 0.0;
  const double mean = mean_of(values);
  double sd = 0.0;
  for (double v : values) sd += (v - mean) * (v - mean);
  return sd;
}

double population_sd(std::span<const double> values) {
  if (values.empty()) return 0.0;
  return std::sqrt(pseudo_sd(values) / static_cast<double>(values.size()));
}

Significance summarize_permutations(double observed, std::span<const double> permuted) {
  Significance s;
  for (double v : permuted) {
    if (v > observed) ++s.greater;
    if (v < observed) ++s.lesser;
  }
  s.r = std::min(s.greater, s.lesser);
  s.p = (static_cast<double>(s.r) + 1.0) / (static_cast<double>(permuted.size()) + 1.0);
  s.pseudo_sd = pseudo_sd(permuted);
  return s;
}

std::vector<Significance> permutation_test(std::span<const double> observed, std::uint32_t k,
                                           const RoundExecutor& executor) {
  std::vector<std::vector<double>> replicates(observed.size());
  for (auto& r : replicates) r.reserve(k);
  for (std::uint32_t round = 1; round <= k; ++round) {
    const auto values = executor(round);
    if (values.size() != observed.size()) {
      throw DimensionError(fmt::format("round {} produced {} statistics, expected {}", round, values.size(),
                                       observed.size()));
    }
    for (std::size_t i = 0; i < values.size(); ++i) replicates[i].push_back(values[i]);
  }
  std::vector<Significance> out;
  out.reserve(observed.size());
  for (std::size_t i = 0; i < observed.size(); ++i) out.push_back(summarize_permutations(observed[i], replicates[i]));
  return out;
}

std::vector<std::size_t> round_permutation(std::size_t n, std::uint64_t seed, std::uint32_t round) {
  Prg prg(seed_from_u64(seed ^ round));
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[prg.uniform(i)]);
  return perm;
}

const char* to_string(Cluster c) {
  switch (c) {
    case Cluster::NS: return "NS";
    case Cluster::HH: return "HH";
    case Cluster::LL: return "LL";
    case Cluster::HL: return "HL";
    case Cluster::LH: return "LH";
  }
  return "?";
}

std::vector<Cluster> classify_clusters(std::span<const double> own, std::span<const double> lag,
                                       std::span<const double> p, double alpha) {
  if (own.size() != lag.size() || own.size() != p.size()) {
    throw LengthError(fmt::format("cluster inputs differ in length: {}, {}, {}", own.size(), lag.size(), p.size()));
  }
  std::vector<Cluster> out(own.size(), Cluster::NS);
  for (std::size_t i = 0; i < own.size(); ++i) {
    if (p[i] > alpha || own[i] == 0.0 || lag[i] == 0.0) continue;
    if (own[i] > 0.0) {
      out[i] = lag[i] > 0.0 ? Cluster::HH : Cluster::HL;
    } else {
      out[i] = lag[i] < 0.0 ? Cluster::LL : Cluster::LH;
    }
  }
  return out;
}

GlobalMoran finish_global(double observed_m, std::span<const double> permuted_m, std::span<const double> z_x) {
  GlobalMoran g;
  g.interaction = observed_m;
  g.moran_i = global_moran_post(observed_m, z_x);
  if (!permuted_m.empty()) {
    std::vector<double> replicates;
    replicates.reserve(permuted_m.size());
    for (double m : permuted_m) replicates.push_back(global_moran_post(m, z_x));
    g.significance = summarize_permutations(g.moran_i, replicates);
  }
  return g;
}

LocalMoran finish_local(std::span<const double> observed_m, std::span<const std::vector<double>> permuted_m,
                        std::span<const double> z_x, std::span<const double> lag_x, double alpha) {
  const std::size_t n = observed_m.size();
  if (z_x.size() != n || lag_x.size() != n) throw LengthError("local post-processing inputs differ in length");
  LocalMoran l;
  l.interaction.assign(observed_m.begin(), observed_m.end());
  l.moran_i = local_moran_post(observed_m, z_x);
  std::vector<double> p(n, 1.0);
  if (!permuted_m.empty()) {
    std::vector<std::vector<double>> per_region(n);
    for (const auto& round : permuted_m) {
      if (round.size() != n) throw LengthError("permuted round has the wrong length");
      const auto values = local_moran_post(round, z_x);
      for (std::size_t i = 0; i < n; ++i) per_region[i].push_back(values[i]);
    }
    for (std::size_t i = 0; i < n; ++i) {
      l.significance.push_back(summarize_permutations(l.moran_i[i], per_region[i]));
      p[i] = l.significance.back().p;
    }
  } else {
    // No permutation test: nothing is significant.
    std::fill(p.begin(), p.end(), std::numeric_limits<double>::infinity());
  }
  std::vector<double> own_sign(n);
  for (std::size_t i = 0; i < n; ++i) own_sign[i] = sign_of(observed_m[i]) * sign_of(lag_x[i]);
  l.clusters = classify_clusters(own_sign, lag_x, p, alpha);
  return l;
}

AccuracyReport accuracy_report(std::span<const double> x, std::span<const double> reference) {
  if (x.size() != reference.size()) {
    throw LengthError(fmt::format("accuracy inputs differ in length: {} vs {}", x.size(), reference.size()));
  }
  AccuracyReport r;
  r.differences.reserve(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    r.differences.push_back(x[i] - reference[i]);
    r.max_abs = std::max(r.max_abs, std::fabs(r.differences.back()));
  }
  return r;
}

}  // namespace geosmpc
