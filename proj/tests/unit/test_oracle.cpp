#include <doctest.h>

#include <cmath>
#include <random>

#include "geosmpc/circuit.hpp"
#include "geosmpc/errors.hpp"
#include "geosmpc/oracle.hpp"
#include "support/fixtures.hpp"

using namespace geosmpc;
using namespace geosmpc::testing;

namespace {

// Classic univariate Moran's I with population moments.
double univariate_moran(const std::vector<double>& v, const WeightMatrix& w) {
  const double n = static_cast<double>(v.size());
  double mean = 0;
  for (double x : v) mean += x / n;
  double num = 0, den = 0, s0 = 0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    den += (v[i] - mean) * (v[i] - mean);
    for (std::size_t j = 0; j < v.size(); ++j) {
      num += w(i, j) * (v[i] - mean) * (v[j] - mean);
      s0 += w(i, j);
    }
  }
  return n / s0 * num / den;
}

}  // namespace

TEST_CASE("symmetric three-region fixture in float and fixed") {
  const auto inst = symmetric_three();
  CHECK(float_global_moran(inst.x.values, inst.y.values, inst.w) == doctest::Approx(-0.5));
  const auto local = float_local_moran(inst.x.values, inst.y.values, inst.w);
  CHECK(local[0] == doctest::Approx(-0.5));
  CHECK(std::abs(local[1]) < 1e-12);
  CHECK(local[2] == doctest::Approx(-0.5));

  OracleOptions opts;
  opts.mode = OracleMode::Fixed;
  const double tol = std::ldexp(1.0, -10);
  const auto g = oracle_moran(Statistic::Global, inst.x, inst.y, inst.w, opts);
  CHECK(std::abs(g.global->moran_i + 0.5) <= tol);
  const auto l = oracle_moran(Statistic::Local, inst.x, inst.y, inst.w, opts);
  CHECK(std::abs(l.local->moran_i[0] + 0.5) <= tol);
  CHECK(std::abs(l.local->moran_i[1]) <= tol);
  CHECK(std::abs(l.local->moran_i[2] + 0.5) <= tol);
}

TEST_CASE("x = y reduces to the univariate statistic") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto inst = random_instance(13, 200 + seed);
    // Symmetrize the weights; classic Moran's I with S0 = n when rows sum to 1.
    WeightMatrix sym(13);
    for (std::size_t i = 0; i < 13; ++i)
      for (std::size_t j = 0; j < 13; ++j) sym(i, j) = inst.w(i, j) + inst.w(j, i);
    sym.row_normalize();
    CHECK(float_global_moran(inst.x.values, inst.x.values, sym) ==
          doctest::Approx(univariate_moran(inst.x.values, sym)).epsilon(1e-9));
  }
}

TEST_CASE("fixed oracle equals circuit evaluation on 100 n = 13 instances") {
  for (std::uint64_t t = 0; t < 100; ++t) {
    const auto inst = random_instance(13, 300 + t);
    const auto fmt = kDefaultFormat;
    const auto zx = encode(standardize(inst.x.values), fmt), zy = encode(standardize(inst.y.values), fmt);
    const auto bx = to_bits(zx, fmt), by = to_bits(zy, fmt);
    if (t % 10 == 0) {
      const auto g = build_global_moran_circuit(inst.w, fmt);
      const auto l = build_local_moran_circuit(inst.w, fmt);
      CHECK(from_bits(evaluate_plaintext(g, bx, by), fmt)[0] == fixed_global_moran(inst.x.values, inst.y.values, inst.w, fmt));
      CHECK(from_bits(evaluate_plaintext(l, bx, by), fmt) == fixed_local_moran(inst.x.values, inst.y.values, inst.w, fmt));
    }
    CHECK(fixed_global_interaction(zx, zy, inst.w, fmt) == fixed_global_moran(inst.x.values, inst.y.values, inst.w, fmt));
  }
}

TEST_CASE("fixed result stays within 0.008 of float at n = 13") {
  for (std::uint64_t t = 0; t < 50; ++t) {
    const auto inst = random_instance(13, 400 + t);
    OracleOptions fixed;
    fixed.mode = OracleMode::Fixed;
    const auto g = oracle_moran(Statistic::Global, inst.x, inst.y, inst.w, fixed);
    CHECK(std::abs(g.global->moran_i - float_global_moran(inst.x.values, inst.y.values, inst.w)) <= 0.008);
    const auto l = oracle_moran(Statistic::Local, inst.x, inst.y, inst.w, fixed);
    const auto ref = float_local_moran(inst.x.values, inst.y.values, inst.w);
    CHECK(accuracy_report(l.local->moran_i, ref).max_abs <= 0.008);
  }
}

TEST_CASE("zero inputs give exactly zero outputs") {
  const auto inst = random_instance(5, 27);
  const std::vector<FixedWord> zero(5, FixedWord{0});
  const auto zy = encode(standardize(inst.y.values), kDefaultFormat);
  CHECK(fixed_global_interaction(zero, zy, inst.w, kDefaultFormat).bits == 0);
  for (const auto& w : fixed_local_interaction(zy, zero, inst.w, kDefaultFormat)) CHECK(w.bits == 0);
}

TEST_CASE("float oracle is permutation-equivariant") {
  const auto inst = random_instance(13, 28);
  const auto perm = round_permutation(13, 4, 1);
  WeightMatrix pw(13);
  for (std::size_t i = 0; i < 13; ++i)
    for (std::size_t j = 0; j < 13; ++j) pw(i, j) = inst.w(perm[i], perm[j]);
  const auto px = apply_permutation<double>(inst.x.values, perm), py = apply_permutation<double>(inst.y.values, perm);
  CHECK(float_global_moran(px, py, pw) == doctest::Approx(float_global_moran(inst.x.values, inst.y.values, inst.w)));
  const auto local = float_local_moran(inst.x.values, inst.y.values, inst.w);
  const auto plocal = float_local_moran(px, py, pw);
  for (std::size_t i = 0; i < 13; ++i) CHECK(plocal[i] == doctest::Approx(local[perm[i]]));
}

TEST_CASE("oracle input checks") {
  const auto inst = random_instance(5, 29);
  auto y = inst.y;
  y.ids[0] = "other";
  CHECK_THROWS_AS(oracle_moran(Statistic::Global, inst.x, y, inst.w, {}), DimensionError);
  auto flat = inst.x;
  flat.values.assign(5, 1.0);
  CHECK_THROWS_AS(oracle_moran(Statistic::Global, flat, inst.y, inst.w, {}), DegenerateData);
  CHECK_THROWS_AS(oracle_moran(Statistic::Global, inst.x, inst.y, WeightMatrix(4), {}), DimensionError);
}
