#include <doctest.h>

#include <random>

#include "geosmpc/errors.hpp"
#include "geosmpc/garble.hpp"
#include "geosmpc/ot.hpp"

using namespace geosmpc;

namespace {

Block run_ot(const OtGroup& g, const WireLabelPair& pair, int choice, Prg& sp, Prg& rp, std::uint64_t index) {
  auto [s, a] = ot_sender_round1(g, sp, index);
  auto [r, b] = ot_receiver_round1(g, choice, a, rp, index);
  const auto cts = ot_sender_round2(g, s, b, pair);
  return ot_receiver_finish(g, r, cts);
}

WireLabelPair random_pair(Prg& prg) { return {prg.next_block(), prg.next_block()}; }

}  // namespace

TEST_CASE("single transfers deliver exactly the chosen string") {
  for (const auto& group : {ristretto_group(), toy_group()}) {
    Prg sp(seed_from_u64(1)), rp(seed_from_u64(2)), lp(seed_from_u64(3));
    for (int choice : {0, 1}) {
      const auto pair = random_pair(lp);
      const auto got = run_ot(*group, pair, choice, sp, rp, choice);
      CHECK(got == pair[choice]);
      CHECK(!(got == pair[1 - choice]));
    }
  }
}

TEST_CASE("1000 randomized transfers") {
  const auto group = ristretto_group();
  Prg sp(seed_from_u64(4)), rp(seed_from_u64(5)), lp(seed_from_u64(6));
  int counts[2] = {0, 0};
  for (std::uint64_t i = 0; i < 1000; ++i) {
    const int choice = static_cast<int>(lp.next_u64() & 1);
    ++counts[choice];
    const auto pair = random_pair(lp);
    const auto got = run_ot(*group, pair, choice, sp, rp, i);
    REQUIRE(got == pair[choice]);
    REQUIRE(!(got == pair[1 - choice]));
  }
  CHECK(counts[0] > 0);
  CHECK(counts[1] > 0);
}

TEST_CASE("a batch of 416 transfers equals select_labels") {
  for (const auto& group : {ristretto_group(), toy_group()}) {
    Prg lp(seed_from_u64(7)), sp(seed_from_u64(8)), rp(seed_from_u64(9));
    std::vector<WireLabelPair> pairs;
    std::vector<std::uint8_t> bits;
    for (int i = 0; i < 416; ++i) {
      pairs.push_back(random_pair(lp));
      bits.push_back(lp.next_u64() & 1);
    }
    CHECK(ot_batch_local(*group, pairs, bits, sp, rp) == select_labels(pairs, bits));
  }
}

TEST_CASE("invalid group elements are rejected") {
  for (const auto& group : {ristretto_group(), toy_group()}) {
    Prg prg(seed_from_u64(10));
    auto [s, a] = ot_sender_round1(*group, prg);
    CHECK_THROWS_AS(ot_receiver_round1(*group, 0, GroupElement(3, 0), prg), GroupElementError);
    CHECK_THROWS_AS(ot_sender_round2(*group, s, GroupElement(group->element_size(), 0), {}), GroupElementError);
    CHECK_THROWS_AS(ot_sender_round2(*group, s, GroupElement(group->element_size(), 0xFF), {}), GroupElementError);
  }
  CHECK_THROWS(group_by_id(9));
  CHECK(group_by_id(1)->element_size() == 32);
}

TEST_CASE("receiver messages look alike for both choices") {
  // Smoke test only: the first byte of B should be spread out for either choice.
  const auto group = ristretto_group();
  Prg sp(seed_from_u64(11)), rp(seed_from_u64(12));
  for (int choice : {0, 1}) {
    std::array<int, 16> buckets{};
    for (int i = 0; i < 800; ++i) {
      auto [s, a] = ot_sender_round1(*group, sp, i);
      auto [r, b] = ot_receiver_round1(*group, choice, a, rp, i);
      ++buckets[b[5] & 15];
    }
    for (int count : buckets) {
      CHECK(count > 20);
      CHECK(count < 80);
    }
  }
}
