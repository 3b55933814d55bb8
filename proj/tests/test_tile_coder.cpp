#include <gtest/gtest.h>

#include <algorithm>
#include <cstdint>
#include <set>
#include <stdexcept>
#include <vector>

#include "offpac/rng.hpp"
#include "offpac/tile_coder.hpp"

using namespace offpac;

namespace {

TileCoderConfig unit_square(std::uint32_t hash_size = 1u << 20) {
  TileCoderConfig cfg;
  cfg.hash_size = hash_size;
  cfg.low = {0.0, 0.0};
  cfg.high = {1.0, 1.0};
  return cfg;
}

bool sorted_unique(const std::vector<std::uint32_t>& v) {
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i - 1] >= v[i]) return false;
  return true;
}

}  // namespace

// ---------------------------------------------------------------------------
// Arity and determinism
// ---------------------------------------------------------------------------

TEST(TileCoder, ElevenActiveIndicesWithDefaults) {
  const TileCoder coder(unit_square());
  const auto f = coder.encode_state(std::vector<double>{0.3, 0.7});
  EXPECT_EQ(f.indices.size(), 11u);
  EXPECT_EQ(coder.arity(), 11);
  EXPECT_EQ(f.dimension, (1u << 20) + 1u);
  EXPECT_EQ(coder.dimension(), (1u << 20) + 1u);
}

TEST(TileCoder, SameStateEncodesIdentically) {
  const TileCoder coder(unit_square());
  const auto a = coder.encode_state(std::vector<double>{0.123, 0.456});
  const auto b = coder.encode_state(std::vector<double>{0.123, 0.456});
  EXPECT_EQ(a.indices, b.indices);
}

TEST(TileCoder, SameStateActionEncodesIdentically) {
  const TileCoder coder(unit_square());
  const auto a = coder.encode_state_action(std::vector<double>{0.9, 0.1}, 2);
  const auto b = coder.encode_state_action(std::vector<double>{0.9, 0.1}, 2);
  EXPECT_EQ(a.indices, b.indices);
}

TEST(TileCoder, IndicesSortedStrictlyIncreasing) {
  const TileCoder coder(unit_square());
  SplitMix64 rng(7);
  for (int i = 0; i < 50; ++i) {
    const std::vector<double> s = {rng.uniform01(), rng.uniform01()};
    EXPECT_TRUE(sorted_unique(coder.encode_state(s).indices));
    EXPECT_TRUE(sorted_unique(coder.encode_state_action(s, i % 3).indices));
  }
}

TEST(TileCoder, BiasIndexAlwaysActive) {
  const auto cfg = unit_square();
  const TileCoder coder(cfg);
  SplitMix64 rng(11);
  for (int i = 0; i < 20; ++i) {
    const std::vector<double> s = {rng.uniform01(), rng.uniform01()};
    EXPECT_TRUE(coder.encode_state(s).contains(cfg.hash_size));
    EXPECT_TRUE(coder.encode_state_action(s, 0).contains(cfg.hash_size));
  }
}

TEST(TileCoder, NoBiasDropsTheExtraIndex) {
  auto cfg = unit_square();
  cfg.bias_unit = false;
  const TileCoder coder(cfg);
  const auto f = coder.encode_state(std::vector<double>{0.5, 0.5});
  EXPECT_EQ(f.indices.size(), 10u);
  EXPECT_EQ(coder.arity(), 10);
  EXPECT_EQ(f.dimension, cfg.hash_size);
}

// ---------------------------------------------------------------------------
// Tile geometry
// ---------------------------------------------------------------------------

TEST(TileCoder, StatesWithinOneCellShareAllTiles) {
  // z = 10 s; for both points floor(z + k/10) agrees for every tiling
  const TileCoder coder(unit_square());
  const auto a = coder.encode_state(std::vector<double>{0.101, 0.101});
  const auto b = coder.encode_state(std::vector<double>{0.102, 0.102});
  EXPECT_EQ(a.indices, b.indices);
}

TEST(TileCoder, DistantStatesShareOnlyTheBias) {
  // farther apart than one tile width in every tiling: tile coordinates
  // differ everywhere, and at 2^20 slots the hashes do not collide here
  const auto cfg = unit_square();
  const TileCoder coder(cfg);
  const auto a = coder.encode_state(std::vector<double>{0.05, 0.05});
  const auto b = coder.encode_state(std::vector<double>{0.85, 0.85});
  std::vector<std::uint32_t> common;
  std::set_intersection(a.indices.begin(), a.indices.end(), b.indices.begin(),
                        b.indices.end(), std::back_inserter(common));
  EXPECT_EQ(common, std::vector<std::uint32_t>{cfg.hash_size});
}

TEST(TileCoder, ActionsSeparateNonBiasIndices) {
  const auto cfg = unit_square();
  const TileCoder coder(cfg);
  const std::vector<double> s = {0.4, 0.6};
  const auto a0 = coder.encode_state_action(s, 0);
  const auto a1 = coder.encode_state_action(s, 1);
  std::vector<std::uint32_t> common;
  std::set_intersection(a0.indices.begin(), a0.indices.end(), a1.indices.begin(),
                        a1.indices.end(), std::back_inserter(common));
  EXPECT_EQ(common, std::vector<std::uint32_t>{cfg.hash_size});
}

TEST(TileCoder, OutOfRangeStatesClipToBounds) {
  const TileCoder coder(unit_square());
  const auto inside = coder.encode_state(std::vector<double>{0.0, 1.0});
  const auto outside = coder.encode_state(std::vector<double>{-3.0, 42.0});
  EXPECT_EQ(inside.indices, outside.indices);
}

// ---------------------------------------------------------------------------
// In-encoding collision probing
// ---------------------------------------------------------------------------

TEST(TileCoder, TinyHashStillYieldsFullArity) {
  // 10 tilings into 12 slots force collisions; probing keeps 11 distinct
  auto cfg = unit_square(12);
  const TileCoder coder(cfg);
  SplitMix64 rng(23);
  for (int i = 0; i < 100; ++i) {
    const std::vector<double> s = {rng.uniform01(), rng.uniform01()};
    const auto f = coder.encode_state(s);
    EXPECT_EQ(f.indices.size(), 11u);
    EXPECT_TRUE(sorted_unique(f.indices));
    EXPECT_LE(f.indices.back(), 12u);
  }
}

// ---------------------------------------------------------------------------
// Bundle encoding
// ---------------------------------------------------------------------------

TEST(TileCoder, BundleMatchesPerCallEncodings) {
  const TileCoder coder(unit_square());
  SplitMix64 rng(31);
  SparseFeatures state;
  std::vector<SparseFeatures> per_action;
  for (int i = 0; i < 50; ++i) {
    const std::vector<double> s = {rng.uniform(-0.2, 1.2), rng.uniform(-0.2, 1.2)};
    coder.encode_bundle(s, 3, state, per_action);
    EXPECT_EQ(state.indices, coder.encode_state(s).indices);
    ASSERT_EQ(per_action.size(), 3u);
    for (int a = 0; a < 3; ++a)
      EXPECT_EQ(per_action[static_cast<std::size_t>(a)].indices,
                coder.encode_state_action(s, a).indices);
  }
}

TEST(TileCoder, BundleMatchesPerCallUnderProbing) {
  const TileCoder coder(unit_square(12));
  SparseFeatures state;
  std::vector<SparseFeatures> per_action;
  const std::vector<double> s = {0.37, 0.91};
  coder.encode_bundle(s, 5, state, per_action);
  EXPECT_EQ(state.indices, coder.encode_state(s).indices);
  for (int a = 0; a < 5; ++a)
    EXPECT_EQ(per_action[static_cast<std::size_t>(a)].indices,
              coder.encode_state_action(s, a).indices);
}

// ---------------------------------------------------------------------------
// Configuration errors
// ---------------------------------------------------------------------------

TEST(TileCoder, RejectsBadConfigs) {
  auto bad = unit_square();
  bad.num_tilings = 0;
  EXPECT_THROW(TileCoder{bad}, std::invalid_argument);

  bad = unit_square();
  bad.tiles_per_dim = 0;
  EXPECT_THROW(TileCoder{bad}, std::invalid_argument);

  bad = unit_square();
  bad.hash_size = 5;  // smaller than num_tilings
  EXPECT_THROW(TileCoder{bad}, std::invalid_argument);

  bad = unit_square();
  bad.high = {1.0};  // length mismatch with low
  EXPECT_THROW(TileCoder{bad}, std::invalid_argument);

  bad = unit_square();
  bad.low = {0.5, 0.0};
  bad.high = {0.5, 1.0};  // empty range in dimension 0
  EXPECT_THROW(TileCoder{bad}, std::invalid_argument);

  bad = unit_square();
  bad.low.clear();
  bad.high.clear();
  EXPECT_THROW(TileCoder{bad}, std::invalid_argument);
}

TEST(TileCoder, RejectsWrongStateLength) {
  const TileCoder coder(unit_square());
  EXPECT_THROW(coder.encode_state(std::vector<double>{0.5}), std::invalid_argument);
  EXPECT_THROW(coder.encode_state_action(std::vector<double>{0.5, 0.5, 0.5}, 0),
               std::invalid_argument);
  SparseFeatures state;
  std::vector<SparseFeatures> per_action;
  EXPECT_THROW(coder.encode_bundle(std::vector<double>{0.5}, 2, state, per_action),
               std::invalid_argument);
}
