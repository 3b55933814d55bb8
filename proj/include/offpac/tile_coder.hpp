#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "offpac/sparse.hpp"

namespace offpac {

struct TileCoderConfig {
  int num_tilings = 10;
  int tiles_per_dim = 10;
  std::uint32_t hash_size = 1000000;
  bool bias_unit = true;          // always-on feature at index hash_size
  std::vector<double> low, high;  // per state dimension, low[d] < high[d]
};

// Hashed tile coding over a box-bounded continuous state space.
//
// Each input dimension is normalized to [0, tiles_per_dim] (states outside
// the box are clipped to its surface). Tiling k (k = 0..num_tilings-1) is
// displaced by k/num_tilings of one tile width in every dimension; its tile
// coordinate in dimension d is floor(z_d + k/num_tilings). The tuple
// (k, coords..., action) is hashed with splitmix64 mixing into
// [0, hash_size). Collisions between different tuples alias silently;
// collisions inside a single encoding are resolved by probing upward so the
// number of active indices is the same for every input:
// num_tilings + 1 bias.
class TileCoder {
 public:
  explicit TileCoder(TileCoderConfig cfg);  // throws std::invalid_argument

  const TileCoderConfig& config() const { return cfg_; }

  // total feature-space size: hash_size plus the bias slot
  std::uint32_t dimension() const;
  // active indices per encoding
  int arity() const;

  void encode_state(std::span<const double> s, SparseFeatures& out) const;
  void encode_state_action(std::span<const double> s, int action,
                           SparseFeatures& out) const;

  // one state plus all its state-action encodings in a single pass; output
  // matches per-call encode_state / encode_state_action exactly
  void encode_bundle(std::span<const double> s, int num_actions,
                     SparseFeatures& state_out,
                     std::vector<SparseFeatures>& action_out) const;

  SparseFeatures encode_state(std::span<const double> s) const {
    SparseFeatures f;
    encode_state(s, f);
    return f;
  }
  SparseFeatures encode_state_action(std::span<const double> s, int action) const {
    SparseFeatures f;
    encode_state_action(s, action, f);
    return f;
  }

 private:
  void encode(std::span<const double> s, bool with_action, int action,
              SparseFeatures& out) const;
  void normalize(std::span<const double> s, double* z) const;

  TileCoderConfig cfg_;
  std::vector<double> scale_;  // tiles_per_dim / (high - low) per dimension
};

}  // namespace offpac
