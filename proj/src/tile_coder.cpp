#include "offpac/tile_coder.hpp"

#include <cmath>
#include <stdexcept>

#include "offpac/rng.hpp"

namespace offpac {

TileCoder::TileCoder(TileCoderConfig cfg) : cfg_(std::move(cfg)) {
  if (cfg_.num_tilings < 1) throw std::invalid_argument("tile coder: num_tilings < 1");
  if (cfg_.tiles_per_dim < 1) throw std::invalid_argument("tile coder: tiles_per_dim < 1");
  if (cfg_.hash_size < static_cast<std::uint32_t>(cfg_.num_tilings))
    throw std::invalid_argument("tile coder: hash_size smaller than num_tilings");
  if (cfg_.low.size() != cfg_.high.size() || cfg_.low.empty())
    throw std::invalid_argument("tile coder: bounds length mismatch");
  for (std::size_t d = 0; d < cfg_.low.size(); ++d) {
    if (!(cfg_.low[d] < cfg_.high[d]))
      throw std::invalid_argument("tile coder: low must be below high");
    scale_.push_back(static_cast<double>(cfg_.tiles_per_dim) /
                     (cfg_.high[d] - cfg_.low[d]));
  }
}

std::uint32_t TileCoder::dimension() const {
  return cfg_.hash_size + (cfg_.bias_unit ? 1u : 0u);
}

int TileCoder::arity() const { return cfg_.num_tilings + (cfg_.bias_unit ? 1 : 0); }

void TileCoder::encode_state(std::span<const double> s, SparseFeatures& out) const {
  encode(s, false, 0, out);
}

void TileCoder::encode_state_action(std::span<const double> s, int action,
                                    SparseFeatures& out) const {
  encode(s, true, action, out);
}

namespace {

// keep arity exact: probe past indices this encoding already uses
void append_probed(std::vector<std::uint32_t>& indices, std::uint64_t h,
                   std::uint32_t hash_size) {
  auto idx = static_cast<std::uint32_t>(h % hash_size);
  for (;;) {
    bool taken = false;
    for (std::uint32_t used : indices)
      if (used == idx) {
        taken = true;
        break;
      }
    if (!taken) break;
    idx = (idx + 1) % hash_size;
  }
  indices.push_back(idx);
}

// insertion sort; lists are ~11 long and nearly random
void sort_indices(std::vector<std::uint32_t>& v) {
  for (std::size_t i = 1; i < v.size(); ++i) {
    const std::uint32_t key = v[i];
    std::size_t j = i;
    while (j > 0 && v[j - 1] > key) {
      v[j] = v[j - 1];
      --j;
    }
    v[j] = key;
  }
}

}  // namespace

void TileCoder::normalize(std::span<const double> s, double* z) const {
  const std::size_t dims = cfg_.low.size();
  if (s.size() != dims) throw std::invalid_argument("tile coder: state length mismatch");
  for (std::size_t d = 0; d < dims; ++d) {
    double v = (s[d] - cfg_.low[d]) * scale_[d];
    if (v < 0.0) v = 0.0;
    const double top = static_cast<double>(cfg_.tiles_per_dim);
    if (v > top) v = top;
    z[d] = v;
  }
}

void TileCoder::encode(std::span<const double> s, bool with_action, int action,
                       SparseFeatures& out) const {
  const std::size_t dims = cfg_.low.size();
  out.dimension = dimension();
  out.indices.clear();

  double z[8];  // normalized coordinates; benchmark spaces are 2-D
  if (dims > 8) throw std::invalid_argument("tile coder: more than 8 dimensions");
  normalize(s, z);

  const double inv_tilings = 1.0 / static_cast<double>(cfg_.num_tilings);
  for (int k = 0; k < cfg_.num_tilings; ++k) {
    const double offset = static_cast<double>(k) * inv_tilings;
    std::uint64_t h = 0x51ed2701a3c51e1bull;
    h = mix64(h ^ static_cast<std::uint64_t>(k));
    for (std::size_t d = 0; d < dims; ++d) {
      const auto coord = static_cast<std::int64_t>(std::floor(z[d] + offset));
      h = mix64(h ^ static_cast<std::uint64_t>(coord));
    }
    if (with_action) h = mix64(h ^ static_cast<std::uint64_t>(action));
    append_probed(out.indices, h, cfg_.hash_size);
  }

  if (cfg_.bias_unit) out.indices.push_back(cfg_.hash_size);
  sort_indices(out.indices);
}

void TileCoder::encode_bundle(std::span<const double> s, int num_actions,
                              SparseFeatures& state_out,
                              std::vector<SparseFeatures>& action_out) const {
  const std::size_t dims = cfg_.low.size();
  if (num_actions < 0) throw std::invalid_argument("tile coder: negative action count");

  state_out.dimension = dimension();
  state_out.indices.clear();
  if (action_out.size() != static_cast<std::size_t>(num_actions))
    action_out.resize(static_cast<std::size_t>(num_actions));
  for (auto& f : action_out) {
    f.dimension = dimension();
    f.indices.clear();
  }

  double z[8];
  if (dims > 8) throw std::invalid_argument("tile coder: more than 8 dimensions");
  normalize(s, z);

  // the (tiling, coords) hash prefix is shared by the state encoding and
  // every action encoding; each output probes within itself as in encode()
  const double inv_tilings = 1.0 / static_cast<double>(cfg_.num_tilings);
  for (int k = 0; k < cfg_.num_tilings; ++k) {
    const double offset = static_cast<double>(k) * inv_tilings;
    std::uint64_t h = 0x51ed2701a3c51e1bull;
    h = mix64(h ^ static_cast<std::uint64_t>(k));
    for (std::size_t d = 0; d < dims; ++d) {
      const auto coord = static_cast<std::int64_t>(std::floor(z[d] + offset));
      h = mix64(h ^ static_cast<std::uint64_t>(coord));
    }
    append_probed(state_out.indices, h, cfg_.hash_size);
    for (int a = 0; a < num_actions; ++a)
      append_probed(action_out[static_cast<std::size_t>(a)].indices,
                    mix64(h ^ static_cast<std::uint64_t>(a)), cfg_.hash_size);
  }

  if (cfg_.bias_unit) {
    state_out.indices.push_back(cfg_.hash_size);
    for (auto& f : action_out) f.indices.push_back(cfg_.hash_size);
  }
  sort_indices(state_out.indices);
  for (auto& f : action_out) sort_indices(f.indices);
}

}  // namespace offpac
