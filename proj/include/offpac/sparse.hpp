#pragma once

#include <cstdint>
#include <utility>
#include <vector>

namespace offpac {

// Binary sparse feature vector: active indices only, strictly increasing.
struct SparseFeatures {
  std::vector<std::uint32_t> indices;  // sorted ascending, no duplicates
  std::uint32_t dimension = 0;

  bool contains(std::uint32_t i) const {
    // binary search; index lists are short (tens of entries)
    std::size_t lo = 0, hi = indices.size();
    while (lo < hi) {
      std::size_t mid = (lo + hi) / 2;
      if (indices[mid] < i)
        lo = mid + 1;
      else
        hi = mid;
    }
    return lo < indices.size() && indices[lo] == i;
  }
};

// Sparse vector with real coefficients (policy scores, mixed next-state
// features). Entries sorted ascending by index.
struct SparseCoeffs {
  std::vector<std::pair<std::uint32_t, double>> entries;
  std::uint32_t dimension = 0;
};

inline double sparse_dot(const std::vector<double>& w, const SparseFeatures& f) {
  double sum = 0.0;
  for (std::uint32_t i : f.indices) sum += w[i];
  return sum;
}

inline double sparse_dot(const std::vector<double>& w, const SparseCoeffs& f) {
  double sum = 0.0;
  for (const auto& [i, c] : f.entries) sum += w[i] * c;
  return sum;
}

inline void sparse_axpy(std::vector<double>& w, double a, const SparseFeatures& f) {
  for (std::uint32_t i : f.indices) w[i] += a;
}

inline void sparse_axpy(std::vector<double>& w, double a, const SparseCoeffs& f) {
  for (const auto& [i, c] : f.entries) w[i] += a * c;
}

// Eligibility trace over a fixed-dimension feature space. Dense value array
// plus an explicit active-index list, so every operation is O(support).
// Update form: e <- rho * (decay * e + input). Indices touched by the input
// stay in the active set until prune() even when their value rounds to zero,
// which lets weight-update walks treat the active list as a superset of the
// input's support.
class EligibilityTrace {
 public:
  EligibilityTrace() = default;
  explicit EligibilityTrace(std::uint32_t dimension)
      : value_(dimension, 0.0), flag_(dimension, 0) {}

  void reset(std::uint32_t dimension) {
    value_.assign(dimension, 0.0);
    flag_.assign(dimension, 0);
    active_.clear();
  }

  void decay_add(double rho, double decay, const SparseFeatures& x) {
    for (std::uint32_t i : active_) value_[i] *= decay;
    for (std::uint32_t i : x.indices) {
      activate(i);
      value_[i] += 1.0;
    }
    if (rho != 1.0)
      for (std::uint32_t i : active_) value_[i] *= rho;
  }

  void decay_add(double rho, double decay, const SparseCoeffs& x) {
    for (std::uint32_t i : active_) value_[i] *= decay;
    for (const auto& [i, c] : x.entries) {
      activate(i);
      value_[i] += c;
    }
    if (rho != 1.0)
      for (std::uint32_t i : active_) value_[i] *= rho;
  }

  // drop entries below eps in magnitude; call after the step's weight updates
  void prune(double eps) {
    std::size_t keep = 0;
    for (std::uint32_t i : active_) {
      double v = value_[i];
      if (v < eps && v > -eps) {
        flag_[i] = 0;
        value_[i] = 0.0;
      } else {
        active_[keep++] = i;
      }
    }
    active_.resize(keep);
  }

  void clear() {
    for (std::uint32_t i : active_) {
      value_[i] = 0.0;
      flag_[i] = 0;
    }
    active_.clear();
  }

  double dot(const std::vector<double>& w) const {
    double sum = 0.0;
    for (std::uint32_t i : active_) sum += w[i] * value_[i];
    return sum;
  }

  const std::vector<std::uint32_t>& active() const { return active_; }
  double value(std::uint32_t i) const { return value_[i]; }
  bool is_active(std::uint32_t i) const { return flag_[i] != 0; }
  std::uint32_t dimension() const { return static_cast<std::uint32_t>(value_.size()); }

 private:
  void activate(std::uint32_t i) {
    if (!flag_[i]) {
      flag_[i] = 1;
      value_[i] = 0.0;
      active_.push_back(i);
    }
  }

  std::vector<double> value_;
  std::vector<std::uint8_t> flag_;
  std::vector<std::uint32_t> active_;
};

// magnitude floor shared by all learners' traces
inline constexpr double kTraceEps = 1e-8;

// weights at or past this magnitude (or non-finite) mark a run as diverged
inline constexpr double kDivergenceLimit = 1e10;

}  // namespace offpac
