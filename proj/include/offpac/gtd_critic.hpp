#pragma once

#include <vector>

#include "offpac/sparse.hpp"

namespace offpac {

// One behavior transition. gamma_s is the continuation of the departed state
// (it discounts the trace), gamma_sp the continuation of the arrival state
// (it discounts the bootstrap target); gamma_sp is 0 when the episode ends.
struct Transition {
  SparseFeatures x_s;
  int action = 0;
  double b_prob = 1.0;
  double reward = 0.0;
  SparseFeatures x_sp;
  double gamma_s = 1.0;
  double gamma_sp = 1.0;
};

// GTD(lambda) value-function learner: main weights v, correction weights w,
// importance-weighted eligibility trace e_v.
struct CriticState {
  std::vector<double> v, w;
  EligibilityTrace e_v;
  bool diverged = false;

  explicit CriticState(std::uint32_t dimension = 0)
      : v(dimension, 0.0), w(dimension, 0.0), e_v(dimension) {}
};

// delta = r + gamma(s') v.x_s' - v.x_s, from the current (pre-update) v
double td_error(const std::vector<double>& v, const Transition& t);

// One GTD(lambda) update, in order:
//   e_v <- rho (x_s + gamma(s) lambda e_v)
//   v   <- v + alpha_v [delta e_v - gamma(s') (1 - lambda) (w.e_v) x_s]
//   w   <- w + alpha_w [delta e_v - (w.x_s) x_s]
// delta and both w-dot products are taken before any weight changes. Returns
// delta. Non-finite delta or a touched weight at magnitude >= 1e10 sets
// `diverged` (the run is flagged, never crashed).
double critic_step(CriticState& c, const Transition& t, double rho, double lambda,
                   double alpha_v, double alpha_w);

// episode boundary: the trace restarts, weights persist
void reset_traces(CriticState& c);

}  // namespace offpac
