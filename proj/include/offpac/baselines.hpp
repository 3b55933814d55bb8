#pragma once

#include <vector>

#include "offpac/gtd_critic.hpp"
#include "offpac/sparse.hpp"

namespace offpac {

// Watkins-style Q(lambda): accumulating trace over state-action features,
// cut to the current features whenever the behavior action was not greedy.
struct QLambdaState {
  std::vector<double> v;
  EligibilityTrace e;
  bool diverged = false;

  explicit QLambdaState(std::uint32_t dimension = 0) : v(dimension, 0.0), e(dimension) {}
};

// One update:
//   delta = r + gamma(s') max_a' v.phi_s'a' - v.phi_sa
//   e <- gamma(s) lambda e   if a was greedy at s (pre-update v, lowest-index
//                            tie break), else e <- 0;   then e <- e + phi_sa
//   v <- v + alpha_v delta e
// Returns delta. phi_sp_all holds one encoding per next-state action.
double q_lambda_step(QLambdaState& st, const Transition& t, const SparseFeatures& phi_sa,
                     const std::vector<SparseFeatures>& phi_s_all,
                     const std::vector<SparseFeatures>& phi_sp_all, double lambda,
                     double alpha_v);

enum class GQTarget { greedy, softmax };

// GQ(lambda) action-value learner with a fixed-form target policy computed
// from its own Q estimate: greedy (point mass, lowest-index tie break) or
// softmax with temperature tau.
struct GQState {
  std::vector<double> v, w;
  EligibilityTrace e;
  bool diverged = false;

  explicit GQState(std::uint32_t dimension = 0)
      : v(dimension, 0.0), w(dimension, 0.0), e(dimension) {}
};

// One update:
//   phibar' = sum_a pi(a|s') phi_s'a
//   delta   = r + gamma(s') v.phibar' - v.phi_sa
//   rho     = pi(a|s) / b(a|s)
//   e <- phi_sa + gamma(s) lambda rho e
//   v <- v + alpha_v [delta e - gamma(s') (1 - lambda) (w.e) phibar']
//   w <- w + alpha_w [delta e - (w.phi_sa) phi_sa]
// Returns delta.
double gq_step(GQState& st, const Transition& t, const SparseFeatures& phi_sa,
               const std::vector<SparseFeatures>& phi_s_all,
               const std::vector<SparseFeatures>& phi_sp_all, GQTarget target,
               double tau, double lambda, double alpha_v, double alpha_w);

}  // namespace offpac
