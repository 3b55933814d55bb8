#pragma once

#include <iosfwd>
#include <vector>

#include "offpac/gtd_critic.hpp"
#include "offpac/policies.hpp"
#include "offpac/sparse.hpp"

namespace offpac {

// Gibbs-policy weights u and the importance-weighted actor trace.
struct ActorState {
  std::vector<double> u;
  EligibilityTrace e_u;
  bool diverged = false;

  explicit ActorState(std::uint32_t dimension = 0) : u(dimension, 0.0), e_u(dimension) {}
};

// One actor update, in order:
//   e_u <- rho (psi + gamma(s) lambda e_u)
//   u   <- u + alpha_u delta e_u
// delta comes from the critic's pre-update v.
void actor_step(ActorState& a, const SparseCoeffs& psi, double rho, double delta,
                double gamma_s, double lambda, double alpha_u);

struct OffPacHyper {
  double alpha_v = 0.0, alpha_w = 0.0, alpha_u = 0.0;
  double lambda = 0.0;
};

// Off-policy actor-critic: Gibbs actor on state-action features, GTD(lambda)
// critic on state features, both driven by the same behavior transitions.
struct OffPacAgent {
  int num_actions = 0;
  ActorState actor;
  CriticState critic;
  OffPacHyper hyper;

  OffPacAgent(std::uint32_t dimension, int actions, OffPacHyper h)
      : num_actions(actions), actor(dimension), critic(dimension), hyper(h) {}

  GibbsPolicy policy() const { return {&actor.u, num_actions}; }

  // One transition update: pi from the current u, rho = pi(a|s)/b(a|s),
  // delta from the pre-update v, then critic_step, then actor_step.
  // phi holds the state-action encodings of the departed state, one per
  // action. Returns delta.
  double step(const Transition& t, const std::vector<SparseFeatures>& phi);

  void episode_reset();
  bool diverged() const { return actor.diverged || critic.diverged; }

 private:
  SparseCoeffs psi_;            // reused across steps
  std::vector<double> probs_;   // reused across steps
};

// free-function form mirroring the other learners' step ops
inline double agent_step(OffPacAgent& agent, const Transition& t,
                         const std::vector<SparseFeatures>& phi) {
  return agent.step(t, phi);
}

// Weight-vector snapshots: "index,value" rows for nonzero entries, full
// precision. load returns a dense vector of the given dimension.
void save_weights_csv(std::ostream& os, const std::vector<double>& w);
std::vector<double> load_weights_csv(std::istream& is, std::size_t dimension);

}  // namespace offpac
