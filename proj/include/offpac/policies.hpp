#pragma once

#include <vector>

#include "offpac/rng.hpp"
#include "offpac/sparse.hpp"

namespace offpac {

// pi(a|s) = exp(u . phi_sa) / sum_b exp(u . phi_sb), computed over the
// per-action feature encodings of one state. Max-subtraction keeps exp in
// range; probabilities are strictly positive for any finite logit spread.
std::vector<double> gibbs_probs(const std::vector<double>& u,
                                const std::vector<SparseFeatures>& phi);
// allocation-free form for per-step callers; out is resized to phi.size()
void gibbs_probs(const std::vector<double>& u, const std::vector<SparseFeatures>& phi,
                 std::vector<double>& out);

// out = sum_b w[b] * phi[b]; coefficients accumulated in ascending action
// order per index. Every index appearing in any phi[b] gets an entry.
void mix_features(const std::vector<SparseFeatures>& phi,
                  const std::vector<double>& w, SparseCoeffs& out);

// Score (compatible-features direction) of the Gibbs policy:
// psi(s,a) = phi_sa - sum_b pi(b|s) phi_sb. probs must be gibbs_probs(u, phi).
void gibbs_score(const std::vector<SparseFeatures>& phi,
                 const std::vector<double>& probs, int action, SparseCoeffs& out);

// rho = pi(a|s) / b(a|s); the behavior must support every action it takes
double importance_ratio(double pi_prob, double b_prob);  // throws on b_prob <= 0

// softmax over action values with temperature tau > 0
std::vector<double> softmax_target_probs(double tau, const std::vector<double>& q);
void softmax_target_probs(double tau, const std::vector<double>& q,
                          std::vector<double>& out);

// argmax with lowest-index tie break
int greedy_action(const std::vector<double>& q);

// Target policy of the actor: a view over externally owned weights. Queries
// are pure; the weights are updated between queries by the actor module.
struct GibbsPolicy {
  const std::vector<double>* u = nullptr;
  int num_actions = 0;

  std::vector<double> probs(const std::vector<SparseFeatures>& phi) const {
    return gibbs_probs(*u, phi);
  }
  int sample(const std::vector<SparseFeatures>& phi, SplitMix64& rng) const {
    auto p = probs(phi);
    return sample_discrete(p, rng.uniform01());
  }
};

struct UniformBehavior {
  int num_actions = 0;

  double prob() const { return 1.0 / num_actions; }
  int sample(SplitMix64& rng) const { return rng.uniform_int(num_actions); }
};

struct SoftmaxTarget {
  double tau = 1.0;

  std::vector<double> probs(const std::vector<double>& q) const {
    return softmax_target_probs(tau, q);
  }
};

struct GreedyTarget {
  int action(const std::vector<double>& q) const { return greedy_action(q); }
  // point mass; used for the importance ratio and next-state feature mix
  std::vector<double> probs(const std::vector<double>& q) const {
    std::vector<double> p(q.size(), 0.0);
    p[static_cast<std::size_t>(greedy_action(q))] = 1.0;
    return p;
  }
};

}  // namespace offpac
