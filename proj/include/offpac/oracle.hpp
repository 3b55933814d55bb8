#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "offpac/envs.hpp"

namespace offpac::oracle {

// Exact solves on tabular MDPs. Everything here is ground truth for the
// learners: no sampling unless a function says so, no learned state.

// Limiting state distribution of the behavior chain. Power iteration to
// max-norm residual 1e-12; throws std::runtime_error if it fails to settle.
std::vector<double> stationary_distribution(const TabularMDP& m);

// Policy features: row (s*A + a) holds phi(s, a). Tabular = identity.
struct FeatureMatrix {
  int rows = 0, cols = 0;
  std::vector<double> m;  // row-major

  double at(int row, int col) const {
    return m[static_cast<std::size_t>(row) * static_cast<std::size_t>(cols) +
             static_cast<std::size_t>(col)];
  }
};

FeatureMatrix tabular_features(int num_states, int num_actions);

// State-value features for mspbe: one row per state. Tabular = identity.
FeatureMatrix state_identity_features(int num_states);

// Per-state softmax of phi.u, rows forced to sum to exactly 1.0: two-action
// states store the smaller probability as 1 minus the larger (exact by
// Sterbenz), wider states store their last entry as the complement of the
// preceding prefix sum (entries whose complement would not be positive are
// zeroed and the complement moves left). pi[s*A + a].
std::vector<double> gibbs_policy_probs(const TabularMDP& m, const FeatureMatrix& phi,
                                       const std::vector<double>& u);

struct ExactValues {
  std::vector<double> V;  // per state
  std::vector<double> Q;  // Q[s*A + a]
};

// V = (I - P_pi Gamma)^-1 R_pi with the continuation applied at the arrival
// state; Q from one-step lookahead on V.
ExactValues exact_values(const TabularMDP& m, const std::vector<double>& pi);

struct Gradients {
  double J = 0.0;              // sum_s d_b(s) V(s)
  std::vector<double> d_b, V;  // per state
  std::vector<double> Q;       // Q[s*A + a]
  std::vector<double> g;       // sum_s d_b sum_a grad pi(a|s) Q(s,a), analytic
  std::vector<double> grad_j;  // true gradient of J, central differences h=1e-6
};

Gradients objective_and_gradients(const TabularMDP& m, const std::vector<double>& u,
                                  const FeatureMatrix& phi);

// Objective alone (used by ascent loops); same policy construction as above.
double objective(const TabularMDP& m, const std::vector<double>& u,
                 const FeatureMatrix& phi);

// Gradient ascent along the approximate gradient g with backtracking step
// control. Stops once ||g||_2 < tol or after max_iters accepted/rejected
// steps; returns the final weights.
std::vector<double> ascend_on_g(const TabularMDP& m, const FeatureMatrix& phi,
                                std::vector<double> u, double tol, int max_iters);

// || Xv - Pi T^{lambda,gamma}_pi Xv ||^2_D with D = diag(d_b),
// Pi = X (X^T D X)^-1 X^T D, and the lambda-weighted Bellman operator
// T^lambda y = (I - lambda P_pi Gamma)^-1 (R_pi + (1 - lambda) P_pi Gamma y).
// X is num_states x n, row-major.
double mspbe(const TabularMDP& m, const std::vector<double>& pi,
             const std::vector<double>& v, const FeatureMatrix& X, double lambda);

// One recorded behavior step for the forward view.
struct TrajectoryStep {
  int s = 0, a = 0;
  double rho = 1.0;
  double reward = 0.0;
  int s_next = 0;
  double gamma_next = 0.0;  // continuation of s_next; 0 closes the episode
};

// Off-policy lambda-return at every step of one episode, by backward
// recursion from the terminal step:
//   R[t] = r + (1-lambda) gamma(s') vhat[s'] + lambda gamma(s') rho_{t+1} R[t+1]
// The trajectory must end with gamma_next == 0 and be contiguous
// (s_next[t] == s[t+1]); throws std::invalid_argument otherwise.
std::vector<double> forward_lambda_return(std::span<const TrajectoryStep> traj,
                                          const std::vector<double>& vhat,
                                          double lambda);

// Max abs gap, over one episode, between the lambda TD error computed by its
// own backward recursion
//   d[t] = delta_t + lambda gamma(s_{t+1}) (rho_{t+1} d[t+1] - (1 - rho_{t+1}) vhat[s_{t+1}])
// and the forward form R^lambda_t - vhat[s_t]. Algebraically zero.
double lambda_td_error_recursion_gap(std::span<const TrajectoryStep> traj,
                                     const std::vector<double>& vhat, double lambda);

struct FwdBwdStats {
  // per policy-weight component (tabular: s*A + a)
  std::vector<double> mean_forward;   // mean of rho_t psi_t (R^lambda_t - vhat)
  std::vector<double> mean_backward;  // mean of delta_t e_t
  std::vector<double> stderr_diff;    // batch-means standard error of the difference
  long long samples = 0;
};

// Runs the behavior chain (tabular Gibbs target from u), computes both
// estimators over the same window, and returns their means with a
// batch-means standard error of the per-step difference. Burn-in and a
// bootstrapped tail are handled internally.
FwdBwdStats check_forward_backward(const TabularMDP& m, const std::vector<double>& u,
                                   const std::vector<double>& vhat, double lambda,
                                   long long num_steps, std::uint64_t seed);

// max |component| of sum_s d_b(s) c(s) sum_a b(a|s) rho(s,a) psi(s,a).
// Zero for any state baseline c; with two-action exact-complement policies
// the inner sum cancels bitwise, so the result is exactly 0.0.
double baseline_invariance_max_abs(const TabularMDP& m, const std::vector<double>& pi,
                                   const std::vector<double>& c);

// max |component| of
// sum_s d_b sum_a b rho psi sum_s' P gamma(s') (1 - sum_a' pi(a'|s')) vhat(s').
// The bracket is exactly 0.0 whenever pi rows sum to exactly 1.
double normalization_residual_max_abs(const TabularMDP& m, const std::vector<double>& pi,
                                      const std::vector<double>& vhat);

}  // namespace offpac::oracle
