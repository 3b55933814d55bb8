#include "offpac/oracle.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>

#include "offpac/rng.hpp"

namespace offpac::oracle {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// State-to-state behavior chain: Pb(s, s') = sum_a b(a|s) P(s'|s, a).
MatrixXd behavior_chain(const TabularMDP& m) {
  const int S = m.num_states, A = m.num_actions;
  MatrixXd pb = MatrixXd::Zero(S, S);
  for (int s = 0; s < S; ++s)
    for (int a = 0; a < A; ++a)
      for (int s2 = 0; s2 < S; ++s2) pb(s, s2) += m.beh(s, a) * m.prob(s, a, s2);
  return pb;
}

// P_pi(s, s') and R_pi(s) = expected one-step reward under pi.
void policy_chain(const TabularMDP& m, const std::vector<double>& pi, MatrixXd& p_pi,
                  VectorXd& r_pi) {
  const int S = m.num_states, A = m.num_actions;
  p_pi = MatrixXd::Zero(S, S);
  r_pi = VectorXd::Zero(S);
  for (int s = 0; s < S; ++s)
    for (int a = 0; a < A; ++a) {
      const double w = pi[static_cast<std::size_t>(s) * A + a];
      for (int s2 = 0; s2 < S; ++s2) {
        p_pi(s, s2) += w * m.prob(s, a, s2);
        r_pi(s) += w * m.prob(s, a, s2) * m.rew(s, a, s2);
      }
    }
}

// psi(s, a, k) = phi(sa, k) - sum_b pi(b|s) phi(sb, k), flattened as
// [(s*A + a) * K + k]. With exact-complement two-action rows the entries
// come out bitwise-exact, which the zero-identity checks rely on.
std::vector<double> score_table(const TabularMDP& m, const std::vector<double>& pi,
                                const FeatureMatrix& phi) {
  const int S = m.num_states, A = m.num_actions, K = phi.cols;
  std::vector<double> psi(static_cast<std::size_t>(S) * A * K, 0.0);
  for (int s = 0; s < S; ++s) {
    for (int k = 0; k < K; ++k) {
      double mix = 0.0;
      for (int b = 0; b < A; ++b)
        mix += pi[static_cast<std::size_t>(s) * A + b] * phi.at(s * A + b, k);
      for (int a = 0; a < A; ++a)
        psi[(static_cast<std::size_t>(s) * A + a) * K + k] = phi.at(s * A + a, k) - mix;
    }
  }
  return psi;
}

// J and the approximate gradient g for a fixed (precomputed) d_b; the
// behavior chain does not depend on u, so ascent loops reuse one d_b.
struct JandG {
  double J = 0.0;
  std::vector<double> g;
};

JandG objective_and_g_cached(const TabularMDP& m, const std::vector<double>& u,
                             const FeatureMatrix& phi, const std::vector<double>& d_b) {
  const int S = m.num_states, A = m.num_actions, K = phi.cols;
  const std::vector<double> pi = gibbs_policy_probs(m, phi, u);
  const ExactValues ev = exact_values(m, pi);
  const std::vector<double> psi = score_table(m, pi, phi);
  JandG out;
  out.g.assign(static_cast<std::size_t>(K), 0.0);
  for (int s = 0; s < S; ++s) {
    out.J += d_b[static_cast<std::size_t>(s)] * ev.V[static_cast<std::size_t>(s)];
    for (int a = 0; a < A; ++a) {
      const std::size_t sa = static_cast<std::size_t>(s) * A + a;
      const double w = d_b[static_cast<std::size_t>(s)] * pi[sa] * ev.Q[sa];
      for (int k = 0; k < K; ++k)
        out.g[static_cast<std::size_t>(k)] += w * psi[sa * static_cast<std::size_t>(K) + k];
    }
  }
  return out;
}

}  // namespace

std::vector<double> stationary_distribution(const TabularMDP& m) {
  const int S = m.num_states;
  const MatrixXd pb = behavior_chain(m);

  // the limiting distribution is well defined only on one communicating
  // class; reject chains where some state cannot reach or be reached
  const auto reach = [&](bool forward) {
    std::vector<char> seen(static_cast<std::size_t>(S), 0);
    std::vector<int> stack{0};
    seen[0] = 1;
    while (!stack.empty()) {
      const int s = stack.back();
      stack.pop_back();
      for (int s2 = 0; s2 < S; ++s2) {
        const double q = forward ? pb(s, s2) : pb(s2, s);
        if (q > 0.0 && !seen[static_cast<std::size_t>(s2)]) {
          seen[static_cast<std::size_t>(s2)] = 1;
          stack.push_back(s2);
        }
      }
    }
    for (char c : seen)
      if (!c) return false;
    return true;
  };
  if (!reach(true) || !reach(false))
    throw std::runtime_error("behavior chain is reducible");

  VectorXd d = VectorXd::Constant(S, 1.0 / S);
  for (long long it = 0; it < 1'000'000; ++it) {
    VectorXd next = pb.transpose() * d;
    next /= next.sum();
    const double resid = (next - d).cwiseAbs().maxCoeff();
    d = next;
    if (resid < 1e-12) return {d.data(), d.data() + S};
  }
  throw std::runtime_error("stationary distribution did not converge");
}

FeatureMatrix tabular_features(int num_states, int num_actions) {
  FeatureMatrix f;
  f.rows = num_states * num_actions;
  f.cols = f.rows;
  f.m.assign(static_cast<std::size_t>(f.rows) * f.cols, 0.0);
  for (int i = 0; i < f.rows; ++i) f.m[static_cast<std::size_t>(i) * f.cols + i] = 1.0;
  return f;
}

FeatureMatrix state_identity_features(int num_states) {
  FeatureMatrix f;
  f.rows = num_states;
  f.cols = num_states;
  f.m.assign(static_cast<std::size_t>(f.rows) * f.cols, 0.0);
  for (int i = 0; i < f.rows; ++i) f.m[static_cast<std::size_t>(i) * f.cols + i] = 1.0;
  return f;
}

std::vector<double> gibbs_policy_probs(const TabularMDP& m, const FeatureMatrix& phi,
                                       const std::vector<double>& u) {
  const int S = m.num_states, A = m.num_actions, K = phi.cols;
  if (static_cast<int>(u.size()) != K)
    throw std::invalid_argument("policy weight length does not match features");
  std::vector<double> pi(static_cast<std::size_t>(S) * A, 0.0);
  std::vector<double> logits(A);
  for (int s = 0; s < S; ++s) {
    double mx = -std::numeric_limits<double>::infinity();
    for (int a = 0; a < A; ++a) {
      double z = 0.0;
      for (int k = 0; k < K; ++k) z += u[k] * phi.at(s * A + a, k);
      logits[a] = z;
      mx = std::max(mx, z);
    }
    double sum = 0.0;
    for (int a = 0; a < A; ++a) {
      logits[a] = std::exp(logits[a] - mx);
      sum += logits[a];
    }
    double* row = pi.data() + static_cast<std::size_t>(s) * A;
    for (int a = 0; a < A; ++a) row[a] = logits[a] / sum;
    if (A == 2) {
      // Store the smaller as the exact complement of the larger: both
      // directions of 1 - p are then exact, so the row sums to 1.0 bitwise.
      const int big = row[0] >= row[1] ? 0 : 1;
      row[1 - big] = 1.0 - row[big];
    } else {
      // Rewrite the tail as the complement of its prefix sum. For prefix p
      // in (0, 0.5) the fused sum p + fl(1-p) lands within half an ulp of 1
      // and rounds to 1.0; for p in [0.5, 2] the subtraction is exact by
      // Sterbenz. A non-positive complement (tail mass below rounding
      // resolution) zeroes that entry and moves the complement left, so the
      // left-to-right float sum of the row is exactly 1.0 in every case.
      for (int last = A - 1; last >= 0; --last) {
        double prefix = 0.0;
        for (int a = 0; a < last; ++a) prefix += row[a];
        const double c = 1.0 - prefix;
        if (c > 0.0 || last == 0) {
          row[last] = c;
          break;
        }
        row[last] = 0.0;
      }
    }
  }
  return pi;
}

ExactValues exact_values(const TabularMDP& m, const std::vector<double>& pi) {
  const int S = m.num_states, A = m.num_actions;
  MatrixXd p_pi;
  VectorXd r_pi;
  policy_chain(m, pi, p_pi, r_pi);
  MatrixXd gamma = MatrixXd::Zero(S, S);
  for (int s = 0; s < S; ++s) gamma(s, s) = m.gamma[static_cast<std::size_t>(s)];
  const MatrixXd sys = MatrixXd::Identity(S, S) - p_pi * gamma;
  const VectorXd v = sys.colPivHouseholderQr().solve(r_pi);

  ExactValues out;
  out.V.assign(v.data(), v.data() + S);
  out.Q.assign(static_cast<std::size_t>(S) * A, 0.0);
  for (int s = 0; s < S; ++s)
    for (int a = 0; a < A; ++a) {
      double q = 0.0;
      for (int s2 = 0; s2 < S; ++s2)
        q += m.prob(s, a, s2) *
             (m.rew(s, a, s2) + m.gamma[static_cast<std::size_t>(s2)] * out.V[s2]);
      out.Q[static_cast<std::size_t>(s) * A + a] = q;
    }
  return out;
}

double objective(const TabularMDP& m, const std::vector<double>& u,
                 const FeatureMatrix& phi) {
  const std::vector<double> pi = gibbs_policy_probs(m, phi, u);
  const std::vector<double> d = stationary_distribution(m);
  const ExactValues ev = exact_values(m, pi);
  double j = 0.0;
  for (int s = 0; s < m.num_states; ++s) j += d[s] * ev.V[s];
  return j;
}

Gradients objective_and_gradients(const TabularMDP& m, const std::vector<double>& u,
                                  const FeatureMatrix& phi) {
  const int S = m.num_states, A = m.num_actions, K = phi.cols;
  Gradients out;
  const std::vector<double> pi = gibbs_policy_probs(m, phi, u);
  out.d_b = stationary_distribution(m);
  ExactValues ev = exact_values(m, pi);
  out.V = std::move(ev.V);
  out.Q = std::move(ev.Q);
  out.J = 0.0;
  for (int s = 0; s < S; ++s) out.J += out.d_b[s] * out.V[s];

  const std::vector<double> psi = score_table(m, pi, phi);
  out.g.assign(K, 0.0);
  for (int s = 0; s < S; ++s)
    for (int a = 0; a < A; ++a) {
      const std::size_t sa = static_cast<std::size_t>(s) * A + a;
      const double w = out.d_b[s] * pi[sa] * out.Q[sa];
      for (int k = 0; k < K; ++k) out.g[k] += w * psi[sa * K + k];
    }

  // Central differences reuse the cached d_b: the behavior chain, and hence
  // the weighting, does not move with u.
  const auto j_of = [&](const std::vector<double>& uu) {
    const std::vector<double> p = gibbs_policy_probs(m, phi, uu);
    const ExactValues vals = exact_values(m, p);
    double j = 0.0;
    for (int s = 0; s < S; ++s) j += out.d_b[s] * vals.V[s];
    return j;
  };
  const double h = 1e-6;
  out.grad_j.assign(K, 0.0);
  std::vector<double> up = u;
  for (int k = 0; k < K; ++k) {
    up[k] = u[k] + h;
    const double jp = j_of(up);
    up[k] = u[k] - h;
    const double jm = j_of(up);
    up[k] = u[k];
    out.grad_j[k] = (jp - jm) / (2.0 * h);
  }
  return out;
}

std::vector<double> ascend_on_g(const TabularMDP& m, const FeatureMatrix& phi,
                                std::vector<double> u, double tol, int max_iters) {
  const std::vector<double> d_b = stationary_distribution(m);
  JandG cur = objective_and_g_cached(m, u, phi, d_b);
  double eta = 1.0;
  std::vector<double> trial(u.size());
  for (int it = 0; it < max_iters; ++it) {
    double norm = 0.0;
    for (double gk : cur.g) norm += gk * gk;
    if (std::sqrt(norm) < tol) break;
    for (std::size_t k = 0; k < u.size(); ++k) trial[k] = u[k] + eta * cur.g[k];
    const JandG nxt = objective_and_g_cached(m, trial, phi, d_b);
    if (nxt.J >= cur.J) {
      u = trial;
      cur = nxt;
      eta = std::min(eta * 1.25, 1e6);
    } else {
      eta = std::max(eta * 0.5, 1e-12);
    }
  }
  return u;
}

double mspbe(const TabularMDP& m, const std::vector<double>& pi,
             const std::vector<double>& v, const FeatureMatrix& X, double lambda) {
  const int S = m.num_states, n = X.cols;
  if (X.rows != S) throw std::invalid_argument("feature matrix must have one row per state");
  if (static_cast<int>(v.size()) != n)
    throw std::invalid_argument("value weight length does not match features");
  MatrixXd p_pi;
  VectorXd r_pi;
  policy_chain(m, pi, p_pi, r_pi);
  MatrixXd gamma = MatrixXd::Zero(S, S);
  for (int s = 0; s < S; ++s) gamma(s, s) = m.gamma[static_cast<std::size_t>(s)];
  const MatrixXd M = p_pi * gamma;

  Eigen::Map<const MatrixXd> xm_rowmajor(X.m.data(), n, S);  // transposed view
  const MatrixXd xe = xm_rowmajor.transpose();
  Eigen::Map<const VectorXd> ve(v.data(), n);
  const VectorXd xv = xe * ve;

  const VectorXd t_xv =
      (MatrixXd::Identity(S, S) - lambda * M)
          .colPivHouseholderQr()
          .solve(r_pi + (1.0 - lambda) * M * xv);

  const std::vector<double> db = stationary_distribution(m);
  Eigen::Map<const VectorXd> d(db.data(), S);
  const MatrixXd xdx = xe.transpose() * d.asDiagonal() * xe;
  const Eigen::ColPivHouseholderQR<MatrixXd> qr(xdx);
  if (qr.rank() < n)
    throw std::invalid_argument("feature matrix is rank-deficient under the visit weights");
  const VectorXd z = qr.solve(xe.transpose() * (d.asDiagonal() * t_xv));
  const VectorXd err = xv - xe * z;
  return err.dot(d.asDiagonal() * err);
}

std::vector<double> forward_lambda_return(std::span<const TrajectoryStep> traj,
                                          const std::vector<double>& vhat,
                                          double lambda) {
  const std::size_t T = traj.size();
  if (T == 0) throw std::invalid_argument("empty trajectory");
  for (std::size_t t = 0; t + 1 < T; ++t)
    if (traj[t].s_next != traj[t + 1].s)
      throw std::invalid_argument("trajectory is not contiguous");
  if (traj[T - 1].gamma_next != 0.0)
    throw std::invalid_argument("trajectory does not end at a termination");

  std::vector<double> ret(T, 0.0);
  double r_next = 0.0, rho_next = 1.0;
  for (std::size_t t = T; t-- > 0;) {
    const double gn = traj[t].gamma_next;
    ret[t] = traj[t].reward + (1.0 - lambda) * gn * vhat[traj[t].s_next] +
             lambda * gn * rho_next * r_next;
    r_next = ret[t];
    rho_next = traj[t].rho;
  }
  return ret;
}

double lambda_td_error_recursion_gap(std::span<const TrajectoryStep> traj,
                                     const std::vector<double>& vhat, double lambda) {
  const std::vector<double> ret = forward_lambda_return(traj, vhat, lambda);
  const std::size_t T = traj.size();
  double worst = 0.0;
  double d_next = 0.0, rho_next = 1.0;
  for (std::size_t t = T; t-- > 0;) {
    const double gn = traj[t].gamma_next;
    const double delta = traj[t].reward + gn * vhat[traj[t].s_next] - vhat[traj[t].s];
    const double d =
        delta + lambda * gn * (rho_next * d_next - (1.0 - rho_next) * vhat[traj[t].s_next]);
    worst = std::max(worst, std::fabs(d - (ret[t] - vhat[traj[t].s])));
    d_next = d;
    rho_next = traj[t].rho;
  }
  return worst;
}

FwdBwdStats check_forward_backward(const TabularMDP& m, const std::vector<double>& u,
                                   const std::vector<double>& vhat, double lambda,
                                   long long num_steps, std::uint64_t seed) {
  const int S = m.num_states, A = m.num_actions;
  const FeatureMatrix phi = tabular_features(S, A);
  const int K = phi.cols;
  const std::vector<double> pi = gibbs_policy_probs(m, phi, u);
  const std::vector<double> psi = score_table(m, pi, phi);
  std::vector<double> rho(static_cast<std::size_t>(S) * A);
  for (int s = 0; s < S; ++s)
    for (int a = 0; a < A; ++a)
      rho[static_cast<std::size_t>(s) * A + a] =
          pi[static_cast<std::size_t>(s) * A + a] / m.beh(s, a);

  const long long kBlock = 1000;
  const long long n = std::max<long long>(kBlock, num_steps / kBlock * kBlock);
  const long long burn = 10000, tail = 400;
  const long long total = burn + n + tail;

  // One extra action so rho_{t+1} exists at the last recursion step.
  std::vector<int> st(static_cast<std::size_t>(total) + 2), ac(static_cast<std::size_t>(total) + 2);
  std::vector<double> rew(static_cast<std::size_t>(total) + 1);
  SplitMix64 rng_a(derive_seed(seed, 0, 0)), rng_s(derive_seed(seed, 1, 0));
  st[0] = 0;
  for (long long t = 0; t <= total; ++t) {
    const double* beh_row = &m.behavior[static_cast<std::size_t>(st[t]) * A];
    ac[t] = static_cast<int>(sample_discrete({beh_row, static_cast<std::size_t>(A)},
                                             rng_a.uniform01()));
    if (t < total) {
      const TabularStep step = tabular_step(m, st[t], ac[t], rng_s);
      st[t + 1] = step.next_state;
      rew[t] = step.reward;
    }
  }

  // Backward recursion for the off-policy lambda-return, bootstrapped with
  // vhat past the tail window.
  std::vector<double> lret(static_cast<std::size_t>(total) + 1);
  lret[total] = vhat[st[total]];
  for (long long t = total - 1; t >= 0; --t) {
    const double gn = m.gamma[static_cast<std::size_t>(st[t + 1])];
    const double rho_next = rho[static_cast<std::size_t>(st[t + 1]) * A + ac[t + 1]];
    lret[t] = rew[t] + (1.0 - lambda) * gn * vhat[st[t + 1]] +
              lambda * gn * rho_next * lret[t + 1];
  }

  FwdBwdStats out;
  out.mean_forward.assign(K, 0.0);
  out.mean_backward.assign(K, 0.0);
  out.stderr_diff.assign(K, 0.0);
  out.samples = n;

  std::vector<double> trace(K, 0.0);
  std::vector<double> block_diff(K, 0.0), blk_sum(K, 0.0), blk_sumsq(K, 0.0);
  long long in_block = 0, blocks = 0;
  for (long long t = 0; t < burn + n; ++t) {
    const std::size_t sa = static_cast<std::size_t>(st[t]) * A + ac[t];
    const double rho_t = rho[sa];
    const double lam_g = lambda * m.gamma[static_cast<std::size_t>(st[t])];
    const double delta =
        rew[t] + m.gamma[static_cast<std::size_t>(st[t + 1])] * vhat[st[t + 1]] - vhat[st[t]];
    const double err = lret[t] - vhat[st[t]];
    const bool counted = t >= burn;
    for (int k = 0; k < K; ++k) {
      trace[k] = rho_t * (psi[sa * K + k] + lam_g * trace[k]);
      if (!counted) continue;
      const double fwd = rho_t * psi[sa * K + k] * err;
      const double bwd = delta * trace[k];
      out.mean_forward[k] += fwd;
      out.mean_backward[k] += bwd;
      block_diff[k] += fwd - bwd;
    }
    if (counted && ++in_block == kBlock) {
      for (int k = 0; k < K; ++k) {
        const double bm = block_diff[k] / kBlock;
        blk_sum[k] += bm;
        blk_sumsq[k] += bm * bm;
        block_diff[k] = 0.0;
      }
      in_block = 0;
      ++blocks;
    }
  }
  for (int k = 0; k < K; ++k) {
    out.mean_forward[k] /= static_cast<double>(n);
    out.mean_backward[k] /= static_cast<double>(n);
    if (blocks > 1) {
      const double mean = blk_sum[k] / blocks;
      const double var = std::max(0.0, blk_sumsq[k] / blocks - mean * mean);
      out.stderr_diff[k] = std::sqrt(var / (blocks - 1));
    }
  }
  return out;
}

double baseline_invariance_max_abs(const TabularMDP& m, const std::vector<double>& pi,
                                   const std::vector<double>& c) {
  const int S = m.num_states, A = m.num_actions;
  const FeatureMatrix phi = tabular_features(S, A);
  const std::vector<double> psi = score_table(m, pi, phi);
  const std::vector<double> d = stationary_distribution(m);
  const int K = phi.cols;
  double worst = 0.0;
  for (int k = 0; k < K; ++k) {
    double total = 0.0;
    for (int s = 0; s < S; ++s) {
      // Inner sum first: for exact-complement two-action rows with uniform
      // behavior the products cancel bitwise before the d(s)c(s) scaling.
      double inner = 0.0;
      for (int a = 0; a < A; ++a) {
        const std::size_t sa = static_cast<std::size_t>(s) * A + a;
        inner += m.beh(s, a) * (pi[sa] / m.beh(s, a)) * psi[sa * static_cast<std::size_t>(K) + k];
      }
      total += d[s] * c[s] * inner;
    }
    worst = std::max(worst, std::fabs(total));
  }
  return worst;
}

double normalization_residual_max_abs(const TabularMDP& m, const std::vector<double>& pi,
                                      const std::vector<double>& vhat) {
  const int S = m.num_states, A = m.num_actions;
  const FeatureMatrix phi = tabular_features(S, A);
  const std::vector<double> psi = score_table(m, pi, phi);
  const std::vector<double> d = stationary_distribution(m);
  const int K = phi.cols;

  // Per-state leakage sum_s' P gamma(s') (1 - sum_a' pi(a'|s')) vhat(s');
  // the bracket is written literally so an exactly normalized row gives 0.0.
  std::vector<double> leak(static_cast<std::size_t>(S) * A, 0.0);
  for (int s = 0; s < S; ++s)
    for (int a = 0; a < A; ++a) {
      double acc = 0.0;
      for (int s2 = 0; s2 < S; ++s2) {
        double rowsum = 0.0;
        for (int a2 = 0; a2 < A; ++a2) rowsum += pi[static_cast<std::size_t>(s2) * A + a2];
        acc += m.prob(s, a, s2) * m.gamma[static_cast<std::size_t>(s2)] * (1.0 - rowsum) *
               vhat[s2];
      }
      leak[static_cast<std::size_t>(s) * A + a] = acc;
    }

  double worst = 0.0;
  for (int k = 0; k < K; ++k) {
    double total = 0.0;
    for (int s = 0; s < S; ++s)
      for (int a = 0; a < A; ++a) {
        const std::size_t sa = static_cast<std::size_t>(s) * A + a;
        total += d[s] * m.beh(s, a) * (pi[sa] / m.beh(s, a)) *
                 psi[sa * static_cast<std::size_t>(K) + k] * leak[sa];
      }
    worst = std::max(worst, std::fabs(total));
  }
  return worst;
}

}  // namespace offpac::oracle
