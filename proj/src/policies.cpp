#include "offpac/policies.hpp"

#include <cmath>
#include <stdexcept>

namespace offpac {

void gibbs_probs(const std::vector<double>& u, const std::vector<SparseFeatures>& phi,
                 std::vector<double>& out) {
  const std::size_t n = phi.size();
  out.resize(n);
  for (std::size_t a = 0; a < n; ++a) out[a] = sparse_dot(u, phi[a]);
  double m = out[0];
  for (std::size_t a = 1; a < n; ++a)
    if (out[a] > m) m = out[a];
  double sum = 0.0;
  for (std::size_t a = 0; a < n; ++a) {
    out[a] = std::exp(out[a] - m);
    sum += out[a];
  }
  for (std::size_t a = 0; a < n; ++a) out[a] /= sum;
}

std::vector<double> gibbs_probs(const std::vector<double>& u,
                                const std::vector<SparseFeatures>& phi) {
  std::vector<double> p;
  gibbs_probs(u, phi, p);
  return p;
}

void mix_features(const std::vector<SparseFeatures>& phi,
                  const std::vector<double>& w, SparseCoeffs& out) {
  out.dimension = phi.empty() ? 0 : phi[0].dimension;
  out.entries.clear();
  thread_local std::vector<std::size_t> cur;
  cur.assign(phi.size(), 0);
  // merge of the per-action sorted index lists; ties accumulate in
  // ascending action order, same order a stable sort over (index, action)
  // pairs would give
  for (;;) {
    std::uint32_t idx = 0;
    bool any = false;
    for (std::size_t b = 0; b < phi.size(); ++b)
      if (cur[b] < phi[b].indices.size()) {
        const std::uint32_t i = phi[b].indices[cur[b]];
        if (!any || i < idx) {
          idx = i;
          any = true;
        }
      }
    if (!any) break;
    double c = 0.0;
    for (std::size_t b = 0; b < phi.size(); ++b)
      if (cur[b] < phi[b].indices.size() && phi[b].indices[cur[b]] == idx) {
        c += w[b];
        ++cur[b];
      }
    out.entries.emplace_back(idx, c);
  }
}

void gibbs_score(const std::vector<SparseFeatures>& phi,
                 const std::vector<double>& probs, int action, SparseCoeffs& out) {
  // mix support covers phi[action] (every action contributes its indices),
  // so psi = indicator(phi_sa) - mix can be formed entry-by-entry in place
  mix_features(phi, probs, out);
  const SparseFeatures& own = phi[static_cast<std::size_t>(action)];
  for (auto& [i, c] : out.entries) {
    const double x = own.contains(i) ? 1.0 : 0.0;
    c = x - c;
  }
}

double importance_ratio(double pi_prob, double b_prob) {
  if (!(b_prob > 0.0))
    throw std::invalid_argument("importance_ratio: behavior probability must be positive");
  return pi_prob / b_prob;
}

void softmax_target_probs(double tau, const std::vector<double>& q,
                          std::vector<double>& out) {
  if (!(tau > 0.0)) throw std::invalid_argument("softmax target: tau must be positive");
  out.resize(q.size());
  for (std::size_t a = 0; a < q.size(); ++a) out[a] = q[a] / tau;
  double m = out[0];
  for (std::size_t a = 1; a < out.size(); ++a)
    if (out[a] > m) m = out[a];
  double sum = 0.0;
  for (std::size_t a = 0; a < out.size(); ++a) {
    out[a] = std::exp(out[a] - m);
    sum += out[a];
  }
  for (std::size_t a = 0; a < out.size(); ++a) out[a] /= sum;
}

std::vector<double> softmax_target_probs(double tau, const std::vector<double>& q) {
  std::vector<double> p;
  softmax_target_probs(tau, q, p);
  return p;
}

int greedy_action(const std::vector<double>& q) {
  int best = 0;
  for (int a = 1; a < static_cast<int>(q.size()); ++a)
    if (q[static_cast<std::size_t>(a)] > q[static_cast<std::size_t>(best)]) best = a;
  return best;
}

}  // namespace offpac
