#include "offpac/baselines.hpp"

#include <cmath>

#include "offpac/policies.hpp"

namespace offpac {

namespace {

void action_values(const std::vector<double>& v,
                   const std::vector<SparseFeatures>& phi, std::vector<double>& q) {
  q.resize(phi.size());
  for (std::size_t a = 0; a < phi.size(); ++a) q[a] = sparse_dot(v, phi[a]);
}

double coeff_at(const SparseCoeffs& f, std::uint32_t idx) {
  std::size_t lo = 0, hi = f.entries.size();
  while (lo < hi) {
    std::size_t mid = (lo + hi) / 2;
    if (f.entries[mid].first < idx)
      lo = mid + 1;
    else
      hi = mid;
  }
  if (lo < f.entries.size() && f.entries[lo].first == idx) return f.entries[lo].second;
  return 0.0;
}

}  // namespace

double q_lambda_step(QLambdaState& st, const Transition& t, const SparseFeatures& phi_sa,
                     const std::vector<SparseFeatures>& phi_s_all,
                     const std::vector<SparseFeatures>& phi_sp_all, double lambda,
                     double alpha_v) {
  thread_local std::vector<double> q_s, q_sp;
  action_values(st.v, phi_s_all, q_s);
  action_values(st.v, phi_sp_all, q_sp);
  const double max_sp = q_sp[static_cast<std::size_t>(greedy_action(q_sp))];
  const double delta = t.reward + t.gamma_sp * max_sp - sparse_dot(st.v, phi_sa);
  if (!std::isfinite(delta)) {
    st.diverged = true;
    return delta;
  }

  const bool was_greedy = t.action == greedy_action(q_s);
  if (!was_greedy) st.e.clear();
  st.e.decay_add(1.0, was_greedy ? t.gamma_s * lambda : 0.0, phi_sa);

  const double cd = alpha_v * delta;
  for (std::uint32_t i : st.e.active()) {
    const double nv = (st.v[i] += cd * st.e.value(i));
    if (!(nv < kDivergenceLimit && nv > -kDivergenceLimit)) st.diverged = true;
  }

  st.e.prune(kTraceEps);
  return delta;
}

double gq_step(GQState& st, const Transition& t, const SparseFeatures& phi_sa,
               const std::vector<SparseFeatures>& phi_s_all,
               const std::vector<SparseFeatures>& phi_sp_all, GQTarget target,
               double tau, double lambda, double alpha_v, double alpha_w) {
  thread_local std::vector<double> q_s, q_sp, pi_s, pi_sp;
  action_values(st.v, phi_s_all, q_s);
  action_values(st.v, phi_sp_all, q_sp);

  if (target == GQTarget::greedy) {
    pi_s.assign(q_s.size(), 0.0);
    pi_s[static_cast<std::size_t>(greedy_action(q_s))] = 1.0;
    pi_sp.assign(q_sp.size(), 0.0);
    pi_sp[static_cast<std::size_t>(greedy_action(q_sp))] = 1.0;
  } else {
    softmax_target_probs(tau, q_s, pi_s);
    softmax_target_probs(tau, q_sp, pi_sp);
  }

  thread_local SparseCoeffs phibar;
  mix_features(phi_sp_all, pi_sp, phibar);

  const double delta =
      t.reward + t.gamma_sp * sparse_dot(st.v, phibar) - sparse_dot(st.v, phi_sa);
  if (!std::isfinite(delta)) {
    st.diverged = true;
    return delta;
  }
  const double rho =
      importance_ratio(pi_s[static_cast<std::size_t>(t.action)], t.b_prob);

  st.e.decay_add(1.0, t.gamma_s * lambda * rho, phi_sa);

  const double dot_we = st.e.dot(st.w);
  const double dot_wphi = sparse_dot(st.w, phi_sa);
  const double cv = t.gamma_sp * (1.0 - lambda) * dot_we;

  // v touches the trace support plus phibar's; the trace covers phi_sa
  for (std::uint32_t i : st.e.active()) {
    const double e = st.e.value(i);
    const double x = phi_sa.contains(i) ? 1.0 : 0.0;
    const double nv = (st.v[i] += alpha_v * (delta * e - cv * coeff_at(phibar, i)));
    const double nw = (st.w[i] += alpha_w * (delta * e - dot_wphi * x));
    if (!(nv < kDivergenceLimit && nv > -kDivergenceLimit) ||
        !(nw < kDivergenceLimit && nw > -kDivergenceLimit))
      st.diverged = true;
  }
  for (const auto& [i, c] : phibar.entries) {
    if (st.e.is_active(i)) continue;
    const double nv = (st.v[i] += alpha_v * (delta * 0.0 - cv * c));
    if (!(nv < kDivergenceLimit && nv > -kDivergenceLimit)) st.diverged = true;
  }

  st.e.prune(kTraceEps);
  return delta;
}

}  // namespace offpac
