#include "offpac/offpac_actor.hpp"

#include <cstdio>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

namespace offpac {

void actor_step(ActorState& a, const SparseCoeffs& psi, double rho, double delta,
                double gamma_s, double lambda, double alpha_u) {
  a.e_u.decay_add(rho, gamma_s * lambda, psi);
  const double cu = alpha_u * delta;
  for (std::uint32_t i : a.e_u.active()) {
    const double nu = (a.u[i] += cu * a.e_u.value(i));
    if (!(nu < kDivergenceLimit && nu > -kDivergenceLimit)) a.diverged = true;
  }
  a.e_u.prune(kTraceEps);
}

double OffPacAgent::step(const Transition& t, const std::vector<SparseFeatures>& phi) {
  gibbs_probs(actor.u, phi, probs_);
  const double rho =
      importance_ratio(probs_[static_cast<std::size_t>(t.action)], t.b_prob);
  const double delta = critic_step(critic, t, rho, hyper.lambda, hyper.alpha_v,
                                   hyper.alpha_w);
  gibbs_score(phi, probs_, t.action, psi_);
  actor_step(actor, psi_, rho, delta, t.gamma_s, hyper.lambda, hyper.alpha_u);
  return delta;
}

void OffPacAgent::episode_reset() {
  reset_traces(critic);
  actor.e_u.clear();
}

void save_weights_csv(std::ostream& os, const std::vector<double>& w) {
  char buf[64];
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (w[i] == 0.0) continue;
    std::snprintf(buf, sizeof buf, "%zu,%.17g\n", i, w[i]);
    os << buf;
  }
}

std::vector<double> load_weights_csv(std::istream& is, std::size_t dimension) {
  std::vector<double> w(dimension, 0.0);
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const std::size_t comma = line.find(',');
    if (comma == std::string::npos)
      throw std::runtime_error("weight snapshot: missing comma in '" + line + "'");
    const std::size_t idx = std::stoull(line.substr(0, comma));
    if (idx >= dimension)
      throw std::runtime_error("weight snapshot: index out of range in '" + line + "'");
    w[idx] = std::stod(line.substr(comma + 1));
  }
  return w;
}

}  // namespace offpac
