#include "offpac/gtd_critic.hpp"

#include <cmath>

namespace offpac {

double td_error(const std::vector<double>& v, const Transition& t) {
  return t.reward + t.gamma_sp * sparse_dot(v, t.x_sp) - sparse_dot(v, t.x_s);
}

double critic_step(CriticState& c, const Transition& t, double rho, double lambda,
                   double alpha_v, double alpha_w) {
  const double delta = td_error(c.v, t);
  if (!std::isfinite(delta)) {
    c.diverged = true;
    return delta;
  }

  c.e_v.decay_add(rho, t.gamma_s * lambda, t.x_s);

  const double dot_we = c.e_v.dot(c.w);
  const double dot_wx = sparse_dot(c.w, t.x_s);
  const double cv = t.gamma_sp * (1.0 - lambda) * dot_we;

  // after decay_add the trace support contains x_s, so it is the whole
  // update's support; x_s membership distinguishes the second term
  for (std::uint32_t i : c.e_v.active()) {
    const double e = c.e_v.value(i);
    const double x = t.x_s.contains(i) ? 1.0 : 0.0;
    const double nv = (c.v[i] += alpha_v * (delta * e - cv * x));
    const double nw = (c.w[i] += alpha_w * (delta * e - dot_wx * x));
    if (!(nv < kDivergenceLimit && nv > -kDivergenceLimit) ||
        !(nw < kDivergenceLimit && nw > -kDivergenceLimit))
      c.diverged = true;
  }

  c.e_v.prune(kTraceEps);
  return delta;
}

void reset_traces(CriticState& c) { c.e_v.clear(); }

}  // namespace offpac
