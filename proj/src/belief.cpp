#include "harvest/belief.hpp"

#include <cmath>
#include <stdexcept>

namespace harvest {

Belief init_belief(const HmmParams& solar) { return {solar.stationary()}; }

BeliefUpdate belief_update(const HmmParams& solar, const Belief& prev, double obs) {
  const int n = solar.n_states();
  if (prev.zeta.size() != n) throw std::invalid_argument("belief: size mismatch");

  // predict, then weigh by the emission likelihood (log domain)
  Eigen::VectorXd pred = solar.trans.transpose() * prev.zeta;
  Eigen::VectorXd logw(n);
  double best = -std::numeric_limits<double>::infinity();
  for (int j = 0; j < n; ++j) {
    logw(j) = (pred(j) > 0.0 ? std::log(pred(j)) : -std::numeric_limits<double>::infinity()) +
              log_gaussian(obs, solar.mean(j), solar.variance(j));
    best = std::max(best, logw(j));
  }

  BeliefUpdate out;
  if (!std::isfinite(best)) {  // impossible observation: restart from stationary
    out.belief = init_belief(solar);
    out.reset = true;
    return out;
  }
  Eigen::VectorXd z(n);
  for (int j = 0; j < n; ++j) z(j) = std::exp(logw(j) - best);
  out.belief.zeta = z / z.sum();
  return out;
}

ActionChoice policy_action(const Policy& policy, const Belief& belief, int channel,
                           int battery, BeliefMode mode, Rng& rng, int true_state) {
  int z;
  switch (mode) {
    case BeliefMode::mixed:
      z = rng.categorical({belief.zeta.data(), static_cast<std::size_t>(belief.zeta.size())});
      break;
    case BeliefMode::max_belief: {
      Eigen::Index best;
      belief.zeta.maxCoeff(&best);
      z = static_cast<int>(best);
      break;
    }
    case BeliefMode::true_state:
      if (true_state < 0) throw std::invalid_argument("belief: true state unavailable");
      z = true_state;
      break;
    default:
      throw std::logic_error("belief: unknown mode");
  }
  ActionChoice a;
  a.state_used = z;
  a.w = policy.action_w(z, channel, battery);
  a.m = policy.action_m(z, channel, battery);
  return a;
}

}  // namespace harvest
