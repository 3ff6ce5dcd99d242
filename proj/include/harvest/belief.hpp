#pragma once

#include <Eigen/Dense>

#include "harvest/hmm.hpp"
#include "harvest/mdp.hpp"
#include "harvest/rng.hpp"

namespace harvest {

// Bayesian filter over the hidden solar state. The node never observes the
// state directly; it tracks a posterior from period-mean irradiance readings
// and draws the state to act on from that posterior (mixed strategy).
struct Belief {
  Eigen::VectorXd zeta;  // posterior over solar states, sums to 1
};

Belief init_belief(const HmmParams& solar);  // stationary prior

struct BeliefUpdate {
  Belief belief;
  bool reset = false;  // posterior underflowed to zero everywhere; restarted
};

BeliefUpdate belief_update(const HmmParams& solar, const Belief& prev, double obs);

enum class BeliefMode {
  mixed,      // sample the state from the posterior
  max_belief, // act on the argmax state
  true_state  // oracle: act on the actual state (testing/diagnostics)
};

struct ActionChoice {
  int w = 0, m = 0;
  int state_used = 0;
};

ActionChoice policy_action(const Policy& policy, const Belief& belief, int channel,
                           int battery, BeliefMode mode, Rng& rng, int true_state = -1);

}  // namespace harvest
