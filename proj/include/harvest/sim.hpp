#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "harvest/belief.hpp"
#include "harvest/mdp.hpp"

namespace harvest {

// Monte Carlo evaluation of transmission policies on synthetic (model-drawn)
// or recorded irradiance, with Rayleigh fading from the Jakes generator and
// physical battery bookkeeping. Energy causality and conservation are
// asserted on every step of every trace; violations throw.

struct PolicySpec {
  enum class Kind {
    solved,         // policy table + belief-tracked solar state
    myopic_single,  // w = min(1, n), fixed modulation
    myopic_max,     // w = min(n, n_power-1), fixed modulation
    ttfr            // block DP with oracle in-block knowledge, on-off actions
  };
  Kind kind = Kind::solved;
  const Policy* policy = nullptr;
  BeliefMode belief_mode = BeliefMode::mixed;
  int mod_index = 0;  // modulation for the baselines (index into model mods)
  int horizon = 24;   // ttfr block length in periods
};

// fading source: the physical sum-of-sinusoids generator, or the quantized
// Markov chain itself (useful to cross-validate the closed-form stationary
// analysis, which lives in the chain's world)
enum class ChannelMode { jakes, fsmc };

struct SimConfig {
  std::int64_t n_periods = 0;
  std::uint64_t seed = 1;
  const HmmParams* solar = nullptr;
  const MdpModel* model = nullptr;
  PolicySpec policy;
  const std::vector<double>* recorded = nullptr;  // else synthetic from `solar`
  bool bernoulli = false;   // per-packet draws instead of expected-value bits
  int initial_battery = -1; // -1: uniform random
  ChannelMode channel_mode = ChannelMode::jakes;
  JakesConfig jakes;
  bool collect_occupancy = false;  // per-(z,x,n) visit frequencies (synthetic only)
};

struct SimResult {
  std::int64_t periods = 0;
  double total_bits = 0.0;
  double avg_rate_bps = 0.0;
  std::int64_t quanta_materialized = 0;
  std::int64_t quanta_stored = 0;
  std::int64_t quanta_spent = 0;
  std::int64_t overflow = 0;
  std::int64_t outages = 0;        // periods entered with an empty battery
  std::int64_t belief_resets = 0;
  int initial_battery = 0;
  double realized_qbar = 0.0;      // materialized quanta per period
  double bound_bps = 0.0;          // saturation bound from the realized trace
                                   // (on-off models only; NaN otherwise)
  Eigen::VectorXd occupancy;       // empty unless collect_occupancy
};

SimResult run_episode(const SimConfig& cfg);

// exact finite-horizon on-off schedule given the block's channel states and
// materialized quanta; ties prefer staying silent
std::vector<int> ttfr_schedule(const MdpModel& model, int mod_index,
                               std::span<const int> channel_states,
                               std::span<const int> quanta, int battery0);

struct RateStats {
  double mean_bps = 0.0;
  double ci95_bps = 0.0;
  int episodes = 0;
};

// independent episodes (seed streams derived from cfg.seed), normal-theory CI
RateStats simulate_rate(const SimConfig& cfg, int episodes);

}  // namespace harvest
