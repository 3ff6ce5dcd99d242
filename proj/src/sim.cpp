#include "harvest/sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "harvest/channel.hpp"

namespace harvest {

namespace {

enum : std::uint64_t {  // seed stream tags
  kStreamSolar = 1,
  kStreamChannel = 2,
  kStreamBelief = 3,
  kStreamBattery = 4,
  kStreamPackets = 5,
};

void ensure(bool ok, const char* what) {
  if (!ok) throw std::runtime_error(std::string("simulation invariant violated: ") + what);
}

}  // namespace

std::vector<int> ttfr_schedule(const MdpModel& md, int mod_index,
                               std::span<const int> channel_states,
                               std::span<const int> quanta, int battery0) {
  const int h = static_cast<int>(channel_states.size());
  if (static_cast<int>(quanta.size()) != h)
    throw std::invalid_argument("ttfr: channel/quanta length mismatch");
  const int nb = md.dims.n_battery;
  if (battery0 < 0 || battery0 >= nb) throw std::invalid_argument("ttfr: bad battery");
  if (mod_index < 0 || mod_index >= static_cast<int>(md.radio.mods.size()))
    throw std::invalid_argument("ttfr: bad modulation index");

  // value-to-go over (period, battery); reward uses one power unit
  std::vector<double> vnext(nb, 0.0), vcur(nb, 0.0);
  std::vector<std::vector<char>> act(h, std::vector<char>(nb, 0));
  for (int t = h - 1; t >= 0; --t) {
    double r = reward_rate(md.radio, md.channel, channel_states[t], 1,
                           md.radio.mods[mod_index]) * md.energy.period_s;
    for (int b = 0; b < nb; ++b) {
      double stay = vnext[std::min(b + quanta[t], nb - 1)];
      double best = stay;
      char a = 0;
      if (b >= 1) {
        double tx = r + vnext[std::min(b - 1 + quanta[t], nb - 1)];
        if (tx > stay) {
          best = tx;
          a = 1;
        }
      }
      vcur[b] = best;
      act[t][b] = a;
    }
    std::swap(vcur, vnext);
  }

  std::vector<int> schedule(h);
  int b = battery0;
  for (int t = 0; t < h; ++t) {
    int a = act[t][b];
    schedule[t] = a;
    b = std::min(b - a + quanta[t], nb - 1);
  }
  return schedule;
}

SimResult run_episode(const SimConfig& cfg) {
  if (!cfg.model) throw std::invalid_argument("sim: model required");
  const MdpModel& md = *cfg.model;
  const MdpDims& d = md.dims;
  if (cfg.n_periods <= 0) throw std::invalid_argument("sim: n_periods must be positive");

  const bool synthetic = cfg.recorded == nullptr;
  if (synthetic && !cfg.solar)
    throw std::invalid_argument("sim: solar model required for synthetic input");
  if (!synthetic &&
      static_cast<std::int64_t>(cfg.recorded->size()) < cfg.n_periods)
    throw std::invalid_argument("sim: recorded series shorter than n_periods");

  const bool needs_belief = cfg.policy.kind == PolicySpec::Kind::solved;
  if (needs_belief && !cfg.policy.policy)
    throw std::invalid_argument("sim: solved policy table missing");
  if (!needs_belief &&
      (cfg.policy.mod_index < 0 || cfg.policy.mod_index >= d.n_mod))
    throw std::invalid_argument("sim: baseline modulation index out of range");
  if (needs_belief && !cfg.solar)
    throw std::invalid_argument("sim: solar model required for belief tracking");
  if (needs_belief && cfg.policy.belief_mode == BeliefMode::true_state && !synthetic)
    throw std::invalid_argument("sim: true-state mode needs synthetic input");

  // independent streams so runs are reproducible draw-for-draw
  Rng solar_rng(derive_seed(cfg.seed, kStreamSolar));
  Rng belief_rng(derive_seed(cfg.seed, kStreamBelief));
  Rng battery_rng(derive_seed(cfg.seed, kStreamBattery));
  Rng packet_rng(derive_seed(cfg.seed, kStreamPackets));

  // channel states for the whole episode, so block planners can look ahead
  std::vector<int> xs(static_cast<std::size_t>(cfg.n_periods));
  if (cfg.channel_mode == ChannelMode::jakes) {
    JakesProcess fading(md.channel, derive_seed(cfg.seed, kStreamChannel), cfg.jakes);
    for (auto& x : xs) x = quantize_gain(md.channel, fading.next());
  } else {
    Rng channel_rng(derive_seed(cfg.seed, kStreamChannel));
    Eigen::VectorXd pi = stationary_channel(md.channel);
    std::vector<double> w(static_cast<std::size_t>(d.n_channel));
    for (int l = 0; l < d.n_channel; ++l) w[static_cast<std::size_t>(l)] = pi(l);
    int x = channel_rng.categorical(w);
    for (auto& slot : xs) {
      slot = x;
      for (int l = 0; l < d.n_channel; ++l)
        w[static_cast<std::size_t>(l)] = md.channel_trans(x, l);
      x = channel_rng.categorical(w);
    }
  }

  HmmSample sample;
  if (synthetic)
    sample = sample_hmm(*cfg.solar, static_cast<std::size_t>(cfg.n_periods), solar_rng);

  SimResult res;
  res.periods = cfg.n_periods;
  res.initial_battery = cfg.initial_battery >= 0
                            ? cfg.initial_battery
                            : battery_rng.below(d.n_battery);
  ensure(res.initial_battery < d.n_battery, "initial battery within capacity");

  BatterySimState batt{res.initial_battery, 0.0};
  Belief belief;
  if (cfg.solar) belief = init_belief(*cfg.solar);

  if (cfg.collect_occupancy) {
    if (!synthetic)
      throw std::invalid_argument("sim: occupancy collection needs synthetic input");
    res.occupancy = Eigen::VectorXd::Zero(d.n_states());
  }

  const double quantum = md.energy.quantum_uj();
  const double packets_per_period = md.energy.period_s / md.radio.packet_s();

  // t-TFR block plan state
  std::vector<int> block_plan;
  std::int64_t block_start = 0;

  double harvested_uj = 0.0;
  for (std::int64_t t = 0; t < cfg.n_periods; ++t) {
    const double obs = synthetic ? sample.obs[t] : (*cfg.recorded)[t];
    const int x = xs[static_cast<std::size_t>(t)];

    if (needs_belief) {
      BeliefUpdate bu = belief_update(*cfg.solar, belief, obs);
      belief = bu.belief;
      if (bu.reset) ++res.belief_resets;
    }

    if (cfg.collect_occupancy)
      res.occupancy(md.sidx(sample.states[t], x, batt.level)) += 1.0;
    if (batt.level == 0) ++res.outages;

    // pick the action
    int w = 0, m = 0;
    switch (cfg.policy.kind) {
      case PolicySpec::Kind::solved: {
        ActionChoice a =
            policy_action(*cfg.policy.policy, belief, x, batt.level,
                          cfg.policy.belief_mode, belief_rng,
                          synthetic ? sample.states[t] : -1);
        w = a.w;
        m = a.m;
        break;
      }
      case PolicySpec::Kind::myopic_single:
        w = std::min(1, batt.level);
        m = cfg.policy.mod_index;
        break;
      case PolicySpec::Kind::myopic_max:
        w = md.max_power(batt.level);
        m = cfg.policy.mod_index;
        break;
      case PolicySpec::Kind::ttfr: {
        if (t == block_start + static_cast<std::int64_t>(block_plan.size()) ||
            block_plan.empty()) {
          // plan the next block with oracle knowledge of its futures
          block_start = t;
          int h = static_cast<int>(
              std::min<std::int64_t>(cfg.policy.horizon, cfg.n_periods - t));
          std::vector<int> bxs(h), qs(h);
          BatterySimState probe = batt;  // residual evolution is action-free
          for (int k = 0; k < h; ++k) {
            bxs[k] = xs[static_cast<std::size_t>(t + k)];
            double e = std::max(
                0.0, md.energy.harvest_uj(synthetic ? sample.obs[t + k]
                                                    : (*cfg.recorded)[t + k]));
            auto rr = recharge_step(probe, e, quantum, d.n_battery);
            qs[k] = rr.quanta_added + rr.overflow;
            probe = rr.state;
            probe.level = 0;  // only the residual stream matters here
          }
          block_plan = ttfr_schedule(md, cfg.policy.mod_index, bxs, qs, batt.level);
        }
        w = block_plan[t - block_start];
        m = cfg.policy.mod_index;
        break;
      }
    }

    ensure(w >= 0 && w <= md.max_power(batt.level), "power within battery and cap");
    batt.level -= w;
    res.quanta_spent += w;

    if (w > 0) {
      if (cfg.bernoulli) {
        double p = packet_success(
            ber_bound(md.channel, x, w, md.radio.mods[m], md.radio.snr_unit),
            md.radio.mods[m].bits_per_symbol * md.radio.packet_symbols);
        std::int64_t ok = 0;
        for (std::int64_t k = 0; k < static_cast<std::int64_t>(packets_per_period); ++k)
          ok += packet_rng.uniform() < p ? 1 : 0;
        res.total_bits +=
            static_cast<double>(ok) * md.radio.mods[m].bits_per_symbol * md.radio.packet_symbols;
      } else {
        res.total_bits += md.rw(x, w, m) * md.energy.period_s;
      }
    }

    // model-drawn readings can dip below zero; physically that harvests nothing
    const double e_h = std::max(0.0, md.energy.harvest_uj(obs));
    harvested_uj += e_h;
    auto rr = recharge_step(batt, e_h, quantum, d.n_battery);
    batt = rr.state;
    res.quanta_stored += rr.quanta_added;
    res.overflow += rr.overflow;
    res.quanta_materialized += rr.quanta_added + rr.overflow;

    ensure(batt.level >= 0 && batt.level < d.n_battery, "battery level in range");
    ensure(res.quanta_spent <= res.initial_battery + res.quanta_materialized,
           "energy causality");
  }

  // conservation: harvested energy = materialized quanta + residual leftover
  ensure(std::abs(harvested_uj -
                  (static_cast<double>(res.quanta_materialized) * quantum +
                   batt.residual_uj)) <= 1e-9 * std::max(1.0, harvested_uj),
         "energy conservation");
  // and battery bookkeeping is closed: initial + stored - spent = final level
  ensure(res.initial_battery + res.quanta_stored - res.quanta_spent == batt.level,
         "battery ledger");

  res.avg_rate_bps = res.total_bits / (static_cast<double>(cfg.n_periods) * md.energy.period_s);
  res.realized_qbar =
      static_cast<double>(res.quanta_materialized) / static_cast<double>(cfg.n_periods);
  if (d.n_power == 2) {
    double usable = std::min(
        1.0, (static_cast<double>(res.initial_battery) + res.quanta_materialized) /
                 static_cast<double>(cfg.n_periods));
    res.bound_bps = usable * md.rw(d.n_channel - 1, 1, 0);
  } else {
    res.bound_bps = std::numeric_limits<double>::quiet_NaN();
  }
  if (cfg.collect_occupancy) res.occupancy /= static_cast<double>(cfg.n_periods);
  return res;
}

RateStats simulate_rate(const SimConfig& cfg, int episodes) {
  if (episodes < 1) throw std::invalid_argument("simulate_rate: episodes >= 1");
  RateStats st;
  st.episodes = episodes;
  std::vector<double> rates(episodes);
  for (int e = 0; e < episodes; ++e) {
    SimConfig one = cfg;
    one.seed = derive_seed(cfg.seed, 0x9000 + static_cast<std::uint64_t>(e));
    rates[e] = run_episode(one).avg_rate_bps;
  }
  double mean = 0.0;
  for (double r : rates) mean += r;
  mean /= episodes;
  double var = 0.0;
  for (double r : rates) var += (r - mean) * (r - mean);
  var = episodes > 1 ? var / (episodes - 1) : 0.0;
  st.mean_bps = mean;
  st.ci95_bps = episodes > 1 ? 1.96 * std::sqrt(var / episodes) : 0.0;
  return st;
}

}  // namespace harvest
