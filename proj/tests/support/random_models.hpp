#pragma once

// Randomized small MDP instances for oracle comparisons. Shapes stay within
// 3 solar x 3 channel x 4 battery states, and draws are rejected until the
// joint deterministic-policy count is small enough for exhaustive
// enumeration by the test oracle.

#include <cmath>
#include <limits>

#include "harvest/mdp.hpp"
#include "harvest/rng.hpp"
#include "support/oracles.hpp"

namespace fixtures {

inline harvest::HmmParams random_solar(harvest::Rng& rng, int n) {
  harvest::HmmParams p;
  p.mean = Eigen::VectorXd(n);
  p.variance = Eigen::VectorXd(n);
  p.trans = Eigen::MatrixXd(n, n);
  p.initial = Eigen::VectorXd(n);
  double mean = 0.0;
  for (int i = 0; i < n; ++i) {
    mean += 1.5e4 + 3.0e4 * rng.uniform();
    p.mean(i) = mean;
    p.variance(i) = 1e7 + 2e8 * rng.uniform();
    p.initial(i) = 0.1 + rng.uniform();
    double sum = 0.0;
    for (int j = 0; j < n; ++j) {
      p.trans(i, j) = 0.05 + rng.uniform();
      sum += p.trans(i, j);
    }
    p.trans.row(i) /= sum;
  }
  p.initial /= p.initial.sum();
  return p;
}

// unit_rewards shrinks per-period rewards to O(1) (one symbol per packet at
// unit rate), which keeps value magnitudes small enough that floating-point
// rounding cannot mask tight Bellman-residual checks
inline harvest::MdpModel random_small_model(harvest::Rng& rng,
                                            double policy_cap = 20000.0,
                                            bool unit_rewards = false) {
  for (;;) {
    const int n_solar = 1 + static_cast<int>(rng.below(3));
    const int n_channel = 1 + static_cast<int>(rng.below(3));
    const int n_battery = 2 + static_cast<int>(rng.below(3));
    const bool composite = rng.uniform() < 0.5;

    harvest::HmmParams solar = random_solar(rng, n_solar);

    harvest::ChannelConfig ch;
    ch.thresholds.assign(1, 0.0);
    double t = 0.0;
    for (int i = 1; i < n_channel; ++i) {
      t += 0.2 + 1.5 * rng.uniform();
      ch.thresholds.push_back(t);
    }
    ch.thresholds.push_back(std::numeric_limits<double>::infinity());
    ch.gamma0 = 0.5 + 1.5 * rng.uniform();
    ch.fd_norm = 0.002 + 0.01 * rng.uniform();

    harvest::EnergyConfig en;
    en.period_s = 300.0;
    en.panel_area_cm2 = 1.0;
    en.efficiency = 0.2;
    // place the strongest state's per-period harvest at 0.3..1.5 quanta
    double mu_bar_max = solar.mean(n_solar - 1) * en.panel_area_cm2 *
                        en.period_s * en.efficiency;
    double target = 0.3 + 1.2 * rng.uniform();
    en.p_unit_uw = mu_bar_max / target / en.period_s;

    harvest::RadioConfig radio;
    if (unit_rewards) {
      radio.symbol_rate = 1.0;
      radio.packet_symbols = 1.0;
    }
    radio.mods = {harvest::modulation_qpsk()};
    if (composite && rng.uniform() < 0.6)
      radio.mods.push_back(harvest::modulation_16qam());
    radio.snr_unit = harvest::snr_unit_from_gamma_c(-5.0 + 25.0 * rng.uniform(),
                                                    en.p_unit_uw);

    try {
      harvest::MdpModel model = harvest::build_mdp(
          solar, en, ch, radio, n_battery,
          composite ? harvest::PolicyClass::composite
                    : harvest::PolicyClass::on_off,
          0);
      if (oracle::policy_count(model) <= policy_cap) return model;
    } catch (const std::invalid_argument&) {
      // e.g. Doppler too fast for a narrow quantization bin: redraw
    }
  }
}

}  // namespace fixtures
