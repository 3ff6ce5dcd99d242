#pragma once

#include <Eigen/Dense>

#include "harvest/hmm.hpp"

namespace harvest {

// Harvested energy is quantized into battery quanta of E_U = p_unit * period:
// the energy one transmission power unit consumes over a full period.
struct EnergyConfig {
  double p_unit_uw = 4e4;       // transmission power unit, uW
  double period_s = 300.0;      // decision period T_L, s
  double panel_area_cm2 = 1.0;  // Omega_S
  double efficiency = 0.2;      // conversion efficiency
  int q_max = -1;               // PMF support cap; -1 = auto

  double quantum_uj() const { return p_unit_uw * period_s; }
  double harvest_uj(double irradiance_uw_cm2) const {
    return irradiance_uw_cm2 * panel_area_cm2 * period_s * efficiency;
  }
  void validate() const;
};

// Per-solar-state distribution of whole quanta harvested in one period.
// Row j is P(Q = q | S_H = j) for q = 0..q_max; fractional energy is split
// between adjacent quanta in proportion to proximity, Gaussian-state mass
// below zero goes to Q=0, and everything above q_max*E_U is lumped into q_max.
struct EnergyQuantaPmf {
  Eigen::MatrixXd p;           // [state][q]
  Eigen::VectorXd scaled_mean; // mu_bar_j, uJ per period
  Eigen::VectorXd scaled_var;  // rho_bar_j, uJ^2
  double quantum_uj = 0.0;
  int q_max = 0;

  int n_states() const { return static_cast<int>(p.rows()); }
  double mean_quanta(int state) const;  // E[Q | state]
};

// two-point split of a known per-period harvest e_h
Eigen::VectorXd deterministic_quanta_pmf(double e_h_uj, double quantum_uj,
                                         int q_max);

// closed-form Gaussian-state PMF for every solar state of the model
EnergyQuantaPmf gaussian_quanta_pmf(const HmmParams& solar,
                                    const EnergyConfig& cfg);

int default_q_max(const HmmParams& solar, const EnergyConfig& cfg);

// Physical battery bookkeeping used by the simulator: fractional energy
// accumulates in a residual buffer and only whole quanta are banked.
struct BatterySimState {
  int level = 0;          // stored quanta, 0..n_levels-1
  double residual_uj = 0; // in [0, quantum)
};

struct RechargeResult {
  BatterySimState state;
  int quanta_added = 0;  // banked this period
  int overflow = 0;      // materialized but discarded (battery full)
};

RechargeResult recharge_step(const BatterySimState& s, double e_h_uj,
                             double quantum_uj, int n_levels);

}  // namespace harvest
