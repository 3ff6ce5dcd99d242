#pragma once

#include <Eigen/Dense>
#include <vector>

#include "harvest/mdp.hpp"

namespace harvest {

// Structural analysis of on-off policies: thresholds, necessary optimality
// regions for the harvest deficiency P(Q=0|z), induced stationary behavior,
// the resulting long-run net bit rate, and its saturation upper bound.

struct ThresholdAnalysis {
  Eigen::MatrixXi kappa;           // [z][x]: highest battery level kept silent
  std::vector<uint8_t> is_threshold;  // per (z*n_channel + x): single OFF->ON switch
  Eigen::MatrixXd theta;           // [z*n_channel + x][y]: Q(tx) - Q(idle), y >= 1
  bool all_threshold = false;
  bool theta_consistent = false;   // theta sign-crossings agree with kappa
};

ThresholdAnalysis check_threshold(const MdpModel& model, const Policy& policy,
                                  const Eigen::VectorXd& v, double discount);

// expected jump in V between adjacent battery levels, one step ahead
double xi_value(const MdpModel& model, const Eigen::VectorXd& v, int z, int x, int y);

// Necessary condition on the energy deficiency P(Q = 0 | S_H = z) for the
// battery threshold kappa_zx to be optimal at (z, x); derived from the
// converged value function. Requires the quanta PMF to be supported on {0,1}.
// `r1_override`, when finite, replaces the model's one-unit reward at x
// (useful for exploring hypothetical reward levels).
struct DeficiencyInterval {
  double lo = 0.0, hi = 1.0;       // clamped to [0, 1]
  double raw_lo = 0.0, raw_hi = 1.0;
  bool feasible = true;            // false when the condition is unsatisfiable
};

DeficiencyInterval deficiency_region(const MdpModel& model, const Eigen::VectorXd& v,
                                     double discount, int z, int x, int kappa_zx,
                                     double r1_override = std::numeric_limits<double>::quiet_NaN());

// Stationary distribution of (solar, channel, battery) under a threshold
// policy; battery columns are lumped at the top level exactly like the MDP.
struct StationaryResult {
  Eigen::VectorXd nu;  // stacked [z][x][n]
  double residual = 0.0;
  int idx(const MdpDims& d, int z, int x, int n) const {
    return (z * d.n_channel + x) * d.n_battery + n;
  }
};

StationaryResult stationary_under_policy(const MdpModel& model,
                                         const Eigen::MatrixXi& kappa);

// long-run expected net bit rate (bits/s) of the threshold policy
double expected_net_bit_rate(const MdpModel& model, const Eigen::MatrixXi& kappa,
                             const Eigen::VectorXd& nu);

// mean harvested quanta per period under the solar model's stationary mix
double mean_quanta_rate(const MdpModel& model, const Eigen::VectorXd& solar_stationary);

// saturation bound: best-channel packet success at one power unit times the
// min(harvest rate, one transmission per period)
double rate_upper_bound(const MdpModel& model, double q_bar);

}  // namespace harvest
