#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "harvest/channel.hpp"
#include "harvest/energy.hpp"
#include "harvest/hmm.hpp"

namespace harvest {

struct Modulation {
  std::string name;
  int bits_per_symbol = 2;  // chi_m
  double alpha = 1.0;       // BER-bound coefficients
  double beta = 2.0;
};

Modulation modulation_qpsk();
Modulation modulation_8psk();
Modulation modulation_16qam();
Modulation modulation_by_name(const std::string& name);

struct RadioConfig {
  double symbol_rate = 1e5;     // R_S, symbols/s
  double packet_symbols = 1e3;  // L_S
  std::vector<Modulation> mods;
  double snr_unit = 1.0;  // linear mean SNR when transmitting at one power unit

  double packet_s() const { return packet_symbols / symbol_rate; }
  void validate(double period_s) const;  // period must hold whole packets
};

// average SNR per power unit from the sweep parameter gamma_C (dB),
// referenced to a transmission power of snr_reference_uw
constexpr double kSnrReferenceUw = 1000.0;
double snr_unit_from_gamma_c(double gamma_c_db, double p_unit_uw);

// tight exponential bound on the packet BER in channel state i when
// transmitting w power units with modulation m; clamped to [0, 1]
double ber_bound(const ChannelConfig& ch, int state, int w, const Modulation& m,
                 double snr_unit);

double packet_success(double eta, double bits_per_packet);

// expected net bit rate (bits/s) of one period spent transmitting
double reward_rate(const RadioConfig& radio, const ChannelConfig& ch, int state,
                   int w, const Modulation& m);

enum class PolicyClass { on_off, composite };

struct MdpDims {
  int n_solar = 0, n_channel = 0, n_battery = 0, n_power = 0, n_mod = 0;
  int n_states() const { return n_solar * n_channel * n_battery; }
};

// Discounted MDP over (solar, channel, battery) states with transmit
// actions (power w, modulation m), w <= min(battery, n_power-1). The three
// transition factors are independent given the current state and action.
struct MdpModel {
  MdpDims dims;
  PolicyClass policy_class = PolicyClass::on_off;
  Eigen::MatrixXd solar_trans;    // [from][to]
  Eigen::MatrixXd channel_trans;  // [from][to]
  std::vector<double> battery_trans;  // [z][w][n][k]
  std::vector<double> reward;         // [x][w][m], bits/s; w=0 rows are 0
  int clamped_eta = 0;  // BER bounds that saturated at 1

  EnergyQuantaPmf pmf;
  EnergyConfig energy;
  ChannelConfig channel;
  RadioConfig radio;

  int sidx(int z, int x, int n) const {
    return (z * dims.n_channel + x) * dims.n_battery + n;
  }
  double bt(int z, int w, int n, int k) const {
    return battery_trans[((z * dims.n_power + w) * dims.n_battery + n) *
                             dims.n_battery + k];
  }
  double rw(int x, int w, int m) const {
    return reward[(x * dims.n_power + w) * dims.n_mod + m];
  }
  int max_power(int n) const { return std::min(n, dims.n_power - 1); }
};

// on_off: one power unit on/off with a single modulation (pass its index);
// composite: n_power = n_battery, all configured modulations
MdpModel build_mdp(const HmmParams& solar, const EnergyConfig& energy,
                   const ChannelConfig& channel, const RadioConfig& radio,
                   int n_battery, PolicyClass cls, int on_off_mod = 0);

struct SolveOptions {
  double discount = 0.99;
  double epsilon = 1e-6;  // sup-norm stopping threshold
  int max_sweeps = 1000000;
};

struct Policy {
  MdpDims dims;
  PolicyClass cls = PolicyClass::on_off;
  std::vector<int> w, m;  // indexed by sidx

  int action_w(int z, int x, int n) const {
    return w[(z * dims.n_channel + x) * dims.n_battery + n];
  }
  int action_m(int z, int x, int n) const {
    return m[(z * dims.n_channel + x) * dims.n_battery + n];
  }
};

struct Solution {
  Eigen::VectorXd value;
  Policy policy;
  double discount = 0.0;
  int sweeps = 0;
  double residual = 0.0;  // Bellman residual of `value`
};

// one Bellman backup; greedy ties break toward lower power, then lower
// modulation index
std::pair<Eigen::VectorXd, Policy> bellman_backup(const MdpModel& model,
                                                  double discount,
                                                  const Eigen::VectorXd& v);

double q_value(const MdpModel& model, double discount, const Eigen::VectorXd& v,
               int z, int x, int n, int w, int m);

double bellman_residual(const MdpModel& model, double discount,
                        const Eigen::VectorXd& v);

Solution value_iteration(const MdpModel& model, const SolveOptions& opts = {});

}  // namespace harvest
