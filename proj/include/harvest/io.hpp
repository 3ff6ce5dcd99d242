#pragma once

#include <string>

#include "harvest/analysis.hpp"
#include "harvest/hmm.hpp"
#include "harvest/mdp.hpp"

namespace harvest {

// Versioned JSON documents. Doubles are written in shortest-round-trip form,
// so save/load cycles reproduce values bit-for-bit. Wall-clock metadata is
// deliberately kept out of these files: identical inputs give identical bytes.

struct ModelDocument {
  HmmParams params;
  double sample_period_s = 0.0;
  TrainReport training;  // ll_trace trimmed to its final value on save
};

std::string model_to_json(const ModelDocument& doc);
ModelDocument model_from_json(const std::string& text);
void save_model(const ModelDocument& doc, const std::string& path);
ModelDocument load_model(const std::string& path);

// Everything needed to rebuild an MDP apart from the solar model itself.
struct ExperimentConfig {
  EnergyConfig energy;
  ChannelConfig channel;
  RadioConfig radio;       // snr_unit derived from gamma_c_db at build time
  double gamma_c_db = 10.0;
  int n_battery = 12;
  SolveOptions solver;

  // simulation defaults (CLI overridable)
  std::int64_t sim_periods = 100000;
  int sim_episodes = 8;
  int ttfr_horizon = 24;
  std::string myopic_single_mod = "qpsk";
  std::string myopic_max_mod = "16qam";

  void apply_snr();  // sets radio.snr_unit from gamma_c_db and energy.p_unit_uw
};

std::string config_to_json(const ExperimentConfig& cfg);
ExperimentConfig config_from_json(const std::string& text);
ExperimentConfig load_config(const std::string& path);

struct PolicyDocument {
  Policy policy;
  Eigen::VectorXd value;
  double discount = 0.0;
  double residual = 0.0;
  int sweeps = 0;
  double gamma_c_db = 0.0;
  std::vector<std::string> modulations;  // per modulation index
  Eigen::MatrixXi kappa;                 // on-off only; 0x0 otherwise
};

std::string policy_to_json(const PolicyDocument& doc);
PolicyDocument policy_from_json(const std::string& text);
void save_policy(const PolicyDocument& doc, const std::string& path);
PolicyDocument load_policy(const std::string& path);

// tabular (CSV) exports
std::string policy_to_csv(const PolicyDocument& doc);
std::string pmf_to_csv(const EnergyQuantaPmf& pmf);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

}  // namespace harvest
