#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <limits>
#include <vector>

namespace harvest {

// Finite-state abstraction of a slow Rayleigh-fading link. `thresholds`
// partitions instantaneous channel power into n_states bins; transitions are
// derived from level-crossing rates at the Doppler rate fd_norm (Doppler
// frequency times the decision period).
struct ChannelConfig {
  std::vector<double> thresholds = {0.0, 0.3, 0.6, 1.0,
                                    2.0, 3.0, std::numeric_limits<double>::infinity()};
  double gamma0 = 1.0;    // mean channel power
  double fd_norm = 0.05;  // normalized Doppler (per period)

  int n_states() const { return static_cast<int>(thresholds.size()) - 1; }
  void validate() const;
};

// P(S_C = i) under Rayleigh fading
Eigen::VectorXd stationary_channel(const ChannelConfig& cfg);

// expected downward crossings of level g per period
double level_crossing_rate(const ChannelConfig& cfg, double g);

// tridiagonal [from][to] transition matrix; throws if fd_norm is too fast
// for the one-step-neighbor model (an off-diagonal pair would exceed 1)
Eigen::MatrixXd build_fsmc(const ChannelConfig& cfg);

int quantize_gain(const ChannelConfig& cfg, double g);

// sum-of-sinusoids Rayleigh fading: per-period channel power with mean
// gamma0, Doppler spread fd_norm; oscillator angles/phases drawn per seed
struct JakesConfig {
  int n_oscillators = 64;
};

std::vector<double> jakes_generate(const ChannelConfig& cfg, std::size_t n,
                                   std::uint64_t seed, const JakesConfig& j = {});

// incremental variant, used by the simulator to avoid storing long traces
class JakesProcess {
 public:
  JakesProcess(const ChannelConfig& cfg, std::uint64_t seed, const JakesConfig& j = {});
  double next();  // channel power for the next period

 private:
  std::vector<double> phase_, step_;
  double scale_;
};

}  // namespace harvest
