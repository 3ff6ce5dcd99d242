#include "harvest/channel.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "harvest/rng.hpp"

namespace harvest {

void ChannelConfig::validate() const {
  if (thresholds.size() < 2)
    throw std::invalid_argument("channel: need at least two thresholds");
  if (thresholds.front() != 0.0)
    throw std::invalid_argument("channel: first threshold must be 0");
  if (!std::isinf(thresholds.back()))
    throw std::invalid_argument("channel: last threshold must be +inf");
  for (std::size_t i = 1; i < thresholds.size(); ++i)
    if (!(thresholds[i] > thresholds[i - 1]))
      throw std::invalid_argument("channel: thresholds not strictly increasing");
  if (!(gamma0 > 0)) throw std::invalid_argument("channel: gamma0 must be positive");
  if (!(fd_norm > 0)) throw std::invalid_argument("channel: fd_norm must be positive");
}

Eigen::VectorXd stationary_channel(const ChannelConfig& cfg) {
  cfg.validate();
  const int n = cfg.n_states();
  Eigen::VectorXd p(n);
  for (int i = 0; i < n; ++i) {
    double hi = cfg.thresholds[i + 1];
    p(i) = std::exp(-cfg.thresholds[i] / cfg.gamma0) -
           (std::isinf(hi) ? 0.0 : std::exp(-hi / cfg.gamma0));
  }
  return p;
}

double level_crossing_rate(const ChannelConfig& cfg, double g) {
  if (g <= 0.0 || std::isinf(g)) return 0.0;
  return std::sqrt(2.0 * M_PI * g / cfg.gamma0) * cfg.fd_norm *
         std::exp(-g / cfg.gamma0);
}

Eigen::MatrixXd build_fsmc(const ChannelConfig& cfg) {
  cfg.validate();
  const int n = cfg.n_states();
  Eigen::VectorXd occ = stationary_channel(cfg);
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(n, n);
  if (n == 1) {
    t(0, 0) = 1.0;
    return t;
  }
  for (int i = 0; i < n; ++i) {
    double up = i + 1 < n ? level_crossing_rate(cfg, cfg.thresholds[i + 1]) / occ(i) : 0.0;
    double down = i > 0 ? level_crossing_rate(cfg, cfg.thresholds[i]) / occ(i) : 0.0;
    if (up + down > 1.0)
      throw std::invalid_argument(
          "channel: fd_norm too fast for the neighbor-transition model at state " +
          std::to_string(i) + " (crossing mass " + std::to_string(up + down) + ")");
    if (i + 1 < n) t(i, i + 1) = up;
    if (i > 0) t(i, i - 1) = down;
    t(i, i) = 1.0 - up - down;
  }
  return t;
}

int quantize_gain(const ChannelConfig& cfg, double g) {
  if (g < 0.0 || !std::isfinite(g))
    throw std::invalid_argument("quantize_gain: gain must be finite and >= 0");
  int i = 0;
  while (i + 1 < cfg.n_states() && g >= cfg.thresholds[i + 1]) ++i;
  return i;
}

JakesProcess::JakesProcess(const ChannelConfig& cfg, std::uint64_t seed,
                           const JakesConfig& j) {
  cfg.validate();
  if (j.n_oscillators < 1)
    throw std::invalid_argument("jakes: need at least one oscillator");
  Rng rng(derive_seed(seed, 0x6a616b6573ull));  // stream tag for fading draws
  const int m = j.n_oscillators;
  phase_.resize(m);
  step_.resize(m);
  for (int k = 0; k < m; ++k) {
    double arrival = 2.0 * M_PI * rng.uniform();
    phase_[k] = 2.0 * M_PI * rng.uniform();
    step_[k] = 2.0 * M_PI * cfg.fd_norm * std::cos(arrival);
  }
  scale_ = cfg.gamma0 / static_cast<double>(m);
}

double JakesProcess::next() {
  double re = 0.0, im = 0.0;
  for (std::size_t k = 0; k < phase_.size(); ++k) {
    re += std::cos(phase_[k]);
    im += std::sin(phase_[k]);
    phase_[k] += step_[k];
    if (phase_[k] > 2.0 * M_PI)
      phase_[k] -= 2.0 * M_PI;
    else if (phase_[k] < -2.0 * M_PI)
      phase_[k] += 2.0 * M_PI;
  }
  return scale_ * (re * re + im * im);
}

std::vector<double> jakes_generate(const ChannelConfig& cfg, std::size_t n,
                                   std::uint64_t seed, const JakesConfig& j) {
  JakesProcess proc(cfg, seed, j);
  std::vector<double> out(n);
  for (std::size_t t = 0; t < n; ++t) out[t] = proc.next();
  return out;
}

}  // namespace harvest
