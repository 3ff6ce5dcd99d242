#pragma once

#include <Eigen/Dense>
#include <span>
#include <utility>
#include <vector>

#include "harvest/rng.hpp"

namespace harvest {

// Hidden Markov model with scalar Gaussian emissions. States are kept sorted
// by ascending mean so that state 0 is always the weakest-irradiance regime.
struct HmmParams {
  Eigen::VectorXd mean;      // emission means, ascending
  Eigen::VectorXd variance;  // emission variances, > 0
  Eigen::MatrixXd trans;     // row-stochastic, [from][to]
  Eigen::VectorXd initial;   // first-period state distribution

  int n_states() const { return static_cast<int>(mean.size()); }
  void validate() const;  // throws std::invalid_argument on any violation
  Eigen::VectorXd stationary() const;
};

// sorts states ascending by mean (ties by variance), permuting all fields
void sort_states(HmmParams& p);

double log_gaussian(double x, double mean, double variance);

// per-state emission (log-)densities for one observation
Eigen::VectorXd state_log_likelihoods(const HmmParams& p, double x);
Eigen::VectorXd state_likelihoods(const HmmParams& p, double x);

// E-step quantities for one observation sequence, computed in log domain.
struct EStepResult {
  Eigen::MatrixXd log_alpha;         // T x N
  Eigen::MatrixXd log_beta;          // T x N
  Eigen::MatrixXd gamma;             // T x N, rows sum to 1
  std::vector<Eigen::MatrixXd> xi;   // T-1 entries, N x N, each sums to 1
  double log_likelihood = 0.0;
};

EStepResult forward_backward(const HmmParams& p, std::span<const double> obs);

struct StepReport {
  double log_likelihood = 0.0;  // of the input params on the data
  int floored_states = 0;
  int starved_states = 0;
};

// One EM iteration pooled over sequences. Sequences shorter than 2 samples
// contribute to emission/initial statistics but not to transition counts.
std::pair<HmmParams, StepReport> em_step(
    const HmmParams& p, const std::vector<std::vector<double>>& sequences,
    double variance_floor);

struct EmOptions {
  int max_iters = 500;
  double ll_tol = 1e-6;                 // relative log-likelihood change
  double variance_floor_scale = 1e-6;   // times the pooled data variance
};

struct TrainReport {
  std::vector<double> ll_trace;  // log-likelihood per iteration (pre-update)
  int iterations = 0;
  bool converged = false;
  int floored_states = 0;
  int starved_states = 0;
  double variance_floor = 0.0;
};

// deterministic quantile initializer: equal-mass bins over the pooled sample
HmmParams quantile_init(const std::vector<std::vector<double>>& sequences,
                        int n_states);

std::pair<HmmParams, TrainReport> em_train(
    const std::vector<std::vector<double>>& sequences, int n_states,
    const EmOptions& opts = {});
std::pair<HmmParams, TrainReport> em_train(
    const std::vector<std::vector<double>>& sequences, const HmmParams& init,
    const EmOptions& opts = {});

// synthetic draw: hidden state path and Gaussian observations
struct HmmSample {
  std::vector<int> states;
  std::vector<double> obs;
};
HmmSample sample_hmm(const HmmParams& p, std::size_t length, Rng& rng);

}  // namespace harvest
