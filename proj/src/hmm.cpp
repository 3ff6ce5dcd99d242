#include "harvest/hmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "harvest/markov.hpp"

namespace harvest {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double logsumexp(const double* v, int n) {
  double m = kNegInf;
  for (int i = 0; i < n; ++i) m = std::max(m, v[i]);
  if (m == kNegInf) return kNegInf;
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += std::exp(v[i] - m);
  return m + std::log(s);
}

}  // namespace

void HmmParams::validate() const {
  const int n = n_states();
  if (n < 1) throw std::invalid_argument("hmm: at least one state required");
  if (variance.size() != n || initial.size() != n || trans.rows() != n ||
      trans.cols() != n)
    throw std::invalid_argument("hmm: inconsistent field sizes");
  for (int i = 0; i < n; ++i) {
    if (!(variance(i) > 0.0))
      throw std::invalid_argument("hmm: variance of state " +
                                  std::to_string(i) + " not positive");
    if (i + 1 < n && mean(i) > mean(i + 1))
      throw std::invalid_argument("hmm: means not ascending");
    if (initial(i) < -1e-12)
      throw std::invalid_argument("hmm: negative initial probability");
    double row = trans.row(i).sum();
    if (std::abs(row - 1.0) > 1e-12)
      throw std::invalid_argument("hmm: row " + std::to_string(i) +
                                  " of A sums to " + std::to_string(row));
    if (trans.row(i).minCoeff() < -1e-12)
      throw std::invalid_argument("hmm: negative transition probability");
  }
  if (std::abs(initial.sum() - 1.0) > 1e-12)
    throw std::invalid_argument("hmm: initial distribution does not sum to 1");
}

Eigen::VectorXd HmmParams::stationary() const {
  return solve_balance(trans.transpose(), 1e-10);
}

void sort_states(HmmParams& p) {
  const int n = p.n_states();
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
    if (p.mean(a) != p.mean(b)) return p.mean(a) < p.mean(b);
    return p.variance(a) < p.variance(b);
  });
  HmmParams q = p;
  for (int i = 0; i < n; ++i) {
    q.mean(i) = p.mean(idx[i]);
    q.variance(i) = p.variance(idx[i]);
    q.initial(i) = p.initial(idx[i]);
    for (int j = 0; j < n; ++j) q.trans(i, j) = p.trans(idx[i], idx[j]);
  }
  p = std::move(q);
}

double log_gaussian(double x, double mean, double variance) {
  double d = x - mean;
  return -0.5 * std::log(2.0 * M_PI * variance) - d * d / (2.0 * variance);
}

Eigen::VectorXd state_log_likelihoods(const HmmParams& p, double x) {
  Eigen::VectorXd out(p.n_states());
  for (int i = 0; i < p.n_states(); ++i)
    out(i) = log_gaussian(x, p.mean(i), p.variance(i));
  return out;
}

Eigen::VectorXd state_likelihoods(const HmmParams& p, double x) {
  return state_log_likelihoods(p, x).array().exp();
}

EStepResult forward_backward(const HmmParams& p, std::span<const double> obs) {
  const int n = p.n_states();
  const int T = static_cast<int>(obs.size());
  if (T == 0) throw std::invalid_argument("forward_backward: empty sequence");

  Eigen::MatrixXd logf(T, n);
  for (int t = 0; t < T; ++t) {
    if (!std::isfinite(obs[t]))
      throw std::invalid_argument("forward_backward: non-finite observation at t=" +
                                  std::to_string(t));
    logf.row(t) = state_log_likelihoods(p, obs[t]).transpose();
  }

  Eigen::MatrixXd logA(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      logA(i, j) = p.trans(i, j) > 0.0 ? std::log(p.trans(i, j)) : kNegInf;

  EStepResult r;
  r.log_alpha.resize(T, n);
  r.log_beta.resize(T, n);

  std::vector<double> tmp(n);
  for (int j = 0; j < n; ++j)
    r.log_alpha(0, j) =
        (p.initial(j) > 0.0 ? std::log(p.initial(j)) : kNegInf) + logf(0, j);
  for (int t = 1; t < T; ++t)
    for (int j = 0; j < n; ++j) {
      for (int i = 0; i < n; ++i) tmp[i] = r.log_alpha(t - 1, i) + logA(i, j);
      r.log_alpha(t, j) = logsumexp(tmp.data(), n) + logf(t, j);
    }

  r.log_beta.row(T - 1).setZero();
  for (int t = T - 2; t >= 0; --t)
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j)
        tmp[j] = logA(i, j) + logf(t + 1, j) + r.log_beta(t + 1, j);
      r.log_beta(t, i) = logsumexp(tmp.data(), n);
    }

  {
    std::vector<double> last(n);
    for (int j = 0; j < n; ++j) last[j] = r.log_alpha(T - 1, j);
    r.log_likelihood = logsumexp(last.data(), n);
  }
  if (!std::isfinite(r.log_likelihood))
    throw std::runtime_error(
        "forward_backward: sequence has zero likelihood under every state");

  r.gamma.resize(T, n);
  for (int t = 0; t < T; ++t) {
    for (int j = 0; j < n; ++j)
      r.gamma(t, j) =
          std::exp(r.log_alpha(t, j) + r.log_beta(t, j) - r.log_likelihood);
    r.gamma.row(t) /= r.gamma.row(t).sum();
  }

  r.xi.resize(T > 1 ? T - 1 : 0, Eigen::MatrixXd(n, n));
  for (int t = 0; t + 1 < T; ++t) {
    Eigen::MatrixXd& x = r.xi[t];
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        x(i, j) = std::exp(r.log_alpha(t, i) + logA(i, j) + logf(t + 1, j) +
                           r.log_beta(t + 1, j) - r.log_likelihood);
    x /= x.sum();
  }
  return r;
}

std::pair<HmmParams, StepReport> em_step(
    const HmmParams& p, const std::vector<std::vector<double>>& sequences,
    double variance_floor) {
  const int n = p.n_states();
  if (sequences.empty()) throw std::invalid_argument("em_step: no sequences");

  Eigen::MatrixXd xi_sum = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd gamma_trans = Eigen::VectorXd::Zero(n);  // t < T-1
  Eigen::VectorXd gamma_all = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd wx = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd first = Eigen::VectorXd::Zero(n);
  double ll = 0.0;
  std::size_t n_first = 0;

  // store per-sequence posteriors for the variance pass
  std::vector<EStepResult> es;
  es.reserve(sequences.size());
  for (const auto& seq : sequences) {
    if (seq.empty()) continue;
    es.push_back(forward_backward(p, seq));
    const EStepResult& e = es.back();
    const int T = static_cast<int>(seq.size());
    ll += e.log_likelihood;
    first += e.gamma.row(0).transpose();
    ++n_first;
    for (int t = 0; t < T; ++t) {
      gamma_all += e.gamma.row(t).transpose();
      for (int j = 0; j < n; ++j) wx(j) += e.gamma(t, j) * seq[t];
    }
    for (int t = 0; t + 1 < T; ++t) {
      xi_sum += e.xi[t];
      gamma_trans += e.gamma.row(t).transpose();
    }
  }
  if (n_first == 0) throw std::invalid_argument("em_step: all sequences empty");

  HmmParams q = p;
  StepReport rep;
  rep.log_likelihood = ll;

  for (int i = 0; i < n; ++i) {
    if (gamma_trans(i) > 1e-12) {
      q.trans.row(i) = xi_sum.row(i) / gamma_trans(i);
      double s = q.trans.row(i).sum();
      if (s > 0.0) q.trans.row(i) /= s;
    }
    // else: keep the previous row (no transition evidence for this state)
  }

  for (int j = 0; j < n; ++j) {
    if (gamma_all(j) < 1e-9) {  // starved: no posterior mass anywhere
      ++rep.starved_states;
      q.variance(j) = std::max(q.variance(j), variance_floor);
      continue;
    }
    q.mean(j) = wx(j) / gamma_all(j);
  }

  // variance about the updated means (joint M-step)
  Eigen::VectorXd wd2 = Eigen::VectorXd::Zero(n);
  {
    std::size_t k = 0;
    for (const auto& seq : sequences) {
      if (seq.empty()) continue;
      const EStepResult& e = es[k++];
      for (int t = 0; t < static_cast<int>(seq.size()); ++t)
        for (int j = 0; j < n; ++j) {
          double d = seq[t] - q.mean(j);
          wd2(j) += e.gamma(t, j) * d * d;
        }
    }
  }
  for (int j = 0; j < n; ++j) {
    if (gamma_all(j) < 1e-9) continue;
    double v = wd2(j) / gamma_all(j);
    if (v < variance_floor) {
      v = variance_floor;
      ++rep.floored_states;
    }
    q.variance(j) = v;
  }

  q.initial = first / static_cast<double>(n_first);
  q.initial /= q.initial.sum();

  sort_states(q);
  q.validate();
  return {std::move(q), rep};
}

HmmParams quantile_init(const std::vector<std::vector<double>>& sequences,
                        int n_states) {
  std::vector<double> pool;
  for (const auto& s : sequences) pool.insert(pool.end(), s.begin(), s.end());
  if (pool.size() < static_cast<std::size_t>(2 * n_states))
    throw std::invalid_argument("quantile_init: not enough samples");
  std::sort(pool.begin(), pool.end());

  HmmParams p;
  p.mean.resize(n_states);
  p.variance.resize(n_states);
  p.trans.resize(n_states, n_states);
  p.initial = Eigen::VectorXd::Constant(n_states, 1.0 / n_states);

  const std::size_t m = pool.size();
  double pool_mean = std::accumulate(pool.begin(), pool.end(), 0.0) / m;
  double pool_var = 0.0;
  for (double x : pool) pool_var += (x - pool_mean) * (x - pool_mean);
  pool_var = std::max(pool_var / m, 1e-12);

  for (int b = 0; b < n_states; ++b) {
    std::size_t lo = b * m / n_states, hi = (b + 1) * m / n_states;
    double mu = 0.0;
    for (std::size_t k = lo; k < hi; ++k) mu += pool[k];
    mu /= static_cast<double>(hi - lo);
    double var = 0.0;
    for (std::size_t k = lo; k < hi; ++k) var += (pool[k] - mu) * (pool[k] - mu);
    var /= static_cast<double>(hi - lo);
    p.mean(b) = mu;
    p.variance(b) = std::max(var, 1e-6 * pool_var);
  }

  p.trans.setConstant(0.1 / n_states);
  for (int i = 0; i < n_states; ++i) p.trans(i, i) += 0.9;
  sort_states(p);
  p.validate();
  return p;
}

std::pair<HmmParams, TrainReport> em_train(
    const std::vector<std::vector<double>>& sequences, const HmmParams& init,
    const EmOptions& opts) {
  HmmParams start = init;
  sort_states(start);  // accept inits in any state order
  start.validate();

  double pool_mean = 0.0, pool_var = 0.0;
  std::size_t m = 0;
  for (const auto& s : sequences)
    for (double x : s) {
      pool_mean += x;
      ++m;
    }
  if (m == 0) throw std::invalid_argument("em_train: no observations");
  pool_mean /= static_cast<double>(m);
  for (const auto& s : sequences)
    for (double x : s) pool_var += (x - pool_mean) * (x - pool_mean);
  pool_var /= static_cast<double>(m);

  TrainReport rep;
  rep.variance_floor = std::max(opts.variance_floor_scale * pool_var, 1e-300);

  HmmParams cur = std::move(start);
  double prev_ll = kNegInf;
  for (int it = 0; it < opts.max_iters; ++it) {
    auto [next, step] = em_step(cur, sequences, rep.variance_floor);
    rep.ll_trace.push_back(step.log_likelihood);
    rep.iterations = it + 1;
    rep.floored_states += step.floored_states;
    rep.starved_states += step.starved_states;
    cur = std::move(next);
    if (it > 0) {
      double delta = step.log_likelihood - prev_ll;
      if (std::abs(delta) <=
          opts.ll_tol * std::max(1.0, std::abs(step.log_likelihood))) {
        rep.converged = true;
        break;
      }
    }
    prev_ll = step.log_likelihood;
  }
  return {std::move(cur), std::move(rep)};
}

std::pair<HmmParams, TrainReport> em_train(
    const std::vector<std::vector<double>>& sequences, int n_states,
    const EmOptions& opts) {
  return em_train(sequences, quantile_init(sequences, n_states), opts);
}

HmmSample sample_hmm(const HmmParams& p, std::size_t length, Rng& rng) {
  p.validate();
  HmmSample out;
  out.states.resize(length);
  out.obs.resize(length);
  const int n = p.n_states();
  std::vector<double> w(n);
  for (std::size_t t = 0; t < length; ++t) {
    if (t == 0) {
      for (int i = 0; i < n; ++i) w[i] = p.initial(i);
    } else {
      for (int i = 0; i < n; ++i) w[i] = p.trans(out.states[t - 1], i);
    }
    int s = rng.categorical(w);
    out.states[t] = s;
    out.obs[t] = p.mean(s) + std::sqrt(p.variance(s)) * rng.normal();
  }
  return out;
}

}  // namespace harvest
