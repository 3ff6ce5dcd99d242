#include "harvest/energy.hpp"

#include <cmath>
#include <stdexcept>

namespace harvest {

void EnergyConfig::validate() const {
  if (!(p_unit_uw > 0) || !(period_s > 0) || !(panel_area_cm2 > 0) ||
      !(efficiency > 0) || efficiency > 1.0)
    throw std::invalid_argument("energy config: non-positive field or efficiency > 1");
  if (q_max != -1 && q_max < 1)
    throw std::invalid_argument("energy config: q_max must be >= 1 (or -1 for auto)");
}

double EnergyQuantaPmf::mean_quanta(int state) const {
  double m = 0.0;
  for (int q = 0; q <= q_max; ++q) m += q * p(state, q);
  return m;
}

Eigen::VectorXd deterministic_quanta_pmf(double e_h_uj, double quantum_uj,
                                         int q_max) {
  if (e_h_uj < 0 || quantum_uj <= 0 || q_max < 1)
    throw std::invalid_argument("deterministic_quanta_pmf: bad arguments");
  Eigen::VectorXd p = Eigen::VectorXd::Zero(q_max + 1);
  double ratio = e_h_uj / quantum_uj;
  int base = static_cast<int>(std::floor(ratio));
  double frac = ratio - base;
  if (base >= q_max) {
    p(q_max) = 1.0;  // everything above the cap lumps into the top bin
    return p;
  }
  p(base) = 1.0 - frac;
  p(base + 1) = frac;
  return p;
}

int default_q_max(const HmmParams& solar, const EnergyConfig& cfg) {
  double top = 0.0;
  for (int j = 0; j < solar.n_states(); ++j) {
    double mu_bar = std::max(0.0, solar.mean(j)) * cfg.panel_area_cm2 *
                    cfg.period_s * cfg.efficiency;
    top = std::max(top, mu_bar / cfg.quantum_uj());
  }
  return 2 * static_cast<int>(std::ceil(top)) + 5;
}

EnergyQuantaPmf gaussian_quanta_pmf(const HmmParams& solar,
                                    const EnergyConfig& cfg) {
  cfg.validate();
  solar.validate();
  const int n = solar.n_states();
  const double eu = cfg.quantum_uj();
  const int qmax = cfg.q_max == -1 ? default_q_max(solar, cfg) : cfg.q_max;

  EnergyQuantaPmf out;
  out.quantum_uj = eu;
  out.q_max = qmax;
  out.p = Eigen::MatrixXd::Zero(n, qmax + 1);
  out.scaled_mean.resize(n);
  out.scaled_var.resize(n);

  const double scale = cfg.panel_area_cm2 * cfg.period_s * cfg.efficiency;
  for (int j = 0; j < n; ++j) {
    const double mu = solar.mean(j) * scale;
    const double rho = solar.variance(j) * scale * scale;
    out.scaled_mean(j) = mu;
    out.scaled_var(j) = rho;
    const double sd = std::sqrt(rho);
    const double r = mu / eu;

    // bin mass and boundary-density terms of the piecewise-linear smearing
    auto g1 = [&](int i) {
      return 0.5 * (std::erfc((i * eu - mu) / (sd * M_SQRT2)) -
                    std::erfc(((i + 1) * eu - mu) / (sd * M_SQRT2)));
    };
    auto g2 = [&](int i) {
      double a = (i - 1) * eu - mu, b = i * eu - mu;
      return std::sqrt(rho / (2.0 * M_PI * eu * eu)) *
             (std::exp(-a * a / (2.0 * rho)) - std::exp(-b * b / (2.0 * rho)));
    };

    for (int i = 0; i < qmax; ++i) {
      double v = (i + 1 - r) * g1(i) - g2(i + 1);
      if (i > 0) v += (r - (i - 1)) * g1(i - 1) + g2(i);
      if (v < 0.0) v = 0.0;  // round-off at far tails
      out.p(j, i) = v;
    }
    out.p(j, 0) += 0.5 * std::erfc(mu / (sd * M_SQRT2));  // negative-energy mass
    double below = out.p.row(j).head(qmax).sum();
    out.p(j, qmax) = std::max(0.0, 1.0 - below);

    double total = out.p.row(j).sum();
    if (std::abs(total - 1.0) > 1e-9)
      throw std::runtime_error("quanta pmf: row does not sum to 1");
    out.p.row(j) /= total;
  }
  return out;
}

RechargeResult recharge_step(const BatterySimState& s, double e_h_uj,
                             double quantum_uj, int n_levels) {
  if (e_h_uj < 0 || quantum_uj <= 0 || n_levels < 1 || s.level < 0 ||
      s.level >= n_levels || s.residual_uj < 0 || s.residual_uj >= quantum_uj)
    throw std::invalid_argument("recharge_step: bad state or arguments");

  double pool = s.residual_uj + e_h_uj;
  int q = static_cast<int>(std::floor(pool / quantum_uj));
  RechargeResult r;
  r.state.residual_uj = pool - q * quantum_uj;
  r.state.level = std::min(s.level + q, n_levels - 1);
  r.quanta_added = r.state.level - s.level;
  r.overflow = q - r.quanta_added;
  return r;
}

}  // namespace harvest
