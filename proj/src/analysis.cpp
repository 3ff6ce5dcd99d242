#include "harvest/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "harvest/markov.hpp"

namespace harvest {

namespace {

void require_on_off(const MdpModel& md) {
  if (md.policy_class != PolicyClass::on_off || md.dims.n_power != 2 ||
      md.dims.n_mod != 1)
    throw std::invalid_argument("analysis: on-off policy class required");
}

}  // namespace

ThresholdAnalysis check_threshold(const MdpModel& md, const Policy& policy,
                                  const Eigen::VectorXd& v, double discount) {
  require_on_off(md);
  const MdpDims& d = md.dims;
  if (policy.dims.n_states() != d.n_states() || v.size() != d.n_states())
    throw std::invalid_argument("check_threshold: size mismatch");

  ThresholdAnalysis out;
  out.kappa.resize(d.n_solar, d.n_channel);
  out.is_threshold.assign(static_cast<std::size_t>(d.n_solar) * d.n_channel, 0);
  out.theta.resize(d.n_solar * d.n_channel, d.n_battery);
  out.theta.setZero();

  bool all_thr = true, consistent = true;
  for (int z = 0; z < d.n_solar; ++z)
    for (int x = 0; x < d.n_channel; ++x) {
      // policy-derived threshold: highest silent battery level
      int kappa = 0;
      bool monotone = true;
      for (int y = 1; y < d.n_battery; ++y) {
        int a = policy.action_w(z, x, y);
        if (a == 0) {
          if (kappa != y - 1) monotone = false;  // re-silencing after a transmit
          kappa = y;
        }
      }
      out.kappa(z, x) = kappa;
      bool thr = monotone;
      out.is_threshold[z * d.n_channel + x] = thr;
      all_thr = all_thr && thr;

      // theta from the supplied value function
      for (int y = 1; y < d.n_battery; ++y)
        out.theta(z * d.n_channel + x, y) =
            q_value(md, discount, v, z, x, y, 1, 0) -
            q_value(md, discount, v, z, x, y, 0, 0);

      // crossing consistency: negative up to kappa, non-negative after
      double scale = 1.0;
      for (int y = 1; y < d.n_battery; ++y)
        scale = std::max(scale, std::abs(out.theta(z * d.n_channel + x, y)));
      double tol = 1e-9 * scale;
      for (int y = 1; y < d.n_battery; ++y) {
        double t = out.theta(z * d.n_channel + x, y);
        bool want_neg = y <= kappa;
        if (want_neg ? t >= tol : t < -tol) consistent = false;
      }
    }
  out.all_threshold = all_thr;
  out.theta_consistent = all_thr && consistent;
  return out;
}

double xi_value(const MdpModel& md, const Eigen::VectorXd& v, int z, int x, int y) {
  const MdpDims& d = md.dims;
  if (y < 0 || y >= d.n_battery) throw std::invalid_argument("xi_value: bad level");
  int hi = std::min(d.n_battery - 1, y + 1);
  double s = 0.0;
  for (int j = 0; j < d.n_solar; ++j) {
    double az = md.solar_trans(z, j);
    if (az == 0.0) continue;
    for (int l = 0; l < d.n_channel; ++l) {
      double cx = md.channel_trans(x, l);
      if (cx == 0.0) continue;
      s += az * cx * (v(md.sidx(j, l, hi)) - v(md.sidx(j, l, y)));
    }
  }
  return s;
}

DeficiencyInterval deficiency_region(const MdpModel& md, const Eigen::VectorXd& v,
                                     double discount, int z, int x, int kappa_zx,
                                     double r1_override) {
  require_on_off(md);
  const MdpDims& d = md.dims;
  if (kappa_zx < 0 || kappa_zx > d.n_battery - 1)
    throw std::invalid_argument("deficiency_region: bad threshold");

  // the analysis assumes at most one quantum per period
  double beyond = 0.0;
  for (int q = 2; q <= md.pmf.q_max; ++q) beyond += md.pmf.p(z, q);
  if (beyond > 1e-9)
    throw std::invalid_argument(
        "deficiency_region: quanta distribution has mass beyond {0,1}");

  double r1 = std::isnan(r1_override) ? md.rw(x, 1, 0) : r1_override;

  // silence optimal at y requires  P(Q=0) * (Xi(y-1) - Xi(y)) >= r1/disc - Xi(y);
  // transmitting at y+1 requires the reverse at y+1
  auto bound = [&](int y) {  // returns the phi ratio at level y
    double xi_hi = xi_value(md, v, z, x, y);
    double xi_lo = xi_value(md, v, z, x, y - 1);
    double num = r1 / discount - xi_hi;
    double den = xi_lo - xi_hi;
    if (std::abs(den) < 1e-300) {
      // degenerate: condition independent of P(Q=0)
      return num <= 0 ? -std::numeric_limits<double>::infinity()
                      : std::numeric_limits<double>::infinity();
    }
    return num / den;
  };

  DeficiencyInterval out;
  out.raw_lo = 0.0;
  out.raw_hi = 1.0;
  if (kappa_zx >= 1) out.raw_lo = bound(kappa_zx);
  if (kappa_zx <= d.n_battery - 2) out.raw_hi = bound(kappa_zx + 1);
  out.lo = std::clamp(out.raw_lo, 0.0, 1.0);
  out.hi = std::clamp(out.raw_hi, 0.0, 1.0);
  out.feasible = out.raw_lo <= out.raw_hi && out.raw_lo <= 1.0 && out.raw_hi >= 0.0;
  return out;
}

StationaryResult stationary_under_policy(const MdpModel& md,
                                         const Eigen::MatrixXi& kappa) {
  require_on_off(md);
  const MdpDims& d = md.dims;
  if (kappa.rows() != d.n_solar || kappa.cols() != d.n_channel)
    throw std::invalid_argument("stationary_under_policy: kappa shape mismatch");

  const int nb = d.n_battery;
  const int total = d.n_states();

  // battery block for source (j, i): column q holds the next-level
  // distribution given the threshold rule at (j, i)
  auto battery_block = [&](int j, int i) {
    Eigen::MatrixXd pi = Eigen::MatrixXd::Zero(nb, nb);
    for (int q = 0; q < nb; ++q) {
      bool transmit = q >= kappa(j, i) + 1;
      int base = transmit ? q - 1 : q;
      double acc = 0.0;
      for (int p = base; p < nb - 1; ++p) {
        int quanta = p - base;
        double mass = quanta <= md.pmf.q_max ? md.pmf.p(j, quanta) : 0.0;
        pi(p, q) = mass;
        acc += mass;
      }
      pi(nb - 1, q) = std::max(0.0, 1.0 - acc);
    }
    return pi;
  };

  Eigen::MatrixXd phi = Eigen::MatrixXd::Zero(total, total);
  for (int j = 0; j < d.n_solar; ++j)
    for (int i = 0; i < d.n_channel; ++i) {
      Eigen::MatrixXd pi = battery_block(j, i);
      for (int z = 0; z < d.n_solar; ++z) {
        double az = md.solar_trans(j, z);
        if (az == 0.0) continue;
        for (int x = 0; x < d.n_channel; ++x) {
          double cx = md.channel_trans(i, x);
          if (cx == 0.0) continue;
          int row0 = (z * d.n_channel + x) * nb;
          int col0 = (j * d.n_channel + i) * nb;
          for (int pq = 0; pq < nb; ++pq)
            for (int pp = 0; pp < nb; ++pp)
              if (pi(pp, pq) != 0.0) phi(row0 + pp, col0 + pq) += az * cx * pi(pp, pq);
        }
      }
    }

  StationaryResult out;
  out.nu = solve_balance(phi, 1e-9);
  out.residual = balance_residual(phi, out.nu);
  return out;
}

double expected_net_bit_rate(const MdpModel& md, const Eigen::MatrixXi& kappa,
                             const Eigen::VectorXd& nu) {
  require_on_off(md);
  const MdpDims& d = md.dims;
  double rate = 0.0;
  for (int j = 0; j < d.n_solar; ++j)
    for (int i = 0; i < d.n_channel; ++i)
      for (int n = kappa(j, i) + 1; n < d.n_battery; ++n)
        rate += nu((j * d.n_channel + i) * d.n_battery + n) * md.rw(i, 1, 0);
  return rate;
}

double mean_quanta_rate(const MdpModel& md, const Eigen::VectorXd& solar_stationary) {
  double q = 0.0;
  for (int j = 0; j < md.dims.n_solar; ++j)
    q += solar_stationary(j) * md.pmf.mean_quanta(j);
  return q;
}

double rate_upper_bound(const MdpModel& md, double q_bar) {
  require_on_off(md);
  return std::min(q_bar, 1.0) * md.rw(md.dims.n_channel - 1, 1, 0);
}

}  // namespace harvest
