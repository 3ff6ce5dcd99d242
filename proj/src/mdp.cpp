#include "harvest/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace harvest {

Modulation modulation_qpsk() { return {"qpsk", 2, 1.0, 2.0}; }
Modulation modulation_8psk() {
  double s = std::sin(M_PI / 8.0);
  return {"8psk", 3, 2.0 / 3.0, 2.0 * s * s};
}
Modulation modulation_16qam() { return {"16qam", 4, 3.0 / 4.0, 3.0 / 15.0}; }

Modulation modulation_by_name(const std::string& name) {
  if (name == "qpsk") return modulation_qpsk();
  if (name == "8psk") return modulation_8psk();
  if (name == "16qam") return modulation_16qam();
  throw std::invalid_argument("unknown modulation '" + name + "'");
}

void RadioConfig::validate(double period_s) const {
  if (!(symbol_rate > 0) || !(packet_symbols > 0) || !(snr_unit > 0))
    throw std::invalid_argument("radio config: non-positive field");
  if (mods.empty()) throw std::invalid_argument("radio config: no modulations");
  double packets = period_s / packet_s();
  if (std::abs(packets - std::round(packets)) > 1e-9)
    throw std::invalid_argument("radio config: period is not a whole number of packets");
}

double snr_unit_from_gamma_c(double gamma_c_db, double p_unit_uw) {
  return (p_unit_uw / kSnrReferenceUw) * std::pow(10.0, gamma_c_db / 10.0);
}

double ber_bound(const ChannelConfig& ch, int state, int w, const Modulation& m,
                 double snr_unit) {
  if (state < 0 || state >= ch.n_states())
    throw std::invalid_argument("ber_bound: bad channel state");
  if (w < 1) throw std::invalid_argument("ber_bound: w must be >= 1");
  const double lo = ch.thresholds[state], hi = ch.thresholds[state + 1];
  const double g0 = ch.gamma0;
  // Exact conditional mean of the Chernoff bound exp(-beta*w*snr_unit*g/(2*g0))
  // over the truncated exponential gain density on [lo, hi): snr_unit is the
  // mean SNR at unit power, so the instantaneous SNR scales with g/g0.
  const double f = w * m.beta * snr_unit + 2.0;

  double occupancy = std::exp(-lo / g0) - (std::isinf(hi) ? 0.0 : std::exp(-hi / g0));
  double mass = std::exp(-f * lo / (2.0 * g0)) -
                (std::isinf(hi) ? 0.0 : std::exp(-f * hi / (2.0 * g0)));
  double eta = m.alpha / f * mass / occupancy;
  return std::clamp(eta, 0.0, 1.0);
}

double packet_success(double eta, double bits_per_packet) {
  return std::pow(1.0 - eta, bits_per_packet);
}

double reward_rate(const RadioConfig& radio, const ChannelConfig& ch, int state,
                   int w, const Modulation& m) {
  if (w == 0) return 0.0;
  double eta = ber_bound(ch, state, w, m, radio.snr_unit);
  double bits = m.bits_per_symbol * radio.packet_symbols;
  return bits / radio.packet_s() * packet_success(eta, bits);
}

MdpModel build_mdp(const HmmParams& solar, const EnergyConfig& energy,
                   const ChannelConfig& channel, const RadioConfig& radio,
                   int n_battery, PolicyClass cls, int on_off_mod) {
  solar.validate();
  energy.validate();
  channel.validate();
  radio.validate(energy.period_s);
  if (n_battery < 2) throw std::invalid_argument("build_mdp: need >= 2 battery levels");

  MdpModel md;
  md.policy_class = cls;
  md.energy = energy;
  md.channel = channel;
  md.radio = radio;
  md.pmf = gaussian_quanta_pmf(solar, energy);
  md.solar_trans = solar.trans;
  md.channel_trans = build_fsmc(channel);

  md.dims.n_solar = solar.n_states();
  md.dims.n_channel = channel.n_states();
  md.dims.n_battery = n_battery;
  if (cls == PolicyClass::on_off) {
    if (on_off_mod < 0 || on_off_mod >= static_cast<int>(radio.mods.size()))
      throw std::invalid_argument("build_mdp: bad on_off modulation index");
    md.dims.n_power = 2;
    md.dims.n_mod = 1;
    md.radio.mods = {radio.mods[on_off_mod]};
  } else {
    md.dims.n_power = n_battery;
    md.dims.n_mod = static_cast<int>(radio.mods.size());
  }
  const MdpDims& d = md.dims;

  // battery factor, Eq-style lumping of overflow into the top level
  md.battery_trans.assign(static_cast<std::size_t>(d.n_solar) * d.n_power *
                              d.n_battery * d.n_battery, 0.0);
  for (int z = 0; z < d.n_solar; ++z)
    for (int n = 0; n < d.n_battery; ++n)
      for (int w = 0; w <= md.max_power(n); ++w) {
        double acc = 0.0;
        for (int k = n - w; k < d.n_battery - 1; ++k) {
          int q = k - n + w;
          double p = q <= md.pmf.q_max ? md.pmf.p(z, q) : 0.0;
          md.battery_trans[((static_cast<std::size_t>(z) * d.n_power + w) *
                            d.n_battery + n) * d.n_battery + k] = p;
          acc += p;
        }
        double top = 1.0 - acc;
        if (top < -1e-12)
          throw std::runtime_error("build_mdp: battery row mass exceeds 1");
        md.battery_trans[((static_cast<std::size_t>(z) * d.n_power + w) *
                          d.n_battery + n) * d.n_battery + (d.n_battery - 1)] =
            std::max(0.0, top);
      }

  md.reward.assign(static_cast<std::size_t>(d.n_channel) * d.n_power * d.n_mod, 0.0);
  for (int x = 0; x < d.n_channel; ++x)
    for (int w = 1; w < d.n_power; ++w)
      for (int m = 0; m < d.n_mod; ++m) {
        double eta = ber_bound(md.channel, x, w, md.radio.mods[m], md.radio.snr_unit);
        if (eta >= 1.0) ++md.clamped_eta;
        md.reward[(static_cast<std::size_t>(x) * d.n_power + w) * d.n_mod + m] =
            reward_rate(md.radio, md.channel, x, w, md.radio.mods[m]);
      }
  return md;
}

namespace {

// expected next-state value for every (z, x, k): two chained contractions
Eigen::VectorXd expected_next(const MdpModel& md, const Eigen::VectorXd& v) {
  const MdpDims& d = md.dims;
  Eigen::VectorXd u1(d.n_states());  // sum over z'
  for (int z = 0; z < d.n_solar; ++z)
    for (int x = 0; x < d.n_channel; ++x)
      for (int k = 0; k < d.n_battery; ++k) {
        double s = 0.0;
        for (int zp = 0; zp < d.n_solar; ++zp)
          s += md.solar_trans(z, zp) * v(md.sidx(zp, x, k));
        u1(md.sidx(z, x, k)) = s;
      }
  Eigen::VectorXd u2(d.n_states());  // then over x'
  for (int z = 0; z < d.n_solar; ++z)
    for (int x = 0; x < d.n_channel; ++x)
      for (int k = 0; k < d.n_battery; ++k) {
        double s = 0.0;
        for (int xp = 0; xp < d.n_channel; ++xp) {
          double c = md.channel_trans(x, xp);
          if (c > 0.0) s += c * u1(md.sidx(z, xp, k));
        }
        u2(md.sidx(z, x, k)) = s;
      }
  return u2;
}

}  // namespace

std::pair<Eigen::VectorXd, Policy> bellman_backup(const MdpModel& md,
                                                  double discount,
                                                  const Eigen::VectorXd& v) {
  const MdpDims& d = md.dims;
  Eigen::VectorXd u2 = expected_next(md, v);

  Eigen::VectorXd out(d.n_states());
  Policy pol;
  pol.dims = d;
  pol.cls = md.policy_class;
  pol.w.assign(d.n_states(), 0);
  pol.m.assign(d.n_states(), 0);

  for (int z = 0; z < d.n_solar; ++z)
    for (int x = 0; x < d.n_channel; ++x)
      for (int n = 0; n < d.n_battery; ++n) {
        double best = -std::numeric_limits<double>::infinity();
        int bw = 0, bm = 0;
        for (int w = 0; w <= md.max_power(n); ++w) {
          double ev = 0.0;
          for (int k = n - w; k < d.n_battery; ++k)
            ev += md.bt(z, w, n, k) * u2(md.sidx(z, x, k));
          double base = discount * ev;
          for (int m = 0; m < (w == 0 ? 1 : d.n_mod); ++m) {
            double q = md.rw(x, w, m) + base;
            if (q > best) {  // strict: keeps lowest power, then lowest mod
              best = q;
              bw = w;
              bm = m;
            }
          }
        }
        int s = md.sidx(z, x, n);
        out(s) = best;
        pol.w[s] = bw;
        pol.m[s] = bm;
      }
  return {std::move(out), std::move(pol)};
}

double q_value(const MdpModel& md, double discount, const Eigen::VectorXd& v,
               int z, int x, int n, int w, int m) {
  if (w < 0 || w > md.max_power(n)) throw std::invalid_argument("q_value: infeasible w");
  Eigen::VectorXd u2 = expected_next(md, v);
  double ev = 0.0;
  for (int k = n - w; k < md.dims.n_battery; ++k)
    ev += md.bt(z, w, n, k) * u2(md.sidx(z, x, k));
  return md.rw(x, w, m) + discount * ev;
}

double bellman_residual(const MdpModel& md, double discount,
                        const Eigen::VectorXd& v) {
  auto [tv, pol] = bellman_backup(md, discount, v);
  return (tv - v).cwiseAbs().maxCoeff();
}

Solution value_iteration(const MdpModel& md, const SolveOptions& opts) {
  if (!(opts.discount >= 0.0) || opts.discount >= 1.0)
    throw std::invalid_argument("value_iteration: discount must be in [0, 1)");
  Eigen::VectorXd v = Eigen::VectorXd::Zero(md.dims.n_states());

  Solution sol;
  sol.discount = opts.discount;
  for (int sweep = 0; sweep < opts.max_sweeps; ++sweep) {
    auto [next, pol] = bellman_backup(md, opts.discount, v);
    double delta = (next - v).cwiseAbs().maxCoeff();
    v = std::move(next);
    sol.sweeps = sweep + 1;
    if (delta <= opts.epsilon) {
      sol.value = std::move(v);
      sol.policy = std::move(pol);
      sol.residual = bellman_residual(md, opts.discount, sol.value);
      return sol;
    }
  }
  throw std::runtime_error("value_iteration: no convergence within max_sweeps");
}

}  // namespace harvest
