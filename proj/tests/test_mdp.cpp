#include <cmath>
#include <stdexcept>

#include "doctest.h"
#include "harvest/mdp.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"
#include "support/random_models.hpp"

using namespace harvest;

namespace {

// on-off model whose PMF is (numerically) a point mass at Q = 1
MdpModel always_one_quantum_model(int n_battery, double gamma_c_db = 20.0) {
  HmmParams solar;
  solar.mean = Eigen::VectorXd::Constant(1, 1.0);
  solar.variance = Eigen::VectorXd::Constant(1, 1e-20);
  solar.trans = Eigen::MatrixXd::Constant(1, 1, 1.0);
  solar.initial = Eigen::VectorXd::Constant(1, 1.0);

  EnergyConfig en;
  en.period_s = 300.0;
  en.panel_area_cm2 = 1.0;
  en.efficiency = 1.0;
  en.p_unit_uw = 1.0;  // quantum 300 uJ = exactly the per-period harvest

  ChannelConfig ch;
  ch.thresholds = {0.0, std::numeric_limits<double>::infinity()};

  RadioConfig radio;
  radio.mods = {modulation_qpsk()};
  radio.snr_unit = snr_unit_from_gamma_c(gamma_c_db, en.p_unit_uw);

  return build_mdp(solar, en, ch, radio, n_battery, PolicyClass::on_off, 0);
}

}  // namespace

TEST_CASE("modulation catalogue") {
  CHECK(modulation_qpsk().bits_per_symbol == 2);
  CHECK(modulation_qpsk().alpha == 1.0);
  CHECK(modulation_qpsk().beta == 2.0);
  CHECK(modulation_8psk().bits_per_symbol == 3);
  CHECK(modulation_8psk().beta ==
        doctest::Approx(2.0 * std::pow(std::sin(M_PI / 8.0), 2)));
  CHECK(modulation_16qam().bits_per_symbol == 4);
  CHECK(modulation_16qam().beta == doctest::Approx(0.2));
  CHECK(modulation_by_name("8psk").name == "8psk");
  CHECK_THROWS_AS(modulation_by_name("64qam"), std::invalid_argument);
}

TEST_CASE("radio validation requires whole packets per period") {
  RadioConfig r = fixtures::sweep_radio(10.0);
  CHECK(r.packet_s() == doctest::Approx(0.01));
  CHECK_NOTHROW(r.validate(300.0));
  CHECK_THROWS_AS(r.validate(0.025), std::invalid_argument);  // 2.5 packets
}

TEST_CASE("per-unit SNR referenced to 1000 uW") {
  CHECK(snr_unit_from_gamma_c(0.0, 1000.0) == doctest::Approx(1.0));
  CHECK(snr_unit_from_gamma_c(20.0, 4.0e4) == doctest::Approx(4000.0));
  CHECK(snr_unit_from_gamma_c(6.0, 1.8e4) ==
        doctest::Approx(18.0 * std::pow(10.0, 0.6)).epsilon(1e-12));
}

TEST_CASE("packet error bound vs direct quadrature of its defining integral") {
  ChannelConfig ch = fixtures::default_channel();
  ch.gamma0 = 1.3;
  for (const Modulation& m :
       {modulation_qpsk(), modulation_8psk(), modulation_16qam()}) {
    for (int state : {0, 2, 5}) {
      for (int w : {1, 3}) {
        double snr_unit = 2.5;
        double lo = ch.thresholds[state];
        double hi = std::isinf(ch.thresholds[state + 1])
                        ? lo + 60.0 * ch.gamma0
                        : ch.thresholds[state + 1];
        auto integrand = [&](double g) {
          // snr_unit is the mean SNR at unit power, so instantaneous SNR at
          // gain g is snr_unit * g / gamma0
          return 0.5 * m.alpha *
                 std::exp(-0.5 * w * m.beta * snr_unit * g / ch.gamma0) *
                 std::exp(-g / ch.gamma0) / ch.gamma0;
        };
        double numer = oracle::integrate(integrand, lo, hi, 1e-14);
        double denom = std::exp(-lo / ch.gamma0) -
                       (std::isinf(ch.thresholds[state + 1])
                            ? 0.0
                            : std::exp(-hi / ch.gamma0));
        double ref = numer / denom;
        CHECK(ber_bound(ch, state, w, m, snr_unit) ==
              doctest::Approx(ref).epsilon(1e-9));
      }
    }
  }
}

TEST_CASE("packet error bound is monotone in power and channel state") {
  ChannelConfig ch = fixtures::default_channel();
  Modulation m = modulation_8psk();
  double prev = 1.0;
  for (int w : {1, 2, 4, 8}) {
    double eta = ber_bound(ch, 2, w, m, 10.0);
    CHECK(eta < prev);
    prev = eta;
  }
  for (int i = 0; i + 1 < ch.n_states(); ++i)
    CHECK(ber_bound(ch, i + 1, 1, m, 10.0) <= ber_bound(ch, i, 1, m, 10.0));
}

TEST_CASE("packet error bound clamps at 1 for pathological coefficients") {
  ChannelConfig ch = fixtures::default_channel();
  Modulation hot{"hot", 2, 5.0, 1e-9};
  CHECK(ber_bound(ch, 0, 1, hot, 1e-9) == 1.0);
}

TEST_CASE("packet success probability") {
  CHECK(packet_success(0.0, 2000.0) == 1.0);
  CHECK(packet_success(1e-4, 2000.0) == doctest::Approx(0.818723).epsilon(1e-5));
  CHECK(packet_success(1.0, 2000.0) == 0.0);
}

TEST_CASE("reward rate: zero when silent, perfect-channel ceiling, consistency") {
  RadioConfig radio = fixtures::sweep_radio(30.0);
  ChannelConfig ch = fixtures::default_channel();
  Modulation qpsk = modulation_qpsk();
  CHECK(reward_rate(radio, ch, 3, 0, qpsk) == 0.0);

  // eta -> 0: the rate approaches chi * R_S bits/s
  RadioConfig hot = radio;
  hot.snr_unit = 1e9;
  CHECK(reward_rate(hot, ch, 5, 1, qpsk) == doctest::Approx(2e5).epsilon(1e-6));

  double eta = ber_bound(ch, 2, 1, qpsk, radio.snr_unit);
  double expect = 2.0 * 1e3 / 0.01 * packet_success(eta, 2000.0);
  CHECK(reward_rate(radio, ch, 2, 1, qpsk) == doctest::Approx(expect));
}

TEST_CASE("built model: stochastic rows, reward sign and monotonicity") {
  MdpModel md = fixtures::threshold_model(8);
  const MdpDims& d = md.dims;
  CHECK(d.n_solar == 4);
  CHECK(d.n_channel == 6);
  CHECK(d.n_battery == 8);
  CHECK(d.n_power == 2);
  CHECK(d.n_mod == 1);

  for (int z = 0; z < d.n_solar; ++z)
    for (int n = 0; n < d.n_battery; ++n)
      for (int w = 0; w <= md.max_power(n); ++w) {
        double sum = 0.0;
        for (int k = 0; k < d.n_battery; ++k) {
          double p = md.bt(z, w, n, k);
          CHECK(p >= 0.0);
          sum += p;
          if (k < n - w) CHECK(p == 0.0);  // spending is bounded by storage
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
      }

  for (int x = 0; x < d.n_channel; ++x) {
    CHECK(md.rw(x, 0, 0) == 0.0);
    for (int w = 1; w < d.n_power; ++w)
      for (int m = 0; m < d.n_mod; ++m) {
        CHECK(md.rw(x, w, m) >= 0.0);
        if (x + 1 < d.n_channel) CHECK(md.rw(x + 1, w, m) >= md.rw(x, w, m));
      }
  }
}

TEST_CASE("point-mass harvest turns battery rows into clipped shifts") {
  MdpModel md = always_one_quantum_model(5);
  const int nb = md.dims.n_battery;
  for (int n = 0; n < nb; ++n)
    for (int w = 0; w <= md.max_power(n); ++w)
      for (int k = 0; k < nb; ++k) {
        double expect = (k == std::min(n - w + 1, nb - 1)) ? 1.0 : 0.0;
        CHECK(md.bt(0, w, n, k) == doctest::Approx(expect).epsilon(1e-9));
      }
}

TEST_CASE("draining the battery with no recharge lands on empty") {
  HmmParams solar;
  solar.mean = Eigen::VectorXd::Constant(1, 1e-9);
  solar.variance = Eigen::VectorXd::Constant(1, 1e-12);
  solar.trans = Eigen::MatrixXd::Constant(1, 1, 1.0);
  solar.initial = Eigen::VectorXd::Constant(1, 1.0);
  EnergyConfig en;
  en.p_unit_uw = 1e4;
  ChannelConfig ch;
  ch.thresholds = {0.0, std::numeric_limits<double>::infinity()};
  RadioConfig radio;
  radio.mods = {modulation_qpsk()};
  MdpModel md = build_mdp(solar, en, ch, radio, 4, PolicyClass::composite, 0);

  for (int n = 0; n < 4; ++n) {
    INFO("n = ", n);
    CHECK(md.bt(0, n, n, 0) == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("recurring single-unit harvest: geometric-series value") {
  // high SNR so the per-period reward is far from underflowing to zero
  MdpModel md = always_one_quantum_model(2, 80.0);
  SolveOptions opts;
  opts.discount = 0.8;
  opts.epsilon = 1e-12;
  Solution sol = value_iteration(md, opts);

  double r = md.rw(0, 1, 0);
  REQUIRE(r > 0.0);
  // transmitting every period from battery 1 is optimal and self-sustaining
  double v1 = r / (1.0 - opts.discount);
  CHECK(sol.value(md.sidx(0, 0, 1)) == doctest::Approx(v1).epsilon(1e-9));
  CHECK(sol.value(md.sidx(0, 0, 0)) == doctest::Approx(opts.discount * v1).epsilon(1e-9));
  CHECK(sol.policy.action_w(0, 0, 1) == 1);
  CHECK(sol.policy.action_w(0, 0, 0) == 0);
}

TEST_CASE("zero discount reduces to the myopic argmax") {
  Rng rng(606);
  MdpModel md = fixtures::random_small_model(rng);
  SolveOptions opts;
  opts.discount = 0.0;
  opts.epsilon = 1e-12;
  Solution sol = value_iteration(md, opts);
  const MdpDims& d = md.dims;
  for (int z = 0; z < d.n_solar; ++z)
    for (int x = 0; x < d.n_channel; ++x)
      for (int n = 0; n < d.n_battery; ++n) {
        double best = 0.0;
        for (int w = 1; w <= md.max_power(n); ++w)
          for (int m = 0; m < d.n_mod; ++m) best = std::max(best, md.rw(x, w, m));
        CHECK(sol.value(md.sidx(z, x, n)) == doctest::Approx(best));
        CHECK(md.rw(x, sol.policy.action_w(z, x, n), sol.policy.action_m(z, x, n)) ==
              doctest::Approx(best));
      }
}

TEST_CASE("value iteration matches exhaustive policy enumeration") {
  Rng rng(2718);
  for (int trial = 0; trial < 6; ++trial) {
    MdpModel md = fixtures::random_small_model(rng);
    double discount = 0.3 + 0.6 * rng.uniform();
    SolveOptions opts;
    opts.discount = discount;
    opts.epsilon = 1e-10;
    Solution sol = value_iteration(md, opts);
    Eigen::VectorXd ref = oracle::brute_force_value(md, discount);
    CHECK((sol.value - ref).cwiseAbs().maxCoeff() < 1e-8);
    // final sweep moved by <= epsilon, so the recomputed residual is at most
    // epsilon up to rounding noise at the value magnitude
    CHECK(sol.residual <= opts.epsilon);
  }
}

TEST_CASE("ties break toward lower power, then lower modulation") {
  Rng rng(11);
  MdpModel md = fixtures::random_small_model(rng);
  // flatten all rewards: every action is equally (un)attractive
  std::fill(md.reward.begin(), md.reward.end(), 0.0);
  Solution sol = value_iteration(md);
  for (int s = 0; s < md.dims.n_states(); ++s) {
    CHECK(sol.policy.w[s] == 0);
    CHECK(sol.policy.m[s] == 0);
  }

  // equal rewards across modulations at the same power
  MdpModel md2 = fixtures::threshold_model(4);
  for (int x = 0; x < md2.dims.n_channel; ++x)
    for (int w = 1; w < md2.dims.n_power; ++w)
      for (int m = 0; m < md2.dims.n_mod; ++m)
        md2.reward[(x * md2.dims.n_power + w) * md2.dims.n_mod + m] = 100.0;
  Solution sol2 = value_iteration(md2);
  for (int s = 0; s < md2.dims.n_states(); ++s) CHECK(sol2.policy.m[s] == 0);
}

TEST_CASE("first backup from zero has residual equal to the best reward") {
  MdpModel md = fixtures::threshold_model(8);
  Eigen::VectorXd zero = Eigen::VectorXd::Zero(md.dims.n_states());
  double best = 0.0;
  for (int x = 0; x < md.dims.n_channel; ++x)
    best = std::max(best, md.rw(x, 1, 0));
  CHECK(bellman_residual(md, 0.5, zero) == doctest::Approx(best));
}

TEST_CASE("sweep-to-sweep improvements contract at rate discount") {
  MdpModel md = fixtures::threshold_model(8);
  const double discount = 0.8;
  Eigen::VectorXd v = Eigen::VectorXd::Zero(md.dims.n_states());
  double prev_delta = 0.0;
  for (int sweep = 0; sweep < 8; ++sweep) {
    auto [next, pol] = bellman_backup(md, discount, v);
    double delta = (next - v).cwiseAbs().maxCoeff();
    if (sweep >= 3)  // after the policy support stabilizes
      CHECK(delta <= discount * prev_delta * (1.0 + 1e-9));
    prev_delta = delta;
    v = next;
  }
}

TEST_CASE("convergence: residual within epsilon and repeatable output") {
  MdpModel md = fixtures::threshold_model(8);
  SolveOptions opts = fixtures::threshold_solve_options();
  Solution a = value_iteration(md, opts);
  Solution b = value_iteration(md, opts);
  CHECK(a.residual <= opts.epsilon);
  CHECK(bellman_residual(md, opts.discount, a.value) <= opts.epsilon);
  CHECK(a.value == b.value);
  CHECK(a.policy.w == b.policy.w);
  CHECK(a.policy.m == b.policy.m);
  CHECK(a.sweeps == b.sweeps);
}

TEST_CASE("value is non-decreasing along the battery axis") {
  MdpModel md = fixtures::threshold_model(8);
  Solution sol = value_iteration(md, fixtures::threshold_solve_options());
  const MdpDims& d = md.dims;
  for (int z = 0; z < d.n_solar; ++z)
    for (int x = 0; x < d.n_channel; ++x)
      for (int n = 0; n + 1 < d.n_battery; ++n)
        CHECK(sol.value(md.sidx(z, x, n + 1)) >=
              sol.value(md.sidx(z, x, n)) - 1e-9);
}

TEST_CASE("infeasible actions are rejected up front") {
  MdpModel md = fixtures::threshold_model(4);
  Eigen::VectorXd v = Eigen::VectorXd::Zero(md.dims.n_states());
  CHECK_THROWS_AS(q_value(md, 0.5, v, 0, 0, 0, 1, 0), std::invalid_argument);
  SolveOptions opts;
  opts.discount = 1.0;
  CHECK_THROWS_AS(value_iteration(md, opts), std::invalid_argument);
}
