#include <Eigen/Dense>
#include <stdexcept>

#include "doctest.h"
#include "harvest/markov.hpp"
#include "harvest/rng.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using harvest::balance_residual;
using harvest::closed_class_count;
using harvest::solve_balance;

TEST_CASE("uniform chain has the uniform stationary distribution") {
  for (int n : {2, 3, 5, 9}) {
    Eigen::MatrixXd a = Eigen::MatrixXd::Constant(n, n, 1.0 / n);
    Eigen::VectorXd v = solve_balance(a);
    for (int i = 0; i < n; ++i) CHECK(v(i) == doctest::Approx(1.0 / n).epsilon(1e-12));
  }
}

TEST_CASE("two-state chain against the closed form") {
  // row-stochastic with p01 = 0.1, p10 = 0.3 -> stationary (0.75, 0.25)
  Eigen::MatrixXd rows(2, 2);
  rows << 0.9, 0.1,
          0.3, 0.7;
  Eigen::VectorXd v = solve_balance(rows.transpose());
  CHECK(v(0) == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(v(1) == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("reference solar transition matrix: exact solve vs power iteration") {
  Eigen::MatrixXd a = fixtures::reference_solar_model().trans.transpose();
  Eigen::VectorXd v = solve_balance(a);

  CHECK(std::abs(v.sum() - 1.0) < 1e-12);
  CHECK(balance_residual(a, v) < 1e-10);

  Eigen::VectorXd ref = oracle::power_stationary(a);
  CHECK((v - ref).cwiseAbs().maxCoeff() < 1e-12);

  // The recorded steady-state row was computed from unrounded training
  // output; solving the rounded matrix lands near it but not within its own
  // print precision (the gap is ~0.036 on state 1), so the check is loose.
  Eigen::VectorXd rounded = fixtures::reference_solar_stationary_rounded();
  CHECK((v - rounded).cwiseAbs().maxCoeff() < 0.05);
}

TEST_CASE("random ergodic chains agree with power iteration") {
  harvest::Rng rng(12345);
  for (int trial = 0; trial < 12; ++trial) {
    int n = 2 + static_cast<int>(rng.below(5));
    Eigen::MatrixXd rows(n, n);
    for (int i = 0; i < n; ++i) {
      double sum = 0.0;
      for (int j = 0; j < n; ++j) {
        rows(i, j) = 0.05 + rng.uniform();
        sum += rows(i, j);
      }
      rows.row(i) /= sum;
    }
    Eigen::MatrixXd a = rows.transpose();
    Eigen::VectorXd v = solve_balance(a);
    CHECK(balance_residual(a, v) < 1e-9);
    CHECK((v - oracle::power_stationary(a)).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("absorbing state dominates a reducible but uniquely-closed chain") {
  Eigen::MatrixXd rows(3, 3);
  rows << 1.0, 0.0, 0.0,
          0.2, 0.8, 0.0,
          0.0, 0.5, 0.5;
  CHECK(closed_class_count(rows.transpose()) == 1);
  Eigen::VectorXd v = solve_balance(rows.transpose());
  CHECK(v(0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(v(1)) < 1e-12);
  CHECK(std::abs(v(2)) < 1e-12);
}

TEST_CASE("multiple closed classes are rejected with a diagnosis") {
  Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(2, 2);
  CHECK(closed_class_count(eye) == 2);
  CHECK_THROWS_AS(solve_balance(eye), std::runtime_error);

  Eigen::MatrixXd blocks = Eigen::MatrixXd::Zero(4, 4);
  blocks.block(0, 0, 2, 2) << 0.5, 0.5, 0.5, 0.5;
  blocks.block(2, 2, 2, 2) << 0.9, 0.1, 0.1, 0.9;
  CHECK(closed_class_count(blocks.transpose()) == 2);
  CHECK_THROWS_AS(solve_balance(blocks.transpose()), std::runtime_error);
}

TEST_CASE("non-stochastic input is rejected") {
  Eigen::MatrixXd bad(2, 2);
  bad << 0.9, 0.2,
         0.2, 0.7;  // columns sum to 1.1 and 0.9
  CHECK_THROWS_AS(solve_balance(bad), std::invalid_argument);
}
