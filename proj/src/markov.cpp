#include "harvest/markov.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>
#include <vector>

namespace harvest {

namespace {

// Tarjan-free SCC via Kosaraju; graphs here are tiny (<= a few hundred nodes).
void dfs(const std::vector<std::vector<int>>& adj, int v,
         std::vector<char>& seen, std::vector<int>& order) {
  seen[v] = 1;
  for (int w : adj[v])
    if (!seen[w]) dfs(adj, w, seen, order);
  order.push_back(v);
}

}  // namespace

int closed_class_count(const Eigen::MatrixXd& p) {
  const int n = static_cast<int>(p.rows());
  std::vector<std::vector<int>> fwd(n), rev(n);
  for (int to = 0; to < n; ++to)
    for (int from = 0; from < n; ++from)
      if (p(to, from) > 0.0 && to != from) {
        fwd[from].push_back(to);
        rev[to].push_back(from);
      }

  std::vector<char> seen(n, 0);
  std::vector<int> order;
  for (int v = 0; v < n; ++v)
    if (!seen[v]) dfs(fwd, v, seen, order);

  std::vector<int> comp(n, -1);
  int ncomp = 0;
  std::fill(seen.begin(), seen.end(), 0);
  for (int i = n - 1; i >= 0; --i) {
    int v = order[i];
    if (seen[v]) continue;
    std::vector<int> stack{v};
    seen[v] = 1;
    while (!stack.empty()) {
      int u = stack.back();
      stack.pop_back();
      comp[u] = ncomp;
      for (int w : rev[u])
        if (!seen[w]) {
          seen[w] = 1;
          stack.push_back(w);
        }
    }
    ++ncomp;
  }

  // a class is closed when no edge leaves it
  std::vector<char> open(ncomp, 0);
  for (int from = 0; from < n; ++from)
    for (int to : fwd[from])
      if (comp[to] != comp[from]) open[comp[from]] = 1;
  int closed = 0;
  for (int c = 0; c < ncomp; ++c)
    if (!open[c]) ++closed;
  return closed;
}

double balance_residual(const Eigen::MatrixXd& p, const Eigen::VectorXd& x) {
  double r = (p * x - x).cwiseAbs().maxCoeff();
  return std::max(r, std::abs(x.sum() - 1.0));
}

Eigen::VectorXd solve_balance(const Eigen::MatrixXd& p, double residual_tol) {
  const int n = static_cast<int>(p.rows());
  if (p.cols() != n || n < 1) throw std::invalid_argument("balance: matrix must be square");
  for (int j = 0; j < n; ++j) {
    double s = p.col(j).sum();
    if (std::abs(s - 1.0) > 1e-9)
      throw std::invalid_argument("balance: column " + std::to_string(j) +
                                  " sums to " + std::to_string(s) + ", not 1");
  }

  Eigen::MatrixXd aug(n + 1, n);
  aug.topRows(n) = p - Eigen::MatrixXd::Identity(n, n);
  aug.bottomRows(1).setOnes();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + 1);
  rhs(n) = 1.0;

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(aug);
  if (qr.rank() < n) {
    int classes = closed_class_count(p);
    throw std::runtime_error(
        "balance: singular system, stationary distribution is not unique "
        "(chain has " + std::to_string(classes) + " closed communicating classes)");
  }
  Eigen::VectorXd x = qr.solve(rhs);

  double res = balance_residual(p, x);
  if (res > residual_tol)
    throw std::runtime_error("balance: residual " + std::to_string(res) +
                             " exceeds tolerance");
  // scrub round-off: tiny negatives to zero, renormalize
  for (int i = 0; i < n; ++i) {
    if (x(i) < -1e-9)
      throw std::runtime_error("balance: negative stationary mass at state " +
                               std::to_string(i));
    if (x(i) < 0.0) x(i) = 0.0;
  }
  x /= x.sum();
  return x;
}

}  // namespace harvest
