#pragma once

#include <Eigen/Dense>

namespace harvest {

// Stationary distribution of a column-stochastic matrix P ([to][from]):
// solves the augmented balance system [P - I; 1^T] x = [0; 1] by least
// squares. Unique solutions require exactly one closed communicating class;
// otherwise (or if the residual exceeds `residual_tol`) this throws with a
// diagnosis of how many closed classes the chain has.
Eigen::VectorXd solve_balance(const Eigen::MatrixXd& colstoch,
                              double residual_tol = 1e-9);

// max-norm residual of the full augmented system at x
double balance_residual(const Eigen::MatrixXd& colstoch,
                        const Eigen::VectorXd& x);

// number of closed communicating classes of the chain (edges = positive
// entries); 1 means a unique stationary distribution exists
int closed_class_count(const Eigen::MatrixXd& colstoch);

}  // namespace harvest
