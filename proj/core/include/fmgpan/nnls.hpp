#pragma once

#include <Eigen/Dense>

namespace fmgpan {

struct NnlsResult {
  Eigen::VectorXd x;
  double residual_norm = 0.0;  // ||A x - b||_2
  bool degenerate = false;     // A is column rank deficient
  int iterations = 0;
};

/// min ||A x - b||_2 subject to x >= 0, by the Lawson-Hanson active-set
/// method. Passive-set subproblems use a complete orthogonal decomposition,
/// so rank-deficient systems yield the minimum-norm feasible solution.
NnlsResult solve_nnls(const Eigen::MatrixXd& a, const Eigen::VectorXd& b);

/// Largest KKT violation of `x` for the NNLS problem, relative to
/// ||A||_F * max(||b||, 1): infeasibility, positive gradient on the bound,
/// or nonzero gradient off the bound.
double nnls_kkt_violation(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, const Eigen::VectorXd& x);

}  // namespace fmgpan
