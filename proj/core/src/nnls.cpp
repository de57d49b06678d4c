#include "fmgpan/nnls.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "fmgpan/error.hpp"

namespace fmgpan {

namespace {

Eigen::VectorXd solve_passive(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, const std::vector<bool>& passive) {
  std::vector<Eigen::Index> cols;
  for (Eigen::Index j = 0; j < a.cols(); ++j)
    if (passive[j]) cols.push_back(j);
  Eigen::MatrixXd sub(a.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t k = 0; k < cols.size(); ++k) sub.col(static_cast<Eigen::Index>(k)) = a.col(cols[k]);
  const Eigen::VectorXd z = sub.completeOrthogonalDecomposition().solve(b);
  Eigen::VectorXd s = Eigen::VectorXd::Zero(a.cols());
  for (std::size_t k = 0; k < cols.size(); ++k) s[cols[k]] = z[static_cast<Eigen::Index>(k)];
  return s;
}

}  // namespace

NnlsResult solve_nnls(const Eigen::MatrixXd& a, const Eigen::VectorXd& b) {
  if (a.rows() != b.size()) throw DimensionError("NNLS: matrix rows do not match right-hand side");
  const Eigen::Index n = a.cols();
  NnlsResult res;
  res.x = Eigen::VectorXd::Zero(n);

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  res.degenerate = qr.rank() < n;

  const double scale = a.norm() * std::max(b.norm(), 1.0);
  const double tol = 1e-13 * std::max(scale, std::numeric_limits<double>::min());
  std::vector<bool> passive(static_cast<std::size_t>(n), false);
  Eigen::VectorXd& x = res.x;
  Eigen::VectorXd w = a.transpose() * (b - a * x);
  const int max_outer = static_cast<int>(3 * n + 10);

  for (int outer = 0; outer < max_outer; ++outer) {
    Eigen::Index t = -1;
    double best = tol;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (!passive[j] && w[j] > best) {
        best = w[j];
        t = j;
      }
    }
    if (t < 0) break;
    passive[t] = true;
    ++res.iterations;

    for (int inner = 0; inner < 3 * n + 10; ++inner) {
      Eigen::VectorXd s = solve_passive(a, b, passive);
      bool feasible = true;
      for (Eigen::Index j = 0; j < n; ++j)
        if (passive[j] && s[j] <= 0.0) feasible = false;
      if (feasible) {
        x = s;
        break;
      }
      double alpha = std::numeric_limits<double>::infinity();
      for (Eigen::Index j = 0; j < n; ++j) {
        if (passive[j] && s[j] <= 0.0) alpha = std::min(alpha, x[j] / (x[j] - s[j]));
      }
      x += alpha * (s - x);
      for (Eigen::Index j = 0; j < n; ++j) {
        if (passive[j] && x[j] <= 1e-15 * std::max(1.0, x.cwiseAbs().maxCoeff())) {
          passive[j] = false;
          x[j] = 0.0;
        }
      }
    }
    w = a.transpose() * (b - a * x);
  }

  for (Eigen::Index j = 0; j < n; ++j) x[j] = std::max(x[j], 0.0);
  res.residual_norm = (a * x - b).norm();
  return res;
}

double nnls_kkt_violation(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, const Eigen::VectorXd& x) {
  const Eigen::VectorXd w = a.transpose() * (b - a * x);
  const double scale = a.norm() * std::max(b.norm(), 1.0);
  double worst = 0.0;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    if (x[j] < 0.0) worst = std::max(worst, -x[j]);
    if (x[j] > 0.0) worst = std::max(worst, std::abs(w[j]) / scale);
    else worst = std::max(worst, std::max(w[j], 0.0) / scale);
  }
  return worst;
}

}  // namespace fmgpan
