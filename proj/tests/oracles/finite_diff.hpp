#pragma once

#include <algorithm>
#include <cmath>
#include <functional>

#include <Eigen/Dense>

namespace oracle {

/// Central differences of f with respect to every entry of x.
inline Eigen::MatrixXd central_diff(const std::function<double(const Eigen::MatrixXd&)>& f,
                                    Eigen::MatrixXd x, double h = 1e-4) {
  Eigen::MatrixXd grad(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      const double keep = x(i, j);
      x(i, j) = keep + h;
      const double up = f(x);
      x(i, j) = keep - h;
      const double down = f(x);
      x(i, j) = keep;
      grad(i, j) = (up - down) / (2 * h);
    }
  }
  return grad;
}

/// ||a - b|| / max(||a||, ||b||, floor).
inline double relative_error(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                             double floor = 1e-8) {
  const double scale = std::max({a.norm(), b.norm(), floor});
  return (a - b).norm() / scale;
}

}  // namespace oracle
