#pragma once

#include <Eigen/Dense>

#include "freqdisc/common.hpp"

namespace testutil {

inline Eigen::MatrixXd uniform_matrix(Eigen::Index r, Eigen::Index c, std::uint64_t seed,
                                      double lo = -1, double hi = 1) {
  freqdisc::Rng rng(seed);
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = freqdisc::uniform_range(rng, lo, hi);
  return m;
}

inline Eigen::MatrixXd unit_rows(Eigen::Index r, Eigen::Index c, std::uint64_t seed) {
  Eigen::MatrixXd m = uniform_matrix(r, c, seed);
  m.rowwise().normalize();
  return m;
}

inline Eigen::MatrixXd simplex_rows(Eigen::Index r, Eigen::Index c, std::uint64_t seed) {
  Eigen::MatrixXd m = uniform_matrix(r, c, seed, 0.05, 1.0);
  for (Eigen::Index i = 0; i < r; ++i) m.row(i) /= m.row(i).sum();
  return m;
}

}  // namespace testutil
