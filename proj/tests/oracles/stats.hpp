#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>

namespace oracle {

inline double normal_pdf(double x, double mean, double variance) {
  const double d = x - mean;
  return std::exp(-0.5 * d * d / variance) / std::sqrt(2 * std::numbers::pi * variance);
}

/// Upper-tail p-value of Pearson's statistic for observed counts against
/// expected probabilities (categories with zero probability are skipped).
inline double chi_square_p(const std::vector<long>& counts, const std::vector<double>& probs) {
  long total = 0;
  for (long c : counts) total += c;
  double stat = 0;
  int dof = -1;
  for (std::size_t k = 0; k < counts.size(); ++k) {
    if (probs[k] <= 0) continue;
    const double e = probs[k] * static_cast<double>(total);
    stat += (static_cast<double>(counts[k]) - e) * (static_cast<double>(counts[k]) - e) / e;
    ++dof;
  }
  boost::math::chi_squared dist(dof);
  return boost::math::cdf(boost::math::complement(dist, stat));
}

}  // namespace oracle
