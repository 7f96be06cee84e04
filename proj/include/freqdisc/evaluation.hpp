#pragma once

#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

namespace freqdisc {

struct Assignment {
  std::vector<int> row_to_col;
  double total = 0;
};

/// Maximum-profit perfect matching on a square matrix (O(n^3) shortest
/// augmenting path on the negated costs). Throws Error on non-square input or
/// non-finite entries.
Assignment hungarian(const Eigen::MatrixXd& profit);

struct SubsetScore {
  std::optional<double> accuracy;  // absent for an empty subset
  std::size_t count = 0;
};

/// Accuracy per (domain, subset) under one global cluster -> class alignment.
struct EvalReport {
  // domain name ("overall", "known", "unknown") -> subset ("All", "Old", "New")
  std::map<std::string, std::map<std::string, SubsetScore>> scores;
  std::vector<int> alignment;  // predicted cluster -> ground-truth class

  std::optional<double> accuracy(const std::string& domain, const std::string& subset) const;
  nlohmann::json to_json() const;
  static std::string csv_header();
  std::string csv_row() const;
};

/// domain_labels[i] is 0 for the known domain and 1 for the unknown domain.
/// Alignment is solved once over all samples and reused for every slice.
EvalReport cluster_acc(std::span<const int> y_true, std::span<const int> y_pred,
                       const std::set<int>& old_classes, std::span<const int> domain_labels);

}  // namespace freqdisc
