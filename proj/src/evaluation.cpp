#include "freqdisc/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "freqdisc/common.hpp"

namespace freqdisc {
namespace {

const char* kDomains[] = {"overall", "known", "unknown"};
const char* kSubsets[] = {"All", "Old", "New"};

}  // namespace

Assignment hungarian(const Eigen::MatrixXd& profit) {
  if (profit.rows() != profit.cols()) throw Error("hungarian: matrix must be square");
  if (!profit.allFinite()) throw Error("hungarian: non-finite entry");
  const int n = static_cast<int>(profit.rows());
  Assignment out;
  if (n == 0) return out;
  const double inf = std::numeric_limits<double>::infinity();
  // 1-based potentials; column 0 is the virtual start.
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = -profit(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        // Strict comparison keeps the lowest column index on ties.
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  out.row_to_col.assign(n, -1);
  for (int j = 1; j <= n; ++j) out.row_to_col[p[j] - 1] = j - 1;
  for (int i = 0; i < n; ++i) out.total += profit(i, out.row_to_col[i]);
  return out;
}

std::optional<double> EvalReport::accuracy(const std::string& domain,
                                           const std::string& subset) const {
  auto d = scores.find(domain);
  if (d == scores.end()) return std::nullopt;
  auto s = d->second.find(subset);
  if (s == d->second.end()) return std::nullopt;
  return s->second.accuracy;
}

nlohmann::json EvalReport::to_json() const {
  nlohmann::json j;
  for (const auto& [domain, subsets] : scores) {
    for (const auto& [subset, score] : subsets) {
      nlohmann::json cell;
      cell["acc"] = score.accuracy ? nlohmann::json(*score.accuracy) : nlohmann::json(nullptr);
      cell["n"] = score.count;
      j["scores"][domain][subset] = cell;
    }
  }
  j["alignment"] = alignment;
  return j;
}

std::string EvalReport::csv_header() {
  std::string h;
  for (const char* d : kDomains)
    for (const char* s : kSubsets) {
      if (!h.empty()) h += ',';
      h += std::string(d) + "_" + s;
    }
  return h;
}

std::string EvalReport::csv_row() const {
  std::ostringstream os;
  os.precision(10);
  bool first = true;
  for (const char* d : kDomains)
    for (const char* s : kSubsets) {
      if (!first) os << ',';
      first = false;
      if (auto a = accuracy(d, s)) os << *a;
    }
  return os.str();
}

EvalReport cluster_acc(std::span<const int> y_true, std::span<const int> y_pred,
                       const std::set<int>& old_classes, std::span<const int> domain_labels) {
  if (y_true.size() != y_pred.size()) throw Error("cluster_acc: label vectors differ in length");
  if (!domain_labels.empty() && domain_labels.size() != y_true.size()) {
    throw Error("cluster_acc: domain labels differ in length");
  }
  int dim = 0;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    if (y_true[i] < 0 || y_pred[i] < 0) throw Error("cluster_acc: negative label");
    dim = std::max({dim, y_true[i] + 1, y_pred[i] + 1});
  }
  Eigen::MatrixXd confusion = Eigen::MatrixXd::Zero(dim, dim);
  for (std::size_t i = 0; i < y_true.size(); ++i) confusion(y_pred[i], y_true[i]) += 1.0;

  EvalReport report;
  report.alignment = hungarian(confusion).row_to_col;

  auto score = [&](auto&& keep) {
    SubsetScore s;
    std::size_t hit = 0;
    for (std::size_t i = 0; i < y_true.size(); ++i) {
      if (!keep(i)) continue;
      ++s.count;
      if (report.alignment[y_pred[i]] == y_true[i]) ++hit;
    }
    if (s.count > 0) s.accuracy = static_cast<double>(hit) / static_cast<double>(s.count);
    return s;
  };
  for (int d = -1; d <= 1; ++d) {
    auto in_domain = [&](std::size_t i) {
      return d < 0 || (!domain_labels.empty() && domain_labels[i] == d) ||
             (domain_labels.empty() && d == 0);
    };
    const std::string name = kDomains[d + 1];
    auto& slot = report.scores[name];
    slot["All"] = score([&](std::size_t i) { return in_domain(i); });
    slot["Old"] = score([&](std::size_t i) { return in_domain(i) && old_classes.count(y_true[i]); });
    slot["New"] = score([&](std::size_t i) { return in_domain(i) && !old_classes.count(y_true[i]); });
  }
  return report;
}

}  // namespace freqdisc
