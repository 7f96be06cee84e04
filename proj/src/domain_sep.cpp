#include "freqdisc/domain_sep.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <numbers>
#include <numeric>

#include "freqdisc/spectral.hpp"

namespace freqdisc {
namespace {

constexpr double kDensityFloor = 1e-300;

double log_normal_pdf(double x, const GaussianComponent& g) {
  const double d = x - g.mean;
  return -0.5 * (std::log(2.0 * std::numbers::pi * g.variance) + d * d / g.variance);
}

// log(pi * N(x)) with the density floored so a vanishing component never yields -inf.
double weighted_log_density(double x, const GaussianComponent& g) {
  return std::log(std::max(g.weight, kDensityFloor)) + log_normal_pdf(x, g);
}

double log_add(double a, double b) {
  const double m = std::max(a, b);
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

std::vector<double> pool2x2(const std::vector<double>& amp, int C, int H, int W) {
  const int h2 = H / 2;
  const int w2 = W / 2;
  std::vector<double> out(static_cast<std::size_t>(C) * h2 * w2);
  for (int c = 0; c < C; ++c)
    for (int y = 0; y < h2; ++y)
      for (int x = 0; x < w2; ++x) {
        auto at = [&](int yy, int xx) {
          return amp[(static_cast<std::size_t>(c) * H + yy) * W + xx];
        };
        out[(static_cast<std::size_t>(c) * h2 + y) * w2 + x] =
            0.25 * (at(2 * y, 2 * x) + at(2 * y + 1, 2 * x) + at(2 * y, 2 * x + 1) +
                    at(2 * y + 1, 2 * x + 1));
      }
  return out;
}

}  // namespace

std::string to_string(Domain d) { return d == Domain::known ? "known" : "unknown"; }

AmplitudeDescriptor amplitude_descriptor(const ImageTensor& image, std::string source_id,
                                         const DescriptorOptions& options) {
  Spectrum s = fft2(image);
  std::vector<double> values = std::move(s.amplitude);
  if (options.pool_large && static_cast<long>(s.height) * s.width > 64L * 64L) {
    values = pool2x2(values, s.channels, s.height, s.width);
  }
  if (options.log_amplitude) {
    for (double& v : values) v = std::log1p(v);
  }
  double norm2 = 0;
  for (double v : values) norm2 += v * v;
  if (!(norm2 > 0)) {
    throw Error("amplitude_descriptor: zero image has no amplitude (" + source_id + ")");
  }
  return {std::move(values), std::move(source_id)};
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error("cosine_similarity: dimension mismatch");
  double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (!(na > 0 && nb > 0)) throw Error("cosine_similarity: zero-norm vector");
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

AnchorSet::AnchorSet(std::vector<AmplitudeDescriptor> descriptors) {
  if (descriptors.empty()) throw Error("AnchorSet: no descriptors");
  dim_ = descriptors.front().values.size();
  unit_.reserve(descriptors.size());
  for (auto& d : descriptors) {
    if (d.values.size() != dim_) throw Error("AnchorSet: descriptor dimensions differ");
    double n = std::sqrt(std::inner_product(d.values.begin(), d.values.end(), d.values.begin(), 0.0));
    if (!(n > 0) || !std::isfinite(n)) throw Error("AnchorSet: zero-norm or non-finite descriptor");
    for (double& v : d.values) v /= n;
    unit_.push_back(std::move(d.values));
  }
}

double knn_density(const AmplitudeDescriptor& query, const AnchorSet& anchors, int k) {
  if (k < 1) throw Error("knn_density: K must be >= 1");
  if (static_cast<std::size_t>(k) > anchors.size()) {
    throw Error("knn_density: K=" + std::to_string(k) + " exceeds anchor count " +
                std::to_string(anchors.size()));
  }
  if (query.values.size() != anchors.dim()) throw Error("knn_density: dimension mismatch");
  const double qn = std::sqrt(
      std::inner_product(query.values.begin(), query.values.end(), query.values.begin(), 0.0));
  if (!(qn > 0)) throw Error("knn_density: zero-norm query");
  std::vector<double> sims(anchors.size());
  for (std::size_t i = 0; i < anchors.size(); ++i) {
    auto a = anchors.unit(i);
    sims[i] = std::inner_product(a.begin(), a.end(), query.values.begin(), 0.0) / qn;
  }
  std::partial_sort(sims.begin(), sims.begin() + k, sims.end(), std::greater<>());
  // Sum the selected values in sorted order so the result does not depend on
  // the anchor order.
  double sum = 0;
  for (int i = 0; i < k; ++i) sum += sims[i];
  return sum / k;
}

nlohmann::json GmmModel::to_json() const {
  return {
      {"means", {{"known", known.mean}, {"unknown", unknown.mean}}},
      {"variances", {{"known", known.variance}, {"unknown", unknown.variance}}},
      {"weights", {{"known", known.weight}, {"unknown", unknown.weight}}},
      {"iterations", iterations},
      {"final_log_likelihood", final_log_likelihood()},
  };
}

double gmm_log_likelihood(const GmmModel& m, std::span<const double> scores) {
  double ll = 0;
  for (double x : scores) ll += log_add(weighted_log_density(x, m.known), weighted_log_density(x, m.unknown));
  return ll;
}

GmmModel fit_gmm_1d(std::span<const double> scores, const EmOptions& opt) {
  const std::size_t n = scores.size();
  if (n < 4) throw Error("fit_gmm_1d: need at least 4 scores");
  for (double x : scores)
    if (!std::isfinite(x)) throw Error("fit_gmm_1d: non-finite score");
  std::vector<double> sorted(scores.begin(), scores.end());
  std::sort(sorted.begin(), sorted.end());
  if (sorted.front() == sorted.back()) {
    throw Error("fit_gmm_1d: all scores identical, mixture fit is degenerate");
  }

  auto moments = [&](std::size_t lo, std::size_t hi) {
    GaussianComponent g;
    const double cnt = static_cast<double>(hi - lo);
    g.mean = std::accumulate(sorted.begin() + lo, sorted.begin() + hi, 0.0) / cnt;
    double var = 0;
    for (std::size_t i = lo; i < hi; ++i) var += (sorted[i] - g.mean) * (sorted[i] - g.mean);
    g.variance = std::max(var / cnt, opt.variance_floor);
    g.weight = cnt / static_cast<double>(n);
    return g;
  };
  const std::size_t half = n / 2;
  GaussianComponent a = moments(0, half);  // low scores
  GaussianComponent b = moments(half, n);  // high scores

  GmmModel m;
  std::vector<double> resp(n);
  double prev = -std::numeric_limits<double>::infinity();
  for (int it = 0; it < opt.max_iter; ++it) {
    // E-step under the current parameters; its log-likelihood is recorded.
    double ll = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double la = weighted_log_density(scores[i], a);
      const double lb = weighted_log_density(scores[i], b);
      const double lse = log_add(la, lb);
      resp[i] = std::exp(lb - lse);
      ll += lse;
    }
    m.log_likelihood_trace.push_back(ll);
    m.iterations = it + 1;
    const bool converged = ll - prev < opt.tol;
    prev = ll;
    if (converged) break;

    // M-step.
    double rb = 0, ra = 0, sb = 0, sa = 0;
    for (std::size_t i = 0; i < n; ++i) {
      rb += resp[i];
      ra += 1.0 - resp[i];
      sb += resp[i] * scores[i];
      sa += (1.0 - resp[i]) * scores[i];
    }
    if (ra > 0) a.mean = sa / ra;
    if (rb > 0) b.mean = sb / rb;
    double va = 0, vb = 0;
    for (std::size_t i = 0; i < n; ++i) {
      va += (1.0 - resp[i]) * (scores[i] - a.mean) * (scores[i] - a.mean);
      vb += resp[i] * (scores[i] - b.mean) * (scores[i] - b.mean);
    }
    a.variance = std::max(ra > 0 ? va / ra : opt.variance_floor, opt.variance_floor);
    b.variance = std::max(rb > 0 ? vb / rb : opt.variance_floor, opt.variance_floor);
    a.weight = ra / static_cast<double>(n);
    b.weight = rb / static_cast<double>(n);
  }
  if (b.mean >= a.mean) {
    m.known = b;
    m.unknown = a;
  } else {
    m.known = a;
    m.unknown = b;
  }
  return m;
}

double posterior_known(const GmmModel& m, double score) {
  const double lk = weighted_log_density(score, m.known);
  const double lu = weighted_log_density(score, m.unknown);
  return std::exp(lk - log_add(lk, lu));
}

void DomainPartition::write_csv(const std::filesystem::path& path) const {
  std::ofstream os(path);
  if (!os) throw Error("DomainPartition: cannot write " + path.string());
  os << "sample_id,density_score,p_known,hard_label\n";
  os.precision(10);
  for (const auto& s : samples) {
    os << s.sample_id << ',' << s.density << ',' << s.p_known << ',' << to_string(s.label) << '\n';
  }
}

DomainPartition partition(std::span<const ImageTensor> images, std::span<const std::string> ids,
                          const AnchorSet& anchors, const PartitionOptions& options) {
  if (images.empty()) throw Error("partition: no unlabeled images");
  if (!ids.empty() && ids.size() != images.size()) throw Error("partition: id count mismatch");
  DomainPartition out;
  out.samples.resize(images.size());
  std::vector<double> scores(images.size());
  for (std::size_t i = 0; i < images.size(); ++i) {
    auto& s = out.samples[i];
    s.sample_id = ids.empty() ? std::to_string(i) : ids[i];
    s.density = knn_density(amplitude_descriptor(images[i], s.sample_id, options.descriptor),
                            anchors, options.k);
    scores[i] = s.density;
  }
  const bool all_at_anchors = std::all_of(scores.begin(), scores.end(),
                                          [](double v) { return v >= 1.0 - 1e-12; });
  if (all_at_anchors) {
    for (auto& s : out.samples) s.p_known = 1.0;
    return out;
  }
  out.model = fit_gmm_1d(scores, options.em);
  for (auto& s : out.samples) {
    s.p_known = posterior_known(out.model, s.density);
    s.label = s.p_known >= 0.5 ? Domain::known : Domain::unknown;
  }
  return out;
}

}  // namespace freqdisc
