#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "freqdisc/datagen.hpp"
#include "freqdisc/domain_sep.hpp"
#include "oracles/dft.hpp"
#include "oracles/stats.hpp"

using namespace freqdisc;

namespace {

ImageTensor random_image(int c, int h, int w, std::uint64_t seed) {
  Rng rng(seed);
  ImageTensor img(c, h, w);
  for (double& v : img.data()) v = uniform01(rng);
  return img;
}

AmplitudeDescriptor random_descriptor(std::size_t dim, Rng& rng) {
  AmplitudeDescriptor d;
  for (std::size_t i = 0; i < dim; ++i) d.values.push_back(uniform01(rng));
  return d;
}

std::vector<double> two_gaussians(std::uint64_t seed, int n, double m0, double m1, double sd) {
  Rng rng(seed);
  std::normal_distribution<double> noise(0.0, sd);
  std::vector<double> out;
  for (int i = 0; i < n; ++i) out.push_back((i % 2 ? m1 : m0) + noise(rng));
  return out;
}

}  // namespace

TEST(AmplitudeDescriptor, IdenticalImagesGiveIdenticalDescriptors) {
  const ImageTensor img = random_image(3, 8, 8, 1);
  EXPECT_EQ(amplitude_descriptor(img).values, amplitude_descriptor(img).values);
}

TEST(AmplitudeDescriptor, ConstantImageHasOnlyDc) {
  const auto d = amplitude_descriptor(ImageTensor(1, 6, 6, 0.4));
  const auto nonzero = std::count_if(d.values.begin(), d.values.end(), [](double v) { return std::abs(v) > 1e-12; });
  EXPECT_EQ(nonzero, 1);
}

TEST(AmplitudeDescriptor, NegatedBinaryImageDiffersOnlyAtDc) {
  Rng rng(2);
  ImageTensor img(1, 6, 6);
  for (double& v : img.data()) v = uniform01(rng) < 0.4 ? 1.0 : 0.0;
  ImageTensor neg = img;
  for (double& v : neg.data()) v = 1.0 - v;
  const auto a = amplitude_descriptor(img);
  const auto b = amplitude_descriptor(neg);
  // Direct-sum oracle: |F(1-x)| = |F(x)| off DC, DC becomes HW - sum(x).
  const auto fa = oracle::centered_dft(img.channel(0).data(), 6, 6);
  const auto fb = oracle::centered_dft(neg.channel(0).data(), 6, 6);
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    EXPECT_NEAR(a.values[i], std::abs(fa[i]), 1e-9);
    EXPECT_NEAR(b.values[i], std::abs(fb[i]), 1e-9);
    if (i != 3 * 6 + 3) {
      EXPECT_NEAR(a.values[i], b.values[i], 1e-9);
    }
  }
  EXPECT_LT(cosine_similarity(a.values, b.values), 1.0);
}

TEST(AmplitudeDescriptor, LogOptionAppliesLog1p) {
  const ImageTensor img = random_image(2, 5, 5, 3);
  DescriptorOptions raw, logd;
  raw.log_amplitude = false;
  logd.log_amplitude = true;
  const auto a = amplitude_descriptor(img, {}, raw);
  const auto b = amplitude_descriptor(img, {}, logd);
  for (std::size_t i = 0; i < a.values.size(); ++i) EXPECT_NEAR(b.values[i], std::log1p(a.values[i]), 1e-12);
}

TEST(AmplitudeDescriptor, PoolsLargeImages) {
  const auto small = amplitude_descriptor(random_image(1, 64, 64, 4));
  const auto large = amplitude_descriptor(random_image(1, 66, 66, 5));
  EXPECT_EQ(small.values.size(), 64u * 64u);
  EXPECT_EQ(large.values.size(), 33u * 33u);
}

TEST(AmplitudeDescriptor, RejectsZeroImage) {
  EXPECT_THROW(amplitude_descriptor(ImageTensor(3, 4, 4, 0.0)), Error);
}

TEST(KnnDensity, SelfIsNearestNeighbour) {
  Rng rng(6);
  std::vector<AmplitudeDescriptor> ds;
  for (int i = 0; i < 7; ++i) ds.push_back(random_descriptor(12, rng));
  const AnchorSet anchors(ds);
  for (const auto& d : ds) EXPECT_NEAR(knn_density(d, anchors, 1), 1.0, 1e-12);
}

TEST(KnnDensity, MatchesExhaustiveSort) {
  Rng rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<AmplitudeDescriptor> ds;
    for (int i = 0; i < 5; ++i) ds.push_back(random_descriptor(9, rng));
    const AnchorSet anchors(ds);
    const auto q = random_descriptor(9, rng);
    std::vector<double> sims;
    for (const auto& d : ds) sims.push_back(cosine_similarity(q.values, d.values));
    std::sort(sims.rbegin(), sims.rend());
    EXPECT_DOUBLE_EQ(knn_density(q, anchors, 3), (sims[0] + sims[1] + sims[2]) / 3.0);
    double all = 0;
    for (double s : sims) all += s;
    EXPECT_NEAR(knn_density(q, anchors, 5), all / 5.0, 1e-14);
  }
}

TEST(KnnDensity, InvariantToAnchorOrderAndScale) {
  Rng rng(8);
  std::vector<AmplitudeDescriptor> ds;
  for (int i = 0; i < 9; ++i) ds.push_back(random_descriptor(10, rng));
  auto q = random_descriptor(10, rng);
  const double base = knn_density(q, AnchorSet(ds), 3);
  auto shuffled = ds;
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  EXPECT_NEAR(knn_density(q, AnchorSet(shuffled), 3), base, 1e-14);
  for (auto& d : ds)
    for (double& v : d.values) v *= 7.5;
  for (double& v : q.values) v *= 7.5;
  EXPECT_NEAR(knn_density(q, AnchorSet(ds), 3), base, 1e-14);
}

TEST(KnnDensity, RejectsBadK) {
  Rng rng(9);
  std::vector<AmplitudeDescriptor> ds{random_descriptor(4, rng), random_descriptor(4, rng)};
  const AnchorSet anchors(ds);
  EXPECT_THROW(knn_density(ds[0], anchors, 3), Error);
  EXPECT_THROW(knn_density(ds[0], anchors, 0), Error);
}

TEST(FitGmm, RecoversSeparatedComponents) {
  const auto scores = two_gaussians(10, 200, 0.3, 0.9, 0.01);
  const GmmModel m = fit_gmm_1d(scores);
  EXPECT_NEAR(m.known.mean, 0.9, 0.02);
  EXPECT_NEAR(m.unknown.mean, 0.3, 0.02);
  EXPECT_NEAR(m.known.weight, 0.5, 0.1);
  EXPECT_NEAR(m.known.weight + m.unknown.weight, 1.0, 1e-12);
}

TEST(FitGmm, SymmetricDataGivesSymmetricMeans) {
  std::vector<double> scores;
  for (int i = 0; i < 20; ++i) {
    scores.push_back(0.4 - 0.05);
    scores.push_back(0.4 + 0.05);
  }
  const GmmModel m = fit_gmm_1d(scores);
  EXPECT_NEAR((m.known.mean + m.unknown.mean) / 2, 0.4, 1e-9);
  EXPECT_GT(m.known.mean, m.unknown.mean);
}

TEST(FitGmm, LogLikelihoodNeverDecreases) {
  Rng rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> scores;
    const int n = 4 + static_cast<int>(uniform_index(rng, 60));
    for (int i = 0; i < n; ++i) scores.push_back(uniform01(rng));
    const GmmModel m = fit_gmm_1d(scores);
    for (std::size_t i = 1; i < m.log_likelihood_trace.size(); ++i)
      EXPECT_GE(m.log_likelihood_trace[i], m.log_likelihood_trace[i - 1] - 1e-9);
    EXPECT_GE(m.known.variance, 1e-6);
    EXPECT_GE(m.unknown.variance, 1e-6);
  }
}

TEST(FitGmm, RejectsDegenerateInput) {
  EXPECT_THROW(fit_gmm_1d(std::vector<double>{0.1, 0.2, 0.3}), Error);
  EXPECT_THROW(fit_gmm_1d(std::vector<double>(10, 0.5)), Error);
  EXPECT_THROW(fit_gmm_1d(std::vector<double>{0.1, 0.2, std::nan(""), 0.4}), Error);
}

TEST(Posterior, MidpointOfSymmetricModelIsHalf) {
  GmmModel m;
  m.known = {0.8, 0.01, 0.5};
  m.unknown = {0.2, 0.01, 0.5};
  EXPECT_NEAR(posterior_known(m, 0.5), 0.5, 1e-15);
  EXPECT_GT(posterior_known(m, 0.8), 0.999);
}

TEST(Posterior, MatchesClosedFormDensities) {
  GmmModel m;
  m.known = {0.8, 0.01, 0.3};
  m.unknown = {0.2, 0.01, 0.7};
  for (double x : {0.5, 0.45, 0.6, 0.1, 0.95}) {
    const double a = 0.3 * oracle::normal_pdf(x, 0.8, 0.01);
    const double b = 0.7 * oracle::normal_pdf(x, 0.2, 0.01);
    EXPECT_NEAR(posterior_known(m, x), a / (a + b), 1e-12);
  }
  // 0.5 lies midway: the weights alone decide, 0.3 / (0.3 + 0.7).
  EXPECT_NEAR(posterior_known(m, 0.5), 0.3, 1e-12);
}

TEST(Posterior, StaysFiniteFarInTheTails) {
  GmmModel m;
  m.known = {0.9, 1e-6, 0.5};
  m.unknown = {0.3, 1e-6, 0.5};
  EXPECT_NEAR(posterior_known(m, 5.0), 1.0, 1e-12);
  EXPECT_NEAR(posterior_known(m, -5.0), 0.0, 1e-12);
  double prev = 0;
  for (double x = 0.55; x <= 0.65; x += 0.001) {
    const double p = posterior_known(m, x);
    ASSERT_TRUE(std::isfinite(p));
    EXPECT_GE(p, prev - 1e-12);
    prev = p;
  }
}

TEST(Partition, ImagesAtTheAnchorsAreKnown) {
  std::vector<ImageTensor> imgs;
  std::vector<AmplitudeDescriptor> ds;
  const ImageTensor img = random_image(3, 8, 8, 12);
  for (int i = 0; i < 4; ++i) {
    imgs.push_back(img);
    ds.push_back(amplitude_descriptor(img));
  }
  const DomainPartition p = partition(imgs, {}, AnchorSet(ds), {});
  for (const auto& s : p.samples) EXPECT_EQ(s.label, Domain::known);
}

TEST(Partition, DuplicatedImageIsDegenerate) {
  std::vector<AmplitudeDescriptor> ds;
  for (int i = 0; i < 4; ++i) ds.push_back(amplitude_descriptor(random_image(3, 8, 8, 20 + i)));
  std::vector<ImageTensor> imgs(6, random_image(3, 8, 8, 13));
  EXPECT_THROW(partition(imgs, {}, AnchorSet(ds), {}), Error);
}

TEST(Partition, SeparatesCleanFromHeavyNoise) {
  SyntheticSpec spec;
  spec.samples_per_class = 10;
  spec.seed = 14;
  const auto clean = generate_classes(spec, 0);
  const auto held = generate_classes(spec, 1);
  std::vector<AmplitudeDescriptor> anchors;
  for (const auto& s : clean) anchors.push_back(amplitude_descriptor(s.image));
  std::vector<ImageTensor> imgs;
  std::vector<int> truth;
  Rng rng(15);
  for (int i = 0; i < 100; ++i) {
    const auto& s = held[static_cast<std::size_t>(i) % held.size()];
    const bool noisy = i >= 50;
    imgs.push_back(noisy ? corrupt(s.image, Corruption::gaussian_noise, 5, rng) : s.image);
    truth.push_back(noisy);
  }
  const DomainPartition p = partition(imgs, {}, AnchorSet(anchors), {});
  int correct = 0;
  for (std::size_t i = 0; i < imgs.size(); ++i)
    correct += (p.samples[i].label == Domain::unknown) == static_cast<bool>(truth[i]);
  EXPECT_GE(correct, 90);
}
