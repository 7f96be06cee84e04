// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.
// Usage: acceptance [criterion ...]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "freqdisc/commands.hpp"
#include "freqdisc/config.hpp"
#include "freqdisc/domain_sep.hpp"
#include "freqdisc/evaluation.hpp"
#include "freqdisc/objectives.hpp"
#include "freqdisc/sampler.hpp"
#include "freqdisc/spectral.hpp"
#include "freqdisc/train.hpp"
#include "oracles/assignment.hpp"
#include "oracles/dft.hpp"
#include "oracles/finite_diff.hpp"
#include "oracles/stats.hpp"
#include "test_util.hpp"

using namespace freqdisc;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

ImageTensor random_image(int c, int h, int w, std::uint64_t seed) {
  Rng rng(seed);
  ImageTensor img(c, h, w);
  for (double& v : img.data()) v = uniform01(rng);
  return img;
}

std::string fmt(const char* f, double a) {
  char buf[96];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

Outcome spectral_correctness() {
  double roundtrip = 0, parseval = 0, self_swap = 0, zero_window = 0, oracle_err = 0;
  for (int seed = 0; seed < 5; ++seed) {
    const ImageTensor img = random_image(3, 32, 32, 100 + seed);
    const Spectrum s = fft2(img);
    roundtrip = std::max(roundtrip, max_abs_diff(ifft2_raw(s).image, img));
    double energy = 0, spectral = 0;
    for (double v : img.data()) energy += v * v;
    for (double a : s.amplitude) spectral += a * a;
    parseval = std::max(parseval, std::abs(spectral / (32.0 * 32.0) - energy) / energy);
    self_swap = std::max(self_swap, max_abs_diff(swap_low_freq(s, s, {0.04}), img));
    const Spectrum other = fft2(random_image(3, 32, 32, 200 + seed));
    zero_window = std::max(zero_window, max_abs_diff(swap_low_freq(other, s, {0.0}), img));
  }
  const int sizes[3][2] = {{4, 4}, {5, 3}, {6, 7}};
  for (int t = 0; t < 3; ++t) {
    const int H = sizes[t][0], W = sizes[t][1];
    const ImageTensor img = random_image(1, H, W, 300 + t);
    const Spectrum s = fft2(img);
    const auto ref = oracle::centered_dft(img.data().data(), H, W);
    for (int u = 0; u < H; ++u)
      for (int v = 0; v < W; ++v) {
        const std::size_t k = s.index(0, u, v);
        const std::complex<double> got = std::polar(s.amplitude[k], s.phase[k]);
        oracle_err = std::max(oracle_err, std::abs(got - ref[static_cast<std::size_t>(u * W + v)]));
      }
  }
  const bool pass = roundtrip < 1e-6 && parseval < 1e-6 && self_swap < 1e-5 && zero_window < 1e-5 &&
                    oracle_err < 1e-8;
  std::ostringstream os;
  os << "roundtrip " << roundtrip << ", parseval " << parseval << ", self-swap " << self_swap
     << ", L=0 " << zero_window << ", direct DFT " << oracle_err;
  return {pass, os.str()};
}

double check(const Matrix& analytic, const std::function<double(const Matrix&)>& f, const Matrix& x) {
  return oracle::relative_error(analytic, oracle::central_diff(f, x));
}

Outcome gradient_suite() {
  using testutil::simplex_rows;
  using testutil::unit_rows;
  const LossWeights w;
  double worst = 0;
  std::string worst_name;
  auto record = [&](const std::string& name, double err) {
    if (err > worst) {
      worst = err;
      worst_name = name;
    }
  };
  for (int seed = 0; seed < 5; ++seed) {
    const std::uint64_t base = 1000 + 100 * static_cast<std::uint64_t>(seed);
    const Matrix z = unit_rows(8, 6, base);
    const auto groups = view_groups(4, 2);
    record("unsupervised contrastive",
           check(contrastive_loss({z, groups}, w.tau_u).dz,
                 [&](const Matrix& x) { return contrastive_loss({x, groups}, w.tau_u).value; }, z));
    const std::vector<int> classes{0, 1, 0, 1, 0, 1, 0, 1};
    record("supervised contrastive",
           check(contrastive_loss({z, classes}, w.tau_c).dz,
                 [&](const Matrix& x) { return contrastive_loss({x, classes}, w.tau_c).value; }, z));
    const Matrix p = simplex_rows(4, 5, base + 1), q = simplex_rows(4, 5, base + 2);
    record("cluster", check(cluster_loss(p, q).dp,
                            [&](const Matrix& x) { return cluster_loss(x, q).value; }, p));
    record("entropy regularizer",
           check(entropy_reg(p).dp, [](const Matrix& x) { return entropy_reg(x).value; }, p));

    KnownDomainInputs kin{unit_rows(8, 6, base + 3), simplex_rows(8, 5, base + 4),
                          simplex_rows(8, 5, base + 5), {0, -1, 1, -1}, 2};
    const BranchLoss kd = loss_kd(kin, w);
    auto kd_z = [&](const Matrix& x) { auto t = kin; t.z = x; return loss_kd(t, w).value; };
    auto kd_p = [&](const Matrix& x) { auto t = kin; t.p = x; return loss_kd(t, w).value; };
    record("L_kd (z)", check(kd.dz, kd_z, kin.z));
    record("L_kd (p)", check(kd.dp, kd_p, kin.p));

    const Matrix t = simplex_rows(4, 5, base + 6);
    UnknownDomainInputs uin{unit_rows(12, 6, base + 7), simplex_rows(8, 5, base + 8), Matrix(8, 5), 3};
    uin.q_target << t, t;
    const BranchLoss ud = loss_ud(uin, w);
    auto ud_z = [&](const Matrix& x) { auto u = uin; u.z = x; return loss_ud(u, w).value; };
    auto ud_p = [&](const Matrix& x) { auto u = uin; u.p_plain = x; return loss_ud(u, w).value; };
    record("L_ud (z)", check(ud.dz, ud_z, uin.z));
    record("L_ud (p)", check(ud.dp, ud_p, uin.p_plain));

    // L_total over the stacked student predictions [known; unknown].
    auto total = [&](const Matrix& pk, const Matrix& pu) {
      auto a = kin;
      a.p = pk;
      auto b = uin;
      b.p_plain = pu;
      Matrix both(16, 5);
      both << pk, pu;
      return loss_total(loss_kd(a, w).value, loss_ud(b, w).value, entropy_reg(both).value, w.epsilon);
    };
    Matrix both(16, 5);
    both << kin.p, uin.p_plain;
    const ProbLoss ent = entropy_reg(both);
    Matrix analytic(16, 5);
    analytic << kd.dp + w.epsilon * ent.dp.topRows(8), ud.dp + w.epsilon * ent.dp.bottomRows(8);
    record("L_total", check(analytic, [&](const Matrix& x) { return total(x.topRows(8), x.bottomRows(8)); }, both));
  }
  return {worst < 1e-3, "worst relative error " + fmt("%.3g", worst) + " (" + worst_name + ")"};
}

Outcome em_properties() {
  int monotone_fail = 0;
  for (int seed = 0; seed < 100; ++seed) {
    Rng rng(5000 + static_cast<std::uint64_t>(seed));
    std::vector<double> scores(50 + static_cast<std::size_t>(seed));
    for (double& v : scores) v = uniform01(rng);
    const GmmModel m = fit_gmm_1d(scores);
    for (std::size_t i = 1; i < m.log_likelihood_trace.size(); ++i)
      if (m.log_likelihood_trace[i] < m.log_likelihood_trace[i - 1] - 1e-9) {
        ++monotone_fail;
        break;
      }
  }
  int recovered = 0;
  for (int seed = 0; seed < 100; ++seed) {
    Rng rng(6000 + static_cast<std::uint64_t>(seed));
    std::normal_distribution<double> noise(0.0, 0.01);
    std::vector<double> scores;
    for (int i = 0; i < 100; ++i) scores.push_back(0.3 + noise(rng));
    for (int i = 0; i < 100; ++i) scores.push_back(0.9 + noise(rng));
    const GmmModel m = fit_gmm_1d(scores);
    recovered += std::abs(m.unknown.mean - 0.3) < 0.02 && std::abs(m.known.mean - 0.9) < 0.02;
  }
  return {monotone_fail == 0 && recovered >= 95,
          std::to_string(100 - monotone_fail) + "/100 monotone, " + std::to_string(recovered) +
              "/100 recovered"};
}

Outcome hungarian_oracle() {
  Rng rng(7000);
  int mismatches = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = 1 + trial % 7;
    Eigen::MatrixXd m(n, n);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<double>(uniform_index(rng, 100));
    mismatches += hungarian(m).total != oracle::brute_force_max(m);
  }
  return {mismatches == 0, std::to_string(1000 - mismatches) + "/1000 exact"};
}

Outcome cluster_acc_protocol() {
  Rng rng(8000);
  std::vector<int> y(200), p(200), d(200);
  for (std::size_t i = 0; i < 200; ++i) {
    y[i] = static_cast<int>(uniform_index(rng, 8));
    p[i] = rng() % 3 == 0 ? static_cast<int>(uniform_index(rng, 8)) : (y[i] + 3) % 8;
    d[i] = static_cast<int>(uniform_index(rng, 2));
  }
  const std::set<int> old{0, 1, 2, 3};
  const nlohmann::json base = cluster_acc(y, p, old, d).to_json()["scores"];
  int invariant = 0;
  for (int t = 0; t < 100; ++t) {
    std::vector<int> perm(8);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<int> q(200);
    for (std::size_t i = 0; i < 200; ++i) q[i] = perm[static_cast<std::size_t>(p[i])];
    invariant += cluster_acc(y, q, old, d).to_json()["scores"] == base;
  }
  const std::vector<int> hy{0, 0, 1, 1, 2, 2}, hp{1, 1, 0, 0, 2, 0}, hd(6, 0);
  const double hand = *cluster_acc(hy, hp, {0}, hd).accuracy("overall", "All");
  return {invariant == 100 && hand == 5.0 / 6,
          std::to_string(invariant) + "/100 relabelings invariant, hand case " + fmt("%.6f", hand)};
}

Outcome domain_separation() {
  const RunConfig defaults;
  double total = 0;
  std::ostringstream os;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    SyntheticSpec spec;
    spec.seed = seed;
    const DatasetSplit split = generate_benchmark(spec);
    DescriptorOptions dopt;
    dopt.log_amplitude = defaults.domain_sep.log_amplitude;
    std::vector<AmplitudeDescriptor> desc;
    for (const auto& s : split.labeled) desc.push_back(amplitude_descriptor(s.image, s.id, dopt));
    const AnchorSet anchors(std::move(desc));
    std::vector<ImageTensor> images;
    std::vector<std::string> ids;
    for (const auto& s : split.unlabeled) {
      images.push_back(s.image);
      ids.push_back(s.id);
    }
    PartitionOptions popt;
    popt.k = defaults.domain_sep.k;
    popt.descriptor = dopt;
    const DomainPartition part = partition(images, ids, anchors, popt);
    std::size_t agree = 0;
    for (std::size_t i = 0; i < split.unlabeled.size(); ++i)
      agree += (part.samples[i].label == Domain::unknown) == (split.unlabeled[i].domain == 1);
    const double acc = static_cast<double>(agree) / static_cast<double>(split.unlabeled.size());
    os << (seed ? ", " : "") << fmt("%.4f", acc);
    total += acc;
  }
  const double mean = total / 3;
  return {mean >= 0.90, "mean accuracy " + fmt("%.4f", mean) + " (" + os.str() + ")"};
}

RunConfig desk_config(std::uint64_t seed) {
  RunConfig c;
  c.data.synthetic.seed = seed;
  c.train.seed = seed;
  return c;
}

Outcome comparative_experiment() {
  struct Variant {
    const char* name = "";
    std::function<void(RunConfig&)> apply;
    double sum = 0;
    std::string runs;
  };
  std::vector<Variant> variants(3);
  variants[0] = {"full", [](RunConfig&) {}, 0.0, {}};
  variants[1] = {"baseline", [](RunConfig& c) { c.set_baseline(); }, 0.0, {}};
  variants[2] = {"random-donor", [](RunConfig& c) { c.perturbation.class_aware = false; }, 0.0, {}};
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const DatasetSplit data = generate_benchmark(desk_config(seed).data.synthetic);
    for (auto& v : variants) {
      RunConfig c = desk_config(seed);
      v.apply(c);
      const TrainResult r = train(c, data);
      const double acc = r.final_report.accuracy("unknown", "All").value_or(0.0);
      v.sum += acc;
      v.runs += (seed ? "/" : "") + fmt("%.3f", acc);
    }
  }
  const double full = variants[0].sum / 3, base = variants[1].sum / 3, rnd = variants[2].sum / 3;
  std::ostringstream os;
  for (const auto& v : variants) os << v.name << " " << fmt("%.4f", v.sum / 3) << " [" << v.runs << "] ";
  os << "(need full >= baseline + 0.05 and full >= random-donor)";
  return {full >= base + 0.05 && full >= rnd, os.str()};
}

Outcome sampler_correctness() {
  Rng rng(9000);
  double shift_err = 0;
  for (int t = 0; t < 100; ++t) {
    DifficultyStats a, b;
    const double shift = uniform_range(rng, -10, 10);
    for (int c = 0; c < 8; ++c) {
      const double intra = uniform_range(rng, 0, 2), inter = uniform_range(rng, -1, 1);
      a.classes.push_back({1, intra, inter});
      b.classes.push_back({1, intra + shift, inter});
    }
    const auto pa = sampling_probs(a), pb = sampling_probs(b);
    for (std::size_t c = 0; c < 8; ++c) shift_err = std::max(shift_err, std::abs(pa[c] - pb[c]));
  }
  std::vector<long> counts(4, 0);
  const std::vector<double> uniform(4, 0.25);
  for (int i = 0; i < 10000; ++i) ++counts[static_cast<std::size_t>(sample_category(uniform, rng))];
  const double pvalue = oracle::chi_square_p(counts, uniform);
  bool exact_uniform = true;
  for (int C : {1, 2, 4, 8}) {
    DifficultyStats s;
    for (int c = 0; c < C; ++c) s.classes.push_back({3, 0.4, 0.1});
    for (double v : sampling_probs(s)) exact_uniform = exact_uniform && v == 1.0 / C;
  }
  return {shift_err <= 1e-12 && pvalue > 0.01 && exact_uniform,
          "shift error " + fmt("%.3g", shift_err) + ", chi-square p " + fmt("%.4f", pvalue) +
              (exact_uniform ? ", equal difficulty exactly uniform" : ", equal difficulty NOT uniform")};
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / "freqdisc_acceptance_determinism";
  fs::remove_all(root);
  fs::create_directories(root);
  std::ofstream(root / "run.ini") << "[data]\nper_class = 10\n[train]\nepochs = 3\nseed = 4\n";
  std::string csv[2];
  for (int i = 0; i < 2; ++i) {
    CommandOptions o;
    o.config = root / "run.ini";
    o.out = (root / ("run" + std::to_string(i))).string();
    std::ostringstream sink;
    auto* old = std::cout.rdbuf(sink.rdbuf());
    cmd_train(o);
    std::cout.rdbuf(old);
    csv[i] = slurp(fs::path(o.out) / "metrics.csv");
  }
  const bool same = !csv[0].empty() && csv[0] == csv[1];
  const std::size_t lines = static_cast<std::size_t>(std::count(csv[0].begin(), csv[0].end(), '\n'));
  fs::remove_all(root);
  return {same, std::to_string(lines) + " metrics lines, " + (same ? "byte-identical" : "differ")};
}

}  // namespace

int main(int argc, char** argv) {
  struct Criterion {
    int id;
    const char* name;
    Outcome (*run)();
  };
  const Criterion all[] = {{1, "spectral correctness", spectral_correctness},
                           {2, "gradient suite", gradient_suite},
                           {3, "EM properties", em_properties},
                           {4, "Hungarian oracle equivalence", hungarian_oracle},
                           {5, "ClusterAcc protocol", cluster_acc_protocol},
                           {6, "domain separation quality", domain_separation},
                           {7, "comparative desk experiment", comparative_experiment},
                           {8, "sampler correctness", sampler_correctness},
                           {9, "determinism", determinism}};
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::stoi(argv[i]));
  int failures = 0;
  for (const auto& c : all) {
    if (!selected.empty() && !selected.count(c.id)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("criterion %d %s: %s  %s  [%.1f s]\n", c.id, c.name, o.pass ? "PASS" : "FAIL",
                o.detail.c_str(), secs);
    std::fflush(stdout);
    failures += !o.pass;
  }
  return failures == 0 ? 0 : 1;
}
