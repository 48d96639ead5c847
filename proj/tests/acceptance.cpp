// Acceptance checks: one PASS/FAIL line per criterion with measured runtimes.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "mtensor/classifier.hpp"
#include "mtensor/cli.hpp"
#include "mtensor/data_io.hpp"
#include "mtensor/starm.hpp"
#include "mtensor/tsvdm.hpp"

using namespace mtensor;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
  std::vector<double> values;  // numeric fingerprint for the determinism check
  std::string bytes;           // textual outputs for the determinism check
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

DenseTensor gaussian(const Shape& shape, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  DenseTensor t(shape);
  for (double& v : t.data()) v = normal(rng);
  return t;
}

DenseTensor random_tensor(const Shape& shape, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return gaussian(shape, rng);
}

RealMatrix random_matrix(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  RealMatrix m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = normal(rng);
  return m;
}

TransformSet uniform(const Shape& shape, TransformKind kind, std::uint64_t seed, const DenseTensor* data = nullptr) {
  std::vector<ModeTransform> modes;
  std::size_t mode = 3;
  for (std::size_t n : shape.trailing()) {
    switch (kind) {
      case TransformKind::identity: modes.push_back(build_identity(n)); break;
      case TransformKind::dft: modes.push_back(build_dft(n)); break;
      case TransformKind::dct: modes.push_back(build_dct(n)); break;
      case TransformKind::haar: modes.push_back(build_haar(n)); break;
      case TransformKind::banded: modes.push_back(build_banded(n, std::min<std::size_t>(3, n))); break;
      case TransformKind::random_orthogonal: modes.push_back(build_random_orthogonal(n, seed + mode)); break;
      case TransformKind::data_dependent: modes.push_back(build_data_dependent(*data, mode)); break;
      case TransformKind::roi_dependent: {
        DenseTensor labels(data->shape());
        for (std::size_t i = 0; i < labels.numel(); ++i) labels.data()[i] = static_cast<double>(1 + i % 2);
        modes.push_back(build_roi_dependent(*data, labels, 1, mode));
        break;
      }
      case TransformKind::explicit_matrix: {
        const auto nn = static_cast<Eigen::Index>(n);
        modes.push_back(ModeTransform::from_matrix(random_matrix(n, seed + mode) + 4.0 * RealMatrix::Identity(nn, nn)));
        break;
      }
    }
    ++mode;
  }
  return TransformSet(std::move(modes));
}

double rel(double a, double b, double floor) { return std::abs(a - b) / std::max(std::abs(b), floor); }

class Workspace {
 public:
  Workspace() {
    path_ = fs::temp_directory_path() / ("mtensor_acceptance_" + std::to_string(::getpid()));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~Workspace() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

// ---- 1 ----------------------------------------------------------------------

Outcome worked_example(std::size_t threads) {
  DenseTensor a(Shape{2, 2, 2}, {1, 0, 2, -1, -1, 1, 1, 1});
  DenseTensor b(Shape{2, 1, 2}, {-1, 1, 0, 1});
  RealMatrix m(2, 2);
  m << 3, 2, 1, 1;
  const TransformSet t(std::vector<ModeTransform>{ModeTransform::from_matrix(m)});
  const ComplexTensor c_hat = facewise_product(forward(a, t), forward(b, t), threads).values;
  const DenseTensor c = starm_product(a, b, t, threads);
  const double want_hat[] = {37, -11, 6, -1};
  const double want[] = {25, -9, -19, 8};
  Outcome o;
  double worst = 0.0;
  for (std::size_t i = 0; i < 4; ++i) {
    worst = std::max(worst, std::abs(c_hat.data()[i] - Complex(want_hat[i])));
    worst = std::max(worst, std::abs(c.data()[i] - want[i]));
    o.values.push_back(c_hat.data()[i].real());
    o.values.push_back(c.data()[i]);
  }
  o.pass = worst <= 1e-12;
  o.detail = "max deviation " + fmt("%.1e", worst) + " (tol 1e-12)";
  return o;
}

// ---- 2 ----------------------------------------------------------------------

// Random t-rank-k tensors near A_k: perturbed factors, so every competitor
// has t-rank at most k.
DenseTensor competitor(const TSVDMFactors& fk, const TransformSet& t, double eps, std::mt19937_64& rng) {
  const DenseTensor sv = starm_product(fk.S, starm_transpose(fk.V, t), t);
  const double su = frobenius_norm(fk.U) * eps / std::sqrt(static_cast<double>(fk.U.numel()));
  const double ss = frobenius_norm(sv) * eps / std::sqrt(static_cast<double>(sv.numel()));
  const DenseTensor u = fk.U + su * gaussian(fk.U.shape(), rng);
  const DenseTensor w = sv + ss * gaussian(sv.shape(), rng);
  return starm_product(u, w, t);
}

Outcome eckart_young(std::size_t threads) {
  std::mt19937_64 rng(2024);
  const TransformKind kinds[] = {TransformKind::dct, TransformKind::haar, TransformKind::random_orthogonal};
  const std::size_t trailing[] = {1, 2, 4};
  Outcome o;
  double worst = 0.0;
  std::size_t beaten = 0, contests = 0;
  for (std::size_t inst = 0; inst < 50; ++inst) {
    std::uniform_int_distribution<std::size_t> side(2, 6), pick(0, 2);
    const Shape shape{side(rng), side(rng), trailing[pick(rng)], trailing[pick(rng)]};
    const TransformKind kind = kinds[inst % 3];
    const TransformSet t = uniform(shape, kind, 100 + inst);
    const DenseTensor a = gaussian(shape, rng);
    const TSVDMFactors f = tsvdm(a, t, threads);
    const std::vector<double> tubes = singular_tube_norms(f);
    const double c = t.scale();
    const double norm_a = frobenius_norm(a);
    for (std::size_t k = 1; k <= std::min(shape[0], shape[1]); ++k) {
      const TSVDMFactors fk = truncate(f, k);
      const double direct = frobenius_norm(a - reconstruct(fk));
      double tail_hat = 0.0, tail = 0.0;
      for (Eigen::Index s = 0; s < f.singular_values.cols(); ++s)
        for (Eigen::Index i = static_cast<Eigen::Index>(k); i < f.singular_values.rows(); ++i)
          tail_hat += f.singular_values(i, s) * f.singular_values(i, s);
      for (std::size_t i = k; i < tubes.size(); ++i) tail += tubes[i] * tubes[i];
      const double formula = std::sqrt(tail_hat / (c * c));
      const double floor = 1e-6 * norm_a;  // full rank: both sides are rounding noise
      worst = std::max({worst, rel(formula, direct, floor), rel(std::sqrt(tail), direct, floor)});
      o.values.push_back(direct);
      for (int trial = 0; trial < 100; ++trial) {
        const double eps = 0.001 * std::pow(10.0, 3.0 * (trial % 10) / 9.0);  // 1e-3 .. 1
        const double other = frobenius_norm(a - competitor(fk, t, eps, rng));
        ++contests;
        if (direct <= other * (1.0 + 1e-12)) ++beaten;
      }
    }
  }
  o.pass = worst <= 1e-8 && beaten == contests;
  o.detail = "max relative error " + fmt("%.1e", worst) + " (tol 1e-8), A_k best in " + std::to_string(beaten) + "/" +
             std::to_string(contests) + " contests";
  return o;
}

// ---- 3 ----------------------------------------------------------------------

Outcome orthogonal_invariance(std::size_t threads) {
  std::mt19937_64 rng(303);
  const TransformKind kinds[] = {TransformKind::identity, TransformKind::dft, TransformKind::dct,
                                 TransformKind::haar, TransformKind::random_orthogonal, TransformKind::data_dependent,
                                 TransformKind::roi_dependent, TransformKind::explicit_matrix};
  Outcome o;
  double worst_spatial = 0.0, worst_hat = 0.0, worst_literal = 0.0;
  for (std::size_t inst = 0; inst < 50; ++inst) {
    std::uniform_int_distribution<std::size_t> side(2, 5);
    const std::size_t n = side(rng);
    const Shape shape{n, side(rng), 4, 2};
    const TransformKind kind = kinds[inst % 8];
    const DenseTensor a = gaussian(shape, rng);
    TransformSet t;
    if (kind == TransformKind::explicit_matrix) {
      // Scaled orthogonal matrices: c = 2 * 3.
      std::vector<ModeTransform> modes;
      modes.push_back(ModeTransform::from_matrix(2.0 * build_random_orthogonal(4, inst).real_matrix()));
      modes.push_back(ModeTransform::from_matrix(3.0 * build_random_orthogonal(2, inst + 1).real_matrix()));
      t = TransformSet(std::move(modes));
    } else {
      t = uniform(shape, kind, 300 + inst, &a);
    }
    if (!t.orthogonal_multiple()) {
      o.pass = false;
      o.detail = std::string(kind_name(kind)) + " is not an orthogonal multiple";
      return o;
    }
    const DenseTensor q = tsvdm(gaussian(Shape{n, n, 4, 2}, rng), t, threads).U;
    const DenseTensor qa = starm_product(q, a, t, threads);
    const DenseTensor aq = starm_product(starm_transpose(a, t), q, t, threads);
    const double c = t.scale();
    const double na = frobenius_norm(a);
    worst_spatial = std::max({worst_spatial, rel(frobenius_norm(qa), na, 0.0), rel(frobenius_norm(aq), na, 0.0)});
    worst_hat = std::max(worst_hat, rel(frobenius_norm(forward(qa, t).values), c * na, 0.0));
    if (c == 1.0) worst_literal = std::max(worst_literal, rel(frobenius_norm(qa), c * na, 0.0));
    o.values.push_back(frobenius_norm(qa));
  }
  o.pass = worst_spatial <= 1e-10 && worst_hat <= 1e-10 && worst_literal <= 1e-10;
  o.detail = "||Q*A|| = ||A|| to " + fmt("%.1e", worst_spatial) + ", transform-domain ||(Q*A)^|| = c||A|| to " +
             fmt("%.1e", worst_hat) + ", c = 1 kinds ||Q*A|| = c||A|| to " + fmt("%.1e", worst_literal) +
             " (tol 1e-10)";
  return o;
}

// ---- 4 ----------------------------------------------------------------------

Outcome tube_ordering(std::size_t threads) {
  std::mt19937_64 rng(404);
  const TransformKind kinds[] = {TransformKind::identity, TransformKind::dft, TransformKind::dct,
                                 TransformKind::haar, TransformKind::random_orthogonal, TransformKind::data_dependent,
                                 TransformKind::roi_dependent};
  const Shape shapes[] = {Shape{5, 4, 4}, Shape{3, 6, 2, 4}, Shape{4, 4, 2, 2, 2}, Shape{6, 3, 8}, Shape{2, 5, 4, 2}};
  Outcome o;
  std::size_t ordered = 0, decomps = 0;
  double worst = 0.0;
  for (std::size_t rep = 0; rep < 4; ++rep)
    for (const Shape& shape : shapes)
      for (TransformKind kind : kinds) {
        const DenseTensor a = gaussian(shape, rng);
        const TransformSet t = uniform(shape, kind, 400 + decomps, &a);
        const std::vector<double> norms = singular_tube_norms(tsvdm(a, t, threads));
        ++decomps;
        bool ok = true;
        for (std::size_t i = 1; i < norms.size(); ++i) ok = ok && norms[i] <= norms[i - 1] * (1.0 + 1e-12);
        ordered += ok ? 1 : 0;
        if (t.scale() == 1.0) {
          double sum = 0.0;
          for (double v : norms) sum += v * v;
          const double na = frobenius_norm(a);
          worst = std::max(worst, rel(sum, na * na, 0.0));
        }
        o.values.insert(o.values.end(), norms.begin(), norms.end());
      }
  o.pass = ordered == decomps && worst <= 1e-10;
  o.detail = "ordered " + std::to_string(ordered) + "/" + std::to_string(decomps) + " decompositions, ||A||^2 = sum " +
             "||s_i||^2 to " + fmt("%.1e", worst) + " (tol 1e-10)";
  return o;
}

// ---- 5 ----------------------------------------------------------------------

Outcome tensor_beats_matrix(std::size_t threads) {
  std::mt19937_64 rng(505);
  const Shape shape{4, 10, 4, 4};
  const TransformSet t = uniform(shape, TransformKind::dct, 0);
  Outcome o;
  double slack = 1e300;
  for (std::size_t inst = 0; inst < 50; ++inst) {
    const DenseTensor a = gaussian(shape, rng);
    const TSVDMFactors f = tsvdm(a, t, threads);
    Eigen::JacobiSVD<RealMatrix> svd(vectorize_samples(a));
    const Eigen::VectorXd sigma = svd.singularValues();
    for (std::size_t k = 1; k <= 4; ++k) {
      const double tensor_err = frobenius_norm(a - reconstruct(truncate(f, k)));
      const double matrix_err = sigma.tail(sigma.size() - static_cast<Eigen::Index>(k)).norm();
      slack = std::min(slack, matrix_err - tensor_err);
      o.values.push_back(tensor_err);
    }
  }
  o.pass = slack >= -1e-10;
  o.detail = "min(matrix error - tensor error) = " + fmt("%.3e", slack) + " over 50 tensors, k = 1..4 (need >= -1e-10)";
  return o;
}

// ---- 6 ----------------------------------------------------------------------

Outcome round_trips(std::size_t /*threads*/) {
  const Shape shapes[] = {Shape{7}, Shape{3, 5}, Shape{2, 3, 4}, Shape{3, 2, 4, 2}, Shape{2, 3, 2, 4, 2}};
  const TransformKind kinds[] = {TransformKind::identity, TransformKind::dft, TransformKind::dct,
                                 TransformKind::haar, TransformKind::banded, TransformKind::random_orthogonal,
                                 TransformKind::data_dependent, TransformKind::roi_dependent,
                                 TransformKind::explicit_matrix};
  Outcome o;
  bool fold_exact = true, tnsr_exact = true;
  double worst = 0.0;
  std::size_t transform_cases = 0;
  std::uint64_t seed = 600;
  for (const Shape& shape : shapes) {
    const DenseTensor a = random_tensor(shape, seed++);
    for (std::size_t k = 1; k <= shape.order(); ++k) fold_exact = fold_exact && mode_fold(mode_unfold(a, k), k, shape) == a;
    std::stringstream buf;
    write_tnsr(buf, a);
    tnsr_exact = tnsr_exact && read_tnsr(buf) == a;
    if (shape.order() < 3) continue;
    for (TransformKind kind : kinds) {
      const TransformSet t = uniform(shape, kind, seed++, &a);
      for (Realization how : {Realization::automatic, Realization::explicit_matrix}) {
        const DenseTensor back = inverse(forward(a, t, how), how);
        const double err = frobenius_norm(back - a) / frobenius_norm(a);
        worst = std::max(worst, err);
        o.values.push_back(err);
        ++transform_cases;
      }
    }
  }
  o.pass = fold_exact && tnsr_exact && worst <= 1e-10;
  o.detail = std::string("fold/unfold ") + (fold_exact ? "exact" : "NOT exact") + ", TNSR " +
             (tnsr_exact ? "bit-exact" : "NOT exact") + ", forward/inverse max relative error " + fmt("%.1e", worst) +
             " over " + std::to_string(transform_cases) + " cases (tol 1e-10)";
  return o;
}

// ---- 7 ----------------------------------------------------------------------

struct SweepRow {
  std::string transform;
  std::size_t k;
  double accuracy;
};

std::vector<SweepRow> parse_sweep(const std::string& csv) {
  std::vector<SweepRow> rows;
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    std::istringstream f(line);
    std::string name, k, acc;
    std::getline(f, name, ',');
    std::getline(f, k, ',');
    std::getline(f, acc, ',');
    rows.push_back({name, std::stoul(k), acc == "error" ? -1.0 : std::stod(acc)});
  }
  return rows;
}

double best(const std::vector<SweepRow>& rows, const std::string& name) {
  double b = -1.0;
  for (const auto& r : rows)
    if (r.transform == name) b = std::max(b, r.accuracy);
  return b;
}

Outcome planted_experiment(std::size_t threads) {
  Workspace ws;
  Outcome o;
  double tensor_sum = 0.0, matrix_sum = 0.0;
  std::string per_seed;
  auto sweep = [&](double sigma, std::uint64_t seed, const std::vector<std::size_t>& ks) {
    cli::SynthOptions s;
    s.kind = "planted";
    s.out = (ws / ("planted_" + std::to_string(seed) + "_" + fmt("%g", sigma))).string();
    s.trials = 60;
    s.shape = {16, 16, 4, 8};
    s.rank = 2;
    s.sigma = sigma;
    s.seed = seed;
    std::ostringstream so, se;
    if (cli::cmd_synth(s, so, se) != 0) throw std::runtime_error(se.str());
    cli::SweepOptions w;
    w.data.input = s.out + "/samples.tnsr";
    w.data.labels = s.out + "/labels.csv";
    w.transforms = {"dct", "matrix"};
    w.ks = ks;
    w.seed = seed;
    w.threads = threads;
    std::ostringstream out, err;
    if (cli::cmd_sweep(w, out, err) != 0) throw std::runtime_error(err.str());
    o.bytes += out.str();
    return parse_sweep(out.str());
  };
  const std::vector<std::size_t> ks{1, 2, 3, 4, 6, 8};
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto rows = sweep(4.0, seed, ks);
    const double bt = best(rows, "dct"), bm = best(rows, "matrix");
    tensor_sum += bt;
    matrix_sum += bm;
    per_seed += (seed > 1 ? " " : "") + fmt("%.3f", bt) + "/" + fmt("%.3f", bm);
    o.values.push_back(bt);
    o.values.push_back(bm);
  }
  const auto clean = sweep(0.0, 1, {2});
  double noiseless = -1.0;
  for (const auto& r : clean)
    if (r.transform == "dct") noiseless = r.accuracy;
  const double diff = (tensor_sum - matrix_sum) / 5.0;
  o.pass = diff >= 0.0 && noiseless == 1.0;
  o.detail = "sigma 4, best-k tensor/matrix per seed " + per_seed + ", mean difference " + fmt("%.3f", diff) +
             " (need >= 0), noiseless accuracy " + fmt("%.3f", noiseless) + " (need 1.0)";
  return o;
}

// ---- 8 ----------------------------------------------------------------------

Outcome digits(std::size_t threads) {
  Workspace ws;
  Outcome o;
  fs::path images, labels;
  std::string source;
  const char* mnist = std::getenv("MNIST_DIR");
  if (mnist && fs::exists(fs::path(mnist) / "train-images-idx3-ubyte") &&
      fs::exists(fs::path(mnist) / "train-labels-idx1-ubyte")) {
    images = fs::path(mnist) / "train-images-idx3-ubyte";
    labels = fs::path(mnist) / "train-labels-idx1-ubyte";
    source = "MNIST";
  } else {
    const DigitImages d = synth_digits(300, 8);
    images = ws / "images.idx";
    labels = ws / "labels.idx";
    write_idx_images(images, d.images);
    write_idx_labels(labels, d.labels);
    source = "synthetic 0/1 glyphs";
  }
  const int wanted[] = {0, 1};
  const LabeledDataset ds = read_idx(images, labels, wanted, 300);
  // First 100 of each digit train, the remaining 200 of each test.
  std::vector<DenseTensor> train;
  std::vector<std::size_t> test_cols;
  std::vector<int> truth;
  for (int d : wanted) {
    std::vector<std::size_t> cols;
    for (std::size_t j = 0; j < ds.trials(); ++j)
      if (ds.labels[j] == d) cols.push_back(j);
    train.push_back(select_lateral_slices(ds.samples, std::span<const std::size_t>(cols.data(), 100)));
    for (std::size_t i = 100; i < cols.size(); ++i) {
      test_cols.push_back(cols[i]);
      truth.push_back(d);
    }
  }
  const DenseTensor test = select_lateral_slices(ds.samples, test_cols);
  const TransformSet t = uniform(test.shape(), TransformKind::dft, 0);
  const std::size_t ks[] = {2, 2};
  const std::vector<ClassBasis> bases = build_local_bases(train, ks, t, wanted, threads);
  const std::vector<ClassificationResult> results = classify_all(test, bases, threads);
  std::size_t separable = 0, smaller = 0, correct = 0;
  for (std::size_t j = 0; j < results.size(); ++j) {
    const double r_true = results[j].residuals[static_cast<std::size_t>(truth[j])];
    const double r_other = results[j].residuals[static_cast<std::size_t>(1 - truth[j])];
    if (std::abs(r_true - r_other) > 1e-12 * std::max(r_true, r_other)) {
      ++separable;
      smaller += r_true < r_other ? 1 : 0;
    }
    correct += results[j].predicted == truth[j] ? 1 : 0;
    o.values.push_back(r_true);
    o.values.push_back(r_other);
  }
  const double frac = separable ? static_cast<double>(smaller) / static_cast<double>(separable) : 0.0;
  const double acc = static_cast<double>(correct) / static_cast<double>(results.size());
  o.pass = frac >= 0.9 && acc >= 0.95;
  o.detail = source + ", 100 training images per digit, " + std::to_string(results.size()) +
             " test images: true-class residual smaller for " + fmt("%.3f", frac) + " of " +
             std::to_string(separable) + " separable (need >= 0.9), accuracy " + fmt("%.3f", acc) + " (need >= 0.95)";
  return o;
}

// ---- 9 ----------------------------------------------------------------------

Outcome roi_ranking(std::size_t threads) {
  Workspace ws;
  Outcome o;
  std::size_t wins = 0;
  std::string per_seed;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    cli::SynthOptions s;
    s.kind = "roi";
    s.out = (ws / ("roi_" + std::to_string(seed))).string();
    s.seed = seed;
    std::ostringstream so, se;
    if (cli::cmd_synth(s, so, se) != 0) throw std::runtime_error(se.str());
    cli::RoiSweepOptions r;
    r.data.input = s.out + "/samples.tnsr";
    r.data.labels = s.out + "/labels.csv";
    r.data.roi = s.out + "/roi.tnsr";
    r.k = 1;
    r.seed = seed;
    r.threads = threads;
    std::ostringstream out, err;
    if (cli::cmd_roi_sweep(r, out, err) != 0) throw std::runtime_error(err.str());
    o.bytes += out.str();
    std::istringstream in(out.str());
    std::string line;
    std::getline(in, line);
    std::vector<double> acc;
    while (std::getline(in, line)) acc.push_back(std::stod(line.substr(line.find(',') + 1)));
    bool top = acc.size() == 4;
    for (std::size_t l = 0; top && l < acc.size(); ++l)
      if (l != 1) top = acc[1] > acc[l];
    wins += top ? 1 : 0;
    per_seed += std::string(seed > 1 ? "; " : "");
    for (std::size_t l = 0; l < acc.size(); ++l) per_seed += (l ? " " : "") + fmt("%.3f", acc[l]);
    o.values.insert(o.values.end(), acc.begin(), acc.end());
  }
  o.pass = wins == 5;
  o.detail = "planted label 2 strictly best in " + std::to_string(wins) + "/5 seeds (accuracies for labels 1-4: " +
             per_seed + ")";
  return o;
}

struct Criterion {
  int id;
  std::string name;
  double limit_s;  // 0: no runtime bound
  std::function<Outcome(std::size_t)> run;
};

Outcome guarded(const Criterion& c, std::size_t threads) {
  try {
    return c.run(threads);
  } catch (const std::exception& e) {
    Outcome o;
    o.pass = false;
    o.detail = std::string("exception: ") + e.what();
    return o;
  }
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "worked example exactness", 0.001, worked_example},
      {2, "Eckart-Young identity and optimality", 30.0, eckart_young},
      {3, "orthogonal invariance", 10.0, orthogonal_invariance},
      {4, "singular tube ordering and norm identity", 0.0, tube_ordering},
      {5, "tensor beats matrix representation", 0.0, tensor_beats_matrix},
      {6, "round trips through order 5", 0.0, round_trips},
      {7, "planted two-class experiment", 120.0, planted_experiment},
      {8, "digit 0 vs 1 t-product classification", 60.0, digits},
      {9, "ROI ranking", 120.0, roi_ranking},
  };

  int failures = 0;
  std::vector<Outcome> first;
  for (const Criterion& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o = guarded(c, 1);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::string timing = fmt("%.4f s", secs);
    if (c.limit_s > 0.0) {
      timing += ", limit " + fmt("%g s", c.limit_s);
      if (secs >= c.limit_s) {
        o.pass = false;
        timing += " EXCEEDED";
      }
    }
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << c.id << ": " << c.name << ": " << o.detail << " ["
              << timing << "]" << std::endl;
    failures += o.pass ? 0 : 1;
    first.push_back(std::move(o));
  }

  // 10: rerun everything at one thread (bit-identical) and at four (within 1e-12).
  const auto t0 = std::chrono::steady_clock::now();
  bool identical = true;
  double drift = 0.0;
  std::string where;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const Outcome again = guarded(criteria[i], 1);
    const Outcome wide = guarded(criteria[i], 4);
    const bool same = again.values == first[i].values && again.bytes == first[i].bytes &&
                      again.detail == first[i].detail;
    if (!same) {
      identical = false;
      where += " " + std::to_string(criteria[i].id);
    }
    if (wide.values.size() != first[i].values.size()) {
      drift = 1e300;
    } else {
      for (std::size_t j = 0; j < wide.values.size(); ++j)
        drift = std::max(drift, std::abs(wide.values[j] - first[i].values[j]) /
                                    std::max(1.0, std::abs(first[i].values[j])));
    }
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool pass10 = identical && drift <= 1e-12;
  std::cout << (pass10 ? "PASS" : "FAIL") << " criterion 10: determinism: single-thread rerun "
            << (identical ? "bit-identical" : "differs in criteria" + where) << ", 4-thread max relative drift "
            << fmt("%.1e", drift) << " (tol 1e-12) [" << fmt("%.4f s", secs) << "]" << std::endl;
  failures += pass10 ? 0 : 1;

  std::cout << (failures ? "FAILED: " + std::to_string(failures) + " of 10 criteria" : "all 10 criteria passed")
            << std::endl;
  return failures ? 1 : 0;
}
