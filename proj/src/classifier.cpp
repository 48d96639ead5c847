#include "mtensor/classifier.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mtensor/parallel.hpp"
#include "mtensor/starm.hpp"

namespace mtensor {

namespace {

std::vector<int> default_ids(std::span<const int> ids, std::size_t n) {
  if (!ids.empty()) {
    if (ids.size() != n) throw std::invalid_argument("class id count does not match class tensor count");
    return {ids.begin(), ids.end()};
  }
  std::vector<int> out(n);
  std::iota(out.begin(), out.end(), 0);
  return out;
}

void check_class_shapes(std::span<const DenseTensor> class_tensors) {
  if (class_tensors.empty()) throw std::invalid_argument("at least one class tensor is required");
  const Shape ref = class_tensors.front().shape();
  if (ref.order() < 2) throw ShapeError("class tensors must have samples along mode 2");
  for (const auto& c : class_tensors)
    if (c.shape().order() != ref.order() || c.shape().with_extent(1, 1) != ref.with_extent(1, 1))
      throw ShapeError("class tensor " + c.shape().str() + " does not match " + ref.str() +
                       " outside the trial dimension");
}

// Column norms of a stack of lateral slices: out[j] = ||X(:, j, ...)||_F.
std::vector<double> lateral_norms(const DenseTensor& x) {
  std::vector<double> acc(x.cols(), 0.0);
  for (std::size_t s = 0; s < x.slice_count(); ++s) {
    auto sl = x.slice(s);
    for (Eigen::Index j = 0; j < sl.cols(); ++j) acc[static_cast<std::size_t>(j)] += sl.col(j).squaredNorm();
  }
  for (double& v : acc) v = std::sqrt(v);
  return acc;
}

ComplexTensor project_hat(const ComplexTensor& samples_hat, const ClassBasis& b) {
  ComplexTensor p(samples_hat.shape());
  for (std::size_t s = 0; s < samples_hat.slice_count(); ++s) {
    const auto u = b.basis_hat.slice(s);
    p.slice(s).noalias() = u * (u.adjoint() * samples_hat.slice(s));
  }
  return p;
}

void check_sample_shape(const DenseTensor& samples, const ClassBasis& b) {
  if (samples.order() != b.basis.order() || samples.shape().with_extent(1, 1) != b.basis.shape().with_extent(1, 1))
    throw ShapeError("sample shape " + samples.shape().str() + " does not match basis " + b.basis.shape().str());
}

std::vector<double> residuals_from_hat(const DenseTensor& samples, const ComplexTensor& samples_hat,
                                       const ClassBasis& b) {
  const DenseTensor p = inverse({project_hat(samples_hat, b), b.transform});
  return lateral_norms(samples - p);
}

int argmin_class(std::span<const double> res, std::span<const int> ids) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < res.size(); ++i)
    if (res[i] < res[best] || (res[i] == res[best] && ids[i] < ids[best])) best = i;
  return ids[best];
}

}  // namespace

std::size_t DatasetSplit::train_count() const {
  std::size_t n = 0;
  for (const auto& t : train) n += t.cols();
  return n;
}

ClassBasis basis_from_factors(const TSVDMFactors& f, int class_id, std::size_t k) {
  if (k < 1 || k > f.U.dim(1))
    throw std::invalid_argument("basis truncation k = " + std::to_string(k) + " outside [1, " +
                                std::to_string(f.U.dim(1)) + "]");
  std::vector<std::size_t> keep(k);
  std::iota(keep.begin(), keep.end(), std::size_t{0});
  ClassBasis b;
  b.class_id = class_id;
  b.k = k;
  b.basis = select_lateral_slices(f.U, keep);
  b.transform = f.transform;
  b.basis_hat = forward(b.basis, f.transform).values;
  return b;
}

std::vector<ClassBasis> build_local_bases(std::span<const DenseTensor> class_tensors, std::span<const std::size_t> ks,
                                          const TransformSet& t, std::span<const int> class_ids, std::size_t threads) {
  check_class_shapes(class_tensors);
  if (ks.size() != class_tensors.size())
    throw std::invalid_argument("one truncation k per class is required");
  const auto ids = default_ids(class_ids, class_tensors.size());
  for (std::size_t i = 0; i < ks.size(); ++i) {
    const std::size_t limit = std::min(class_tensors[i].dim(0), class_tensors[i].dim(1));
    if (ks[i] < 1 || ks[i] > limit)
      throw std::invalid_argument("class " + std::to_string(ids[i]) + ": k = " + std::to_string(ks[i]) +
                                  " outside [1, " + std::to_string(limit) + "]");
  }
  std::vector<ClassBasis> bases(class_tensors.size());
  parallel_for(class_tensors.size(), threads, [&](std::size_t i) {
    bases[i] = basis_from_factors(tsvdm(class_tensors[i], t), ids[i], ks[i]);
  });
  return bases;
}

DenseTensor project(const DenseTensor& samples, const ClassBasis& b) {
  check_sample_shape(samples, b);
  const auto hat = forward(samples, b.transform);
  return inverse({project_hat(hat.values, b), b.transform});
}

std::vector<double> residuals(const DenseTensor& samples, const ClassBasis& b) {
  check_sample_shape(samples, b);
  return residuals_from_hat(samples, forward(samples, b.transform).values, b);
}

ClassificationResult classify(const DenseTensor& sample, std::span<const ClassBasis> bases) {
  auto all = classify_all(sample, bases);
  if (all.size() != 1) throw ShapeError("classify expects a single lateral slice");
  return std::move(all.front());
}

std::vector<ClassificationResult> classify_all(const DenseTensor& samples, std::span<const ClassBasis> bases,
                                               std::size_t threads) {
  if (bases.empty()) throw std::invalid_argument("classify needs at least one class basis");
  for (const auto& b : bases) check_sample_shape(samples, b);
  std::vector<int> ids;
  for (const auto& b : bases) ids.push_back(b.class_id);

  // Bases usually share a transform; move the samples into it once.
  const TransformSet& shared = bases.front().transform;
  const bool one_domain = std::all_of(bases.begin(), bases.end(), [&](const ClassBasis& b) { return b.transform == shared; });
  ComplexTensor shared_hat;
  if (one_domain) shared_hat = forward(samples, shared).values;

  std::vector<std::vector<double>> per_basis(bases.size());
  parallel_for(bases.size(), threads, [&](std::size_t i) {
    per_basis[i] = one_domain ? residuals_from_hat(samples, shared_hat, bases[i]) : residuals(samples, bases[i]);
  });

  std::vector<ClassificationResult> out(samples.cols());
  for (std::size_t j = 0; j < out.size(); ++j) {
    out[j].residuals.resize(bases.size());
    for (std::size_t i = 0; i < bases.size(); ++i) out[j].residuals[i] = per_basis[i][j];
    out[j].predicted = argmin_class(out[j].residuals, ids);
  }
  return out;
}

Evaluation score_residuals(const std::vector<std::vector<double>>& residual_rows, std::span<const int> class_ids,
                           std::span<const int> truth) {
  if (residual_rows.size() != truth.size()) throw std::invalid_argument("one label per scored sample is required");
  if (truth.empty()) throw std::invalid_argument("cannot evaluate an empty test set");
  Evaluation e;
  e.class_ids.assign(class_ids.begin(), class_ids.end());
  e.confusion.assign(class_ids.size(), std::vector<std::size_t>(class_ids.size(), 0));
  auto index_of = [&](int id) -> std::size_t {
    auto it = std::find(class_ids.begin(), class_ids.end(), id);
    if (it == class_ids.end()) throw std::invalid_argument("test label " + std::to_string(id) + " has no class basis");
    return static_cast<std::size_t>(it - class_ids.begin());
  };
  for (std::size_t j = 0; j < truth.size(); ++j) {
    const int pred = argmin_class(residual_rows[j], class_ids);
    e.predictions.push_back(pred);
    e.confusion[index_of(truth[j])][index_of(pred)] += 1;
    if (pred == truth[j]) ++e.correct;
  }
  e.total = truth.size();
  e.accuracy = static_cast<double>(e.correct) / static_cast<double>(e.total);
  return e;
}

Evaluation evaluate(const DatasetSplit& split, std::span<const ClassBasis> bases, std::size_t threads) {
  const auto results = classify_all(split.test, bases, threads);
  std::vector<std::vector<double>> rows;
  rows.reserve(results.size());
  for (const auto& r : results) rows.push_back(r.residuals);
  std::vector<int> ids;
  for (const auto& b : bases) ids.push_back(b.class_id);
  return score_residuals(rows, ids, split.test_labels);
}

RealMatrix vectorize_samples(const DenseTensor& samples) {
  if (samples.order() < 2) throw ShapeError("samples must lie along mode 2");
  const std::size_t n1 = samples.dim(0);
  const std::size_t t = samples.dim(1);
  const std::size_t slices = samples.slice_count();
  RealMatrix m(n1 * slices, t);
  for (std::size_t s = 0; s < slices; ++s)
    m.block(static_cast<Eigen::Index>(s * n1), 0, static_cast<Eigen::Index>(n1), static_cast<Eigen::Index>(t)) =
        samples.slice(s);
  return m;
}

std::vector<MatrixClassBasis> build_matrix_bases(std::span<const DenseTensor> class_tensors,
                                                 std::span<const std::size_t> ks, std::span<const int> class_ids) {
  check_class_shapes(class_tensors);
  if (ks.size() != class_tensors.size()) throw std::invalid_argument("one truncation k per class is required");
  const auto ids = default_ids(class_ids, class_tensors.size());
  std::vector<MatrixClassBasis> out;
  for (std::size_t i = 0; i < class_tensors.size(); ++i) {
    const RealMatrix x = vectorize_samples(class_tensors[i]);
    const auto limit = static_cast<std::size_t>(std::min(x.rows(), x.cols()));
    if (ks[i] < 1 || ks[i] > limit)
      throw std::invalid_argument("matrix basis k = " + std::to_string(ks[i]) + " outside [1, " +
                                  std::to_string(limit) + "]");
    Eigen::JacobiSVD<RealMatrix> svd(x, Eigen::ComputeThinU);
    if (svd.info() != Eigen::Success) throw NumericalError("matrix SVD failed for class " + std::to_string(ids[i]));
    out.push_back({ids[i], svd.matrixU().leftCols(static_cast<Eigen::Index>(ks[i]))});
  }
  return out;
}

std::vector<double> matrix_residuals(const DenseTensor& samples, const MatrixClassBasis& b) {
  const RealMatrix x = vectorize_samples(samples);
  if (x.rows() != b.U.rows()) throw ShapeError("vectorized sample length does not match matrix basis");
  const RealMatrix r = x - b.U * (b.U.transpose() * x);
  std::vector<double> out(static_cast<std::size_t>(r.cols()));
  for (std::size_t j = 0; j < out.size(); ++j) out[j] = r.col(static_cast<Eigen::Index>(j)).norm();
  return out;
}

Evaluation evaluate_matrix(const DatasetSplit& split, std::span<const MatrixClassBasis> bases) {
  std::vector<std::vector<double>> per_class;
  std::vector<int> ids;
  for (const auto& b : bases) {
    per_class.push_back(matrix_residuals(split.test, b));
    ids.push_back(b.class_id);
  }
  std::vector<std::vector<double>> rows(split.test_count(), std::vector<double>(bases.size()));
  for (std::size_t j = 0; j < rows.size(); ++j)
    for (std::size_t i = 0; i < bases.size(); ++i) rows[j][i] = per_class[i][j];
  return score_residuals(rows, ids, split.test_labels);
}

Evaluation matrix_baseline(const DatasetSplit& split, std::size_t k) {
  const std::vector<std::size_t> ks(split.train.size(), k);
  const auto bases = build_matrix_bases(split.train, ks, split.class_ids);
  return evaluate_matrix(split, bases);
}

}  // namespace mtensor
