#pragma once

// Projection classification on local t-SVDM bases, plus the vectorized
// matrix-SVD baseline.
//
// Samples are lateral slices: a class tensor of shape (n1, trials, n3, ..., np)
// holds one sample per index of mode 2.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "mtensor/tensor.hpp"
#include "mtensor/transforms.hpp"
#include "mtensor/tsvdm.hpp"

namespace mtensor {

/// First k lateral slices of the t-SVDM U of one class.
struct ClassBasis {
  int class_id = 0;
  std::size_t k = 0;
  DenseTensor basis;      // n1 x k x n3 x ... x np
  TransformSet transform;
  ComplexTensor basis_hat;  // basis in the transform domain
};

struct ClassificationResult {
  int predicted = 0;
  std::vector<double> residuals;  // one per basis, in the order given
};

/// Training tensors per class and the held-out test samples.
struct DatasetSplit {
  std::vector<int> class_ids;          // label of each entry of `train`
  std::vector<DenseTensor> train;      // per class, samples along mode 2
  DenseTensor test;                    // all test samples along mode 2
  std::vector<int> test_labels;        // one per test sample
  std::vector<std::vector<std::size_t>> train_trials;  // original trial indices per class
  std::vector<std::size_t> test_trials;
  std::uint64_t seed = 0;

  std::size_t train_count() const;
  std::size_t test_count() const { return test_labels.size(); }
};

struct Evaluation {
  double accuracy = 0.0;
  std::size_t correct = 0;
  std::size_t total = 0;
  std::vector<int> class_ids;
  // confusion[i][j]: samples of class_ids[i] predicted as class_ids[j].
  std::vector<std::vector<std::size_t>> confusion;
  std::vector<int> predictions;
};

ClassBasis basis_from_factors(const TSVDMFactors& f, int class_id, std::size_t k);

// t-SVDM of each class tensor truncated to its k. When class_ids is empty the
// classes are numbered 0, 1, ...
std::vector<ClassBasis> build_local_bases(std::span<const DenseTensor> class_tensors,
                                          std::span<const std::size_t> ks, const TransformSet& t,
                                          std::span<const int> class_ids = {}, std::size_t threads = 1);

// U_k *M U_k^T *M T for a lateral slice (or a stack of them along mode 2).
DenseTensor project(const DenseTensor& samples, const ClassBasis& b);

// ||T_j - P_j||_F for every lateral slice T_j of `samples`.
std::vector<double> residuals(const DenseTensor& samples, const ClassBasis& b);

// Argmin residual; equal residuals go to the lowest class id.
ClassificationResult classify(const DenseTensor& sample, std::span<const ClassBasis> bases);
std::vector<ClassificationResult> classify_all(const DenseTensor& samples, std::span<const ClassBasis> bases,
                                               std::size_t threads = 1);

Evaluation evaluate(const DatasetSplit& split, std::span<const ClassBasis> bases, std::size_t threads = 1);

// Builds an Evaluation from per-sample residuals (rows: samples, one column
// per class in class_ids order).
Evaluation score_residuals(const std::vector<std::vector<double>>& residual_rows, std::span<const int> class_ids,
                           std::span<const int> truth);

/// Rank-k left singular vectors of one class's vectorized samples.
struct MatrixClassBasis {
  int class_id = 0;
  RealMatrix U;  // (n1 * n3 * ... * np) x k
};

// Each lateral slice vectorized into one column (trials as columns).
RealMatrix vectorize_samples(const DenseTensor& samples);

// Matrix SVD of each class's vectorized samples truncated to its k.
std::vector<MatrixClassBasis> build_matrix_bases(std::span<const DenseTensor> class_tensors,
                                                 std::span<const std::size_t> ks,
                                                 std::span<const int> class_ids = {});
std::vector<double> matrix_residuals(const DenseTensor& samples, const MatrixClassBasis& b);

// Local-SVD projection classifier on vectorized samples at a shared k.
Evaluation matrix_baseline(const DatasetSplit& split, std::size_t k);
Evaluation evaluate_matrix(const DatasetSplit& split, std::span<const MatrixClassBasis> bases);

}  // namespace mtensor
