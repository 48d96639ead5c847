#include "mtensor/tsvdm.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>

#include "mtensor/parallel.hpp"
#include "mtensor/starm.hpp"

namespace mtensor {

namespace {

template <class Mat>
auto full_svd(const Mat& m, std::size_t slice) {
  Eigen::JacobiSVD<Mat> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  if (svd.info() != Eigen::Success)
    throw NumericalError("SVD failed on transform-domain frontal slice " + std::to_string(slice));
  return svd;
}

}  // namespace

TSVDMFactors tsvdm(const DenseTensor& a, const TransformSet& t, std::size_t threads) {
  if (a.order() < 2) throw ShapeError("tsvdm requires order >= 2, got " + a.shape().str());
  t.check_compatible(a.shape());
  for (double x : a.data())
    if (!std::isfinite(x)) throw NumericalError("tsvdm input contains non-finite values");

  const std::size_t n1 = a.dim(0);
  const std::size_t n2 = a.dim(1);
  const std::size_t r = std::min(n1, n2);
  const std::size_t slices = a.slice_count();
  const ComplexTensor ah = forward(a, t).values;

  ComplexTensor uh(a.shape().with_extent(1, n1));
  ComplexTensor sh(a.shape());
  ComplexTensor vh(a.shape().with_extent(0, n2));
  RealMatrix sigma = RealMatrix::Zero(r, slices);

  // Slices are computed independently; a slice whose conjugate partner comes
  // first copies the partner's conjugated factors so the spatial factors stay real.
  std::vector<std::size_t> partner(slices);
  for (std::size_t s = 0; s < slices; ++s) partner[s] = t.conjugate_slice(a.shape(), s);

  parallel_for(slices, threads, [&](std::size_t s) {
    if (partner[s] < s) return;
    if (partner[s] == s) {
      const RealMatrix slice = ah.slice(s).real();
      const auto svd = full_svd(slice, s);
      uh.slice(s) = svd.matrixU().cast<Complex>();
      vh.slice(s) = svd.matrixV().cast<Complex>();
      sigma.col(static_cast<Eigen::Index>(s)) = svd.singularValues();
    } else {
      const ComplexMatrix slice = ah.slice(s);
      const auto svd = full_svd(slice, s);
      uh.slice(s) = svd.matrixU();
      vh.slice(s) = svd.matrixV();
      sigma.col(static_cast<Eigen::Index>(s)) = svd.singularValues();
    }
  });
  for (std::size_t s = 0; s < slices; ++s) {
    if (partner[s] >= s) continue;
    uh.slice(s) = uh.slice(partner[s]).conjugate();
    vh.slice(s) = vh.slice(partner[s]).conjugate();
    sigma.col(static_cast<Eigen::Index>(s)) = sigma.col(static_cast<Eigen::Index>(partner[s]));
  }
  for (std::size_t s = 0; s < slices; ++s)
    for (std::size_t i = 0; i < r; ++i) sh.slice(s)(i, i) = sigma(i, s);

  TSVDMFactors f;
  f.U = inverse({std::move(uh), t});
  f.S = inverse({std::move(sh), t});
  f.V = inverse({std::move(vh), t});
  f.transform = t;
  f.singular_values = std::move(sigma);
  return f;
}

std::vector<double> singular_tube_norms(const TSVDMFactors& f) {
  const std::size_t r = std::min(f.S.dim(0), f.S.dim(1));
  std::vector<double> norms(r);
  for (std::size_t i = 0; i < r; ++i) {
    double acc = 0.0;
    for (std::size_t s = 0; s < f.S.slice_count(); ++s) {
      const double x = f.S.slice(s)(i, i);
      acc += x * x;
    }
    norms[i] = std::sqrt(acc);
  }
  return norms;
}

std::vector<double> transform_tube_norms(const TSVDMFactors& f) {
  std::vector<double> norms(static_cast<std::size_t>(f.singular_values.rows()));
  for (std::size_t i = 0; i < norms.size(); ++i) norms[i] = f.singular_values.row(static_cast<Eigen::Index>(i)).norm();
  return norms;
}

std::size_t t_rank(const TSVDMFactors& f, double tol) {
  const auto norms = singular_tube_norms(f);
  if (norms.empty() || norms.front() == 0.0) return 0;
  const double cutoff = tol * norms.front();
  return static_cast<std::size_t>(std::count_if(norms.begin(), norms.end(), [&](double v) { return v > cutoff; }));
}

TSVDMFactors truncate(const TSVDMFactors& f, std::size_t k) {
  const std::size_t r = std::min({f.U.dim(1), f.V.dim(1), static_cast<std::size_t>(f.singular_values.rows())});
  if (k < 1 || k > r)
    throw std::invalid_argument("truncation k = " + std::to_string(k) + " outside [1, " + std::to_string(r) + "]");
  std::vector<std::size_t> keep(k);
  for (std::size_t i = 0; i < k; ++i) keep[i] = i;

  TSVDMFactors out;
  out.U = select_lateral_slices(f.U, keep);
  out.V = select_lateral_slices(f.V, keep);
  out.S = DenseTensor(f.S.shape().with_extent(0, k).with_extent(1, k));
  for (std::size_t s = 0; s < f.S.slice_count(); ++s)
    out.S.slice(s) = f.S.slice(s).topLeftCorner(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
  out.transform = f.transform;
  out.singular_values = f.singular_values.topRows(static_cast<Eigen::Index>(k));
  return out;
}

DenseTensor reconstruct(const TSVDMFactors& f) {
  const auto& t = f.transform;
  const auto uh = forward(f.U, t);
  const auto sh = forward(f.S, t);
  const auto vh = forward(f.V, t);
  const ComplexTensor us = facewise_product(uh.values, sh.values);
  return inverse({facewise_product(us, facewise_adjoint(vh.values)), t});
}

DenseTensor reconstruct_by_expansion(const TSVDMFactors& f) {
  const auto& t = f.transform;
  const std::size_t r = std::min(f.S.dim(0), f.S.dim(1));
  DenseTensor sum(f.U.shape().with_extent(1, f.V.dim(0)));
  for (std::size_t i = 0; i < r; ++i) {
    const DenseTensor ui = lateral_slice(f.U, i);
    const DenseTensor vi = lateral_slice(f.V, i);
    const DenseTensor sii = tube(f.S, i, i);
    sum = sum + starm_product(starm_product(ui, sii, t), starm_transpose(vi, t), t);
  }
  return sum;
}

double truncation_error(const TSVDMFactors& f, std::size_t k) {
  if (!f.transform.orthogonal_multiple())
    throw std::logic_error("truncation error identity needs transforms that are multiples of orthogonal matrices");
  const auto rows = static_cast<std::size_t>(f.singular_values.rows());
  if (k > rows) throw std::invalid_argument("truncation k = " + std::to_string(k) + " exceeds available tubes");
  double tail = 0.0;
  for (std::size_t i = k; i < rows; ++i) tail += f.singular_values.row(static_cast<Eigen::Index>(i)).squaredNorm();
  return std::sqrt(tail) / f.transform.scale();
}

}  // namespace mtensor
