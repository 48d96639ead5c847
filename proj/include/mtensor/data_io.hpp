#pragma once

// Dataset files and generators: TNSR v1 tensors, IDX images and labels,
// label CSVs, ROI label tensors, class assembly, seeded splits and planted
// synthetic datasets.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mtensor/classifier.hpp"
#include "mtensor/tensor.hpp"
#include "mtensor/transforms.hpp"
#include "mtensor/tsvdm.hpp"

namespace mtensor {

// ---- TNSR v1 ----------------------------------------------------------------
//
// "TNSR", u8 version (1), u8 scalar code (0 = f64), u8 order p, one zero pad
// byte, p little-endian u64 extents, then little-endian f64 entries in
// column-major order. Readers reject anything else, including trailing bytes.

void write_tnsr(std::ostream& out, const DenseTensor& a);
void write_tnsr(const std::filesystem::path& path, const DenseTensor& a);
DenseTensor read_tnsr(std::istream& in, const std::string& source = "<stream>");
DenseTensor read_tnsr(const std::filesystem::path& path);

// ---- IDX --------------------------------------------------------------------

/// Images n x rows x cols as unsigned bytes, row-major per image.
struct IdxImages {
  std::size_t count = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::uint8_t> pixels;
};

IdxImages read_idx_images(const std::filesystem::path& path);
std::vector<std::uint8_t> read_idx_labels(const std::filesystem::path& path);
void write_idx_images(const std::filesystem::path& path, const IdxImages& images);
void write_idx_labels(const std::filesystem::path& path, std::span<const std::uint8_t> labels);

// Image t becomes lateral slice t of a rows x count x cols tensor, pixels scaled
// to [0, 1]: A(r, t, c) = pixel(t, r, c) / 255.
DenseTensor images_to_tensor(const IdxImages& images);

// ---- Datasets ---------------------------------------------------------------

/// Samples with trials on mode 2, a label per trial and an optional ROI
/// tensor of shape (n1, 1, n3, ..., np) holding nonnegative integer labels.
struct LabeledDataset {
  DenseTensor samples;
  std::vector<int> labels;
  std::optional<DenseTensor> roi;

  std::size_t trials() const { return samples.dim(1); }
  // Distinct labels in ascending order.
  std::vector<int> classes() const;
  // Throws ShapeError / std::invalid_argument on inconsistent fields.
  void validate() const;
};

// Images plus labels; the optional `digits` keeps only those labels, and
// `per_class` (when nonzero) keeps the first that many images of each.
LabeledDataset read_idx(const std::filesystem::path& images, const std::filesystem::path& labels,
                        std::span<const int> digits = {}, std::size_t per_class = 0);

// "trial_index,label" with a header line; every trial index in [0, n) exactly once.
std::vector<int> read_label_csv(const std::filesystem::path& path);
void write_label_csv(const std::filesystem::path& path, std::span<const int> labels);

// Integer-valued, nonnegative label tensor whose shape matches `samples`
// except along mode 2, where it has extent 1.
DenseTensor read_roi(const std::filesystem::path& path, const Shape& samples);
void check_roi(const DenseTensor& roi, const Shape& samples);
// Repeats the ROI tensor along mode 2.
DenseTensor expand_roi(const DenseTensor& roi, std::size_t trials);

LabeledDataset load_dataset(const std::filesystem::path& samples, const std::filesystem::path& labels,
                            const std::optional<std::filesystem::path>& roi = std::nullopt);
// Writes <dir>/samples.tnsr, <dir>/labels.csv and, if present, <dir>/roi.tnsr.
void save_dataset(const std::filesystem::path& dir, const LabeledDataset& ds);

// One tensor per requested class holding that class's trials in order.
std::vector<DenseTensor> assemble_class_tensors(const LabeledDataset& ds, std::span<const int> classes);

// Stratified split: in each class round(fraction * trials) trials, chosen by a
// seeded shuffle, go to training. Classes default to all labels present.
DatasetSplit split(const LabeledDataset& ds, double fraction, std::uint64_t seed,
                   std::span<const int> classes = {});

// ---- Synthetic data ---------------------------------------------------------

/// Each class c: samples U_c *M C + sigma * noise, where U_c (n1 x rank) is a
/// random M-orthogonal basis under `transform` and the coefficient tubes C
/// are Gaussian, scaled so signal entries have unit mean square.
struct PlantedParams {
  std::size_t classes = 2;
  std::size_t trials_per_class = 60;
  std::vector<std::size_t> sample_shape{16, 16, 4, 8};  // (n1, n3, ..., np)
  std::size_t rank = 2;
  double sigma = 0.0;
  std::uint64_t seed = 0;
  TransformKind transform = TransformKind::dct;
};

LabeledDataset synth_planted(const PlantedParams& p);

/// The x-axis (mode 1) is split into `roi_labels` equal blocks labeled
/// 1..roi_labels. Every block holds `components` orthonormal x-patterns u_l,
/// each paired with a separable trailing pattern and a random amplitude.
/// Inside the `planted_label` block the x-patterns are shared by all classes
/// and class c uses its own trailing patterns; elsewhere the classes are
/// identically distributed, with trailing patterns orthogonal to the planted
/// ones along every mode. The planted block has unit mean-square signal, the
/// others `background_gain` times that amplitude. Gaussian noise sigma is
/// added everywhere.
struct RoiPlantedParams {
  std::size_t classes = 2;
  std::size_t trials_per_class = 60;
  std::vector<std::size_t> sample_shape{16, 256};
  std::size_t roi_labels = 4;
  int planted_label = 2;
  std::size_t components = 1;
  std::size_t background_components = 1;
  double background_gain = 1.0;
  double sigma = 3.0;
  std::uint64_t seed = 0;
};

LabeledDataset synth_roi_planted(const RoiPlantedParams& p);

/// Handwritten-style 0 and 1 glyphs (jittered ellipses and slanted strokes),
/// alternating 0, 1, 0, 1, ...
struct DigitImages {
  IdxImages images;
  std::vector<std::uint8_t> labels;
};

DigitImages synth_digits(std::size_t per_digit, std::uint64_t seed, std::size_t side = 28);

// ---- Factors ----------------------------------------------------------------

// JSON description of a TransformSet. Matrices without a closed form
// (data, roi, explicit) are stored entry by entry.
std::string transform_header(const TransformSet& t);
TransformSet parse_transform_header(const std::string& json);

// <prefix>U.tnsr, <prefix>S.tnsr, <prefix>V.tnsr and <prefix>transform.json.
void save_factors(const std::string& prefix, const TSVDMFactors& f);
TSVDMFactors load_factors(const std::string& prefix);

}  // namespace mtensor
