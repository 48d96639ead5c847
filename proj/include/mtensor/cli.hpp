#pragma once

// Batch commands behind the mtensor executable: decompose, sweep, roi-sweep
// and synth. Each returns a process exit code and never throws for bad input.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mtensor/data_io.hpp"
#include "mtensor/transforms.hpp"

namespace mtensor::cli {

/// One `mode:kind[:param]` entry.
struct ModeSpec {
  std::size_t mode = 3;
  TransformKind kind = TransformKind::identity;
  std::string param;
};

/// A transform choice for every trailing mode, or the matrix baseline.
///
/// Accepted text: `matrix`; `kind[:param]` for all trailing modes; or a
/// comma-separated list of `mode:kind[:param]` with unlisted modes left as
/// the identity. A leading `name=` overrides the label used in result tables.
struct TransformSpec {
  std::string name;
  bool matrix = false;
  std::optional<ModeSpec> all_modes;  // mode field unused
  std::vector<ModeSpec> per_mode;
};

TransformSpec parse_transform_spec(std::string_view text);

// Inputs needed by transforms fitted to data.
struct FitContext {
  const DenseTensor* training = nullptr;  // all training samples along mode 2
  const DenseTensor* roi = nullptr;       // ROI labels expanded to `training`
  std::uint64_t seed = 0;
};

TransformSet build_transform_set(const TransformSpec& spec, const Shape& shape, const FitContext& ctx);

// "a..b" (inclusive) or a single integer.
std::vector<std::size_t> parse_k_range(std::string_view text);

struct DatasetOptions {
  std::string input;       // TNSR samples, or IDX images when idx_labels is set
  std::string labels;      // label CSV for TNSR input
  std::string roi;         // optional ROI TNSR
  std::string idx_labels;  // IDX label file
  std::vector<int> classes;
  std::size_t per_class = 0;  // 0 keeps every trial
};

LabeledDataset load(const DatasetOptions& o);

struct SweepOptions {
  DatasetOptions data;
  std::vector<std::string> transforms{"dct"};
  std::vector<std::size_t> ks{1};
  double split = 0.67;
  std::uint64_t seed = 0;
  std::string out;  // empty: CSV to `out` stream
  std::size_t threads = 1;
};

struct RoiSweepOptions {
  DatasetOptions data;
  std::vector<int> roi_labels;  // empty: every label in the ROI tensor
  std::size_t k = 4;
  double split = 0.67;
  std::uint64_t seed = 0;
  std::string out;
  std::size_t threads = 1;
};

struct DecomposeOptions {
  std::string input;
  std::string transform = "dct";
  std::string roi;
  std::optional<std::size_t> k;
  std::string out;  // factor file prefix; empty: derived from input
  std::uint64_t seed = 0;
  std::size_t threads = 1;
};

struct SynthOptions {
  std::string kind = "planted";  // planted | roi | digits
  std::string out = "synth";
  std::size_t classes = 2;
  std::size_t trials = 60;  // per class
  std::vector<std::size_t> shape;  // (n1, n3, ..., np); empty: generator default
  std::size_t rank = 2;
  std::optional<double> sigma;  // unset: generator default
  std::uint64_t seed = 0;
  std::string transform = "dct";
  std::size_t roi_labels = 4;
  int planted_label = 2;
  std::size_t components = 1;
};

int cmd_sweep(const SweepOptions& o, std::ostream& out, std::ostream& err);
int cmd_roi_sweep(const RoiSweepOptions& o, std::ostream& out, std::ostream& err);
int cmd_decompose(const DecomposeOptions& o, std::ostream& out, std::ostream& err);
int cmd_synth(const SynthOptions& o, std::ostream& out, std::ostream& err);

}  // namespace mtensor::cli
