#include "mtensor/data_io.hpp"

#include <Eigen/QR>
#include <json.hpp>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <fstream>
#include <iterator>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "mtensor/error.hpp"
#include "mtensor/starm.hpp"

namespace mtensor {

namespace fs = std::filesystem;

namespace {

constexpr std::array<char, 4> kMagic{'T', 'N', 'S', 'R'};
constexpr std::uint8_t kVersion = 1;
constexpr std::uint8_t kRealF64 = 0;
constexpr std::uint32_t kIdxImages = 0x00000803;
constexpr std::uint32_t kIdxLabels = 0x00000801;

std::vector<unsigned char> slurp(std::istream& in) {
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::vector<unsigned char> slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return slurp(in);
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

void finish(std::ostream& out, const std::string& what) {
  out.flush();
  if (!out) throw std::runtime_error("write failed for " + what);
}

void put_le64(std::ostream& out, std::uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(b, 8);
}

std::uint64_t get_le64(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

void put_be32(std::ostream& out, std::uint32_t v) {
  const char b[4] = {static_cast<char>(v >> 24), static_cast<char>((v >> 16) & 0xff),
                     static_cast<char>((v >> 8) & 0xff), static_cast<char>(v & 0xff)};
  out.write(b, 4);
}

std::uint32_t get_be32(const unsigned char* p) {
  return (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) | (std::uint32_t{p[2]} << 8) | p[3];
}

// Header of an IDX file: magic then `ndims` big-endian u32 extents.
std::vector<std::size_t> idx_header(const std::vector<unsigned char>& bytes, std::uint32_t magic,
                                    const std::string& source) {
  if (bytes.size() < 4) throw FormatError(source + ": IDX file shorter than its magic number");
  const std::uint32_t got = get_be32(bytes.data());
  if (got != magic) {
    std::ostringstream msg;
    msg << source << ": IDX magic 0x" << std::hex << got << ", expected 0x" << magic;
    throw FormatError(msg.str());
  }
  const std::size_t ndims = magic & 0xff;
  if (bytes.size() < 4 + 4 * ndims) throw FormatError(source + ": truncated IDX header");
  std::vector<std::size_t> dims(ndims);
  std::size_t payload = 1;
  for (std::size_t i = 0; i < ndims; ++i) {
    dims[i] = get_be32(bytes.data() + 4 + 4 * i);
    payload *= dims[i];
  }
  const std::size_t expected = 4 + 4 * ndims + payload;
  if (bytes.size() != expected)
    throw FormatError(source + ": IDX payload has " + std::to_string(bytes.size() - 4 - 4 * ndims) +
                      " bytes, header implies " + std::to_string(payload));
  return dims;
}

std::string trim(std::string s) {
  const auto ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(ws) - b + 1);
}

long long parse_int(const std::string& text, const std::string& where) {
  std::size_t used = 0;
  long long v = 0;
  try {
    v = std::stoll(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size()) throw FormatError(where + ": expected an integer, got '" + text + "'");
  return v;
}

RealMatrix random_orthonormal_columns(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  RealMatrix g(rows, cols);
  for (Eigen::Index j = 0; j < g.cols(); ++j)
    for (Eigen::Index i = 0; i < g.rows(); ++i) g(i, j) = normal(rng);
  Eigen::HouseholderQR<RealMatrix> qr(g);
  RealMatrix q = qr.householderQ() * RealMatrix::Identity(rows, cols);
  const RealMatrix& r = qr.matrixQR();
  for (Eigen::Index j = 0; j < q.cols(); ++j)
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  return q;
}

Shape dataset_shape(std::span<const std::size_t> sample_shape, std::size_t trials) {
  if (sample_shape.empty()) throw ShapeError("sample shape needs at least the mode-1 extent");
  std::vector<std::size_t> dims{sample_shape[0], trials};
  dims.insert(dims.end(), sample_shape.begin() + 1, sample_shape.end());
  return Shape(dims);
}

}  // namespace

// ---- TNSR -------------------------------------------------------------------

void write_tnsr(std::ostream& out, const DenseTensor& a) {
  if (a.order() > 255) throw ShapeError("TNSR v1 stores at most 255 modes");
  out.write(kMagic.data(), 4);
  const char head[4] = {static_cast<char>(kVersion), static_cast<char>(kRealF64), static_cast<char>(a.order()), 0};
  out.write(head, 4);
  for (std::size_t n : a.shape().dims()) put_le64(out, n);
  for (double x : a.data()) put_le64(out, std::bit_cast<std::uint64_t>(x));
}

void write_tnsr(const fs::path& path, const DenseTensor& a) {
  auto out = open_out(path);
  write_tnsr(out, a);
  finish(out, path.string());
}

namespace {

DenseTensor parse_tnsr(const std::vector<unsigned char>& b, const std::string& source) {
  if (b.size() < 8) throw FormatError(source + ": truncated TNSR header");
  if (!std::equal(kMagic.begin(), kMagic.end(), b.begin())) throw FormatError(source + ": bad TNSR magic");
  if (b[4] != kVersion) throw FormatError(source + ": unsupported TNSR version " + std::to_string(b[4]));
  if (b[5] != kRealF64) throw FormatError(source + ": unsupported TNSR scalar code " + std::to_string(b[5]));
  const std::size_t order = b[6];
  if (order == 0) throw FormatError(source + ": TNSR order must be >= 1");
  if (b.size() < 8 + 8 * order) throw FormatError(source + ": truncated TNSR extents");
  std::vector<std::size_t> dims(order);
  for (std::size_t i = 0; i < order; ++i) {
    const std::uint64_t n = get_le64(b.data() + 8 + 8 * i);
    if (n == 0) throw FormatError(source + ": TNSR extent " + std::to_string(i + 1) + " is zero");
    if (n > std::numeric_limits<std::size_t>::max()) throw FormatError(source + ": TNSR extent overflows");
    dims[i] = static_cast<std::size_t>(n);
  }
  Shape shape;
  try {
    shape = Shape(dims);
  } catch (const std::exception& e) {
    throw FormatError(source + ": " + e.what());
  }
  const std::size_t start = 8 + 8 * order;
  const std::size_t have = b.size() - start;
  if (shape.numel() > have / 8) throw FormatError(source + ": truncated TNSR data");
  if (have != shape.numel() * 8) throw FormatError(source + ": trailing bytes after TNSR data");
  DenseTensor a(shape);
  auto d = a.data();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = std::bit_cast<double>(get_le64(b.data() + start + 8 * i));
  return a;
}

}  // namespace

DenseTensor read_tnsr(std::istream& in, const std::string& source) { return parse_tnsr(slurp(in), source); }

DenseTensor read_tnsr(const fs::path& path) { return parse_tnsr(slurp(path), path.string()); }

// ---- IDX --------------------------------------------------------------------

IdxImages read_idx_images(const fs::path& path) {
  const auto bytes = slurp(path);
  const auto dims = idx_header(bytes, kIdxImages, path.string());
  IdxImages im{dims[0], dims[1], dims[2], {}};
  if (im.rows == 0 || im.cols == 0) throw FormatError(path.string() + ": IDX images have a zero extent");
  im.pixels.assign(bytes.begin() + 16, bytes.end());
  return im;
}

std::vector<std::uint8_t> read_idx_labels(const fs::path& path) {
  const auto bytes = slurp(path);
  idx_header(bytes, kIdxLabels, path.string());
  return {bytes.begin() + 8, bytes.end()};
}

void write_idx_images(const fs::path& path, const IdxImages& images) {
  if (images.pixels.size() != images.count * images.rows * images.cols)
    throw std::invalid_argument("IDX image buffer does not match its extents");
  auto out = open_out(path);
  put_be32(out, kIdxImages);
  for (std::size_t n : {images.count, images.rows, images.cols}) put_be32(out, static_cast<std::uint32_t>(n));
  out.write(reinterpret_cast<const char*>(images.pixels.data()), static_cast<std::streamsize>(images.pixels.size()));
  finish(out, path.string());
}

void write_idx_labels(const fs::path& path, std::span<const std::uint8_t> labels) {
  auto out = open_out(path);
  put_be32(out, kIdxLabels);
  put_be32(out, static_cast<std::uint32_t>(labels.size()));
  out.write(reinterpret_cast<const char*>(labels.data()), static_cast<std::streamsize>(labels.size()));
  finish(out, path.string());
}

DenseTensor images_to_tensor(const IdxImages& im) {
  if (im.count == 0) throw ShapeError("no images");
  DenseTensor a(Shape{im.rows, im.count, im.cols});
  for (std::size_t t = 0; t < im.count; ++t)
    for (std::size_t r = 0; r < im.rows; ++r)
      for (std::size_t c = 0; c < im.cols; ++c)
        a.at(r, t, c) = im.pixels[(t * im.rows + r) * im.cols + c] / 255.0;
  return a;
}

LabeledDataset read_idx(const fs::path& images, const fs::path& labels, std::span<const int> digits,
                        std::size_t per_class) {
  const IdxImages im = read_idx_images(images);
  const auto lab = read_idx_labels(labels);
  if (lab.size() != im.count)
    throw FormatError(labels.string() + ": " + std::to_string(lab.size()) + " labels for " +
                      std::to_string(im.count) + " images");
  std::set<int> wanted(digits.begin(), digits.end());
  std::map<int, std::size_t> taken;
  IdxImages kept{0, im.rows, im.cols, {}};
  LabeledDataset ds;
  const std::size_t stride = im.rows * im.cols;
  for (std::size_t t = 0; t < im.count; ++t) {
    const int label = lab[t];
    if (!wanted.empty() && !wanted.count(label)) continue;
    if (per_class != 0 && taken[label] >= per_class) continue;
    ++taken[label];
    kept.pixels.insert(kept.pixels.end(), im.pixels.begin() + static_cast<std::ptrdiff_t>(t * stride),
                       im.pixels.begin() + static_cast<std::ptrdiff_t>((t + 1) * stride));
    ++kept.count;
    ds.labels.push_back(label);
  }
  for (int d : wanted)
    if (taken[d] == 0 || (per_class != 0 && taken[d] < per_class))
      throw std::invalid_argument(images.string() + ": only " + std::to_string(taken[d]) + " images of label " +
                                  std::to_string(d));
  ds.samples = images_to_tensor(kept);
  return ds;
}

// ---- Datasets ---------------------------------------------------------------

std::vector<int> LabeledDataset::classes() const {
  std::set<int> s(labels.begin(), labels.end());
  return {s.begin(), s.end()};
}

void LabeledDataset::validate() const {
  if (samples.order() < 2) throw ShapeError("samples must have trials along mode 2");
  if (labels.size() != samples.dim(1))
    throw std::invalid_argument(std::to_string(labels.size()) + " labels for " + std::to_string(samples.dim(1)) +
                                " trials");
  if (roi) check_roi(*roi, samples.shape());
}

std::vector<int> read_label_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || trim(line) != "trial_index,label")
    throw FormatError(path.string() + ": expected header 'trial_index,label'");
  std::map<long long, int> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = path.string() + ":" + std::to_string(lineno);
    const auto comma = line.find(',');
    if (comma == std::string::npos || line.find(',', comma + 1) != std::string::npos)
      throw FormatError(where + ": expected two fields");
    const long long idx = parse_int(trim(line.substr(0, comma)), where);
    const long long lab = parse_int(trim(line.substr(comma + 1)), where);
    if (idx < 0) throw FormatError(where + ": negative trial index");
    if (lab < std::numeric_limits<int>::min() || lab > std::numeric_limits<int>::max())
      throw FormatError(where + ": label out of range");
    if (!rows.emplace(idx, static_cast<int>(lab)).second)
      throw FormatError(where + ": duplicate trial index " + std::to_string(idx));
  }
  if (rows.empty()) throw FormatError(path.string() + ": no labels");
  std::vector<int> labels;
  for (const auto& [idx, lab] : rows) {
    if (idx != static_cast<long long>(labels.size()))
      throw FormatError(path.string() + ": trial index " + std::to_string(labels.size()) + " missing");
    labels.push_back(lab);
  }
  return labels;
}

void write_label_csv(const fs::path& path, std::span<const int> labels) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "trial_index,label\n";
  for (std::size_t i = 0; i < labels.size(); ++i) out << i << ',' << labels[i] << '\n';
  finish(out, path.string());
}

void check_roi(const DenseTensor& roi, const Shape& samples) {
  if (roi.shape() != samples.with_extent(1, 1))
    throw ShapeError("ROI tensor " + roi.shape().str() + " must have shape " + samples.with_extent(1, 1).str());
  for (double x : roi.data())
    if (!std::isfinite(x) || x < 0.0 || x != std::floor(x) || x > std::numeric_limits<int>::max())
      throw FormatError("ROI entries must be nonnegative integers, found " + std::to_string(x));
}

DenseTensor read_roi(const fs::path& path, const Shape& samples) {
  DenseTensor roi = read_tnsr(path);
  try {
    check_roi(roi, samples);
  } catch (const std::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  return roi;
}

DenseTensor expand_roi(const DenseTensor& roi, std::size_t trials) {
  if (roi.order() < 2 || roi.dim(1) != 1) throw ShapeError("ROI tensor must have extent 1 along mode 2");
  std::vector<DenseTensor> copies(trials, roi);
  return concat_lateral(std::span<const DenseTensor>(copies));
}

LabeledDataset load_dataset(const fs::path& samples, const fs::path& labels, const std::optional<fs::path>& roi) {
  LabeledDataset ds;
  ds.samples = read_tnsr(samples);
  ds.labels = read_label_csv(labels);
  if (roi) ds.roi = read_roi(*roi, ds.samples.shape());
  ds.validate();
  return ds;
}

void save_dataset(const fs::path& dir, const LabeledDataset& ds) {
  ds.validate();
  fs::create_directories(dir);
  write_tnsr(dir / "samples.tnsr", ds.samples);
  write_label_csv(dir / "labels.csv", ds.labels);
  if (ds.roi) write_tnsr(dir / "roi.tnsr", *ds.roi);
}

std::vector<DenseTensor> assemble_class_tensors(const LabeledDataset& ds, std::span<const int> classes) {
  ds.validate();
  std::vector<DenseTensor> out;
  for (int c : classes) {
    std::vector<std::size_t> cols;
    for (std::size_t t = 0; t < ds.labels.size(); ++t)
      if (ds.labels[t] == c) cols.push_back(t);
    if (cols.empty()) throw std::invalid_argument("class " + std::to_string(c) + " has no trials");
    out.push_back(select_lateral_slices(ds.samples, cols));
  }
  return out;
}

DatasetSplit split(const LabeledDataset& ds, double fraction, std::uint64_t seed, std::span<const int> classes) {
  ds.validate();
  if (!(fraction > 0.0 && fraction <= 1.0)) throw std::invalid_argument("split fraction must lie in (0, 1]");
  DatasetSplit sp;
  sp.seed = seed;
  sp.class_ids = classes.empty() ? ds.classes() : std::vector<int>(classes.begin(), classes.end());
  std::mt19937_64 rng(seed);
  for (int c : sp.class_ids) {
    std::vector<std::size_t> trials;
    for (std::size_t t = 0; t < ds.labels.size(); ++t)
      if (ds.labels[t] == c) trials.push_back(t);
    const auto n_train = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(trials.size())));
    if (n_train == 0)
      throw std::invalid_argument("class " + std::to_string(c) + " gets no training trials at fraction " +
                                  std::to_string(fraction));
    std::shuffle(trials.begin(), trials.end(), rng);
    std::vector<std::size_t> train(trials.begin(), trials.begin() + static_cast<std::ptrdiff_t>(n_train));
    std::sort(train.begin(), train.end());
    sp.test_trials.insert(sp.test_trials.end(), trials.begin() + static_cast<std::ptrdiff_t>(n_train), trials.end());
    sp.train.push_back(select_lateral_slices(ds.samples, train));
    sp.train_trials.push_back(std::move(train));
  }
  if (sp.test_trials.empty()) throw std::invalid_argument("split leaves the test set empty");
  std::sort(sp.test_trials.begin(), sp.test_trials.end());
  for (std::size_t t : sp.test_trials) sp.test_labels.push_back(ds.labels[t]);
  sp.test = select_lateral_slices(ds.samples, sp.test_trials);
  return sp;
}

// ---- Synthetic data ---------------------------------------------------------

LabeledDataset synth_planted(const PlantedParams& p) {
  if (p.classes < 1 || p.trials_per_class < 1) throw std::invalid_argument("need at least one class and trial");
  if (p.rank < 1 || p.rank > p.sample_shape.at(0))
    throw std::invalid_argument("planted rank must lie in [1, n1]");
  if (p.sigma < 0.0) throw std::invalid_argument("noise level must be nonnegative");

  const std::size_t n1 = p.sample_shape[0];
  const std::vector<std::size_t> trailing(p.sample_shape.begin() + 1, p.sample_shape.end());
  const Shape basis_shape = dataset_shape(p.sample_shape, p.rank);
  TransformSet t;
  switch (p.transform) {
    case TransformKind::identity: t = TransformSet::uniform(basis_shape, build_identity); break;
    case TransformKind::dct: t = TransformSet::uniform(basis_shape, build_dct); break;
    case TransformKind::haar: t = TransformSet::uniform(basis_shape, build_haar); break;
    case TransformKind::random_orthogonal:
      t = TransformSet::uniform(basis_shape, [&](std::size_t n) { return build_random_orthogonal(n, p.seed); });
      break;
    default: throw std::invalid_argument("planted data supports identity, dct, haar and random transforms");
  }
  const double c = t.scale();

  std::mt19937_64 rng(p.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double coeff_sd = c * std::sqrt(static_cast<double>(n1) / static_cast<double>(p.rank));
  const std::size_t total = p.classes * p.trials_per_class;
  LabeledDataset ds;
  ds.samples = DenseTensor(dataset_shape(p.sample_shape, total));
  ds.labels.resize(total);

  for (std::size_t k = 0; k < p.classes; ++k) {
    // Orthonormal columns in every transform-domain slice give an M-orthogonal basis.
    ComplexTensor basis_hat(basis_shape);
    for (std::size_t s = 0; s < basis_hat.slice_count(); ++s)
      basis_hat.slice(s) = random_orthonormal_columns(n1, p.rank, rng).cast<Complex>();
    ComplexTensor samples_hat(dataset_shape(p.sample_shape, p.trials_per_class));
    for (std::size_t s = 0; s < samples_hat.slice_count(); ++s) {
      RealMatrix coeff(p.rank, p.trials_per_class);
      for (Eigen::Index j = 0; j < coeff.cols(); ++j)
        for (Eigen::Index i = 0; i < coeff.rows(); ++i) coeff(i, j) = coeff_sd * normal(rng);
      samples_hat.slice(s) = basis_hat.slice(s) * coeff.cast<Complex>();
    }
    const DenseTensor x = inverse({std::move(samples_hat), t});
    for (std::size_t j = 0; j < p.trials_per_class; ++j) {
      const std::size_t trial = j * p.classes + k;
      ds.labels[trial] = static_cast<int>(k);
      for (std::size_t s = 0; s < x.slice_count(); ++s) ds.samples.slice(s).col(trial) = x.slice(s).col(j);
    }
  }
  if (p.sigma > 0.0)
    for (double& v : ds.samples.data()) v += p.sigma * normal(rng);
  return ds;
}

LabeledDataset synth_roi_planted(const RoiPlantedParams& p) {
  if (p.classes < 1 || p.trials_per_class < 1) throw std::invalid_argument("need at least one class and trial");
  if (p.sample_shape.size() < 2) throw ShapeError("ROI plant needs at least one trailing mode");
  const std::size_t n1 = p.sample_shape[0];
  if (p.roi_labels < 1 || p.roi_labels > n1) throw std::invalid_argument("ROI label count must lie in [1, n1]");
  if (p.planted_label < 1 || static_cast<std::size_t>(p.planted_label) > p.roi_labels)
    throw std::invalid_argument("planted ROI label must lie in [1, roi_labels]");
  const std::vector<std::size_t> trailing(p.sample_shape.begin() + 1, p.sample_shape.end());
  const std::size_t min_trailing = *std::min_element(trailing.begin(), trailing.end());
  const std::size_t block = n1 / p.roi_labels;
  const std::size_t planted_patterns = p.classes * p.components;
  if (p.components < 1 || p.components > block)
    throw std::invalid_argument("component count must lie in [1, ROI block size]");
  if (p.background_components < 1 || p.background_components > block ||
      planted_patterns + p.background_components > min_trailing)
    throw std::invalid_argument("classes * components + background components must fit the smallest trailing extent");
  if (p.sigma < 0.0) throw std::invalid_argument("noise level must be nonnegative");

  std::mt19937_64 rng(p.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const std::size_t total = p.classes * p.trials_per_class;
  const Shape shape = dataset_shape(p.sample_shape, total);
  LabeledDataset ds;
  ds.samples = DenseTensor(shape);
  ds.labels.resize(total);
  for (std::size_t t = 0; t < total; ++t) ds.labels[t] = static_cast<int>(t % p.classes);

  DenseTensor roi(shape.with_extent(1, 1));
  auto block_of = [&](std::size_t x) { return x * p.roi_labels / n1; };
  for (std::size_t s = 0; s < roi.slice_count(); ++s)
    for (std::size_t x = 0; x < n1; ++x) roi.slice(s)(x, 0) = static_cast<double>(block_of(x) + 1);
  ds.roi = roi;

  auto strengths = [](std::size_t n) {
    std::vector<double> v(n);
    for (std::size_t l = 0; l < n; ++l) v[l] = 1.0 - 0.5 * static_cast<double>(l) / static_cast<double>(n);
    return v;
  };
  const std::vector<double> class_strength = strengths(p.classes);

  const std::size_t trailing_numel = roi.slice_count();
  std::vector<RealMatrix> mode_basis;
  for (std::size_t n : trailing) mode_basis.push_back(random_orthonormal_columns(n, n, rng));
  // Separable trailing patterns built from the given per-mode columns.
  auto separable = [&](const std::vector<RealMatrix>& cols) {
    const Eigen::Index count = cols.front().cols();
    RealMatrix w = RealMatrix::Ones(static_cast<Eigen::Index>(trailing_numel), count);
    std::size_t stride = 1;
    for (std::size_t k = 0; k < trailing.size(); ++k) {
      for (std::size_t s = 0; s < trailing_numel; ++s)
        for (Eigen::Index l = 0; l < count; ++l)
          w(static_cast<Eigen::Index>(s), l) *= cols[k](static_cast<Eigen::Index>((s / stride) % trailing[k]), l);
      stride *= trailing[k];
    }
    return w;
  };

  for (std::size_t b = 0; b < p.roi_labels; ++b) {
    std::vector<std::size_t> rows;
    for (std::size_t x = 0; x < n1; ++x)
      if (block_of(x) == b) rows.push_back(x);
    const bool planted = static_cast<int>(b + 1) == p.planted_label;
    const std::size_t comps = planted ? p.components : p.background_components;
    std::vector<RealMatrix> cols;
    for (std::size_t k = 0; k < trailing.size(); ++k) {
      const std::size_t n = trailing[k];
      if (planted)
        cols.push_back(mode_basis[k].leftCols(static_cast<Eigen::Index>(planted_patterns)));
      else
        cols.push_back(mode_basis[k].rightCols(static_cast<Eigen::Index>(n - planted_patterns)) *
                       random_orthonormal_columns(n - planted_patterns, comps, rng));
    }
    // Planted column c * components + l belongs to class c, component l.
    const RealMatrix w = separable(cols);
    const RealMatrix u = random_orthonormal_columns(rows.size(), comps, rng);
    const std::vector<double> str = strengths(comps);
    double energy = 0.0;
    for (double v : str) energy += v * v;
    const double scale = (planted ? 1.0 : p.background_gain) *
                         std::sqrt(static_cast<double>(rows.size() * trailing_numel) / energy);
    for (std::size_t t = 0; t < total; ++t) {
      const std::size_t c = t % p.classes;
      for (std::size_t l = 0; l < comps; ++l) {
        const auto ul = u.col(static_cast<Eigen::Index>(l));
        const auto wl = w.col(static_cast<Eigen::Index>(planted ? c * comps + l : l));
        const double draw = normal(rng);
        // Planted amplitudes stay away from zero so every trial carries its class.
        const double a = planted ? scale * str[l] * class_strength[c] * (1.0 + 0.25 * draw) : scale * str[l] * draw;
        for (std::size_t s = 0; s < trailing_numel; ++s) {
          const double ws = a * wl(static_cast<Eigen::Index>(s));
          for (std::size_t i = 0; i < rows.size(); ++i)
            ds.samples.slice(s)(static_cast<Eigen::Index>(rows[i]), static_cast<Eigen::Index>(t)) +=
                ws * ul(static_cast<Eigen::Index>(i));
        }
      }
    }
  }
  if (p.sigma > 0.0)
    for (double& v : ds.samples.data()) v += p.sigma * normal(rng);
  return ds;
}

DigitImages synth_digits(std::size_t per_digit, std::uint64_t seed, std::size_t side) {
  if (side < 8) throw std::invalid_argument("digit images need a side of at least 8 pixels");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto between = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };
  const double h = static_cast<double>(side);
  DigitImages out;
  out.images = {2 * per_digit, side, side, {}};
  out.images.pixels.reserve(2 * per_digit * side * side);
  for (std::size_t n = 0; n < 2 * per_digit; ++n) {
    const int digit = static_cast<int>(n % 2);
    const double cx = h / 2 + between(-0.06, 0.06) * h;
    const double cy = h / 2 + between(-0.06, 0.06) * h;
    const double width = between(0.05, 0.09) * h;
    const double ink = between(0.8, 1.0);
    // Ellipse semi-axes and tilt for a zero; half-length and slant for a one.
    const double a = between(0.18, 0.25) * h, b = between(0.28, 0.35) * h, tilt = between(-0.3, 0.3);
    const double len = between(0.28, 0.36) * h, slant = between(-0.35, 0.35);
    for (std::size_t r = 0; r < side; ++r)
      for (std::size_t c = 0; c < side; ++c) {
        const double x = static_cast<double>(c) + 0.5 - cx;
        const double y = static_cast<double>(r) + 0.5 - cy;
        double dist;
        if (digit == 0) {
          const double u = std::cos(tilt) * x + std::sin(tilt) * y;
          const double v = -std::sin(tilt) * x + std::cos(tilt) * y;
          dist = std::abs(std::hypot(u / a, v / b) - 1.0) * std::min(a, b);
        } else {
          const double px = slant * len, py = -len;  // segment from (-px, -py) to (px, py)
          const double t = std::clamp((x * px + y * py) / (px * px + py * py), -1.0, 1.0);
          dist = std::hypot(x - t * px, y - t * py);
        }
        const double value = ink * std::clamp(width / 2 + 0.5 - dist, 0.0, 1.0);
        out.images.pixels.push_back(static_cast<std::uint8_t>(std::lround(255.0 * value)));
      }
    out.labels.push_back(static_cast<std::uint8_t>(digit));
  }
  return out;
}

// ---- Factors ----------------------------------------------------------------

std::string transform_header(const TransformSet& t) {
  nlohmann::json modes = nlohmann::json::array();
  for (std::size_t k = 0; k < t.mode_count(); ++k) {
    const ModeTransform& m = t.modes()[k];
    nlohmann::json j{{"mode", k + 3}, {"kind", kind_name(m.kind())}, {"size", m.size()}, {"param", m.param()}};
    switch (m.kind()) {
      case TransformKind::data_dependent:
      case TransformKind::roi_dependent:
      case TransformKind::explicit_matrix: {
        const RealMatrix r = m.real_matrix();
        j["matrix"] = std::vector<double>(r.data(), r.data() + r.size());
        break;
      }
      default: break;
    }
    modes.push_back(std::move(j));
  }
  return nlohmann::json{{"format", "mtensor-transform"}, {"version", 1}, {"modes", modes}}.dump(2) + "\n";
}

TransformSet parse_transform_header(const std::string& text) {
  try {
    const auto doc = nlohmann::json::parse(text);
    if (doc.at("format") != "mtensor-transform" || doc.at("version") != 1)
      throw FormatError("unrecognized transform header");
    std::vector<ModeTransform> modes;
    for (const auto& j : doc.at("modes")) {
      if (j.at("mode").get<std::size_t>() != modes.size() + 3) throw FormatError("transform modes out of order");
      const TransformKind kind = parse_kind(j.at("kind").get<std::string>());
      const auto n = j.at("size").get<std::size_t>();
      const auto param = j.value("param", std::string{});
      switch (kind) {
        case TransformKind::identity: modes.push_back(build_identity(n)); break;
        case TransformKind::dft: modes.push_back(build_dft(n)); break;
        case TransformKind::dct: modes.push_back(build_dct(n)); break;
        case TransformKind::haar: modes.push_back(build_haar(n)); break;
        case TransformKind::banded: modes.push_back(build_banded(n, std::stoull(param))); break;
        case TransformKind::random_orthogonal: modes.push_back(build_random_orthogonal(n, std::stoull(param))); break;
        default: {
          const auto values = j.at("matrix").get<std::vector<double>>();
          if (values.size() != n * n) throw FormatError("transform matrix has the wrong number of entries");
          const RealMatrix m = Eigen::Map<const RealMatrix>(values.data(), static_cast<Eigen::Index>(n),
                                                            static_cast<Eigen::Index>(n));
          modes.push_back(ModeTransform::from_matrix(m, kind, param));
        }
      }
    }
    return TransformSet(std::move(modes));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("transform header: ") + e.what());
  }
}

void save_factors(const std::string& prefix, const TSVDMFactors& f) {
  write_tnsr(fs::path(prefix + "U.tnsr"), f.U);
  write_tnsr(fs::path(prefix + "S.tnsr"), f.S);
  write_tnsr(fs::path(prefix + "V.tnsr"), f.V);
  std::ofstream out(prefix + "transform.json", std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + prefix + "transform.json");
  out << transform_header(f.transform);
  finish(out, prefix + "transform.json");
}

TSVDMFactors load_factors(const std::string& prefix) {
  TSVDMFactors f;
  f.U = read_tnsr(fs::path(prefix + "U.tnsr"));
  f.S = read_tnsr(fs::path(prefix + "S.tnsr"));
  f.V = read_tnsr(fs::path(prefix + "V.tnsr"));
  std::ifstream in(prefix + "transform.json");
  if (!in) throw std::runtime_error("cannot open " + prefix + "transform.json");
  std::stringstream text;
  text << in.rdbuf();
  f.transform = parse_transform_header(text.str());
  f.transform.check_compatible(f.S.shape());
  if (f.U.dim(0) == 0 || f.U.dim(1) != f.S.dim(0) || f.V.dim(1) != f.S.dim(1))
    throw ShapeError("factor shapes are not conformable");
  const ComplexTensor sh = forward(f.S, f.transform).values;
  const std::size_t r = std::min(f.S.dim(0), f.S.dim(1));
  f.singular_values = RealMatrix::Zero(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(sh.slice_count()));
  for (std::size_t s = 0; s < sh.slice_count(); ++s)
    for (std::size_t i = 0; i < r; ++i)
      f.singular_values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(s)) = std::abs(sh.slice(s)(i, i));
  return f;
}

}  // namespace mtensor
