#include "mtensor/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "mtensor/classifier.hpp"
#include "mtensor/error.hpp"
#include "mtensor/parallel.hpp"
#include "mtensor/tsvdm.hpp"

namespace mtensor::cli {

namespace {

std::vector<std::string> split_on(std::string_view text, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = text.find(sep, start);
    out.emplace_back(text.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

template <class T>
T parse_number(std::string_view text, std::string_view what) {
  T v{};
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end || text.empty())
    throw std::invalid_argument("invalid " + std::string(what) + " '" + std::string(text) + "'");
  return v;
}

// "kind" or "kind:param"; the param keeps any further colons.
ModeSpec parse_kind_param(std::string_view text) {
  ModeSpec m;
  const auto colon = text.find(':');
  m.kind = parse_kind(text.substr(0, colon));
  if (colon != std::string_view::npos) m.param = std::string(text.substr(colon + 1));
  return m;
}

ModeTransform build_mode(const ModeSpec& m, std::size_t mode, std::size_t n, const FitContext& ctx) {
  auto need = [&](const char* what) {
    if (m.param.empty())
      throw std::invalid_argument(std::string(kind_name(m.kind)) + " on mode " + std::to_string(mode) + " needs " +
                                  what);
  };
  switch (m.kind) {
    case TransformKind::identity: return build_identity(n);
    case TransformKind::dft: return build_dft(n);
    case TransformKind::dct: return build_dct(n);
    case TransformKind::haar: return build_haar(n);
    case TransformKind::banded:
      need("a bandwidth (banded:b)");
      return build_banded(n, parse_number<std::size_t>(m.param, "bandwidth"));
    case TransformKind::random_orthogonal:
      return build_random_orthogonal(n, m.param.empty() ? ctx.seed : parse_number<std::uint64_t>(m.param, "seed"));
    case TransformKind::data_dependent:
      if (!ctx.training) throw std::invalid_argument("data-dependent transform needs training data");
      return build_data_dependent(*ctx.training, mode);
    case TransformKind::roi_dependent:
      need("an ROI label (roi:label)");
      if (!ctx.training || !ctx.roi) throw std::invalid_argument("ROI-dependent transform needs --roi");
      return build_roi_dependent(*ctx.training, *ctx.roi, parse_number<int>(m.param, "ROI label"), mode);
    case TransformKind::explicit_matrix: {
      need("a TNSR matrix file (explicit:path)");
      const DenseTensor t = read_tnsr(std::filesystem::path(m.param));
      if (t.order() != 2 || t.dim(0) != n || t.dim(1) != n)
        throw ShapeError(m.param + ": expected a " + std::to_string(n) + " x " + std::to_string(n) + " matrix, got " +
                         t.shape().str());
      return ModeTransform::from_matrix(frontal_slice(t, std::size_t{0}), TransformKind::explicit_matrix, m.param);
    }
  }
  throw std::logic_error("unhandled transform kind");
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + "\"";
}

std::string fixed(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string sci(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12e", v);
  return buf;
}

// Writes to the file named by `path`, or to `fallback` when it is empty.
void emit(const std::string& path, const std::string& text, std::ostream& fallback) {
  if (path.empty()) {
    fallback << text;
    return;
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << text;
  f.flush();
  if (!f) throw std::runtime_error("write failed for " + path);
}

LabeledDataset restrict(LabeledDataset ds, std::span<const int> classes, std::size_t per_class) {
  if (classes.empty() && per_class == 0) return ds;
  const std::set<int> wanted(classes.begin(), classes.end());
  std::map<int, std::size_t> taken;
  std::vector<std::size_t> keep;
  for (std::size_t t = 0; t < ds.labels.size(); ++t) {
    const int c = ds.labels[t];
    if (!wanted.empty() && !wanted.count(c)) continue;
    if (per_class != 0 && taken[c] >= per_class) continue;
    ++taken[c];
    keep.push_back(t);
  }
  for (int c : wanted)
    if (taken[c] == 0) throw std::invalid_argument("class " + std::to_string(c) + " has no trials");
  LabeledDataset out;
  out.samples = select_lateral_slices(ds.samples, keep);
  for (std::size_t t : keep) out.labels.push_back(ds.labels[t]);
  out.roi = std::move(ds.roi);
  return out;
}

struct Prepared {
  DatasetSplit split;
  DenseTensor training;  // all classes, along mode 2
  std::optional<DenseTensor> roi;  // expanded to `training`
};

Prepared prepare(const LabeledDataset& ds, double fraction, std::uint64_t seed) {
  Prepared p;
  p.split = split(ds, fraction, seed);
  p.training = concat_lateral(std::span<const DenseTensor>(p.split.train));
  if (ds.roi) p.roi = expand_roi(*ds.roi, p.training.dim(1));
  return p;
}

FitContext context_of(const Prepared& p, std::uint64_t seed) {
  return {&p.training, p.roi ? &*p.roi : nullptr, seed};
}

struct GridRow {
  std::string transform;
  std::size_t k = 0;
  double accuracy = 0.0;
  std::string error;
};

}  // namespace

TransformSpec parse_transform_spec(std::string_view text) {
  TransformSpec spec;
  std::string_view body = text;
  if (const auto eq = text.find('='); eq != std::string_view::npos) {
    spec.name = std::string(text.substr(0, eq));
    body = text.substr(eq + 1);
    if (spec.name.empty()) throw std::invalid_argument("empty transform name in '" + std::string(text) + "'");
  } else {
    spec.name = std::string(text);
  }
  if (body.empty()) throw std::invalid_argument("empty transform specification");
  if (body == "matrix") {
    spec.matrix = true;
    return spec;
  }
  const bool per_mode = body.front() >= '0' && body.front() <= '9';
  if (!per_mode) {
    spec.all_modes = parse_kind_param(body);
    return spec;
  }
  std::set<std::size_t> seen;
  for (const auto& part : split_on(body, ',')) {
    const auto colon = part.find(':');
    if (colon == std::string::npos) throw std::invalid_argument("expected mode:kind, got '" + part + "'");
    ModeSpec m = parse_kind_param(std::string_view(part).substr(colon + 1));
    m.mode = parse_number<std::size_t>(std::string_view(part).substr(0, colon), "mode");
    if (m.mode < 3) throw std::invalid_argument("transforms apply to modes >= 3, got " + std::to_string(m.mode));
    if (!seen.insert(m.mode).second) throw std::invalid_argument("mode " + std::to_string(m.mode) + " given twice");
    spec.per_mode.push_back(std::move(m));
  }
  return spec;
}

TransformSet build_transform_set(const TransformSpec& spec, const Shape& shape, const FitContext& ctx) {
  if (spec.matrix) throw std::invalid_argument("the matrix baseline has no transform set");
  const auto trailing = shape.trailing();
  for (const auto& m : spec.per_mode)
    if (m.mode > shape.order())
      throw ShapeError("transform for mode " + std::to_string(m.mode) + " but data has order " +
                       std::to_string(shape.order()));
  std::vector<ModeTransform> modes;
  for (std::size_t k = 0; k < trailing.size(); ++k) {
    const std::size_t mode = k + 3;
    ModeSpec m;
    if (spec.all_modes) {
      m = *spec.all_modes;
    } else {
      auto it = std::find_if(spec.per_mode.begin(), spec.per_mode.end(), [&](const ModeSpec& s) { return s.mode == mode; });
      if (it != spec.per_mode.end()) m = *it;
    }
    modes.push_back(build_mode(m, mode, trailing[k], ctx));
  }
  return TransformSet(std::move(modes));
}

std::vector<std::size_t> parse_k_range(std::string_view text) {
  const auto dots = text.find("..");
  if (dots == std::string_view::npos) return {parse_number<std::size_t>(text, "k")};
  const auto lo = parse_number<std::size_t>(text.substr(0, dots), "k range start");
  const auto hi = parse_number<std::size_t>(text.substr(dots + 2), "k range end");
  if (lo < 1 || hi < lo) throw std::invalid_argument("k range must satisfy 1 <= a <= b, got '" + std::string(text) + "'");
  std::vector<std::size_t> ks;
  for (std::size_t k = lo; k <= hi; ++k) ks.push_back(k);
  return ks;
}

LabeledDataset load(const DatasetOptions& o) {
  if (o.input.empty()) throw std::invalid_argument("--input is required");
  LabeledDataset ds;
  if (!o.idx_labels.empty()) {
    ds = read_idx(o.input, o.idx_labels, o.classes, o.per_class);
    if (!o.roi.empty()) ds.roi = read_roi(o.roi, ds.samples.shape());
    return ds;
  }
  if (o.labels.empty()) throw std::invalid_argument("--labels is required for TNSR input");
  ds = load_dataset(o.input, o.labels,
                    o.roi.empty() ? std::nullopt : std::optional<std::filesystem::path>(o.roi));
  return restrict(std::move(ds), o.classes, o.per_class);
}

int cmd_sweep(const SweepOptions& o, std::ostream& out, std::ostream& err) {
  try {
    if (o.transforms.empty()) throw std::invalid_argument("at least one --transform is required");
    if (o.ks.empty()) throw std::invalid_argument("no k values requested");
    std::vector<TransformSpec> specs;
    for (const auto& t : o.transforms) specs.push_back(parse_transform_spec(t));
    const LabeledDataset ds = load(o.data);
    const Prepared prep = prepare(ds, o.split, o.seed);
    const FitContext ctx = context_of(prep, o.seed);
    const DatasetSplit& sp = prep.split;

    // Factors per transform are shared by every k of that transform.
    struct Fitted {
      std::vector<TSVDMFactors> factors;
      std::string error;
    };
    std::vector<Fitted> fitted(specs.size());
    parallel_for(specs.size(), o.threads, [&](std::size_t i) {
      if (specs[i].matrix) return;
      try {
        const TransformSet t = build_transform_set(specs[i], sp.test.shape(), ctx);
        for (const auto& c : sp.train) fitted[i].factors.push_back(tsvdm(c, t));
      } catch (const std::exception& e) {
        fitted[i].error = e.what();
      }
    });

    std::vector<GridRow> rows;
    for (const auto& s : specs)
      for (std::size_t k : o.ks) rows.push_back({s.name, k, 0.0, {}});
    parallel_for(rows.size(), o.threads, [&](std::size_t r) {
      const std::size_t i = r / o.ks.size();
      GridRow& row = rows[r];
      try {
        if (specs[i].matrix) {
          row.accuracy = matrix_baseline(sp, row.k).accuracy;
          return;
        }
        if (!fitted[i].error.empty()) throw std::runtime_error(fitted[i].error);
        std::vector<ClassBasis> bases;
        for (std::size_t c = 0; c < sp.train.size(); ++c) {
          const std::size_t limit = std::min(sp.train[c].dim(0), sp.train[c].dim(1));
          if (row.k > limit)
            throw std::invalid_argument("k = " + std::to_string(row.k) + " exceeds min(n1, trials) = " +
                                        std::to_string(limit) + " for class " + std::to_string(sp.class_ids[c]));
          bases.push_back(basis_from_factors(fitted[i].factors[c], sp.class_ids[c], row.k));
        }
        row.accuracy = evaluate(sp, bases).accuracy;
      } catch (const std::exception& e) {
        row.error = e.what();
      }
    });
    std::stable_sort(rows.begin(), rows.end(), [](const GridRow& a, const GridRow& b) {
      return a.transform != b.transform ? a.transform < b.transform : a.k < b.k;
    });

    std::ostringstream csv;
    csv << "transform,k,accuracy,train_n,test_n,seed\n";
    int failures = 0;
    for (const auto& row : rows) {
      csv << csv_field(row.transform) << ',' << row.k << ',' << (row.error.empty() ? fixed(row.accuracy) : "error")
          << ',' << sp.train_count() << ',' << sp.test_count() << ',' << o.seed << '\n';
      if (!row.error.empty()) {
        ++failures;
        err << "error: transform=" << row.transform << " k=" << row.k << ": " << row.error << '\n';
      }
    }
    emit(o.out, csv.str(), out);
    if (failures) err << failures << " of " << rows.size() << " runs failed\n";
    return failures ? 1 : 0;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
}

int cmd_roi_sweep(const RoiSweepOptions& o, std::ostream& out, std::ostream& err) {
  try {
    const LabeledDataset ds = load(o.data);
    if (!ds.roi) throw std::invalid_argument("--roi is required");
    std::vector<int> labels = o.roi_labels;
    if (labels.empty()) {
      std::set<int> present;
      for (double x : ds.roi->data()) present.insert(static_cast<int>(x));
      labels.assign(present.begin(), present.end());
    }
    const Prepared prep = prepare(ds, o.split, o.seed);
    const FitContext ctx = context_of(prep, o.seed);

    std::vector<GridRow> rows;
    for (int l : labels) rows.push_back({std::to_string(l), o.k, 0.0, {}});
    parallel_for(rows.size(), o.threads, [&](std::size_t r) {
      try {
        TransformSpec spec;
        spec.all_modes = ModeSpec{3, TransformKind::roi_dependent, std::to_string(labels[r])};
        const TransformSet t = build_transform_set(spec, prep.split.test.shape(), ctx);
        const std::vector<std::size_t> ks(prep.split.train.size(), o.k);
        const auto bases = build_local_bases(prep.split.train, ks, t, prep.split.class_ids);
        rows[r].accuracy = evaluate(prep.split, bases).accuracy;
      } catch (const std::exception& e) {
        rows[r].error = e.what();
      }
    });
    std::vector<std::size_t> order(rows.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return labels[a] < labels[b]; });

    std::ostringstream csv;
    csv << "roi_label,accuracy\n";
    int failures = 0;
    for (std::size_t i : order) {
      csv << rows[i].transform << ',' << (rows[i].error.empty() ? fixed(rows[i].accuracy) : "error") << '\n';
      if (!rows[i].error.empty()) {
        ++failures;
        err << "error: roi_label=" << rows[i].transform << " k=" << o.k << ": " << rows[i].error << '\n';
      }
    }
    emit(o.out, csv.str(), out);
    if (failures) err << failures << " of " << rows.size() << " runs failed\n";
    return failures ? 1 : 0;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
}

int cmd_decompose(const DecomposeOptions& o, std::ostream& out, std::ostream& err) {
  try {
    if (o.input.empty()) throw std::invalid_argument("--input is required");
    const DenseTensor a = read_tnsr(std::filesystem::path(o.input));
    const TransformSpec spec = parse_transform_spec(o.transform);
    std::optional<DenseTensor> roi;
    if (!o.roi.empty()) {
      roi = read_tnsr(std::filesystem::path(o.roi));
      if (roi->shape() != a.shape()) roi = expand_roi(*roi, a.dim(1));
    }
    const FitContext ctx{&a, roi ? &*roi : nullptr, o.seed};
    const TransformSet t = build_transform_set(spec, a.shape(), ctx);
    const TSVDMFactors f = tsvdm(a, t, o.threads);
    const std::size_t r = std::min(a.dim(0), a.dim(1));
    if (o.k && (*o.k < 1 || *o.k > r))
      throw std::invalid_argument("k = " + std::to_string(*o.k) + " outside [1, " + std::to_string(r) + "]");

    std::string prefix = o.out;
    if (prefix.empty()) {
      std::filesystem::path p(o.input);
      prefix = (p.parent_path() / p.stem()).string() + "_";
    }
    save_factors(prefix, o.k ? truncate(f, *o.k) : f);

    out << "shape: " << a.shape().str() << '\n';
    out << "transform: " << t.describe() << '\n';
    out << "t_rank: " << t_rank(f) << '\n';
    out << "factors: " << prefix << "{U,S,V}.tnsr, " << prefix << "transform.json" << (o.k ? " (truncated)" : "")
        << '\n';
    out << "tube,norm\n";
    const auto norms = singular_tube_norms(f);
    for (std::size_t i = 0; i < norms.size(); ++i) out << i + 1 << ',' << sci(norms[i]) << '\n';
    out << "k,formula_error,direct_error\n";
    const double norm_a = frobenius_norm(a);
    for (std::size_t k = 1; k <= r; ++k) {
      if (o.k && k != *o.k) continue;
      const double direct = frobenius_norm(a - reconstruct(truncate(f, k)));
      out << k << ',' << (t.orthogonal_multiple() ? sci(truncation_error(f, k)) : std::string("n/a")) << ','
          << sci(direct) << '\n';
    }
    out << "norm: " << sci(norm_a) << '\n';
    return 0;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
}

int cmd_synth(const SynthOptions& o, std::ostream& out, std::ostream& err) {
  try {
    const std::filesystem::path dir(o.out);
    if (o.kind == "digits") {
      std::filesystem::create_directories(dir);
      const DigitImages d = synth_digits(o.trials, o.seed);
      write_idx_images(dir / "images.idx", d.images);
      write_idx_labels(dir / "labels.idx", d.labels);
      out << "wrote " << d.images.count << " images to " << (dir / "images.idx").string() << " and "
          << (dir / "labels.idx").string() << '\n';
      return 0;
    }
    LabeledDataset ds;
    if (o.kind == "planted") {
      PlantedParams p;
      p.classes = o.classes;
      p.trials_per_class = o.trials;
      if (!o.shape.empty()) p.sample_shape = o.shape;
      p.rank = o.rank;
      p.sigma = o.sigma.value_or(p.sigma);
      p.seed = o.seed;
      p.transform = parse_kind(o.transform);
      ds = synth_planted(p);
    } else if (o.kind == "roi") {
      RoiPlantedParams p;
      p.classes = o.classes;
      p.trials_per_class = o.trials;
      if (!o.shape.empty()) p.sample_shape = o.shape;
      p.roi_labels = o.roi_labels;
      p.planted_label = o.planted_label;
      p.components = o.components;
      p.sigma = o.sigma.value_or(p.sigma);
      p.seed = o.seed;
      ds = synth_roi_planted(p);
    } else {
      throw std::invalid_argument("unknown synth kind '" + o.kind + "' (planted, roi or digits)");
    }
    save_dataset(dir, ds);
    out << "wrote " << ds.samples.shape().str() << " samples, " << ds.labels.size() << " labels"
        << (ds.roi ? " and an ROI tensor" : "") << " to " << dir.string() << '\n';
    return 0;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace mtensor::cli
