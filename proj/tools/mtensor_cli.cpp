#include <CLI11.hpp>
#include <json.hpp>

#include <iostream>
#include <thread>

#include "mtensor/cli.hpp"

namespace {

using nlohmann::json;

std::string mode_entry(const json& j) {
  std::string s = std::to_string(j.at("mode").get<int>()) + ":" + j.at("kind").get<std::string>();
  if (j.contains("param")) s += ":" + (j["param"].is_string() ? j["param"].get<std::string>() : j["param"].dump());
  return s;
}

std::string transform_entry(const json& j) {
  if (j.is_string()) return j.get<std::string>();
  if (j.is_object()) return mode_entry(j);
  if (j.is_array()) {
    std::string s;
    for (const auto& m : j) s += (s.empty() ? "" : ",") + mode_entry(m);
    return s;
  }
  throw CLI::ConversionError("transform entries must be strings, mode objects or arrays of mode objects");
}

std::string scalar(const json& j) {
  if (j.is_string()) return j.get<std::string>();
  if (j.is_boolean()) return j.get<bool>() ? "true" : "false";
  return j.dump();
}

/// JSON config files whose keys are the long flag names of the subcommand.
class JsonConfig : public CLI::Config {
 public:
  explicit JsonConfig(const CLI::App* app) : app_(app) {}

  std::string to_config(const CLI::App* app, bool default_also, bool, std::string) const override {
    json j;
    for (const CLI::Option* opt : app->get_options({})) {
      if (opt->get_lnames().empty() || !opt->get_configurable()) continue;
      const std::string name = opt->get_lnames().front();
      if (opt->count() > 0) {
        const auto& r = opt->results();
        j[name] = r.size() == 1 ? json(r.front()) : json(r);
      } else if (default_also && !opt->get_default_str().empty()) {
        j[name] = opt->get_default_str();
      }
    }
    return j.dump(2) + "\n";
  }

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    json doc;
    try {
      input >> doc;
    } catch (const json::exception& e) {
      throw CLI::FileError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw CLI::FileError("config must be a JSON object");
    std::vector<std::string> parents;
    for (const CLI::App* sub : app_->get_subcommands()) parents.push_back(sub->get_name());
    std::vector<CLI::ConfigItem> items;
    for (const auto& [key, value] : doc.items()) {
      CLI::ConfigItem item;
      item.name = key;
      item.parents = parents;
      if (key == "transform") {
        if (value.is_array() && !(value.size() > 0 && value.front().is_object()))
          for (const auto& v : value) item.inputs.push_back(transform_entry(v));
        else
          item.inputs.push_back(transform_entry(value));
      } else if (value.is_array()) {
        for (const auto& v : value) item.inputs.push_back(scalar(v));
      } else {
        item.inputs.push_back(scalar(value));
      }
      items.push_back(std::move(item));
    }
    return items;
  }

 private:
  const CLI::App* app_;
};

std::size_t resolve_threads(std::size_t n) {
  return n == 0 ? std::max(1u, std::thread::hardware_concurrency()) : n;
}

void add_dataset(CLI::App* sub, mtensor::cli::DatasetOptions& d) {
  sub->add_option("--input", d.input, "samples TNSR (trials on mode 2), or IDX images with --idx-labels")->required();
  sub->add_option("--labels", d.labels, "label CSV (trial_index,label)");
  sub->add_option("--roi", d.roi, "ROI label TNSR, shape (n1, 1, n3, ..., np)");
  sub->add_option("--idx-labels", d.idx_labels, "IDX label file; --input is then an IDX image file");
  sub->add_option("--classes", d.classes, "labels to keep")->delimiter(',');
  sub->add_option("--per-class", d.per_class, "keep the first N trials of each class (0 keeps all)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tensor M-product decompositions and projection classifiers"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "JSON file of subcommand flag values; flags given on the command line win");
  app.config_formatter(std::make_shared<JsonConfig>(&app));

  namespace mc = mtensor::cli;

  mc::DecomposeOptions dec;
  auto* decompose = app.add_subcommand("decompose", "t-SVDM of a TNSR tensor with a truncation error table");
  decompose->add_option("--input", dec.input, "input TNSR tensor")->required();
  decompose->add_option("--transform", dec.transform, "kind[:param] or mode:kind[:param],...")->capture_default_str();
  decompose->add_option("--roi", dec.roi, "ROI label TNSR for roi:label transforms");
  decompose->add_option("--k", dec.k, "truncate the written factors to t-rank k");
  decompose->add_option("--out", dec.out, "prefix for the factor files (default: input path without extension + _)");
  decompose->add_option("--seed", dec.seed, "seed for random transforms")->capture_default_str();
  decompose->add_option("--threads", dec.threads, "worker threads (0: all cores)")->capture_default_str();

  mc::SweepOptions sw;
  std::vector<std::size_t> sweep_k;
  std::string sweep_range;
  auto* sweep = app.add_subcommand("sweep", "classification accuracy over transforms and k (CSV)");
  add_dataset(sweep, sw.data);
  sweep->add_option("--transform", sw.transforms, "repeatable: matrix, kind[:param] or mode:kind[:param],...")
      ->take_all();
  sweep->add_option("--k", sweep_k, "truncation values")->delimiter(',');
  sweep->add_option("--k-range", sweep_range, "inclusive range a..b (ignored when --k is given)");
  sweep->add_option("--split", sw.split, "training fraction per class")->capture_default_str();
  sweep->add_option("--seed", sw.seed, "seed for the split and random transforms")->capture_default_str();
  sweep->add_option("--out", sw.out, "CSV output file (default: stdout)");
  sweep->add_option("--threads", sw.threads, "worker threads (0: all cores)")->capture_default_str();

  mc::RoiSweepOptions rs;
  auto* roi_sweep = app.add_subcommand("roi-sweep", "accuracy with ROI-dependent transforms per ROI label (CSV)");
  add_dataset(roi_sweep, rs.data);
  roi_sweep->add_option("--roi-labels", rs.roi_labels, "ROI labels to evaluate (default: all)")->delimiter(',');
  roi_sweep->add_option("--k", rs.k, "truncation")->capture_default_str();
  roi_sweep->add_option("--split", rs.split, "training fraction per class")->capture_default_str();
  roi_sweep->add_option("--seed", rs.seed, "seed for the split")->capture_default_str();
  roi_sweep->add_option("--out", rs.out, "CSV output file (default: stdout)");
  roi_sweep->add_option("--threads", rs.threads, "worker threads (0: all cores)")->capture_default_str();

  mc::SynthOptions sy;
  auto* synth = app.add_subcommand("synth", "write a synthetic dataset");
  synth->add_option("--kind", sy.kind, "planted, roi or digits")->capture_default_str();
  synth->add_option("--out", sy.out, "output directory")->capture_default_str();
  synth->add_option("--classes", sy.classes, "number of classes")->capture_default_str();
  synth->add_option("--trials", sy.trials, "trials (or images) per class")->capture_default_str();
  synth->add_option("--shape", sy.shape, "sample shape n1,n3,...,np")->delimiter(',');
  synth->add_option("--rank", sy.rank, "planted t-rank per class")->capture_default_str();
  double synth_sigma = 0.0;
  auto* sigma_opt = synth->add_option("--sigma", synth_sigma, "Gaussian noise level (default: 0 planted, 3 roi)");
  synth->add_option("--seed", sy.seed, "generator seed")->capture_default_str();
  synth->add_option("--transform", sy.transform, "planting transform: dct, haar, identity or random")
      ->capture_default_str();
  synth->add_option("--roi-labels", sy.roi_labels, "number of ROI blocks along mode 1")->capture_default_str();
  synth->add_option("--planted-label", sy.planted_label, "ROI block carrying the class signal")
      ->capture_default_str();
  synth->add_option("--components", sy.components, "signal components in the planted ROI")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (decompose->parsed()) {
      dec.threads = resolve_threads(dec.threads);
      return mc::cmd_decompose(dec, std::cout, std::cerr);
    }
    if (sweep->parsed()) {
      if (!sweep_k.empty())
        sw.ks = sweep_k;
      else if (!sweep_range.empty())
        sw.ks = mc::parse_k_range(sweep_range);
      else
        throw std::invalid_argument("give --k or --k-range");
      sw.threads = resolve_threads(sw.threads);
      return mc::cmd_sweep(sw, std::cout, std::cerr);
    }
    if (roi_sweep->parsed()) {
      rs.threads = resolve_threads(rs.threads);
      return mc::cmd_roi_sweep(rs, std::cout, std::cerr);
    }
    if (synth->parsed()) {
      if (sigma_opt->count() > 0) sy.sigma = synth_sigma;
      return mc::cmd_synth(sy, std::cout, std::cerr);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
