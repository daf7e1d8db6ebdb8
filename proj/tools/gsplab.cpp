// gsplab: runs the library's experiments from JSON configs and writes
// CSV results, the resolved config and a manifest into one output directory.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "gsplab/errors.hpp"
#include "gsplab/graph_io.hpp"
#include "gsplab/graphon.hpp"
#include "gsplab/recsys.hpp"
#include "gsplab/stability.hpp"
#include "gsplab/suites.hpp"

namespace {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;
using namespace gsplab;

constexpr int kExitOk = 0;
constexpr int kExitAssertion = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

template <typename T>
struct is_vector : std::false_type {};
template <typename T>
struct is_vector<std::vector<T>> : std::true_type {};

template <typename T>
void check_json_type(const json& j, const std::string& where) {
  if constexpr (std::is_same_v<T, bool>) {
    if (!j.is_boolean()) throw UsageError(where + ": expected a boolean");
  } else if constexpr (std::is_unsigned_v<T>) {
    if (!j.is_number_unsigned()) throw UsageError(where + ": expected a non-negative integer");
  } else if constexpr (std::is_floating_point_v<T>) {
    if (!j.is_number()) throw UsageError(where + ": expected a number");
  } else if constexpr (std::is_same_v<T, std::string>) {
    if (!j.is_string()) throw UsageError(where + ": expected a string");
  } else if constexpr (is_vector<T>::value) {
    if (!j.is_array()) throw UsageError(where + ": expected an array");
    for (std::size_t i = 0; i < j.size(); ++i)
      check_json_type<typename T::value_type>(j[i], where + "[" + std::to_string(i) + "]");
  } else if constexpr (std::is_integral_v<T>) {
    if (!j.is_number_integer()) throw UsageError(where + ": expected an integer");
  }
}

// One JSON object of the config. Reads typed fields with defaults, records
// the values actually used, and rejects keys nobody asked for.
class Section {
 public:
  Section(const json& in, std::string path) : path_(std::move(path)) {
    if (in.is_null()) {
      in_ = json::object();
    } else if (!in.is_object()) {
      throw UsageError(path_ + " must be a JSON object");
    } else {
      in_ = in;
    }
  }

  template <typename T>
  void field(const std::string& key, T& value) {
    known_.push_back(key);
    if (auto it = in_.find(key); it != in_.end()) {
      check_json_type<T>(*it, path_ + "." + key);
      value = it->get<T>();
    }
    out_[key] = value;
  }

  bool has(const std::string& key) const { return in_.contains(key) && !in_.at(key).is_null(); }

  Section child(const std::string& key) {
    known_.push_back(key);
    return Section(in_.contains(key) ? in_.at(key) : json(), path_ + "." + key);
  }

  void put(const std::string& key, json value) { out_[key] = std::move(value); }

  json finish() const {
    for (const auto& item : in_.items())
      if (std::find(known_.begin(), known_.end(), item.key()) == known_.end())
        throw UsageError("unknown config key '" + path_ + "." + item.key() + "'");
    return out_;
  }

 private:
  json in_;
  std::string path_;
  std::vector<std::string> known_;
  json out_ = json::object();
};

template <typename Parse>
auto parse_enum(Section& s, const std::string& key, const std::string& fallback, Parse parse) {
  std::string name = fallback;
  s.field(key, name);
  try {
    return parse(name);
  } catch (const ValidationError& e) {
    throw UsageError(std::string(e.what()));
  }
}

GnnArchitecture read_architecture(Section& parent, const std::string& key, GnnArchitecture arch,
                                  json& resolved) {
  Section s = parent.child(key);
  s.field("features", arch.features);
  s.field("taps", arch.taps);
  arch.nonlinearity = parse_enum(s, "nonlinearity", to_string(arch.nonlinearity), parse_nonlinearity);
  s.field("readout", arch.readout);
  resolved = s.finish();
  try {
    arch.validate();
  } catch (const ValidationError& e) {
    throw UsageError(key + ": " + e.what());
  }
  return arch;
}

struct Assertion {
  std::string name;
  bool passed = false;
  double value = 0.0;
  double threshold = 0.0;
  std::string relation;  ///< how value compares to threshold when passing
  bool gating = true;
};

std::string iso_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream out;
  out << std::hex;
  out.width(16);
  out.fill('0');
  out << h;
  return out.str();
}

void write_atomic(const fs::path& path, const std::string& content) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
    if (!out.flush()) throw std::runtime_error("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

class Run {
 public:
  Run(std::string command, fs::path out) : command_(std::move(command)), out_(std::move(out)) {}

  const fs::path& out() const { return out_; }

  void file(const std::string& name, const std::function<void(std::ostream&)>& writer) {
    std::ostringstream buf;
    writer(buf);
    write_atomic(out_ / name, buf.str());
    files_.push_back(name);
  }

  void check_le(const std::string& name, double value, double threshold, bool gating = true) {
    assertions_.push_back({name, value <= threshold, value, threshold, "<=", gating});
  }
  void check_ge(const std::string& name, double value, double threshold, bool gating = true) {
    assertions_.push_back({name, value >= threshold, value, threshold, ">=", gating});
  }

  bool passed() const {
    return std::all_of(assertions_.begin(), assertions_.end(),
                       [](const Assertion& a) { return a.passed || !a.gating; });
  }

  json assertions_json() const {
    json list = json::array();
    for (const Assertion& a : assertions_) {
      list.push_back({{"name", a.name},
                      {"passed", a.passed},
                      {"gating", a.gating},
                      {"value", std::isfinite(a.value) ? json(a.value) : json(format_double(a.value))},
                      {"relation", a.relation},
                      {"threshold", a.threshold}});
    }
    return list;
  }

  void report(std::ostream& out) const {
    for (const Assertion& a : assertions_) {
      out << (a.passed ? "PASS " : (a.gating ? "FAIL " : "WARN ")) << command_ << '.' << a.name
          << ": " << format_double(a.value) << ' ' << a.relation << ' ' << format_double(a.threshold)
          << '\n';
    }
  }

  const std::vector<std::string>& files() const { return files_; }

 private:
  std::string command_;
  fs::path out_;
  std::vector<std::string> files_;
  std::vector<Assertion> assertions_;
};

struct Common {
  std::uint64_t seed = 1;
  std::size_t threads = 1;
  std::optional<fs::path> data_dir;
};

using Job = std::function<void(Run&)>;

// ---- equivariance ----------------------------------------------------------

Job configure_equivariance(Section& p, const Common& common) {
  EquivarianceConfig cfg;
  double tolerance = 1e-10;
  p.field("trials", cfg.trials);
  p.field("n", cfg.n);
  p.field("edge_probability", cfg.edge_probability);
  json arch;
  cfg.architecture = read_architecture(p, "architecture", cfg.architecture, arch);
  p.put("architecture", arch);
  p.field("tolerance", tolerance);
  cfg.seed = common.seed;
  if (cfg.n < 2) throw UsageError("params.n must be at least 2");
  return [cfg, tolerance](Run& run) {
    const auto rows = equivariance_suite(cfg);
    double filter = 0.0, gnn = 0.0;
    run.file("equivariance.csv", [&](std::ostream& out) {
      out << "trial,filter_deviation,gnn_deviation\n";
      for (const auto& r : rows) {
        out << r.trial << ',' << format_double(r.filter_deviation) << ',' << format_double(r.gnn_deviation)
            << '\n';
        filter = std::max(filter, r.filter_deviation);
        gnn = std::max(gnn, r.gnn_deviation);
      }
    });
    run.check_le("filter_equivariance", filter, tolerance);
    run.check_le("gnn_equivariance", gnn, tolerance);
  };
}

// ---- selftest --------------------------------------------------------------

Job configure_selftest(Section& p, const Common& common) {
  EquivarianceConfig eq;
  GradientConfig grad;
  std::size_t parseval_trials = 20, first_order_instances = 10;
  double eq_tol = 1e-10, grad_tol = 1e-5, parseval_tol = 1e-10, min_slope = 1.9;
  p.field("equivariance_trials", eq.trials);
  p.field("gradient_trials", grad.trials);
  p.field("parseval_trials", parseval_trials);
  p.field("first_order_instances", first_order_instances);
  p.field("equivariance_tolerance", eq_tol);
  p.field("gradient_tolerance", grad_tol);
  p.field("parseval_tolerance", parseval_tol);
  p.field("min_slope", min_slope);
  eq.seed = grad.seed = common.seed;
  const std::uint64_t seed = common.seed;
  return [=](Run& run) {
    struct Line {
      std::string suite;
      std::size_t trials;
      double worst, threshold;
      bool upper;
    };
    std::vector<Line> lines;
    double worst = 0.0;
    const auto eq_rows = equivariance_suite(eq);
    for (const auto& r : eq_rows) worst = std::max({worst, r.filter_deviation, r.gnn_deviation});
    lines.push_back({"equivariance", eq_rows.size(), worst, eq_tol, true});
    worst = 0.0;
    const auto grad_rows = gradient_suite(grad);
    for (const auto& r : grad_rows) worst = std::max(worst, r.max_relative_error);
    lines.push_back({"gradient", grad_rows.size(), worst, grad_tol, true});
    worst = 0.0;
    const auto parseval_rows = parseval_suite(parseval_trials, 20, seed);
    for (const auto& r : parseval_rows) worst = std::max({worst, r.isometry, r.round_trip});
    lines.push_back({"parseval", parseval_rows.size(), worst, parseval_tol, true});
    worst = INFINITY;
    const auto fo_rows = first_order_suite(first_order_instances, 8, seed);
    for (const auto& r : fo_rows) worst = std::min({worst, r.slope_absolute, r.slope_relative});
    lines.push_back({"first_order", fo_rows.size(), worst, min_slope, false});

    run.file("selftest.csv", [&](std::ostream& out) {
      out << "suite,trials,worst,threshold,passed\n";
      for (const Line& l : lines) {
        const bool ok = l.upper ? l.worst <= l.threshold : l.worst >= l.threshold;
        out << l.suite << ',' << l.trials << ',' << format_double(l.worst) << ','
            << format_double(l.threshold) << ',' << (ok ? "true" : "false") << '\n';
      }
    });
    for (const Line& l : lines) {
      if (l.upper) {
        run.check_le(l.suite, l.worst, l.threshold);
      } else {
        run.check_ge(l.suite, l.worst, l.threshold);
      }
    }
  };
}

// ---- stability -------------------------------------------------------------

Job configure_stability(Section& p, const Common& common) {
  StabilitySweepConfig cfg;
  std::vector<double> taps;
  double slack = 1.1, delta_tolerance = 1e-8, contrast_ratio = 10.0;
  p.field("trials", cfg.trials);
  p.field("n", cfg.n);
  p.field("edge_probability", cfg.edge_probability);
  p.field("epsilons", cfg.epsilons);
  p.field("models", cfg.models);
  p.field("filter", taps);
  json arch;
  cfg.gnn = read_architecture(p, "gnn", cfg.gnn, arch);
  p.put("gnn", arch);
  p.field("gnn_inputs", cfg.gnn_inputs);
  p.field("contrast", cfg.contrast);
  p.field("contrast_alpha", cfg.contrast_alpha);
  p.field("contrast_width", cfg.contrast_width);
  p.field("bound_slack", slack);
  p.field("delta_tolerance", delta_tolerance);
  p.field("contrast_ratio", contrast_ratio);
  cfg.filter.taps = taps;
  cfg.seed = common.seed;
  cfg.threads = common.threads;
  return [=](Run& run) {
    const auto rows = stability_sweep(cfg);
    run.file("stability.csv", [&](std::ostream& out) { write_stability_csv(out, rows); });

    double worst_ratio = 0.0, worst_delta = 0.0;
    bool any_dilation = false;
    std::map<std::size_t, std::pair<double, double>> contrast;
    for (const StabilityRow& r : rows) {
      if (r.model == "contrast-sharp") {
        contrast[r.trial].first = r.empirical;
      } else if (r.model == "contrast-il") {
        contrast[r.trial].second = r.empirical;
      } else {
        if (r.bound_thm1 > 0.0) worst_ratio = std::max(worst_ratio, r.empirical / r.bound_thm1);
        if (r.model.rfind("dilation", 0) == 0) {
          any_dilation = true;
          worst_delta = std::max(worst_delta, r.delta);
        }
      }
    }
    run.check_le("bound_dominance", worst_ratio, slack);
    if (any_dilation) run.check_le("dilation_delta", worst_delta, delta_tolerance);
    if (!contrast.empty()) {
      double worst = INFINITY;
      for (const auto& [trial, gaps] : contrast) worst = std::min(worst, gaps.first / gaps.second);
      run.check_ge("contrast_ratio", worst, contrast_ratio);
    }
  };
}

// ---- graphon-transfer ------------------------------------------------------

Job configure_graphon(Section& p, const Common& common) {
  TransferSweepConfig cfg;
  p.field("beta", cfg.beta);
  p.field("sizes", cfg.sizes);
  p.field("reference_resolution", cfg.reference_resolution);
  p.field("c", cfg.c);
  p.field("filter_order", cfg.filter_order);
  p.field("layers", cfg.layers);
  p.field("signal", cfg.signal);
  cfg.threads = common.threads;
  return [cfg](Run& run) {
    const TransferSweepResult result = transfer_sweep(cfg);
    run.file("graphon_transfer.csv", [&](std::ostream& out) { write_transfer_csv(out, result.rows); });
    std::size_t increases = 0;
    double approx = 0.0, transfer = 0.0;
    for (std::size_t k = 0; k < result.rows.size(); ++k) {
      const TransferRow& r = result.rows[k];
      if (k > 0 && !(r.dist_to_ref < result.rows[k - 1].dist_to_ref)) ++increases;
      approx = std::max(approx, r.dist_to_ref / r.bound_approx);
      if (k > 0) transfer = std::max(transfer, r.dist_consecutive / r.bound_transfer);
    }
    run.check_le("strictly_decreasing_violations", static_cast<double>(increases), 0.0);
    run.check_le("approximation_bound_ratio", approx, 1.0);
    if (result.rows.size() > 1) run.check_le("transfer_bound_ratio", transfer, 1.0);
  };
}

// ---- movielens -------------------------------------------------------------

struct DataSource {
  std::optional<SyntheticRatingsConfig> synthetic;
  fs::path ratings;
};

DataSource read_data_source(Section& p, const Common& common) {
  DataSource src;
  if (p.has("synthetic")) {
    SyntheticRatingsConfig s;
    Section syn = p.child("synthetic");
    syn.field("users", s.users);
    syn.field("items", s.items);
    syn.field("rank", s.rank);
    syn.field("density", s.density);
    syn.field("noise", s.noise);
    syn.field("min_per_user", s.min_per_user);
    syn.field("seed", s.seed);
    p.put("synthetic", syn.finish());
    src.synthetic = s;
    return src;
  }
  p.child("synthetic");  // accept an explicit null
  const char* env = std::getenv("GSPLAB_DATA_DIR");
  if (!common.data_dir && !(env && *env))
    throw UsageError("MovieLens data path not given: pass --data-dir or set GSPLAB_DATA_DIR");
  const fs::path base = common.data_dir ? *common.data_dir : fs::path(env);
  src.ratings = fs::is_directory(base) ? base / "u.data" : base;
  if (!fs::is_regular_file(src.ratings))
    throw UsageError("MovieLens ratings file not found: " + src.ratings.string());
  p.put("ratings_file", src.ratings.string());
  return src;
}

RatingsTable load(const DataSource& src) {
  return src.synthetic ? synthetic_ratings(*src.synthetic) : load_movielens(src.ratings);
}

void read_split(Section& p, SplitSpec& split, const Common& common) {
  p.field("splits", split.splits);
  p.field("train_fraction", split.train);
  p.field("validation_fraction", split.validation);
  p.field("test_fraction", split.test);
  split.seed = common.seed;
  try {
    split.validate();
  } catch (const ValidationError& e) {
    throw UsageError(e.what());
  }
}

void read_training(Section& p, TrainConfig& train, const Common& common) {
  p.field("epochs", train.epochs);
  p.field("batch_size", train.batch_size);
  p.field("learning_rate", train.adam.learning_rate);
  p.field("beta1", train.adam.beta1);
  p.field("beta2", train.adam.beta2);
  train.loss = parse_enum(p, "loss", to_string(train.loss), parse_loss);
  if (train.loss == LossKind::mse_full) throw UsageError("params.loss: recommendation samples use a readout loss");
  p.field("select_best_validation", train.select_best_validation);
  train.seed = common.seed;
}

void read_similarity(Section& p, SimilarityOptions& sim, bool& from_training) {
  p.field("min_common", sim.min_common);
  p.field("knn", sim.knn);
  p.field("graph_from_training", from_training);
}

const std::vector<std::pair<std::string, double>>& reference_rmse() {
  static const std::vector<std::pair<std::string, double>> table{
      {"linear", 1.967},       {"graph-filter", 1.054}, {"fcnn", 1.116},         {"graph-perceptron", 1.079},
      {"gnn-l2-f1", 1.076},    {"gnn-l1-f64", 1.050},   {"gnn-l2-f64-32", 0.964}};
  return table;
}

Job configure_movielens(Section& p, const Common& common) {
  const DataSource src = read_data_source(p, common);
  RmseExperimentConfig cfg;
  std::vector<long> target_ids;
  double reference_tolerance = 0.15, ordering_fraction = 0.8;
  p.field("top_k", cfg.top_k);
  p.field("target_items", target_ids);
  p.field("graph_items", cfg.graph_items);
  p.field("taps", cfg.taps);
  p.field("models", cfg.models);
  read_split(p, cfg.split, common);
  read_similarity(p, cfg.similarity, cfg.graph_from_training);
  read_training(p, cfg.train, common);
  p.field("reference_tolerance", reference_tolerance);
  p.field("ordering_fraction", ordering_fraction);
  cfg.threads = common.threads;

  return [=](Run& run) mutable {
    const RatingsTable table = load(src);
    for (long id : target_ids) cfg.target_items.push_back(table.item_index(id));
    const auto result = run_rmse_experiment(table, cfg);
    run.file("movielens_rmse.csv", [&](std::ostream& out) { write_rmse_csv(out, result.rows); });

    struct Stats {
      double sum = 0.0, sum_sq = 0.0, val = 0.0;
      std::size_t count = 0, params = 0;
    };
    std::map<std::string, Stats> stats;
    for (const RmseRow& r : result.rows) {
      Stats& s = stats[r.model];
      s.sum += r.rmse_test;
      s.sum_sq += r.rmse_test * r.rmse_test;
      s.val += r.rmse_val;
      s.params = r.param_count;
      ++s.count;
    }
    run.file("movielens_summary.csv", [&](std::ostream& out) {
      out << "model,mean_rmse_test,std_rmse_test,mean_rmse_val,param_count\n";
      for (const std::string& m : cfg.models) {
        const Stats& s = stats[m];
        const double n = static_cast<double>(s.count);
        const double mean = s.sum / n;
        const double var = std::max(0.0, s.sum_sq / n - mean * mean);
        out << m << ',' << format_double(mean) << ',' << format_double(std::sqrt(var)) << ','
            << format_double(s.val / n) << ',' << s.params << '\n';
      }
    });
    run.file("movielens_dataset.json", [&](std::ostream& out) {
      out << json{{"ratings", table.ratings.size()},
                  {"users", table.user_count()},
                  {"items", table.item_count()},
                  {"samples", result.samples},
                  {"degenerate_samples", result.degenerate_samples},
                  {"graph_nodes", result.graph_nodes}}
                 .dump(2)
          << '\n';
    });

    const bool real = !src.synthetic;
    const auto has = [&](const std::string& m) { return stats.count(m) > 0; };
    if (has("gnn-l2-f64-32") && has("graph-filter") && has("linear")) {
      std::map<std::size_t, std::map<std::string, double>> by_split;
      for (const RmseRow& r : result.rows) by_split[r.split][r.model] = r.rmse_test;
      std::size_t ordered = 0;
      for (auto& [split, m] : by_split)
        if (m["gnn-l2-f64-32"] < m["graph-filter"] && m["graph-filter"] < m["linear"]) ++ordered;
      run.check_ge("ordering_fraction", static_cast<double>(ordered) / static_cast<double>(by_split.size()),
                   ordering_fraction, real);
    }
    if (real) {
      for (const auto& [model, ref] : reference_rmse()) {
        if (!has(model)) continue;
        const Stats& s = stats[model];
        run.check_le("reference_gap." + model, std::abs(s.sum / static_cast<double>(s.count) - ref),
                     reference_tolerance, false);
      }
    }
  };
}

Job configure_movielens_transfer(Section& p, const Common& common) {
  const DataSource src = read_data_source(p, common);
  TransferExperimentConfig cfg;
  std::size_t allowed_inversions = 1;
  p.field("target_item_id", cfg.target_item_id);
  p.field("sizes", cfg.sizes);
  json arch;
  cfg.architecture = read_architecture(p, "architecture", cfg.architecture, arch);
  p.put("architecture", arch);
  read_split(p, cfg.split, common);
  read_similarity(p, cfg.similarity, cfg.graph_from_training);
  read_training(p, cfg.train, common);
  p.field("allowed_inversions", allowed_inversions);
  cfg.threads = common.threads;

  return [=](Run& run) {
    const RatingsTable table = load(src);
    const auto rows = run_transfer_experiment(table, cfg);
    run.file("movielens_transfer.csv", [&](std::ostream& out) { write_recsys_transfer_csv(out, rows); });
    std::size_t inversions = 0;
    for (std::size_t k = 1; k < rows.size(); ++k)
      if (rows[k].rel_diff > rows[k - 1].rel_diff) ++inversions;
    run.check_le("rel_diff_inversions", static_cast<double>(inversions), static_cast<double>(allowed_inversions),
                 !src.synthetic);
    for (const RecsysTransferRow& r : rows)
      if (r.n == table.item_count()) run.check_le("full_graph_rel_diff", r.rel_diff, 0.0);
  };
}

using Configure = Job (*)(Section&, const Common&);

const std::vector<std::pair<std::string, Configure>>& commands() {
  static const std::vector<std::pair<std::string, Configure>> list{
      {"equivariance", configure_equivariance},   {"stability", configure_stability},
      {"graphon-transfer", configure_graphon},    {"movielens", configure_movielens},
      {"movielens-transfer", configure_movielens_transfer}, {"selftest", configure_selftest}};
  return list;
}

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string data_dir;
  std::optional<std::size_t> threads;
};

int execute(const std::string& command, Configure configure, const Flags& flags) {
  json root = json::object();
  if (!flags.config.empty()) {
    std::ifstream in(flags.config);
    if (!in) throw UsageError("cannot read config file " + flags.config);
    try {
      root = json::parse(in);
    } catch (const json::parse_error& e) {
      throw UsageError("config " + flags.config + ": " + e.what());
    }
  }
  Section top(root, "config");
  std::string config_command = command;
  top.field("command", config_command);
  if (config_command != command)
    throw UsageError("config is for '" + config_command + "', not '" + command + "'");

  Common common;
  std::string output_dir = "results/" + command;
  std::string data_dir;
  top.field("seed", common.seed);
  top.field("threads", common.threads);
  top.field("output_dir", output_dir);
  top.field("data_dir", data_dir);
  if (flags.seed) common.seed = *flags.seed;
  if (flags.threads) common.threads = *flags.threads;
  if (!flags.out.empty()) output_dir = flags.out;
  if (!flags.data_dir.empty()) data_dir = flags.data_dir;
  if (!data_dir.empty()) common.data_dir = fs::path(data_dir);
  if (common.threads == 0) throw UsageError("threads must be at least 1");
  top.put("seed", common.seed);
  top.put("threads", common.threads);
  top.put("output_dir", output_dir);
  top.put("data_dir", data_dir);

  Section params = top.child("params");
  Job job;
  try {
    job = configure(params, common);
  } catch (const ValidationError& e) {
    throw UsageError(e.what());
  }
  top.put("params", params.finish());
  const json resolved = top.finish();
  const std::string resolved_text = resolved.dump(2) + "\n";

  const std::string started = iso_now();
  fs::create_directories(output_dir);
  Run run(command, output_dir);
  write_atomic(run.out() / "config.json", resolved_text);
  try {
    job(run);
  } catch (const ValidationError& e) {
    throw UsageError(e.what());
  }
  const std::string finished = iso_now();

  json files = json::array({"config.json"});
  for (const std::string& f : run.files()) files.push_back(f);
  files.push_back("manifest.json");
  const json manifest{{"command", command},
                      {"config_hash", "fnv1a64:" + fnv1a_hex(resolved_text)},
                      {"started", started},
                      {"finished", finished},
                      {"files", files},
                      {"passed", run.passed()},
                      {"assertions", run.assertions_json()}};
  write_atomic(run.out() / "manifest.json", manifest.dump(2) + "\n");

  run.report(std::cout);
  std::cout << (run.passed() ? "ok" : "assertions failed") << ": " << (run.out() / "manifest.json").string()
            << '\n';
  if (!run.passed()) {
    json failed = json::array();
    for (const auto& a : run.assertions_json())
      if (!a["passed"].get<bool>() && a["gating"].get<bool>()) failed.push_back(a);
    std::cerr << json{{"command", command}, {"failed", failed}}.dump() << '\n';
    return kExitAssertion;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Graph signal processing and GNN experiments"};
  app.require_subcommand(1);
  Flags flags;
  std::map<std::string, CLI::App*> subs;
  for (const auto& [name, configure] : commands()) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", flags.config, "JSON config file")->check(CLI::ExistingFile);
    sub->add_option("--seed", flags.seed, "Seed (overrides the config)");
    sub->add_option("--out", flags.out, "Output directory");
    sub->add_option("--data-dir", flags.data_dir, "Directory holding u.data (or the file itself)");
    sub->add_option("--threads", flags.threads, "Worker threads")->check(CLI::PositiveNumber);
    subs[name] = sub;
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  for (const auto& [name, configure] : commands()) {
    if (!subs[name]->parsed()) continue;
    try {
      return execute(name, configure, flags);
    } catch (const UsageError& e) {
      std::cerr << "gsplab " << name << ": " << e.what() << '\n';
      return kExitUsage;
    } catch (const std::exception& e) {
      std::cerr << "gsplab " << name << ": error: " << e.what() << '\n';
      return kExitUsage;
    }
  }
  return kExitUsage;
}
