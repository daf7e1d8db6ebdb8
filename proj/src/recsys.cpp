#include "gsplab/recsys.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <set>
#include <string_view>
#include <utility>

#include "gsplab/errors.hpp"
#include "gsplab/graph_io.hpp"
#include "gsplab/parallel.hpp"

namespace gsplab {
namespace {

constexpr std::size_t kNone = static_cast<std::size_t>(-1);

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

template <typename T>
T parse_field(std::string_view field, const char* what, std::size_t line) {
  T value{};
  const auto [end, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || end != field.data() + field.size()) {
    throw ParseError(std::string("bad ") + what + " '" + std::string(field) + "'", line);
  }
  return value;
}

std::vector<long> dense_ids(std::vector<long> ids) {
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  return ids;
}

std::size_t lookup(const std::vector<long>& ids, long id) {
  return static_cast<std::size_t>(std::lower_bound(ids.begin(), ids.end(), id) - ids.begin());
}

struct ItemRatings {
  std::vector<std::size_t> users;  // ascending
  std::vector<double> values;
};

std::vector<ItemRatings> ratings_by_item(const RatingsTable& table) {
  std::vector<ItemRatings> out(table.item_count());
  std::vector<std::size_t> order(table.ratings.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return table.ratings[a].user < table.ratings[b].user;
  });
  for (std::size_t r : order) {
    const Rating& rating = table.ratings[r];
    out[rating.item].users.push_back(rating.user);
    out[rating.item].values.push_back(rating.value);
  }
  return out;
}

double mean(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

// Population variance around the two-pass mean.
double variance(std::span<const double> v) {
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size());
}

double pair_weight(const ItemRatings& a, const ItemRatings& b, double var_a, double var_b,
                   std::size_t min_common) {
  if (var_a <= 0.0 || var_b <= 0.0) return 0.0;
  std::vector<double> xa, xb;
  std::size_t p = 0, q = 0;
  while (p < a.users.size() && q < b.users.size()) {
    if (a.users[p] < b.users[q]) {
      ++p;
    } else if (b.users[q] < a.users[p]) {
      ++q;
    } else {
      xa.push_back(a.values[p++]);
      xb.push_back(b.values[q++]);
    }
  }
  if (xa.empty() || xa.size() < min_common) return 0.0;
  const double ma = mean(xa);
  const double mb = mean(xb);
  double cov = 0.0;
  for (std::size_t k = 0; k < xa.size(); ++k) cov += (xa[k] - ma) * (xb[k] - mb);
  cov /= static_cast<double>(xa.size());
  return std::clamp(cov / std::sqrt(var_a * var_b), -1.0, 1.0);
}

Matrix sparsify_knn(const Matrix& w, std::size_t k) {
  const std::size_t n = w.rows();
  if (k == 0 || k + 1 >= n) return w;
  Matrix keep(n, n);
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < n; ++i) {
    idx.clear();
    for (std::size_t j = 0; j < n; ++j)
      if (j != i && w(i, j) != 0.0) idx.push_back(j);
    const std::size_t take = std::min(k, idx.size());
    std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(take), idx.end(),
                      [&](std::size_t a, std::size_t b) {
                        if (w(i, a) != w(i, b)) return w(i, a) > w(i, b);
                        return a < b;
                      });
    for (std::size_t t = 0; t < take; ++t) keep(i, idx[t]) = keep(idx[t], i) = 1.0;
  }
  Matrix out(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (keep(i, j) != 0.0) out(i, j) = w(i, j);
  return out;
}

RatingsTable without_ratings(const RatingsTable& table, const std::vector<bool>& drop) {
  RatingsTable out;
  out.user_ids = table.user_ids;
  out.item_ids = table.item_ids;
  out.ratings.reserve(table.ratings.size());
  for (std::size_t r = 0; r < table.ratings.size(); ++r)
    if (!drop[r]) out.ratings.push_back(table.ratings[r]);
  return out;
}

std::vector<bool> held_out_ratings(const RatingsTable& table, std::span<const RecSample> samples,
                                   const std::vector<SplitRole>& roles) {
  std::vector<bool> drop(table.ratings.size(), false);
  for (std::size_t s = 0; s < samples.size(); ++s)
    if (roles[s] != SplitRole::train) drop[samples[s].rating_index] = true;
  return drop;
}

struct SplitSets {
  std::vector<Sample> train, validation, test;
};

SplitSets partition(std::span<const RecSample> samples, const std::vector<SplitRole>& roles) {
  SplitSets out;
  for (std::size_t s = 0; s < samples.size(); ++s) {
    switch (roles[s]) {
      case SplitRole::train: out.train.push_back(samples[s].sample); break;
      case SplitRole::validation: out.validation.push_back(samples[s].sample); break;
      case SplitRole::test: out.test.push_back(samples[s].sample); break;
    }
  }
  return out;
}

TrainResult train_model(Model& model, const SplitSets& sets, const TrainConfig& config) {
  return train(model, sets.train, sets.validation, config);
}

double test_rmse(const Model& model, std::span<const Sample> samples) {
  return samples.empty() ? std::nan("") : evaluate_rmse(model, samples);
}

std::vector<std::size_t> all_items(const RatingsTable& table) {
  std::vector<std::size_t> items(table.item_count());
  std::iota(items.begin(), items.end(), 0);
  return items;
}

}  // namespace

std::size_t RatingsTable::item_index(long original_id) const {
  const auto it = std::lower_bound(item_ids.begin(), item_ids.end(), original_id);
  if (it == item_ids.end() || *it != original_id)
    throw ValidationError("item id " + std::to_string(original_id) + " not in the table");
  return static_cast<std::size_t>(it - item_ids.begin());
}

std::vector<std::size_t> RatingsTable::item_rating_counts() const {
  std::vector<std::size_t> counts(item_count(), 0);
  for (const Rating& r : ratings) ++counts[r.item];
  return counts;
}

RatingsTable parse_movielens(std::istream& in) {
  struct Raw {
    long user, item;
    double value;
  };
  std::vector<Raw> raw;
  std::set<std::pair<long, long>> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto fields = split_fields(line);
    if (fields.empty()) continue;
    if (fields.size() != 3 && fields.size() != 4)
      throw ParseError("expected 'user item rating timestamp', got " + std::to_string(fields.size()) +
                           " fields",
                       line_no);
    Raw r{parse_field<long>(fields[0], "user id", line_no),
          parse_field<long>(fields[1], "item id", line_no),
          parse_field<double>(fields[2], "rating", line_no)};
    if (fields.size() == 4) parse_field<long>(fields[3], "timestamp", line_no);
    if (!std::isfinite(r.value) || r.value < 1.0 || r.value > 5.0)
      throw ValidationError("rating " + std::string(fields[2]) + " outside [1, 5] (line " +
                            std::to_string(line_no) + ")");
    if (!seen.emplace(r.user, r.item).second)
      throw ValidationError("duplicate rating for user " + std::to_string(r.user) + ", item " +
                            std::to_string(r.item) + " (line " + std::to_string(line_no) + ")");
    raw.push_back(r);
  }

  RatingsTable table;
  std::vector<long> users, items;
  for (const Raw& r : raw) {
    users.push_back(r.user);
    items.push_back(r.item);
  }
  table.user_ids = dense_ids(std::move(users));
  table.item_ids = dense_ids(std::move(items));
  table.ratings.reserve(raw.size());
  for (const Raw& r : raw)
    table.ratings.push_back({lookup(table.user_ids, r.user), lookup(table.item_ids, r.item), r.value});
  return table;
}

RatingsTable load_movielens(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open ratings file " + path.string());
  return parse_movielens(in);
}

RatingsTable make_table(std::vector<Rating> ratings, std::size_t users, std::size_t items) {
  std::set<std::pair<std::size_t, std::size_t>> seen;
  for (const Rating& r : ratings) {
    if (r.user >= users || r.item >= items) throw DimensionError("rating index out of range");
    if (!std::isfinite(r.value) || r.value < 1.0 || r.value > 5.0)
      throw ValidationError("rating outside [1, 5]");
    if (!seen.emplace(r.user, r.item).second) throw ValidationError("duplicate (user, item) rating");
  }
  RatingsTable table;
  table.ratings = std::move(ratings);
  table.user_ids.resize(users);
  table.item_ids.resize(items);
  std::iota(table.user_ids.begin(), table.user_ids.end(), 1L);
  std::iota(table.item_ids.begin(), table.item_ids.end(), 1L);
  return table;
}

RatingsTable synthetic_ratings(const SyntheticRatingsConfig& c) {
  if (c.users == 0 || c.items == 0 || c.rank == 0)
    throw ValidationError("synthetic ratings need users, items and rank >= 1");
  if (c.min_per_user > c.items) throw ValidationError("min_per_user exceeds the item count");
  if (!(c.density >= 0.0 && c.density <= 1.0)) throw ValidationError("density must lie in [0, 1]");

  Rng rng(c.seed);
  const double scale = 1.0 / std::sqrt(static_cast<double>(c.rank));
  Matrix u(c.users, c.rank), v(c.items, c.rank);
  for (double& x : u.data()) x = rng.normal() * scale;
  for (double& x : v.data()) x = rng.normal() * scale;
  std::vector<double> bias(c.items);
  for (double& b : bias) b = 0.5 * rng.normal();

  std::vector<Rating> ratings;
  std::vector<std::size_t> items(c.items);
  for (std::size_t user = 0; user < c.users; ++user) {
    std::vector<bool> rated(c.items, false);
    std::size_t count = 0;
    for (std::size_t i = 0; i < c.items; ++i) {
      if (rng.uniform() < c.density) {
        rated[i] = true;
        ++count;
      }
    }
    if (count < c.min_per_user) {
      std::iota(items.begin(), items.end(), 0);
      rng.shuffle(std::span<std::size_t>(items));
      for (std::size_t t = 0; count < c.min_per_user; ++t) {
        if (!rated[items[t]]) {
          rated[items[t]] = true;
          ++count;
        }
      }
    }
    for (std::size_t i = 0; i < c.items; ++i) {
      if (!rated[i]) continue;
      double score = 3.0 + bias[i] + c.noise * rng.normal();
      for (std::size_t r = 0; r < c.rank; ++r) score += 1.5 * u(user, r) * v(i, r);
      ratings.push_back({user, i, std::clamp(std::round(score), 1.0, 5.0)});
    }
  }
  return make_table(std::move(ratings), c.users, c.items);
}

SimilarityGraph build_similarity_graph(const RatingsTable& table, std::span<const std::size_t> items,
                                       const SimilarityOptions& options) {
  if (items.empty()) throw ValidationError("similarity graph needs at least one item");
  for (std::size_t i : items)
    if (i >= table.item_count()) throw DimensionError("item index out of range");

  const auto by_item = ratings_by_item(table);
  const std::size_t n = items.size();
  std::vector<double> var(n, 0.0);
  for (std::size_t a = 0; a < n; ++a) {
    const auto& r = by_item[items[a]];
    if (!r.values.empty()) var[a] = variance(r.values);
  }

  Matrix w(n, n);
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a + 1; b < n; ++b) {
      const double v = pair_weight(by_item[items[a]], by_item[items[b]], var[a], var[b],
                                   options.min_common);
      w(a, b) = w(b, a) = v;
    }
  }

  SimilarityGraph g;
  g.weights = w;
  g.items.assign(items.begin(), items.end());
  g.min_common = options.min_common;
  Matrix sparse = sparsify_knn(w, options.knn);
  for (std::size_t a = 0; a < n; ++a) {
    bool empty = true;
    for (std::size_t b = 0; b < n && empty; ++b) empty = sparse(a, b) == 0.0;
    if (empty) ++g.isolated;
  }
  ShiftOperator s(std::move(sparse), "similarity");
  g.shift = options.normalize ? normalize_shift(s) : s;
  return g;
}

std::vector<RecSample> build_samples(const RatingsTable& table, std::span<const std::size_t> items,
                                     std::span<const std::size_t> target_items) {
  std::vector<std::size_t> node(table.item_count(), kNone);
  for (std::size_t k = 0; k < items.size(); ++k) {
    if (items[k] >= table.item_count()) throw DimensionError("item index out of range");
    node[items[k]] = k;
  }
  std::vector<bool> is_target(table.item_count(), false);
  for (std::size_t t : target_items) {
    if (t >= table.item_count() || node[t] == kNone)
      throw ValidationError("target item " + std::to_string(t) + " is not a graph node");
    is_target[t] = true;
  }

  std::vector<std::vector<std::size_t>> by_user(table.user_count());
  for (std::size_t r = 0; r < table.ratings.size(); ++r) by_user[table.ratings[r].user].push_back(r);

  std::vector<RecSample> out;
  for (std::size_t r = 0; r < table.ratings.size(); ++r) {
    const Rating& target = table.ratings[r];
    if (!is_target[target.item]) continue;
    RecSample s;
    s.user = target.user;
    s.item = target.item;
    s.rating_index = r;
    s.sample.x = GraphSignal(items.size(), 1);
    for (std::size_t q : by_user[target.user]) {
      const Rating& other = table.ratings[q];
      if (q != r && node[other.item] != kNone) s.sample.x(node[other.item], 0) = other.value;
    }
    s.sample.node = node[target.item];
    s.sample.target = target.value;
    out.push_back(std::move(s));
  }
  return out;
}

std::size_t count_degenerate(std::span<const RecSample> samples) {
  return static_cast<std::size_t>(std::count_if(samples.begin(), samples.end(), [](const RecSample& s) {
    const auto d = s.sample.x.data();
    return std::all_of(d.begin(), d.end(), [](double v) { return v == 0.0; });
  }));
}

std::vector<std::size_t> most_rated_items(const RatingsTable& table, std::size_t k) {
  const auto counts = table.item_rating_counts();
  std::vector<std::size_t> order(counts.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return counts[a] > counts[b]; });
  order.resize(std::min(k, order.size()));
  return order;
}

void SplitSpec::validate() const {
  for (double f : {train, validation, test})
    if (!(f >= 0.0 && f <= 1.0)) throw ValidationError("split fractions must lie in [0, 1]");
  if (std::abs(train + validation + test - 1.0) > 1e-9)
    throw ValidationError("split fractions must sum to 1");
  if (train <= 0.0) throw ValidationError("training fraction must be positive");
  if (splits == 0) throw ValidationError("need at least one split");
}

std::vector<SplitRole> assign_split(std::size_t sample_count, const SplitSpec& spec, std::size_t split) {
  spec.validate();
  std::vector<std::size_t> order(sample_count);
  std::iota(order.begin(), order.end(), 0);
  Rng rng = Rng::derive(spec.seed, split);
  rng.shuffle(std::span<std::size_t>(order));
  const auto count = static_cast<double>(sample_count);
  const auto n_train = static_cast<std::size_t>(std::llround(spec.train * count));
  const auto n_fit = std::min(sample_count,
                              static_cast<std::size_t>(std::llround((spec.train + spec.validation) * count)));
  std::vector<SplitRole> roles(sample_count, SplitRole::test);
  for (std::size_t p = 0; p < n_fit; ++p)
    roles[order[p]] = p < n_train ? SplitRole::train : SplitRole::validation;
  return roles;
}

const std::vector<std::string>& recsys_model_names() {
  static const std::vector<std::string> names{"linear",           "graph-filter", "fcnn",
                                              "graph-perceptron", "gnn-l2-f1",    "gnn-l1-f64",
                                              "gnn-l2-f64-32"};
  return names;
}

std::unique_ptr<Model> make_recsys_model(const std::string& name, const ShiftOperator& s,
                                         std::size_t taps, Rng& rng) {
  const std::size_t n = s.size();
  const auto gnn = [&](std::vector<std::size_t> features, Nonlinearity sigma, bool readout) {
    std::vector<std::size_t> k(features.size() - 1, taps);
    return std::make_unique<GnnModel>(name, GnnArchitecture{std::move(features), std::move(k), sigma, readout},
                                      s, rng);
  };
  if (name == "linear") return std::make_unique<LinearModel>(n, rng);
  if (name == "graph-filter") return gnn({1, 64}, Nonlinearity::identity, true);
  if (name == "fcnn") return std::make_unique<FcnnModel>(n, 64, 32, rng);
  if (name == "graph-perceptron") return gnn({1, 1}, Nonlinearity::relu, false);
  if (name == "gnn-l2-f1") return gnn({1, 1, 1}, Nonlinearity::relu, false);
  if (name == "gnn-l1-f64") return gnn({1, 64}, Nonlinearity::relu, true);
  if (name == "gnn-l2-f64-32") return gnn({1, 64, 32}, Nonlinearity::relu, true);
  throw ValidationError("unknown model '" + name + "'");
}

RmseExperimentResult run_rmse_experiment(const RatingsTable& table, const RmseExperimentConfig& config) {
  config.split.validate();
  if (table.ratings.empty()) throw ValidationError("ratings table is empty");
  for (const std::string& m : config.models)
    if (std::find(recsys_model_names().begin(), recsys_model_names().end(), m) == recsys_model_names().end())
      throw ValidationError("unknown model '" + m + "'");

  std::vector<std::size_t> targets = config.target_items;
  if (targets.empty()) targets = most_rated_items(table, config.top_k);
  if (targets.empty()) throw ValidationError("no target items");

  std::vector<std::size_t> items;
  if (config.graph_items == 0) {
    items = all_items(table);
  } else {
    items = most_rated_items(table, config.graph_items);
    items.insert(items.end(), targets.begin(), targets.end());
    std::sort(items.begin(), items.end());
    items.erase(std::unique(items.begin(), items.end()), items.end());
  }

  const auto samples = build_samples(table, items, targets);
  if (samples.empty()) throw ValidationError("target items have no ratings");

  RmseExperimentResult result;
  result.samples = samples.size();
  result.degenerate_samples = count_degenerate(samples);
  result.graph_nodes = items.size();

  const std::size_t splits = config.split.splits;
  std::vector<std::vector<SplitRole>> roles(splits);
  std::vector<SplitSets> sets(splits);
  std::vector<ShiftOperator> graphs(splits);
  parallel_for(splits, config.threads, [&](std::size_t split) {
    roles[split] = assign_split(samples.size(), config.split, split);
    sets[split] = partition(samples, roles[split]);
    if (config.graph_from_training || split == 0) {
      const RatingsTable source = config.graph_from_training
                                      ? without_ratings(table, held_out_ratings(table, samples, roles[split]))
                                      : table;
      graphs[split] = build_similarity_graph(source, items, config.similarity).shift;
    }
  });
  if (!config.graph_from_training)
    for (std::size_t split = 1; split < splits; ++split) graphs[split] = graphs[0];

  const std::size_t models = config.models.size();
  result.rows.resize(splits * models);
  parallel_for(splits * models, config.threads, [&](std::size_t job) {
    const std::size_t split = job / models;
    const std::size_t m = job % models;
    Rng rng = Rng::derive(mix64(config.split.seed + split), m);
    auto model = make_recsys_model(config.models[m], graphs[split], config.taps, rng);
    TrainConfig train = config.train;
    train.seed = rng.next_u64();
    const TrainResult fit = train_model(*model, sets[split], train);
    RmseRow& row = result.rows[job];
    row.model = config.models[m];
    row.split = split;
    row.rmse_val = test_rmse(*model, sets[split].validation);
    row.rmse_test = test_rmse(*model, sets[split].test);
    row.epochs_ran = fit.history.size();
    row.param_count = model->parameter_count();
  });
  return result;
}

std::vector<RecsysTransferRow> run_transfer_experiment(const RatingsTable& table,
                                                       const TransferExperimentConfig& config) {
  config.split.validate();
  config.architecture.validate();
  if (config.architecture.features.front() != 1)
    throw ValidationError("transfer architecture must take one input feature");
  if (config.architecture.output_features() != 1)
    throw ValidationError("transfer architecture must produce one output feature");
  const std::size_t target = table.item_index(config.target_item_id);
  const std::size_t total = table.item_count();
  for (std::size_t n : config.sizes)
    if (n == 0 || n > total)
      throw ValidationError("subset size " + std::to_string(n) + " outside [1, " + std::to_string(total) + "]");

  const auto full_items = all_items(table);
  const std::size_t targets[] = {target};
  const auto full_samples = build_samples(table, full_items, targets);
  if (full_samples.empty()) throw ValidationError("target item has no ratings");

  const std::size_t splits = config.split.splits;
  std::vector<std::vector<SplitRole>> roles(splits);
  std::vector<RatingsTable> sources(splits);
  std::vector<ShiftOperator> full_graphs(splits);
  parallel_for(splits, config.threads, [&](std::size_t split) {
    roles[split] = assign_split(full_samples.size(), config.split, split);
    sources[split] = config.graph_from_training
                         ? without_ratings(table, held_out_ratings(table, full_samples, roles[split]))
                         : table;
    full_graphs[split] = build_similarity_graph(sources[split], full_items, config.similarity).shift;
  });
  std::vector<std::vector<Sample>> full_test(splits);
  for (std::size_t split = 0; split < splits; ++split) full_test[split] = partition(full_samples, roles[split]).test;

  struct Outcome {
    double rmse_n = 0.0, rmse_full = 0.0;
  };
  const std::size_t sizes = config.sizes.size();
  std::vector<Outcome> outcomes(sizes * splits);
  parallel_for(sizes * splits, config.threads, [&](std::size_t job) {
    const std::size_t size = config.sizes[job / splits];
    const std::size_t split = job % splits;
    Rng rng = Rng::derive(mix64(config.split.seed + split), size);

    std::vector<std::size_t> items;
    ShiftOperator shift;
    if (size == total) {
      items = full_items;
      shift = full_graphs[split];
    } else {
      std::vector<std::size_t> others;
      for (std::size_t i = 0; i < total; ++i)
        if (i != target) others.push_back(i);
      rng.shuffle(std::span<std::size_t>(others));
      items.assign(others.begin(), others.begin() + static_cast<std::ptrdiff_t>(size - 1));
      items.push_back(target);
      std::sort(items.begin(), items.end());
      shift = build_similarity_graph(sources[split], items, config.similarity).shift;
    }

    const auto samples = build_samples(table, items, targets);
    const SplitSets sets = partition(samples, roles[split]);
    GnnModel model("transfer", config.architecture, shift, rng);
    TrainConfig train = config.train;
    train.seed = rng.next_u64();
    train_model(model, sets, train);
    outcomes[job].rmse_n = test_rmse(model, sets.test);
    outcomes[job].rmse_full = test_rmse(model.with_shift(full_graphs[split]), full_test[split]);
  });

  std::vector<RecsysTransferRow> rows(sizes);
  for (std::size_t k = 0; k < sizes; ++k) {
    RecsysTransferRow& row = rows[k];
    row.n = config.sizes[k];
    for (std::size_t split = 0; split < splits; ++split) {
      const Outcome& o = outcomes[k * splits + split];
      row.rmse_n += o.rmse_n;
      row.rmse_full += o.rmse_full;
      row.rel_diff += std::abs(o.rmse_full - o.rmse_n) / o.rmse_full;
    }
    const auto s = static_cast<double>(splits);
    row.rmse_n /= s;
    row.rmse_full /= s;
    row.rel_diff /= s;
  }
  return rows;
}

void write_rmse_csv(std::ostream& out, std::span<const RmseRow> rows) {
  out << "model,split,rmse_val,rmse_test,epochs_ran,param_count\n";
  for (const RmseRow& r : rows) {
    out << r.model << ',' << r.split << ',' << format_double(r.rmse_val) << ','
        << format_double(r.rmse_test) << ',' << r.epochs_ran << ',' << r.param_count << '\n';
  }
}

void write_recsys_transfer_csv(std::ostream& out, std::span<const RecsysTransferRow> rows) {
  out << "n,rmse_n,rmse_full,rel_diff\n";
  for (const RecsysTransferRow& r : rows) {
    out << r.n << ',' << format_double(r.rmse_n) << ',' << format_double(r.rmse_full) << ','
        << format_double(r.rel_diff) << '\n';
  }
}

}  // namespace gsplab
