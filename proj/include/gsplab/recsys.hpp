#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "gsplab/graph.hpp"
#include "gsplab/model.hpp"

namespace gsplab {

struct Rating {
  std::size_t user = 0;  ///< dense index
  std::size_t item = 0;  ///< dense index
  double value = 0.0;
};

/// Ratings with ids remapped to dense 0-based indices (in increasing order of
/// the original ids).
struct RatingsTable {
  std::vector<Rating> ratings;
  std::vector<long> user_ids;  ///< original id of each dense user index
  std::vector<long> item_ids;  ///< original id of each dense item index

  std::size_t user_count() const noexcept { return user_ids.size(); }
  std::size_t item_count() const noexcept { return item_ids.size(); }
  /// Dense index of an original item id. Throws ValidationError when absent.
  std::size_t item_index(long original_id) const;
  /// Number of ratings per dense item index.
  std::vector<std::size_t> item_rating_counts() const;
};

/// Tab- or whitespace-separated "user item rating timestamp" lines.
RatingsTable parse_movielens(std::istream& in);
RatingsTable load_movielens(const std::filesystem::path& path);

/// Builds a table from dense triples, with ids equal to index + 1.
RatingsTable make_table(std::vector<Rating> ratings, std::size_t users, std::size_t items);

/// Ratings 1..5 from a rank-`rank` user/item factor model plus Gaussian noise.
/// Every user rates at least `min_per_user` items.
struct SyntheticRatingsConfig {
  std::size_t users = 120;
  std::size_t items = 40;
  std::size_t rank = 3;
  double density = 0.3;
  double noise = 0.3;
  std::size_t min_per_user = 3;
  std::uint64_t seed = 7;
};
RatingsTable synthetic_ratings(const SyntheticRatingsConfig& config);

struct SimilarityOptions {
  std::size_t min_common = 3;
  /// Keep the k largest weights of each row (symmetrized by union); 0 keeps all.
  std::size_t knn = 10;
  bool normalize = true;
};

struct SimilarityGraph {
  ShiftOperator shift;
  Matrix weights;                 ///< w_ij before sparsification and normalization
  std::vector<std::size_t> items;  ///< dense item index of each node
  std::size_t min_common = 0;
  std::size_t isolated = 0;       ///< nodes with an all-zero row
};

/// Pearson similarity over co-raters: sigma_ij with per-pair means over
/// C_ij, w_ij = sigma_ij / sqrt(sigma_ii sigma_jj) with sigma_ii the variance
/// of item i's ratings. Pairs with fewer than min_common co-raters, or items
/// with zero variance, get w = 0. Weights are clamped to [-1, 1]; the
/// diagonal is zero.
SimilarityGraph build_similarity_graph(const RatingsTable& table, std::span<const std::size_t> items,
                                       const SimilarityOptions& options);

struct RecSample {
  Sample sample;             ///< x over graph nodes with the target zeroed
  std::size_t user = 0;
  std::size_t item = 0;      ///< dense item index of the target
  std::size_t rating_index = 0;  ///< position of the target rating in the table
};

/// One sample per (user, target item) rating. `items` gives the node order.
std::vector<RecSample> build_samples(const RatingsTable& table, std::span<const std::size_t> items,
                                     std::span<const std::size_t> target_items);
/// Number of samples whose input is all zero.
std::size_t count_degenerate(std::span<const RecSample> samples);

/// The k items with the most ratings, ties to the lower index.
std::vector<std::size_t> most_rated_items(const RatingsTable& table, std::size_t k);

struct SplitSpec {
  double train = 0.81;
  double validation = 0.09;
  double test = 0.10;
  std::size_t splits = 10;
  std::uint64_t seed = 1;

  void validate() const;
};

enum class SplitRole { train, validation, test };

/// Role of each sample id in split `split`: a shuffle seeded by (seed, split),
/// with the first train fraction of positions for training and the next
/// validation fraction for validation.
std::vector<SplitRole> assign_split(std::size_t sample_count, const SplitSpec& spec, std::size_t split);

/// Names of the seven parametrizations in presentation order.
const std::vector<std::string>& recsys_model_names();

/// Constructs a model by name for a graph of n nodes.
std::unique_ptr<Model> make_recsys_model(const std::string& name, const ShiftOperator& s, std::size_t taps,
                                         Rng& rng);

struct RmseExperimentConfig {
  std::vector<std::size_t> target_items;  ///< dense indices; empty: the `top_k` most rated
  std::size_t top_k = 6;
  std::size_t graph_items = 0;            ///< 0: every item; else the most rated ones plus targets
  SplitSpec split;
  SimilarityOptions similarity;
  bool graph_from_training = true;        ///< drop validation/test target ratings from the graph
  TrainConfig train;
  std::size_t taps = 5;
  std::vector<std::string> models = recsys_model_names();
  std::size_t threads = 1;
};

struct RmseRow {
  std::string model;
  std::size_t split = 0;
  double rmse_val = 0.0;
  double rmse_test = 0.0;
  std::size_t epochs_ran = 0;
  std::size_t param_count = 0;
};

struct RmseExperimentResult {
  std::vector<RmseRow> rows;
  std::size_t samples = 0;
  std::size_t degenerate_samples = 0;
  std::size_t graph_nodes = 0;
};

RmseExperimentResult run_rmse_experiment(const RatingsTable& table, const RmseExperimentConfig& config);

struct TransferExperimentConfig {
  long target_item_id = 50;
  std::vector<std::size_t> sizes{118, 203, 338, 603, 1682};
  SplitSpec split;
  SimilarityOptions similarity;
  bool graph_from_training = true;
  TrainConfig train;
  GnnArchitecture architecture{{1, 64, 32}, {5, 5}, Nonlinearity::relu, true};
  std::size_t threads = 1;
};

struct RecsysTransferRow {
  std::size_t n = 0;
  double rmse_n = 0.0;     ///< test RMSE on the training graph, averaged over splits
  double rmse_full = 0.0;  ///< same parameters on the full graph
  double rel_diff = 0.0;   ///< mean of |rmse_full - rmse_n| / rmse_full
};

std::vector<RecsysTransferRow> run_transfer_experiment(const RatingsTable& table,
                                                 const TransferExperimentConfig& config);

void write_rmse_csv(std::ostream& out, std::span<const RmseRow> rows);
void write_recsys_transfer_csv(std::ostream& out, std::span<const RecsysTransferRow> rows);

}  // namespace gsplab
