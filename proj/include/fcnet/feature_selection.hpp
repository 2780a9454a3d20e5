#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fcnet/types.hpp"

namespace fcnet {

enum class SelectionMethod { dsdc, fisher, abs_pcc };

SelectionMethod selection_method_from_string(const std::string& name);
std::string to_string(SelectionMethod method);

// Per-class 20-bin (by default) step distributions of one feature.
struct StepDistributionPair {
  double lower_bound = 0.0;   // b0 = min of values
  double upper_bound = 0.0;   // b1 = max of values
  double bin_width = 0.0;     // (b1 - b0) / bin_count; 0 when degenerate
  std::size_t bin_count = 20;
  std::vector<std::size_t> pos_counts;
  std::vector<std::size_t> neg_counts;
  std::size_t pos_total = 0;
  std::size_t neg_total = 0;
};

struct FeatureRanking {
  SelectionMethod method = SelectionMethod::dsdc;
  std::vector<double> scores;       // one per feature
  std::vector<std::size_t> order;   // descending score, ties by ascending index
};

struct FeatureSubset {
  std::vector<std::size_t> selected_indices;  // ascending
  SelectionMethod method = SelectionMethod::dsdc;
  std::optional<double> threshold;   // set for threshold selection
  std::optional<std::size_t> top_k;  // set for top-k selection
  std::size_t num_features = 0;      // width of the source matrix
  bool empty_selection = false;
};

struct SelectionDiagnostics {
  std::size_t degenerate_features = 0;  // zero-variance columns
};

// Bins are half-open [edge_i, edge_{i+1}); the global maximum lands in the
// last bin. Requires both classes present and finite values.
StepDistributionPair build_step_distributions(std::span<const float> values,
                                              std::span<const std::uint8_t> labels,
                                              std::size_t bin_count = 20);

// Eq-style L1 distance between the two normalized step curves; in [0, 2].
double dsdc_score(const StepDistributionPair& dist);

// ((mean+ - mean)^2 + (mean- - mean)^2) / (var+ + var-), unbiased variances.
// Zero denominator with nonzero numerator returns +infinity, 0/0 returns 0.
double fisher_score(std::span<const float> values,
                    std::span<const std::uint8_t> labels);

// |pearson(values, labels as 0/1)|. Zero variance in values scores 0 and is
// counted in `diag` when provided.
double abs_pcc_score(std::span<const float> values,
                     std::span<const std::uint8_t> labels,
                     SelectionDiagnostics* diag = nullptr);

// Scores every feature with the chosen method. `jobs` > 1 parallelizes
// across features; per-feature scores are bit-identical to sequential runs.
FeatureRanking rank_features(const FeatureMatrix& fm, SelectionMethod method,
                             SelectionDiagnostics* diag = nullptr,
                             int jobs = 1);

// Strict inequality: keeps indices with score > threshold.
FeatureSubset select_by_threshold(const FeatureRanking& ranking,
                                  double threshold);

// First k of the ranking order, returned ascending by index.
FeatureSubset select_top_k(const FeatureRanking& ranking, std::size_t k);

struct ThresholdSweepRow {
  double threshold = 0.0;
  std::size_t subset_size = 0;
  double mean_accuracy = 0.0;
};

struct ThresholdSweepReport {
  std::vector<ThresholdSweepRow> rows;
  double best_threshold = 0.0;
  std::size_t best_index = 0;  // row index of the winner
};

using SubsetEvaluator = std::function<double(const FeatureSubset&)>;

// Evaluates each threshold's subset with `evaluator` (mean CV accuracy) and
// picks the argmax; ties go to the smaller subset, then the lower threshold.
ThresholdSweepReport threshold_sweep(const FeatureMatrix& fm,
                                     std::span<const double> thresholds,
                                     const SubsetEvaluator& evaluator,
                                     SelectionMethod method = SelectionMethod::dsdc);

}  // namespace fcnet
