#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fcnet/feature_selection.hpp"
#include "fcnet/stats.hpp"
#include "fcnet/training.hpp"
#include "fcnet/types.hpp"

namespace fcnet {

struct ConfusionMatrix {
  std::size_t tp = 0;
  std::size_t fn = 0;
  std::size_t tn = 0;
  std::size_t fp = 0;

  std::size_t positives() const { return tp + fn; }
  std::size_t negatives() const { return tn + fp; }
  std::size_t total() const { return tp + fn + tn + fp; }
};

struct Metrics {
  std::optional<double> accuracy;
  std::optional<double> sensitivity;
  std::optional<double> specificity;
};

// Exact ratios; a zero denominator leaves the metric undefined rather than 0.
Metrics metrics(const ConfusionMatrix& cm);

struct ThreeWaySplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
  std::vector<std::size_t> test;
};

// Per-class shuffled assignment honoring the ratios; remainders go to the
// part with the largest fractional share (ties to the earlier part).
// Throws InputError when a class cannot populate every part.
ThreeWaySplit stratified_split(std::span<const std::uint8_t> labels,
                               std::array<double, 3> ratios,
                               std::uint64_t seed);

struct FoldSplit {
  std::size_t repeat = 0;
  std::size_t fold = 0;
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
  std::vector<std::size_t> test;
};

// Rotating-test-chunk plan: per repetition each class is shuffled and cut
// into `folds` chunks; fold f takes chunk f as test and splits the remainder
// 8:1 into train/validation, so the per-fold ratio is 8:1:1 at folds = 10
// and test sets partition the dataset within every repetition.
struct SplitPlan {
  std::size_t repeats = 0;
  std::size_t folds = 0;
  std::vector<FoldSplit> splits;  // index = repeat * folds + fold

  const FoldSplit& at(std::size_t repeat, std::size_t fold) const {
    return splits[repeat * folds + fold];
  }
};

SplitPlan make_split_plan(std::span<const std::uint8_t> labels,
                          std::size_t repeats, std::size_t folds,
                          std::uint64_t seed);

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
};
struct DetPoint {
  double fpr = 0.0;
  double fnr = 0.0;
};

struct RocResult {
  std::vector<RocPoint> points;  // monotone, from (0,0) to (1,1)
  double auc = 0.0;              // trapezoid == tie-corrected pair statistic
};

RocResult roc_and_auc(std::span<const double> scores,
                      std::span<const std::uint8_t> labels);
std::vector<DetPoint> det_curve(std::span<const double> scores,
                                std::span<const std::uint8_t> labels);

// Logistic-loss linear model trained by full-batch RMSProp until the
// gradient norm drops below 1e-6 or 2000 epochs pass. Used to compare
// feature subsets, not as part of the classifier pipeline.
struct LinearModel {
  std::vector<double> weights;
  double bias = 0.0;
};

LinearModel train_linear_baseline(const FeatureMatrix& train);
std::vector<std::uint8_t> linear_predict(const LinearModel& model,
                                         const FeatureMatrix& fm);

struct PipelineConfig {
  TrainingConfig training;
  SelectionMethod selection_method = SelectionMethod::dsdc;
  double selection_threshold = 0.241;
  std::optional<std::size_t> selection_top_k;  // overrides threshold when set
  std::size_t hidden1 = 250;
  std::size_t hidden2 = 150;  // latent dim is tied to this
  int pretrain_epochs = 0;    // 0 -> training.max_training_epoch
  int jobs = 1;               // <= 0 -> hardware concurrency
};

struct FoldResult {
  std::size_t repeat = 0;
  std::size_t fold = 0;
  ConfusionMatrix cm;
  double accuracy = 0.0;
  double sensitivity = 0.0;
  double specificity = 0.0;
  double auc = 0.0;
  std::size_t subset_size = 0;
  int saved_epoch = 0;
  double train_seconds = 0.0;
};

struct EvaluationReport {
  std::size_t repeats = 0;
  std::size_t folds = 0;
  std::vector<FoldResult> fold_results;  // (repeat, fold) order
  double mean_accuracy = 0.0;
  double mean_sensitivity = 0.0;
  double mean_specificity = 0.0;
  double mean_auc = 0.0;
  std::size_t best_fold_index = 0;   // by accuracy
  std::size_t worst_fold_index = 0;
  RocResult pooled_roc;              // all test predictions pooled
  std::vector<DetPoint> pooled_det;
  double total_train_seconds = 0.0;
};

// Captures what each fold actually consumed; used to verify that feature
// selection saw training rows only.
struct FoldTrace {
  std::size_t repeat = 0;
  std::size_t fold = 0;
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
  std::vector<std::size_t> test;
  std::vector<std::size_t> selected_features;
};

// Per fold: select features on the training rows only, pretrain, transfer,
// fine-tune, then evaluate the test rows with threshold moving. Fold results
// are deterministic in (seed, data, config) and independent of `jobs`.
EvaluationReport run_cv(const FeatureMatrix& fm, const PipelineConfig& cfg,
                        std::size_t repeats = 10, std::size_t folds = 10,
                        std::vector<FoldTrace>* traces = nullptr);

std::string report_to_json_text(const EvaluationReport& report);
std::string report_folds_csv(const EvaluationReport& report);
std::string report_roc_csv(const EvaluationReport& report);
std::string report_det_csv(const EvaluationReport& report);

struct FsComparisonRow {
  SelectionMethod method = SelectionMethod::dsdc;
  std::size_t k = 0;
  double mean_accuracy = 0.0;
};

// Mean stratified-CV accuracy of the linear baseline on each method's top-k
// subset (selection redone on the training rows of every fold).
std::vector<FsComparisonRow> compare_feature_selection(
    const FeatureMatrix& fm, std::span<const SelectionMethod> methods,
    std::span<const std::size_t> k_grid, std::size_t folds, std::uint64_t seed);

std::string fs_comparison_csv(std::span<const FsComparisonRow> rows);

}  // namespace fcnet
