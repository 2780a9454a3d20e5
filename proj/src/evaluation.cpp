#include "fcnet/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "fcnet/errors.hpp"
#include "fcnet/rng.hpp"

namespace fcnet {

Metrics metrics(const ConfusionMatrix& cm) {
  Metrics m;
  if (cm.total() > 0) {
    m.accuracy = static_cast<double>(cm.tp + cm.tn) /
                 static_cast<double>(cm.total());
  }
  if (cm.positives() > 0) {
    m.sensitivity =
        static_cast<double>(cm.tp) / static_cast<double>(cm.positives());
  }
  if (cm.negatives() > 0) {
    m.specificity =
        static_cast<double>(cm.tn) / static_cast<double>(cm.negatives());
  }
  return m;
}

namespace {

std::vector<std::size_t> class_indices(std::span<const std::uint8_t> labels,
                                       std::uint8_t cls) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == cls) idx.push_back(i);
  }
  return idx;
}

// Largest-remainder apportionment of `total` into parts proportional to
// `ratios`; ties on the fractional part go to the earlier part.
std::vector<std::size_t> apportion(std::size_t total,
                                   std::span<const double> ratios) {
  const double sum = std::accumulate(ratios.begin(), ratios.end(), 0.0);
  std::vector<std::size_t> counts(ratios.size());
  std::vector<double> fracs(ratios.size());
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < ratios.size(); ++i) {
    const double target = static_cast<double>(total) * ratios[i] / sum;
    counts[i] = static_cast<std::size_t>(std::floor(target));
    fracs[i] = target - std::floor(target);
    assigned += counts[i];
  }
  std::vector<std::size_t> order(ratios.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (fracs[a] != fracs[b]) return fracs[a] > fracs[b];
    return a < b;
  });
  for (std::size_t i = 0; assigned < total; ++i, ++assigned) {
    ++counts[order[i % order.size()]];
  }
  return counts;
}

}  // namespace

ThreeWaySplit stratified_split(std::span<const std::uint8_t> labels,
                               std::array<double, 3> ratios,
                               std::uint64_t seed) {
  for (double r : ratios) {
    if (!(r > 0.0)) throw InputError("stratified_split: ratios must be > 0");
  }
  ThreeWaySplit split;
  for (std::uint8_t cls : {std::uint8_t{1}, std::uint8_t{0}}) {
    auto idx = class_indices(labels, cls);
    if (idx.empty()) {
      throw InputError("stratified_split: class " + std::to_string(cls) +
                       " is absent");
    }
    CounterRng rng(derive_seed(seed, 0x73706c6974ULL, cls));
    shuffle(idx, rng);
    const auto counts = apportion(idx.size(), ratios);
    for (std::size_t part = 0; part < 3; ++part) {
      if (counts[part] == 0) {
        throw InputError(
            "stratified_split: class " + std::to_string(cls) + " with " +
            std::to_string(idx.size()) + " samples cannot populate all parts");
      }
    }
    std::size_t cursor = 0;
    auto take = [&](std::vector<std::size_t>& out, std::size_t n) {
      out.insert(out.end(), idx.begin() + cursor, idx.begin() + cursor + n);
      cursor += n;
    };
    take(split.train, counts[0]);
    take(split.validation, counts[1]);
    take(split.test, counts[2]);
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.validation.begin(), split.validation.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

SplitPlan make_split_plan(std::span<const std::uint8_t> labels,
                          std::size_t repeats, std::size_t folds,
                          std::uint64_t seed) {
  if (repeats < 1 || folds < 2) {
    throw InputError("make_split_plan: need repeats >= 1 and folds >= 2");
  }
  SplitPlan plan;
  plan.repeats = repeats;
  plan.folds = folds;
  plan.splits.resize(repeats * folds);

  for (std::size_t rep = 0; rep < repeats; ++rep) {
    // Per-class shuffled order and chunk boundaries, shared by the
    // repetition's folds so test chunks partition the data.
    std::array<std::vector<std::size_t>, 2> order;
    std::array<std::vector<std::size_t>, 2> chunk_sizes;
    for (std::uint8_t cls : {std::uint8_t{0}, std::uint8_t{1}}) {
      auto idx = class_indices(labels, cls);
      if (idx.size() < folds) {
        throw InputError("make_split_plan: class " + std::to_string(cls) +
                         " has " + std::to_string(idx.size()) +
                         " samples, fewer than " + std::to_string(folds) +
                         " folds");
      }
      CounterRng rng(derive_seed(seed, 0x666f6c64ULL + rep, cls));
      shuffle(idx, rng);
      order[cls] = std::move(idx);
      chunk_sizes[cls].assign(folds, order[cls].size() / folds);
      for (std::size_t f = 0; f < order[cls].size() % folds; ++f) {
        ++chunk_sizes[cls][f];
      }
    }

    for (std::size_t fold = 0; fold < folds; ++fold) {
      FoldSplit& split = plan.splits[rep * folds + fold];
      split.repeat = rep;
      split.fold = fold;
      for (std::uint8_t cls : {std::uint8_t{0}, std::uint8_t{1}}) {
        std::size_t begin = 0;
        for (std::size_t f = 0; f < fold; ++f) begin += chunk_sizes[cls][f];
        const std::size_t end = begin + chunk_sizes[cls][fold];

        std::vector<std::size_t> rest;
        rest.reserve(order[cls].size() - (end - begin));
        for (std::size_t i = 0; i < order[cls].size(); ++i) {
          if (i >= begin && i < end) {
            split.test.push_back(order[cls][i]);
          } else {
            rest.push_back(order[cls][i]);
          }
        }
        const std::array<double, 2> tv{8.0, 1.0};
        const auto counts = apportion(rest.size(), tv);
        if (counts[0] == 0 || counts[1] == 0) {
          throw InputError("make_split_plan: class " + std::to_string(cls) +
                           " too small for a train/validation split");
        }
        split.train.insert(split.train.end(), rest.begin(),
                           rest.begin() + counts[0]);
        split.validation.insert(split.validation.end(),
                                rest.begin() + counts[0], rest.end());
      }
      std::sort(split.train.begin(), split.train.end());
      std::sort(split.validation.begin(), split.validation.end());
      std::sort(split.test.begin(), split.test.end());
    }
  }
  return plan;
}

RocResult roc_and_auc(std::span<const double> scores,
                      std::span<const std::uint8_t> labels) {
  if (scores.size() != labels.size()) {
    throw InputError("roc_and_auc: scores/labels size mismatch");
  }
  std::size_t pos = 0, neg = 0;
  for (std::uint8_t l : labels) (l == 1 ? pos : neg) += 1;
  if (pos == 0 || neg == 0) {
    throw InputError("roc_and_auc: both classes must be present");
  }

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] > scores[b];
  });

  RocResult result;
  result.points.push_back({0.0, 0.0});
  std::size_t tp = 0, fp = 0;
  double auc = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    // Walk one tie group: every index with the same score moves together.
    const double s = scores[order[i]];
    std::size_t group_tp = 0, group_fp = 0;
    while (i < order.size() && scores[order[i]] == s) {
      (labels[order[i]] == 1 ? group_tp : group_fp) += 1;
      ++i;
    }
    const double fpr0 = static_cast<double>(fp) / static_cast<double>(neg);
    const double tpr0 = static_cast<double>(tp) / static_cast<double>(pos);
    tp += group_tp;
    fp += group_fp;
    const double fpr1 = static_cast<double>(fp) / static_cast<double>(neg);
    const double tpr1 = static_cast<double>(tp) / static_cast<double>(pos);
    auc += (fpr1 - fpr0) * (tpr1 + tpr0) / 2.0;
    result.points.push_back({fpr1, tpr1});
  }
  result.auc = auc;
  return result;
}

std::vector<DetPoint> det_curve(std::span<const double> scores,
                                std::span<const std::uint8_t> labels) {
  const RocResult roc = roc_and_auc(scores, labels);
  std::vector<DetPoint> det;
  det.reserve(roc.points.size());
  for (const auto& p : roc.points) det.push_back({p.fpr, 1.0 - p.tpr});
  return det;
}

LinearModel train_linear_baseline(const FeatureMatrix& train) {
  if (!train.has_both_classes()) {
    throw InputError("linear_baseline: both classes required");
  }
  const std::size_t n = train.num_subjects;
  const std::size_t d = train.num_features;

  LinearModel model;
  model.weights.assign(d, 0.0);
  std::vector<double> vw(d, 0.0);
  double vb = 0.0;

  constexpr double lr = 0.01;
  constexpr double rho = 0.9;
  constexpr double eps = 1e-8;
  constexpr double grad_tol = 1e-6;
  constexpr int max_epochs = 2000;

  std::vector<double> gw(d);
  for (int epoch = 0; epoch < max_epochs; ++epoch) {
    std::fill(gw.begin(), gw.end(), 0.0);
    double gb = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
      const float* x = train.values.data() + r * d;
      double z = model.bias;
      for (std::size_t c = 0; c < d; ++c) z += model.weights[c] * x[c];
      const double p = 1.0 / (1.0 + std::exp(-z));
      const double err = p - static_cast<double>(train.labels[r]);
      for (std::size_t c = 0; c < d; ++c) gw[c] += err * x[c];
      gb += err;
    }
    double norm2 = gb * gb;
    for (std::size_t c = 0; c < d; ++c) {
      gw[c] /= static_cast<double>(n);
      norm2 += gw[c] * gw[c];
    }
    gb /= static_cast<double>(n);
    if (std::sqrt(norm2) < grad_tol) break;

    for (std::size_t c = 0; c < d; ++c) {
      vw[c] = rho * vw[c] + (1.0 - rho) * gw[c] * gw[c];
      model.weights[c] -= lr * gw[c] / (std::sqrt(vw[c]) + eps);
    }
    vb = rho * vb + (1.0 - rho) * gb * gb;
    model.bias -= lr * gb / (std::sqrt(vb) + eps);
  }
  return model;
}

std::vector<std::uint8_t> linear_predict(const LinearModel& model,
                                         const FeatureMatrix& fm) {
  if (model.weights.size() != fm.num_features) {
    throw InputError("linear_predict: feature width mismatch");
  }
  std::vector<std::uint8_t> preds(fm.num_subjects);
  for (std::size_t r = 0; r < fm.num_subjects; ++r) {
    const float* x = fm.values.data() + r * fm.num_features;
    double z = model.bias;
    for (std::size_t c = 0; c < fm.num_features; ++c) {
      z += model.weights[c] * x[c];
    }
    preds[r] = z > 0.0 ? 1 : 0;
  }
  return preds;
}

namespace {

struct FoldOutput {
  FoldResult result;
  std::vector<double> test_scores;  // p_asd per test row
  std::vector<std::uint8_t> test_labels;
};

FeatureSubset select_for_fold(const FeatureMatrix& train_rows,
                              const PipelineConfig& cfg) {
  const FeatureRanking ranking =
      rank_features(train_rows, cfg.selection_method);
  if (cfg.selection_top_k.has_value()) {
    return select_top_k(ranking, *cfg.selection_top_k);
  }
  return select_by_threshold(ranking, cfg.selection_threshold);
}

FoldOutput run_fold(const FeatureMatrix& fm, const PipelineConfig& cfg,
                    const FoldSplit& split, FoldTrace* trace) {
  FoldOutput out;
  out.result.repeat = split.repeat;
  out.result.fold = split.fold;

  const FeatureMatrix train_rows = fm.select_rows(split.train);
  const FeatureSubset subset = select_for_fold(train_rows, cfg);
  if (subset.selected_indices.empty()) {
    throw InputError("empty feature subset after selection");
  }
  out.result.subset_size = subset.selected_indices.size();

  if (trace != nullptr) {
    trace->repeat = split.repeat;
    trace->fold = split.fold;
    trace->train = split.train;
    trace->validation = split.validation;
    trace->test = split.test;
    trace->selected_features = subset.selected_indices;
  }

  const FeatureMatrix train_sel = train_rows.select_columns(subset.selected_indices);
  const FeatureMatrix val_sel = fm.submatrix(split.validation, subset.selected_indices);
  const FeatureMatrix test_sel = fm.submatrix(split.test, subset.selected_indices);

  TrainingConfig tcfg = cfg.training;
  tcfg.seed = derive_seed(cfg.training.seed, split.repeat, split.fold);

  TrainingConfig pcfg = tcfg;
  if (cfg.pretrain_epochs > 0) pcfg.max_training_epoch = cfg.pretrain_epochs;

  const auto t0 = std::chrono::steady_clock::now();
  const PretrainResult pre =
      pretrain_vae(train_sel, cfg.hidden1, cfg.hidden2, pcfg);
  const MlpParams init = transfer(pre.encoder, tcfg.seed);
  const TrainedModel model = fine_tune(init, train_sel, val_sel, tcfg);
  const auto t1 = std::chrono::steady_clock::now();
  out.result.train_seconds = std::chrono::duration<double>(t1 - t0).count();
  out.result.saved_epoch = model.saved_epoch;

  const Matrix x = to_batch(test_sel);
  ConfusionMatrix cm;
  for (std::size_t r = 0; r < test_sel.num_subjects; ++r) {
    const auto probs = model.predict_probs({x.row_ptr(r), x.cols()});
    const std::uint8_t pred =
        predict_with_threshold_moving(probs, model.n_asd, model.n_hc);
    const std::uint8_t truth = test_sel.labels[r];
    if (truth == 1) (pred == 1 ? cm.tp : cm.fn) += 1;
    else (pred == 0 ? cm.tn : cm.fp) += 1;
    out.test_scores.push_back(probs[0]);
    out.test_labels.push_back(truth);
  }
  out.result.cm = cm;
  const Metrics m = metrics(cm);
  out.result.accuracy = m.accuracy.value_or(0.0);
  out.result.sensitivity = m.sensitivity.value_or(0.0);
  out.result.specificity = m.specificity.value_or(0.0);
  out.result.auc = roc_and_auc(out.test_scores, out.test_labels).auc;
  return out;
}

template <typename Fn>
void rethrow_with_fold_context(std::size_t repeat, std::size_t fold, Fn&& fn) {
  const std::string ctx = "repeat " + std::to_string(repeat) + ", fold " +
                          std::to_string(fold) + ": ";
  try {
    fn();
  } catch (const InputError& e) {
    throw InputError(ctx + e.what());
  } catch (const FormatError& e) {
    throw FormatError(ctx + e.what());
  } catch (const NumericalError& e) {
    throw NumericalError(ctx + e.what());
  } catch (const ConstraintError& e) {
    throw ConstraintError(ctx + e.what());
  }
}

}  // namespace

EvaluationReport run_cv(const FeatureMatrix& fm, const PipelineConfig& cfg,
                        std::size_t repeats, std::size_t folds,
                        std::vector<FoldTrace>* traces) {
  cfg.training.validate();
  const SplitPlan plan =
      make_split_plan(fm.labels, repeats, folds, cfg.training.seed);

  if (traces != nullptr) traces->assign(plan.splits.size(), FoldTrace{});
  std::vector<FoldOutput> outputs(plan.splits.size());

  int jobs = cfg.jobs;
  if (jobs <= 0) {
    jobs = static_cast<int>(std::thread::hardware_concurrency());
    if (jobs <= 0) jobs = 1;
  }
  jobs = std::min<int>(jobs, static_cast<int>(plan.splits.size()));

  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr first_error;
  std::mutex error_mutex;

  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= plan.splits.size() || failed.load()) return;
      const FoldSplit& split = plan.splits[i];
      try {
        rethrow_with_fold_context(split.repeat, split.fold, [&] {
          outputs[i] = run_fold(fm, cfg, split,
                                traces != nullptr ? &(*traces)[i] : nullptr);
        });
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        failed.store(true);
        return;
      }
    }
  };

  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(jobs);
    for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (first_error) std::rethrow_exception(first_error);

  EvaluationReport report;
  report.repeats = repeats;
  report.folds = folds;
  report.fold_results.reserve(outputs.size());

  std::vector<double> all_scores;
  std::vector<std::uint8_t> all_labels;
  for (const auto& out : outputs) {
    report.fold_results.push_back(out.result);
    all_scores.insert(all_scores.end(), out.test_scores.begin(),
                      out.test_scores.end());
    all_labels.insert(all_labels.end(), out.test_labels.begin(),
                      out.test_labels.end());
    report.total_train_seconds += out.result.train_seconds;
  }

  const double n = static_cast<double>(report.fold_results.size());
  for (const auto& r : report.fold_results) {
    report.mean_accuracy += r.accuracy / n;
    report.mean_sensitivity += r.sensitivity / n;
    report.mean_specificity += r.specificity / n;
    report.mean_auc += r.auc / n;
  }
  for (std::size_t i = 1; i < report.fold_results.size(); ++i) {
    if (report.fold_results[i].accuracy >
        report.fold_results[report.best_fold_index].accuracy) {
      report.best_fold_index = i;
    }
    if (report.fold_results[i].accuracy <
        report.fold_results[report.worst_fold_index].accuracy) {
      report.worst_fold_index = i;
    }
  }
  report.pooled_roc = roc_and_auc(all_scores, all_labels);
  report.pooled_det = det_curve(all_scores, all_labels);
  return report;
}

namespace {

std::string fmt17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

nlohmann::json fold_to_json(const FoldResult& r) {
  return nlohmann::json{
      {"repeat", r.repeat},
      {"fold", r.fold},
      {"tp", r.cm.tp},
      {"fn", r.cm.fn},
      {"tn", r.cm.tn},
      {"fp", r.cm.fp},
      {"accuracy", r.accuracy},
      {"sensitivity", r.sensitivity},
      {"specificity", r.specificity},
      {"auc", r.auc},
      {"subset_size", r.subset_size},
      {"saved_epoch", r.saved_epoch},
      {"train_seconds", r.train_seconds},
  };
}

}  // namespace

std::string report_to_json_text(const EvaluationReport& report) {
  nlohmann::json j;
  j["repeats"] = report.repeats;
  j["folds"] = report.folds;
  j["mean"] = {{"accuracy", report.mean_accuracy},
               {"sensitivity", report.mean_sensitivity},
               {"specificity", report.mean_specificity},
               {"auc", report.mean_auc}};
  const auto& best = report.fold_results[report.best_fold_index];
  const auto& worst = report.fold_results[report.worst_fold_index];
  j["best_fold"] = fold_to_json(best);
  j["worst_fold"] = fold_to_json(worst);
  j["pooled_auc"] = report.pooled_roc.auc;
  nlohmann::json folds = nlohmann::json::array();
  for (const auto& r : report.fold_results) folds.push_back(fold_to_json(r));
  j["fold_results"] = std::move(folds);
  nlohmann::json roc = nlohmann::json::array();
  for (const auto& p : report.pooled_roc.points) {
    roc.push_back({{"fpr", p.fpr}, {"tpr", p.tpr}});
  }
  j["roc_points"] = std::move(roc);
  nlohmann::json det = nlohmann::json::array();
  for (const auto& p : report.pooled_det) {
    det.push_back({{"fpr", p.fpr}, {"fnr", p.fnr}});
  }
  j["det_points"] = std::move(det);
  j["timing"] = {{"total_train_seconds", report.total_train_seconds}};
  return j.dump(2);
}

std::string report_folds_csv(const EvaluationReport& report) {
  std::ostringstream out;
  out << "repeat,fold,tp,fn,tn,fp,accuracy,sensitivity,specificity,auc,"
         "subset_size,saved_epoch,train_seconds\n";
  for (const auto& r : report.fold_results) {
    out << r.repeat << "," << r.fold << "," << r.cm.tp << "," << r.cm.fn << ","
        << r.cm.tn << "," << r.cm.fp << "," << fmt17(r.accuracy) << ","
        << fmt17(r.sensitivity) << "," << fmt17(r.specificity) << ","
        << fmt17(r.auc) << "," << r.subset_size << "," << r.saved_epoch << ","
        << fmt17(r.train_seconds) << "\n";
  }
  return out.str();
}

std::string report_roc_csv(const EvaluationReport& report) {
  std::ostringstream out;
  out << "fpr,tpr\n";
  for (const auto& p : report.pooled_roc.points) {
    out << fmt17(p.fpr) << "," << fmt17(p.tpr) << "\n";
  }
  return out.str();
}

std::string report_det_csv(const EvaluationReport& report) {
  std::ostringstream out;
  out << "fpr,fnr\n";
  for (const auto& p : report.pooled_det) {
    out << fmt17(p.fpr) << "," << fmt17(p.fnr) << "\n";
  }
  return out.str();
}

std::vector<FsComparisonRow> compare_feature_selection(
    const FeatureMatrix& fm, std::span<const SelectionMethod> methods,
    std::span<const std::size_t> k_grid, std::size_t folds,
    std::uint64_t seed) {
  for (std::size_t k : k_grid) {
    if (k > fm.num_features) {
      throw InputError("compare_feature_selection: k = " + std::to_string(k) +
                       " exceeds feature count " +
                       std::to_string(fm.num_features));
    }
  }
  const SplitPlan plan = make_split_plan(fm.labels, 1, folds, seed);

  std::vector<FsComparisonRow> rows;
  for (SelectionMethod method : methods) {
    // Rankings depend only on the training rows, so compute once per fold.
    std::vector<FeatureRanking> fold_rankings;
    std::vector<std::vector<std::size_t>> fold_train;
    for (const auto& split : plan.splits) {
      // The baseline needs no validation set; fold train = train + validation.
      std::vector<std::size_t> train_rows = split.train;
      train_rows.insert(train_rows.end(), split.validation.begin(),
                        split.validation.end());
      std::sort(train_rows.begin(), train_rows.end());
      fold_rankings.push_back(
          rank_features(fm.select_rows(train_rows), method));
      fold_train.push_back(std::move(train_rows));
    }
    for (std::size_t k : k_grid) {
      double acc_sum = 0.0;
      for (std::size_t f = 0; f < plan.splits.size(); ++f) {
        const FeatureSubset subset = select_top_k(fold_rankings[f], k);
        const FeatureMatrix train =
            fm.submatrix(fold_train[f], subset.selected_indices);
        const FeatureMatrix test =
            fm.submatrix(plan.splits[f].test, subset.selected_indices);
        const LinearModel model = train_linear_baseline(train);
        const auto preds = linear_predict(model, test);
        std::size_t correct = 0;
        for (std::size_t i = 0; i < preds.size(); ++i) {
          correct += (preds[i] == test.labels[i]);
        }
        acc_sum += static_cast<double>(correct) /
                   static_cast<double>(test.num_subjects);
      }
      rows.push_back(
          {method, k, acc_sum / static_cast<double>(plan.splits.size())});
    }
  }
  return rows;
}

std::string fs_comparison_csv(std::span<const FsComparisonRow> rows) {
  std::ostringstream out;
  out << "method,k,mean_accuracy\n";
  for (const auto& r : rows) {
    out << to_string(r.method) << "," << r.k << "," << fmt17(r.mean_accuracy)
        << "\n";
  }
  return out.str();
}

}  // namespace fcnet
