#include "fcnet/feature_selection.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numeric>
#include <thread>

namespace fcnet {

SelectionMethod selection_method_from_string(const std::string& name) {
  if (name == "dsdc") return SelectionMethod::dsdc;
  if (name == "fisher") return SelectionMethod::fisher;
  if (name == "abs_pcc") return SelectionMethod::abs_pcc;
  throw InputError("unknown selection method '" + name +
                   "' (expected dsdc, fisher or abs_pcc)");
}

std::string to_string(SelectionMethod method) {
  switch (method) {
    case SelectionMethod::dsdc: return "dsdc";
    case SelectionMethod::fisher: return "fisher";
    case SelectionMethod::abs_pcc: return "abs_pcc";
  }
  return "?";
}

StepDistributionPair build_step_distributions(
    std::span<const float> values, std::span<const std::uint8_t> labels,
    std::size_t bin_count) {
  if (values.size() != labels.size()) {
    throw InputError("build_step_distributions: values/labels size mismatch");
  }
  if (bin_count < 1) {
    throw InputError("build_step_distributions: bin_count must be >= 1");
  }

  StepDistributionPair d;
  d.bin_count = bin_count;
  d.pos_counts.assign(bin_count, 0);
  d.neg_counts.assign(bin_count, 0);
  for (std::uint8_t l : labels) {
    if (l == 1) ++d.pos_total;
    else ++d.neg_total;
  }
  if (d.pos_total == 0 || d.neg_total == 0) {
    throw InputError("build_step_distributions: both classes must be present");
  }

  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (float v : values) {
    if (!std::isfinite(v)) {
      throw InputError("build_step_distributions: non-finite feature value");
    }
    lo = std::min(lo, static_cast<double>(v));
    hi = std::max(hi, static_cast<double>(v));
  }
  d.lower_bound = lo;
  d.upper_bound = hi;
  d.bin_width = (hi - lo) / static_cast<double>(bin_count);

  for (std::size_t i = 0; i < values.size(); ++i) {
    std::size_t bin = 0;
    if (d.bin_width > 0.0) {
      const double v = static_cast<double>(values[i]);
      bin = static_cast<std::size_t>((v - lo) / d.bin_width);
      if (bin >= bin_count) bin = bin_count - 1;  // v == b1 owns the last bin
    }
    if (labels[i] == 1) ++d.pos_counts[bin];
    else ++d.neg_counts[bin];
  }
  return d;
}

double dsdc_score(const StepDistributionPair& dist) {
  if (dist.pos_total == 0 || dist.neg_total == 0) {
    throw InputError("dsdc_score: class totals must be positive");
  }
  double score = 0.0;
  for (std::size_t i = 0; i < dist.bin_count; ++i) {
    const double p = static_cast<double>(dist.pos_counts[i]) /
                     static_cast<double>(dist.pos_total);
    const double q = static_cast<double>(dist.neg_counts[i]) /
                     static_cast<double>(dist.neg_total);
    score += std::fabs(p - q);
  }
  return score;
}

double fisher_score(std::span<const float> values,
                    std::span<const std::uint8_t> labels) {
  if (values.size() != labels.size()) {
    throw InputError("fisher_score: values/labels size mismatch");
  }
  std::size_t np = 0, nn = 0;
  double sp = 0.0, sn = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (labels[i] == 1) {
      ++np;
      sp += values[i];
    } else {
      ++nn;
      sn += values[i];
    }
  }
  if (np < 2 || nn < 2) {
    throw InputError("fisher_score: need at least 2 samples per class");
  }
  const double mean_pos = sp / static_cast<double>(np);
  const double mean_neg = sn / static_cast<double>(nn);
  const double mean_all = (sp + sn) / static_cast<double>(np + nn);

  double var_pos = 0.0, var_neg = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double v = values[i];
    if (labels[i] == 1) var_pos += (v - mean_pos) * (v - mean_pos);
    else var_neg += (v - mean_neg) * (v - mean_neg);
  }
  var_pos /= static_cast<double>(np - 1);
  var_neg /= static_cast<double>(nn - 1);

  const double numer = (mean_pos - mean_all) * (mean_pos - mean_all) +
                       (mean_neg - mean_all) * (mean_neg - mean_all);
  const double denom = var_pos + var_neg;
  if (denom == 0.0) {
    return numer == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  }
  return numer / denom;
}

double abs_pcc_score(std::span<const float> values,
                     std::span<const std::uint8_t> labels,
                     SelectionDiagnostics* diag) {
  if (values.size() != labels.size()) {
    throw InputError("abs_pcc_score: values/labels size mismatch");
  }
  const std::size_t n = values.size();
  if (n < 2) throw InputError("abs_pcc_score: need at least 2 samples");

  double mv = 0.0, ml = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mv += values[i];
    ml += labels[i];
  }
  mv /= static_cast<double>(n);
  ml /= static_cast<double>(n);
  if (ml == 0.0 || ml == 1.0) {
    throw InputError("abs_pcc_score: both classes must be present");
  }

  double svl = 0.0, svv = 0.0, sll = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dv = values[i] - mv;
    const double dl = labels[i] - ml;
    svl += dv * dl;
    svv += dv * dv;
    sll += dl * dl;
  }
  if (svv == 0.0) {
    if (diag != nullptr) ++diag->degenerate_features;
    return 0.0;
  }
  return std::fabs(svl / (std::sqrt(svv) * std::sqrt(sll)));
}

namespace {

// Column gather; scoring reads each feature's values contiguously.
void gather_column(const FeatureMatrix& fm, std::size_t col,
                   std::vector<float>& out) {
  out.resize(fm.num_subjects);
  const float* base = fm.values.data() + col;
  for (std::size_t r = 0; r < fm.num_subjects; ++r) {
    out[r] = base[r * fm.num_features];
  }
}

double score_one(const FeatureMatrix& fm, std::size_t col,
                 SelectionMethod method, std::vector<float>& scratch,
                 SelectionDiagnostics& diag) {
  gather_column(fm, col, scratch);
  switch (method) {
    case SelectionMethod::dsdc:
      return dsdc_score(build_step_distributions(scratch, fm.labels));
    case SelectionMethod::fisher:
      return fisher_score(scratch, fm.labels);
    case SelectionMethod::abs_pcc:
      return abs_pcc_score(scratch, fm.labels, &diag);
  }
  throw InputError("rank_features: unknown method");
}

}  // namespace

FeatureRanking rank_features(const FeatureMatrix& fm, SelectionMethod method,
                             SelectionDiagnostics* diag, int jobs) {
  if (!fm.has_both_classes()) {
    throw InputError("rank_features: both classes must be present");
  }
  FeatureRanking ranking;
  ranking.method = method;
  ranking.scores.assign(fm.num_features, 0.0);

  std::vector<SelectionDiagnostics> per_thread;
  if (jobs <= 1 || fm.num_features < 2) {
    per_thread.resize(1);
    std::vector<float> scratch;
    for (std::size_t f = 0; f < fm.num_features; ++f) {
      ranking.scores[f] = score_one(fm, f, method, scratch, per_thread[0]);
    }
  } else {
    const int n_threads =
        std::min<int>(jobs, static_cast<int>(fm.num_features));
    per_thread.resize(n_threads);
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (int t = 0; t < n_threads; ++t) {
      pool.emplace_back([&, t] {
        // Contiguous feature block per thread.
        const std::size_t per = (fm.num_features + n_threads - 1) / n_threads;
        const std::size_t lo = per * static_cast<std::size_t>(t);
        const std::size_t hi = std::min(fm.num_features, lo + per);
        std::vector<float> scratch;
        for (std::size_t f = lo; f < hi; ++f) {
          ranking.scores[f] = score_one(fm, f, method, scratch, per_thread[t]);
        }
      });
    }
    for (auto& t : pool) t.join();
  }

  if (diag != nullptr) {
    for (const auto& d : per_thread) {
      diag->degenerate_features += d.degenerate_features;
    }
  }

  ranking.order.resize(fm.num_features);
  std::iota(ranking.order.begin(), ranking.order.end(), std::size_t{0});
  std::stable_sort(ranking.order.begin(), ranking.order.end(),
                   [&](std::size_t a, std::size_t b) {
                     if (ranking.scores[a] != ranking.scores[b]) {
                       return ranking.scores[a] > ranking.scores[b];
                     }
                     return a < b;
                   });
  return ranking;
}

FeatureSubset select_by_threshold(const FeatureRanking& ranking,
                                  double threshold) {
  FeatureSubset subset;
  subset.method = ranking.method;
  subset.threshold = threshold;
  subset.num_features = ranking.scores.size();
  for (std::size_t f = 0; f < ranking.scores.size(); ++f) {
    if (ranking.scores[f] > threshold) subset.selected_indices.push_back(f);
  }
  subset.empty_selection = subset.selected_indices.empty();
  return subset;
}

FeatureSubset select_top_k(const FeatureRanking& ranking, std::size_t k) {
  if (k > ranking.order.size()) {
    throw InputError("select_top_k: k = " + std::to_string(k) +
                     " exceeds feature count " +
                     std::to_string(ranking.order.size()));
  }
  FeatureSubset subset;
  subset.method = ranking.method;
  subset.top_k = k;
  subset.num_features = ranking.scores.size();
  subset.selected_indices.assign(ranking.order.begin(),
                                 ranking.order.begin() + k);
  std::sort(subset.selected_indices.begin(), subset.selected_indices.end());
  subset.empty_selection = subset.selected_indices.empty();
  return subset;
}

ThresholdSweepReport threshold_sweep(const FeatureMatrix& fm,
                                     std::span<const double> thresholds,
                                     const SubsetEvaluator& evaluator,
                                     SelectionMethod method) {
  if (thresholds.empty()) {
    throw InputError("threshold_sweep: need at least one threshold");
  }
  const FeatureRanking ranking = rank_features(fm, method);

  ThresholdSweepReport report;
  report.rows.reserve(thresholds.size());
  for (double t : thresholds) {
    const FeatureSubset subset = select_by_threshold(ranking, t);
    double acc;
    try {
      acc = evaluator(subset);
    } catch (const std::exception& e) {
      throw InputError("threshold_sweep: evaluator failed at threshold " +
                       std::to_string(t) + ": " + e.what());
    }
    report.rows.push_back({t, subset.selected_indices.size(), acc});
  }

  report.best_index = 0;
  for (std::size_t i = 1; i < report.rows.size(); ++i) {
    const auto& cur = report.rows[i];
    const auto& best = report.rows[report.best_index];
    const bool better =
        cur.mean_accuracy > best.mean_accuracy ||
        (cur.mean_accuracy == best.mean_accuracy &&
         (cur.subset_size < best.subset_size ||
          (cur.subset_size == best.subset_size &&
           cur.threshold < best.threshold)));
    if (better) report.best_index = i;
  }
  report.best_threshold = report.rows[report.best_index].threshold;
  return report;
}

}  // namespace fcnet
