// fcnet: functional-connectivity classification pipeline CLI.
//
// Subcommands: synth, extract, select, train, cv, compare-fs, predict.
// Exit codes: 0 success, 2 usage, 3 input/format, 4 numerical failure,
// 5 no checkpoint satisfied the training constraint.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fcnet/connectome.hpp"
#include "fcnet/data.hpp"
#include "fcnet/errors.hpp"
#include "fcnet/evaluation.hpp"
#include "fcnet/feature_selection.hpp"
#include "fcnet/io_util.hpp"
#include "fcnet/model_io.hpp"
#include "fcnet/training.hpp"

namespace {

constexpr const char* kToolVersion = "fcnet 1.0.0";

using nlohmann::json;
namespace fs = std::filesystem;

std::uint64_t env_default_seed() {
  const char* v = std::getenv("FCNET_SEED");
  if (v == nullptr) return 0;
  try {
    return std::stoull(v);
  } catch (const std::exception&) {
    throw fcnet::InputError("FCNET_SEED is not a valid integer: " +
                            std::string(v));
  }
}

// Precedence: --seed flag, then the config's seed key, then FCNET_SEED.
std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag_seed,
                           const std::optional<std::uint64_t>& config_seed) {
  if (flag_seed.has_value()) return *flag_seed;
  if (config_seed.has_value()) return *config_seed;
  return env_default_seed();
}

struct StageTimer {
  using clock = std::chrono::steady_clock;
  clock::time_point start = clock::now();
  json timings = json::object();
  clock::time_point stage_start = clock::now();

  void stage_done(const std::string& name) {
    const auto now = clock::now();
    timings[name] = std::chrono::duration<double>(now - stage_start).count();
    stage_start = now;
  }
  double total() const {
    return std::chrono::duration<double>(clock::now() - start).count();
  }
};

void write_run_manifest(const std::string& path, const std::string& command,
                        const json& config_snapshot, const json& inputs,
                        std::uint64_t seed, StageTimer& timer) {
  json m;
  m["tool"] = kToolVersion;
  m["command"] = command;
  m["config"] = config_snapshot;
  m["inputs"] = inputs;
  m["seed"] = seed;
  m["timings_seconds"] = timer.timings;
  m["total_seconds"] = timer.total();
  fcnet::atomic_write_file(path, m.dump(2));
}

json subset_to_json(const fcnet::FeatureSubset& subset) {
  json j;
  j["method"] = fcnet::to_string(subset.method);
  if (subset.threshold.has_value()) j["threshold"] = *subset.threshold;
  if (subset.top_k.has_value()) j["top_k"] = *subset.top_k;
  j["num_features"] = subset.num_features;
  j["selected_indices"] = subset.selected_indices;
  j["empty"] = subset.empty_selection;
  return j;
}

fcnet::FeatureSubset subset_from_json_text(const std::string& text,
                                           const std::string& path) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw fcnet::FormatError(path + ": invalid subset JSON: " + e.what());
  }
  fcnet::FeatureSubset subset;
  try {
    subset.method = fcnet::selection_method_from_string(
        j.at("method").get<std::string>());
    subset.num_features = j.at("num_features").get<std::size_t>();
    subset.selected_indices =
        j.at("selected_indices").get<std::vector<std::size_t>>();
    if (j.contains("threshold")) subset.threshold = j["threshold"].get<double>();
    if (j.contains("top_k")) subset.top_k = j["top_k"].get<std::size_t>();
    subset.empty_selection = subset.selected_indices.empty();
  } catch (const json::exception& e) {
    throw fcnet::FormatError(path + ": malformed subset JSON: " + e.what());
  }
  for (std::size_t idx : subset.selected_indices) {
    if (idx >= subset.num_features) {
      throw fcnet::FormatError(path + ": subset index " + std::to_string(idx) +
                               " out of range");
    }
  }
  return subset;
}

std::string ranking_csv(const fcnet::FeatureRanking& ranking) {
  std::ostringstream out;
  out << "feature_index,score,rank\n";
  out.precision(17);
  for (std::size_t rank = 0; rank < ranking.order.size(); ++rank) {
    const std::size_t f = ranking.order[rank];
    out << f << "," << ranking.scores[f] << "," << rank << "\n";
  }
  return out.str();
}

std::string sweep_csv(const fcnet::ThresholdSweepReport& report) {
  std::ostringstream out;
  out << "threshold,subset_size,mean_accuracy\n";
  out.precision(17);
  for (const auto& row : report.rows) {
    out << row.threshold << "," << row.subset_size << "," << row.mean_accuracy
        << "\n";
  }
  return out.str();
}

fcnet::TrainingConfig load_training_config(const std::string& path) {
  if (path.empty()) return fcnet::TrainingConfig{};
  return fcnet::TrainingConfig::from_json_text(fcnet::read_file(path));
}

// --- subcommand arguments ---

struct SynthFeaturesArgs {
  std::string out;
  std::size_t num_features = 100;
  std::size_t planted = 0;
  double delta = 0.0;
  std::size_t per_class = 100;
  double noise_std = 1.0;
  std::optional<std::uint64_t> seed;
};

struct SynthTimeseriesArgs {
  std::string out_dir;
  std::string manifest;
  std::size_t subjects_per_class = 10;
  std::size_t rois = 10;
  std::size_t timepoints = 100;
  std::size_t coupled_pairs = 0;
  double coupling_pos = 0.0;
  double coupling_neg = 0.0;
  double shared_strength = 0.0;
  double noise_std = 1.0;
  std::optional<std::uint64_t> seed;
};

struct ExtractArgs {
  std::string timeseries_dir;
  std::string manifest;
  std::string out;
  int jobs = 1;
};

struct SelectArgs {
  std::string in;
  std::string method = "dsdc";
  std::optional<double> threshold;
  std::optional<std::size_t> top_k;
  std::string out_ranking;
  std::string out_subset;
  std::vector<double> sweep;
  std::string out_sweep;
  std::size_t sweep_folds = 3;
  std::optional<std::uint64_t> seed;
};

struct TrainArgs {
  std::string in;
  std::string subset;
  std::string config;
  std::string constraint;
  std::string out_model;
  std::string manifest_out;
  std::size_t hidden1 = 250;
  std::size_t hidden2 = 150;
  int pretrain_epochs = 0;
  std::optional<std::uint64_t> seed;
};

struct CvArgs {
  std::string in;
  std::string config;
  std::size_t repeats = 10;
  std::size_t folds = 10;
  std::string out_report;
  std::string out_folds;
  std::string out_roc;
  std::string out_det;
  std::string manifest_out;
  std::string select_method = "dsdc";
  double select_threshold = 0.241;
  std::optional<std::size_t> select_top_k;
  std::size_t hidden1 = 250;
  std::size_t hidden2 = 150;
  int pretrain_epochs = 0;
  int jobs = 0;
  std::optional<std::uint64_t> seed;
};

struct CompareFsArgs {
  std::string in;
  std::vector<std::string> methods;
  std::vector<std::size_t> k_grid;
  std::string out;
  std::size_t folds = 5;
  std::optional<std::uint64_t> seed;
};

struct PredictArgs {
  std::string model;
  std::string in;
  std::string out;
};

int run_synth_features(const SynthFeaturesArgs& a) {
  fcnet::SyntheticSpec spec;
  spec.num_features = a.num_features;
  for (std::size_t i = 0; i < a.planted; ++i) spec.planted_indices.push_back(i);
  spec.mean_shift = a.delta;
  spec.samples_per_class = a.per_class;
  spec.noise_std = a.noise_std;
  spec.seed = resolve_seed(a.seed, std::nullopt);
  const fcnet::FeatureMatrix fm = fcnet::synth_features(spec);
  fcnet::save_feature_matrix(fm, a.out);
  std::cout << "wrote " << fm.num_subjects << "x" << fm.num_features << " to "
            << a.out << "\n";
  return 0;
}

int run_synth_timeseries(const SynthTimeseriesArgs& a) {
  fcnet::TimeSeriesSynthSpec spec;
  spec.subjects_per_class = a.subjects_per_class;
  spec.num_rois = a.rois;
  spec.num_timepoints = a.timepoints;
  spec.coupled_pairs = a.coupled_pairs;
  spec.coupling_pos = a.coupling_pos;
  spec.coupling_neg = a.coupling_neg;
  spec.shared_strength = a.shared_strength;
  spec.noise_std = a.noise_std;
  spec.seed = resolve_seed(a.seed, std::nullopt);

  const auto subjects = fcnet::synth_timeseries(spec);
  fs::create_directories(a.out_dir);
  std::vector<std::pair<std::string, std::uint8_t>> manifest;
  for (const auto& s : subjects) {
    fcnet::save_timeseries_csv(
        s.ts, (fs::path(a.out_dir) / (s.ts.subject_id + ".csv")).string());
    manifest.emplace_back(s.ts.subject_id, s.label);
  }
  fcnet::save_manifest_csv(manifest, a.manifest);
  std::cout << "wrote " << subjects.size() << " subjects to " << a.out_dir
            << "\n";
  return 0;
}

int run_extract(const ExtractArgs& a) {
  const auto manifest = fcnet::load_manifest_csv(a.manifest);

  if (!fs::is_directory(a.timeseries_dir)) {
    throw fcnet::InputError("not a directory: " + a.timeseries_dir);
  }

  // Time-series files not named by the manifest are an error, as are
  // manifest subjects without a file.
  std::vector<std::string> unlisted;
  for (const auto& entry : fs::directory_iterator(a.timeseries_dir)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".csv") continue;
    const std::string stem = entry.path().stem().string();
    bool found = false;
    for (const auto& [id, label] : manifest) {
      if (id == stem) {
        found = true;
        break;
      }
    }
    if (!found) unlisted.push_back(stem);
  }
  if (!unlisted.empty()) {
    std::string msg = "subjects missing from manifest:";
    for (const auto& s : unlisted) msg += " " + s;
    throw fcnet::InputError(msg);
  }

  std::vector<std::string> missing;
  std::vector<fcnet::LabeledTimeSeries> dataset;
  for (const auto& [id, label] : manifest) {
    const fs::path p = fs::path(a.timeseries_dir) / (id + ".csv");
    if (!fs::exists(p)) {
      missing.push_back(id);
      continue;
    }
    fcnet::LabeledTimeSeries s;
    s.ts = fcnet::load_timeseries_csv(p.string(), id);
    s.label = label;
    dataset.push_back(std::move(s));
  }
  if (!missing.empty()) {
    std::string msg = "manifest subjects without a time-series file:";
    for (const auto& s : missing) msg += " " + s;
    throw fcnet::InputError(msg);
  }
  if (dataset.empty()) {
    throw fcnet::InputError("no subjects found in " + a.timeseries_dir);
  }

  fcnet::ConnectivityDiagnostics diag;
  fcnet::FeatureMatrix fm = fcnet::extract_features(dataset, &diag, a.jobs);
  json prov;
  prov["generator"] = "extract";
  prov["num_rois"] = dataset.front().ts.num_rois;
  prov["subject_ids"] = fm.subject_ids;
  prov["degenerate_rows"] = diag.degenerate_rows;
  prov["degenerate_pairs"] = diag.degenerate_pairs;
  fm.provenance_json = prov.dump();
  fcnet::save_feature_matrix(fm, a.out);
  std::cout << "extracted " << fm.num_subjects << "x" << fm.num_features
            << " (degenerate pairs: " << diag.degenerate_pairs << ")\n";
  return 0;
}

int run_select(const SelectArgs& a) {
  const fcnet::FeatureMatrix fm = fcnet::load_feature_matrix(a.in);
  const auto method = fcnet::selection_method_from_string(a.method);
  const std::uint64_t seed = resolve_seed(a.seed, std::nullopt);

  if (!a.sweep.empty()) {
    if (a.out_sweep.empty()) {
      throw fcnet::InputError("--sweep requires --out-sweep");
    }
    // Default evaluator: mean stratified-CV accuracy of the linear baseline
    // on the subset's columns.
    auto evaluator = [&](const fcnet::FeatureSubset& subset) {
      if (subset.selected_indices.empty()) return 0.0;
      const fcnet::SplitPlan plan =
          fcnet::make_split_plan(fm.labels, 1, a.sweep_folds, seed);
      double acc = 0.0;
      for (const auto& split : plan.splits) {
        std::vector<std::size_t> train_rows = split.train;
        train_rows.insert(train_rows.end(), split.validation.begin(),
                          split.validation.end());
        std::sort(train_rows.begin(), train_rows.end());
        const auto train = fm.submatrix(train_rows, subset.selected_indices);
        const auto test = fm.submatrix(split.test, subset.selected_indices);
        const auto model = fcnet::train_linear_baseline(train);
        const auto preds = fcnet::linear_predict(model, test);
        std::size_t correct = 0;
        for (std::size_t i = 0; i < preds.size(); ++i) {
          correct += preds[i] == test.labels[i];
        }
        acc += static_cast<double>(correct) /
               static_cast<double>(test.num_subjects);
      }
      return acc / static_cast<double>(plan.splits.size());
    };
    const auto report = fcnet::threshold_sweep(fm, a.sweep, evaluator, method);
    fcnet::atomic_write_file(a.out_sweep, sweep_csv(report));
    std::cout << "best threshold: " << report.best_threshold
              << " (subset size " << report.rows[report.best_index].subset_size
              << ", accuracy " << report.rows[report.best_index].mean_accuracy
              << ")\n";
    return 0;
  }

  if (a.out_ranking.empty() && a.out_subset.empty()) {
    throw fcnet::InputError(
        "nothing to do: pass --out-ranking and/or --out-subset");
  }
  const fcnet::FeatureRanking ranking = fcnet::rank_features(fm, method);
  if (!a.out_ranking.empty()) {
    fcnet::atomic_write_file(a.out_ranking, ranking_csv(ranking));
  }
  if (!a.out_subset.empty()) {
    fcnet::FeatureSubset subset;
    if (a.top_k.has_value()) {
      subset = fcnet::select_top_k(ranking, *a.top_k);
    } else {
      subset = fcnet::select_by_threshold(ranking, a.threshold.value_or(0.241));
    }
    fcnet::atomic_write_file(a.out_subset, subset_to_json(subset).dump(2));
    std::cout << "selected " << subset.selected_indices.size() << " of "
              << subset.num_features << " features\n";
  }
  return 0;
}

int run_train(const TrainArgs& a) {
  StageTimer timer;
  const fcnet::FeatureMatrix fm = fcnet::load_feature_matrix(a.in);
  const fcnet::FeatureSubset subset =
      subset_from_json_text(fcnet::read_file(a.subset), a.subset);
  if (subset.num_features != fm.num_features) {
    throw fcnet::InputError("subset was built for " +
                            std::to_string(subset.num_features) +
                            " features, matrix has " +
                            std::to_string(fm.num_features));
  }
  if (subset.selected_indices.empty()) {
    throw fcnet::InputError("subset is empty");
  }

  fcnet::TrainingConfig cfg = load_training_config(a.config);
  const bool config_has_seed = !a.config.empty();
  cfg.seed = resolve_seed(
      a.seed,
      config_has_seed ? std::optional<std::uint64_t>(cfg.seed) : std::nullopt);
  if (!a.constraint.empty()) {
    cfg.constraint_type = fcnet::constraint_type_from_string(a.constraint);
  }
  timer.stage_done("load");

  const fcnet::FeatureMatrix selected =
      fm.select_columns(subset.selected_indices);

  // 9:1 train/validation: the held-out tenth of the standard 8:1:1 split is
  // folded back into training since no test evaluation happens here.
  const fcnet::ThreeWaySplit split =
      fcnet::stratified_split(selected.labels, {8.0, 1.0, 1.0}, cfg.seed);
  std::vector<std::size_t> train_rows = split.train;
  train_rows.insert(train_rows.end(), split.test.begin(), split.test.end());
  std::sort(train_rows.begin(), train_rows.end());
  const fcnet::FeatureMatrix train = selected.select_rows(train_rows);
  const fcnet::FeatureMatrix val = selected.select_rows(split.validation);
  timer.stage_done("split");

  fcnet::TrainingConfig pretrain_cfg = cfg;
  if (a.pretrain_epochs > 0) pretrain_cfg.max_training_epoch = a.pretrain_epochs;
  const fcnet::PretrainResult pre =
      fcnet::pretrain_vae(train, a.hidden1, a.hidden2, pretrain_cfg);
  timer.stage_done("pretrain");

  const fcnet::MlpParams init = fcnet::transfer(pre.encoder, cfg.seed);
  fcnet::TrainedModel model = fcnet::fine_tune(init, train, val, cfg);
  model.feature_subset = subset.selected_indices;
  timer.stage_done("fine_tune");

  fcnet::save_model(model, a.out_model);
  timer.stage_done("save");

  const std::string manifest_path =
      a.manifest_out.empty() ? a.out_model + ".manifest.json" : a.manifest_out;
  json inputs;
  inputs["feature_matrix"] = {{"path", a.in},
                              {"digest", fcnet::file_digest_hex(a.in)}};
  inputs["subset"] = {{"path", a.subset},
                      {"digest", fcnet::file_digest_hex(a.subset)}};
  json snapshot = json::parse(cfg.to_json_text());
  snapshot["hidden1"] = a.hidden1;
  snapshot["hidden2"] = a.hidden2;
  snapshot["pretrain_epochs"] = a.pretrain_epochs;
  write_run_manifest(manifest_path, "train", snapshot, inputs, cfg.seed, timer);

  std::cout << "saved model (epoch " << model.saved_epoch << ", "
            << model.trained_epochs << " epochs trained) to " << a.out_model
            << "\n";
  return 0;
}

int run_cv_cmd(const CvArgs& a) {
  StageTimer timer;
  const fcnet::FeatureMatrix fm = fcnet::load_feature_matrix(a.in);

  fcnet::PipelineConfig cfg;
  cfg.training = load_training_config(a.config);
  const bool config_has_seed = !a.config.empty();
  cfg.training.seed = resolve_seed(
      a.seed, config_has_seed ? std::optional<std::uint64_t>(cfg.training.seed)
                              : std::nullopt);
  cfg.selection_method = fcnet::selection_method_from_string(a.select_method);
  cfg.selection_threshold = a.select_threshold;
  cfg.selection_top_k = a.select_top_k;
  cfg.hidden1 = a.hidden1;
  cfg.hidden2 = a.hidden2;
  cfg.pretrain_epochs = a.pretrain_epochs;
  cfg.jobs = a.jobs;
  timer.stage_done("load");

  const fcnet::EvaluationReport report =
      fcnet::run_cv(fm, cfg, a.repeats, a.folds);
  timer.stage_done("cv");

  fcnet::atomic_write_file(a.out_report, fcnet::report_to_json_text(report));
  if (!a.out_folds.empty()) {
    fcnet::atomic_write_file(a.out_folds, fcnet::report_folds_csv(report));
  }
  if (!a.out_roc.empty()) {
    fcnet::atomic_write_file(a.out_roc, fcnet::report_roc_csv(report));
  }
  if (!a.out_det.empty()) {
    fcnet::atomic_write_file(a.out_det, fcnet::report_det_csv(report));
  }
  timer.stage_done("write");

  const std::string manifest_path =
      a.manifest_out.empty() ? a.out_report + ".manifest.json" : a.manifest_out;
  json inputs;
  inputs["feature_matrix"] = {{"path", a.in},
                              {"digest", fcnet::file_digest_hex(a.in)}};
  json snapshot = json::parse(cfg.training.to_json_text());
  snapshot["selection_method"] = fcnet::to_string(cfg.selection_method);
  snapshot["selection_threshold"] = cfg.selection_threshold;
  if (cfg.selection_top_k.has_value()) {
    snapshot["selection_top_k"] = *cfg.selection_top_k;
  }
  snapshot["hidden1"] = cfg.hidden1;
  snapshot["hidden2"] = cfg.hidden2;
  snapshot["pretrain_epochs"] = cfg.pretrain_epochs;
  snapshot["repeats"] = a.repeats;
  snapshot["folds"] = a.folds;
  write_run_manifest(manifest_path, "cv", snapshot, inputs, cfg.training.seed,
                     timer);

  std::cout << "mean accuracy " << report.mean_accuracy << ", sensitivity "
            << report.mean_sensitivity << ", specificity "
            << report.mean_specificity << ", pooled AUC "
            << report.pooled_roc.auc << "\n";
  return 0;
}

int run_compare_fs(const CompareFsArgs& a) {
  const fcnet::FeatureMatrix fm = fcnet::load_feature_matrix(a.in);
  std::vector<fcnet::SelectionMethod> methods;
  for (const auto& m : a.methods) {
    methods.push_back(fcnet::selection_method_from_string(m));
  }
  const std::uint64_t seed = resolve_seed(a.seed, std::nullopt);
  const auto rows =
      fcnet::compare_feature_selection(fm, methods, a.k_grid, a.folds, seed);
  fcnet::atomic_write_file(a.out, fcnet::fs_comparison_csv(rows));
  std::cout << "wrote " << rows.size() << " rows to " << a.out << "\n";
  return 0;
}

int run_predict(const PredictArgs& a) {
  const fcnet::TrainedModel model = fcnet::load_model(a.model);
  fcnet::FeatureMatrix fm = fcnet::load_feature_matrix(a.in);

  const std::size_t input_dim = model.params.hidden1.in_dim();
  if (fm.num_features != input_dim) {
    if (!model.feature_subset.empty() &&
        model.feature_subset.size() == input_dim) {
      for (std::size_t idx : model.feature_subset) {
        if (idx >= fm.num_features) {
          throw fcnet::InputError(
              "model feature subset does not fit the input matrix");
        }
      }
      fm = fm.select_columns(model.feature_subset);
    } else {
      throw fcnet::InputError("input has " + std::to_string(fm.num_features) +
                              " features, model expects " +
                              std::to_string(input_dim));
    }
  }

  std::ostringstream out;
  out << "index,p_asd,label\n";
  out.precision(17);
  const fcnet::Matrix x = fcnet::to_batch(fm);
  for (std::size_t r = 0; r < fm.num_subjects; ++r) {
    const auto probs = model.predict_probs({x.row_ptr(r), x.cols()});
    const std::uint8_t label =
        fcnet::predict_with_threshold_moving(probs, model.n_asd, model.n_hc);
    out << r << "," << probs[0] << "," << static_cast<int>(label) << "\n";
  }
  fcnet::atomic_write_file(a.out, out.str());
  std::cout << "wrote predictions for " << fm.num_subjects << " rows to "
            << a.out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{kToolVersion};
  app.require_subcommand(1);

  const std::vector<std::string> method_names{"dsdc", "fisher", "abs_pcc"};
  const std::vector<std::string> constraint_names{"none", "1", "2", "balanced"};

  auto* synth = app.add_subcommand("synth", "generate synthetic datasets");
  synth->require_subcommand(1);

  SynthFeaturesArgs sf;
  auto* synth_features =
      synth->add_subcommand("features", "labeled feature matrix");
  synth_features->add_option("--out", sf.out)->required();
  synth_features->add_option("--num-features", sf.num_features);
  synth_features->add_option("--planted", sf.planted);
  synth_features->add_option("--delta", sf.delta);
  synth_features->add_option("--per-class", sf.per_class);
  synth_features->add_option("--noise-std", sf.noise_std);
  synth_features->add_option("--seed", sf.seed);

  SynthTimeseriesArgs st;
  auto* synth_ts = synth->add_subcommand("timeseries", "per-subject ROI series");
  synth_ts->add_option("--out-dir", st.out_dir)->required();
  synth_ts->add_option("--manifest", st.manifest)->required();
  synth_ts->add_option("--subjects-per-class", st.subjects_per_class);
  synth_ts->add_option("--rois", st.rois);
  synth_ts->add_option("--timepoints", st.timepoints);
  synth_ts->add_option("--coupled-pairs", st.coupled_pairs);
  synth_ts->add_option("--coupling-pos", st.coupling_pos);
  synth_ts->add_option("--coupling-neg", st.coupling_neg);
  synth_ts->add_option("--shared-strength", st.shared_strength);
  synth_ts->add_option("--noise-std", st.noise_std);
  synth_ts->add_option("--seed", st.seed);

  ExtractArgs ex;
  auto* extract = app.add_subcommand("extract", "time series -> feature matrix");
  extract->add_option("--timeseries-dir", ex.timeseries_dir)->required();
  extract->add_option("--manifest", ex.manifest)->required();
  extract->add_option("--out", ex.out)->required();
  extract->add_option("--jobs", ex.jobs);

  SelectArgs se;
  auto* select = app.add_subcommand("select", "rank and select features");
  select->add_option("--in", se.in)->required();
  select->add_option("--method", se.method)->check(CLI::IsMember(method_names));
  select->add_option("--threshold", se.threshold);
  select->add_option("--top-k", se.top_k);
  select->add_option("--out-ranking", se.out_ranking);
  select->add_option("--out-subset", se.out_subset);
  select->add_option("--sweep", se.sweep)->delimiter(',');
  select->add_option("--out-sweep", se.out_sweep);
  select->add_option("--sweep-folds", se.sweep_folds);
  select->add_option("--seed", se.seed);

  TrainArgs tr;
  auto* train = app.add_subcommand("train", "pretrain + transfer + fine-tune");
  train->add_option("--in", tr.in)->required();
  train->add_option("--subset", tr.subset)->required();
  train->add_option("--config", tr.config);
  train->add_option("--constraint", tr.constraint)
      ->check(CLI::IsMember(constraint_names));
  train->add_option("--out-model", tr.out_model)->required();
  train->add_option("--manifest-out", tr.manifest_out);
  train->add_option("--hidden1", tr.hidden1);
  train->add_option("--hidden2", tr.hidden2);
  train->add_option("--pretrain-epochs", tr.pretrain_epochs);
  train->add_option("--seed", tr.seed);

  CvArgs cv;
  auto* cv_cmd = app.add_subcommand("cv", "repeated stratified k-fold CV");
  cv_cmd->add_option("--in", cv.in)->required();
  cv_cmd->add_option("--config", cv.config);
  cv_cmd->add_option("--repeats", cv.repeats);
  cv_cmd->add_option("--folds", cv.folds);
  cv_cmd->add_option("--out-report", cv.out_report)->required();
  cv_cmd->add_option("--out-folds", cv.out_folds);
  cv_cmd->add_option("--out-roc", cv.out_roc);
  cv_cmd->add_option("--out-det", cv.out_det);
  cv_cmd->add_option("--manifest-out", cv.manifest_out);
  cv_cmd->add_option("--select-method", cv.select_method)
      ->check(CLI::IsMember(method_names));
  cv_cmd->add_option("--select-threshold", cv.select_threshold);
  cv_cmd->add_option("--select-top-k", cv.select_top_k);
  cv_cmd->add_option("--hidden1", cv.hidden1);
  cv_cmd->add_option("--hidden2", cv.hidden2);
  cv_cmd->add_option("--pretrain-epochs", cv.pretrain_epochs);
  cv_cmd->add_option("--jobs", cv.jobs);
  cv_cmd->add_option("--seed", cv.seed);

  CompareFsArgs cf;
  auto* compare = app.add_subcommand("compare-fs", "feature-selection comparison");
  compare->add_option("--in", cf.in)->required();
  compare->add_option("--methods", cf.methods)
      ->delimiter(',')
      ->required()
      ->check(CLI::IsMember(method_names));
  compare->add_option("--k-grid", cf.k_grid)->delimiter(',')->required();
  compare->add_option("--out", cf.out)->required();
  compare->add_option("--folds", cf.folds);
  compare->add_option("--seed", cf.seed);

  PredictArgs pr;
  auto* predict = app.add_subcommand("predict", "apply a trained model");
  predict->add_option("--model", pr.model)->required();
  predict->add_option("--in", pr.in)->required();
  predict->add_option("--out", pr.out)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (synth_features->parsed()) return run_synth_features(sf);
    if (synth_ts->parsed()) return run_synth_timeseries(st);
    if (extract->parsed()) return run_extract(ex);
    if (select->parsed()) return run_select(se);
    if (train->parsed()) return run_train(tr);
    if (cv_cmd->parsed()) return run_cv_cmd(cv);
    if (compare->parsed()) return run_compare_fs(cf);
    if (predict->parsed()) return run_predict(pr);
  } catch (const fcnet::ConstraintError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 5;
  } catch (const fcnet::NumericalError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const fcnet::InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const fcnet::FormatError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
