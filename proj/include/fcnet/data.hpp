#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fcnet/connectome.hpp"
#include "fcnet/types.hpp"

namespace fcnet {

// Synthetic labeled feature matrices: non-planted features are standard
// normal for both classes; planted features shift by +delta/2 (positives)
// and -delta/2 (negatives). Every value is a pure function of
// (seed, row, column), so generation is order-independent.
struct SyntheticSpec {
  std::size_t num_features = 0;
  std::vector<std::size_t> planted_indices;
  double mean_shift = 0.0;  // delta
  std::size_t samples_per_class = 0;
  double noise_std = 1.0;
  std::uint64_t seed = 0;

  void validate() const;
};

FeatureMatrix synth_features(const SyntheticSpec& spec);

// Synthetic ROI time series: shared sinusoid mixtures plus independent
// noise, with class-dependent coupling on the first `coupled_pairs` ROI
// pairs (ROIs 2p and 2p+1 share an extra signal scaled by the class
// coupling strength).
struct TimeSeriesSynthSpec {
  std::size_t subjects_per_class = 0;
  std::size_t num_rois = 0;
  std::size_t num_timepoints = 0;
  std::size_t coupled_pairs = 0;
  double coupling_pos = 0.0;
  double coupling_neg = 0.0;
  double shared_strength = 0.0;  // global sinusoid mixture weight
  double noise_std = 1.0;
  std::uint64_t seed = 0;

  void validate() const;
};

std::vector<LabeledTimeSeries> synth_timeseries(const TimeSeriesSynthSpec& spec);

// FCFM binary container: magic "FCFM", version u32 = 1, rows u32, cols u32
// (16-byte header, little-endian), row-major float32 values, one label byte
// (0/1) per row, then an optional UTF-8 JSON provenance footer.
void save_feature_matrix_fcfm(const FeatureMatrix& fm, const std::string& path);
FeatureMatrix load_feature_matrix_fcfm(const std::string& path);

// CSV variant: header feature_0,...,feature_{n-1},label.
void save_feature_matrix_csv(const FeatureMatrix& fm, const std::string& path);
FeatureMatrix load_feature_matrix_csv(const std::string& path);

// Dispatch on extension: ".csv" -> CSV, anything else -> FCFM.
void save_feature_matrix(const FeatureMatrix& fm, const std::string& path);
FeatureMatrix load_feature_matrix(const std::string& path);

// Per-subject time-series CSV (rows = ROIs, columns = timepoints, no header).
TimeSeriesMatrix load_timeseries_csv(const std::string& path,
                                     const std::string& subject_id);
void save_timeseries_csv(const TimeSeriesMatrix& ts, const std::string& path);

// Manifest CSV: subject_id,label lines; a leading "subject_id,label" header
// line is permitted and skipped.
std::vector<std::pair<std::string, std::uint8_t>> load_manifest_csv(
    const std::string& path);
void save_manifest_csv(
    const std::vector<std::pair<std::string, std::uint8_t>>& manifest,
    const std::string& path);

}  // namespace fcnet
