#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fcnet/types.hpp"

namespace fcnet {

// Per-subject ROI time series, rows = ROIs, columns = timepoints.
struct TimeSeriesMatrix {
  std::string subject_id;
  std::size_t num_rois = 0;
  std::size_t num_timepoints = 0;
  std::vector<double> series;  // row-major

  double at(std::size_t roi, std::size_t t) const {
    return series[roi * num_timepoints + t];
  }
  std::span<const double> row(std::size_t roi) const {
    return {series.data() + roi * num_timepoints, num_timepoints};
  }

  // Throws InputError unless num_rois >= 2, num_timepoints >= 3 and all
  // samples are finite.
  void validate() const;
};

struct LabeledTimeSeries {
  TimeSeriesMatrix ts;
  std::uint8_t label = 0;
};

// Symmetric ROI x ROI correlation matrix.
struct ConnectivityMatrix {
  std::size_t num_rois = 0;
  std::vector<double> values;  // row-major

  double at(std::size_t i, std::size_t j) const {
    return values[i * num_rois + j];
  }
};

struct ConnectivityDiagnostics {
  std::size_t degenerate_rows = 0;   // zero-variance ROI series
  std::size_t degenerate_pairs = 0;  // pairs forced to 0 because of them
};

// Pearson correlation between two equal-length series. Returns nullopt when
// either series has zero variance (the correlation is undefined there).
// Throws InputError on length mismatch or length < 2.
std::optional<double> pearson(std::span<const double> x,
                              std::span<const double> y);

// Pairwise correlations; degenerate pairs become 0 and are counted in `diag`.
// Upper triangle is computed once and mirrored. Diagonal is 1 for
// non-degenerate rows, 0 for degenerate ones.
ConnectivityMatrix connectivity_matrix(const TimeSeriesMatrix& ts,
                                       ConnectivityDiagnostics* diag = nullptr);

// Strict upper triangle (i < j) in row-major order: (0,1), (0,2), ...,
// (0,n-1), (1,2), ..., (n-2,n-1). The index map below is its inverse.
std::vector<double> flatten_upper_triangle(const ConnectivityMatrix& m);

std::size_t upper_triangle_size(std::size_t num_rois);
std::size_t feature_index(std::size_t i, std::size_t j, std::size_t num_rois);
std::pair<std::size_t, std::size_t> feature_pair(std::size_t index,
                                                 std::size_t num_rois);

// One feature row per subject, order preserved, labels carried through.
// All subjects must share num_rois; `jobs` > 1 parallelizes across subjects
// with results identical to sequential execution.
FeatureMatrix extract_features(std::span<const LabeledTimeSeries> dataset,
                               ConnectivityDiagnostics* diag = nullptr,
                               int jobs = 1);

}  // namespace fcnet
