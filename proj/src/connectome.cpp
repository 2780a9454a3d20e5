#include "fcnet/connectome.hpp"

#include <atomic>
#include <cmath>
#include <thread>

namespace fcnet {

void TimeSeriesMatrix::validate() const {
  if (num_rois < 2) {
    throw InputError("time series for subject '" + subject_id +
                     "' needs at least 2 ROIs, got " + std::to_string(num_rois));
  }
  if (num_timepoints < 3) {
    throw InputError("time series for subject '" + subject_id +
                     "' needs at least 3 timepoints, got " +
                     std::to_string(num_timepoints));
  }
  if (series.size() != num_rois * num_timepoints) {
    throw InputError("time series for subject '" + subject_id +
                     "' has inconsistent storage size");
  }
  for (double v : series) {
    if (!std::isfinite(v)) {
      throw InputError("time series for subject '" + subject_id +
                       "' contains non-finite samples");
    }
  }
}

std::optional<double> pearson(std::span<const double> x,
                              std::span<const double> y) {
  if (x.size() != y.size()) {
    throw InputError("pearson: length mismatch (" + std::to_string(x.size()) +
                     " vs " + std::to_string(y.size()) + ")");
  }
  if (x.size() < 2) {
    throw InputError("pearson: need at least 2 samples");
  }
  const std::size_t n = x.size();
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) return std::nullopt;
  return sxy / (std::sqrt(sxx) * std::sqrt(syy));
}

ConnectivityMatrix connectivity_matrix(const TimeSeriesMatrix& ts,
                                       ConnectivityDiagnostics* diag) {
  ts.validate();
  const std::size_t n = ts.num_rois;
  ConnectivityMatrix m;
  m.num_rois = n;
  m.values.assign(n * n, 0.0);

  std::vector<bool> degenerate(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    auto r = ts.row(i);
    double mean = 0.0;
    for (double v : r) mean += v;
    mean /= static_cast<double>(r.size());
    double ss = 0.0;
    for (double v : r) ss += (v - mean) * (v - mean);
    degenerate[i] = (ss == 0.0);
    if (degenerate[i] && diag != nullptr) ++diag->degenerate_rows;
    m.values[i * n + i] = degenerate[i] ? 0.0 : 1.0;
  }

  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      double value = 0.0;
      if (degenerate[i] || degenerate[j]) {
        if (diag != nullptr) ++diag->degenerate_pairs;
      } else {
        value = *pearson(ts.row(i), ts.row(j));
      }
      m.values[i * n + j] = value;
      m.values[j * n + i] = value;
    }
  }
  return m;
}

std::size_t upper_triangle_size(std::size_t num_rois) {
  return num_rois * (num_rois - 1) / 2;
}

std::size_t feature_index(std::size_t i, std::size_t j, std::size_t num_rois) {
  // Row-major strict upper triangle: rows 0..i-1 contribute
  // (n-1) + (n-2) + ... + (n-i) entries, then j lands at offset j-i-1.
  return i * num_rois - i * (i + 1) / 2 + (j - i - 1);
}

std::pair<std::size_t, std::size_t> feature_pair(std::size_t index,
                                                 std::size_t num_rois) {
  std::size_t i = 0;
  std::size_t row_len = num_rois - 1;
  while (index >= row_len) {
    index -= row_len;
    --row_len;
    ++i;
  }
  return {i, i + 1 + index};
}

std::vector<double> flatten_upper_triangle(const ConnectivityMatrix& m) {
  const std::size_t n = m.num_rois;
  if (m.values.size() != n * n) {
    throw InputError("flatten_upper_triangle: matrix is not square");
  }
  std::vector<double> out;
  out.reserve(upper_triangle_size(n));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      out.push_back(m.at(i, j));
    }
  }
  return out;
}

namespace {

void extract_one(const LabeledTimeSeries& subject, FeatureMatrix& out,
                 std::size_t row, ConnectivityDiagnostics& diag) {
  auto cm = connectivity_matrix(subject.ts, &diag);
  auto flat = flatten_upper_triangle(cm);
  float* dst = out.values.data() + row * out.num_features;
  for (std::size_t k = 0; k < flat.size(); ++k) {
    dst[k] = static_cast<float>(flat[k]);
  }
  out.labels[row] = subject.label;
}

}  // namespace

FeatureMatrix extract_features(std::span<const LabeledTimeSeries> dataset,
                               ConnectivityDiagnostics* diag, int jobs) {
  FeatureMatrix out;
  if (dataset.empty()) return out;

  const std::size_t num_rois = dataset.front().ts.num_rois;
  for (const auto& s : dataset) {
    if (s.ts.num_rois != num_rois) {
      throw InputError("extract_features: subject '" + s.ts.subject_id +
                       "' has " + std::to_string(s.ts.num_rois) +
                       " ROIs, expected " + std::to_string(num_rois));
    }
  }

  out.resize(dataset.size(), upper_triangle_size(num_rois));
  out.subject_ids.resize(dataset.size());
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    out.subject_ids[i] = dataset[i].ts.subject_id;
  }

  std::vector<ConnectivityDiagnostics> per_subject(dataset.size());
  if (jobs <= 1 || dataset.size() < 2) {
    for (std::size_t i = 0; i < dataset.size(); ++i) {
      extract_one(dataset[i], out, i, per_subject[i]);
    }
  } else {
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
      for (;;) {
        std::size_t i = next.fetch_add(1);
        if (i >= dataset.size()) return;
        extract_one(dataset[i], out, i, per_subject[i]);
      }
    };
    std::vector<std::thread> pool;
    const int n_threads = std::min<int>(jobs, static_cast<int>(dataset.size()));
    pool.reserve(n_threads);
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  if (diag != nullptr) {
    for (const auto& d : per_subject) {
      diag->degenerate_rows += d.degenerate_rows;
      diag->degenerate_pairs += d.degenerate_pairs;
    }
  }
  return out;
}

FeatureMatrix FeatureMatrix::select_rows(
    const std::vector<std::size_t>& rows) const {
  FeatureMatrix out;
  out.resize(rows.size(), num_features);
  if (!subject_ids.empty()) out.subject_ids.resize(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const float* src = values.data() + rows[r] * num_features;
    std::copy(src, src + num_features,
              out.values.begin() + r * num_features);
    out.labels[r] = labels[rows[r]];
    if (!subject_ids.empty()) out.subject_ids[r] = subject_ids[rows[r]];
  }
  return out;
}

FeatureMatrix FeatureMatrix::select_columns(
    const std::vector<std::size_t>& cols) const {
  FeatureMatrix out;
  out.resize(num_subjects, cols.size());
  out.labels = labels;
  out.subject_ids = subject_ids;
  for (std::size_t r = 0; r < num_subjects; ++r) {
    const float* src = values.data() + r * num_features;
    float* dst = out.values.data() + r * cols.size();
    for (std::size_t c = 0; c < cols.size(); ++c) dst[c] = src[cols[c]];
  }
  return out;
}

FeatureMatrix FeatureMatrix::submatrix(
    const std::vector<std::size_t>& rows,
    const std::vector<std::size_t>& cols) const {
  return select_rows(rows).select_columns(cols);
}

}  // namespace fcnet
