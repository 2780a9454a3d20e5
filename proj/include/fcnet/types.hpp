#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "fcnet/errors.hpp"

namespace fcnet {

// Subjects x features table. Feature storage is 32-bit; every computation
// that consumes it accumulates in 64-bit.
struct FeatureMatrix {
  std::size_t num_subjects = 0;
  std::size_t num_features = 0;
  std::vector<float> values;          // row-major, num_subjects * num_features
  std::vector<std::uint8_t> labels;   // 0 = HC-analog, 1 = ASD-analog
  std::vector<std::string> subject_ids;  // optional, empty or num_subjects
  std::string provenance_json;           // optional footer payload

  float at(std::size_t row, std::size_t col) const {
    return values[row * num_features + col];
  }
  float& at(std::size_t row, std::size_t col) {
    return values[row * num_features + col];
  }

  void resize(std::size_t subjects, std::size_t features) {
    num_subjects = subjects;
    num_features = features;
    values.assign(subjects * features, 0.0f);
    labels.assign(subjects, 0);
  }

  std::size_t count_label(std::uint8_t label) const {
    std::size_t n = 0;
    for (std::uint8_t l : labels) n += (l == label);
    return n;
  }

  bool has_both_classes() const {
    return count_label(0) > 0 && count_label(1) > 0;
  }

  // Rows restricted to `rows`, columns to `cols` (both in given order).
  FeatureMatrix submatrix(const std::vector<std::size_t>& rows,
                          const std::vector<std::size_t>& cols) const;
  FeatureMatrix select_rows(const std::vector<std::size_t>& rows) const;
  FeatureMatrix select_columns(const std::vector<std::size_t>& cols) const;
};

}  // namespace fcnet
