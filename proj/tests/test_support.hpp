#pragma once

// Shared generators and independent oracles for the unit tests. Oracles are
// deliberately naive re-implementations; they must not call into the code
// paths they check.

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "fcnet/rng.hpp"
#include "fcnet/types.hpp"

namespace testsup {

inline std::vector<double> random_vector(std::size_t n, std::uint64_t seed,
                                         double lo = -2.0, double hi = 2.0) {
  fcnet::CounterRng rng(seed);
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(lo, hi);
  return v;
}

inline std::vector<double> random_normal_vector(std::size_t n,
                                                std::uint64_t seed) {
  fcnet::CounterRng rng(seed);
  std::vector<double> v(n);
  for (auto& x : v) x = rng.normal();
  return v;
}

// Two-pass long-double Pearson, independent of the library implementation.
inline long double pearson_oracle(std::span<const double> x,
                                  std::span<const double> y) {
  const std::size_t n = x.size();
  long double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  long double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return sxy / (std::sqrt(sxx) * std::sqrt(syy));
}

// Brute-force double-loop binning: for each bin, scan every sample.
struct BinningOracle {
  std::vector<std::size_t> pos_counts;
  std::vector<std::size_t> neg_counts;
};

inline BinningOracle binning_oracle(std::span<const float> values,
                                    std::span<const std::uint8_t> labels,
                                    std::size_t bins) {
  double lo = values[0], hi = values[0];
  for (float v : values) {
    lo = std::min<double>(lo, v);
    hi = std::max<double>(hi, v);
  }
  const double width = (hi - lo) / static_cast<double>(bins);
  BinningOracle oracle;
  oracle.pos_counts.assign(bins, 0);
  oracle.neg_counts.assign(bins, 0);
  for (std::size_t b = 0; b < bins; ++b) {
    const double left = lo + static_cast<double>(b) * width;
    const double right = lo + static_cast<double>(b + 1) * width;
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double v = values[i];
      bool in;
      if (width == 0.0) {
        in = b == 0;
      } else if (b + 1 == bins) {
        in = v >= left && v <= hi;
      } else {
        // Membership mirrors the half-open rule via the same bin arithmetic.
        in = std::floor((v - lo) / width) == static_cast<double>(b);
        (void)right;
      }
      if (in) (labels[i] == 1 ? oracle.pos_counts[b] : oracle.neg_counts[b]) += 1;
    }
  }
  return oracle;
}

inline double dsdc_oracle(std::span<const float> values,
                          std::span<const std::uint8_t> labels,
                          std::size_t bins) {
  const BinningOracle o = binning_oracle(values, labels, bins);
  std::size_t np = 0, nn = 0;
  for (std::uint8_t l : labels) (l == 1 ? np : nn) += 1;
  double score = 0.0;
  for (std::size_t b = 0; b < bins; ++b) {
    score += std::fabs(static_cast<double>(o.pos_counts[b]) / np -
                       static_cast<double>(o.neg_counts[b]) / nn);
  }
  return score;
}

// Random labeled matrix with mixed per-feature distributions (uniform,
// normal, bimodal, heavy-tailed), for oracle-equivalence sweeps.
inline fcnet::FeatureMatrix mixed_random_matrix(std::size_t subjects,
                                                std::size_t features,
                                                std::uint64_t seed) {
  fcnet::FeatureMatrix fm;
  fm.resize(subjects, features);
  fcnet::CounterRng label_rng(seed, 0xabcdef);
  for (std::size_t r = 0; r < subjects; ++r) {
    fm.labels[r] = r % 2 == 0 ? 1 : 0;
  }
  (void)label_rng;
  for (std::size_t c = 0; c < features; ++c) {
    fcnet::CounterRng rng(seed, c + 1);
    const int kind = static_cast<int>(rng.uniform_below(4));
    for (std::size_t r = 0; r < subjects; ++r) {
      double v = 0.0;
      switch (kind) {
        case 0: v = rng.uniform(-1.0, 1.0); break;
        case 1: v = rng.normal(); break;
        case 2: v = (rng.uniform01() < 0.5 ? -2.0 : 2.0) + 0.3 * rng.normal(); break;
        default: {
          const double u = rng.normal();
          v = u * u * u;  // heavy tail
          break;
        }
      }
      fm.at(r, c) = static_cast<float>(v);
    }
  }
  return fm;
}

}  // namespace testsup
