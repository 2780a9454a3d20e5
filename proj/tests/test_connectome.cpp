#include "fcnet/connectome.hpp"

#include <doctest.h>

#include <cmath>

#include "test_support.hpp"

using namespace fcnet;

namespace {

TimeSeriesMatrix make_ts(std::vector<std::vector<double>> rows,
                         std::string id = "s") {
  TimeSeriesMatrix ts;
  ts.subject_id = std::move(id);
  ts.num_rois = rows.size();
  ts.num_timepoints = rows.empty() ? 0 : rows[0].size();
  for (const auto& r : rows) {
    ts.series.insert(ts.series.end(), r.begin(), r.end());
  }
  return ts;
}

}  // namespace

TEST_CASE("pearson on exact linear relations") {
  const std::vector<double> x{1, 2, 3};
  CHECK(*pearson(x, std::vector<double>{2, 4, 6}) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(*pearson(x, std::vector<double>{3, 2, 1}) == doctest::Approx(-1.0).epsilon(1e-12));
}

TEST_CASE("pearson matches the frozen oracle value") {
  // 0.8 computed from the definition with a high-precision oracle.
  const std::vector<double> x{1, 2, 3, 4};
  const std::vector<double> y{1, 3, 2, 4};
  CHECK(*pearson(x, y) == doctest::Approx(0.8).epsilon(1e-12));
}

TEST_CASE("pearson input errors and degenerate pairs") {
  const std::vector<double> x{1, 2, 3};
  CHECK_THROWS_AS((void)pearson(x, std::vector<double>{1, 2}), InputError);
  CHECK_THROWS_AS((void)pearson(std::vector<double>{1}, std::vector<double>{2}),
                  InputError);
  CHECK_FALSE(pearson(std::vector<double>{5, 5, 5}, x).has_value());
  CHECK_FALSE(pearson(x, std::vector<double>{0, 0, 0}).has_value());
}

TEST_CASE("pearson symmetry is exact and affine invariance holds") {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto x = testsup::random_normal_vector(25, seed * 2 + 1);
    const auto y = testsup::random_normal_vector(25, seed * 2 + 2);
    const auto xy = pearson(x, y);
    const auto yx = pearson(y, x);
    REQUIRE(xy.has_value());
    CHECK(std::fabs(*xy) <= 1.0 + 1e-12);
    CHECK(*xy == *yx);  // same summation order

    std::vector<double> ax(x.size());
    const double a = 0.5 + 3.0 * (seed % 5);
    for (std::size_t i = 0; i < x.size(); ++i) ax[i] = a * x[i] + 7.25;
    CHECK(*pearson(ax, y) == doctest::Approx(*xy).epsilon(1e-10));
  }
}

TEST_CASE("connectivity matrix of trivial inputs") {
  const auto identical = connectivity_matrix(make_ts({{1, 2, 3}, {1, 2, 3}}));
  CHECK(identical.at(0, 0) == 1.0);
  CHECK(identical.at(0, 1) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(identical.at(1, 0) == identical.at(0, 1));
  CHECK(identical.at(1, 1) == 1.0);

  const auto anti = connectivity_matrix(make_ts({{1, 2, 3}, {3, 2, 1}}));
  CHECK(anti.at(0, 1) == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(anti.at(1, 0) == anti.at(0, 1));
}

TEST_CASE("connectivity matrix matches pairwise pearson oracle") {
  TimeSeriesMatrix ts;
  ts.subject_id = "rand";
  ts.num_rois = 3;
  ts.num_timepoints = 40;
  ts.series = testsup::random_normal_vector(3 * 40, 99);
  const auto m = connectivity_matrix(ts);
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = i + 1; j < 3; ++j) {
      const double expected =
          static_cast<double>(testsup::pearson_oracle(ts.row(i), ts.row(j)));
      CHECK(m.at(i, j) == doctest::Approx(expected).epsilon(1e-12));
      CHECK(m.at(i, j) == m.at(j, i));
    }
  }
}

TEST_CASE("degenerate rows produce zero entries and diagnostics") {
  ConnectivityDiagnostics diag;
  const auto m =
      connectivity_matrix(make_ts({{4, 4, 4}, {1, 2, 3}, {2, 1, 0}}), &diag);
  CHECK(diag.degenerate_rows == 1);
  CHECK(diag.degenerate_pairs == 2);  // (0,1) and (0,2)
  CHECK(m.at(0, 0) == 0.0);           // flat row: no self-correlation
  CHECK(m.at(0, 1) == 0.0);
  CHECK(m.at(0, 2) == 0.0);
  CHECK(m.at(1, 1) == 1.0);
}

TEST_CASE("flatten_upper_triangle lengths and ordering") {
  CHECK(upper_triangle_size(392) == 76636);
  CHECK(upper_triangle_size(3) == 3);

  ConnectivityMatrix m;
  m.num_rois = 4;
  m.values.assign(16, 0.0);
  auto set = [&](std::size_t i, std::size_t j, double v) {
    m.values[i * 4 + j] = v;
    m.values[j * 4 + i] = v;
  };
  set(0, 1, 0.5);
  set(0, 2, -0.25);
  set(0, 3, 0.125);
  set(1, 2, 0.75);
  set(1, 3, -0.5);
  set(2, 3, 0.0625);
  const auto flat = flatten_upper_triangle(m);
  CHECK(flat == std::vector<double>{0.5, -0.25, 0.125, 0.75, -0.5, 0.0625});
}

TEST_CASE("flatten rejects non-square storage") {
  ConnectivityMatrix bad;
  bad.num_rois = 3;
  bad.values.assign(7, 0.0);
  CHECK_THROWS_AS((void)flatten_upper_triangle(bad), InputError);
}

TEST_CASE("feature index map round-trips for every flattened position") {
  for (std::size_t n : {std::size_t{2}, std::size_t{3}, std::size_t{5},
                        std::size_t{8}, std::size_t{17}}) {
    std::size_t k = 0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j, ++k) {
        CHECK(feature_index(i, j, n) == k);
        const auto [pi, pj] = feature_pair(k, n);
        CHECK(pi == i);
        CHECK(pj == j);
      }
    }
    CHECK(k == upper_triangle_size(n));
  }
}

TEST_CASE("extract_features basic shapes and label carry-through") {
  std::vector<LabeledTimeSeries> one;
  one.push_back({make_ts({{1, 2, 3}, {2, 4, 6}, {0, 1, 0}}, "a"), 1});
  const auto fm = extract_features(one);
  CHECK(fm.num_subjects == 1);
  CHECK(fm.num_features == 3);
  CHECK(fm.labels[0] == 1);
  CHECK(fm.subject_ids[0] == "a");

  const auto empty = extract_features({});
  CHECK(empty.num_subjects == 0);
  CHECK(empty.num_features == 0);
}

TEST_CASE("extract_features rejects mismatched ROI counts by subject") {
  std::vector<LabeledTimeSeries> bad;
  bad.push_back({make_ts({{1, 2, 3}, {2, 4, 6}}, "ok"), 0});
  bad.push_back({make_ts({{1, 2, 3}, {2, 4, 6}, {1, 1, 2}}, "odd_one"), 1});
  CHECK_THROWS_WITH_AS(extract_features(bad),
                       doctest::Contains("odd_one"), InputError);
}

TEST_CASE("parallel extraction is byte-identical to sequential") {
  std::vector<LabeledTimeSeries> dataset;
  for (std::size_t s = 0; s < 7; ++s) {
    TimeSeriesMatrix ts;
    ts.subject_id = "s" + std::to_string(s);
    ts.num_rois = 6;
    ts.num_timepoints = 30;
    ts.series = testsup::random_normal_vector(6 * 30, 1000 + s);
    dataset.push_back({std::move(ts), static_cast<std::uint8_t>(s % 2)});
  }
  const auto seq = extract_features(dataset, nullptr, 1);
  const auto par = extract_features(dataset, nullptr, 4);
  CHECK(seq.values == par.values);
  CHECK(seq.labels == par.labels);
}

TEST_CASE("392 ROIs flatten to the expected feature width") {
  TimeSeriesMatrix ts;
  ts.subject_id = "big";
  ts.num_rois = 392;
  ts.num_timepoints = 5;
  ts.series = testsup::random_normal_vector(392 * 5, 123);
  std::vector<LabeledTimeSeries> data;
  data.push_back({std::move(ts), 0});
  const auto fm = extract_features(data);
  CHECK(fm.num_features == 76636);
}
