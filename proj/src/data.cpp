#include "fcnet/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "fcnet/io_util.hpp"
#include "fcnet/rng.hpp"

namespace fcnet {

void SyntheticSpec::validate() const {
  if (num_features == 0) throw InputError("synth spec: num_features must be > 0");
  if (samples_per_class == 0) {
    throw InputError("synth spec: samples_per_class must be > 0");
  }
  if (mean_shift < 0.0) throw InputError("synth spec: mean_shift must be >= 0");
  if (noise_std <= 0.0) throw InputError("synth spec: noise_std must be > 0");
  for (std::size_t idx : planted_indices) {
    if (idx >= num_features) {
      throw InputError("synth spec: planted index " + std::to_string(idx) +
                       " out of range");
    }
  }
}

FeatureMatrix synth_features(const SyntheticSpec& spec) {
  spec.validate();
  const std::size_t rows = 2 * spec.samples_per_class;
  FeatureMatrix fm;
  fm.resize(rows, spec.num_features);

  std::vector<bool> planted(spec.num_features, false);
  for (std::size_t idx : spec.planted_indices) planted[idx] = true;

  // Positives first, then negatives; labels record the class.
  for (std::size_t r = 0; r < rows; ++r) {
    const bool positive = r < spec.samples_per_class;
    fm.labels[r] = positive ? 1 : 0;
    float* dst = fm.values.data() + r * spec.num_features;
    for (std::size_t c = 0; c < spec.num_features; ++c) {
      CounterRng rng(spec.seed, mix_words(r, c, 0x73796e7466656174ULL));
      double mean = 0.0;
      double sd = 1.0;
      if (planted[c]) {
        mean = positive ? spec.mean_shift / 2.0 : -spec.mean_shift / 2.0;
        sd = spec.noise_std;
      }
      dst[c] = static_cast<float>(mean + sd * rng.normal());
    }
  }

  nlohmann::json prov;
  prov["generator"] = "synth_features";
  prov["num_features"] = spec.num_features;
  prov["planted_indices"] = spec.planted_indices;
  prov["mean_shift"] = spec.mean_shift;
  prov["samples_per_class"] = spec.samples_per_class;
  prov["noise_std"] = spec.noise_std;
  prov["seed"] = spec.seed;
  fm.provenance_json = prov.dump();
  return fm;
}

void TimeSeriesSynthSpec::validate() const {
  if (subjects_per_class == 0) {
    throw InputError("timeseries spec: subjects_per_class must be > 0");
  }
  if (num_rois < 2) throw InputError("timeseries spec: num_rois must be >= 2");
  if (num_timepoints < 3) {
    throw InputError("timeseries spec: num_timepoints must be >= 3");
  }
  if (coupled_pairs * 2 > num_rois) {
    throw InputError("timeseries spec: too many coupled pairs for ROI count");
  }
  if (noise_std < 0.0) throw InputError("timeseries spec: noise_std must be >= 0");
}

namespace {

constexpr std::size_t kSharedComponents = 3;

double subject_phase(std::uint64_t seed, std::size_t subject, std::size_t tag) {
  CounterRng rng(seed, mix_words(subject, tag, 0x7068617365ULL));
  return rng.uniform(0.0, 2.0 * std::numbers::pi);
}

double mixing_weight(std::uint64_t seed, std::size_t subject, std::size_t roi,
                     std::size_t component) {
  CounterRng rng(seed, mix_words(subject * 131 + roi, component, 0x6d6978ULL));
  return rng.uniform(-1.0, 1.0);
}

}  // namespace

std::vector<LabeledTimeSeries> synth_timeseries(const TimeSeriesSynthSpec& spec) {
  spec.validate();
  const std::size_t total = 2 * spec.subjects_per_class;
  std::vector<LabeledTimeSeries> out;
  out.reserve(total);

  for (std::size_t s = 0; s < total; ++s) {
    const bool positive = s < spec.subjects_per_class;
    LabeledTimeSeries subject;
    subject.label = positive ? 1 : 0;
    subject.ts.subject_id = (positive ? "pos_" : "neg_") +
                            std::to_string(positive ? s : s - spec.subjects_per_class);
    subject.ts.num_rois = spec.num_rois;
    subject.ts.num_timepoints = spec.num_timepoints;
    subject.ts.series.resize(spec.num_rois * spec.num_timepoints);

    const double coupling = positive ? spec.coupling_pos : spec.coupling_neg;

    for (std::size_t r = 0; r < spec.num_rois; ++r) {
      double* row = subject.ts.series.data() + r * spec.num_timepoints;
      const std::size_t pair = r / 2;
      const bool in_coupled_pair = pair < spec.coupled_pairs && r < 2 * spec.coupled_pairs;
      for (std::size_t t = 0; t < spec.num_timepoints; ++t) {
        const double tau =
            static_cast<double>(t) / static_cast<double>(spec.num_timepoints);
        double v = 0.0;
        // Shared sinusoid mixture; frequencies 1..kSharedComponents cycles.
        for (std::size_t m = 0; m < kSharedComponents; ++m) {
          const double phase = subject_phase(spec.seed, s, m);
          const double w = mixing_weight(spec.seed, s, r, m);
          v += spec.shared_strength * w *
               std::sin(2.0 * std::numbers::pi * static_cast<double>(m + 1) * tau +
                        phase);
        }
        if (in_coupled_pair && coupling != 0.0) {
          const double phase = subject_phase(spec.seed, s, 1000 + pair);
          v += coupling * std::sin(2.0 * std::numbers::pi * 2.0 * tau + phase);
        }
        CounterRng noise(spec.seed, mix_words(s, r * spec.num_timepoints + t,
                                              0x74736e6f697365ULL));
        v += spec.noise_std * noise.normal();
        row[t] = v;
      }
    }
    out.push_back(std::move(subject));
  }
  return out;
}

namespace {

constexpr char kMagic[4] = {'F', 'C', 'F', 'M'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint32_t get_u32(const std::string& in, std::size_t offset) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) {
    v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[offset + i]))
         << (8 * i);
  }
  return v;
}

}  // namespace

void save_feature_matrix_fcfm(const FeatureMatrix& fm, const std::string& path) {
  std::string out;
  out.reserve(16 + fm.values.size() * 4 + fm.labels.size() +
              fm.provenance_json.size());
  out.append(kMagic, 4);
  put_u32(out, kVersion);
  put_u32(out, static_cast<std::uint32_t>(fm.num_subjects));
  put_u32(out, static_cast<std::uint32_t>(fm.num_features));
  for (float v : fm.values) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    put_u32(out, bits);
  }
  for (std::uint8_t l : fm.labels) out.push_back(static_cast<char>(l));
  out += fm.provenance_json;
  atomic_write_file(path, out);
}

FeatureMatrix load_feature_matrix_fcfm(const std::string& path) {
  const std::string in = read_file(path);
  auto fail = [&](std::size_t offset, const std::string& what) {
    throw FormatError(path + ": " + what + " at byte offset " +
                      std::to_string(offset));
  };
  if (in.size() < 16) fail(in.size(), "truncated header");
  if (std::memcmp(in.data(), kMagic, 4) != 0) fail(0, "bad magic");
  if (get_u32(in, 4) != kVersion) fail(4, "unsupported version");
  const std::uint32_t rows = get_u32(in, 8);
  const std::uint32_t cols = get_u32(in, 12);

  const std::size_t data_bytes = static_cast<std::size_t>(rows) * cols * 4;
  const std::size_t need = 16 + data_bytes + rows;
  if (in.size() < need) fail(in.size(), "truncated payload");

  FeatureMatrix fm;
  fm.resize(rows, cols);
  for (std::size_t i = 0; i < fm.values.size(); ++i) {
    const std::uint32_t bits = get_u32(in, 16 + i * 4);
    float v;
    std::memcpy(&v, &bits, 4);
    fm.values[i] = v;
  }
  for (std::uint32_t r = 0; r < rows; ++r) {
    const unsigned char l =
        static_cast<unsigned char>(in[16 + data_bytes + r]);
    if (l > 1) fail(16 + data_bytes + r, "label outside {0,1}");
    fm.labels[r] = l;
  }
  if (in.size() > need) {
    fm.provenance_json = in.substr(need);
    // Footer must be valid JSON when present.
    if (!nlohmann::json::accept(fm.provenance_json)) {
      fail(need, "footer is not valid JSON");
    }
  }
  return fm;
}

void save_feature_matrix_csv(const FeatureMatrix& fm, const std::string& path) {
  std::ostringstream out;
  for (std::size_t c = 0; c < fm.num_features; ++c) {
    out << "feature_" << c << ",";
  }
  out << "label\n";
  out.precision(9);  // float32 payload round-trips at 9 significant digits
  for (std::size_t r = 0; r < fm.num_subjects; ++r) {
    const float* row = fm.values.data() + r * fm.num_features;
    for (std::size_t c = 0; c < fm.num_features; ++c) out << row[c] << ",";
    out << static_cast<int>(fm.labels[r]) << "\n";
  }
  atomic_write_file(path, out.str());
}

FeatureMatrix load_feature_matrix_csv(const std::string& path) {
  std::istringstream in(read_file(path));
  std::string line;
  if (!std::getline(in, line)) throw FormatError(path + ": empty CSV");

  std::size_t num_features = 0;
  {
    std::stringstream header(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(header, cell, ',')) cells.push_back(cell);
    if (cells.empty() || cells.back() != "label") {
      throw FormatError(path + ": CSV header must end with 'label'");
    }
    num_features = cells.size() - 1;
  }

  std::vector<float> values;
  std::vector<std::uint8_t> labels;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::stringstream row(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(row, cell, ',')) cells.push_back(cell);
    if (cells.size() != num_features + 1) {
      throw FormatError(path + ": line " + std::to_string(line_no) +
                        " has " + std::to_string(cells.size()) +
                        " cells, expected " + std::to_string(num_features + 1));
    }
    for (std::size_t c = 0; c < num_features; ++c) {
      try {
        values.push_back(std::stof(cells[c]));
      } catch (const std::exception&) {
        throw FormatError(path + ": line " + std::to_string(line_no) +
                          ": bad number '" + cells[c] + "'");
      }
    }
    if (cells.back() != "0" && cells.back() != "1") {
      throw FormatError(path + ": line " + std::to_string(line_no) +
                        ": label outside {0,1}");
    }
    labels.push_back(cells.back() == "1" ? 1 : 0);
  }

  FeatureMatrix fm;
  fm.num_subjects = labels.size();
  fm.num_features = num_features;
  fm.values = std::move(values);
  fm.labels = std::move(labels);
  return fm;
}

namespace {
bool has_csv_extension(const std::string& path) {
  return path.size() >= 4 && path.substr(path.size() - 4) == ".csv";
}
}  // namespace

void save_feature_matrix(const FeatureMatrix& fm, const std::string& path) {
  if (has_csv_extension(path)) save_feature_matrix_csv(fm, path);
  else save_feature_matrix_fcfm(fm, path);
}

FeatureMatrix load_feature_matrix(const std::string& path) {
  if (has_csv_extension(path)) return load_feature_matrix_csv(path);
  return load_feature_matrix_fcfm(path);
}

TimeSeriesMatrix load_timeseries_csv(const std::string& path,
                                     const std::string& subject_id) {
  std::istringstream in(read_file(path));
  TimeSeriesMatrix ts;
  ts.subject_id = subject_id;

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::stringstream row(line);
    std::string cell;
    std::size_t count = 0;
    while (std::getline(row, cell, ',')) {
      try {
        ts.series.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw FormatError(path + ": line " + std::to_string(line_no) +
                          ": bad number '" + cell + "'");
      }
      ++count;
    }
    if (ts.num_timepoints == 0) {
      ts.num_timepoints = count;
    } else if (count != ts.num_timepoints) {
      throw FormatError(path + ": line " + std::to_string(line_no) + " has " +
                        std::to_string(count) + " samples, expected " +
                        std::to_string(ts.num_timepoints));
    }
    ++ts.num_rois;
  }
  ts.validate();
  return ts;
}

void save_timeseries_csv(const TimeSeriesMatrix& ts, const std::string& path) {
  std::ostringstream out;
  out.precision(17);
  for (std::size_t r = 0; r < ts.num_rois; ++r) {
    for (std::size_t t = 0; t < ts.num_timepoints; ++t) {
      if (t > 0) out << ",";
      out << ts.at(r, t);
    }
    out << "\n";
  }
  atomic_write_file(path, out.str());
}

std::vector<std::pair<std::string, std::uint8_t>> load_manifest_csv(
    const std::string& path) {
  std::istringstream in(read_file(path));
  std::vector<std::pair<std::string, std::uint8_t>> manifest;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line_no == 1 && line == "subject_id,label") continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) {
      throw FormatError(path + ": line " + std::to_string(line_no) +
                        ": expected subject_id,label");
    }
    const std::string id = line.substr(0, comma);
    const std::string label = line.substr(comma + 1);
    if (label != "0" && label != "1") {
      throw FormatError(path + ": line " + std::to_string(line_no) +
                        ": label outside {0,1}");
    }
    manifest.emplace_back(id, label == "1" ? 1 : 0);
  }
  if (manifest.empty()) throw FormatError(path + ": empty manifest");
  return manifest;
}

void save_manifest_csv(
    const std::vector<std::pair<std::string, std::uint8_t>>& manifest,
    const std::string& path) {
  std::ostringstream out;
  out << "subject_id,label\n";
  for (const auto& [id, label] : manifest) {
    out << id << "," << static_cast<int>(label) << "\n";
  }
  atomic_write_file(path, out.str());
}

}  // namespace fcnet
