#include "fcnet/model_io.hpp"

#include <json.hpp>

#include "fcnet/errors.hpp"
#include "fcnet/io_util.hpp"

namespace fcnet {

namespace {

using nlohmann::json;

json layer_to_json(const LayerParams& p) {
  json weights = json::array();
  for (std::size_t r = 0; r < p.weights.rows(); ++r) {
    json row = json::array();
    for (std::size_t c = 0; c < p.weights.cols(); ++c) row.push_back(p.weights(r, c));
    weights.push_back(std::move(row));
  }
  return json{{"weights", std::move(weights)}, {"biases", p.biases}};
}

LayerParams layer_from_json(const json& j) {
  const auto& w = j.at("weights");
  if (!w.is_array() || w.empty()) throw FormatError("model: empty weight matrix");
  const std::size_t rows = w.size();
  const std::size_t cols = w[0].size();
  LayerParams p(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    const auto& row = w[r];
    if (row.size() != cols) throw FormatError("model: ragged weight matrix");
    for (std::size_t c = 0; c < cols; ++c) p.weights(r, c) = row[c].get<double>();
  }
  p.biases = j.at("biases").get<std::vector<double>>();
  if (p.biases.size() != rows) throw FormatError("model: bias length mismatch");
  return p;
}

json stats_to_json(const NormStats& s) {
  return json{{"x_min", s.x_min}, {"x_max", s.x_max}};
}

NormStats stats_from_json(const json& j) {
  NormStats s;
  s.x_min = j.at("x_min").get<std::vector<double>>();
  s.x_max = j.at("x_max").get<std::vector<double>>();
  if (s.x_min.size() != s.x_max.size()) {
    throw FormatError("model: norm stats length mismatch");
  }
  for (std::size_t i = 0; i < s.x_min.size(); ++i) {
    if (s.x_max[i] < s.x_min[i]) {
      throw FormatError("model: norm stats with x_max < x_min");
    }
  }
  return s;
}

}  // namespace

std::string model_to_json_text(const TrainedModel& model) {
  json j;
  j["format"] = "fcnet-1";
  j["dims"] = {model.params.hidden1.in_dim(), model.params.hidden1.out_dim(),
               model.params.hidden2.out_dim(), model.params.output.out_dim()};
  j["layers"] = {{"hidden1", layer_to_json(model.params.hidden1)},
                 {"hidden2", layer_to_json(model.params.hidden2)},
                 {"output", layer_to_json(model.params.output)}};
  j["norm_stats"] = {{"hidden1", stats_to_json(model.stats.hidden1)},
                     {"hidden2", stats_to_json(model.stats.hidden2)}};
  j["class_counts"] = {{"n_asd", model.n_asd}, {"n_hc", model.n_hc}};
  j["saved_epoch"] = model.saved_epoch;
  if (!model.feature_subset.empty()) j["feature_subset"] = model.feature_subset;
  return j.dump(2);
}

TrainedModel model_from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw FormatError(std::string("model: invalid JSON: ") + e.what());
  }
  try {
    if (j.at("format").get<std::string>() != "fcnet-1") {
      throw FormatError("model: unsupported format '" +
                        j.at("format").get<std::string>() + "'");
    }
    TrainedModel m;
    m.params.hidden1 = layer_from_json(j.at("layers").at("hidden1"));
    m.params.hidden2 = layer_from_json(j.at("layers").at("hidden2"));
    m.params.output = layer_from_json(j.at("layers").at("output"));
    m.stats.hidden1 = stats_from_json(j.at("norm_stats").at("hidden1"));
    m.stats.hidden2 = stats_from_json(j.at("norm_stats").at("hidden2"));
    m.n_asd = j.at("class_counts").at("n_asd").get<std::int64_t>();
    m.n_hc = j.at("class_counts").at("n_hc").get<std::int64_t>();
    if (j.contains("saved_epoch")) m.saved_epoch = j["saved_epoch"].get<int>();
    if (j.contains("feature_subset")) {
      m.feature_subset = j["feature_subset"].get<std::vector<std::size_t>>();
    }
    const auto dims = j.at("dims").get<std::vector<std::size_t>>();
    if (dims.size() != 4 || dims[0] != m.params.hidden1.in_dim() ||
        dims[1] != m.params.hidden1.out_dim() ||
        dims[2] != m.params.hidden2.out_dim() ||
        dims[3] != m.params.output.out_dim()) {
      throw FormatError("model: dims field disagrees with layer shapes");
    }
    if (m.params.output.out_dim() != 2) {
      throw FormatError("model: output layer must have width 2");
    }
    if (m.n_asd <= 0 || m.n_hc <= 0) {
      throw FormatError("model: class counts must be positive");
    }
    if (m.stats.hidden1.size() != m.params.hidden1.out_dim() ||
        m.stats.hidden2.size() != m.params.hidden2.out_dim()) {
      throw FormatError("model: norm stats width mismatch");
    }
    return m;
  } catch (const json::exception& e) {
    throw FormatError(std::string("model: missing or malformed field: ") +
                      e.what());
  }
}

void save_model(const TrainedModel& model, const std::string& path) {
  atomic_write_file(path, model_to_json_text(model));
}

TrainedModel load_model(const std::string& path) {
  return model_from_json_text(read_file(path));
}

}  // namespace fcnet
