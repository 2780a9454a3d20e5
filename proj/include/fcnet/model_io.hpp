#pragma once

#include <string>

#include "fcnet/training.hpp"

namespace fcnet {

// "fcnet-1" model document: layer dimension list, weights/biases as nested
// numeric arrays, per-node normalization stats, training class counts and an
// optional feature subset. Doubles round-trip exactly.
std::string model_to_json_text(const TrainedModel& model);
TrainedModel model_from_json_text(const std::string& text);

void save_model(const TrainedModel& model, const std::string& path);
TrainedModel load_model(const std::string& path);

}  // namespace fcnet
