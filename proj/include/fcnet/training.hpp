#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fcnet/network.hpp"
#include "fcnet/types.hpp"

namespace fcnet {

enum class ConstraintType { none, constraint1, constraint2, balanced };

ConstraintType constraint_type_from_string(const std::string& name);
std::string to_string(ConstraintType type);

struct TrainingConfig {
  double learning_rate = 1e-4;
  double rmsprop_decay = 0.9;       // rho
  double rmsprop_epsilon = 1e-8;
  int batch_size = 32;
  int max_training_epoch = 500;
  int early_stop_patience = 20;     // epochs without a gate save
  double beta = 1e-3;               // KL weight
  std::uint64_t seed = 0;
  ConstraintType constraint_type = ConstraintType::none;
  double constraint_threshold = 0.3;

  void validate() const;  // throws InputError on any range violation

  // Every key optional, unknown keys rejected.
  static TrainingConfig from_json_text(const std::string& text);
  std::string to_json_text() const;
};

// v <- rho v + (1 - rho) g^2;  p <- p - lr g / (sqrt(v) + eps).
void rmsprop_update(std::vector<double>& params,
                    const std::vector<double>& grads, std::vector<double>& v,
                    const TrainingConfig& cfg);
void rmsprop_step(LayerParams& params, const LayerParams& grads,
                  LayerParams& state, const TrainingConfig& cfg);
void rmsprop_step(MlpParams& params, const MlpParams& grads, MlpParams& state,
                  const TrainingConfig& cfg);
void rmsprop_step(VaeParams& params, const VaeParams& grads, VaeParams& state,
                  const TrainingConfig& cfg);

LayerParams zero_like(const LayerParams& p);
MlpParams zero_like(const MlpParams& p);
VaeParams zero_like(const VaeParams& p);

// Checkpoint gate state. delta starts at -1 for constraints 1/2. The
// balanced branch starts at 2 (the largest possible |sen - spe|); starting
// it at -1 would make the acceptance test |sen - spe| <= delta unsatisfiable.
struct CheckpointGateState {
  double max_acc = 0.0;
  double delta = -1.0;
};

CheckpointGateState init_gate_state(ConstraintType type);

struct GateDecision {
  bool save = false;
  CheckpointGateState state;
};

GateDecision constraint_gate(const CheckpointGateState& state, double v_acc,
                             double v_sen, double v_spe, ConstraintType type,
                             double threshold);

struct PretrainResult {
  EncoderParams encoder;
  NormStats encoder_hidden_stats;  // from a final full-training-set pass
  std::vector<double> epoch_losses;
};

// Unsupervised pretraining of the simplified VAE on the (already selected)
// feature matrix; labels are ignored. Deterministic given cfg.seed.
PretrainResult pretrain_vae(const FeatureMatrix& fm, std::size_t hidden_dim,
                            std::size_t latent_dim, const TrainingConfig& cfg);

// Encoder layers copied bitwise into the MLP hidden layers; the output layer
// is freshly initialized from the seed (same stream as init_mlp's output
// layer, so pretrained/unpretrained runs share their output-layer init).
MlpParams transfer(const EncoderParams& encoder, std::uint64_t seed);

struct TrainedModel {
  MlpParams params;
  MlpStats stats;          // frozen from the training set at the saved epoch
  std::int64_t n_asd = 0;  // training-set class counts for threshold moving
  std::int64_t n_hc = 0;
  int saved_epoch = 0;     // 1-based
  int trained_epochs = 0;
  std::vector<double> train_acc_history;  // per epoch, threshold-moving rule
  std::vector<double> val_acc_history;
  std::vector<std::size_t> feature_subset;  // optional provenance

  std::array<double, 2> predict_probs(std::span<const double> x) const;
  std::uint8_t predict(std::span<const double> x) const;
};

// One epoch = one pass of shuffled mini-batch cross-entropy RMSProp updates,
// then validation metrics (threshold-moving decisions) feed the gate. Stops
// at max_training_epoch or after early_stop_patience epochs without a save.
// Throws ConstraintError if the gate never saved.
TrainedModel fine_tune(const MlpParams& init, const FeatureMatrix& train,
                       const FeatureMatrix& val, const TrainingConfig& cfg);

}  // namespace fcnet
