#include "fcnet/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <json.hpp>

#include "fcnet/errors.hpp"

namespace fcnet {

ConstraintType constraint_type_from_string(const std::string& name) {
  if (name == "none") return ConstraintType::none;
  if (name == "1" || name == "constraint1") return ConstraintType::constraint1;
  if (name == "2" || name == "constraint2") return ConstraintType::constraint2;
  if (name == "balanced") return ConstraintType::balanced;
  throw InputError("unknown constraint type '" + name +
                   "' (expected none, 1, 2 or balanced)");
}

std::string to_string(ConstraintType type) {
  switch (type) {
    case ConstraintType::none: return "none";
    case ConstraintType::constraint1: return "1";
    case ConstraintType::constraint2: return "2";
    case ConstraintType::balanced: return "balanced";
  }
  return "?";
}

void TrainingConfig::validate() const {
  if (!(learning_rate > 0.0)) throw InputError("learning_rate must be > 0");
  if (!(rmsprop_decay > 0.0 && rmsprop_decay < 1.0)) {
    throw InputError("rmsprop_decay must be in (0, 1)");
  }
  if (!(rmsprop_epsilon > 0.0)) throw InputError("rmsprop_epsilon must be > 0");
  if (batch_size < 1) throw InputError("batch_size must be >= 1");
  if (max_training_epoch < 1) throw InputError("max_training_epoch must be >= 1");
  if (early_stop_patience < 1) throw InputError("early_stop_patience must be >= 1");
  if (!(beta >= 0.0)) throw InputError("beta must be >= 0");
  if (!(constraint_threshold >= 0.0)) {
    throw InputError("constraint_threshold must be >= 0");
  }
}

TrainingConfig TrainingConfig::from_json_text(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("training config: invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw FormatError("training config: expected an object");

  TrainingConfig cfg;
  for (const auto& [key, value] : j.items()) {
    if (key == "learning_rate") cfg.learning_rate = value.get<double>();
    else if (key == "rmsprop_decay") cfg.rmsprop_decay = value.get<double>();
    else if (key == "rmsprop_epsilon") cfg.rmsprop_epsilon = value.get<double>();
    else if (key == "batch_size") cfg.batch_size = value.get<int>();
    else if (key == "max_training_epoch") cfg.max_training_epoch = value.get<int>();
    else if (key == "early_stop_patience") cfg.early_stop_patience = value.get<int>();
    else if (key == "beta") cfg.beta = value.get<double>();
    else if (key == "seed") cfg.seed = value.get<std::uint64_t>();
    else if (key == "constraint_threshold") cfg.constraint_threshold = value.get<double>();
    else if (key == "constraint_type") {
      if (value.is_number_integer()) {
        cfg.constraint_type =
            constraint_type_from_string(std::to_string(value.get<int>()));
      } else {
        cfg.constraint_type =
            constraint_type_from_string(value.get<std::string>());
      }
    } else {
      throw InputError("training config: unknown key '" + key + "'");
    }
  }
  cfg.validate();
  return cfg;
}

std::string TrainingConfig::to_json_text() const {
  nlohmann::json j;
  j["learning_rate"] = learning_rate;
  j["rmsprop_decay"] = rmsprop_decay;
  j["rmsprop_epsilon"] = rmsprop_epsilon;
  j["batch_size"] = batch_size;
  j["max_training_epoch"] = max_training_epoch;
  j["early_stop_patience"] = early_stop_patience;
  j["beta"] = beta;
  j["seed"] = seed;
  j["constraint_type"] = to_string(constraint_type);
  j["constraint_threshold"] = constraint_threshold;
  return j.dump(2);
}

void rmsprop_update(std::vector<double>& params,
                    const std::vector<double>& grads, std::vector<double>& v,
                    const TrainingConfig& cfg) {
  if (params.size() != grads.size() || params.size() != v.size()) {
    throw InputError("rmsprop_update: shape mismatch");
  }
  const double rho = cfg.rmsprop_decay;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    v[i] = rho * v[i] + (1.0 - rho) * g * g;
    params[i] -= cfg.learning_rate * g / (std::sqrt(v[i]) + cfg.rmsprop_epsilon);
  }
}

void rmsprop_step(LayerParams& params, const LayerParams& grads,
                  LayerParams& state, const TrainingConfig& cfg) {
  rmsprop_update(params.weights.data(), grads.weights.data(),
                 state.weights.data(), cfg);
  rmsprop_update(params.biases, grads.biases, state.biases, cfg);
}

void rmsprop_step(MlpParams& params, const MlpParams& grads, MlpParams& state,
                  const TrainingConfig& cfg) {
  rmsprop_step(params.hidden1, grads.hidden1, state.hidden1, cfg);
  rmsprop_step(params.hidden2, grads.hidden2, state.hidden2, cfg);
  rmsprop_step(params.output, grads.output, state.output, cfg);
}

void rmsprop_step(VaeParams& params, const VaeParams& grads, VaeParams& state,
                  const TrainingConfig& cfg) {
  rmsprop_step(params.encoder.layer1, grads.encoder.layer1,
               state.encoder.layer1, cfg);
  rmsprop_step(params.encoder.layer2, grads.encoder.layer2,
               state.encoder.layer2, cfg);
  rmsprop_step(params.decoder.layer1, grads.decoder.layer1,
               state.decoder.layer1, cfg);
  rmsprop_step(params.decoder.layer2, grads.decoder.layer2,
               state.decoder.layer2, cfg);
}

LayerParams zero_like(const LayerParams& p) {
  return LayerParams(p.out_dim(), p.in_dim());
}

MlpParams zero_like(const MlpParams& p) {
  MlpParams z;
  z.hidden1 = zero_like(p.hidden1);
  z.hidden2 = zero_like(p.hidden2);
  z.output = zero_like(p.output);
  return z;
}

VaeParams zero_like(const VaeParams& p) {
  VaeParams z;
  z.encoder.layer1 = zero_like(p.encoder.layer1);
  z.encoder.layer2 = zero_like(p.encoder.layer2);
  z.decoder.layer1 = zero_like(p.decoder.layer1);
  z.decoder.layer2 = zero_like(p.decoder.layer2);
  return z;
}

CheckpointGateState init_gate_state(ConstraintType type) {
  CheckpointGateState s;
  s.max_acc = 0.0;
  s.delta = type == ConstraintType::balanced ? 2.0 : -1.0;
  return s;
}

GateDecision constraint_gate(const CheckpointGateState& state, double v_acc,
                             double v_sen, double v_spe, ConstraintType type,
                             double threshold) {
  GateDecision d;
  d.state = state;
  switch (type) {
    case ConstraintType::none:
      d.save = v_acc >= state.max_acc;
      if (d.save) d.state.max_acc = v_acc;
      break;
    case ConstraintType::constraint1: {
      const double diff = v_sen - v_spe;
      d.save = v_acc >= state.max_acc && diff >= state.delta;
      if (d.save) {
        d.state.max_acc = v_acc;
        d.state.delta = state.delta < threshold ? diff : threshold;
      }
      break;
    }
    case ConstraintType::constraint2: {
      const double diff = v_spe - v_sen;
      d.save = v_acc >= state.max_acc && diff >= state.delta;
      if (d.save) {
        d.state.max_acc = v_acc;
        d.state.delta = state.delta < threshold ? diff : threshold;
      }
      break;
    }
    case ConstraintType::balanced: {
      const double diff = std::fabs(v_sen - v_spe);
      d.save = v_acc >= state.max_acc && diff <= state.delta;
      if (d.save) {
        d.state.max_acc = v_acc;
        d.state.delta = state.delta > threshold ? diff : threshold;
      }
      break;
    }
  }
  return d;
}

namespace {

std::vector<std::vector<std::size_t>> make_batches(std::size_t n,
                                                   int batch_size,
                                                   CounterRng& rng) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  shuffle(order, rng);
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t start = 0; start < n; start += batch_size) {
    const std::size_t end = std::min(n, start + batch_size);
    batches.emplace_back(order.begin() + start, order.begin() + end);
  }
  return batches;
}

Matrix draw_epsilon(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  Matrix eps(rows, cols);
  CounterRng rng(seed);
  for (double& v : eps.data()) v = rng.normal();
  return eps;
}

// Internal stream tags so the different random consumers never collide.
constexpr std::uint64_t kStreamVaeShuffle = 0x7661652d73687566ULL;
constexpr std::uint64_t kStreamVaeEps = 0x7661652d65707321ULL;
constexpr std::uint64_t kStreamMlpShuffle = 0x6d6c702d73687566ULL;

}  // namespace

PretrainResult pretrain_vae(const FeatureMatrix& fm, std::size_t hidden_dim,
                            std::size_t latent_dim, const TrainingConfig& cfg) {
  cfg.validate();
  if (fm.num_subjects == 0 || fm.num_features == 0) {
    throw InputError("pretrain_vae: empty feature matrix");
  }

  VaeParams params =
      init_vae(fm.num_features, hidden_dim, latent_dim, cfg.seed);
  VaeParams opt_state = zero_like(params);
  const Matrix full = to_batch(fm);

  PretrainResult result;
  result.epoch_losses.reserve(cfg.max_training_epoch);

  for (int epoch = 1; epoch <= cfg.max_training_epoch; ++epoch) {
    CounterRng shuffle_rng(
        derive_seed(cfg.seed, kStreamVaeShuffle, static_cast<std::uint64_t>(epoch)));
    auto batches = make_batches(fm.num_subjects, cfg.batch_size, shuffle_rng);

    double epoch_loss = 0.0;
    for (std::size_t bi = 0; bi < batches.size(); ++bi) {
      const auto& rows = batches[bi];
      Matrix x = to_batch(fm, rows);
      Matrix eps = draw_epsilon(
          rows.size(), latent_dim,
          derive_seed(cfg.seed, kStreamVaeEps,
                      static_cast<std::uint64_t>(epoch) * 1000003ULL + bi));

      const VaeStats stats = compute_vae_stats(params, x, eps);
      const VaeBatchForward fwd =
          vae_forward_batch(params, x, eps, cfg.beta, stats);
      if (!std::isfinite(fwd.loss)) {
        throw NumericalError("pretrain_vae: non-finite loss at epoch " +
                             std::to_string(epoch) + ", batch " +
                             std::to_string(bi));
      }
      epoch_loss += fwd.loss * static_cast<double>(rows.size());

      const VaeParams grads =
          vae_gradients(params, x, eps, cfg.beta, stats, fwd);
      rmsprop_step(params, grads, opt_state, cfg);
    }
    result.epoch_losses.push_back(epoch_loss /
                                  static_cast<double>(fm.num_subjects));
  }

  // Freeze normalization stats from a final full-training-set pass.
  Matrix eps0(full.rows(), latent_dim, 0.0);
  result.encoder_hidden_stats =
      compute_vae_stats(params, full, eps0).encoder_hidden;
  result.encoder = params.encoder;
  return result;
}

MlpParams transfer(const EncoderParams& encoder, std::uint64_t seed) {
  MlpParams mlp;
  mlp.hidden1 = encoder.layer1;
  mlp.hidden2 = encoder.layer2;
  CounterRng rng(seed, 5);  // matches init_mlp's output-layer stream
  mlp.output = init_layer(2, encoder.layer2.out_dim(), rng);
  return mlp;
}

namespace {

struct EvalCounts {
  std::size_t correct = 0, tp = 0, tn = 0, pos = 0, neg = 0;
};

EvalCounts evaluate_with_threshold_moving(const MlpParams& params,
                                          const MlpStats& stats,
                                          const FeatureMatrix& fm,
                                          std::int64_t n_asd,
                                          std::int64_t n_hc) {
  EvalCounts counts;
  const Matrix x = to_batch(fm);
  const MlpBatchForward fwd = mlp_forward_batch(params, x, stats);
  for (std::size_t r = 0; r < fm.num_subjects; ++r) {
    const std::uint8_t pred = predict_with_threshold_moving(
        {fwd.probs(r, 0), fwd.probs(r, 1)}, n_asd, n_hc);
    const std::uint8_t truth = fm.labels[r];
    if (truth == 1) {
      ++counts.pos;
      if (pred == 1) ++counts.tp;
    } else {
      ++counts.neg;
      if (pred == 0) ++counts.tn;
    }
    if (pred == truth) ++counts.correct;
  }
  return counts;
}

}  // namespace

std::array<double, 2> TrainedModel::predict_probs(
    std::span<const double> x) const {
  return softmax(mlp_forward(params, x, stats));
}

std::uint8_t TrainedModel::predict(std::span<const double> x) const {
  return predict_with_threshold_moving(predict_probs(x), n_asd, n_hc);
}

TrainedModel fine_tune(const MlpParams& init, const FeatureMatrix& train,
                       const FeatureMatrix& val, const TrainingConfig& cfg) {
  cfg.validate();
  if (!train.has_both_classes()) {
    throw InputError("fine_tune: training split must contain both classes");
  }
  if (!val.has_both_classes()) {
    throw InputError("fine_tune: validation split must contain both classes");
  }
  if (train.num_features != val.num_features) {
    throw InputError("fine_tune: train/validation feature width mismatch");
  }

  const std::int64_t n_asd = static_cast<std::int64_t>(train.count_label(1));
  const std::int64_t n_hc = static_cast<std::int64_t>(train.count_label(0));

  MlpParams params = init;
  MlpParams opt_state = zero_like(params);
  const Matrix full_train = to_batch(train);

  CheckpointGateState gate = init_gate_state(cfg.constraint_type);
  TrainedModel model;
  model.n_asd = n_asd;
  model.n_hc = n_hc;
  bool saved = false;
  int epochs_since_save = 0;

  for (int epoch = 1; epoch <= cfg.max_training_epoch; ++epoch) {
    CounterRng shuffle_rng(
        derive_seed(cfg.seed, kStreamMlpShuffle, static_cast<std::uint64_t>(epoch)));
    auto batches = make_batches(train.num_subjects, cfg.batch_size, shuffle_rng);

    for (std::size_t bi = 0; bi < batches.size(); ++bi) {
      const auto& rows = batches[bi];
      Matrix x = to_batch(train, rows);
      std::vector<std::uint8_t> y(rows.size());
      for (std::size_t i = 0; i < rows.size(); ++i) y[i] = train.labels[rows[i]];

      const MlpStats stats = compute_mlp_stats(params, x);
      const MlpBatchForward fwd = mlp_forward_batch(params, x, stats, y);
      if (!std::isfinite(fwd.loss)) {
        throw NumericalError("fine_tune: non-finite loss at epoch " +
                             std::to_string(epoch) + ", batch " +
                             std::to_string(bi));
      }
      const MlpParams grads = mlp_gradients(params, x, y, stats, fwd);
      rmsprop_step(params, grads, opt_state, cfg);
    }

    // Candidate frozen stats come from the full training set; the deployed
    // model will run with exactly these.
    const MlpStats frozen = compute_mlp_stats(params, full_train);
    const EvalCounts tr =
        evaluate_with_threshold_moving(params, frozen, train, n_asd, n_hc);
    const EvalCounts va =
        evaluate_with_threshold_moving(params, frozen, val, n_asd, n_hc);

    model.train_acc_history.push_back(
        static_cast<double>(tr.correct) /
        static_cast<double>(train.num_subjects));
    const double v_acc = static_cast<double>(va.correct) /
                         static_cast<double>(val.num_subjects);
    const double v_sen =
        static_cast<double>(va.tp) / static_cast<double>(va.pos);
    const double v_spe =
        static_cast<double>(va.tn) / static_cast<double>(va.neg);
    model.val_acc_history.push_back(v_acc);

    const GateDecision decision = constraint_gate(
        gate, v_acc, v_sen, v_spe, cfg.constraint_type, cfg.constraint_threshold);
    gate = decision.state;
    model.trained_epochs = epoch;

    if (decision.save) {
      model.params = params;
      model.stats = frozen;
      model.saved_epoch = epoch;
      saved = true;
      epochs_since_save = 0;
    } else {
      ++epochs_since_save;
      if (epochs_since_save >= cfg.early_stop_patience) break;
    }
  }

  if (!saved) {
    throw ConstraintError("fine_tune: no checkpoint satisfied constraint " +
                          to_string(cfg.constraint_type) + " within " +
                          std::to_string(cfg.max_training_epoch) + " epochs");
  }
  return model;
}

}  // namespace fcnet
