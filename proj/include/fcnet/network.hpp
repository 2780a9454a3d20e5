#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "fcnet/matrix.hpp"
#include "fcnet/rng.hpp"
#include "fcnet/types.hpp"

namespace fcnet {

// Weights are (out x in); y = W x + b.
struct LayerParams {
  Matrix weights;
  std::vector<double> biases;

  LayerParams() = default;
  LayerParams(std::size_t out, std::size_t in)
      : weights(out, in), biases(out, 0.0) {}

  std::size_t out_dim() const { return weights.rows(); }
  std::size_t in_dim() const { return weights.cols(); }
};

// Single-head encoder: layer2 emits mu and logvar simultaneously, so
// mu == logvar elementwise by construction.
struct EncoderParams {
  LayerParams layer1;  // input -> hidden
  LayerParams layer2;  // hidden -> latent
};

// Mirror of the encoder: latent -> hidden -> input, independent parameters.
struct DecoderParams {
  LayerParams layer1;
  LayerParams layer2;
};

struct VaeParams {
  EncoderParams encoder;
  DecoderParams decoder;
};

struct MlpParams {
  LayerParams hidden1;
  LayerParams hidden2;
  LayerParams output;  // exactly 2 logits
};

// Per-node min/max of a hidden layer's pre-activations.
struct NormStats {
  std::vector<double> x_min;
  std::vector<double> x_max;

  std::size_t size() const { return x_min.size(); }
};

struct VaeStats {
  NormStats encoder_hidden;
  NormStats decoder_hidden;
};

struct MlpStats {
  NormStats hidden1;
  NormStats hidden2;
};

struct LatentSample {
  std::vector<double> mu;
  std::vector<double> logvar;
  std::vector<double> epsilon;
  std::vector<double> z;  // mu + epsilon * exp(0.5 * logvar)
};

// --- normalization + modified tanh pipeline ---

// x_norm = 2(x - x_min)/(x_max - x_min) - 1, then y = tanh(2.5 * x_norm).
// A node with x_max == x_min normalizes to 0.
double norm_act_scalar(double x, double x_min, double x_max);
std::vector<double> norm_act_forward(std::span<const double> pre,
                                     const NormStats& stats);

// Per-node min and max over the batch (rows = samples).
NormStats fit_norm_stats(const Matrix& pre_activations);

// --- single-sample forward passes ---

struct EncoderForwardResult {
  std::vector<double> hidden;  // post norm_act
  LatentSample latent;
};

EncoderForwardResult encoder_forward(const EncoderParams& p,
                                     std::span<const double> x,
                                     std::span<const double> epsilon,
                                     const NormStats& hidden_stats);

std::vector<double> decoder_forward(const DecoderParams& p,
                                    std::span<const double> z,
                                    const NormStats& hidden_stats);

std::array<double, 2> mlp_forward(const MlpParams& p, std::span<const double> x,
                                  const MlpStats& stats);

std::array<double, 2> softmax(const std::array<double, 2>& logits);

// KL[N(mu, e^logvar) || N(0,1)] = -0.5 (1 + logvar - e^logvar - mu^2).
double kl_term(double mu, double logvar);

// MAE (mean over samples of per-sample feature means) + beta * batch mean of
// the summed-over-latent-dims KL term. Rows are samples.
double vae_loss(const Matrix& reconstruction, const Matrix& input,
                const Matrix& mu, const Matrix& logvar, double beta);

// Threshold moving: ASD (1) iff p_asd / p_hc > n_asd / n_hc, compared as
// cross products; equality and the converse give HC (0).
std::uint8_t predict_with_threshold_moving(const std::array<double, 2>& probs,
                                           std::int64_t n_asd,
                                           std::int64_t n_hc);

// --- batch forward/backward (training path) ---
//
// Normalization stats are inputs here, never outputs: a training step first
// derives them from the current batch (compute_*_stats), then treats them as
// constants through the loss and its gradient. Finite-difference checks must
// reuse the same frozen stats.

struct VaeBatchForward {
  Matrix a1, h1;      // encoder hidden pre/post activation
  Matrix mu;          // == logvar
  Matrix z;
  Matrix a2, h2;      // decoder hidden pre/post activation
  Matrix recon;
  double mae = 0.0;
  double kl = 0.0;    // batch mean of per-sample KL sums
  double loss = 0.0;  // mae + beta * kl
};

VaeStats compute_vae_stats(const VaeParams& p, const Matrix& x,
                           const Matrix& epsilon);
VaeBatchForward vae_forward_batch(const VaeParams& p, const Matrix& x,
                                  const Matrix& epsilon, double beta,
                                  const VaeStats& stats);
VaeParams vae_gradients(const VaeParams& p, const Matrix& x,
                        const Matrix& epsilon, double beta,
                        const VaeStats& stats, const VaeBatchForward& fwd);

struct MlpBatchForward {
  Matrix a1, h1, a2, h2;
  Matrix logits;  // B x 2
  Matrix probs;   // B x 2
  double loss = 0.0;  // mean cross entropy
};

MlpStats compute_mlp_stats(const MlpParams& p, const Matrix& x);
MlpBatchForward mlp_forward_batch(const MlpParams& p, const Matrix& x,
                                  const MlpStats& stats,
                                  std::span<const std::uint8_t> labels = {});
MlpParams mlp_gradients(const MlpParams& p, const Matrix& x,
                        std::span<const std::uint8_t> labels,
                        const MlpStats& stats, const MlpBatchForward& fwd);

// --- initialization ---

// Uniform(-r, r) with r = sqrt(6 / (fan_in + fan_out)); biases zero.
LayerParams init_layer(std::size_t out, std::size_t in, CounterRng& rng);
VaeParams init_vae(std::size_t input_dim, std::size_t hidden_dim,
                   std::size_t latent_dim, std::uint64_t seed);
MlpParams init_mlp(std::size_t input_dim, std::size_t hidden1,
                   std::size_t hidden2, std::uint64_t seed);

// Rows of `fm` as a double batch matrix.
Matrix to_batch(const FeatureMatrix& fm);
Matrix to_batch(const FeatureMatrix& fm, std::span<const std::size_t> rows);

}  // namespace fcnet
