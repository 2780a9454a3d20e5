#include "fcnet/network.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fcnet/errors.hpp"

namespace fcnet {

namespace {

// Y = X W^T + b, X is (B x in), W is (out x in), Y is (B x out).
Matrix linear_forward(const Matrix& x, const LayerParams& p) {
  if (x.cols() != p.in_dim()) {
    throw InputError("layer forward: input width " + std::to_string(x.cols()) +
                     " does not match layer input dim " +
                     std::to_string(p.in_dim()));
  }
  Matrix y(x.rows(), p.out_dim());
  for (std::size_t b = 0; b < x.rows(); ++b) {
    const double* xr = x.row_ptr(b);
    double* yr = y.row_ptr(b);
    for (std::size_t o = 0; o < p.out_dim(); ++o) {
      const double* wr = p.weights.row_ptr(o);
      double acc = p.biases[o];
      for (std::size_t i = 0; i < p.in_dim(); ++i) acc += wr[i] * xr[i];
      yr[o] = acc;
    }
  }
  return y;
}

// Given dY for Y = X W^T + b: dW = dY^T X, db = colsum(dY), dX = dY W.
void linear_backward(const Matrix& x, const LayerParams& p, const Matrix& dy,
                     LayerParams& grad, Matrix* dx) {
  grad.weights = Matrix(p.out_dim(), p.in_dim());
  grad.biases.assign(p.out_dim(), 0.0);
  for (std::size_t b = 0; b < x.rows(); ++b) {
    const double* xr = x.row_ptr(b);
    const double* dyr = dy.row_ptr(b);
    for (std::size_t o = 0; o < p.out_dim(); ++o) {
      const double g = dyr[o];
      grad.biases[o] += g;
      double* gw = grad.weights.row_ptr(o);
      for (std::size_t i = 0; i < p.in_dim(); ++i) gw[i] += g * xr[i];
    }
  }
  if (dx != nullptr) {
    *dx = Matrix(x.rows(), p.in_dim());
    for (std::size_t b = 0; b < x.rows(); ++b) {
      const double* dyr = dy.row_ptr(b);
      double* dxr = dx->row_ptr(b);
      for (std::size_t o = 0; o < p.out_dim(); ++o) {
        const double g = dyr[o];
        if (g == 0.0) continue;
        const double* wr = p.weights.row_ptr(o);
        for (std::size_t i = 0; i < p.in_dim(); ++i) dxr[i] += g * wr[i];
      }
    }
  }
}

Matrix apply_norm_act(const Matrix& pre, const NormStats& stats) {
  Matrix out(pre.rows(), pre.cols());
  for (std::size_t b = 0; b < pre.rows(); ++b) {
    for (std::size_t c = 0; c < pre.cols(); ++c) {
      out(b, c) = norm_act_scalar(pre(b, c), stats.x_min[c], stats.x_max[c]);
    }
  }
  return out;
}

// d y / d x with stats constant: (1 - y^2) * 2.5 * 2 / (x_max - x_min);
// zero for a degenerate node.
Matrix norm_act_backward(const Matrix& post, const NormStats& stats,
                         const Matrix& dpost) {
  Matrix dpre(post.rows(), post.cols());
  for (std::size_t c = 0; c < post.cols(); ++c) {
    const double range = stats.x_max[c] - stats.x_min[c];
    const double slope = range > 0.0 ? 5.0 / range : 0.0;
    for (std::size_t b = 0; b < post.rows(); ++b) {
      const double y = post(b, c);
      dpre(b, c) = dpost(b, c) * (1.0 - y * y) * slope;
    }
  }
  return dpre;
}

void check_stats(const NormStats& stats, std::size_t dim, const char* where) {
  if (stats.size() != dim) {
    throw InputError(std::string(where) + ": stats size " +
                     std::to_string(stats.size()) + " does not match layer width " +
                     std::to_string(dim));
  }
}

}  // namespace

double norm_act_scalar(double x, double x_min, double x_max) {
  const double range = x_max - x_min;
  const double x_norm = range > 0.0 ? 2.0 * (x - x_min) / range - 1.0 : 0.0;
  return std::tanh(2.5 * x_norm);
}

std::vector<double> norm_act_forward(std::span<const double> pre,
                                     const NormStats& stats) {
  check_stats(stats, pre.size(), "norm_act_forward");
  std::vector<double> out(pre.size());
  for (std::size_t i = 0; i < pre.size(); ++i) {
    out[i] = norm_act_scalar(pre[i], stats.x_min[i], stats.x_max[i]);
  }
  return out;
}

NormStats fit_norm_stats(const Matrix& pre_activations) {
  if (pre_activations.rows() == 0) {
    throw InputError("fit_norm_stats: empty batch");
  }
  NormStats stats;
  stats.x_min.assign(pre_activations.cols(),
                     std::numeric_limits<double>::infinity());
  stats.x_max.assign(pre_activations.cols(),
                     -std::numeric_limits<double>::infinity());
  for (std::size_t b = 0; b < pre_activations.rows(); ++b) {
    for (std::size_t c = 0; c < pre_activations.cols(); ++c) {
      const double v = pre_activations(b, c);
      stats.x_min[c] = std::min(stats.x_min[c], v);
      stats.x_max[c] = std::max(stats.x_max[c], v);
    }
  }
  return stats;
}

EncoderForwardResult encoder_forward(const EncoderParams& p,
                                     std::span<const double> x,
                                     std::span<const double> epsilon,
                                     const NormStats& hidden_stats) {
  if (x.size() != p.layer1.in_dim()) {
    throw InputError("encoder_forward: input dim mismatch");
  }
  if (epsilon.size() != p.layer2.out_dim()) {
    throw InputError("encoder_forward: epsilon dim mismatch");
  }
  check_stats(hidden_stats, p.layer1.out_dim(), "encoder_forward");

  EncoderForwardResult res;
  Matrix xin(1, x.size());
  std::copy(x.begin(), x.end(), xin.row_ptr(0));
  Matrix a1 = linear_forward(xin, p.layer1);
  res.hidden = norm_act_forward({a1.row_ptr(0), a1.cols()}, hidden_stats);

  Matrix h(1, res.hidden.size());
  std::copy(res.hidden.begin(), res.hidden.end(), h.row_ptr(0));
  Matrix m = linear_forward(h, p.layer2);

  const std::size_t latent = p.layer2.out_dim();
  res.latent.mu.assign(m.row_ptr(0), m.row_ptr(0) + latent);
  res.latent.logvar = res.latent.mu;  // single head
  res.latent.epsilon.assign(epsilon.begin(), epsilon.end());
  res.latent.z.resize(latent);
  for (std::size_t i = 0; i < latent; ++i) {
    res.latent.z[i] =
        res.latent.mu[i] + epsilon[i] * std::exp(0.5 * res.latent.logvar[i]);
  }
  return res;
}

std::vector<double> decoder_forward(const DecoderParams& p,
                                    std::span<const double> z,
                                    const NormStats& hidden_stats) {
  if (z.size() != p.layer1.in_dim()) {
    throw InputError("decoder_forward: latent dim mismatch");
  }
  check_stats(hidden_stats, p.layer1.out_dim(), "decoder_forward");
  Matrix zin(1, z.size());
  std::copy(z.begin(), z.end(), zin.row_ptr(0));
  Matrix a = linear_forward(zin, p.layer1);
  auto h = norm_act_forward({a.row_ptr(0), a.cols()}, hidden_stats);
  Matrix hm(1, h.size());
  std::copy(h.begin(), h.end(), hm.row_ptr(0));
  Matrix out = linear_forward(hm, p.layer2);  // linear reconstruction
  return {out.row_ptr(0), out.row_ptr(0) + out.cols()};
}

std::array<double, 2> mlp_forward(const MlpParams& p, std::span<const double> x,
                                  const MlpStats& stats) {
  Matrix xin(1, x.size());
  std::copy(x.begin(), x.end(), xin.row_ptr(0));
  MlpBatchForward fwd = mlp_forward_batch(p, xin, stats);
  return {fwd.logits(0, 0), fwd.logits(0, 1)};
}

std::array<double, 2> softmax(const std::array<double, 2>& logits) {
  const double m = std::max(logits[0], logits[1]);
  const double e0 = std::exp(logits[0] - m);
  const double e1 = std::exp(logits[1] - m);
  const double s = e0 + e1;
  return {e0 / s, e1 / s};
}

double kl_term(double mu, double logvar) {
  return -0.5 * (1.0 + logvar - std::exp(logvar) - mu * mu);
}

double vae_loss(const Matrix& reconstruction, const Matrix& input,
                const Matrix& mu, const Matrix& logvar, double beta) {
  if (!reconstruction.same_shape(input)) {
    throw InputError("vae_loss: reconstruction/input shape mismatch");
  }
  if (!mu.same_shape(logvar) || mu.rows() != input.rows()) {
    throw InputError("vae_loss: latent shape mismatch");
  }
  const std::size_t batch = input.rows();
  const std::size_t dim = input.cols();

  double mae = 0.0;
  for (std::size_t b = 0; b < batch; ++b) {
    double row = 0.0;
    for (std::size_t c = 0; c < dim; ++c) {
      row += std::fabs(reconstruction(b, c) - input(b, c));
    }
    mae += row / static_cast<double>(dim);
  }
  mae /= static_cast<double>(batch);

  double kl = 0.0;
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t l = 0; l < mu.cols(); ++l) {
      kl += kl_term(mu(b, l), logvar(b, l));
    }
  }
  kl /= static_cast<double>(batch);

  return mae + beta * kl;
}

std::uint8_t predict_with_threshold_moving(const std::array<double, 2>& probs,
                                           std::int64_t n_asd,
                                           std::int64_t n_hc) {
  if (n_asd <= 0 || n_hc <= 0) {
    throw InputError("predict_with_threshold_moving: class counts must be > 0");
  }
  const double lhs = probs[0] * static_cast<double>(n_hc);
  const double rhs = probs[1] * static_cast<double>(n_asd);
  return lhs > rhs ? 1 : 0;
}

VaeStats compute_vae_stats(const VaeParams& p, const Matrix& x,
                           const Matrix& epsilon) {
  VaeStats stats;
  Matrix a1 = linear_forward(x, p.encoder.layer1);
  stats.encoder_hidden = fit_norm_stats(a1);
  Matrix h1 = apply_norm_act(a1, stats.encoder_hidden);
  Matrix mu = linear_forward(h1, p.encoder.layer2);
  Matrix z(mu.rows(), mu.cols());
  for (std::size_t b = 0; b < mu.rows(); ++b) {
    for (std::size_t l = 0; l < mu.cols(); ++l) {
      z(b, l) = mu(b, l) + epsilon(b, l) * std::exp(0.5 * mu(b, l));
    }
  }
  Matrix a2 = linear_forward(z, p.decoder.layer1);
  stats.decoder_hidden = fit_norm_stats(a2);
  return stats;
}

VaeBatchForward vae_forward_batch(const VaeParams& p, const Matrix& x,
                                  const Matrix& epsilon, double beta,
                                  const VaeStats& stats) {
  if (epsilon.rows() != x.rows() ||
      epsilon.cols() != p.encoder.layer2.out_dim()) {
    throw InputError("vae_forward_batch: epsilon shape mismatch");
  }
  VaeBatchForward f;
  f.a1 = linear_forward(x, p.encoder.layer1);
  check_stats(stats.encoder_hidden, f.a1.cols(), "vae_forward_batch");
  f.h1 = apply_norm_act(f.a1, stats.encoder_hidden);
  f.mu = linear_forward(f.h1, p.encoder.layer2);
  f.z = Matrix(f.mu.rows(), f.mu.cols());
  for (std::size_t b = 0; b < f.mu.rows(); ++b) {
    for (std::size_t l = 0; l < f.mu.cols(); ++l) {
      f.z(b, l) = f.mu(b, l) + epsilon(b, l) * std::exp(0.5 * f.mu(b, l));
    }
  }
  f.a2 = linear_forward(f.z, p.decoder.layer1);
  check_stats(stats.decoder_hidden, f.a2.cols(), "vae_forward_batch");
  f.h2 = apply_norm_act(f.a2, stats.decoder_hidden);
  f.recon = linear_forward(f.h2, p.decoder.layer2);

  const std::size_t batch = x.rows();
  const std::size_t dim = x.cols();
  f.mae = 0.0;
  for (std::size_t b = 0; b < batch; ++b) {
    double row = 0.0;
    for (std::size_t c = 0; c < dim; ++c) {
      row += std::fabs(f.recon(b, c) - x(b, c));
    }
    f.mae += row / static_cast<double>(dim);
  }
  f.mae /= static_cast<double>(batch);

  f.kl = 0.0;
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t l = 0; l < f.mu.cols(); ++l) {
      f.kl += kl_term(f.mu(b, l), f.mu(b, l));
    }
  }
  f.kl /= static_cast<double>(batch);
  f.loss = f.mae + beta * f.kl;
  return f;
}

VaeParams vae_gradients(const VaeParams& p, const Matrix& x,
                        const Matrix& epsilon, double beta,
                        const VaeStats& stats, const VaeBatchForward& f) {
  const std::size_t batch = x.rows();
  const std::size_t dim = x.cols();
  const double inv_bd = 1.0 / (static_cast<double>(batch) * static_cast<double>(dim));

  VaeParams g;

  // MAE: subgradient sign(recon - x) / (B * D); sign(0) = 0.
  Matrix drecon(batch, dim);
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t c = 0; c < dim; ++c) {
      const double d = f.recon(b, c) - x(b, c);
      drecon(b, c) = d > 0.0 ? inv_bd : (d < 0.0 ? -inv_bd : 0.0);
    }
  }

  Matrix dh2;
  linear_backward(f.h2, p.decoder.layer2, drecon, g.decoder.layer2, &dh2);
  Matrix da2 = norm_act_backward(f.h2, stats.decoder_hidden, dh2);
  Matrix dz;
  linear_backward(f.z, p.decoder.layer1, da2, g.decoder.layer1, &dz);

  // z = m + eps * exp(0.5 m) with m = mu = logvar, so
  // dz/dm = 1 + 0.5 eps exp(0.5 m). KL path adds
  // d/dm [-0.5 (1 + m - e^m - m^2)] = -0.5 (1 - e^m - 2m), scaled beta / B.
  const double kl_scale = beta / static_cast<double>(batch);
  Matrix dmu(batch, f.mu.cols());
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t l = 0; l < f.mu.cols(); ++l) {
      const double m = f.mu(b, l);
      const double through_z =
          dz(b, l) * (1.0 + 0.5 * epsilon(b, l) * std::exp(0.5 * m));
      const double through_kl =
          kl_scale * (-0.5) * (1.0 - std::exp(m) - 2.0 * m);
      dmu(b, l) = through_z + through_kl;
    }
  }

  Matrix dh1;
  linear_backward(f.h1, p.encoder.layer2, dmu, g.encoder.layer2, &dh1);
  Matrix da1 = norm_act_backward(f.h1, stats.encoder_hidden, dh1);
  linear_backward(x, p.encoder.layer1, da1, g.encoder.layer1, nullptr);
  return g;
}

MlpStats compute_mlp_stats(const MlpParams& p, const Matrix& x) {
  MlpStats stats;
  Matrix a1 = linear_forward(x, p.hidden1);
  stats.hidden1 = fit_norm_stats(a1);
  Matrix h1 = apply_norm_act(a1, stats.hidden1);
  Matrix a2 = linear_forward(h1, p.hidden2);
  stats.hidden2 = fit_norm_stats(a2);
  return stats;
}

MlpBatchForward mlp_forward_batch(const MlpParams& p, const Matrix& x,
                                  const MlpStats& stats,
                                  std::span<const std::uint8_t> labels) {
  if (p.output.out_dim() != 2) {
    throw InputError("mlp_forward_batch: output layer must have width 2");
  }
  MlpBatchForward f;
  f.a1 = linear_forward(x, p.hidden1);
  check_stats(stats.hidden1, f.a1.cols(), "mlp_forward_batch");
  f.h1 = apply_norm_act(f.a1, stats.hidden1);
  f.a2 = linear_forward(f.h1, p.hidden2);
  check_stats(stats.hidden2, f.a2.cols(), "mlp_forward_batch");
  f.h2 = apply_norm_act(f.a2, stats.hidden2);
  f.logits = linear_forward(f.h2, p.output);

  f.probs = Matrix(x.rows(), 2);
  for (std::size_t b = 0; b < x.rows(); ++b) {
    auto pr = softmax({f.logits(b, 0), f.logits(b, 1)});
    f.probs(b, 0) = pr[0];
    f.probs(b, 1) = pr[1];
  }

  if (!labels.empty()) {
    if (labels.size() != x.rows()) {
      throw InputError("mlp_forward_batch: labels size mismatch");
    }
    double ce = 0.0;
    for (std::size_t b = 0; b < x.rows(); ++b) {
      // index 0 = ASD prob for label 1, index 1 = HC prob for label 0
      const double pt = labels[b] == 1 ? f.probs(b, 0) : f.probs(b, 1);
      ce -= std::log(std::max(pt, 1e-300));
    }
    f.loss = ce / static_cast<double>(x.rows());
  }
  return f;
}

MlpParams mlp_gradients(const MlpParams& p, const Matrix& x,
                        std::span<const std::uint8_t> labels,
                        const MlpStats& stats, const MlpBatchForward& f) {
  const std::size_t batch = x.rows();
  if (labels.size() != batch) {
    throw InputError("mlp_gradients: labels size mismatch");
  }
  MlpParams g;

  // Softmax + cross entropy: dlogits = (probs - onehot) / B.
  Matrix dlogits(batch, 2);
  for (std::size_t b = 0; b < batch; ++b) {
    const double t0 = labels[b] == 1 ? 1.0 : 0.0;
    dlogits(b, 0) = (f.probs(b, 0) - t0) / static_cast<double>(batch);
    dlogits(b, 1) = (f.probs(b, 1) - (1.0 - t0)) / static_cast<double>(batch);
  }

  Matrix dh2;
  linear_backward(f.h2, p.output, dlogits, g.output, &dh2);
  Matrix da2 = norm_act_backward(f.h2, stats.hidden2, dh2);
  Matrix dh1;
  linear_backward(f.h1, p.hidden2, da2, g.hidden2, &dh1);
  Matrix da1 = norm_act_backward(f.h1, stats.hidden1, dh1);
  linear_backward(x, p.hidden1, da1, g.hidden1, nullptr);
  return g;
}

LayerParams init_layer(std::size_t out, std::size_t in, CounterRng& rng) {
  LayerParams p(out, in);
  const double r = std::sqrt(6.0 / static_cast<double>(in + out));
  for (double& w : p.weights.data()) w = rng.uniform(-r, r);
  return p;
}

VaeParams init_vae(std::size_t input_dim, std::size_t hidden_dim,
                   std::size_t latent_dim, std::uint64_t seed) {
  VaeParams p;
  CounterRng r1(seed, 1), r2(seed, 2), r3(seed, 3), r4(seed, 4);
  p.encoder.layer1 = init_layer(hidden_dim, input_dim, r1);
  p.encoder.layer2 = init_layer(latent_dim, hidden_dim, r2);
  p.decoder.layer1 = init_layer(hidden_dim, latent_dim, r3);
  p.decoder.layer2 = init_layer(input_dim, hidden_dim, r4);
  return p;
}

MlpParams init_mlp(std::size_t input_dim, std::size_t hidden1,
                   std::size_t hidden2, std::uint64_t seed) {
  MlpParams p;
  CounterRng r1(seed, 1), r2(seed, 2), r3(seed, 5);
  p.hidden1 = init_layer(hidden1, input_dim, r1);
  p.hidden2 = init_layer(hidden2, hidden1, r2);
  p.output = init_layer(2, hidden2, r3);
  return p;
}

Matrix to_batch(const FeatureMatrix& fm) {
  Matrix x(fm.num_subjects, fm.num_features);
  for (std::size_t r = 0; r < fm.num_subjects; ++r) {
    const float* src = fm.values.data() + r * fm.num_features;
    double* dst = x.row_ptr(r);
    for (std::size_t c = 0; c < fm.num_features; ++c) dst[c] = src[c];
  }
  return x;
}

Matrix to_batch(const FeatureMatrix& fm, std::span<const std::size_t> rows) {
  Matrix x(rows.size(), fm.num_features);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const float* src = fm.values.data() + rows[r] * fm.num_features;
    double* dst = x.row_ptr(r);
    for (std::size_t c = 0; c < fm.num_features; ++c) dst[c] = src[c];
  }
  return x;
}

}  // namespace fcnet
