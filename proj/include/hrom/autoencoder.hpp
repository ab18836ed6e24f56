#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "hrom/hybrid.hpp"
#include "hrom/mlp.hpp"

namespace hrom {

struct NormalizationStats {
  Vector mean;
  Vector std;  // floored at 1e-8

  static NormalizationStats fit(const std::vector<Vector>& states);
  Vector normalize(const Vector& x) const;
  Vector denormalize(const Vector& x) const;
  Batch normalize(const Batch& x) const;
  Batch denormalize(const Batch& x) const;
};

/// Encoder E (n_x -> n_z), decoder D (n_z -> n_x) and latent residual
/// network; the latent map is g(z) = z + residual(z).
struct AutoencoderModel {
  Mlp encoder;
  Mlp decoder;
  Mlp dynamics;
  NormalizationStats norm;
  int n_z = 0;
  std::string system_name;

  Eigen::Index n_x() const { return encoder.input_dim(); }
  /// These operate on normalized states.
  Vector encode(const Vector& x) const { return encoder.forward(x); }
  Vector decode(const Vector& z) const { return decoder.forward(z); }
  Vector step(const Vector& z) const { return z + dynamics.forward(z); }
  Batch step(const Batch& z) const { return z + dynamics.forward(z); }
  /// Exact Jacobian of g at z: I + d residual / dz.
  Matrix latent_jacobian(const Vector& z) const;
};

struct ModelShape {
  int n_x = 4;
  int n_z = 2;
  std::vector<int> encoder_hidden{64, 32, 16};
  std::vector<int> decoder_hidden{16, 32, 64};
  std::vector<int> dynamics_hidden{64, 64, 64};
};

/// Glorot-initialized model seeded from make_rng(seed, 0..2).
AutoencoderModel make_model(const ModelShape& shape, std::uint64_t seed);

struct LossWeights {
  double rec_x = 1.0;
  double rec_z = 1.0;
  double fwd = 1.0;
  double bck = 1.0;
  double pred = 1.0;
  double iso = 1.0;
  double reg = 1e-6;
};

struct LossBreakdown {
  double rec_x = 0.0;
  double rec_z = 0.0;
  double fwd = 0.0;
  double bck = 0.0;
  double pred = 0.0;
  double iso = 0.0;
  double reg = 0.0;
  double total = 0.0;
};

/// A training batch: K normalized state matrices (n_x x B), element k holding
/// x_{k+1} of every trajectory, i.e. the states the loss indexes 1..K.
using TrajectoryBatch = std::vector<Batch>;

struct ModelGradients {
  Vector encoder;
  Vector decoder;
  Vector dynamics;
};

LossBreakdown compute_losses(const AutoencoderModel& model, const TrajectoryBatch& batch, const LossWeights& w);

/// Loss values and exact reverse-mode gradients of the total.
LossBreakdown loss_gradients(const AutoencoderModel& model, const TrajectoryBatch& batch, const LossWeights& w,
                             ModelGradients& grads);

struct TrainConfig {
  int batch_size = 512;
  int traj_length = 6;  // K
  int steps = 5000;
  double lr = 1e-3;
  std::uint64_t seed = 7;
  double val_fraction = 0.05;
  int log_every = 100;
};

struct TrainLogRow {
  int step = 0;
  LossBreakdown batch;
  double val_total = 0.0;
};

struct TrainResult {
  AutoencoderModel model;  // best-validation parameters
  std::vector<TrainLogRow> log;
  int best_step = 0;
  double best_val = 0.0;
  double initial_train_loss = 0.0;  // full training split, before the first update
  double final_train_loss = 0.0;    // full training split, returned parameters
  std::size_t n_train = 0;
  std::size_t n_val = 0;
  double max_latent_norm = 0.0;     // over encodings of the training split
};

/// Adam on shuffled mini-batches of trajectories; each batch element is a
/// window of K consecutive states drawn from one trajectory. `on_log` sees
/// every log row as it is produced.
TrainResult train(const PoincareDataset& data, const ModelShape& shape, const TrainConfig& cfg,
                  const LossWeights& w, const std::function<void(const TrainLogRow&)>& on_log = {});

struct StepMetric {
  double rec_mean = 0.0, rec_std = 0.0;
  double dyn_mean = 0.0, dyn_std = 0.0;
};

struct EvalReport {
  std::vector<StepMetric> raw;       // k = 0..K, norms of normalized residuals
  std::vector<StepMetric> per_dim;   // the same divided by sqrt(n_x)
  std::size_t n_traj = 0;
};

/// Per-step reconstruction and latent-rollout errors on raw (unnormalized)
/// trajectories, measured in the model's normalized coordinates.
EvalReport eval_metrics(const AutoencoderModel& model, const PoincareDataset& data);

}  // namespace hrom
