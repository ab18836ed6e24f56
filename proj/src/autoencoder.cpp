#include "hrom/autoencoder.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace hrom {

// --- normalization ---------------------------------------------------------

NormalizationStats NormalizationStats::fit(const std::vector<Vector>& states) {
  if (states.empty()) throw EmptyDataset("normalization: no states");
  const Eigen::Index n = states.front().size();
  NormalizationStats s;
  s.mean = Vector::Zero(n);
  for (const auto& x : states) {
    if (x.size() != n) throw InvalidInput("normalization: inconsistent state dimension");
    s.mean += x;
  }
  s.mean /= static_cast<double>(states.size());
  Vector var = Vector::Zero(n);
  for (const auto& x : states) var += (x - s.mean).cwiseAbs2();
  var /= static_cast<double>(states.size());
  s.std = var.cwiseSqrt().cwiseMax(1e-8);
  return s;
}

Vector NormalizationStats::normalize(const Vector& x) const {
  if (x.size() != mean.size()) throw InvalidInput("normalize: dimension mismatch");
  return (x - mean).cwiseQuotient(std);
}

Vector NormalizationStats::denormalize(const Vector& x) const {
  if (x.size() != mean.size()) throw InvalidInput("denormalize: dimension mismatch");
  return x.cwiseProduct(std) + mean;
}

Batch NormalizationStats::normalize(const Batch& x) const {
  if (x.rows() != mean.size()) throw InvalidInput("normalize: dimension mismatch");
  return (x.colwise() - mean).array().colwise() / std.array();
}

Batch NormalizationStats::denormalize(const Batch& x) const {
  if (x.rows() != mean.size()) throw InvalidInput("denormalize: dimension mismatch");
  Batch out = x.array().colwise() * std.array();
  out.colwise() += mean;
  return out;
}

// --- model -----------------------------------------------------------------

Matrix AutoencoderModel::latent_jacobian(const Vector& z) const {
  return Matrix::Identity(z.size(), z.size()) + dynamics.jacobian(z);
}

namespace {

std::vector<int> chain(int in, const std::vector<int>& hidden, int out) {
  std::vector<int> sizes{in};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(out);
  return sizes;
}

}  // namespace

AutoencoderModel make_model(const ModelShape& shape, std::uint64_t seed) {
  if (shape.n_x < 1 || shape.n_z < 1) throw InvalidInput("model: n_x and n_z must be >= 1");
  AutoencoderModel m;
  Rng r0 = make_rng(seed, 0), r1 = make_rng(seed, 1), r2 = make_rng(seed, 2);
  m.encoder = Mlp::glorot(chain(shape.n_x, shape.encoder_hidden, shape.n_z), r0);
  m.decoder = Mlp::glorot(chain(shape.n_z, shape.decoder_hidden, shape.n_x), r1);
  m.dynamics = Mlp::glorot(chain(shape.n_z, shape.dynamics_hidden, shape.n_z), r2);
  m.n_z = shape.n_z;
  m.norm.mean = Vector::Zero(shape.n_x);
  m.norm.std = Vector::Ones(shape.n_x);
  return m;
}

// --- losses ------------------------------------------------------------------

namespace {

LossBreakdown evaluate(const AutoencoderModel& m, const TrajectoryBatch& batch, const LossWeights& w,
                       ModelGradients* g) {
  const auto K = static_cast<Eigen::Index>(batch.size());
  if (K < 2) throw InvalidInput("losses: need K >= 2 states per trajectory");
  const Eigen::Index B = batch.front().cols();
  const Eigen::Index nx = batch.front().rows();
  if (B < 1) throw InvalidInput("losses: empty batch");
  if (nx != m.n_x()) throw InvalidInput("losses: batch state dimension does not match the model");
  for (const auto& xk : batch) {
    if (xk.rows() != nx || xk.cols() != B) throw InvalidInput("losses: ragged batch");
  }
  for (double v : {w.rec_x, w.rec_z, w.fwd, w.bck, w.pred, w.iso, w.reg}) {
    if (!(v >= 0.0)) throw InvalidInput("losses: weights must be >= 0");
  }
  const Eigen::Index nz = m.n_z;
  const Eigen::Index N = B * K;
  const Eigen::Index M = B * (K - 1);
  const bool grad = g != nullptr;
  if (grad) {
    g->encoder = Vector::Zero(m.encoder.num_params());
    g->decoder = Vector::Zero(m.decoder.num_params());
    g->dynamics = Vector::Zero(m.dynamics.num_params());
  }

  Batch x_all(nx, N);
  for (Eigen::Index k = 0; k < K; ++k) x_all.middleCols(k * B, B) = batch[static_cast<std::size_t>(k)];
  const auto x_next = x_all.rightCols(M);

  MlpTape t_e1, t_d1, t_e2, t_n1, t_d2, t_d3;
  MlpTape* pe1 = grad ? &t_e1 : nullptr;
  MlpTape* pd1 = grad ? &t_d1 : nullptr;
  MlpTape* pe2 = grad ? &t_e2 : nullptr;
  MlpTape* pn1 = grad ? &t_n1 : nullptr;
  MlpTape* pd2 = grad ? &t_d2 : nullptr;
  MlpTape* pd3 = grad ? &t_d3 : nullptr;

  LossBreakdown out;
  const Batch z_all = m.encoder.forward(x_all, pe1);
  Batch dz_all = Batch::Zero(nz, N);

  // Reconstruction in state and latent space.
  const Batch r = m.decoder.forward(z_all, pd1);
  const Batch rz = m.encoder.forward(r, pe2);
  const double c_rx = w.rec_x / static_cast<double>(N);
  const double c_rz = w.rec_z / static_cast<double>(N);
  const Batch res_rx = x_all - r;
  const Batch res_rz = z_all - rz;
  out.rec_x = c_rx * res_rx.squaredNorm();
  out.rec_z = c_rz * res_rz.squaredNorm();

  // One-step conjugacy.
  const auto z_cur = z_all.leftCols(M);
  const Batch g_out = z_cur + m.dynamics.forward(Batch(z_cur), pn1);
  const Batch y = m.decoder.forward(g_out, pd2);
  const double c_f = w.fwd / static_cast<double>(M);
  const double c_b = w.bck / static_cast<double>(M);
  const Batch res_f = z_all.rightCols(M) - g_out;
  const Batch res_b = x_next - y;
  out.fwd = c_f * res_f.squaredNorm();
  out.bck = c_b * res_b.squaredNorm();

  // Multi-step prediction from the first state.
  std::vector<MlpTape> t_pred(static_cast<std::size_t>(K - 1));
  Batch h_cat(nz, M);
  {
    Batch h = z_all.leftCols(B);
    for (Eigen::Index j = 0; j + 1 < K; ++j) {
      h = h + m.dynamics.forward(h, grad ? &t_pred[static_cast<std::size_t>(j)] : nullptr);
      h_cat.middleCols(j * B, B) = h;
    }
  }
  const Batch p = m.decoder.forward(h_cat, pd3);
  const double c_p = w.pred / static_cast<double>(M);
  const Batch res_p = x_next - p;
  out.pred = c_p * res_p.squaredNorm();

  // Whitening.
  const Vector mu = z_all.rowwise().mean();
  const Batch zc = z_all.colwise() - mu;
  const Matrix cov = (zc * zc.transpose()) / static_cast<double>(N);
  const Matrix miss = Matrix::Identity(nz, nz) - cov;
  out.iso = w.iso * miss.squaredNorm();

  out.reg = w.reg * (m.encoder.weight_sq_norm() + m.decoder.weight_sq_norm() + m.dynamics.weight_sq_norm());
  out.total = out.rec_x + out.rec_z + out.fwd + out.bck + out.pred + out.iso + out.reg;
  if (!grad) return out;

  // Reverse pass.
  Batch dr = (-2.0 * c_rx) * res_rx;
  const Batch drz = (-2.0 * c_rz) * res_rz;
  dz_all += (2.0 * c_rz) * res_rz;
  dr += m.encoder.backward(t_e2, drz, g->encoder);
  dz_all += m.decoder.backward(t_d1, dr, g->decoder);

  Batch dg = (-2.0 * c_f) * res_f;
  dz_all.rightCols(M) += (2.0 * c_f) * res_f;
  dg += m.decoder.backward(t_d2, (-2.0 * c_b) * res_b, g->decoder);
  dz_all.leftCols(M) += dg + m.dynamics.backward(t_n1, dg, g->dynamics);

  const Batch dh_cat = m.decoder.backward(t_d3, (-2.0 * c_p) * res_p, g->decoder);
  Batch dh = Batch::Zero(nz, B);
  for (Eigen::Index j = K - 2; j >= 0; --j) {
    dh += dh_cat.middleCols(j * B, B);
    Batch through = m.dynamics.backward(t_pred[static_cast<std::size_t>(j)], dh, g->dynamics);
    dh += through;
  }
  dz_all.leftCols(B) += dh;

  // d/dz_n of ||I - C||^2 is (2/N) (-2 (I - C)) (z_n - mu); the mean term cancels.
  dz_all += (-4.0 * w.iso / static_cast<double>(N)) * (miss * zc);

  m.encoder.backward(t_e1, dz_all, g->encoder);
  m.encoder.add_weight_sq_grad(w.reg, g->encoder);
  m.decoder.add_weight_sq_grad(w.reg, g->decoder);
  m.dynamics.add_weight_sq_grad(w.reg, g->dynamics);
  return out;
}

}  // namespace

LossBreakdown compute_losses(const AutoencoderModel& model, const TrajectoryBatch& batch, const LossWeights& w) {
  return evaluate(model, batch, w, nullptr);
}

LossBreakdown loss_gradients(const AutoencoderModel& model, const TrajectoryBatch& batch, const LossWeights& w,
                             ModelGradients& grads) {
  return evaluate(model, batch, w, &grads);
}

// --- training ------------------------------------------------------------------

namespace {

void shuffle(std::vector<std::size_t>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(i));
    std::swap(v[i - 1], v[std::min(j, i - 1)]);
  }
}

// Normalized trajectory as an n_x x (K+1) matrix.
Batch normalized_states(const Trajectory& tr, const NormalizationStats& norm) {
  Batch m(norm.mean.size(), static_cast<Eigen::Index>(tr.states.size()));
  for (std::size_t k = 0; k < tr.states.size(); ++k) m.col(static_cast<Eigen::Index>(k)) = norm.normalize(tr.states[k]);
  return m;
}

TrajectoryBatch gather(const std::vector<Batch>& trajs, const std::vector<std::size_t>& idx,
                       const std::vector<int>& offsets, int K) {
  const Eigen::Index nx = trajs.front().rows();
  const auto B = static_cast<Eigen::Index>(idx.size());
  TrajectoryBatch batch(static_cast<std::size_t>(K), Batch(nx, B));
  for (Eigen::Index b = 0; b < B; ++b) {
    const Batch& t = trajs[idx[static_cast<std::size_t>(b)]];
    const int off = offsets[static_cast<std::size_t>(b)];
    for (int k = 0; k < K; ++k) batch[static_cast<std::size_t>(k)].col(b) = t.col(off + k);
  }
  return batch;
}

TrajectoryBatch full_split(const std::vector<Batch>& trajs, int K) {
  std::vector<std::size_t> idx(trajs.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  return gather(trajs, idx, std::vector<int>(trajs.size(), 0), K);
}

}  // namespace

TrainResult train(const PoincareDataset& data, const ModelShape& shape_in, const TrainConfig& cfg,
                  const LossWeights& w, const std::function<void(const TrainLogRow&)>& on_log) {
  if (data.trajectories.empty()) throw EmptyDataset("train: dataset has no trajectories");
  if (cfg.batch_size < 1 || cfg.steps < 1 || cfg.log_every < 1) {
    throw InvalidInput("train: batch_size, steps and log_every must be >= 1");
  }
  if (!(cfg.lr > 0.0)) throw InvalidInput("train: learning rate must be > 0");
  if (!(cfg.val_fraction > 0.0 && cfg.val_fraction < 1.0)) throw InvalidInput("train: val_fraction must lie in (0, 1)");
  const int K = cfg.traj_length;
  const int stored = static_cast<int>(data.trajectories.front().states.size());
  if (K < 2 || K > stored) {
    throw InvalidInput("train: traj_length must lie in [2, " + std::to_string(stored) + "]");
  }
  for (const auto& tr : data.trajectories) {
    if (static_cast<int>(tr.states.size()) != stored) throw InvalidInput("train: trajectories of unequal length");
  }
  ModelShape shape = shape_in;
  shape.n_x = static_cast<int>(data.n_x);
  if (shape.n_z < 1) throw InvalidInput("train: latent dimension must be >= 1");

  // Split by a seeded permutation.
  const std::size_t n = data.trajectories.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng split_rng = make_rng(cfg.seed, 101);
  shuffle(order, split_rng);
  if (n < 2) throw EmptyDataset("train: need at least two trajectories for a train/validation split");
  std::size_t n_val = static_cast<std::size_t>(std::llround(cfg.val_fraction * static_cast<double>(n)));
  n_val = std::clamp<std::size_t>(n_val, 1, n - 1);
  std::vector<std::size_t> val_idx(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
  std::vector<std::size_t> train_idx(order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());
  std::sort(val_idx.begin(), val_idx.end());
  std::sort(train_idx.begin(), train_idx.end());

  std::vector<Vector> train_states;
  for (std::size_t i : train_idx)
    for (const auto& x : data.trajectories[i].states) train_states.push_back(x);

  TrainResult res;
  res.model = make_model(shape, cfg.seed);
  res.model.system_name = data.system_name;
  res.model.norm = NormalizationStats::fit(train_states);
  res.n_train = train_idx.size();
  res.n_val = val_idx.size();

  std::vector<Batch> train_traj, val_traj;
  for (std::size_t i : train_idx) train_traj.push_back(normalized_states(data.trajectories[i], res.model.norm));
  for (std::size_t i : val_idx) val_traj.push_back(normalized_states(data.trajectories[i], res.model.norm));
  const TrajectoryBatch train_full = full_split(train_traj, K);
  const TrajectoryBatch val_full = full_split(val_traj, K);

  AutoencoderModel& model = res.model;
  res.initial_train_loss = compute_losses(model, train_full, w).total;
  if (!std::isfinite(res.initial_train_loss)) throw TrainingDiverged("train: initial loss is not finite");

  ParameterSet params{model.encoder.params(), model.decoder.params(), model.dynamics.params()};
  AdamState adam = AdamState::zeros_like(params);
  AdamHyper hyper;
  hyper.lr = cfg.lr;

  ParameterSet best = params;
  res.best_val = compute_losses(model, val_full, w).total;
  res.best_step = 0;

  Rng rng = make_rng(cfg.seed, 202);
  const int windows = stored - K + 1;
  std::vector<std::size_t> perm(train_traj.size());
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  shuffle(perm, rng);
  std::size_t cursor = 0;

  std::vector<std::size_t> idx(static_cast<std::size_t>(cfg.batch_size));
  std::vector<int> offsets(static_cast<std::size_t>(cfg.batch_size));
  ModelGradients grads;
  for (int step = 1; step <= cfg.steps; ++step) {
    for (std::size_t b = 0; b < idx.size(); ++b) {
      if (cursor == perm.size()) {
        shuffle(perm, rng);
        cursor = 0;
      }
      idx[b] = perm[cursor++];
      offsets[b] = std::min(windows - 1, static_cast<int>(uniform01(rng) * windows));
    }
    const TrajectoryBatch batch = gather(train_traj, idx, offsets, K);
    const LossBreakdown lb = loss_gradients(model, batch, w, grads);
    if (!std::isfinite(lb.total)) {
      throw TrainingDiverged("train: non-finite loss at step " + std::to_string(step));
    }
    ParameterSet gset{std::move(grads.encoder), std::move(grads.decoder), std::move(grads.dynamics)};
    adam_step(params, gset, adam, hyper);
    model.encoder.set_params(params[0]);
    model.decoder.set_params(params[1]);
    model.dynamics.set_params(params[2]);

    if (step % cfg.log_every == 0 || step == cfg.steps) {
      TrainLogRow row;
      row.step = step;
      row.batch = lb;
      row.val_total = compute_losses(model, val_full, w).total;
      if (!std::isfinite(row.val_total)) {
        throw TrainingDiverged("train: non-finite validation loss at step " + std::to_string(step));
      }
      if (row.val_total < res.best_val) {
        res.best_val = row.val_total;
        res.best_step = step;
        best = params;
      }
      res.log.push_back(row);
      if (on_log) on_log(row);
    }
  }

  model.encoder.set_params(best[0]);
  model.decoder.set_params(best[1]);
  model.dynamics.set_params(best[2]);
  res.final_train_loss = compute_losses(model, train_full, w).total;

  Batch all_train(data.n_x, 0);
  {
    Eigen::Index cols = 0;
    for (const auto& t : train_traj) cols += t.cols();
    all_train.resize(data.n_x, cols);
    Eigen::Index c = 0;
    for (const auto& t : train_traj) {
      all_train.middleCols(c, t.cols()) = t;
      c += t.cols();
    }
  }
  res.max_latent_norm = model.encoder.forward(all_train).colwise().norm().maxCoeff();
  return res;
}

// --- evaluation --------------------------------------------------------------------

EvalReport eval_metrics(const AutoencoderModel& model, const PoincareDataset& data) {
  if (data.trajectories.empty()) throw EmptyDataset("eval: dataset has no trajectories");
  if (data.n_x != model.n_x()) {
    throw InvalidInput("eval: dataset n_x=" + std::to_string(data.n_x) + " but model expects " +
                       std::to_string(model.n_x()));
  }
  const std::size_t n = data.trajectories.size();
  const auto len = static_cast<Eigen::Index>(data.trajectories.front().states.size());
  std::vector<Batch> xs(static_cast<std::size_t>(len), Batch(data.n_x, static_cast<Eigen::Index>(n)));
  for (std::size_t i = 0; i < n; ++i) {
    const auto& st = data.trajectories[i].states;
    if (static_cast<Eigen::Index>(st.size()) != len) throw InvalidInput("eval: trajectories of unequal length");
    for (Eigen::Index k = 0; k < len; ++k)
      xs[static_cast<std::size_t>(k)].col(static_cast<Eigen::Index>(i)) = model.norm.normalize(st[static_cast<std::size_t>(k)]);
  }

  EvalReport rep;
  rep.n_traj = n;
  const double scale = 1.0 / std::sqrt(static_cast<double>(data.n_x));
  auto moments = [](const Eigen::RowVectorXd& v, double& mean, double& sd) {
    mean = v.mean();
    sd = std::sqrt((v.array() - mean).square().mean());
  };
  Batch z = model.encoder.forward(xs[0]);
  for (Eigen::Index k = 0; k < len; ++k) {
    const Batch& xk = xs[static_cast<std::size_t>(k)];
    const Eigen::RowVectorXd rec = (xk - model.decoder.forward(model.encoder.forward(xk))).colwise().norm();
    const Eigen::RowVectorXd dyn = (xk - model.decoder.forward(z)).colwise().norm();
    StepMetric raw, pd;
    moments(rec, raw.rec_mean, raw.rec_std);
    moments(dyn, raw.dyn_mean, raw.dyn_std);
    pd = {raw.rec_mean * scale, raw.rec_std * scale, raw.dyn_mean * scale, raw.dyn_std * scale};
    rep.raw.push_back(raw);
    rep.per_dim.push_back(pd);
    z = model.step(z);
  }
  return rep;
}

}  // namespace hrom
