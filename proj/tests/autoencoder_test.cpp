#include <doctest.h>

#include <cmath>

#include "hrom/autoencoder.hpp"

using namespace hrom;

namespace {

Mlp linear_layer(const Matrix& w, const Vector& b) {
  Mlp net({static_cast<int>(w.cols()), static_cast<int>(w.rows())});
  net.weight_mut(0) = w;
  net.bias_mut(0) = b;
  return net;
}

AutoencoderModel identity_model(int n) {
  AutoencoderModel m;
  m.n_z = n;
  m.encoder = linear_layer(Matrix::Identity(n, n), Vector::Zero(n));
  m.decoder = linear_layer(Matrix::Identity(n, n), Vector::Zero(n));
  m.dynamics = Mlp({n, n});
  m.norm.mean = Vector::Zero(n);
  m.norm.std = Vector::Ones(n);
  return m;
}

AutoencoderModel tiny_model(std::uint64_t seed) {
  ModelShape s;
  s.n_x = 5;
  s.n_z = 3;
  s.encoder_hidden = {6, 4};
  s.decoder_hidden = {4, 6};
  s.dynamics_hidden = {5};
  AutoencoderModel m = make_model(s, seed);
  Rng rng = make_rng(seed, 50);
  // Non-zero biases so every parameter carries a gradient.
  for (Mlp* net : {&m.encoder, &m.decoder, &m.dynamics})
    for (Eigen::Index i = 0; i < net->num_params(); ++i) net->mutable_params()(i) += 0.2 * standard_normal(rng);
  return m;
}

TrajectoryBatch random_batch(Eigen::Index nx, Eigen::Index B, int K, std::uint64_t seed) {
  Rng rng = make_rng(seed, 99);
  TrajectoryBatch b(static_cast<std::size_t>(K), Batch(nx, B));
  for (auto& xk : b)
    for (Eigen::Index i = 0; i < xk.size(); ++i) xk.data()[i] = standard_normal(rng);
  return b;
}

Mlp* net_of(AutoencoderModel& m, int which) {
  return which == 0 ? &m.encoder : which == 1 ? &m.decoder : &m.dynamics;
}

const Vector& grad_of(const ModelGradients& g, int which) {
  return which == 0 ? g.encoder : which == 1 ? g.decoder : g.dynamics;
}

LossWeights only(int term) {
  LossWeights w{0, 0, 0, 0, 0, 0, 0};
  double* slots[7] = {&w.rec_x, &w.rec_z, &w.fwd, &w.bck, &w.pred, &w.iso, &w.reg};
  *slots[term] = 1.0;
  return w;
}

PoincareDataset linear_dataset(std::size_t n, int K, std::uint64_t seed) {
  Matrix a(3, 3);
  a << 0.8, 0.1, 0.0, -0.1, 0.7, 0.05, 0.0, 0.0, 0.5;
  PoincareDataset ds;
  ds.system_name = "linear";
  ds.n_x = 3;
  ds.traj_length = K;
  Rng rng = make_rng(seed, 0);
  for (std::size_t i = 0; i < n; ++i) {
    Trajectory tr;
    tr.id = static_cast<std::int64_t>(i);
    Vector x(3);
    for (Eigen::Index j = 0; j < 3; ++j) x(j) = 2.0 + standard_normal(rng);
    for (int k = 0; k <= K; ++k) {
      tr.states.push_back(x);
      x = a * x;
    }
    ds.trajectories.push_back(tr);
  }
  ds.requested = n;
  return ds;
}

}  // namespace

TEST_CASE("normalization") {
  std::vector<Vector> xs;
  for (int i = 0; i < 5; ++i) {
    Vector x(3);
    x << i, 2.0 * i * i, 7.0;
    xs.push_back(x);
  }
  const NormalizationStats s = NormalizationStats::fit(xs);
  CHECK(s.normalize(s.mean).norm() == 0.0);
  CHECK(s.std(2) == 1e-8);
  CHECK(s.normalize(xs[3])(2) == 0.0);
  for (const auto& x : xs) CHECK((s.denormalize(s.normalize(x)) - x).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(s.std(0) == doctest::Approx(std::sqrt(2.0)));
  CHECK_THROWS_AS(NormalizationStats::fit({}), EmptyDataset);
}

TEST_CASE("perfect compression leaves only whitening and regularization") {
  Matrix a(2, 2);
  a << 0.9, 0.2, -0.1, 0.6;
  AutoencoderModel m = identity_model(2);
  m.dynamics = linear_layer(a - Matrix::Identity(2, 2), Vector::Zero(2));
  TrajectoryBatch b(4, Batch(2, 3));
  b[0] << 1, -1, 0.5, 2, 0.3, -0.7;
  for (std::size_t k = 1; k < b.size(); ++k) b[k] = a * b[k - 1];
  const LossBreakdown l = compute_losses(m, b, LossWeights{});
  CHECK(l.rec_x == 0.0);
  CHECK(l.rec_z == 0.0);
  CHECK(l.fwd < 1e-30);
  CHECK(l.bck < 1e-30);
  CHECK(l.pred < 1e-30);
  CHECK(l.iso > 0.0);
  CHECK(l.reg > 0.0);
}

TEST_CASE("whitened encodings have zero isotropy loss") {
  const AutoencoderModel m = identity_model(2);
  TrajectoryBatch b(2, Batch(2, 2));
  b[0] << 1, 1, 1, -1;
  b[1] << -1, -1, 1, -1;
  CHECK(compute_losses(m, b, LossWeights{}).iso == 0.0);
}

TEST_CASE("regularization counts weights only") {
  AutoencoderModel m = tiny_model(1);
  for (Mlp* net : {&m.encoder, &m.decoder, &m.dynamics})
    for (int l = 0; l < net->num_layers(); ++l) {
      net->weight_mut(l).setOnes();
      net->bias_mut(l).setConstant(3.0);
    }
  const double n = static_cast<double>(m.encoder.num_weights() + m.decoder.num_weights() + m.dynamics.num_weights());
  const LossBreakdown l = compute_losses(m, random_batch(5, 3, 4, 1), LossWeights{});
  CHECK(l.reg == doctest::Approx(1e-6 * n).epsilon(1e-14));
}

TEST_CASE("total is the sum of the terms and the residual map is exact") {
  const AutoencoderModel m = tiny_model(2);
  const LossBreakdown l = compute_losses(m, random_batch(5, 3, 4, 2), LossWeights{});
  CHECK(std::abs(l.total - (l.rec_x + l.rec_z + l.fwd + l.bck + l.pred + l.iso + l.reg)) < 1e-12);
  Vector z(3);
  z << 0.3, -1.2, 0.8;
  CHECK((m.step(z) - z - m.dynamics.forward(z)).norm() < 1e-15);
}

TEST_CASE("hand-computed terms on a B = 1, K = 3 batch") {
  // n_x = 2, n_z = 1, single affine layers so every term has a closed form.
  AutoencoderModel m;
  m.n_z = 1;
  Matrix we(1, 2), wd(2, 1), wg(1, 1);
  we << 0.5, -0.25;
  wd << 1.5, 0.5;
  wg << -0.4;
  Vector be(1), bd(2), bg(1);
  be << 0.1;
  bd << -0.2, 0.3;
  bg << 0.05;
  m.encoder = linear_layer(we, be);
  m.decoder = linear_layer(wd, bd);
  m.dynamics = linear_layer(wg, bg);
  m.norm.mean = Vector::Zero(2);
  m.norm.std = Vector::Ones(2);
  TrajectoryBatch b(3, Batch(2, 1));
  b[0] << 1.0, 2.0;
  b[1] << 0.5, -1.0;
  b[2] << -0.3, 0.4;

  auto E = [&](const Vector& x) { return we(0, 0) * x(0) + we(0, 1) * x(1) + be(0); };
  auto D = [&](double z) {
    Vector x(2);
    x << wd(0, 0) * z + bd(0), wd(1, 0) * z + bd(1);
    return x;
  };
  auto g = [&](double z) { return z + wg(0, 0) * z + bg(0); };
  std::vector<Vector> x{b[0].col(0), b[1].col(0), b[2].col(0)};
  double rec_x = 0, rec_z = 0, fwd = 0, bck = 0, pred = 0;
  for (int k = 0; k < 3; ++k) {
    rec_x += (x[k] - D(E(x[k]))).squaredNorm();
    rec_z += std::pow(E(x[k]) - E(D(E(x[k]))), 2);
  }
  for (int k = 0; k < 2; ++k) {
    fwd += std::pow(E(x[k + 1]) - g(E(x[k])), 2);
    bck += (x[k + 1] - D(g(E(x[k])))).squaredNorm();
  }
  double h = E(x[0]);
  for (int k = 1; k < 3; ++k) {
    h = g(h);
    pred += (x[k] - D(h)).squaredNorm();
  }
  const double mu = (E(x[0]) + E(x[1]) + E(x[2])) / 3.0;
  double c = 0;
  for (int k = 0; k < 3; ++k) c += std::pow(E(x[k]) - mu, 2) / 3.0;
  const double reg = 1e-6 * (we.squaredNorm() + wd.squaredNorm() + wg.squaredNorm());

  const LossBreakdown l = compute_losses(m, b, LossWeights{});
  CHECK(std::abs(l.rec_x - rec_x / 3.0) < 1e-12);
  CHECK(std::abs(l.rec_z - rec_z / 3.0) < 1e-12);
  CHECK(std::abs(l.fwd - fwd / 2.0) < 1e-12);
  CHECK(std::abs(l.bck - bck / 2.0) < 1e-12);
  CHECK(std::abs(l.pred - pred / 2.0) < 1e-12);
  CHECK(std::abs(l.iso - (1.0 - c) * (1.0 - c)) < 1e-12);
  CHECK(std::abs(l.reg - reg) < 1e-12);
}

TEST_CASE("every loss term's gradient matches central differences") {
  AutoencoderModel m = tiny_model(3);
  const TrajectoryBatch b = random_batch(5, 3, 4, 3);
  const double h = 1e-5;
  for (int term = 0; term < 7; ++term) {
    CAPTURE(term);
    const LossWeights w = only(term);
    ModelGradients g;
    loss_gradients(m, b, w, g);
    for (int which = 0; which < 3; ++which) {
      Mlp* net = net_of(m, which);
      const Vector theta = net->params();
      const Vector& analytic = grad_of(g, which);
      double worst = 0.0;
      for (Eigen::Index i = 0; i < theta.size(); ++i) {
        Vector t = theta;
        t(i) = theta(i) + h;
        net->set_params(t);
        const double up = compute_losses(m, b, w).total;
        t(i) = theta(i) - h;
        net->set_params(t);
        const double dn = compute_losses(m, b, w).total;
        const double fd = (up - dn) / (2 * h);
        const double err = std::abs(fd - analytic(i));
        if (err > 1e-9) worst = std::max(worst, err / std::max(std::abs(fd), std::abs(analytic(i))));
      }
      net->set_params(theta);
      CHECK(worst < 1e-5);
    }
  }
}

TEST_CASE("zero-weight model on zero data has zero gradients") {
  ModelShape s;
  s.n_x = 4;
  s.n_z = 2;
  s.encoder_hidden = {5};
  s.decoder_hidden = {5};
  s.dynamics_hidden = {5};
  AutoencoderModel m = make_model(s, 1);
  for (Mlp* net : {&m.encoder, &m.decoder, &m.dynamics}) net->set_params(Vector::Zero(net->num_params()));
  const TrajectoryBatch b(3, Batch::Zero(4, 2));
  ModelGradients g;
  const LossBreakdown l = loss_gradients(m, b, LossWeights{}, g);
  CHECK(l.iso == 2.0);
  CHECK(l.total == 2.0);
  CHECK(g.encoder.norm() == 0.0);
  CHECK(g.decoder.norm() == 0.0);
  CHECK(g.dynamics.norm() == 0.0);
}

TEST_CASE("prediction and backward losses coincide at K = 2") {
  const AutoencoderModel m = tiny_model(4);
  const TrajectoryBatch b = random_batch(5, 3, 2, 4);
  ModelGradients gp, gb;
  const LossBreakdown lp = loss_gradients(m, b, only(4), gp);
  const LossBreakdown lb = loss_gradients(m, b, only(3), gb);
  CHECK(std::abs(lp.pred - lb.bck) <= 1e-14 * lb.bck);
  CHECK((gp.encoder - gb.encoder).norm() <= 1e-12 * gb.encoder.norm());
  CHECK((gp.decoder - gb.decoder).norm() <= 1e-12 * gb.decoder.norm());
  CHECK((gp.dynamics - gb.dynamics).norm() <= 1e-12 * gb.dynamics.norm());
}

TEST_CASE("latent Jacobian is I plus the residual network's Jacobian") {
  AutoencoderModel m = identity_model(3);
  CHECK(m.latent_jacobian(Vector::Ones(3)) == Matrix::Identity(3, 3));
  Matrix a(3, 3);
  a << 0.1, 0.2, 0.0, -0.3, 0.0, 0.4, 0.0, 0.5, -0.6;
  m.dynamics = linear_layer(a, Vector::Zero(3));
  CHECK((m.latent_jacobian(Vector::Ones(3)) - (Matrix::Identity(3, 3) + a)).norm() < 1e-15);

  const AutoencoderModel t = tiny_model(5);
  auto g = [&t](const Vector& z) -> Vector { return t.step(z); };
  for (int i = 0; i < 20; ++i) {
    Rng rng = make_rng(5, static_cast<std::uint64_t>(i));
    Vector z(3);
    for (Eigen::Index k = 0; k < 3; ++k) z(k) = standard_normal(rng);
    CHECK((t.latent_jacobian(z) - fd_jacobian(g, z, 1e-6)).cwiseAbs().maxCoeff() < 1e-7);
  }
}

TEST_CASE("training is deterministic and reduces the loss") {
  const PoincareDataset ds = linear_dataset(60, 5, 3);
  ModelShape s;
  s.n_x = 3;
  s.n_z = 2;
  s.encoder_hidden = {8};
  s.decoder_hidden = {8};
  s.dynamics_hidden = {8};
  TrainConfig cfg;
  cfg.batch_size = 16;
  cfg.traj_length = 4;
  cfg.steps = 200;
  cfg.log_every = 20;
  cfg.val_fraction = 0.2;
  cfg.lr = 3e-3;
  int seen = 0;
  const TrainResult a = train(ds, s, cfg, LossWeights{}, [&seen](const TrainLogRow&) { ++seen; });
  const TrainResult b = train(ds, s, cfg, LossWeights{});
  REQUIRE(a.log.size() == b.log.size());
  CHECK(seen == static_cast<int>(a.log.size()));
  CHECK(a.log.size() == 10);
  for (std::size_t i = 0; i < a.log.size(); ++i) {
    CHECK(a.log[i].batch.total == b.log[i].batch.total);
    CHECK(a.log[i].val_total == b.log[i].val_total);
  }
  CHECK(a.model.encoder.params() == b.model.encoder.params());
  CHECK(a.final_train_loss < a.initial_train_loss);
  CHECK(a.n_train + a.n_val == 60);
  CHECK(a.max_latent_norm > 0.0);

  TrainConfig bad = cfg;
  bad.traj_length = 7;
  CHECK_THROWS_AS(train(ds, s, bad, LossWeights{}), InvalidInput);
  bad = cfg;
  // Adam moves each weight by about lr, so the first steps overflow.
  bad.lr = 1e200;
  bad.steps = 20;
  CHECK_THROWS_AS(train(ds, s, bad, LossWeights{}), TrainingDiverged);
}

TEST_CASE("evaluation of the identity model") {
  const PoincareDataset ds = linear_dataset(10, 4, 1);
  const EvalReport r = eval_metrics(identity_model(3), ds);
  REQUIRE(r.raw.size() == 5);
  CHECK(r.n_traj == 10);
  for (const auto& s : r.raw) CHECK(s.rec_mean == 0.0);
  CHECK(r.raw[0].dyn_mean == r.raw[0].rec_mean);
  CHECK(r.raw[0].dyn_std == r.raw[0].rec_std);
  // g is the identity here, so the rollout error grows with k.
  CHECK(r.raw[2].dyn_mean > 0.0);
  CHECK(r.per_dim[2].dyn_mean == doctest::Approx(r.raw[2].dyn_mean / std::sqrt(3.0)));

  CHECK_THROWS_AS(eval_metrics(identity_model(2), ds), InvalidInput);
}
