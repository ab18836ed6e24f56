#include "hrom/cli.hpp"

#include <cmath>
#include <filesystem>
#include <iostream>
#include <limits>
#include <numbers>
#include <optional>

#include <CLI11.hpp>

#include "hrom/config.hpp"
#include "hrom/lemma_checks.hpp"
#include "hrom/random.hpp"
#include "hrom/roa.hpp"

namespace hrom {

namespace fs = std::filesystem;

namespace {

// Flags are bound to plain variables; only flags the user actually passed
// are written into the config tree.
struct Overrides {
  std::vector<std::function<void(json&)>> apply;

  template <class T>
  CLI::Option* add(CLI::App* app, const std::string& flag, const std::string& help, std::vector<std::string> path,
                   T& slot) {
    CLI::Option* o = app->add_option(flag, slot, help);
    apply.push_back([o, path, &slot](json& cfg) {
      if (o->count() == 0) return;
      json* node = &cfg;
      for (const auto& p : path) node = &(*node)[p];
      *node = slot;
    });
    return o;
  }
};

struct Common {
  std::string config_path;
  std::string system;
  int workers = 1;
  Overrides over;
};

json resolve(const Common& c, const json& file_cfg, const std::string& fallback_system, const json* pinned = nullptr) {
  std::string system = fallback_system;
  if (file_cfg.contains("system") && file_cfg["system"].is_string()) system = file_cfg["system"];
  if (!c.system.empty()) system = c.system;
  json cfg = default_config(system);
  if (pinned) cfg = merge_config(cfg, *pinned);
  cfg = merge_config(cfg, file_cfg);
  cfg["system"] = system;
  for (const auto& f : c.over.apply) f(cfg);
  return cfg;
}

int workers_of(const json& cfg) {
  const int w = cfg.at("workers");
  if (w < 1) throw InvalidInput("--workers must be >= 1");
  return w;
}

/// The config as echoed into outputs: worker count never changes results,
/// so it is left out to keep outputs identical across worker counts.
json echo(const json& cfg) {
  json e = cfg;
  e.erase("workers");
  return e;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

json read_json(const fs::path& p) {
  const std::string text = read_file(p);
  try {
    return json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw InvalidInput("cannot parse " + p.string() + ": " + e.what());
  }
}

struct LoadedData {
  PoincareDataset data;
  json meta;
};

LoadedData load_dataset(const fs::path& dir) {
  LoadedData d;
  d.meta = read_json(dir / "dataset.meta.json");
  d.data = dataset_from_csv(read_file(dir / "dataset.csv"), d.meta.at("system_name"));
  if (d.data.n_x != d.meta.at("n_x").get<Eigen::Index>()) throw InvalidInput("dataset.csv does not match its metadata");
  return d;
}

// --- collect ------------------------------------------------------------------

int cmd_collect(const Common& c, const std::string& out_dir, std::ostream& out) {
  const json cfg = resolve(c, load_config_file(c.config_path), "paddle-ball");
  const json& col = cfg.at("collect");
  const int K = col.at("steps");
  const long long n = col.at("num_traj");
  if (K < 2) throw InvalidInput("--steps must be >= 2");
  if (n < 1) throw InvalidInput("--num-traj must be >= 1");
  const std::uint64_t seed = col.at("seed");
  const SystemSetup setup = make_system(cfg);
  CollectOptions opt;
  opt.sim = sim_options(cfg);
  opt.workers = workers_of(cfg);
  const PoincareDataset ds = collect_dataset(*setup.system, setup.sampler, static_cast<std::size_t>(n), K, seed, opt);

  json meta;
  meta["spec_version"] = kFormatVersion;
  meta["system_name"] = ds.system_name;
  meta["n_x"] = ds.n_x;
  meta["K"] = K;
  meta["seed"] = seed;
  meta["requested"] = ds.requested;
  meta["retained"] = ds.trajectories.size();
  meta["pruned"] = ds.pruned;
  meta["system_params"] = system_params(cfg);
  meta["sampler"] = {{"center", vector_to_json(setup.box.center)}, {"half_width", vector_to_json(setup.box.half_width)}};
  meta["config"] = echo(cfg);
  write_file_atomic(fs::path(out_dir) / "dataset.csv", dataset_to_csv(ds));
  write_file_atomic(fs::path(out_dir) / "dataset.meta.json", dump(meta));
  out << "retained " << ds.trajectories.size() << " pruned " << ds.pruned << "\n";
  return 0;
}

// --- train --------------------------------------------------------------------

std::string log_csv(const std::vector<TrainLogRow>& rows) {
  std::string s = "step,rec_x,rec_z,fwd,bck,pred,iso,reg,total,val_total\n";
  for (const auto& r : rows) {
    const LossBreakdown& b = r.batch;
    s += std::to_string(r.step);
    for (double v : {b.rec_x, b.rec_z, b.fwd, b.bck, b.pred, b.iso, b.reg, b.total, r.val_total}) {
      s += ',';
      s += fmt17(v);
    }
    s += '\n';
  }
  return s;
}

int cmd_train(const Common& c, const std::string& data_dir, const std::string& model_out, std::string log_out,
              std::ostream& out) {
  const LoadedData ld = load_dataset(data_dir);
  const std::string system = ld.meta.at("system_name");
  json pinned;
  pinned[system == "hopper" ? "hopper" : "paddle_ball"] = ld.meta.at("system_params");
  const json cfg = resolve(c, load_config_file(c.config_path), system, &pinned);
  if (cfg.at("system") != system) throw InvalidInput("config system does not match the dataset's system '" + system + "'");
  const ModelShape shape = model_shape(cfg, static_cast<int>(ld.data.n_x));
  const TrainConfig tc = train_config(cfg);
  const LossWeights lw = loss_weights(cfg);
  if (log_out.empty()) log_out = (fs::path(model_out).parent_path() / "train_log.csv").string();

  std::vector<TrainLogRow> rows;
  TrainResult res;
  try {
    res = train(ld.data, shape, tc, lw, [&rows](const TrainLogRow& r) { rows.push_back(r); });
  } catch (const TrainingDiverged&) {
    write_file_atomic(log_out, log_csv(rows));
    throw;
  }
  write_file_atomic(log_out, log_csv(rows));

  json m;
  m["spec_version"] = kFormatVersion;
  m["system_name"] = system;
  m["system_params"] = system_params(cfg);
  m["training_seed"] = tc.seed;
  m["max_latent_norm"] = res.max_latent_norm;
  m["training"] = {{"best_step", res.best_step},
                   {"best_val", res.best_val},
                   {"initial_train_loss", res.initial_train_loss},
                   {"final_train_loss", res.final_train_loss},
                   {"n_train", res.n_train},
                   {"n_val", res.n_val}};
  res.model.system_name = system;
  m["model"] = model_to_json(res.model);
  m["config"] = echo(cfg);
  write_file_atomic(model_out, dump(m));
  out << "trained " << tc.steps << " steps: loss " << res.initial_train_loss << " -> " << res.final_train_loss
      << " (best validation " << res.best_val << " at step " << res.best_step << ")\n";
  return 0;
}

// --- eval ---------------------------------------------------------------------

struct LoadedModel {
  AutoencoderModel model;
  json doc;
};

LoadedModel load_model(const fs::path& p) {
  if (!fs::exists(p)) throw IoError("model file not found: " + p.string());
  LoadedModel lm;
  lm.doc = read_json(p);
  if (!lm.doc.contains("model")) throw InvalidInput(p.string() + " is not a model checkpoint");
  lm.model = model_from_json(lm.doc.at("model"));
  return lm;
}

json metric_json(const StepMetric& s) {
  return {{"rec_mean", s.rec_mean}, {"rec_std", s.rec_std}, {"dyn_mean", s.dyn_mean}, {"dyn_std", s.dyn_std}};
}

int cmd_eval(const Common& c, const std::string& model_path, const std::string& data_dir, const std::string& out_dir,
             std::ostream& out) {
  const LoadedModel lm = load_model(model_path);
  const LoadedData ld = load_dataset(data_dir);
  if (ld.data.system_name != lm.model.system_name) {
    throw InvalidInput("dataset system '" + ld.data.system_name + "' does not match model system '" +
                       lm.model.system_name + "'");
  }
  json pinned;
  pinned[lm.model.system_name == "hopper" ? "hopper" : "paddle_ball"] = lm.doc.at("system_params");
  const json cfg = resolve(c, load_config_file(c.config_path), lm.model.system_name, &pinned);
  const EvalReport rep = eval_metrics(lm.model, ld.data);

  json steps = json::array();
  std::string csv = "k,rec_mean,rec_std,dyn_mean,dyn_std,rec_mean_per_dim,rec_std_per_dim,dyn_mean_per_dim,dyn_std_per_dim\n";
  for (std::size_t k = 0; k < rep.raw.size(); ++k) {
    const StepMetric& a = rep.raw[k];
    const StepMetric& b = rep.per_dim[k];
    steps.push_back({{"k", k}, {"raw", metric_json(a)}, {"per_dim", metric_json(b)}});
    csv += std::to_string(k);
    for (double v : {a.rec_mean, a.rec_std, a.dyn_mean, a.dyn_std, b.rec_mean, b.rec_std, b.dyn_mean, b.dyn_std}) {
      csv += ',';
      csv += fmt17(v);
    }
    csv += '\n';
  }
  json report;
  report["spec_version"] = kFormatVersion;
  report["system_name"] = lm.model.system_name;
  report["model"] = model_path;
  report["data"] = data_dir;
  report["n_traj"] = rep.n_traj;
  report["steps"] = std::move(steps);
  report["config"] = echo(cfg);
  write_file_atomic(fs::path(out_dir) / "eval_steps.csv", csv);
  write_file_atomic(fs::path(out_dir) / "report.json", dump(report));
  double worst = 0.0;
  for (const auto& s : rep.per_dim) worst = std::max(worst, s.rec_mean);
  out << "evaluated " << rep.n_traj << " trajectories; worst per-dim reconstruction error " << worst << "\n";
  return 0;
}

// --- roa ----------------------------------------------------------------------

json outcome_json(const SampleOutcome& s, double dist) {
  json j = {{"latent", vector_to_json(s.latent)}, {"valid", s.valid}, {"stable", s.stable}};
  if (s.valid) j["distance_to_fixed_point"] = dist;
  return j;
}

struct RoaRun {
  LyapunovCertificate cert;
  LevelEstimate level;
  RoaEstimate estimate;
  std::optional<RoaEstimate> baseline;
  Vector x_star;
  int newton_iterations = 0;
};

int cmd_roa(const Common& c, const std::string& model_path, const std::string& out_dir, bool baseline_flag,
            std::ostream& out, std::ostream& err) {
  const LoadedModel lm = load_model(model_path);
  const AutoencoderModel& model = lm.model;
  json pinned;
  pinned[model.system_name == "hopper" ? "hopper" : "paddle_ball"] = lm.doc.at("system_params");
  json cfg = resolve(c, load_config_file(c.config_path), model.system_name, &pinned);
  if (cfg.at("system") != model.system_name) {
    throw InvalidInput("config system '" + cfg.at("system").get<std::string>() + "' does not match model system '" +
                       model.system_name + "'");
  }
  if (baseline_flag) cfg["roa"]["baseline"] = true;
  const json& r = cfg.at("roa");
  const long long samples = r.at("samples");
  const int rollout = r.at("rollout_steps");
  const int dirs = r.at("directions");
  if (samples < 1) throw InvalidInput("--samples must be >= 1");
  if (rollout < 1) throw InvalidInput("--rollout-steps must be >= 1");
  if (dirs < 1) throw InvalidInput("--directions must be >= 1");
  const std::uint64_t seed = r.at("seed");
  const int workers = workers_of(cfg);

  const SystemSetup setup = make_system(cfg, true);
  RoaRun run;
  run.x_star = setup.fixed_point;
  const LatentDynamics dyn = latent_dynamics(model);
  const Vector z_guess = model.encode(model.norm.normalize(run.x_star));
  const Vector z_star = latent_fixed_point(dyn, z_guess, &run.newton_iterations);
  try {
    run.cert = certify(dyn, z_star);
  } catch (const UnstableLinearization& e) {
    err << "latent linearization is not stable: spectral radius " << e.spectral_radius() << "\n";
    throw;
  }
  double cap = 0.0;
  if (r.at("radius_cap").is_null()) {
    cap = r.at("radius_cap_factor").get<double>() * lm.doc.at("max_latent_norm").get<double>();
  } else {
    cap = r.at("radius_cap");
  }
  LevelOptions lopt;
  lopt.grid = r.at("grid");
  lopt.bisections = r.at("bisections");
  lopt.workers = workers;
  run.level = estimate_level(dyn, run.cert, dirs, cap, seed, lopt);
  run.cert.c_star = run.level.c_star;
  run.cert.radius_cap = cap;

  VerifyOptions vopt;
  vopt.rollout_steps = rollout;
  vopt.workers = workers;
  vopt.projection_window = r.at("projection_window");
  vopt.sim = sim_options(cfg);
  run.estimate = verify_roa(model, run.cert, *setup.system, static_cast<std::size_t>(samples), seed + 1, vopt);
  if (r.at("baseline").get<bool>()) run.baseline = naive_grid_baseline(model, run.cert, *setup.system, vopt);

  const double tol = r.at("convergence_tol");
  const Vector xs_n = model.norm.normalize(run.x_star);
  auto distance = [&](const SampleOutcome& s) {
    if (!s.valid || s.final_state.size() == 0) return std::numeric_limits<double>::infinity();
    return (model.norm.normalize(s.final_state) - xs_n).norm();
  };
  json per_sample = json::array();
  std::size_t converged = 0;
  double max_dv = -std::numeric_limits<double>::infinity();
  for (const auto& s : run.estimate.samples) {
    const double d = distance(s);
    if (s.stable && d <= tol) ++converged;
    max_dv = std::max(max_dv, delta_v(dyn, run.cert, s.latent));
    per_sample.push_back(outcome_json(s, d));
  }

  json report;
  report["spec_version"] = kFormatVersion;
  report["system_name"] = model.system_name;
  report["model"] = model_path;
  report["full_order_fixed_point"] = vector_to_json(run.x_star);
  report["certificate"] = {{"z_star", vector_to_json(run.cert.z_star)},
                           {"newton_iterations", run.newton_iterations},
                           {"Q", matrix_to_json(run.cert.q)},
                           {"P", matrix_to_json(run.cert.p)},
                           {"spectral_radius", run.cert.spectral_radius},
                           {"c_star", run.cert.c_star},
                           {"radius_cap", cap},
                           {"directions", dirs},
                           {"crossing_directions", run.level.crossings}};
  report["n_samples"] = run.estimate.samples.size();
  report["n_valid"] = run.estimate.n_valid;
  report["n_stable"] = run.estimate.n_stable;
  report["stability_rate"] = run.estimate.stability_rate;
  report["n_converged"] = converged;
  report["convergence_tol"] = tol;
  report["max_delta_v"] = max_dv;
  if (run.baseline) {
    report["baseline_points"] = run.baseline->samples.size();
    report["baseline_rate"] = run.baseline->stability_rate;
  } else {
    report["baseline_rate"] = nullptr;
  }
  report["samples"] = std::move(per_sample);
  report["config"] = echo(cfg);

  // Boundary of the certified sublevel set, decoded to full-order states.
  std::string csv;
  for (Eigen::Index i = 0; i < model.n_z; ++i) csv += (i ? ",z" : "z") + std::to_string(i);
  for (Eigen::Index i = 0; i < model.n_x(); ++i) csv += ",x" + std::to_string(i);
  csv += '\n';
  const int n_boundary = std::min(dirs, 512);
  for (int i = 0; i < n_boundary; ++i) {
    Rng rng = make_rng(seed + 2, static_cast<std::uint64_t>(i));
    Vector u(model.n_z);
    for (Eigen::Index k = 0; k < u.size(); ++k) u(k) = standard_normal(rng);
    if (model.n_z == 2) u << std::cos(2.0 * std::numbers::pi * i / n_boundary), std::sin(2.0 * std::numbers::pi * i / n_boundary);
    const Vector z = std::sqrt(run.cert.c_star / u.dot(run.cert.p * u)) * u;
    const Vector x = model.norm.denormalize(model.decode(z + run.cert.z_star));
    for (Eigen::Index k = 0; k < z.size(); ++k) csv += (k ? "," : "") + fmt17(z(k));
    for (Eigen::Index k = 0; k < x.size(); ++k) csv += "," + fmt17(x(k));
    csv += '\n';
  }
  write_file_atomic(fs::path(out_dir) / "roa_boundary.csv", csv);
  write_file_atomic(fs::path(out_dir) / "roa.json", dump(report));
  out << "c* " << run.cert.c_star << ", spectral radius " << run.cert.spectral_radius << ", stability rate "
      << run.estimate.stability_rate << " (" << run.estimate.n_stable << "/" << run.estimate.samples.size() << ")";
  if (run.baseline) out << ", baseline rate " << run.baseline->stability_rate;
  out << "\n";
  return 0;
}

// --- lemmas -------------------------------------------------------------------

int cmd_lemmas(const Common& c, const std::string& out_dir, std::ostream& out, std::ostream& err) {
  const json cfg = resolve(c, load_config_file(c.config_path), "paddle-ball");
  const json& l = cfg.at("lemmas");
  const int trials = l.at("trials"), alts = l.at("alternatives");
  const int dtrials = l.at("diag_trials"), dalts = l.at("diag_alternatives");
  const long horizon = l.at("horizon");
  const std::uint64_t seed = l.at("seed");
  if (trials < 1 || dtrials < 1) throw InvalidInput("--trials and --diag-trials must be >= 1");
  if (alts < 1 || dalts < 1) throw InvalidInput("--alternatives and --diag-alternatives must be >= 1");
  if (horizon < 1) throw InvalidInput("lemmas.horizon must be >= 1");

  const OneStepSuite one = check_one_step_optimality(trials, alts, seed);
  const DiagonalSuite diag = check_diagonal_optimality(dtrials, dalts, seed, horizon);

  json one_rec = json::array();
  for (const auto& r : one.records) {
    one_rec.push_back({{"instance", r.instance},
                       {"n_x", r.n_x},
                       {"n_z", r.n_z},
                       {"sigma_next", r.sigma_next},
                       {"error", r.error},
                       {"identity_gap", r.identity_gap},
                       {"min_margin", r.min_margin}});
  }
  json diag_rec = json::array();
  for (const auto& r : diag.records) {
    diag_rec.push_back({{"instance", r.instance},
                        {"lambdas", r.lambdas},
                        {"n_z", r.n_z},
                        {"closed_form", r.closed_form},
                        {"partial_sum", r.partial_sum},
                        {"horizon_one", r.horizon_one},
                        {"min_margin", r.min_margin}});
  }
  json report;
  report["spec_version"] = kFormatVersion;
  report["one_step"] = {{"identity", {{"pass", one.identity_pass}, {"max_gap", one.max_identity_gap}}},
                        {"optimality", {{"pass", one.optimality_pass}, {"min_margin", one.min_margin}}},
                        {"records", std::move(one_rec)}};
  report["diagonal"] = {{"closed_form", {{"pass", diag.closed_form_pass}, {"max_gap", diag.max_closed_form_gap}}},
                        {"horizon_one", {{"pass", diag.horizon_one_pass}}},
                        {"optimality", {{"pass", diag.optimality_pass}, {"min_margin", diag.min_margin}}},
                        {"records", std::move(diag_rec)}};
  report["passed"] = one.passed() && diag.passed();
  report["config"] = echo(cfg);
  write_file_atomic(fs::path(out_dir) / "lemmas_report.json", dump(report));

  auto line = [&out](const char* name, bool pass, const std::string& detail) {
    out << (pass ? "PASS " : "FAIL ") << name << "  " << detail << "\n";
  };
  line("one-step identity", one.identity_pass, "max gap " + fmt17(one.max_identity_gap));
  line("one-step optimality", one.optimality_pass, "min margin " + fmt17(one.min_margin));
  line("diagonal closed form", diag.closed_form_pass, "max gap " + fmt17(diag.max_closed_form_gap));
  line("diagonal horizon one", diag.horizon_one_pass, "");
  line("diagonal optimality", diag.optimality_pass, "min margin " + fmt17(diag.min_margin));
  if (!(one.passed() && diag.passed())) {
    err << "lemma property check failed\n";
    return 2;
  }
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Learned reduced-order models of hybrid systems and their regions of attraction", "hrom"};
  app.require_subcommand(1);

  auto common_flags = [](CLI::App* sub, Common& c) {
    sub->add_option("--config", c.config_path, "JSON config merged over the defaults");
    c.over.add(sub, "--workers", "Worker threads; results do not depend on it", {"workers"}, c.workers);
  };

  // collect
  Common col;
  std::string col_out;
  int steps = 0;
  long long num_traj = 0;
  double dt = 0.0;
  std::uint64_t col_seed = 0;
  auto* collect = app.add_subcommand("collect", "Simulate trajectories and write a Poincare dataset");
  common_flags(collect, col);
  collect->add_option("--system", col.system, "paddle-ball or hopper")->check(CLI::IsMember({"paddle-ball", "hopper"}));
  col.over.add(collect, "--num-traj", "Trajectories to simulate", {"collect", "num_traj"}, num_traj);
  col.over.add(collect, "--steps", "Poincare returns per trajectory (K)", {"collect", "steps"}, steps);
  col.over.add(collect, "--seed", "Sampler seed", {"collect", "seed"}, col_seed);
  col.over.add(collect, "--dt", "Integrator step", {"sim", "dt"}, dt);
  collect->add_option("--out", col_out, "Output directory")->required();

  // train
  Common tr;
  std::string tr_data, tr_out, tr_log;
  int latent = 0, tr_steps = 0, batch = 0, klen = 0;
  double lr = 0.0, valf = 0.0;
  std::uint64_t tr_seed = 0;
  auto* trn = app.add_subcommand("train", "Train the autoencoder and latent dynamics");
  common_flags(trn, tr);
  trn->add_option("--data", tr_data, "Dataset directory")->required();
  trn->add_option("--out", tr_out, "Checkpoint path (model.json)")->required();
  trn->add_option("--log", tr_log, "Loss log path (default: train_log.csv next to the checkpoint)");
  tr.over.add(trn, "--latent-dim", "Latent dimension", {"model", "latent_dim"}, latent);
  tr.over.add(trn, "--steps", "Optimizer steps", {"train", "steps"}, tr_steps);
  tr.over.add(trn, "--seed", "Training seed", {"train", "seed"}, tr_seed);
  tr.over.add(trn, "--batch-size", "Mini-batch size", {"train", "batch_size"}, batch);
  tr.over.add(trn, "--traj-length", "States per training window (K)", {"train", "traj_length"}, klen);
  tr.over.add(trn, "--lr", "Adam learning rate", {"train", "lr"}, lr);
  tr.over.add(trn, "--val-fraction", "Validation fraction", {"train", "val_fraction"}, valf);

  // eval
  Common ev;
  std::string ev_model, ev_data, ev_out;
  auto* evl = app.add_subcommand("eval", "Per-step reconstruction and rollout errors");
  common_flags(evl, ev);
  evl->add_option("--model", ev_model, "Checkpoint")->required();
  evl->add_option("--data", ev_data, "Dataset directory")->required();
  evl->add_option("--out", ev_out, "Output directory")->required();

  // roa
  Common ro;
  std::string ro_model, ro_out;
  long long samples = 0;
  int rollout = 0, dirs = 0;
  double cap = 0.0;
  std::uint64_t ro_seed = 0;
  bool baseline = false;
  auto* roa = app.add_subcommand("roa", "Certify and verify a region of attraction");
  common_flags(roa, ro);
  roa->add_option("--model", ro_model, "Checkpoint")->required();
  roa->add_option("--out", ro_out, "Output directory")->required();
  ro.over.add(roa, "--samples", "Sublevel-set samples to verify", {"roa", "samples"}, samples);
  ro.over.add(roa, "--rollout-steps", "Poincare returns per rollout", {"roa", "rollout_steps"}, rollout);
  ro.over.add(roa, "--directions", "Ray directions for the level search", {"roa", "directions"}, dirs);
  ro.over.add(roa, "--radius-cap", "Ray length (default: 10x the largest training encoding)", {"roa", "radius_cap"}, cap);
  ro.over.add(roa, "--seed", "Sampling seed", {"roa", "seed"}, ro_seed);
  roa->add_flag("--baseline", baseline, "Also verify the 4-per-dimension grid");

  // lemmas
  Common le;
  std::string le_out = ".";
  int trials = 0, alts = 0, dtrials = 0, dalts = 0;
  std::uint64_t le_seed = 0;
  auto* lem = app.add_subcommand("lemmas", "Randomized checks of the linear reduction optimality results");
  common_flags(lem, le);
  lem->add_option("--out", le_out, "Output directory")->capture_default_str();
  le.over.add(lem, "--trials", "Random matrices for the one-step check", {"lemmas", "trials"}, trials);
  le.over.add(lem, "--alternatives", "Alternatives per one-step case", {"lemmas", "alternatives"}, alts);
  le.over.add(lem, "--diag-trials", "Diagonal systems", {"lemmas", "diag_trials"}, dtrials);
  le.over.add(lem, "--diag-alternatives", "Alternatives per diagonal system", {"lemmas", "diag_alternatives"}, dalts);
  le.over.add(lem, "--seed", "Seed", {"lemmas", "seed"}, le_seed);

  std::vector<std::string> storage = args;
  storage.insert(storage.begin(), "hrom");
  std::vector<char*> argv;
  for (auto& s : storage) argv.push_back(s.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << e.what() << "\n";
      return 0;
    }
    err << "error: " << e.what() << "\n";
    return 1;
  }

  try {
    if (*collect) return cmd_collect(col, col_out, out);
    if (*trn) return cmd_train(tr, tr_data, tr_out, tr_log, out);
    if (*evl) return cmd_eval(ev, ev_model, ev_data, ev_out, out);
    if (*roa) return cmd_roa(ro, ro_model, ro_out, baseline, out, err);
    if (*lem) return cmd_lemmas(le, le_out, out, err);
  } catch (const Error& e) {
    err << "error (" << to_string(e.kind()) << "): " << e.what() << "\n";
    return e.kind() == ErrorKind::InvalidInput ? 1 : 2;
  } catch (const nlohmann::json::exception& e) {
    err << "error: malformed input: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}

int run(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace hrom
