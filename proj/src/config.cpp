#include "hrom/config.hpp"

namespace hrom {

namespace {

json paddle_defaults() {
  const PaddleBallParams p;
  return {{"gravity", p.gravity},         {"restitution", p.restitution}, {"target_apex", p.target_apex},
          {"energy_gain", p.energy_gain}, {"kp", p.kp},                   {"kd", p.kd},
          {"frozen_paddle", p.frozen_paddle}, {"apex_low", p.apex_low},   {"apex_high", p.apex_high},
          {"escape_radius", p.escape_radius}};
}

json hopper_defaults() {
  const SlipHopperParams p;
  return {{"gravity", p.gravity},
          {"mass", p.mass},
          {"stiffness", p.stiffness},
          {"rest_length", p.rest_length},
          {"desired_speed", p.desired_speed},
          {"target_apex", p.target_apex},
          {"raibert_gain", p.raibert_gain},
          {"stance_time", p.stance_time},
          {"swing_kp", p.swing_kp},
          {"swing_kd", p.swing_kd},
          {"energy_gain", p.energy_gain},
          {"height_floor", p.height_floor},
          {"escape_radius", p.escape_radius}};
}

bool numeric(const json& j) { return j.is_number(); }

}  // namespace

json default_config(const std::string& system) {
  if (system != "paddle-ball" && system != "hopper") throw InvalidInput("unknown system '" + system + "'");
  const bool hop = system == "hopper";
  const TrainConfig tc;
  const LossWeights lw;
  const ModelShape ms;
  json cfg;
  cfg["system"] = system;
  cfg["workers"] = 1;
  cfg["paddle_ball"] = paddle_defaults();
  cfg["hopper"] = hopper_defaults();
  cfg["sampler"] = {{"center", nullptr}, {"half_width", nullptr}};
  cfg["sim"] = {{"dt", SimOptions{}.dt}, {"max_time", SimOptions{}.max_time}};
  cfg["collect"] = {{"num_traj", 4096}, {"steps", hop ? 8 : 6}, {"seed", 42}};
  cfg["model"] = {{"latent_dim", hop ? 4 : 2},
                  {"encoder_hidden", ms.encoder_hidden},
                  {"decoder_hidden", ms.decoder_hidden},
                  {"dynamics_hidden", ms.dynamics_hidden}};
  cfg["train"] = {{"batch_size", hop ? 1024 : tc.batch_size},
                  {"traj_length", hop ? 8 : tc.traj_length},
                  {"steps", hop ? 15000 : tc.steps},
                  {"lr", tc.lr},
                  {"seed", tc.seed},
                  {"val_fraction", tc.val_fraction},
                  {"log_every", tc.log_every}};
  cfg["loss_weights"] = {{"rec_x", lw.rec_x}, {"rec_z", lw.rec_z}, {"fwd", lw.fwd},  {"bck", lw.bck},
                         {"pred", lw.pred},   {"iso", lw.iso},     {"reg", lw.reg}};
  cfg["roa"] = {{"samples", 2000},
                {"rollout_steps", 150},
                {"directions", 4096},
                {"radius_cap", nullptr},
                {"radius_cap_factor", 10.0},
                {"grid", LevelOptions{}.grid},
                {"bisections", LevelOptions{}.bisections},
                {"projection_window", VerifyOptions{}.projection_window},
                {"seed", 11},
                {"baseline", false},
                {"convergence_tol", 1e-2}};
  cfg["lemmas"] = {{"trials", 50},     {"alternatives", 1000}, {"diag_trials", 20},
                   {"diag_alternatives", 500}, {"horizon", 10000}, {"seed", 1}};
  return cfg;
}

json merge_config(const json& base, const json& overlay, const std::string& where) {
  if (!overlay.is_object()) throw InvalidInput("config" + (where.empty() ? "" : " '" + where + "'") + ": expected an object");
  json out = base;
  for (auto it = overlay.begin(); it != overlay.end(); ++it) {
    const std::string key = where.empty() ? it.key() : where + "." + it.key();
    if (!out.contains(it.key())) throw InvalidInput("config: unknown key '" + key + "'");
    json& slot = out[it.key()];
    const json& v = it.value();
    if (slot.is_object()) {
      slot = merge_config(slot, v, key);
    } else if (slot.is_null() || v.is_null() || (numeric(slot) && numeric(v)) || slot.type() == v.type()) {
      if (slot.is_number_integer() && v.is_number_float()) {
        throw InvalidInput("config: '" + key + "' must be an integer");
      }
      slot = v;
    } else {
      throw InvalidInput("config: wrong type for '" + key + "'");
    }
  }
  return out;
}

json load_config_file(const std::filesystem::path& path) {
  if (path.empty()) return json::object();
  const std::string text = read_file(path);
  try {
    json j = json::parse(text);
    if (!j.is_object()) throw InvalidInput("config: top level must be an object");
    return j;
  } catch (const nlohmann::json::parse_error& e) {
    throw InvalidInput("config: cannot parse " + path.string() + ": " + e.what());
  }
}

json system_params(const json& cfg) {
  return cfg.at("system") == "hopper" ? cfg.at("hopper") : cfg.at("paddle_ball");
}

namespace {

PaddleBallParams paddle_params(const json& j) {
  PaddleBallParams p;
  p.gravity = j.at("gravity");
  p.restitution = j.at("restitution");
  p.target_apex = j.at("target_apex");
  p.energy_gain = j.at("energy_gain");
  p.kp = j.at("kp");
  p.kd = j.at("kd");
  p.frozen_paddle = j.at("frozen_paddle");
  p.apex_low = j.at("apex_low");
  p.apex_high = j.at("apex_high");
  p.escape_radius = j.at("escape_radius");
  return p;
}

SlipHopperParams hopper_params(const json& j) {
  SlipHopperParams p;
  p.gravity = j.at("gravity");
  p.mass = j.at("mass");
  p.stiffness = j.at("stiffness");
  p.rest_length = j.at("rest_length");
  p.desired_speed = j.at("desired_speed");
  p.target_apex = j.at("target_apex");
  p.raibert_gain = j.at("raibert_gain");
  p.stance_time = j.at("stance_time");
  p.swing_kp = j.at("swing_kp");
  p.swing_kd = j.at("swing_kd");
  p.energy_gain = j.at("energy_gain");
  p.height_floor = j.at("height_floor");
  p.escape_radius = j.at("escape_radius");
  return p;
}

BoxSampler override_box(BoxSampler box, const json& s) {
  if (!s.at("center").is_null()) box.center = vector_from_json(s.at("center"));
  if (!s.at("half_width").is_null()) box.half_width = vector_from_json(s.at("half_width"));
  return box;
}

}  // namespace

SystemSetup make_system(const json& cfg, bool with_fixed_point) {
  SystemSetup out;
  const SimOptions sim = sim_options(cfg);
  try {
    if (cfg.at("system") == "hopper") {
      auto sys = std::make_unique<SlipHopper>(hopper_params(cfg.at("hopper")));
      out.box = override_box(sys->default_box(), cfg.at("sampler"));
      out.sampler = sys->sampler(out.box);
      if (with_fixed_point) {
        Vector x = flow_to_impact(*sys, sys->apex_state(), sim, false).x_minus;
        for (int i = 0; i < 60; ++i) x = poincare_map(*sys, x, sim);
        out.fixed_point = find_fixed_point(*sys, x, 1e-8, sim);
      }
      out.system = std::move(sys);
    } else {
      auto sys = std::make_unique<PaddleBall>(paddle_params(cfg.at("paddle_ball")));
      out.box = override_box(sys->default_box(), cfg.at("sampler"));
      out.sampler = sys->sampler(out.box);
      if (with_fixed_point) out.fixed_point = find_fixed_point(*sys, sys->nominal_fixed_point(), 1e-8, sim);
      out.system = std::move(sys);
    }
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("config: ") + e.what());
  }
  return out;
}

SimOptions sim_options(const json& cfg) {
  SimOptions o;
  o.dt = cfg.at("sim").at("dt");
  o.max_time = cfg.at("sim").at("max_time");
  if (!(o.dt > 0.0) || !(o.max_time > o.dt)) throw InvalidInput("config: sim.dt must be > 0 and below sim.max_time");
  return o;
}

ModelShape model_shape(const json& cfg, int n_x) {
  const json& m = cfg.at("model");
  ModelShape s;
  s.n_x = n_x;
  s.n_z = m.at("latent_dim");
  s.encoder_hidden = m.at("encoder_hidden").get<std::vector<int>>();
  s.decoder_hidden = m.at("decoder_hidden").get<std::vector<int>>();
  s.dynamics_hidden = m.at("dynamics_hidden").get<std::vector<int>>();
  if (s.n_z < 1) throw InvalidInput("latent_dim must be >= 1");
  if (s.n_z > n_x) throw InvalidInput("latent_dim must not exceed the state dimension");
  return s;
}

TrainConfig train_config(const json& cfg) {
  const json& t = cfg.at("train");
  TrainConfig c;
  c.batch_size = t.at("batch_size");
  c.traj_length = t.at("traj_length");
  c.steps = t.at("steps");
  c.lr = t.at("lr");
  c.seed = t.at("seed");
  c.val_fraction = t.at("val_fraction");
  c.log_every = t.at("log_every");
  return c;
}

LossWeights loss_weights(const json& cfg) {
  const json& w = cfg.at("loss_weights");
  LossWeights l;
  l.rec_x = w.at("rec_x");
  l.rec_z = w.at("rec_z");
  l.fwd = w.at("fwd");
  l.bck = w.at("bck");
  l.pred = w.at("pred");
  l.iso = w.at("iso");
  l.reg = w.at("reg");
  return l;
}

}  // namespace hrom
