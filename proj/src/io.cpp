#include "hrom/io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <system_error>

#include <unistd.h>

namespace hrom {

namespace fs = std::filesystem;

void write_file_atomic(const fs::path& path, const std::string& content) {
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  if (ec) throw IoError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
  fs::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) {
      fs::remove(tmp, ec);
      throw IoError("write failed for " + tmp.string());
    }
  }
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw IoError("cannot move " + tmp.string() + " to " + path.string());
  }
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string dataset_to_csv(const PoincareDataset& ds) {
  std::string out = "traj_id,k";
  for (Eigen::Index i = 0; i < ds.n_x; ++i) out += ",x" + std::to_string(i);
  out += '\n';
  for (const auto& tr : ds.trajectories) {
    for (std::size_t k = 0; k < tr.states.size(); ++k) {
      out += std::to_string(tr.id);
      out += ',';
      out += std::to_string(k);
      for (Eigen::Index i = 0; i < tr.states[k].size(); ++i) {
        out += ',';
        out += fmt17(tr.states[k](i));
      }
      out += '\n';
    }
  }
  return out;
}

namespace {

double parse_double(std::string_view s, std::size_t line) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw InvalidInput("dataset.csv line " + std::to_string(line) + ": bad number '" + std::string(s) + "'");
  }
  return v;
}

}  // namespace

PoincareDataset dataset_from_csv(const std::string& text, const std::string& system_name) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw InvalidInput("dataset.csv: empty file");
  std::vector<std::string_view> fields;
  auto split = [&fields](const std::string& l) {
    fields.clear();
    std::size_t start = 0;
    for (;;) {
      const std::size_t c = l.find(',', start);
      fields.emplace_back(l.data() + start, (c == std::string::npos ? l.size() : c) - start);
      if (c == std::string::npos) break;
      start = c + 1;
    }
  };
  split(line);
  if (fields.size() < 3 || fields[0] != "traj_id" || fields[1] != "k") {
    throw InvalidInput("dataset.csv: header must start with traj_id,k");
  }
  const auto n_x = static_cast<Eigen::Index>(fields.size() - 2);

  std::map<std::int64_t, Trajectory> by_id;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    split(line);
    if (static_cast<Eigen::Index>(fields.size()) != n_x + 2) {
      throw InvalidInput("dataset.csv line " + std::to_string(lineno) + ": wrong field count");
    }
    const auto id = static_cast<std::int64_t>(parse_double(fields[0], lineno));
    const auto k = static_cast<std::size_t>(parse_double(fields[1], lineno));
    Vector x(n_x);
    for (Eigen::Index i = 0; i < n_x; ++i) x(i) = parse_double(fields[static_cast<std::size_t>(i + 2)], lineno);
    Trajectory& tr = by_id[id];
    tr.id = id;
    if (k != tr.states.size()) throw InvalidInput("dataset.csv: states of trajectory " + std::to_string(id) + " out of order");
    tr.states.push_back(std::move(x));
  }
  PoincareDataset ds;
  ds.system_name = system_name;
  ds.n_x = n_x;
  for (auto& [id, tr] : by_id) ds.trajectories.push_back(std::move(tr));
  if (ds.trajectories.empty()) throw EmptyDataset("dataset.csv: no trajectories");
  const std::size_t len = ds.trajectories.front().states.size();
  for (const auto& tr : ds.trajectories) {
    if (tr.states.size() != len) throw InvalidInput("dataset.csv: trajectories of unequal length");
  }
  ds.traj_length = static_cast<int>(len) - 1;
  ds.requested = ds.trajectories.size();
  return ds;
}

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

json vector_to_json(const Vector& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

Matrix matrix_from_json(const json& j) {
  if (!j.is_array() || j.empty() || !j.front().is_array()) throw InvalidInput("expected a non-empty matrix");
  Matrix m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(j.front().size()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    const json& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != m.cols()) throw InvalidInput("ragged matrix");
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(i, c) = row[static_cast<std::size_t>(c)].get<double>();
  }
  return m;
}

Vector vector_from_json(const json& j) {
  if (!j.is_array()) throw InvalidInput("expected an array of numbers");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = j[static_cast<std::size_t>(i)].get<double>();
  return v;
}

json mlp_to_json(const Mlp& net) {
  json layers = json::array();
  for (int l = 0; l < net.num_layers(); ++l) {
    json w = json::array();
    const auto wm = net.weight(l);
    for (Eigen::Index i = 0; i < wm.rows(); ++i)
      for (Eigen::Index c = 0; c < wm.cols(); ++c) w.push_back(wm(i, c));
    layers.push_back({{"weight", std::move(w)}, {"bias", vector_to_json(net.bias(l))}});
  }
  return {{"layer_sizes", net.layer_sizes()},
          {"hidden_activation", "swish"},
          {"output_activation", "identity"},
          {"layers", std::move(layers)}};
}

Mlp mlp_from_json(const json& j) {
  Mlp net(j.at("layer_sizes").get<std::vector<int>>());
  if (j.value("hidden_activation", "swish") != "swish") throw InvalidInput("model: unsupported activation");
  const json& layers = j.at("layers");
  if (static_cast<int>(layers.size()) != net.num_layers()) throw InvalidInput("model: layer count mismatch");
  Vector theta = net.params();
  for (int l = 0; l < net.num_layers(); ++l) {
    const json& w = layers[static_cast<std::size_t>(l)].at("weight");
    const json& b = layers[static_cast<std::size_t>(l)].at("bias");
    const auto wm = net.weight(l);
    if (static_cast<Eigen::Index>(w.size()) != wm.size() || static_cast<Eigen::Index>(b.size()) != wm.rows()) {
      throw InvalidInput("model: parameter count mismatch in layer " + std::to_string(l));
    }
    for (Eigen::Index i = 0; i < wm.size(); ++i) theta(net.weight_offset(l) + i) = w[static_cast<std::size_t>(i)].get<double>();
    for (Eigen::Index i = 0; i < wm.rows(); ++i) theta(net.bias_offset(l) + i) = b[static_cast<std::size_t>(i)].get<double>();
  }
  if (!all_finite(theta)) throw InvalidInput("model: non-finite parameters");
  net.set_params(theta);
  return net;
}

json model_to_json(const AutoencoderModel& m) {
  return {{"n_z", m.n_z},
          {"n_x", m.n_x()},
          {"system_name", m.system_name},
          {"normalization", {{"mean", vector_to_json(m.norm.mean)}, {"std", vector_to_json(m.norm.std)}}},
          {"encoder", mlp_to_json(m.encoder)},
          {"decoder", mlp_to_json(m.decoder)},
          {"dynamics", mlp_to_json(m.dynamics)}};
}

AutoencoderModel model_from_json(const json& j) {
  AutoencoderModel m;
  try {
    m.n_z = j.at("n_z").get<int>();
    m.system_name = j.value("system_name", "");
    m.norm.mean = vector_from_json(j.at("normalization").at("mean"));
    m.norm.std = vector_from_json(j.at("normalization").at("std"));
    m.encoder = mlp_from_json(j.at("encoder"));
    m.decoder = mlp_from_json(j.at("decoder"));
    m.dynamics = mlp_from_json(j.at("dynamics"));
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("model: malformed checkpoint: ") + e.what());
  }
  const Eigen::Index nx = m.encoder.input_dim();
  if (m.encoder.output_dim() != m.n_z || m.decoder.input_dim() != m.n_z || m.decoder.output_dim() != nx ||
      m.dynamics.input_dim() != m.n_z || m.dynamics.output_dim() != m.n_z || m.norm.mean.size() != nx ||
      m.norm.std.size() != nx) {
    throw InvalidInput("model: inconsistent network dimensions");
  }
  if ((m.norm.std.array() <= 0.0).any()) throw InvalidInput("model: normalization std must be > 0");
  return m;
}

}  // namespace hrom
