#include "nf/config.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace nf {

using nlohmann::json;

namespace {

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key())) throw ConfigError(where + ": unknown key '" + it.key() + "'");
}

template <class T>
void read(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + "." + key + ": wrong type");
  }
}

void require(bool ok, const std::string& msg) {
  if (!ok) throw ConfigError(msg);
}

}  // namespace

void validate(const ExperimentConfig& c) {
  require(c.model.gain.gamma > 0, "model.gamma must be positive");
  require(c.model.gain.theta > 0 && c.model.gain.theta < 1, "model.theta must lie in (0, 1)");
  require(c.model.kernel.sigma > 0, "model.sigma must be positive");
  require(c.half_length > 0, "grid.half_length must be positive");
  require(c.n_points >= 64, "grid.n_points must be at least 64");
  require(c.noise.rank >= 1 && c.noise.rank <= 100, "noise.rank must lie in [1, 100]");
  require(c.noise.corr_length > 0 && c.noise.envelope > 0, "noise lengths must be positive");
  require(c.noise.amplitude >= 0, "noise.amplitude must be nonnegative");
  require(c.sim.dt > 0 && c.sim.horizon >= c.sim.dt, "sim: need 0 < dt <= horizon");
  require(c.sim.q_exponent >= 0 && c.sim.q_exponent < 1, "sim.q_exponent must lie in [0, 1)");
  require(c.sim.record_stride >= 1, "sim.record_stride must be at least 1");
  require(c.sim.eta.width > 0, "sim.eta.width must be positive");
  const auto& e = c.experiments;
  require(!e.epsilon_ladder.empty(), "experiments.epsilon_ladder is empty");
  for (std::size_t i = 0; i < e.epsilon_ladder.size(); ++i) {
    require(e.epsilon_ladder[i] > 0, "experiments.epsilon_ladder entries must be positive");
    require(i == 0 || e.epsilon_ladder[i] < e.epsilon_ladder[i - 1], "experiments.epsilon_ladder must be strictly decreasing");
  }
  require(e.n_paths >= 1 && e.expansion_paths >= 1 && e.optimality_paths >= 1 && e.ou_paths >= 2 && e.m_paths >= 1 &&
              e.convergence_paths >= 1,
          "experiments: path counts must be positive");
  for (double m : e.m_ladder) require(m > 0, "experiments.m_ladder entries must be positive");
  require(e.window_start >= 0 && e.window_start < c.sim.horizon, "experiments.window_start must lie in [0, horizon)");
  require(e.convergence_dt.size() >= 2, "experiments.convergence_dt needs at least two steps");
  for (double d : e.convergence_dt) require(d > 0, "experiments.convergence_dt entries must be positive");
  require(e.convergence_horizon > 0 && e.ou_envelope > 0, "experiments: horizons and widths must be positive");
  require(e.threads >= 0, "experiments.threads must be nonnegative");
}

ExperimentConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& err) {
    throw ConfigError(std::string("config is not valid JSON: ") + err.what());
  }
  ExperimentConfig c;
  check_keys(j, {"model", "grid", "noise", "sim", "experiments", "output_dir"}, "config");
  if (j.contains("model")) {
    const json& m = j["model"];
    check_keys(m, {"gamma", "theta", "sigma"}, "model");
    read(m, "gamma", c.model.gain.gamma, "model");
    read(m, "theta", c.model.gain.theta, "model");
    read(m, "sigma", c.model.kernel.sigma, "model");
  }
  if (j.contains("grid")) {
    const json& g = j["grid"];
    check_keys(g, {"half_length", "n_points"}, "grid");
    read(g, "half_length", c.half_length, "grid");
    read(g, "n_points", c.n_points, "grid");
  }
  if (j.contains("noise")) {
    const json& n = j["noise"];
    check_keys(n, {"rank", "corr_length", "envelope", "amplitude", "decay_exponent"}, "noise");
    read(n, "rank", c.noise.rank, "noise");
    read(n, "corr_length", c.noise.corr_length, "noise");
    read(n, "envelope", c.noise.envelope, "noise");
    read(n, "amplitude", c.noise.amplitude, "noise");
    read(n, "decay_exponent", c.noise.decay_exponent, "noise");
  }
  if (j.contains("sim")) {
    const json& s = j["sim"];
    check_keys(s, {"horizon", "dt", "q_exponent", "record_stride", "eta"}, "sim");
    read(s, "horizon", c.sim.horizon, "sim");
    read(s, "dt", c.sim.dt, "sim");
    read(s, "q_exponent", c.sim.q_exponent, "sim");
    read(s, "record_stride", c.sim.record_stride, "sim");
    if (s.contains("eta")) {
      const json& e = s["eta"];
      check_keys(e, {"amplitude", "center", "width"}, "sim.eta");
      read(e, "amplitude", c.sim.eta.amplitude, "sim.eta");
      read(e, "center", c.sim.eta.center, "sim.eta");
      read(e, "width", c.sim.eta.width, "sim.eta");
    }
  }
  if (j.contains("experiments")) {
    const json& e = j["experiments"];
    auto& x = c.experiments;
    check_keys(e,
               {"epsilon_ladder", "n_paths", "expansion_paths", "optimality_paths", "ou_paths", "ou_envelope", "m_ladder",
                "m_paths", "window_start", "convergence_dt", "convergence_horizon", "convergence_paths",
                "convergence_epsilon", "seed", "threads"},
               "experiments");
    read(e, "epsilon_ladder", x.epsilon_ladder, "experiments");
    read(e, "n_paths", x.n_paths, "experiments");
    read(e, "expansion_paths", x.expansion_paths, "experiments");
    read(e, "optimality_paths", x.optimality_paths, "experiments");
    read(e, "ou_paths", x.ou_paths, "experiments");
    read(e, "ou_envelope", x.ou_envelope, "experiments");
    read(e, "m_ladder", x.m_ladder, "experiments");
    read(e, "m_paths", x.m_paths, "experiments");
    read(e, "window_start", x.window_start, "experiments");
    read(e, "convergence_dt", x.convergence_dt, "experiments");
    read(e, "convergence_horizon", x.convergence_horizon, "experiments");
    read(e, "convergence_paths", x.convergence_paths, "experiments");
    read(e, "convergence_epsilon", x.convergence_epsilon, "experiments");
    read(e, "seed", x.seed, "experiments");
    read(e, "threads", x.threads, "experiments");
  }
  if (j.contains("output_dir")) {
    if (!j["output_dir"].is_string()) throw ConfigError("output_dir: wrong type");
    c.output_dir = j["output_dir"].get<std::string>();
  }
  validate(c);
  return c;
}

ExperimentConfig load_config(const std::string& source) {
  if (source == "default") return ExperimentConfig{};
  std::ifstream in(source);
  if (!in) throw ConfigError("cannot open config file '" + source + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string config_to_json(const ExperimentConfig& c) {
  const auto& x = c.experiments;
  json j = {
      {"model", {{"gamma", c.model.gain.gamma}, {"theta", c.model.gain.theta}, {"sigma", c.model.kernel.sigma}}},
      {"grid", {{"half_length", c.half_length}, {"n_points", c.n_points}}},
      {"noise",
       {{"rank", c.noise.rank},
        {"corr_length", c.noise.corr_length},
        {"envelope", c.noise.envelope},
        {"amplitude", c.noise.amplitude},
        {"decay_exponent", c.noise.decay_exponent}}},
      {"sim",
       {{"horizon", c.sim.horizon},
        {"dt", c.sim.dt},
        {"q_exponent", c.sim.q_exponent},
        {"record_stride", c.sim.record_stride},
        {"eta", {{"amplitude", c.sim.eta.amplitude}, {"center", c.sim.eta.center}, {"width", c.sim.eta.width}}}}},
      {"experiments",
       {{"epsilon_ladder", x.epsilon_ladder},
        {"n_paths", x.n_paths},
        {"expansion_paths", x.expansion_paths},
        {"optimality_paths", x.optimality_paths},
        {"ou_paths", x.ou_paths},
        {"ou_envelope", x.ou_envelope},
        {"m_ladder", x.m_ladder},
        {"m_paths", x.m_paths},
        {"window_start", x.window_start},
        {"convergence_dt", x.convergence_dt},
        {"convergence_horizon", x.convergence_horizon},
        {"convergence_paths", x.convergence_paths},
        {"convergence_epsilon", x.convergence_epsilon},
        {"seed", x.seed},
        {"threads", x.threads}}},
      {"output_dir", c.output_dir}};
  return j.dump(2);
}

std::string config_hash(const ExperimentConfig& c) {
  ExperimentConfig h = c;
  // where results go and how many threads compute them do not change any number
  h.output_dir.clear();
  h.experiments.threads = 0;
  std::uint64_t x = 1469598103934665603ull;
  for (unsigned char ch : config_to_json(h)) {
    x ^= ch;
    x *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(x));
  return buf;
}

Vec make_eta(const EtaSpec& e, const GridSpec& g) {
  Vec eta(g.n_points);
  for (int i = 0; i < g.n_points; ++i) {
    const double z = (g.x(i) - e.center) / e.width;
    eta[i] = e.amplitude * std::exp(-0.5 * z * z);
  }
  return eta;
}

}  // namespace nf
