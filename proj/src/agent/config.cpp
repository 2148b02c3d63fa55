#include "zipfmem/agent/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "zipfmem/errors.hpp"

namespace zipfmem::agent {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

template <typename U>
U parse_number(const std::string& key, const std::string& text) {
  U value{};
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) throw ConfigError("config: bad value '" + text + "' for " + key);
  return value;
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  throw ConfigError("config: bad boolean '" + text + "' for " + key + " (use true/false)");
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

struct Field {
  std::function<void(TrainConfig&, const std::string&, const std::string&)> set;
  std::function<std::string(const TrainConfig&)> get;
};

template <typename U>
Field number(U TrainConfig::*member) {
  return {[member](TrainConfig& c, const std::string& k, const std::string& v) { c.*member = parse_number<U>(k, v); },
          [member](const TrainConfig& c) {
            if constexpr (std::is_floating_point_v<U>) return fmt(c.*member);
            else return std::to_string(c.*member);
          }};
}

Field flag(bool TrainConfig::*member) {
  return {[member](TrainConfig& c, const std::string& k, const std::string& v) { c.*member = parse_bool(k, v); },
          [member](const TrainConfig& c) { return std::string(c.*member ? "true" : "false"); }};
}

const std::map<std::string, Field>& fields() {
  static const std::map<std::string, Field> table = {
      {"env",
       {[](TrainConfig& c, const std::string&, const std::string& v) {
          try {
            c.env = env::parse_env_kind(v);
          } catch (const std::invalid_argument& e) {
            throw ConfigError(std::string("config: ") + e.what());
          }
        },
        [](const TrainConfig& c) { return env::to_string(c.env); }}},
      {"mode",
       {[](TrainConfig& c, const std::string&, const std::string& v) { c.mode = parse_mode(v); },
        [](const TrainConfig& c) { return to_string(c.mode); }}},
      {"run_dir",
       {[](TrainConfig& c, const std::string&, const std::string& v) { c.run_dir = v; },
        [](const TrainConfig& c) { return c.run_dir; }}},
      {"n_maps", number(&TrainConfig::n_maps)},
      {"n_objects", number(&TrainConfig::n_objects)},
      {"grid_rows", number(&TrainConfig::grid_rows)},
      {"grid_cols", number(&TrainConfig::grid_cols)},
      {"wall_density", number(&TrainConfig::wall_density)},
      {"map_exponent", number(&TrainConfig::map_exponent)},
      {"object_exponent", number(&TrainConfig::object_exponent)},
      {"step_limit", number(&TrainConfig::step_limit)},
      {"action_repeats", number(&TrainConfig::action_repeats)},
      {"map_seed", number(&TrainConfig::map_seed)},
      {"seed", number(&TrainConfig::seed)},
      {"env_steps", number(&TrainConfig::env_steps)},
      {"n_actors", number(&TrainConfig::n_actors)},
      {"unroll_length", number(&TrainConfig::unroll_length)},
      {"discount", number(&TrainConfig::discount)},
      {"baseline_loss_scale", number(&TrainConfig::baseline_loss_scale)},
      {"entropy_cost", number(&TrainConfig::entropy_cost)},
      {"contrastive_weight", number(&TrainConfig::contrastive_weight)},
      {"learning_rate", number(&TrainConfig::learning_rate)},
      {"rmsprop_decay", number(&TrainConfig::rmsprop_decay)},
      {"rmsprop_eps", number(&TrainConfig::rmsprop_eps)},
      {"grad_clip_norm", number(&TrainConfig::grad_clip_norm)},
      {"vtrace", flag(&TrainConfig::vtrace)},
      {"hop", number(&TrainConfig::hop)},
      {"t_f", number(&TrainConfig::t_f)},
      {"t_k", number(&TrainConfig::t_k)},
      {"familiarity_capacity", number(&TrainConfig::familiarity_capacity)},
      {"mem_capacity", number(&TrainConfig::mem_capacity)},
      {"beta", number(&TrainConfig::beta)},
      {"tau", number(&TrainConfig::tau)},
      {"contrastive_batch", number(&TrainConfig::contrastive_batch)},
      {"knn_k", number(&TrainConfig::knn_k)},
      {"knn_eps", number(&TrainConfig::knn_eps)},
      {"sigma", number(&TrainConfig::sigma)},
      {"cutout_min", number(&TrainConfig::cutout_min)},
      {"cutout_max", number(&TrainConfig::cutout_max)},
      {"refresh_keys_on_transfer", flag(&TrainConfig::refresh_keys_on_transfer)},
      {"dump_momentum", flag(&TrainConfig::dump_momentum)},
      {"conv1_filters", number(&TrainConfig::conv1_filters)},
      {"conv2_filters", number(&TrainConfig::conv2_filters)},
      {"embedding_dim", number(&TrainConfig::embedding_dim)},
      {"lstm_dim", number(&TrainConfig::lstm_dim)},
      {"key_dim", number(&TrainConfig::key_dim)},
      {"eval_trials_per_cell", number(&TrainConfig::eval_trials_per_cell)},
      {"eval_zipfian_trials", number(&TrainConfig::eval_zipfian_trials)},
      {"eval_seed", number(&TrainConfig::eval_seed)},
      {"eval_sample_actions", flag(&TrainConfig::eval_sample_actions)},
  };
  return table;
}

}  // namespace

std::string to_string(Mode mode) {
  switch (mode) {
    case Mode::impala_only: return "impala_only";
    case Mode::impala_mem: return "impala_mem";
    case Mode::impala_mem_contrastive_uniform: return "impala_mem_contrastive_uniform";
    case Mode::full: return "full";
  }
  return "?";
}

Mode parse_mode(const std::string& name) {
  for (Mode m : {Mode::impala_only, Mode::impala_mem, Mode::impala_mem_contrastive_uniform, Mode::full}) {
    if (to_string(m) == name) return m;
  }
  throw ConfigError("config: unknown mode '" + name +
                    "' (expected impala_only, impala_mem, impala_mem_contrastive_uniform or full)");
}

void set_config_value(TrainConfig& config, const std::string& key, const std::string& value) {
  auto it = fields().find(key);
  if (it == fields().end()) throw ConfigError("config: unknown key '" + key + "'");
  it->second.set(config, key, value);
}

TrainConfig parse_config(const std::string& text) {
  TrainConfig config;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    set_config_value(config, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  config.validate();
  return config;
}

TrainConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string TrainConfig::to_text() const {
  std::ostringstream os;
  for (const auto& [key, field] : fields()) os << key << " = " << field.get(*this) << '\n';
  return os.str();
}

void TrainConfig::validate() const {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError("config: " + what);
  };
  require(n_maps >= 1 && n_objects >= 1, "n_maps and n_objects must be >= 1");
  require(grid_rows >= 3 && grid_cols >= 3, "grid must be at least 3x3");
  require(wall_density >= 0 && wall_density < 1, "wall_density must be in [0, 1)");
  require(map_exponent >= 0 && object_exponent >= 0, "Zipf exponents must be >= 0");
  require(step_limit >= 1 && action_repeats >= 1, "step_limit and action_repeats must be >= 1");
  require(n_actors >= 1 && unroll_length >= 1, "n_actors and unroll_length must be >= 1");
  require(discount >= 0 && discount <= 1, "discount must be in [0, 1]");
  require(learning_rate > 0, "learning_rate must be positive");
  require(rmsprop_decay >= 0 && rmsprop_decay < 1, "rmsprop_decay must be in [0, 1)");
  require(rmsprop_eps > 0, "rmsprop_eps must be positive");
  require(grad_clip_norm >= 0, "grad_clip_norm must be >= 0");
  require(hop >= 1 && t_f >= 1 && t_k >= 1, "hop, t_f and t_k must be >= 1");
  require(familiarity_capacity >= 2 && mem_capacity >= 1, "buffer capacities too small");
  require(beta >= 0 && beta < 1, "beta must be in [0, 1)");
  require(tau > 0 && knn_eps > 0 && knn_k >= 1, "tau, knn_eps must be positive and knn_k >= 1");
  require(contrastive_batch >= 2, "contrastive_batch must be >= 2");
  require(sigma >= 0 && cutout_min >= 0 && cutout_max <= 1 && cutout_min <= cutout_max, "bad augmentation settings");
  require(contrastive_weight >= 0, "contrastive_weight must be >= 0");
  require(eval_trials_per_cell >= 1 && eval_zipfian_trials >= 1, "evaluation trial counts must be >= 1");
  require(embedding_dim >= 1 && lstm_dim >= 1 && key_dim >= 1 && conv1_filters >= 1 && conv2_filters >= 1,
          "network widths must be >= 1");
}

std::size_t TrainConfig::learner_steps() const {
  const std::uint64_t per = n_actors * unroll_length;
  return static_cast<std::size_t>((env_steps + per - 1) / per);
}

AgentArch TrainConfig::arch() const {
  AgentArch a;
  a.conv1_filters = conv1_filters;
  a.conv2_filters = conv2_filters;
  a.embedding_dim = embedding_dim;
  a.lstm_dim = lstm_dim;
  a.key_dim = key_dim;
  a.n_actions = static_cast<std::size_t>(n_actions());
  return a;
}

env::EnvConfig TrainConfig::env_config() const { return {env, step_limit, action_repeats}; }

env::MapGenConfig TrainConfig::map_config() const {
  env::MapGenConfig m;
  m.rows = grid_rows;
  m.cols = grid_cols;
  m.wall_density = wall_density;
  return m;
}

memory::FamiliarityConfig TrainConfig::familiarity_config() const {
  memory::FamiliarityConfig f;
  f.capacity = familiarity_capacity;
  f.beta = beta;
  f.tau = tau;
  f.minibatch = contrastive_batch;
  f.augment = {sigma, cutout_min, cutout_max};
  f.key_dim = key_dim;
  f.p_dim = embedding_dim;
  f.h_dim = lstm_dim;
  return f;
}

memory::MemConfig TrainConfig::mem_config() const { return {mem_capacity, embedding_dim, lstm_dim, key_dim}; }

RlLossConfig TrainConfig::loss_config() const { return {discount, baseline_loss_scale, entropy_cost, vtrace}; }

}  // namespace zipfmem::agent
