#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "zipfmem/agent/agent.hpp"
#include "zipfmem/agent/loss.hpp"
#include "zipfmem/env/environment.hpp"
#include "zipfmem/env/zipf.hpp"
#include "zipfmem/memory/familiarity.hpp"

namespace zipfmem::agent {

enum class Mode { impala_only, impala_mem, impala_mem_contrastive_uniform, full };

std::string to_string(Mode mode);
Mode parse_mode(const std::string& name);

// Everything a training or evaluation run needs. Text form is one
// "key = value" per line; '#' starts a comment.
struct TrainConfig {
  // environment
  env::EnvKind env = env::EnvKind::gridworld;
  int n_maps = 5, n_objects = 5;
  int grid_rows = 11, grid_cols = 11;
  double wall_density = 0.1;
  double map_exponent = 2.0, object_exponent = 2.0;
  int step_limit = 100;
  int action_repeats = 1;
  std::uint64_t map_seed = 0;

  // training
  Mode mode = Mode::full;
  std::uint64_t seed = 1;
  std::uint64_t env_steps = 200000;
  std::size_t n_actors = 8;
  std::size_t unroll_length = 32;
  double discount = 0.99;
  double baseline_loss_scale = 0.5;
  double entropy_cost = 0.01;
  double contrastive_weight = 0.5;
  double learning_rate = 3e-4;
  double rmsprop_decay = 0.99;
  double rmsprop_eps = 1e-6;
  double grad_clip_norm = 40.0;  // 0 disables
  bool vtrace = false;

  // familiarity buffer and MEM
  std::size_t hop = 16;
  std::size_t t_f = 8;
  std::size_t t_k = 16;
  std::size_t familiarity_capacity = 1024;
  std::size_t mem_capacity = 1024;
  double beta = 0.97;
  double tau = 0.5;
  std::size_t contrastive_batch = 256;
  std::size_t knn_k = 16;
  double knn_eps = 1e-3;
  double sigma = 0.05;
  double cutout_min = 0.1, cutout_max = 0.3;
  bool refresh_keys_on_transfer = false;
  bool dump_momentum = false;

  // network
  std::size_t conv1_filters = 16, conv2_filters = 32;
  std::size_t embedding_dim = 128, lstm_dim = 128, key_dim = 64;

  // evaluation
  int eval_trials_per_cell = 50;
  std::size_t eval_zipfian_trials = 1000;
  std::uint64_t eval_seed = 7;
  bool eval_sample_actions = false;  // argmax unless set

  // outputs
  std::string run_dir = "run";

  void validate() const;
  std::size_t learner_steps() const;
  int n_actions() const { return env == env::EnvKind::gridworld ? 4 : 5; }

  AgentArch arch() const;
  env::EnvConfig env_config() const;
  env::MapGenConfig map_config() const;
  env::ZipfParams map_zipf() const { return {n_maps, map_exponent}; }
  env::ZipfParams object_zipf() const { return {n_objects, object_exponent}; }
  memory::FamiliarityConfig familiarity_config() const;
  memory::MemConfig mem_config() const;
  RlLossConfig loss_config() const;
  RetrievalSettings retrieval() const { return {knn_k, knn_eps}; }

  std::string to_text() const;
};

TrainConfig parse_config(const std::string& text);
TrainConfig load_config(const std::filesystem::path& path);
// Applies one "key=value" override; throws ConfigError on unknown keys.
void set_config_value(TrainConfig& config, const std::string& key, const std::string& value);

}  // namespace zipfmem::agent
