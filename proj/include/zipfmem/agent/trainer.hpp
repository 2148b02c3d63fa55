#pragma once

#include <deque>
#include <filesystem>
#include <memory>
#include <optional>
#include <ostream>
#include <vector>

#include "zipfmem/agent/agent.hpp"
#include "zipfmem/agent/config.hpp"
#include "zipfmem/agent/loss.hpp"
#include "zipfmem/env/environment.hpp"
#include "zipfmem/memory/episodic.hpp"
#include "zipfmem/memory/familiarity.hpp"
#include "zipfmem/nn/optim.hpp"

namespace zipfmem::agent {

using Real = float;

struct MetricsRow {
  std::size_t learner_step = 0;
  std::uint64_t env_steps = 0;
  double mean_episode_return = 0;
  double zipfian_accuracy_estimate = 0;
  double l_impala = 0;
  double l_contrastive = 0;
  std::size_t mem_size = 0;
  std::size_t transfer_count = 0;
};

inline constexpr const char* kMetricsHeader =
    "learner_step,env_steps,mean_episode_return,zipfian_accuracy_estimate,L_impala,L_contrastive,mem_size,"
    "transfer_count";
std::string format_metrics(const MetricsRow& row);

// Diagnostics from the most recent learner step, for tests and logging.
struct StepDiagnostics {
  std::size_t familiarity_added = 0;
  bool contrastive_ran = false;
  bool transferred = false;
  double max_importance_ratio_error = 0;  // |pi/mu - 1| over the batch
  std::size_t episodes_finished = 0;
};

// Synchronous actor-learner loop. n_actors environments step in lockstep on
// one thread with the current parameters; each learner step collects one
// unroll per actor, then updates the familiarity buffer, the MEM and the
// parameters.
class Trainer {
 public:
  explicit Trainer(TrainConfig config);

  void step();
  // Runs the remaining learner steps, writing one metrics row per step.
  // momentum_dump gets the familiarity buffer's (lm, M) at each rare-state
  // transfer; mem_dump gets the MEM contents after each transfer. progress
  // gets a line every 50 steps.
  void train(std::ostream* metrics = nullptr, std::ostream* momentum_dump = nullptr,
             std::ostream* mem_dump = nullptr, std::ostream* progress = nullptr);

  const TrainConfig& config() const { return config_; }
  const AgentNet<Real>& agent() const { return *agent_; }
  const memory::EpisodicMemory<Real>& mem() const { return *mem_; }
  const memory::FamiliarityBuffer<Real>* familiarity() const { return fm_.get(); }
  const std::vector<env::MapSpec>& maps() const { return maps_; }
  const MetricsRow& last_metrics() const { return metrics_; }
  const StepDiagnostics& diagnostics() const { return diag_; }
  std::size_t learner_step() const { return learner_step_; }
  nn::RmsProp<Real>& optimizer() { return *optimizer_; }

  void save_checkpoint(const std::filesystem::path& path, bool include_familiarity) const;
  // Restores parameters, optimizer state, MEM and (if present) the
  // familiarity buffer. Actors start fresh episodes.
  void load_checkpoint(const std::filesystem::path& path);

 private:
  struct Actor {
    std::unique_ptr<env::Environment> env;
    memory::FloatImage<Real> image;
    std::vector<Real> h, c;
    int prev_action = -1;
    Real prev_reward = 0;
    std::uint64_t episode = 0, episode_step = 0;
    double episode_return = 0;
  };

  void start_episode(Actor& actor);
  bool uses_mem() const { return config_.mode != Mode::impala_only; }
  bool uses_contrastive() const {
    return config_.mode == Mode::full || config_.mode == Mode::impala_mem_contrastive_uniform;
  }
  void transfer();

  TrainConfig config_;
  std::vector<env::MapSpec> maps_;
  env::TrialSampler sampler_;
  std::unique_ptr<AgentNet<Real>> agent_;
  std::unique_ptr<nn::RmsProp<Real>> optimizer_;
  std::unique_ptr<memory::FamiliarityBuffer<Real>> fm_;
  std::unique_ptr<memory::EpisodicMemory<Real>> mem_;
  std::vector<Actor> actors_;
  Rng trial_rng_, action_rng_, contrastive_rng_, transfer_rng_;
  std::uint64_t next_episode_ = 0;
  std::size_t learner_step_ = 0;
  std::size_t transfers_ = 0;
  std::deque<double> recent_returns_;
  std::deque<int> recent_success_;
  MetricsRow metrics_;
  StepDiagnostics diag_;
  std::ostream* momentum_dump_ = nullptr;
  std::ostream* mem_dump_ = nullptr;
};

// Agent plus MEM restored from a checkpoint, for evaluation.
struct LoadedAgent {
  std::unique_ptr<AgentNet<Real>> agent;
  std::unique_ptr<memory::EpisodicMemory<Real>> mem;
  TrainConfig config;
};

LoadedAgent load_agent(const std::filesystem::path& checkpoint, const TrainConfig& config);

}  // namespace zipfmem::agent
