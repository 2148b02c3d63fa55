#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "zipfmem/agent/agent.hpp"
#include "zipfmem/env/environment.hpp"
#include "zipfmem/env/maps.hpp"
#include "zipfmem/env/zipf.hpp"
#include "zipfmem/memory/episodic.hpp"
#include "zipfmem/rng.hpp"

namespace zipfmem::harness {

using Matrix = std::vector<std::vector<double>>;  // [map][object]

struct EvalReport {
  double zipfian_accuracy = 0;
  double uniform_accuracy = 0;
  double rare_accuracy = 0;
  Matrix matrix;
  int trials_per_cell = 0;
  std::size_t zipfian_trials = 0;
};

// One running trial as seen by a policy.
struct EvalSlot {
  std::size_t slot = 0;
  const env::Environment* env = nullptr;
  const env::Observation* observation = nullptr;
  Rng* rng = nullptr;  // seeded per trial
};

// Acts for a batch of concurrently running trials. reset() is called when a
// slot starts a new trial; observe() after every step of that slot.
class EvalPolicy {
 public:
  virtual ~EvalPolicy() = default;
  virtual std::size_t batch_size() const { return 32; }
  virtual void reset(std::size_t slot) = 0;
  virtual std::vector<int> act(std::span<const EvalSlot> slots) = 0;
  virtual void observe(std::size_t /*slot*/, int /*action*/, double /*reward*/) {}
};

// The trained agent: argmax over logits unless sample is set.
class AgentPolicy final : public EvalPolicy {
 public:
  AgentPolicy(const agent::AgentNet<float>& net, const memory::EpisodicMemory<float>* mem,
              agent::RetrievalSettings retrieval, bool sample, std::size_t batch = 32);
  std::size_t batch_size() const override { return batch_; }
  void reset(std::size_t slot) override;
  std::vector<int> act(std::span<const EvalSlot> slots) override;
  void observe(std::size_t slot, int action, double reward) override;

 private:
  struct State {
    std::vector<float> h, c;
    int prev_action = -1;
    float prev_reward = 0;
  };
  State& state(std::size_t slot);

  const agent::AgentNet<float>& net_;
  const memory::EpisodicMemory<float>* mem_;
  agent::RetrievalSettings retrieval_;
  bool sample_;
  std::size_t batch_;
  std::vector<State> states_;
};

// Runs every trial to completion; result[i] is true iff trial i succeeded.
// Trial i draws its policy randomness from mix_seed(seed, i), so results do
// not depend on how trials are batched.
std::vector<bool> run_trials(EvalPolicy& policy, const std::vector<env::MapSpec>& maps,
                             const env::EnvConfig& env_config, const std::vector<env::TrialSpec>& trials,
                             std::uint64_t seed);

// Success fraction for every (map, object) cell.
Matrix eval_uniform(EvalPolicy& policy, const std::vector<env::MapSpec>& maps, int n_objects,
                    const env::EnvConfig& env_config, int trials_per_cell, std::uint64_t seed);

// Success fraction over n_trials drawn from the training distribution.
double eval_zipfian(EvalPolicy& policy, const std::vector<env::MapSpec>& maps, const env::ZipfParams& map_zipf,
                    const env::ZipfParams& object_zipf, const env::EnvConfig& env_config, std::size_t n_trials,
                    std::uint64_t seed);

double matrix_mean(const Matrix& matrix);
// Mean over the rarest ceil(20%) maps x rarest ceil(20%) objects.
double eval_rare(const Matrix& matrix, int n_maps, int n_objects);
std::size_t rare_count(int n);
// sum_ij pmf_map(i) pmf_obj(j) matrix[i][j]
double pmf_weighted(const Matrix& matrix, const env::ZipfParams& map_zipf, const env::ZipfParams& object_zipf);

// CSV with map/object id headers (4 decimals) and an 8-bit PGM, one pixel per cell.
void emit_heatmap(const Matrix& matrix, const std::filesystem::path& csv_path, const std::filesystem::path& pgm_path);
Matrix read_heatmap_csv(const std::filesystem::path& csv_path);

std::string format_report(const EvalReport& report);

}  // namespace zipfmem::harness
