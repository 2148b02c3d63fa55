#include "zipfmem/harness/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "zipfmem/memory/augment.hpp"
#include "zipfmem/nn/ops.hpp"

namespace zipfmem::harness {

AgentPolicy::AgentPolicy(const agent::AgentNet<float>& net, const memory::EpisodicMemory<float>* mem,
                         agent::RetrievalSettings retrieval, bool sample, std::size_t batch)
    : net_(net), mem_(mem), retrieval_(retrieval), sample_(sample), batch_(std::max<std::size_t>(batch, 1)) {}

AgentPolicy::State& AgentPolicy::state(std::size_t slot) {
  if (slot >= states_.size()) states_.resize(slot + 1);
  return states_[slot];
}

void AgentPolicy::reset(std::size_t slot) {
  auto& s = state(slot);
  s.h.assign(net_.arch().lstm_dim, 0.0f);
  s.c.assign(net_.arch().lstm_dim, 0.0f);
  s.prev_action = -1;
  s.prev_reward = 0;
}

std::vector<int> AgentPolicy::act(std::span<const EvalSlot> slots) {
  const std::size_t B = slots.size(), H = net_.arch().lstm_dim, A = net_.arch().n_actions;
  const std::size_t side = net_.arch().image_size;
  std::vector<float> images, hs, cs, pr;
  std::vector<int> pa;
  images.reserve(B * 3 * side * side);
  for (const auto& slot : slots) {
    const auto& s = state(slot.slot);
    const auto im = memory::to_float_image<float>(*slot.observation);
    images.insert(images.end(), im.data.begin(), im.data.end());
    hs.insert(hs.end(), s.h.begin(), s.h.end());
    cs.insert(cs.end(), s.c.begin(), s.c.end());
    pa.push_back(s.prev_action);
    pr.push_back(s.prev_reward);
  }
  auto out = agent::act<float>(net_, nn::Tensor<float>({B, net_.arch().channels, side, side}, std::move(images)), pa,
                               pr, nn::Tensor<float>({B, H}, std::move(hs)), nn::Tensor<float>({B, H}, std::move(cs)),
                               mem_, retrieval_, nullptr);
  std::vector<int> actions = out.action;
  if (sample_) {
    const auto logp = nn::log_softmax(out.net.logits);
    for (std::size_t b = 0; b < B; ++b) {
      if (slots[b].rng == nullptr) throw std::invalid_argument("AgentPolicy: sampling needs a per-trial rng");
      const double u = uniform01(*slots[b].rng);
      double acc = 0;
      int a = static_cast<int>(A) - 1;
      for (std::size_t j = 0; j < A; ++j) {
        acc += std::exp(static_cast<double>(logp.at(b * A + j)));
        if (u < acc) {
          a = static_cast<int>(j);
          break;
        }
      }
      actions[b] = a;
    }
  }
  for (std::size_t b = 0; b < B; ++b) {
    auto& s = state(slots[b].slot);
    const auto h = out.net.h.data().subspan(b * H, H);
    const auto c = out.net.c.data().subspan(b * H, H);
    s.h.assign(h.begin(), h.end());
    s.c.assign(c.begin(), c.end());
  }
  return actions;
}

void AgentPolicy::observe(std::size_t slot, int action, double reward) {
  auto& s = state(slot);
  s.prev_action = action;
  s.prev_reward = static_cast<float>(reward);
}

std::vector<bool> run_trials(EvalPolicy& policy, const std::vector<env::MapSpec>& maps,
                             const env::EnvConfig& env_config, const std::vector<env::TrialSpec>& trials,
                             std::uint64_t seed) {
  struct Running {
    std::unique_ptr<env::Environment> env;
    env::Observation obs;
    Rng rng;
    std::size_t trial = 0;
    bool active = false;
  };
  for (const auto& t : trials) {
    if (t.map_id < 0 || static_cast<std::size_t>(t.map_id) >= maps.size()) {
      throw std::out_of_range("run_trials: map id " + std::to_string(t.map_id) + " out of range");
    }
  }
  std::vector<bool> result(trials.size(), false);
  const std::size_t n_slots = std::min(policy.batch_size(), trials.size());
  std::vector<Running> slots(n_slots);
  std::size_t next = 0;
  auto start = [&](std::size_t i) {
    auto& s = slots[i];
    if (next >= trials.size()) {
      s.active = false;
      return;
    }
    s.trial = next++;
    const auto& spec = trials[s.trial];
    s.obs = s.env->reset(maps[static_cast<std::size_t>(spec.map_id)], spec.object_id);
    s.rng.seed(mix_seed(seed, s.trial));
    s.active = true;
    policy.reset(i);
  };
  for (std::size_t i = 0; i < n_slots; ++i) {
    slots[i].env = env::make_environment(env_config);
    start(i);
  }
  std::vector<EvalSlot> batch;
  while (true) {
    batch.clear();
    for (std::size_t i = 0; i < n_slots; ++i) {
      if (slots[i].active) batch.push_back({i, slots[i].env.get(), &slots[i].obs, &slots[i].rng});
    }
    if (batch.empty()) break;
    const auto actions = policy.act(batch);
    if (actions.size() != batch.size()) throw std::logic_error("run_trials: policy returned the wrong number of actions");
    for (std::size_t j = 0; j < batch.size(); ++j) {
      auto& s = slots[batch[j].slot];
      auto res = s.env->step(actions[j]);
      policy.observe(batch[j].slot, actions[j], res.reward);
      if (res.done) {
        result[s.trial] = s.env->status() == env::TrialStatus::success;
        start(batch[j].slot);
      } else {
        s.obs = std::move(res.observation);
      }
    }
  }
  return result;
}

Matrix eval_uniform(EvalPolicy& policy, const std::vector<env::MapSpec>& maps, int n_objects,
                    const env::EnvConfig& env_config, int trials_per_cell, std::uint64_t seed) {
  if (trials_per_cell < 1) throw std::invalid_argument("eval_uniform: trials_per_cell must be >= 1");
  std::vector<env::TrialSpec> trials;
  for (std::size_t m = 0; m < maps.size(); ++m) {
    for (int o = 0; o < n_objects; ++o) {
      for (int t = 0; t < trials_per_cell; ++t) trials.push_back({static_cast<int>(m), o});
    }
  }
  const auto ok = run_trials(policy, maps, env_config, trials, seed);
  Matrix matrix(maps.size(), std::vector<double>(static_cast<std::size_t>(n_objects), 0.0));
  for (std::size_t i = 0; i < trials.size(); ++i) {
    if (ok[i]) matrix[static_cast<std::size_t>(trials[i].map_id)][static_cast<std::size_t>(trials[i].object_id)] += 1;
  }
  for (auto& row : matrix) {
    for (auto& v : row) v /= trials_per_cell;
  }
  return matrix;
}

double eval_zipfian(EvalPolicy& policy, const std::vector<env::MapSpec>& maps, const env::ZipfParams& map_zipf,
                    const env::ZipfParams& object_zipf, const env::EnvConfig& env_config, std::size_t n_trials,
                    std::uint64_t seed) {
  if (n_trials == 0) throw std::invalid_argument("eval_zipfian: n_trials must be >= 1");
  const env::TrialSampler sampler(map_zipf, object_zipf);
  Rng rng(mix_seed(seed, 0));
  std::vector<env::TrialSpec> trials(n_trials);
  for (auto& t : trials) t = sampler.sample(rng);
  const auto ok = run_trials(policy, maps, env_config, trials, mix_seed(seed, 1));
  return static_cast<double>(std::count(ok.begin(), ok.end(), true)) / static_cast<double>(n_trials);
}

double matrix_mean(const Matrix& matrix) {
  double sum = 0;
  std::size_t n = 0;
  for (const auto& row : matrix) {
    for (double v : row) {
      sum += v;
      ++n;
    }
  }
  if (n == 0) throw std::invalid_argument("matrix_mean: empty matrix");
  return sum / static_cast<double>(n);
}

std::size_t rare_count(int n) {
  if (n < 1) throw std::invalid_argument("rare_count: n must be >= 1");
  // integer ceil(n / 5)
  return static_cast<std::size_t>((n + 4) / 5);
}

double eval_rare(const Matrix& matrix, int n_maps, int n_objects) {
  if (matrix.size() != static_cast<std::size_t>(n_maps)) throw std::invalid_argument("eval_rare: matrix row count");
  const std::size_t rm = rare_count(n_maps), ro = rare_count(n_objects);
  double sum = 0;
  for (std::size_t i = matrix.size() - rm; i < matrix.size(); ++i) {
    if (matrix[i].size() != static_cast<std::size_t>(n_objects)) throw std::invalid_argument("eval_rare: matrix column count");
    for (std::size_t j = matrix[i].size() - ro; j < matrix[i].size(); ++j) sum += matrix[i][j];
  }
  return sum / static_cast<double>(rm * ro);
}

double pmf_weighted(const Matrix& matrix, const env::ZipfParams& map_zipf, const env::ZipfParams& object_zipf) {
  const auto pm = env::zipf_pmf(map_zipf), po = env::zipf_pmf(object_zipf);
  if (matrix.size() != pm.size()) throw std::invalid_argument("pmf_weighted: matrix shape");
  double sum = 0;
  for (std::size_t i = 0; i < pm.size(); ++i) {
    if (matrix[i].size() != po.size()) throw std::invalid_argument("pmf_weighted: matrix shape");
    for (std::size_t j = 0; j < po.size(); ++j) sum += pm[i] * po[j] * matrix[i][j];
  }
  return sum;
}

void emit_heatmap(const Matrix& matrix, const std::filesystem::path& csv_path, const std::filesystem::path& pgm_path) {
  if (matrix.empty() || matrix.front().empty()) throw std::invalid_argument("emit_heatmap: empty matrix");
  const std::size_t cols = matrix.front().size();
  std::ofstream csv(csv_path);
  if (!csv) throw std::runtime_error("cannot write '" + csv_path.string() + "'");
  csv << "map";
  for (std::size_t j = 0; j < cols; ++j) csv << ",object_" << j;
  csv << '\n';
  char buf[32];
  for (std::size_t i = 0; i < matrix.size(); ++i) {
    if (matrix[i].size() != cols) throw std::invalid_argument("emit_heatmap: ragged matrix");
    csv << "map_" << i;
    for (double v : matrix[i]) {
      std::snprintf(buf, sizeof buf, ",%.4f", v);
      csv << buf;
    }
    csv << '\n';
  }
  if (!csv) throw std::runtime_error("write failed for '" + csv_path.string() + "'");

  std::ofstream pgm(pgm_path, std::ios::binary);
  if (!pgm) throw std::runtime_error("cannot write '" + pgm_path.string() + "'");
  pgm << "P5\n" << cols << ' ' << matrix.size() << "\n255\n";
  for (const auto& row : matrix) {
    for (double v : row) {
      const double clamped = std::clamp(v, 0.0, 1.0);
      pgm.put(static_cast<char>(static_cast<unsigned char>(std::floor(255.0 * clamped + 0.5))));
    }
  }
  if (!pgm) throw std::runtime_error("write failed for '" + pgm_path.string() + "'");
}

Matrix read_heatmap_csv(const std::filesystem::path& csv_path) {
  std::ifstream in(csv_path);
  if (!in) throw std::runtime_error("cannot read '" + csv_path.string() + "'");
  std::string line;
  std::getline(in, line);
  Matrix matrix;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string cell;
    std::getline(ss, cell, ',');
    std::vector<double> row;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    matrix.push_back(std::move(row));
  }
  return matrix;
}

std::string format_report(const EvalReport& r) {
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "zipfian_accuracy %.4f\nuniform_accuracy %.4f\nrare_accuracy %.4f\ntrials_per_cell %d\nzipfian_trials %zu\n",
                r.zipfian_accuracy, r.uniform_accuracy, r.rare_accuracy, r.trials_per_cell, r.zipfian_trials);
  return buf;
}

}  // namespace zipfmem::harness
