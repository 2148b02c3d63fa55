#include "zipfmem/agent/loss.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "zipfmem/errors.hpp"
#include "zipfmem/nn/ops.hpp"

namespace zipfmem::agent {

template <typename T>
RlLoss<T> compute_rl_loss(const RlBatch<T>& batch, const RlLossConfig& config) {
  const std::size_t S = batch.steps, B = batch.actors, N = S * B;
  if (N == 0) throw std::invalid_argument("compute_rl_loss: empty batch");
  if (batch.logits.rank() != 2 || batch.logits.dim(0) != N || batch.values.numel() != N || batch.actions.size() != N ||
      batch.rewards.size() != N || batch.dones.size() != N || batch.bootstrap.size() != B) {
    throw std::invalid_argument("compute_rl_loss: inconsistent batch sizes");
  }
  if (!(config.discount >= 0 && config.discount <= 1)) throw std::invalid_argument("compute_rl_loss: bad discount");
  const std::size_t A = batch.logits.dim(1);
  const auto logp = nn::log_softmax(batch.logits);
  const auto values = batch.values.data();

  RlLoss<T> out;
  out.targets.assign(N, 0.0);
  std::vector<T> advantage(N);
  if (!config.vtrace) {
    for (std::size_t b = 0; b < B; ++b) {
      double g = batch.bootstrap[b];
      for (std::size_t t = S; t-- > 0;) {
        const std::size_t i = t * B + b;
        g = batch.rewards[i] + (batch.dones[i] ? 0.0 : config.discount * g);
        out.targets[i] = g;
        advantage[i] = static_cast<T>(g - values[i]);
      }
    }
  } else {
    if (batch.behavior_log_probs.size() != N) throw std::invalid_argument("compute_rl_loss: vtrace needs behavior log probs");
    out.importance_ratios.resize(N);
    for (std::size_t b = 0; b < B; ++b) {
      double next_vs = batch.bootstrap[b], next_v = batch.bootstrap[b];
      for (std::size_t t = S; t-- > 0;) {
        const std::size_t i = t * B + b;
        const double ratio = std::exp(static_cast<double>(logp.at(i * A + batch.actions[i])) - batch.behavior_log_probs[i]);
        out.importance_ratios[i] = ratio;
        const double rho = std::min(1.0, ratio), c = std::min(1.0, ratio);
        const double disc = batch.dones[i] ? 0.0 : config.discount;
        const double v = values[i];
        const double delta = rho * (batch.rewards[i] + disc * next_v - v);
        const double vs = v + delta + disc * c * (next_vs - next_v);
        advantage[i] = static_cast<T>(rho * (batch.rewards[i] + disc * next_vs - v));
        out.targets[i] = vs;
        next_vs = vs;
        next_v = v;
      }
    }
  }

  std::vector<T> targets(out.targets.begin(), out.targets.end());
  const nn::Tensor<T> adv({N}, std::move(advantage));
  const nn::Tensor<T> target({N}, std::move(targets));
  auto policy = nn::scale(nn::dot(nn::pick(logp, std::span<const int>(batch.actions)), adv), T(-1));
  auto value = nn::scale(nn::sum_squares(nn::sub(nn::reshape(batch.values, {N}), target)),
                         static_cast<T>(config.baseline_loss_scale));
  // sum of p log p is the negative entropy
  auto neg_entropy = nn::sum(nn::mul(nn::softmax(batch.logits), logp));
  auto entropy = nn::scale(neg_entropy, static_cast<T>(config.entropy_cost));
  out.total = nn::add(nn::add(policy, value), entropy);
  out.policy = static_cast<double>(policy.item());
  out.value = static_cast<double>(value.item());
  out.entropy = static_cast<double>(entropy.item());
  if (!std::isfinite(static_cast<double>(out.total.item()))) {
    throw TrainingError("compute_rl_loss: non-finite loss (policy " + std::to_string(out.policy) + ", value " +
                        std::to_string(out.value) + ", entropy " + std::to_string(out.entropy) + ")");
  }
  return out;
}

template <typename T>
nn::Tensor<T> total_loss(const nn::Tensor<T>& l_impala, const nn::Tensor<T>& l_contrastive, double gamma) {
  if (l_impala.numel() != 1 || l_contrastive.numel() != 1) throw std::invalid_argument("total_loss: losses must be scalars");
  if (gamma == 0) return l_impala;
  return nn::add(l_impala, nn::scale(l_contrastive, static_cast<T>(gamma)));
}

std::vector<std::size_t> subsample_trajectory(std::size_t k, std::size_t hp) {
  if (k < 1 || hp < 1) throw std::invalid_argument("subsample_trajectory: k and hp must be >= 1");
  std::vector<std::size_t> idx;
  for (std::size_t i = 1; i <= k; i += hp) idx.push_back(i);
  return idx;
}

template RlLoss<float> compute_rl_loss(const RlBatch<float>&, const RlLossConfig&);
template RlLoss<double> compute_rl_loss(const RlBatch<double>&, const RlLossConfig&);
template nn::Tensor<float> total_loss(const nn::Tensor<float>&, const nn::Tensor<float>&, double);
template nn::Tensor<double> total_loss(const nn::Tensor<double>&, const nn::Tensor<double>&, double);

}  // namespace zipfmem::agent
