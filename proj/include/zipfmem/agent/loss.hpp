#pragma once

#include <cstdint>
#include <vector>

#include "zipfmem/nn/tensor.hpp"

namespace zipfmem::agent {

// Unrolled batch in time-major order: row t * B + b is step t of actor b.
template <typename T>
struct RlBatch {
  std::size_t steps = 0, actors = 0;
  nn::Tensor<T> logits;  // [steps*actors x n_actions], learner forward
  nn::Tensor<T> values;  // [steps*actors]
  std::vector<int> actions;
  std::vector<double> rewards;
  std::vector<std::uint8_t> dones;          // episode ended after this step
  std::vector<double> bootstrap;            // [actors] value after the last step
  std::vector<double> behavior_log_probs;   // needed only with vtrace
};

struct RlLossConfig {
  double discount = 0.99;
  double baseline_loss_scale = 0.5;
  double entropy_cost = 0.01;
  bool vtrace = false;  // clipped importance weights, rho_bar = c_bar = 1
};

template <typename T>
struct RlLoss {
  nn::Tensor<T> total;
  double policy = 0, value = 0, entropy = 0;  // the three summed terms
  std::vector<double> targets;                // value targets per row
  std::vector<double> importance_ratios;      // pi / mu per row (vtrace only)
};

// Sum over steps of: -log pi(a) * A  +  scale * (G - V)^2  -  entropy_cost * H(pi)
// with n-step discounted returns G cut at episode ends and bootstrapped after
// the window; A = G - V is a constant. With vtrace the targets and advantages
// use clipped importance weights instead.
template <typename T>
RlLoss<T> compute_rl_loss(const RlBatch<T>& batch, const RlLossConfig& config);

// L_impala + gamma * L_contrastive.
template <typename T>
nn::Tensor<T> total_loss(const nn::Tensor<T>& l_impala, const nn::Tensor<T>& l_contrastive, double gamma);

// 1-based indices 1, 1 + hp, ..., 1 + floor((k - 1) / hp) * hp.
std::vector<std::size_t> subsample_trajectory(std::size_t k, std::size_t hp);

}  // namespace zipfmem::agent
