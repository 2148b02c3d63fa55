#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "zipfmem/nn/layers.hpp"

namespace zipfmem::nn {

struct RmsPropConfig {
  double learning_rate = 3e-4;
  double decay = 0.99;
  double eps = 1e-6;
};

// In-place update of one parameter block:
//   v <- decay * v + (1 - decay) * g^2
//   p <- p - lr * g / (sqrt(v) + eps)
// Throws TrainingError when any gradient entry is non-finite; nothing is
// modified in that case.
template <typename T>
void rmsprop_update(std::span<T> param, std::span<const T> grad, std::span<T> mean_square,
                    const RmsPropConfig& config);

template <typename T>
class RmsProp {
 public:
  RmsProp(NamedTensors<T> params, RmsPropConfig config);

  // Applies one update to every parameter. Parameters without a gradient are
  // treated as having a zero gradient.
  void step();
  void zero_grad();
  // Rescales all gradients so their joint L2 norm is at most max_norm;
  // returns the norm before clipping.
  double clip_grad_norm(double max_norm);
  double grad_norm() const;

  const NamedTensors<T>& params() const { return params_; }
  const std::vector<std::vector<T>>& mean_squares() const { return mean_squares_; }
  std::vector<std::vector<T>>& mutable_mean_squares() { return mean_squares_; }
  std::uint64_t step_count() const { return steps_; }
  void set_step_count(std::uint64_t steps) { steps_ = steps; }
  const RmsPropConfig& config() const { return config_; }

 private:
  NamedTensors<T> params_;
  RmsPropConfig config_;
  std::vector<std::vector<T>> mean_squares_;
  std::uint64_t steps_ = 0;
};

}  // namespace zipfmem::nn
