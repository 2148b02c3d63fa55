#include "zipfmem/nn/optim.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "zipfmem/errors.hpp"

namespace zipfmem::nn {

template <typename T>
void rmsprop_update(std::span<T> param, std::span<const T> grad, std::span<T> mean_square,
                    const RmsPropConfig& config) {
  if (!(config.learning_rate > 0) || !(config.decay >= 0 && config.decay < 1) || !(config.eps > 0 || config.eps == 0)) {
    throw std::invalid_argument("rmsprop_update: invalid hyperparameters");
  }
  if (param.size() != grad.size() || param.size() != mean_square.size()) {
    throw std::invalid_argument("rmsprop_update: size mismatch");
  }
  for (std::size_t i = 0; i < grad.size(); ++i) {
    if (!std::isfinite(grad[i])) throw TrainingError("rmsprop_update: non-finite gradient at index " + std::to_string(i));
  }
  const T decay = static_cast<T>(config.decay);
  const T lr = static_cast<T>(config.learning_rate);
  const T eps = static_cast<T>(config.eps);
  for (std::size_t i = 0; i < param.size(); ++i) {
    mean_square[i] = decay * mean_square[i] + (T{1} - decay) * grad[i] * grad[i];
    const T denom = std::sqrt(mean_square[i]) + eps;
    if (denom > T{0}) param[i] -= lr * grad[i] / denom;
  }
}

template <typename T>
RmsProp<T>::RmsProp(NamedTensors<T> params, RmsPropConfig config) : params_(std::move(params)), config_(config) {
  if (!(config_.learning_rate > 0) || !(config_.decay >= 0 && config_.decay < 1) || !(config_.eps > 0)) {
    throw std::invalid_argument("RmsProp: requires lr > 0, 0 <= decay < 1, eps > 0");
  }
  for (const auto& [name, p] : params_) mean_squares_.emplace_back(p.numel(), T{0});
}

template <typename T>
void RmsProp<T>::step() {
  for (const auto& [name, p] : params_) {
    for (T g : p.grad()) {
      if (!std::isfinite(g)) throw TrainingError("non-finite gradient in parameter '" + name + "'");
    }
  }
  for (std::size_t k = 0; k < params_.size(); ++k) {
    auto& p = params_[k].second;
    if (!p.has_grad()) continue;
    rmsprop_update<T>(p.mutable_data(), p.grad(), mean_squares_[k], config_);
  }
  ++steps_;
}

template <typename T>
void RmsProp<T>::zero_grad() {
  for (auto& [name, p] : params_) p.zero_grad();
}

template <typename T>
double RmsProp<T>::grad_norm() const {
  double total = 0;
  for (const auto& [name, p] : params_) {
    for (T g : p.grad()) total += static_cast<double>(g) * static_cast<double>(g);
  }
  return std::sqrt(total);
}

template <typename T>
double RmsProp<T>::clip_grad_norm(double max_norm) {
  const double norm = grad_norm();
  if (std::isfinite(norm) && norm > max_norm && norm > 0) {
    const T factor = static_cast<T>(max_norm / norm);
    for (auto& [name, p] : params_) {
      if (!p.has_grad()) continue;
      for (auto& g : p.mutable_grad()) g *= factor;
    }
  }
  return norm;
}

template void rmsprop_update(std::span<float>, std::span<const float>, std::span<float>, const RmsPropConfig&);
template void rmsprop_update(std::span<double>, std::span<const double>, std::span<double>, const RmsPropConfig&);
template class RmsProp<float>;
template class RmsProp<double>;

}  // namespace zipfmem::nn
