#pragma once

#include <random>
#include <string>
#include <utility>
#include <vector>

#include "zipfmem/nn/tensor.hpp"

namespace zipfmem::nn {

template <typename T>
using NamedTensors = std::vector<std::pair<std::string, Tensor<T>>>;

// Leaf tensor with values drawn from U(-bound, bound).
template <typename T>
Tensor<T> uniform_param(Shape shape, T bound, std::mt19937_64& rng);

// He-style bound sqrt(6 / fan_in), for layers followed by a ReLU.
double he_bound(std::size_t fan_in);
// 1 / sqrt(fan_in), for linear read-outs.
double lecun_bound(std::size_t fan_in);

// Gate rows are stacked as [input, forget, candidate, output], each n_h wide.
template <typename T>
struct LstmParams {
  Tensor<T> w_input;   // [4 n_h x n_x]
  Tensor<T> w_hidden;  // [4 n_h x n_h]
  Tensor<T> bias;      // [4 n_h]

  std::size_t hidden_size() const { return bias.dim(0) / 4; }
  std::size_t input_size() const { return w_input.dim(1); }
};

template <typename T>
LstmParams<T> make_lstm_params(std::size_t n_x, std::size_t n_h, std::mt19937_64& rng);

template <typename T>
struct LstmState {
  Tensor<T> h;
  Tensor<T> c;
};

// One LSTM step. x is [n_x] or [B x n_x]; h_prev and c_prev match x's rank
// with n_h columns.
template <typename T>
LstmState<T> lstm_step(const Tensor<T>& x, const Tensor<T>& h_prev, const Tensor<T>& c_prev,
                       const LstmParams<T>& params);

}  // namespace zipfmem::nn
