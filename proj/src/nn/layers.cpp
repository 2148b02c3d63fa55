#include "zipfmem/nn/layers.hpp"

#include <cmath>
#include <stdexcept>

#include "zipfmem/nn/ops.hpp"

namespace zipfmem::nn {

template <typename T>
Tensor<T> uniform_param(Shape shape, T bound, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-static_cast<double>(bound), static_cast<double>(bound));
  std::vector<T> values(numel(shape));
  for (auto& v : values) v = static_cast<T>(dist(rng));
  return Tensor<T>(std::move(shape), std::move(values), true);
}

double he_bound(std::size_t fan_in) { return std::sqrt(6.0 / static_cast<double>(fan_in)); }
double lecun_bound(std::size_t fan_in) { return 1.0 / std::sqrt(static_cast<double>(fan_in)); }

template <typename T>
LstmParams<T> make_lstm_params(std::size_t n_x, std::size_t n_h, std::mt19937_64& rng) {
  const T bound = static_cast<T>(lecun_bound(n_h));
  LstmParams<T> p;
  p.w_input = uniform_param<T>({4 * n_h, n_x}, bound, rng);
  p.w_hidden = uniform_param<T>({4 * n_h, n_h}, bound, rng);
  p.bias = Tensor<T>::zeros({4 * n_h}, true);
  return p;
}

template <typename T>
LstmState<T> lstm_step(const Tensor<T>& x, const Tensor<T>& h_prev, const Tensor<T>& c_prev,
                       const LstmParams<T>& params) {
  const std::size_t n_h = params.hidden_size();
  if (params.w_hidden.rank() != 2 || params.w_hidden.dim(0) != 4 * n_h || params.w_hidden.dim(1) != n_h) {
    throw std::invalid_argument("lstm_step: recurrent weight has shape " + shape_str(params.w_hidden.shape()));
  }
  if (h_prev.shape() != c_prev.shape() || h_prev.rank() != x.rank() || h_prev.shape().back() != n_h ||
      (x.rank() == 2 && x.dim(0) != h_prev.dim(0))) {
    throw std::invalid_argument("lstm_step: state shapes " + shape_str(h_prev.shape()) + "/" +
                                shape_str(c_prev.shape()) + " do not conform to input " + shape_str(x.shape()));
  }
  // affine() validates x against w_input.
  const Tensor<T> gates = x.rank() == 1 ? add(affine(x, params.w_input, params.bias),
                                              reshape(matmul_nt(reshape(h_prev, {1, n_h}), params.w_hidden), {4 * n_h}))
                                        : add(affine(x, params.w_input, params.bias), matmul_nt(h_prev, params.w_hidden));
  const auto input_gate = sigmoid(slice_cols(gates, 0, n_h));
  const auto forget_gate = sigmoid(slice_cols(gates, n_h, n_h));
  const auto candidate = tanh(slice_cols(gates, 2 * n_h, n_h));
  const auto output_gate = sigmoid(slice_cols(gates, 3 * n_h, n_h));
  auto c = add(mul(forget_gate, c_prev), mul(input_gate, candidate));
  auto h = mul(output_gate, tanh(c));
  return {std::move(h), std::move(c)};
}

template Tensor<float> uniform_param(Shape, float, std::mt19937_64&);
template Tensor<double> uniform_param(Shape, double, std::mt19937_64&);
template LstmParams<float> make_lstm_params(std::size_t, std::size_t, std::mt19937_64&);
template LstmParams<double> make_lstm_params(std::size_t, std::size_t, std::mt19937_64&);
template LstmState<float> lstm_step(const Tensor<float>&, const Tensor<float>&, const Tensor<float>&,
                                    const LstmParams<float>&);
template LstmState<double> lstm_step(const Tensor<double>&, const Tensor<double>&, const Tensor<double>&,
                                     const LstmParams<double>&);

}  // namespace zipfmem::nn
