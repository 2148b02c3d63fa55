#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "zipfmem/nn/tensor.hpp"

// Differentiable primitives. Unless stated otherwise, "row-wise" ops treat a
// rank-1 tensor [n] as a single row and a rank-2 tensor [r x c] as r rows, and
// all shape violations raise std::invalid_argument.
namespace zipfmem::nn {

template <typename T> Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> scale(const Tensor<T>& a, T factor);
template <typename T> Tensor<T> add_scalar(const Tensor<T>& a, T offset);

template <typename T> Tensor<T> relu(const Tensor<T>& a);
template <typename T> Tensor<T> sigmoid(const Tensor<T>& a);
template <typename T> Tensor<T> tanh(const Tensor<T>& a);
template <typename T> Tensor<T> exp(const Tensor<T>& a);
template <typename T> Tensor<T> log(const Tensor<T>& a);
template <typename T> Tensor<T> reciprocal(const Tensor<T>& a);

// Scalar reductions, result shape [1].
template <typename T> Tensor<T> sum(const Tensor<T>& a);
template <typename T> Tensor<T> mean(const Tensor<T>& a);
template <typename T> Tensor<T> dot(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> sum_squares(const Tensor<T>& a);

// [m x k] * [k x n]
template <typename T> Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b);
// [m x k] * [n x k]^T
template <typename T> Tensor<T> matmul_nt(const Tensor<T>& a, const Tensor<T>& b);

// y = W x + b for x of shape [n_in] or [batch x n_in]; W is [n_out x n_in].
template <typename T> Tensor<T> affine(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias);

// Valid (unpadded) cross-correlation. x is [C x H x W] or [N x C x H x W],
// kernels [F x C x kh x kw]; bias [F] may be an undefined tensor.
template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& kernels, const Tensor<T>& bias, std::size_t stride);
template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& kernels, std::size_t stride) {
  return conv2d(x, kernels, Tensor<T>{}, stride);
}

template <typename T> Tensor<T> reshape(const Tensor<T>& a, Shape shape);
template <typename T> Tensor<T> concat_cols(std::span<const Tensor<T>> parts);
template <typename T> Tensor<T> concat_rows(std::span<const Tensor<T>> parts);
template <typename T> Tensor<T> slice_cols(const Tensor<T>& a, std::size_t start, std::size_t count);
template <typename T> Tensor<T> slice_rows(const Tensor<T>& a, std::size_t start, std::size_t count);
// [B x d] -> [B*K x d], each row repeated K times consecutively.
template <typename T> Tensor<T> repeat_rows(const Tensor<T>& a, std::size_t times);

template <typename T> Tensor<T> softmax(const Tensor<T>& a);
template <typename T> Tensor<T> log_softmax(const Tensor<T>& a);
// out[r] = a[r, index[r]]
template <typename T> Tensor<T> pick(const Tensor<T>& a, std::span<const int> index);
// Rows scaled to unit L2 norm (norm computed as sqrt(|x|^2 + eps)).
template <typename T> Tensor<T> l2_normalize_rows(const Tensor<T>& a, T eps = T(1e-12));
// [r x c] -> [r] squared L2 norm of each row.
template <typename T> Tensor<T> row_sq_norm(const Tensor<T>& a);
// weights [B*K], values [B*K x d] -> [B x d]; out[b] = sum_j w[b,j] v[b,j] / sum_j w[b,j].
template <typename T>
Tensor<T> group_weighted_mean(const Tensor<T>& weights, const Tensor<T>& values, std::size_t group);

// Per-anchor NT-Xent loss. anchors and positives are [N x d]; anchor i is
// scored against positives[i] and against every other row of both matrices
// (2N - 1 candidates). Returns [N].
template <typename T>
Tensor<T> nt_xent_losses(const Tensor<T>& anchors, const Tensor<T>& positives, T temperature);

}  // namespace zipfmem::nn
