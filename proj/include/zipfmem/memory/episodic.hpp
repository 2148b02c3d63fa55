#pragma once

#include <deque>
#include <ostream>
#include <random>
#include <vector>

#include "zipfmem/memory/entry.hpp"
#include "zipfmem/nn/tensor.hpp"

namespace zipfmem::memory {

template <typename T>
struct MemEntry {
  EntryId id;
  std::vector<T> p, h, k;
  double momentum = 0.0;  // normalized momentum when transferred; audit only
};

// k = W [p, h] + b.
template <typename T>
struct KeyProjection {
  nn::Tensor<T> W;  // [key_dim x (p_dim + h_dim)]
  nn::Tensor<T> b;  // [key_dim]

  std::size_t key_dim() const { return W.dim(0); }
  std::size_t in_dim() const { return W.dim(1); }
};

template <typename T>
KeyProjection<T> make_key_projection(std::size_t key_dim, std::size_t p_dim, std::size_t h_dim, std::mt19937_64& rng);

// p: [p_dim] or [B x p_dim]; h likewise. Differentiable in all inputs.
template <typename T>
nn::Tensor<T> compute_key(const nn::Tensor<T>& p, const nn::Tensor<T>& h, const KeyProjection<T>& proj);

struct MemConfig {
  std::size_t capacity = 1024;
  std::size_t p_dim = 128, h_dim = 128, key_dim = 64;
};

// Circular FIFO of (p, h, k) for rare states. Re-inserting an id replaces the
// older copy and moves it to the newest position.
template <typename T>
class EpisodicMemory {
 public:
  explicit EpisodicMemory(MemConfig config);

  void add_entries(const std::vector<MemEntry<T>>& entries);
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const MemConfig& config() const { return config_; }
  const std::deque<MemEntry<T>>& entries() const { return entries_; }

  // Indices of the min(K, size) entries whose stored keys are closest to the
  // query (squared Euclidean distance, ties by entry id), nearest first.
  std::vector<std::size_t> nearest(const T* query, std::size_t K) const;

  // m = sum w_i h_i / sum w_i over the nearest stored keys, with
  // w_i = 1 / (|k_query - W [p_i, h_i] - b|^2 + eps) using the current
  // projection. k_query is [key_dim] or [B x key_dim]; the result is [h_dim]
  // or [B x h_dim]. Stored p and h are constants; gradients reach k_query, W
  // and b. Empty memory gives zeros.
  nn::Tensor<T> retrieve(const nn::Tensor<T>& k_query, std::size_t K, double eps, const KeyProjection<T>& proj) const;

  // Recomputes every stored key with the given projection.
  void refresh_keys(const KeyProjection<T>& proj);

  // One "transfer,episode,step,M" row per live entry.
  void write_csv(std::ostream& os, std::uint64_t transfer) const;

  void restore(std::deque<MemEntry<T>> entries);

 private:
  void check(const MemEntry<T>& e) const;

  MemConfig config_;
  std::deque<MemEntry<T>> entries_;
};

}  // namespace zipfmem::memory
