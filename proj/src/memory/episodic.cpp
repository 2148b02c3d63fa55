#include "zipfmem/memory/episodic.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "zipfmem/nn/layers.hpp"
#include "zipfmem/nn/ops.hpp"

namespace zipfmem::memory {

template <typename T>
KeyProjection<T> make_key_projection(std::size_t key_dim, std::size_t p_dim, std::size_t h_dim, std::mt19937_64& rng) {
  const std::size_t in = p_dim + h_dim;
  return {nn::uniform_param<T>({key_dim, in}, static_cast<T>(nn::lecun_bound(in)), rng), nn::Tensor<T>::zeros({key_dim}, true)};
}

template <typename T>
nn::Tensor<T> compute_key(const nn::Tensor<T>& p, const nn::Tensor<T>& h, const KeyProjection<T>& proj) {
  if (p.rank() != h.rank() || (p.rank() == 2 && p.dim(0) != h.dim(0)) ||
      p.shape().back() + h.shape().back() != proj.in_dim()) {
    throw std::invalid_argument("compute_key: p " + nn::shape_str(p.shape()) + " and h " + nn::shape_str(h.shape()) +
                                " do not match a projection over " + std::to_string(proj.in_dim()) + " inputs");
  }
  const nn::Tensor<T> parts[2] = {p, h};
  return nn::affine(nn::concat_cols<T>(parts), proj.W, proj.b);
}

template <typename T>
EpisodicMemory<T>::EpisodicMemory(MemConfig config) : config_(config) {
  if (config_.capacity == 0) throw std::invalid_argument("episodic memory: capacity must be positive");
}

template <typename T>
void EpisodicMemory<T>::check(const MemEntry<T>& e) const {
  if (e.p.size() != config_.p_dim || e.h.size() != config_.h_dim || e.k.size() != config_.key_dim) {
    throw std::invalid_argument("episodic memory: entry " + e.id.str() + " has mismatched widths");
  }
}

template <typename T>
void EpisodicMemory<T>::add_entries(const std::vector<MemEntry<T>>& entries) {
  for (const auto& e : entries) check(e);
  for (const auto& e : entries) {
    auto it = std::find_if(entries_.begin(), entries_.end(), [&](const auto& x) { return x.id == e.id; });
    if (it != entries_.end()) entries_.erase(it);
    if (entries_.size() == config_.capacity) entries_.pop_front();
    entries_.push_back(e);
  }
}

template <typename T>
std::vector<std::size_t> EpisodicMemory<T>::nearest(const T* query, std::size_t K) const {
  std::vector<T> dist(entries_.size());
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    T d{0};
    const auto& k = entries_[i].k;
    for (std::size_t j = 0; j < k.size(); ++j) d += (query[j] - k[j]) * (query[j] - k[j]);
    dist[i] = d;
  }
  std::vector<std::size_t> idx(entries_.size());
  std::iota(idx.begin(), idx.end(), 0);
  const std::size_t take = std::min(K, idx.size());
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(take), idx.end(),
                    [&](std::size_t a, std::size_t b) {
                      if (dist[a] != dist[b]) return dist[a] < dist[b];
                      return entries_[a].id < entries_[b].id;
                    });
  idx.resize(take);
  return idx;
}

template <typename T>
nn::Tensor<T> EpisodicMemory<T>::retrieve(const nn::Tensor<T>& k_query, std::size_t K, double eps,
                                          const KeyProjection<T>& proj) const {
  if (K < 1) throw std::invalid_argument("retrieve: K must be >= 1");
  if (!(eps > 0)) throw std::invalid_argument("retrieve: eps must be positive");
  const bool batched = k_query.rank() == 2;
  if ((k_query.rank() != 1 && !batched) || k_query.shape().back() != config_.key_dim) {
    throw std::invalid_argument("retrieve: query shape " + nn::shape_str(k_query.shape()) + " does not match key_dim " +
                                std::to_string(config_.key_dim));
  }
  const std::size_t B = batched ? k_query.dim(0) : 1;
  if (entries_.empty()) {
    return batched ? nn::Tensor<T>::zeros({B, config_.h_dim}) : nn::Tensor<T>::zeros({config_.h_dim});
  }
  const std::size_t take = std::min(K, entries_.size());
  const std::size_t in = config_.p_dim + config_.h_dim;
  std::vector<T> ph(B * take * in), hs(B * take * config_.h_dim);
  for (std::size_t b = 0; b < B; ++b) {
    const auto idx = nearest(k_query.data().data() + b * config_.key_dim, take);
    for (std::size_t j = 0; j < take; ++j) {
      const auto& e = entries_[idx[j]];
      const std::size_t row = b * take + j;
      std::copy(e.p.begin(), e.p.end(), ph.begin() + row * in);
      std::copy(e.h.begin(), e.h.end(), ph.begin() + row * in + config_.p_dim);
      std::copy(e.h.begin(), e.h.end(), hs.begin() + row * config_.h_dim);
    }
  }
  const nn::Tensor<T> stored_ph({B * take, in}, std::move(ph));
  const nn::Tensor<T> stored_h({B * take, config_.h_dim}, std::move(hs));
  auto keys = nn::affine(stored_ph, proj.W, proj.b);
  auto query = batched ? k_query : nn::reshape(k_query, {1, config_.key_dim});
  auto diff = nn::sub(nn::repeat_rows(query, take), keys);
  auto w = nn::reciprocal(nn::add_scalar(nn::row_sq_norm(diff), static_cast<T>(eps)));
  auto m = nn::group_weighted_mean(w, stored_h, take);
  return batched ? m : nn::reshape(m, {config_.h_dim});
}

template <typename T>
void EpisodicMemory<T>::refresh_keys(const KeyProjection<T>& proj) {
  nn::NoGradGuard guard;
  for (auto& e : entries_) {
    auto k = compute_key(nn::Tensor<T>({e.p.size()}, e.p), nn::Tensor<T>({e.h.size()}, e.h), proj);
    e.k.assign(k.data().begin(), k.data().end());
  }
}

template <typename T>
void EpisodicMemory<T>::write_csv(std::ostream& os, std::uint64_t transfer) const {
  for (const auto& e : entries_) os << transfer << ',' << e.id.episode << ',' << e.id.step << ',' << e.momentum << '\n';
}

template <typename T>
void EpisodicMemory<T>::restore(std::deque<MemEntry<T>> entries) {
  if (entries.size() > config_.capacity) throw std::invalid_argument("episodic memory restore: exceeds capacity");
  for (const auto& e : entries) check(e);
  entries_ = std::move(entries);
}

template class EpisodicMemory<float>;
template class EpisodicMemory<double>;
template KeyProjection<float> make_key_projection<float>(std::size_t, std::size_t, std::size_t, std::mt19937_64&);
template KeyProjection<double> make_key_projection<double>(std::size_t, std::size_t, std::size_t, std::mt19937_64&);
template nn::Tensor<float> compute_key(const nn::Tensor<float>&, const nn::Tensor<float>&, const KeyProjection<float>&);
template nn::Tensor<double> compute_key(const nn::Tensor<double>&, const nn::Tensor<double>&, const KeyProjection<double>&);

}  // namespace zipfmem::memory
