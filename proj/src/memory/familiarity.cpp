#include "zipfmem/memory/familiarity.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "zipfmem/errors.hpp"
#include "zipfmem/nn/ops.hpp"

namespace zipfmem::memory {

namespace {

template <typename T>
nn::Tensor<T> stack_images(const std::vector<const FloatImage<T>*>& images) {
  const auto& first = *images.front();
  std::vector<T> data;
  data.reserve(images.size() * first.size());
  for (const auto* im : images) data.insert(data.end(), im->data.begin(), im->data.end());
  return nn::Tensor<T>({images.size(), static_cast<std::size_t>(first.channels), static_cast<std::size_t>(first.height),
                        static_cast<std::size_t>(first.width)},
                       std::move(data));
}

}  // namespace

template <typename T>
nn::Tensor<T> contrastive_losses(const nn::Tensor<T>& p, const nn::Tensor<T>& p_aug, double tau) {
  return nn::nt_xent_losses(nn::l2_normalize_rows(p), nn::l2_normalize_rows(p_aug), static_cast<T>(tau));
}

template <typename T>
FamiliarityBuffer<T>::FamiliarityBuffer(FamiliarityConfig config) : config_(std::move(config)) {
  if (config_.capacity == 0) throw std::invalid_argument("familiarity: capacity must be positive");
  if (!(config_.beta >= 0 && config_.beta < 1)) throw std::invalid_argument("familiarity: beta must be in [0, 1)");
  if (!(config_.tau > 0)) throw std::invalid_argument("familiarity: tau must be positive");
  if (config_.minibatch < 2) throw std::invalid_argument("familiarity: minibatch must be >= 2");
  config_.augment.validate();
  slots_.reserve(config_.capacity);
}

template <typename T>
void FamiliarityBuffer<T>::check_widths(const FamiliarityEntry<T>& e) const {
  if (e.k.size() != config_.key_dim || e.p.size() != config_.p_dim || e.h.size() != config_.h_dim) {
    throw std::invalid_argument("familiarity: entry widths (k " + std::to_string(e.k.size()) + ", p " +
                                std::to_string(e.p.size()) + ", h " + std::to_string(e.h.size()) +
                                ") do not match the configuration");
  }
  if (e.im.data.size() != static_cast<std::size_t>(e.im.channels * e.im.height * e.im.width) || e.im.data.empty()) {
    throw std::invalid_argument("familiarity: malformed image");
  }
  if (!slots_.empty()) {
    const auto& ref = slots_.front().im;
    if (ref.channels != e.im.channels || ref.height != e.im.height || ref.width != e.im.width) {
      throw std::invalid_argument("familiarity: image shape differs from stored entries");
    }
  }
}

template <typename T>
void FamiliarityBuffer<T>::add(FamiliarityEntry<T> entry) {
  check_widths(entry);
  entry.lm = 0.0;
  entry.passes_seen = 0;
  entry.seq = seq_++;
  if (slots_.size() < config_.capacity) {
    slots_.push_back(std::move(entry));
  } else {
    slots_[next_] = std::move(entry);
  }
  next_ = (next_ + 1) % config_.capacity;
}

template <typename T>
void FamiliarityBuffer<T>::add(std::vector<FamiliarityEntry<T>> entries) {
  for (const auto& e : entries) check_widths(e);
  for (auto& e : entries) add(std::move(e));
}

template <typename T>
bool FamiliarityBuffer<T>::all_scored() const {
  return !slots_.empty() &&
         std::all_of(slots_.begin(), slots_.end(), [](const auto& e) { return e.passes_seen > 0; });
}

template <typename T>
ContrastiveResult<T> FamiliarityBuffer<T>::contrastive_pass(const Encoder<T>& encoder, Rng& rng) const {
  ContrastiveResult<T> result;
  if (!full()) {
    result.loss = nn::Tensor<T>::scalar(T(0));
    return result;
  }
  const std::size_t n = slots_.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t i = 0; i + 1 < n; ++i) std::swap(order[i], order[i + uniform_index(rng, n - i)]);

  const auto params = encoder.encoder_parameters();
  const bool track = nn::grad_enabled() &&
                     std::any_of(params.begin(), params.end(), [](const auto& p) { return p.requires_grad(); });
  std::vector<std::vector<T>> grads;
  if (track) {
    for (const auto& p : params) grads.emplace_back(p.numel(), T(0));
  }
  result.per_entry.assign(n, 0.0);
  double total = 0.0;

  const std::size_t n_batches = (n + config_.minibatch - 1) / config_.minibatch;
  std::size_t begin = 0;
  for (std::size_t b = 0; b < n_batches; ++b) {
    const std::size_t count = n / n_batches + (b < n % n_batches ? 1 : 0);
    std::vector<const FloatImage<T>*> originals;
    std::vector<FloatImage<T>> augmented;
    augmented.reserve(count);
    for (std::size_t i = begin; i < begin + count; ++i) {
      originals.push_back(&slots_[order[i]].im);
      augmented.push_back(augment(slots_[order[i]].im, config_.augment, rng));
    }
    std::vector<const FloatImage<T>*> aug_ptrs;
    for (const auto& a : augmented) aug_ptrs.push_back(&a);

    auto losses = contrastive_losses(encoder.encode(stack_images(originals)), encoder.encode(stack_images(aug_ptrs)),
                                     config_.tau);
    for (std::size_t i = 0; i < count; ++i) {
      const double l = static_cast<double>(losses.at(i));
      result.per_entry[order[begin + i]] = l;
      total += l;
    }
    if (track) {
      auto batch_loss = nn::scale(nn::sum(losses), static_cast<T>(1.0 / static_cast<double>(n)));
      auto g = nn::gradient_of<T>(batch_loss, params);
      for (std::size_t k = 0; k < params.size(); ++k) {
        for (std::size_t j = 0; j < g[k].size(); ++j) grads[k][j] += g[k][j];
      }
    }
    begin += count;
  }
  const T mean = static_cast<T>(total / static_cast<double>(n));
  result.loss = track ? nn::precomputed_scalar<T>(mean, params, std::move(grads)) : nn::Tensor<T>::scalar(mean);
  result.ran = true;
  return result;
}

template <typename T>
void FamiliarityBuffer<T>::update_momentum(const std::vector<double>& per_entry_losses, double beta) {
  if (per_entry_losses.size() != slots_.size()) {
    throw std::invalid_argument("update_momentum: expected " + std::to_string(slots_.size()) + " losses, got " +
                                std::to_string(per_entry_losses.size()));
  }
  if (!(beta >= 0 && beta < 1)) throw std::invalid_argument("update_momentum: beta must be in [0, 1)");
  for (std::size_t i = 0; i < slots_.size(); ++i) {
    auto& e = slots_[i];
    const double l = per_entry_losses[i];
    if (!std::isfinite(l)) throw TrainingError("update_momentum: non-finite loss for entry " + e.id.str());
    e.lm = e.passes_seen == 0 ? l : beta * e.lm + (1 - beta) * l;
    ++e.passes_seen;
  }
}

template <typename T>
std::vector<double> FamiliarityBuffer<T>::normalized_momentum() const {
  if (slots_.empty()) throw StateError("normalized_momentum: buffer is empty");
  if (!all_scored()) throw StateError("normalized_momentum: some entries have no momentum yet");
  double mean = 0;
  for (const auto& e : slots_) mean += e.lm;
  mean /= static_cast<double>(slots_.size());
  double max_dev = 0;
  for (const auto& e : slots_) max_dev = std::max(max_dev, std::abs(e.lm - mean));
  std::vector<double> m(slots_.size(), 0.5);
  if (max_dev == 0) return m;
  for (std::size_t i = 0; i < slots_.size(); ++i) m[i] = 0.5 * ((slots_[i].lm - mean) / max_dev + 1.0);
  return m;
}

template <typename T>
std::vector<std::size_t> FamiliarityBuffer<T>::rare_indices(std::size_t t_k) const {
  if (t_k == 0) throw std::invalid_argument("get_rare_k: t_k must be >= 1");
  const auto m = normalized_momentum();
  std::vector<std::size_t> idx(slots_.size());
  std::iota(idx.begin(), idx.end(), 0);
  const std::size_t take = std::min(t_k, idx.size());
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(take), idx.end(),
                    [&](std::size_t a, std::size_t b) {
                      if (m[a] != m[b]) return m[a] > m[b];
                      if (slots_[a].seq != slots_[b].seq) return slots_[a].seq > slots_[b].seq;
                      return slots_[a].id < slots_[b].id;
                    });
  idx.resize(take);
  return idx;
}

template <typename T>
std::vector<FamiliarityEntry<T>> FamiliarityBuffer<T>::get_rare_k(std::size_t t_k) const {
  std::vector<FamiliarityEntry<T>> out;
  for (auto i : rare_indices(t_k)) out.push_back(slots_[i]);
  return out;
}

template <typename T>
std::vector<std::size_t> FamiliarityBuffer<T>::uniform_indices(std::size_t t_k, Rng& rng) const {
  if (slots_.empty()) throw StateError("uniform sampling from an empty buffer");
  std::vector<std::size_t> idx(slots_.size());
  std::iota(idx.begin(), idx.end(), 0);
  const std::size_t take = std::min(t_k, idx.size());
  for (std::size_t i = 0; i < take; ++i) std::swap(idx[i], idx[i + uniform_index(rng, idx.size() - i)]);
  idx.resize(take);
  return idx;
}

template <typename T>
void FamiliarityBuffer<T>::write_momentum_csv(std::ostream& os, std::uint64_t transfer) const {
  const auto m = normalized_momentum();
  for (std::size_t i = 0; i < slots_.size(); ++i) {
    os << transfer << ',' << slots_[i].id.episode << ',' << slots_[i].id.step << ',' << slots_[i].lm << ',' << m[i]
       << '\n';
  }
}

template <typename T>
void FamiliarityBuffer<T>::restore(std::vector<FamiliarityEntry<T>> entries, std::size_t next_slot,
                                   std::uint64_t next_seq) {
  if (entries.size() > config_.capacity || next_slot >= config_.capacity) {
    throw std::invalid_argument("familiarity restore: state exceeds capacity");
  }
  for (const auto& e : entries) check_widths(e);
  slots_ = std::move(entries);
  next_ = next_slot;
  seq_ = next_seq;
}

template class FamiliarityBuffer<float>;
template class FamiliarityBuffer<double>;
template nn::Tensor<float> contrastive_losses(const nn::Tensor<float>&, const nn::Tensor<float>&, double);
template nn::Tensor<double> contrastive_losses(const nn::Tensor<double>&, const nn::Tensor<double>&, double);

}  // namespace zipfmem::memory
