#pragma once

#include <cstdint>
#include <ostream>
#include <vector>

#include "zipfmem/memory/augment.hpp"
#include "zipfmem/memory/encoder.hpp"
#include "zipfmem/memory/entry.hpp"
#include "zipfmem/nn/tensor.hpp"
#include "zipfmem/rng.hpp"

namespace zipfmem::memory {

template <typename T>
struct FamiliarityEntry {
  EntryId id;
  FloatImage<T> im;
  std::vector<T> k, p, h;
  double lm = 0.0;
  int passes_seen = 0;
  std::uint64_t seq = 0;  // insertion order, larger is newer
};

struct FamiliarityConfig {
  std::size_t capacity = 1024;
  double beta = 0.97;
  double tau = 0.5;
  std::size_t minibatch = 256;
  AugmentConfig augment;
  std::size_t key_dim = 64, p_dim = 128, h_dim = 128;
};

template <typename T>
struct ContrastiveResult {
  nn::Tensor<T> loss;               // mean per-sample loss, differentiable into the encoder
  std::vector<double> per_entry;    // indexed like entries()
  bool ran = false;
};

// Circular FIFO of recently seen states scored by how hard they are to tell
// apart from their own augmentation (an EMA of their NT-Xent loss).
template <typename T>
class FamiliarityBuffer {
 public:
  explicit FamiliarityBuffer(FamiliarityConfig config);

  // Appends FIFO. Incoming lm / passes_seen / seq are ignored and reset.
  void add(std::vector<FamiliarityEntry<T>> entries);
  void add(FamiliarityEntry<T> entry);

  std::size_t size() const { return slots_.size(); }
  bool full() const { return slots_.size() == config_.capacity; }
  bool all_scored() const;
  const FamiliarityConfig& config() const { return config_; }
  const std::vector<FamiliarityEntry<T>>& entries() const { return slots_; }

  // One sweep over the buffer in shuffled minibatches. Per anchor, the
  // candidates are the other originals and all augmentations in its minibatch.
  // A no-op returning zero loss until the buffer is full.
  ContrastiveResult<T> contrastive_pass(const Encoder<T>& encoder, Rng& rng) const;

  // lm <- loss on first observation, else beta * lm + (1 - beta) * loss.
  void update_momentum(const std::vector<double>& per_entry_losses, double beta);
  void update_momentum(const std::vector<double>& per_entry_losses) { update_momentum(per_entry_losses, config_.beta); }

  // 0.5 * ((lm - mean) / max|lm - mean| + 1); all 0.5 if lm is constant.
  std::vector<double> normalized_momentum() const;

  // Slots of the t_k highest-M entries, ordered by (M desc, newer first, id).
  std::vector<std::size_t> rare_indices(std::size_t t_k) const;
  std::vector<FamiliarityEntry<T>> get_rare_k(std::size_t t_k) const;
  // t_k distinct entries drawn uniformly at random.
  std::vector<std::size_t> uniform_indices(std::size_t t_k, Rng& rng) const;

  // One "transfer,episode,step,lm,M" row per entry.
  void write_momentum_csv(std::ostream& os, std::uint64_t transfer) const;

  // Restores entries verbatim (checkpoint load).
  void restore(std::vector<FamiliarityEntry<T>> entries, std::size_t next_slot, std::uint64_t next_seq);
  std::size_t next_slot() const { return next_; }
  std::uint64_t next_seq() const { return seq_; }

 private:
  void check_widths(const FamiliarityEntry<T>& e) const;

  FamiliarityConfig config_;
  std::vector<FamiliarityEntry<T>> slots_;
  std::size_t next_ = 0;
  std::uint64_t seq_ = 0;
};

// Per-anchor NT-Xent losses for one minibatch of originals and augmentations
// (rows L2-normalized first). Exposed for tests.
template <typename T>
nn::Tensor<T> contrastive_losses(const nn::Tensor<T>& p, const nn::Tensor<T>& p_aug, double tau);

}  // namespace zipfmem::memory
