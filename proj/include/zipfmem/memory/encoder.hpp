#pragma once

#include <vector>

#include "zipfmem/nn/tensor.hpp"

namespace zipfmem::memory {

// Maps a batch of images [N x C x H x W] to embeddings [N x d].
template <typename T>
class Encoder {
 public:
  virtual ~Encoder() = default;
  virtual nn::Tensor<T> encode(const nn::Tensor<T>& images) const = 0;
  virtual std::vector<nn::Tensor<T>> encoder_parameters() const = 0;
};

}  // namespace zipfmem::memory
