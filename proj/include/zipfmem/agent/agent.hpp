#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "zipfmem/memory/encoder.hpp"
#include "zipfmem/memory/episodic.hpp"
#include "zipfmem/nn/layers.hpp"
#include "zipfmem/rng.hpp"

namespace zipfmem::agent {

struct AgentArch {
  std::size_t channels = 3, image_size = 84;
  std::size_t conv1_filters = 16, conv2_filters = 32, kernel = 3, stride = 2;
  std::size_t embedding_dim = 128, lstm_dim = 128, key_dim = 64;
  std::size_t n_actions = 4;

  std::size_t conv_out_side() const;
  // LSTM input: embedding, one-hot previous action, previous reward, memory.
  std::size_t lstm_input_dim() const { return embedding_dim + n_actions + 1 + lstm_dim; }
};

struct RetrievalSettings {
  std::size_t K = 16;
  double eps = 1e-3;
};

template <typename T>
struct StepOutput {
  nn::Tensor<T> logits;  // [B x n_actions]
  nn::Tensor<T> value;   // [B]
  nn::Tensor<T> h, c;    // [B x lstm_dim]
  nn::Tensor<T> k;       // [B x key_dim], key of (p, h_prev)
  nn::Tensor<T> m;       // [B x lstm_dim], reinstated memory
};

// Conv encoder -> fusion with previous action, reward and memory -> LSTM ->
// policy and value heads. The key projection is shared with the MEM.
template <typename T>
class AgentNet final : public memory::Encoder<T> {
 public:
  AgentNet(const AgentArch& arch, std::uint64_t seed);

  // images [N x C x H x W] -> p [N x embedding_dim]
  nn::Tensor<T> encode(const nn::Tensor<T>& images) const override;
  std::vector<nn::Tensor<T>> encoder_parameters() const override;

  // One recurrent step for a batch. prev_action -1 encodes "no previous
  // action" (episode start). mem == nullptr means no memory (m = 0).
  StepOutput<T> step(const nn::Tensor<T>& p, std::span<const int> prev_action, std::span<const T> prev_reward,
                     const nn::Tensor<T>& h_prev, const nn::Tensor<T>& c_prev,
                     const memory::EpisodicMemory<T>* mem, const RetrievalSettings& retrieval) const;

  const AgentArch& arch() const { return arch_; }
  const memory::KeyProjection<T>& key_projection() const { return key_; }
  nn::NamedTensors<T> named_parameters() const;

 private:
  AgentArch arch_;
  nn::Tensor<T> conv1_w_, conv1_b_, conv2_w_, conv2_b_, fc_w_, fc_b_;
  memory::KeyProjection<T> key_;
  nn::LstmParams<T> lstm_;
  nn::Tensor<T> policy_w_, policy_b_, value_w_, value_b_;
};

template <typename T>
struct ActOutput {
  std::vector<int> action;
  std::vector<T> log_prob, value;
  StepOutput<T> net;
  nn::Tensor<T> p;
};

// Full acting step without gradient tracking: encode, key, retrieve, LSTM,
// heads; then either sample from softmax(logits) with rng or take the argmax
// when rng is null.
template <typename T>
ActOutput<T> act(const AgentNet<T>& net, const nn::Tensor<T>& images, std::span<const int> prev_action,
                 std::span<const T> prev_reward, const nn::Tensor<T>& h_prev, const nn::Tensor<T>& c_prev,
                 const memory::EpisodicMemory<T>* mem, const RetrievalSettings& retrieval, Rng* rng);

}  // namespace zipfmem::agent
