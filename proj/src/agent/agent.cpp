#include "zipfmem/agent/agent.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "zipfmem/nn/ops.hpp"

namespace zipfmem::agent {

std::size_t AgentArch::conv_out_side() const {
  if (kernel > image_size) throw std::invalid_argument("agent: kernel larger than image");
  const std::size_t s1 = (image_size - kernel) / stride + 1;
  if (kernel > s1) throw std::invalid_argument("agent: image too small for two conv layers");
  return (s1 - kernel) / stride + 1;
}

template <typename T>
AgentNet<T>::AgentNet(const AgentArch& arch, std::uint64_t seed) : arch_(arch) {
  if (arch.n_actions < 1 || arch.embedding_dim < 1 || arch.lstm_dim < 1 || arch.key_dim < 1) {
    throw std::invalid_argument("agent: layer widths must be positive");
  }
  std::mt19937_64 rng(seed);
  const std::size_t k = arch.kernel;
  const std::size_t fan1 = arch.channels * k * k, fan2 = arch.conv1_filters * k * k;
  const std::size_t side = arch.conv_out_side();
  const std::size_t flat = arch.conv2_filters * side * side;
  auto he = [](std::size_t fan) { return static_cast<T>(nn::he_bound(fan)); };
  auto lecun = [](std::size_t fan) { return static_cast<T>(nn::lecun_bound(fan)); };
  conv1_w_ = nn::uniform_param<T>({arch.conv1_filters, arch.channels, k, k}, he(fan1), rng);
  conv1_b_ = nn::Tensor<T>::zeros({arch.conv1_filters}, true);
  conv2_w_ = nn::uniform_param<T>({arch.conv2_filters, arch.conv1_filters, k, k}, he(fan2), rng);
  conv2_b_ = nn::Tensor<T>::zeros({arch.conv2_filters}, true);
  fc_w_ = nn::uniform_param<T>({arch.embedding_dim, flat}, he(flat), rng);
  fc_b_ = nn::Tensor<T>::zeros({arch.embedding_dim}, true);
  key_ = memory::make_key_projection<T>(arch.key_dim, arch.embedding_dim, arch.lstm_dim, rng);
  lstm_ = nn::make_lstm_params<T>(arch.lstm_input_dim(), arch.lstm_dim, rng);
  // small policy weights start the agent close to uniform
  policy_w_ = nn::uniform_param<T>({arch.n_actions, arch.lstm_dim}, T(0.1) * lecun(arch.lstm_dim), rng);
  policy_b_ = nn::Tensor<T>::zeros({arch.n_actions}, true);
  value_w_ = nn::uniform_param<T>({1, arch.lstm_dim}, lecun(arch.lstm_dim), rng);
  value_b_ = nn::Tensor<T>::zeros({1}, true);
}

template <typename T>
nn::Tensor<T> AgentNet<T>::encode(const nn::Tensor<T>& images) const {
  if (images.rank() != 4 || images.dim(1) != arch_.channels || images.dim(2) != arch_.image_size ||
      images.dim(3) != arch_.image_size) {
    throw std::invalid_argument("agent: expected images [N x " + std::to_string(arch_.channels) + " x " +
                                std::to_string(arch_.image_size) + " x " + std::to_string(arch_.image_size) +
                                "], got " + nn::shape_str(images.shape()));
  }
  auto x = nn::relu(nn::conv2d(images, conv1_w_, conv1_b_, arch_.stride));
  x = nn::relu(nn::conv2d(x, conv2_w_, conv2_b_, arch_.stride));
  x = nn::reshape(x, {images.dim(0), x.numel() / images.dim(0)});
  return nn::relu(nn::affine(x, fc_w_, fc_b_));
}

template <typename T>
std::vector<nn::Tensor<T>> AgentNet<T>::encoder_parameters() const {
  return {conv1_w_, conv1_b_, conv2_w_, conv2_b_, fc_w_, fc_b_};
}

template <typename T>
nn::NamedTensors<T> AgentNet<T>::named_parameters() const {
  return {{"encoder/conv1/w", conv1_w_}, {"encoder/conv1/b", conv1_b_}, {"encoder/conv2/w", conv2_w_},
          {"encoder/conv2/b", conv2_b_}, {"encoder/fc/w", fc_w_},       {"encoder/fc/b", fc_b_},
          {"key/w", key_.W},             {"key/b", key_.b},             {"lstm/w_input", lstm_.w_input},
          {"lstm/w_hidden", lstm_.w_hidden}, {"lstm/bias", lstm_.bias}, {"policy/w", policy_w_},
          {"policy/b", policy_b_},       {"value/w", value_w_},         {"value/b", value_b_}};
}

template <typename T>
StepOutput<T> AgentNet<T>::step(const nn::Tensor<T>& p, std::span<const int> prev_action,
                                std::span<const T> prev_reward, const nn::Tensor<T>& h_prev,
                                const nn::Tensor<T>& c_prev, const memory::EpisodicMemory<T>* mem,
                                const RetrievalSettings& retrieval) const {
  if (p.rank() != 2 || p.dim(1) != arch_.embedding_dim) {
    throw std::invalid_argument("agent step: p must be [B x embedding_dim], got " + nn::shape_str(p.shape()));
  }
  const std::size_t B = p.dim(0), A = arch_.n_actions;
  if (prev_action.size() != B || prev_reward.size() != B) {
    throw std::invalid_argument("agent step: previous action/reward count differs from batch size");
  }
  StepOutput<T> out;
  out.k = memory::compute_key(p, h_prev, key_);
  out.m = mem != nullptr ? mem->retrieve(out.k, retrieval.K, retrieval.eps, key_)
                         : nn::Tensor<T>::zeros({B, arch_.lstm_dim});
  std::vector<T> onehot(B * A, T(0));
  for (std::size_t b = 0; b < B; ++b) {
    if (prev_action[b] >= static_cast<int>(A)) throw std::invalid_argument("agent step: previous action out of range");
    if (prev_action[b] >= 0) onehot[b * A + static_cast<std::size_t>(prev_action[b])] = T(1);
  }
  const nn::Tensor<T> parts[4] = {p, nn::Tensor<T>({B, A}, std::move(onehot)),
                                  nn::Tensor<T>({B, 1}, std::vector<T>(prev_reward.begin(), prev_reward.end())),
                                  out.m};
  auto state = nn::lstm_step(nn::concat_cols<T>(parts), h_prev, c_prev, lstm_);
  out.h = state.h;
  out.c = state.c;
  out.logits = nn::affine(out.h, policy_w_, policy_b_);
  out.value = nn::reshape(nn::affine(out.h, value_w_, value_b_), {B});
  return out;
}

template <typename T>
ActOutput<T> act(const AgentNet<T>& net, const nn::Tensor<T>& images, std::span<const int> prev_action,
                 std::span<const T> prev_reward, const nn::Tensor<T>& h_prev, const nn::Tensor<T>& c_prev,
                 const memory::EpisodicMemory<T>* mem, const RetrievalSettings& retrieval, Rng* rng) {
  nn::NoGradGuard guard;
  ActOutput<T> out;
  out.p = net.encode(images);
  out.net = net.step(out.p, prev_action, prev_reward, h_prev, c_prev, mem, retrieval);
  const auto logp = nn::log_softmax(out.net.logits);
  const std::size_t B = images.dim(0), A = net.arch().n_actions;
  for (std::size_t b = 0; b < B; ++b) {
    const T* row = logp.data().data() + b * A;
    int a = 0;
    if (rng != nullptr) {
      const double u = uniform01(*rng);
      double acc = 0;
      a = static_cast<int>(A) - 1;
      for (std::size_t j = 0; j < A; ++j) {
        acc += std::exp(static_cast<double>(row[j]));
        if (u < acc) {
          a = static_cast<int>(j);
          break;
        }
      }
    } else {
      a = static_cast<int>(std::max_element(row, row + A) - row);
    }
    out.action.push_back(a);
    out.log_prob.push_back(row[a]);
    out.value.push_back(out.net.value.at(b));
  }
  return out;
}

template class AgentNet<float>;
template class AgentNet<double>;
template ActOutput<float> act(const AgentNet<float>&, const nn::Tensor<float>&, std::span<const int>,
                              std::span<const float>, const nn::Tensor<float>&, const nn::Tensor<float>&,
                              const memory::EpisodicMemory<float>*, const RetrievalSettings&, Rng*);
template ActOutput<double> act(const AgentNet<double>&, const nn::Tensor<double>&, std::span<const int>,
                               std::span<const double>, const nn::Tensor<double>&, const nn::Tensor<double>&,
                               const memory::EpisodicMemory<double>*, const RetrievalSettings&, Rng*);

}  // namespace zipfmem::agent
