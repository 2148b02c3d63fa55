#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace zipfmem::nn {

using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape& shape);
std::string shape_str(const Shape& shape);

template <typename T>
struct Node;

// Dense row-major array with an optional gradient. Tensors are cheap handles:
// copies share the same storage and graph node.
//
// A tensor created by an op records its parents and a backward closure only
// when at least one input requires grad and grad mode is enabled. Leaf tensors
// (parameters, inputs) keep their gradient across backward calls; it
// accumulates until zero_grad().
template <typename T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;
  Tensor(Shape shape, std::vector<T> values, bool requires_grad = false);

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, T value, bool requires_grad = false);
  static Tensor scalar(T value, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t dim(std::size_t i) const { return shape().at(i); }
  std::size_t numel() const;

  std::span<const T> data() const;
  // Only valid on leaf tensors; mutating a tensor that is part of a live
  // graph would invalidate saved activations.
  std::span<T> mutable_data();
  T item() const;
  T at(std::size_t flat_index) const { return data()[flat_index]; }

  bool requires_grad() const;
  void set_requires_grad(bool flag);
  bool is_leaf() const;
  bool has_grad() const;
  std::span<const T> grad() const;
  std::span<T> mutable_grad();
  void zero_grad();

  // New leaf holding a copy of the values, cut from the graph.
  Tensor detach() const;

  const std::shared_ptr<Node<T>>& node() const { return node_; }
  explicit Tensor(std::shared_ptr<Node<T>> node) : node_(std::move(node)) {}

 private:
  std::shared_ptr<Node<T>> node_;
};

template <typename T>
struct Node {
  Shape shape;
  std::vector<T> value;
  std::vector<T> grad;  // empty until first accumulation
  bool requires_grad = false;
  bool leaf = true;
  const char* op = "leaf";
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward_fn;

  std::vector<T>& ensure_grad() {
    if (grad.size() != value.size()) grad.assign(value.size(), T{0});
    return grad;
  }
};

// Disables graph recording on the current thread for its lifetime.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool grad_enabled();

// Reverse-mode sweep from a scalar loss. Non-leaf gradients are recomputed on
// every call; leaf gradients accumulate.
template <typename T>
void backward(const Tensor<T>& loss);

// Gradient of a scalar loss with respect to the given leaves, returned without
// disturbing whatever gradients the leaves already hold.
template <typename T>
std::vector<std::vector<T>> gradient_of(const Tensor<T>& loss, std::span<const Tensor<T>> leaves);

// A scalar whose value and derivative with respect to `leaves` were computed
// elsewhere. Backpropagating an upstream gradient g adds g * leaf_grads[i] to
// leaf i. Used to fold an out-of-graph computation (e.g. a minibatched pass)
// back into a single differentiable loss.
template <typename T>
Tensor<T> precomputed_scalar(T value, std::vector<Tensor<T>> leaves,
                             std::vector<std::vector<T>> leaf_grads);

namespace detail {

// Builds an op output. Parents and the closure are dropped when no parent
// requires grad or grad mode is off.
template <typename T>
Tensor<T> make_result(const char* op, Shape shape, std::vector<T> value,
                      std::vector<std::shared_ptr<Node<T>>> parents,
                      std::function<void(Node<T>&)> backward_fn);

}  // namespace detail

}  // namespace zipfmem::nn
