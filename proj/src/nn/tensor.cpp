#include "zipfmem/nn/tensor.hpp"

#include <sstream>
#include <stdexcept>
#include <unordered_set>
#include <utility>

namespace zipfmem::nn {

namespace {
thread_local bool g_grad_enabled = true;
}

std::size_t numel(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
  os << ']';
  return os.str();
}

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }
bool grad_enabled() { return g_grad_enabled; }

template <typename T>
Tensor<T>::Tensor(Shape shape, std::vector<T> values, bool requires_grad) {
  for (auto d : shape) {
    if (d == 0) throw std::invalid_argument("tensor extents must be positive, got " + shape_str(shape));
  }
  if (nn::numel(shape) != values.size()) {
    throw std::invalid_argument("tensor shape " + shape_str(shape) + " does not match " +
                                std::to_string(values.size()) + " values");
  }
  node_ = std::make_shared<Node<T>>();
  node_->shape = std::move(shape);
  node_->value = std::move(values);
  node_->requires_grad = requires_grad;
}

template <typename T>
Tensor<T> Tensor<T>::zeros(Shape shape, bool requires_grad) {
  return full(std::move(shape), T{0}, requires_grad);
}

template <typename T>
Tensor<T> Tensor<T>::full(Shape shape, T value, bool requires_grad) {
  const auto n = nn::numel(shape);
  return Tensor(std::move(shape), std::vector<T>(n, value), requires_grad);
}

template <typename T>
Tensor<T> Tensor<T>::scalar(T value, bool requires_grad) {
  return Tensor(Shape{1}, std::vector<T>{value}, requires_grad);
}

template <typename T>
const Shape& Tensor<T>::shape() const {
  if (!node_) throw std::logic_error("undefined tensor");
  return node_->shape;
}

template <typename T>
std::size_t Tensor<T>::numel() const {
  return shape().empty() ? 0 : node_->value.size();
}

template <typename T>
std::span<const T> Tensor<T>::data() const {
  if (!node_) throw std::logic_error("undefined tensor");
  return node_->value;
}

template <typename T>
std::span<T> Tensor<T>::mutable_data() {
  if (!node_) throw std::logic_error("undefined tensor");
  if (!node_->leaf) throw std::logic_error("mutable_data() on a non-leaf tensor");
  return node_->value;
}

template <typename T>
T Tensor<T>::item() const {
  if (numel() != 1) throw std::invalid_argument("item() on tensor of shape " + shape_str(shape()));
  return node_->value[0];
}

template <typename T>
bool Tensor<T>::requires_grad() const {
  return node_ && node_->requires_grad;
}

template <typename T>
void Tensor<T>::set_requires_grad(bool flag) {
  if (!node_) throw std::logic_error("undefined tensor");
  if (!node_->leaf) throw std::logic_error("set_requires_grad on a non-leaf tensor");
  node_->requires_grad = flag;
}

template <typename T>
bool Tensor<T>::is_leaf() const {
  return node_ && node_->leaf;
}

template <typename T>
bool Tensor<T>::has_grad() const {
  return node_ && node_->grad.size() == node_->value.size();
}

template <typename T>
std::span<const T> Tensor<T>::grad() const {
  if (!has_grad()) return {};
  return node_->grad;
}

template <typename T>
std::span<T> Tensor<T>::mutable_grad() {
  if (!node_) throw std::logic_error("undefined tensor");
  return node_->ensure_grad();
}

template <typename T>
void Tensor<T>::zero_grad() {
  if (node_ && !node_->grad.empty()) std::fill(node_->grad.begin(), node_->grad.end(), T{0});
}

template <typename T>
Tensor<T> Tensor<T>::detach() const {
  return Tensor(shape(), node_->value, false);
}

namespace {

template <typename T>
std::vector<Node<T>*> topological_order(Node<T>* root) {
  std::vector<Node<T>*> order;
  std::unordered_set<Node<T>*> visited;
  std::vector<std::pair<Node<T>*, std::size_t>> stack;
  stack.emplace_back(root, 0);
  visited.insert(root);
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node<T>* parent = node->parents[next++].get();
      if (parent->requires_grad && !visited.count(parent)) {
        visited.insert(parent);
        stack.emplace_back(parent, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  return order;  // parents before children
}

}  // namespace

template <typename T>
void backward(const Tensor<T>& loss) {
  if (!loss.defined()) throw std::invalid_argument("backward on undefined tensor");
  if (loss.numel() != 1) {
    throw std::invalid_argument("backward requires a scalar loss, got shape " + shape_str(loss.shape()));
  }
  Node<T>* root = loss.node().get();
  if (!root->requires_grad) return;
  auto order = topological_order(root);
  for (Node<T>* n : order) {
    if (!n->leaf) n->grad.assign(n->value.size(), T{0});
  }
  root->ensure_grad()[0] += T{1};
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node<T>* n = *it;
    if (!n->leaf && n->backward_fn) n->backward_fn(*n);
  }
}

template <typename T>
std::vector<std::vector<T>> gradient_of(const Tensor<T>& loss, std::span<const Tensor<T>> leaves) {
  std::vector<std::vector<T>> saved;
  saved.reserve(leaves.size());
  for (const auto& leaf : leaves) {
    auto& node = *leaf.node();
    saved.push_back(std::move(node.grad));
    node.grad.clear();
  }
  backward(loss);
  std::vector<std::vector<T>> result;
  result.reserve(leaves.size());
  for (std::size_t i = 0; i < leaves.size(); ++i) {
    auto& node = *leaves[i].node();
    if (node.grad.size() != node.value.size()) node.grad.assign(node.value.size(), T{0});
    result.push_back(std::move(node.grad));
    node.grad = std::move(saved[i]);
  }
  return result;
}

template <typename T>
Tensor<T> precomputed_scalar(T value, std::vector<Tensor<T>> leaves, std::vector<std::vector<T>> leaf_grads) {
  if (leaves.size() != leaf_grads.size()) throw std::invalid_argument("precomputed_scalar: leaf/grad count mismatch");
  std::vector<std::shared_ptr<Node<T>>> parents;
  for (std::size_t i = 0; i < leaves.size(); ++i) {
    if (leaf_grads[i].size() != leaves[i].numel()) {
      throw std::invalid_argument("precomputed_scalar: gradient size mismatch for leaf " + std::to_string(i));
    }
    parents.push_back(leaves[i].node());
  }
  auto grads = std::make_shared<std::vector<std::vector<T>>>(std::move(leaf_grads));
  return detail::make_result<T>("precomputed", Shape{1}, {value}, std::move(parents), [grads](Node<T>& out) {
    const T g = out.grad[0];
    for (std::size_t i = 0; i < out.parents.size(); ++i) {
      auto& p = *out.parents[i];
      if (!p.requires_grad) continue;
      auto& pg = p.ensure_grad();
      const auto& src = (*grads)[i];
      for (std::size_t j = 0; j < pg.size(); ++j) pg[j] += g * src[j];
    }
  });
}

namespace detail {

template <typename T>
Tensor<T> make_result(const char* op, Shape shape, std::vector<T> value, std::vector<std::shared_ptr<Node<T>>> parents,
                      std::function<void(Node<T>&)> backward_fn) {
  auto node = std::make_shared<Node<T>>();
  node->shape = std::move(shape);
  node->value = std::move(value);
  node->op = op;
  node->leaf = false;
  bool needs = false;
  if (g_grad_enabled) {
    for (const auto& p : parents) needs = needs || p->requires_grad;
  }
  if (needs) {
    node->requires_grad = true;
    node->parents = std::move(parents);
    node->backward_fn = std::move(backward_fn);
  }
  return Tensor<T>(std::move(node));
}

template Tensor<float> make_result(const char*, Shape, std::vector<float>, std::vector<std::shared_ptr<Node<float>>>,
                                   std::function<void(Node<float>&)>);
template Tensor<double> make_result(const char*, Shape, std::vector<double>,
                                    std::vector<std::shared_ptr<Node<double>>>, std::function<void(Node<double>&)>);

}  // namespace detail

template class Tensor<float>;
template class Tensor<double>;
template void backward(const Tensor<float>&);
template void backward(const Tensor<double>&);
template std::vector<std::vector<float>> gradient_of(const Tensor<float>&, std::span<const Tensor<float>>);
template std::vector<std::vector<double>> gradient_of(const Tensor<double>&, std::span<const Tensor<double>>);
template Tensor<float> precomputed_scalar(float, std::vector<Tensor<float>>, std::vector<std::vector<float>>);
template Tensor<double> precomputed_scalar(double, std::vector<Tensor<double>>, std::vector<std::vector<double>>);

}  // namespace zipfmem::nn
