#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace grec {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

namespace detail {

// One vertex of the dynamic graph. `backward` reads this node's grad and
// accumulates into the grads of `parents`.
template <typename T>
struct Node {
  Shape shape;
  std::vector<T> value;
  std::vector<T> grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward;

  std::vector<T>& ensure_grad() {
    if (grad.size() != value.size()) grad.assign(value.size(), T(0));
    return grad;
  }
};

}  // namespace detail

/// Dense row-major array with an optional gradient, the handle type of the
/// reverse-mode engine. Copies share the underlying storage.
template <typename T>
class Tensor {
 public:
  using Node = detail::Node<T>;

  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false) {
    auto node = std::make_shared<Node>();
    node->value.assign(shape_size(shape), T(0));
    node->shape = std::move(shape);
    node->requires_grad = requires_grad;
    return Tensor(std::move(node));
  }

  static Tensor from_data(Shape shape, std::vector<T> data,
                          bool requires_grad = false) {
    if (shape_size(shape) != data.size()) {
      throw std::invalid_argument("tensor data length " +
                                  std::to_string(data.size()) +
                                  " does not match shape " +
                                  shape_string(shape));
    }
    auto node = std::make_shared<Node>();
    node->shape = std::move(shape);
    node->value = std::move(data);
    node->requires_grad = requires_grad;
    return Tensor(std::move(node));
  }

  static Tensor scalar(T value, bool requires_grad = false) {
    return from_data({}, {value}, requires_grad);
  }

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t dim(std::size_t axis) const { return node_->shape.at(axis); }
  std::size_t size() const { return node_->value.size(); }

  std::span<const T> data() const { return node_->value; }
  // Mutation is reserved for parameter updates and test fixtures.
  std::span<T> mutable_data() { return node_->value; }

  bool requires_grad() const { return node_->requires_grad; }
  bool has_grad() const { return node_->grad.size() == node_->value.size(); }
  std::span<const T> grad() const { return node_->grad; }
  std::span<T> mutable_grad() { return node_->ensure_grad(); }
  void zero_grad() { node_->grad.assign(node_->value.size(), T(0)); }
  void clear_grad() { node_->grad.clear(); }

  T item() const {
    if (size() != 1) {
      throw std::invalid_argument("item() on tensor of shape " +
                                  shape_string(shape()));
    }
    return node_->value[0];
  }

  // Reverse sweep from a scalar. Gradients accumulate into every reachable
  // tensor that requires them.
  void backward() const;

  Node* node() const { return node_.get(); }
  const std::shared_ptr<Node>& shared_node() const { return node_; }

  explicit Tensor(std::shared_ptr<Node> node) : node_(std::move(node)) {}

 private:
  std::shared_ptr<Node> node_;
};

// Graph recording switch for the current thread; inference paths disable it.
bool grad_enabled();

class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

/// Integer id matrix, e.g. a batch of item indices [rows, cols].
struct IdMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<int> ids;

  IdMatrix() = default;
  IdMatrix(std::size_t r, std::size_t c, int fill = 0)
      : rows(r), cols(c), ids(r * c, fill) {}

  int& at(std::size_t r, std::size_t c) { return ids[r * cols + c]; }
  int at(std::size_t r, std::size_t c) const { return ids[r * cols + c]; }
  std::span<int> row(std::size_t r) { return {ids.data() + r * cols, cols}; }
  std::span<const int> row(std::size_t r) const {
    return {ids.data() + r * cols, cols};
  }
};

extern template class Tensor<float>;
extern template class Tensor<double>;

}  // namespace grec
