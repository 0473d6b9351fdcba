// SPDX-License-Identifier: Apache-2.0
#ifndef GHA_TENSOR_HPP_
#define GHA_TENSOR_HPP_

#include <cstddef>
#include <functional>
#include <memory>
#include <numeric>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace gha::ag {

using Shape = std::vector<std::size_t>;

inline std::size_t numel(const Shape& s) {
  std::size_t n = 1;
  for (std::size_t e : s) n *= e;
  return n;
}

inline std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
  os << "]";
  return os.str();
}

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

namespace detail {

template <class T>
struct TensorImpl {
  Shape shape;
  std::vector<T> data;
  std::vector<T> grad;  // empty until touched by backward
  bool requires_grad = false;
  int node = -1;  // tape node that produced this tensor, -1 for leaves
};

}  // namespace detail

// Value-semantics handle to a shared buffer. Data is immutable once a tensor
// has entered a tape (only grad buffers and optimizer-owned leaves mutate).
template <class T>
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false) {
    auto impl = std::make_shared<detail::TensorImpl<T>>();
    impl->data.assign(numel(shape), T(0));
    impl->shape = std::move(shape);
    impl->requires_grad = requires_grad;
    return Tensor(std::move(impl));
  }

  static Tensor full(Shape shape, T value) {
    Tensor t = zeros(std::move(shape));
    for (T& v : t.data()) v = value;
    return t;
  }

  static Tensor from_data(Shape shape, std::vector<T> data, bool requires_grad = false) {
    require(numel(shape) == data.size(), "tensor: data length does not match shape " + shape_str(shape));
    auto impl = std::make_shared<detail::TensorImpl<T>>();
    impl->shape = std::move(shape);
    impl->data = std::move(data);
    impl->requires_grad = requires_grad;
    return Tensor(std::move(impl));
  }

  static Tensor scalar(T value, bool requires_grad = false) {
    return from_data({1}, {value}, requires_grad);
  }

  // `const Tensor&` means the handle is stable; the shared buffer behind it
  // is mutable through any copy (grad accumulation, optimizer steps).
  bool defined() const { return impl_ != nullptr; }
  const Shape& shape() const { return impl_->shape; }
  std::size_t rank() const { return impl_->shape.size(); }
  std::size_t dim(std::size_t i) const { return impl_->shape[i]; }
  std::size_t size() const { return impl_->data.size(); }

  std::span<T> data() const { return impl_->data; }

  bool requires_grad() const { return impl_->requires_grad; }
  void set_requires_grad(bool rg) const { impl_->requires_grad = rg; }

  bool has_grad() const { return !impl_->grad.empty(); }
  void ensure_grad() const {
    if (impl_->grad.empty()) impl_->grad.assign(impl_->data.size(), T(0));
  }
  std::span<T> grad() const {
    ensure_grad();
    return impl_->grad;
  }
  std::span<const T> grad_view() const { return impl_->grad; }
  void zero_grad() const {
    for (T& g : impl_->grad) g = T(0);
  }

  T item() const {
    require(size() == 1, "item: tensor is not scalar, shape " + shape_str(shape()));
    return impl_->data[0];
  }

  int node() const { return impl_->node; }
  void set_node(int n) const { impl_->node = n; }

  detail::TensorImpl<T>* impl() const { return impl_.get(); }
  bool same_buffer(const Tensor& other) const { return impl_ == other.impl_; }

 private:
  explicit Tensor(std::shared_ptr<detail::TensorImpl<T>> impl) : impl_(std::move(impl)) {}
  std::shared_ptr<detail::TensorImpl<T>> impl_;
};

// Reverse-mode tape. Operations are recorded in execution order, which is a
// topological order by construction; backward replays the vector-Jacobian
// rules in reverse. A tape is single-threaded; independent tapes may run on
// independent threads.
template <class T>
class Tape {
 public:
  struct Node {
    std::vector<Tensor<T>> inputs;
    Tensor<T> output;
    std::function<void()> vjp;
  };

  int record(std::vector<Tensor<T>> inputs, Tensor<T> output, std::function<void()> vjp) {
    nodes_.push_back(Node{std::move(inputs), std::move(output), std::move(vjp)});
    int id = static_cast<int>(nodes_.size()) - 1;
    nodes_.back().output.set_node(id);
    return id;
  }

  // Seeds d(loss)/d(loss) = 1 and accumulates into every reachable leaf
  // grad. Intermediate cotangents are reset first, so a repeated call adds
  // the same contribution again.
  void backward(Tensor<T> loss) {
    require(loss.defined() && loss.size() == 1, "backward: loss must be a scalar tensor");
    for (auto& n : nodes_) n.output.zero_grad();
    loss.grad()[0] += T(1);
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it)
      if (it->vjp) it->vjp();
  }

  std::size_t size() const { return nodes_.size(); }
  const Node& node(std::size_t i) const { return nodes_[i]; }
  void clear() { nodes_.clear(); }

 private:
  std::vector<Node> nodes_;
};

}  // namespace gha::ag

#endif  // GHA_TENSOR_HPP_
