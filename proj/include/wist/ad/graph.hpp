#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <vector>

#include "wist/ad/tensor.hpp"

namespace wist::ad {

template <class T>
class Graph;

// Handle to a node in a Graph.
template <class T>
struct Var {
  Graph<T>* graph = nullptr;
  std::size_t id = 0;

  const Tensor<T>& value() const { return graph->value(id); }
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
  T scalar() const { return value().data.at(0); }
};

// Append-only tape. Backward walks nodes in reverse insertion order and
// accumulates gradients; parameter nodes accumulate straight into the
// parameter's own buffer.
template <class T>
class Graph {
 public:
  struct Node {
    Tensor<T> value;
    std::vector<T> grad;
    Parameter<T>* param = nullptr;
    bool requires_grad = false;
    std::function<void(Graph&, std::size_t)> backward;
  };

  // With tracking off (inference), no backward closures are recorded.
  explicit Graph(bool track = true) : track_(track) {}
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Var<T> constant(Tensor<T> t) {
    Node n;
    n.value = std::move(t);
    nodes_.push_back(std::move(n));
    return {this, nodes_.size() - 1};
  }

  Var<T> param(Parameter<T>& p) {
    Node n;
    n.param = &p;
    n.requires_grad = track_ && p.trainable;
    nodes_.push_back(std::move(n));
    return {this, nodes_.size() - 1};
  }

  // Registers the result of an operation. `backward` is dropped when no input needs a gradient.
  Var<T> record(Tensor<T> value, std::initializer_list<Var<T>> inputs, std::function<void(Graph&, std::size_t)> backward) {
    bool req = false;
    for (auto v : inputs) req = req || requires_grad(v);
    return record_req(std::move(value), req, std::move(backward));
  }

  Var<T> record(Tensor<T> value, const std::vector<Var<T>>& inputs, std::function<void(Graph&, std::size_t)> backward) {
    bool req = false;
    for (auto v : inputs) req = req || requires_grad(v);
    return record_req(std::move(value), req, std::move(backward));
  }

  const Tensor<T>& value(std::size_t id) const {
    const Node& n = nodes_[id];
    return n.param ? n.param->value : n.value;
  }

  bool requires_grad(Var<T> v) const { return nodes_[v.id].requires_grad; }

  // Gradient buffer of a node, zero-filled on first access.
  T* grad(std::size_t id) {
    Node& n = nodes_[id];
    if (n.param) return n.param->ensure_grad().data.data();
    if (n.grad.empty()) n.grad.assign(value(id).numel(), T(0));
    return n.grad.data();
  }

  bool has_grad(std::size_t id) const {
    const Node& n = nodes_[id];
    return n.param ? true : !n.grad.empty();
  }

  // Seeds d(root)/d(root) = 1 and runs the tape backwards.
  void backward(Var<T> root) {
    if (value(root.id).numel() != 1) throw ShapeError("backward needs a scalar root, got " + shape_str(value(root.id).shape));
    if (!nodes_[root.id].requires_grad) return;
    grad(root.id)[0] += T(1);
    for (std::size_t i = root.id + 1; i-- > 0;) {
      Node& n = nodes_[i];
      if (n.backward && !n.grad.empty()) n.backward(*this, i);
    }
  }

  std::size_t size() const { return nodes_.size(); }

 private:
  Var<T> record_req(Tensor<T> value, bool req, std::function<void(Graph&, std::size_t)> backward) {
    Node n;
    n.value = std::move(value);
    n.requires_grad = req;
    if (req) n.backward = std::move(backward);
    nodes_.push_back(std::move(n));
    return {this, nodes_.size() - 1};
  }

  std::vector<Node> nodes_;
  bool track_ = true;
};

}  // namespace wist::ad
