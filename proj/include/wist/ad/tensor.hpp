#pragma once

#include <cstddef>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include "wist/error.hpp"

namespace wist::ad {

// Dense row-major tensor. Operations work on rank-2 views; rank-3 appears
// only in parameter storage (stacked bilinear forms).
template <class T>
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<T> data;

  Tensor() = default;
  Tensor(std::size_t rows, std::size_t cols, T fill = T(0)) : shape{rows, cols}, data(rows * cols, fill) {}
  explicit Tensor(std::vector<std::size_t> s, T fill = T(0)) : shape(std::move(s)) {
    data.assign(numel(), fill);
  }

  static Tensor from(std::size_t rows, std::size_t cols, std::vector<T> values) {
    Tensor t;
    t.shape = {rows, cols};
    if (values.size() != rows * cols) throw ShapeError("tensor data length does not match shape");
    t.data = std::move(values);
    return t;
  }

  std::size_t numel() const {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
  }
  std::size_t rows() const { return shape.empty() ? 0 : shape[0]; }
  std::size_t cols() const { return shape.size() < 2 ? 1 : shape[shape.size() - 1]; }

  T& operator()(std::size_t r, std::size_t c) { return data[r * cols() + c]; }
  const T& operator()(std::size_t r, std::size_t c) const { return data[r * cols() + c]; }

  void zero() { std::fill(data.begin(), data.end(), T(0)); }
};

inline std::string shape_str(const std::vector<std::size_t>& s) {
  std::string out = "[";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += "x";
    out += std::to_string(s[i]);
  }
  return out + "]";
}

// A named trainable (or frozen) tensor with its gradient accumulator.
template <class T>
struct Parameter {
  std::string name;
  Tensor<T> value;
  Tensor<T> grad;  // allocated on first use
  bool trainable = true;

  Tensor<T>& ensure_grad() {
    if (grad.shape != value.shape) grad = Tensor<T>(value.shape);
    return grad;
  }
  void zero_grad() {
    if (!grad.data.empty()) grad.zero();
  }
};

}  // namespace wist::ad
