#pragma once

#include <cmath>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "wist/ad/tensor.hpp"
#include "wist/random.hpp"

namespace wist::ad {

// Owns parameters in creation order; names are unique.
template <class T>
class ParameterStore {
 public:
  Parameter<T>& add(const std::string& name, std::vector<std::size_t> shape, bool trainable = true) {
    if (index_.count(name)) throw ShapeError("duplicate parameter '" + name + "'");
    auto p = std::make_unique<Parameter<T>>();
    p->name = name;
    p->value = Tensor<T>(std::move(shape));
    p->trainable = trainable;
    index_[name] = params_.size();
    params_.push_back(std::move(p));
    return *params_.back();
  }

  Parameter<T>& get(const std::string& name) {
    auto it = index_.find(name);
    if (it == index_.end()) throw ShapeError("unknown parameter '" + name + "'");
    return *params_[it->second];
  }
  const Parameter<T>& get(const std::string& name) const {
    return const_cast<ParameterStore*>(this)->get(name);
  }
  bool contains(const std::string& name) const { return index_.count(name) > 0; }

  std::vector<Parameter<T>*> all() {
    std::vector<Parameter<T>*> out;
    for (auto& p : params_) out.push_back(p.get());
    return out;
  }
  std::vector<const Parameter<T>*> all() const {
    std::vector<const Parameter<T>*> out;
    for (auto& p : params_) out.push_back(p.get());
    return out;
  }
  std::vector<Parameter<T>*> trainable() {
    std::vector<Parameter<T>*> out;
    for (auto& p : params_) {
      if (p->trainable) out.push_back(p.get());
    }
    return out;
  }

  void zero_grad() {
    for (auto& p : params_) p->zero_grad();
  }

  std::size_t count() const {
    std::size_t n = 0;
    for (auto& p : params_) n += p->value.numel();
    return n;
  }

 private:
  std::vector<std::unique_ptr<Parameter<T>>> params_;
  std::map<std::string, std::size_t> index_;
};

namespace init {

// While a SkipInit is alive the initializers below leave tensors untouched;
// used when every value is about to be overwritten from a checkpoint.
inline bool& skipping() {
  thread_local bool skip = false;
  return skip;
}
struct SkipInit {
  bool prev = skipping();
  SkipInit() { skipping() = true; }
  ~SkipInit() { skipping() = prev; }
  SkipInit(const SkipInit&) = delete;
  SkipInit& operator=(const SkipInit&) = delete;
};

// Uniform(-sqrt(6/(fan_in+fan_out)), +...).
template <class T>
void xavier_uniform(Tensor<T>& t, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  if (skipping()) return;
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (auto& v : t.data) v = static_cast<T>(rng.uniform(-bound, bound));
}

template <class T>
void normal(Tensor<T>& t, double stddev, Rng& rng) {
  if (skipping()) return;
  for (auto& v : t.data) v = static_cast<T>(stddev * rng.normal());
}

// Fills a rows x cols block (row stride `stride`, starting at `offset`) with
// an orthogonal matrix: modified Gram-Schmidt over Gaussian vectors. When
// rows < cols the rows are orthonormal, otherwise the columns are.
template <class T>
void orthogonal_block(Tensor<T>& t, std::size_t offset, std::size_t stride, std::size_t rows, std::size_t cols,
                      Rng& rng) {
  if (skipping()) return;
  const bool by_rows = rows <= cols;
  const std::size_t nvec = by_rows ? rows : cols;
  const std::size_t len = by_rows ? cols : rows;
  std::vector<std::vector<double>> q;
  while (q.size() < nvec) {
    std::vector<double> v(len);
    for (auto& x : v) x = rng.normal();
    for (const auto& u : q) {
      double dot = 0;
      for (std::size_t i = 0; i < len; ++i) dot += u[i] * v[i];
      for (std::size_t i = 0; i < len; ++i) v[i] -= dot * u[i];
    }
    double norm = 0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    if (norm < 1e-8) continue;
    for (auto& x : v) x /= norm;
    q.push_back(std::move(v));
  }
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c)
      t.data[offset + r * stride + c] = static_cast<T>(by_rows ? q[r][c] : q[c][r]);
}

template <class T>
void orthogonal(Tensor<T>& t, Rng& rng) {
  orthogonal_block(t, 0, t.cols(), t.rows(), t.cols(), rng);
}

}  // namespace init

}  // namespace wist::ad
