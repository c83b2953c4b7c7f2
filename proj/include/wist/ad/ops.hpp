#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "wist/ad/graph.hpp"
#include "wist/random.hpp"

namespace wist::ad {

namespace detail {

template <class T>
T* grad_if(Graph<T>& g, Var<T> v) {
  return g.requires_grad(v) ? g.grad(v.id) : nullptr;
}

template <class T>
void require_same(const char* op, const Tensor<T>& a, const Tensor<T>& b) {
  if (a.shape != b.shape) {
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a.shape) + " vs " + shape_str(b.shape));
  }
}

template <class T>
void require_rank2(const char* op, const Tensor<T>& a) {
  if (a.shape.size() != 2) throw ShapeError(std::string(op) + ": expected a matrix, got " + shape_str(a.shape));
}

// C (r x c) += A (r x k) * B (k x c), with optional transposes expressed by the caller.
template <class T>
void gemm_nn(const T* a, const T* b, T* c, std::size_t r, std::size_t k, std::size_t n) {
  // Panels of B stay in cache across all rows of A; each c(i,j) still
  // accumulates in increasing p, so results do not depend on r.
  constexpr std::size_t kPanel = 64;
  for (std::size_t p0 = 0; p0 < k; p0 += kPanel) {
    const std::size_t p1 = std::min(k, p0 + kPanel);
    for (std::size_t i = 0; i < r; ++i) {
      T* crow = c + i * n;
      for (std::size_t p = p0; p < p1; ++p) {
        const T av = a[i * k + p];
        if (av == T(0)) continue;
        const T* brow = b + p * n;
        for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
      }
    }
  }
}

// C (r x n) += A (r x k) * B^T where B is (n x k).
template <class T>
void gemm_nt(const T* a, const T* b, T* c, std::size_t r, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < r; ++i) {
    const T* arow = a + i * k;
    for (std::size_t j = 0; j < n; ++j) {
      const T* brow = b + j * k;
      T s = T(0);
      for (std::size_t p = 0; p < k; ++p) s += arow[p] * brow[p];
      c[i * n + j] += s;
    }
  }
}

// C (k x n) += A^T * B where A is (r x k), B is (r x n).
template <class T>
void gemm_tn(const T* a, const T* b, T* c, std::size_t r, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < r; ++i) {
    const T* arow = a + i * k;
    const T* brow = b + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const T av = arow[p];
      if (av == T(0)) continue;
      T* crow = c + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

template <class T, class F, class DF>
Var<T> unary(Var<T> x, F f, DF df) {
  Graph<T>& g = *x.graph;
  const Tensor<T>& xv = x.value();
  Tensor<T> out(xv.shape);
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] = f(xv.data[i]);
  return g.record(std::move(out), {x}, [x, df](Graph<T>& g, std::size_t self) {
    const T* gy = g.grad(self);
    const Tensor<T>& xv = g.value(x.id);
    const Tensor<T>& yv = g.value(self);
    T* gx = g.grad(x.id);
    for (std::size_t i = 0; i < xv.data.size(); ++i) gx[i] += gy[i] * df(xv.data[i], yv.data[i]);
  });
}

}  // namespace detail

template <class T>
Var<T> matmul(Var<T> a, Var<T> b) {
  const auto& av = a.value();
  const auto& bv = b.value();
  detail::require_rank2("matmul", av);
  detail::require_rank2("matmul", bv);
  if (av.cols() != bv.rows()) {
    throw ShapeError("matmul: shape mismatch " + shape_str(av.shape) + " vs " + shape_str(bv.shape));
  }
  const std::size_t r = av.rows(), k = av.cols(), n = bv.cols();
  Tensor<T> out(r, n);
  detail::gemm_nn(av.data.data(), bv.data.data(), out.data.data(), r, k, n);
  return a.graph->record(std::move(out), {a, b}, [a, b, r, k, n](Graph<T>& g, std::size_t self) {
    const T* gy = g.grad(self);
    if (T* ga = detail::grad_if(g, a)) detail::gemm_nt(gy, b.value().data.data(), ga, r, n, k);
    if (T* gb = detail::grad_if(g, b)) detail::gemm_tn(a.value().data.data(), gy, gb, r, k, n);
  });
}

template <class T>
Var<T> transpose(Var<T> a) {
  const auto& av = a.value();
  detail::require_rank2("transpose", av);
  const std::size_t r = av.rows(), c = av.cols();
  Tensor<T> out(c, r);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out(j, i) = av(i, j);
  return a.graph->record(std::move(out), {a}, [a, r, c](Graph<T>& g, std::size_t self) {
    const T* gy = g.grad(self);
    T* ga = g.grad(a.id);
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) ga[i * c + j] += gy[j * r + i];
  });
}

template <class T>
Var<T> add(Var<T> a, Var<T> b) {
  detail::require_same("add", a.value(), b.value());
  Tensor<T> out = a.value();
  const auto& bv = b.value();
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += bv.data[i];
  return a.graph->record(std::move(out), {a, b}, [a, b](Graph<T>& g, std::size_t self) {
    const T* gy = g.grad(self);
    const std::size_t n = g.value(self).data.size();
    if (T* ga = detail::grad_if(g, a))
      for (std::size_t i = 0; i < n; ++i) ga[i] += gy[i];
    if (T* gb = detail::grad_if(g, b))
      for (std::size_t i = 0; i < n; ++i) gb[i] += gy[i];
  });
}

template <class T>
Var<T> sub(Var<T> a, Var<T> b) {
  detail::require_same("sub", a.value(), b.value());
  Tensor<T> out = a.value();
  const auto& bv = b.value();
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] -= bv.data[i];
  return a.graph->record(std::move(out), {a, b}, [a, b](Graph<T>& g, std::size_t self) {
    const T* gy = g.grad(self);
    const std::size_t n = g.value(self).data.size();
    if (T* ga = detail::grad_if(g, a))
      for (std::size_t i = 0; i < n; ++i) ga[i] += gy[i];
    if (T* gb = detail::grad_if(g, b))
      for (std::size_t i = 0; i < n; ++i) gb[i] -= gy[i];
  });
}

// Elementwise product.
template <class T>
Var<T> mul(Var<T> a, Var<T> b) {
  detail::require_same("mul", a.value(), b.value());
  Tensor<T> out = a.value();
  const auto& bv = b.value();
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] *= bv.data[i];
  return a.graph->record(std::move(out), {a, b}, [a, b](Graph<T>& g, std::size_t self) {
    const T* gy = g.grad(self);
    const auto& av = a.value();
    const auto& bv = b.value();
    const std::size_t n = av.data.size();
    if (T* ga = detail::grad_if(g, a))
      for (std::size_t i = 0; i < n; ++i) ga[i] += gy[i] * bv.data[i];
    if (T* gb = detail::grad_if(g, b))
      for (std::size_t i = 0; i < n; ++i) gb[i] += gy[i] * av.data[i];
  });
}

template <class T>
Var<T> scale(Var<T> a, T s) {
  Tensor<T> out = a.value();
  for (auto& v : out.data) v *= s;
  return a.graph->record(std::move(out), {a}, [a, s](Graph<T>& g, std::size_t self) {
    const T* gy = g.grad(self);
    T* ga = g.grad(a.id);
    const std::size_t n = a.value().data.size();
    for (std::size_t i = 0; i < n; ++i) ga[i] += s * gy[i];
  });
}

// a (r x c) + b (1 x c), b broadcast over rows.
template <class T>
Var<T> add_bias(Var<T> a, Var<T> b) {
  const auto& av = a.value();
  const auto& bv = b.value();
  detail::require_rank2("add_bias", av);
  if (bv.numel() != av.cols()) {
    throw ShapeError("add_bias: shape mismatch " + shape_str(av.shape) + " vs " + shape_str(bv.shape));
  }
  Tensor<T> out = av;
  const std::size_t r = av.rows(), c = av.cols();
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out.data[i * c + j] += bv.data[j];
  return a.graph->record(std::move(out), {a, b}, [a, b, r, c](Graph<T>& g, std::size_t self) {
    const T* gy = g.grad(self);
    if (T* ga = detail::grad_if(g, a))
      for (std::size_t i = 0; i < r * c; ++i) ga[i] += gy[i];
    if (T* gb = detail::grad_if(g, b))
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) gb[j] += gy[i * c + j];
  });
}

template <class T>
Var<T> tanh(Var<T> x) {
  return detail::unary(x, [](T v) { return std::tanh(v); }, [](T, T y) { return T(1) - y * y; });
}

template <class T>
Var<T> sigmoid(Var<T> x) {
  return detail::unary(
      x,
      [](T v) {
        if (v >= T(0)) return T(1) / (T(1) + std::exp(-v));
        const T e = std::exp(v);
        return e / (T(1) + e);
      },
      [](T, T y) { return y * (T(1) - y); });
}

template <class T>
Var<T> relu(Var<T> x) {
  return detail::unary(x, [](T v) { return v > T(0) ? v : T(0); }, [](T v, T) { return v > T(0) ? T(1) : T(0); });
}

template <class T>
Var<T> leaky_relu(Var<T> x, T slope = T(0.1)) {
  return detail::unary(
      x, [slope](T v) { return v > T(0) ? v : slope * v; }, [slope](T v, T) { return v > T(0) ? T(1) : slope; });
}

template <class T>
Var<T> concat_cols(const std::vector<Var<T>>& parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no inputs");
  const std::size_t r = parts[0].rows();
  std::size_t c = 0;
  for (auto p : parts) {
    detail::require_rank2("concat_cols", p.value());
    if (p.rows() != r) {
      throw ShapeError("concat_cols: shape mismatch " + shape_str(parts[0].value().shape) + " vs " +
                       shape_str(p.value().shape));
    }
    c += p.cols();
  }
  Tensor<T> out(r, c);
  std::size_t off = 0;
  for (auto p : parts) {
    const auto& pv = p.value();
    const std::size_t pc = pv.cols();
    for (std::size_t i = 0; i < r; ++i) std::copy_n(pv.data.data() + i * pc, pc, out.data.data() + i * c + off);
    off += pc;
  }
  return parts[0].graph->record(std::move(out), parts, [parts, r, c](Graph<T>& g, std::size_t self) {
    const T* gy = g.grad(self);
    std::size_t off = 0;
    for (auto p : parts) {
      const std::size_t pc = p.cols();
      if (T* gp = detail::grad_if(g, p)) {
        for (std::size_t i = 0; i < r; ++i)
          for (std::size_t j = 0; j < pc; ++j) gp[i * pc + j] += gy[i * c + off + j];
      }
      off += pc;
    }
  });
}

template <class T>
Var<T> concat_rows(const std::vector<Var<T>>& parts) {
  if (parts.empty()) throw ShapeError("concat_rows: no inputs");
  const std::size_t c = parts[0].cols();
  std::size_t r = 0;
  for (auto p : parts) {
    detail::require_rank2("concat_rows", p.value());
    if (p.cols() != c) {
      throw ShapeError("concat_rows: shape mismatch " + shape_str(parts[0].value().shape) + " vs " +
                       shape_str(p.value().shape));
    }
    r += p.rows();
  }
  Tensor<T> out(r, c);
  std::size_t off = 0;
  for (auto p : parts) {
    const auto& pv = p.value();
    std::copy(pv.data.begin(), pv.data.end(), out.data.begin() + static_cast<std::ptrdiff_t>(off));
    off += pv.data.size();
  }
  return parts[0].graph->record(std::move(out), parts, [parts](Graph<T>& g, std::size_t self) {
    const T* gy = g.grad(self);
    std::size_t off = 0;
    for (auto p : parts) {
      const std::size_t n = p.value().data.size();
      if (T* gp = detail::grad_if(g, p))
        for (std::size_t i = 0; i < n; ++i) gp[i] += gy[off + i];
      off += n;
    }
  });
}

// Columns [begin, end).
template <class T>
Var<T> slice_cols(Var<T> a, std::size_t begin, std::size_t end) {
  const auto& av = a.value();
  detail::require_rank2("slice_cols", av);
  if (begin > end || end > av.cols()) {
    throw ShapeError("slice_cols: [" + std::to_string(begin) + "," + std::to_string(end) + ") out of " +
                     shape_str(av.shape));
  }
  const std::size_t r = av.rows(), c = av.cols(), w = end - begin;
  Tensor<T> out(r, w);
  for (std::size_t i = 0; i < r; ++i) std::copy_n(av.data.data() + i * c + begin, w, out.data.data() + i * w);
  return a.graph->record(std::move(out), {a}, [a, r, c, w, begin](Graph<T>& g, std::size_t self) {
    const T* gy = g.grad(self);
    T* ga = g.grad(a.id);
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < w; ++j) ga[i * c + begin + j] += gy[i * w + j];
  });
}

// Rows [begin, end).
template <class T>
Var<T> slice_rows(Var<T> a, std::size_t begin, std::size_t end) {
  const auto& av = a.value();
  detail::require_rank2("slice_rows", av);
  if (begin > end || end > av.rows()) {
    throw ShapeError("slice_rows: [" + std::to_string(begin) + "," + std::to_string(end) + ") out of " +
                     shape_str(av.shape));
  }
  const std::size_t c = av.cols();
  Tensor<T> out(end - begin, c);
  std::copy(av.data.begin() + static_cast<std::ptrdiff_t>(begin * c),
            av.data.begin() + static_cast<std::ptrdiff_t>(end * c), out.data.begin());
  return a.graph->record(std::move(out), {a}, [a, begin, c](Graph<T>& g, std::size_t self) {
    const T* gy = g.grad(self);
    T* ga = g.grad(a.id) + begin * c;
    const std::size_t n = g.value(self).data.size();
    for (std::size_t i = 0; i < n; ++i) ga[i] += gy[i];
  });
}

template <class T>
Var<T> row(Var<T> a, std::size_t i) {
  return slice_rows(a, i, i + 1);
}

// Rows of `table` selected by `ids`.
template <class T>
Var<T> embedding_lookup(Var<T> table, const std::vector<std::size_t>& ids) {
  const auto& tv = table.value();
  detail::require_rank2("embedding_lookup", tv);
  const std::size_t d = tv.cols();
  Tensor<T> out(ids.size(), d);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] >= tv.rows()) {
      throw ShapeError("embedding_lookup: id " + std::to_string(ids[i]) + " outside table " + shape_str(tv.shape));
    }
    std::copy_n(tv.data.data() + ids[i] * d, d, out.data.data() + i * d);
  }
  return table.graph->record(std::move(out), {table}, [table, ids, d](Graph<T>& g, std::size_t self) {
    const T* gy = g.grad(self);
    T* gt = g.grad(table.id);
    for (std::size_t i = 0; i < ids.size(); ++i)
      for (std::size_t j = 0; j < d; ++j) gt[ids[i] * d + j] += gy[i * d + j];
  });
}

// Row-wise softmax.
template <class T>
Var<T> softmax(Var<T> a) {
  const auto& av = a.value();
  detail::require_rank2("softmax", av);
  const std::size_t r = av.rows(), c = av.cols();
  Tensor<T> out(r, c);
  for (std::size_t i = 0; i < r; ++i) {
    const T* x = av.data.data() + i * c;
    T* y = out.data.data() + i * c;
    const T m = *std::max_element(x, x + c);
    T z = T(0);
    for (std::size_t j = 0; j < c; ++j) z += (y[j] = std::exp(x[j] - m));
    for (std::size_t j = 0; j < c; ++j) y[j] /= z;
  }
  return a.graph->record(std::move(out), {a}, [a, r, c](Graph<T>& g, std::size_t self) {
    const T* gy = g.grad(self);
    const auto& y = g.value(self).data;
    T* ga = g.grad(a.id);
    for (std::size_t i = 0; i < r; ++i) {
      T dot = T(0);
      for (std::size_t j = 0; j < c; ++j) dot += gy[i * c + j] * y[i * c + j];
      for (std::size_t j = 0; j < c; ++j) ga[i * c + j] += y[i * c + j] * (gy[i * c + j] - dot);
    }
  });
}

// Inverted-dropout mask: entries are 0 or 1/(1-rate).
template <class T>
Tensor<T> dropout_mask(std::size_t rows, std::size_t cols, double rate, Rng& rng) {
  if (rate < 0.0 || rate >= 1.0) throw ShapeError("dropout rate must be in [0,1)");
  Tensor<T> m(rows, cols, T(1));
  if (rate == 0.0) return m;
  const T keep = T(1.0 / (1.0 - rate));
  for (auto& v : m.data) v = rng.uniform() < rate ? T(0) : keep;
  return m;
}

// Multiplies by a fixed mask; a 1 x c mask is shared by every row.
template <class T>
Var<T> dropout(Var<T> a, const Tensor<T>& mask) {
  const auto& av = a.value();
  detail::require_rank2("dropout", av);
  const std::size_t r = av.rows(), c = av.cols();
  const bool shared = mask.rows() == 1 && mask.cols() == c;
  if (!shared && mask.shape != av.shape) {
    throw ShapeError("dropout: shape mismatch " + shape_str(av.shape) + " vs " + shape_str(mask.shape));
  }
  Tensor<T> out = av;
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out.data[i * c + j] *= mask.data[shared ? j : i * c + j];
  return a.graph->record(std::move(out), {a}, [a, mask, shared, r, c](Graph<T>& g, std::size_t self) {
    const T* gy = g.grad(self);
    T* ga = g.grad(a.id);
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) ga[i * c + j] += gy[i * c + j] * mask.data[shared ? j : i * c + j];
  });
}

// x (n x a) * W (a x b) * y^T (b x m) -> n x m.
template <class T>
Var<T> bilinear(Var<T> x, Var<T> w, Var<T> y) {
  const auto& xv = x.value();
  const auto& wv = w.value();
  const auto& yv = y.value();
  detail::require_rank2("bilinear", xv);
  detail::require_rank2("bilinear", wv);
  detail::require_rank2("bilinear", yv);
  if (xv.cols() != wv.rows() || wv.cols() != yv.cols()) {
    throw ShapeError("bilinear: shape mismatch " + shape_str(xv.shape) + " x " + shape_str(wv.shape) + " x " +
                     shape_str(yv.shape) + "^T");
  }
  const std::size_t n = xv.rows(), a = xv.cols(), b = wv.cols(), m = yv.rows();
  std::vector<T> xw(n * b, T(0));
  detail::gemm_nn(xv.data.data(), wv.data.data(), xw.data(), n, a, b);
  Tensor<T> out(n, m);
  detail::gemm_nt(xw.data(), yv.data.data(), out.data.data(), n, b, m);
  return x.graph->record(std::move(out), {x, w, y}, [x, w, y, n, a, b, m](Graph<T>& g, std::size_t self) {
    const T* gs = g.grad(self);
    const auto& xv = x.value();
    const auto& wv = w.value();
    const auto& yv = y.value();
    T* gx = detail::grad_if(g, x);
    T* gw = detail::grad_if(g, w);
    if (gx || gw) {
      // gs (n x m) * y (m x b) = n x b
      std::vector<T> gsy(n * b, T(0));
      detail::gemm_nn(gs, yv.data.data(), gsy.data(), n, m, b);
      if (gx) detail::gemm_nt(gsy.data(), wv.data.data(), gx, n, b, a);
      if (gw) detail::gemm_tn(xv.data.data(), gsy.data(), gw, n, a, b);
    }
    if (T* gy = detail::grad_if(g, y)) {
      std::vector<T> xw(n * b, T(0));
      detail::gemm_nn(xv.data.data(), wv.data.data(), xw.data(), n, a, b);
      detail::gemm_tn(gs, xw.data(), gy, n, m, b);
    }
  });
}

// Scales row i of m (r x c) by s(i, 0).
template <class T>
Var<T> scale_rows(Var<T> m, Var<T> s) {
  const auto& mv = m.value();
  const auto& sv = s.value();
  detail::require_rank2("scale_rows", mv);
  if (sv.numel() != mv.rows()) {
    throw ShapeError("scale_rows: shape mismatch " + shape_str(mv.shape) + " vs " + shape_str(sv.shape));
  }
  const std::size_t r = mv.rows(), c = mv.cols();
  Tensor<T> out = mv;
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out.data[i * c + j] *= sv.data[i];
  return m.graph->record(std::move(out), {m, s}, [m, s, r, c](Graph<T>& g, std::size_t self) {
    const T* gy = g.grad(self);
    const auto& mv = m.value();
    const auto& sv = s.value();
    if (T* gm = detail::grad_if(g, m))
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) gm[i * c + j] += gy[i * c + j] * sv.data[i];
    if (T* gs = detail::grad_if(g, s))
      for (std::size_t i = 0; i < r; ++i) {
        T acc = T(0);
        for (std::size_t j = 0; j < c; ++j) acc += gy[i * c + j] * mv.data[i * c + j];
        gs[i] += acc;
      }
  });
}

// Column means -> 1 x c.
template <class T>
Var<T> mean_rows(Var<T> a) {
  const auto& av = a.value();
  detail::require_rank2("mean_rows", av);
  const std::size_t r = av.rows(), c = av.cols();
  if (r == 0) throw ShapeError("mean_rows: empty input");
  Tensor<T> out(1, c);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out.data[j] += av.data[i * c + j];
  for (auto& v : out.data) v /= T(r);
  return a.graph->record(std::move(out), {a}, [a, r, c](Graph<T>& g, std::size_t self) {
    const T* gy = g.grad(self);
    T* ga = g.grad(a.id);
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) ga[i * c + j] += gy[j] / T(r);
  });
}

template <class T>
Var<T> sum_all(Var<T> a) {
  T s = T(0);
  for (T v : a.value().data) s += v;
  Tensor<T> out(1, 1, s);
  return a.graph->record(std::move(out), {a}, [a](Graph<T>& g, std::size_t self) {
    const T gy = g.grad(self)[0];
    T* ga = g.grad(a.id);
    const std::size_t n = a.value().data.size();
    for (std::size_t i = 0; i < n; ++i) ga[i] += gy;
  });
}

inline constexpr int kIgnoreTarget = -1;

// Mean over unmasked rows of -log softmax(logits)[target]; rows whose target
// is kIgnoreTarget are skipped.
template <class T>
Var<T> cross_entropy(Var<T> logits, const std::vector<int>& targets) {
  const auto& lv = logits.value();
  detail::require_rank2("cross_entropy", lv);
  const std::size_t r = lv.rows(), k = lv.cols();
  if (targets.size() != r) {
    throw ShapeError("cross_entropy: " + std::to_string(targets.size()) + " targets for " + shape_str(lv.shape));
  }
  std::size_t active = 0;
  for (int t : targets) {
    if (t == kIgnoreTarget) continue;
    if (t < 0 || static_cast<std::size_t>(t) >= k) throw ShapeError("cross_entropy: target out of range");
    ++active;
  }
  if (active == 0) throw ShapeError("cross_entropy: all positions masked");
  std::vector<T> probs(r * k, T(0));
  T loss = T(0);
  for (std::size_t i = 0; i < r; ++i) {
    if (targets[i] == kIgnoreTarget) continue;
    const T* x = lv.data.data() + i * k;
    const T m = *std::max_element(x, x + k);
    T z = T(0);
    for (std::size_t j = 0; j < k; ++j) z += (probs[i * k + j] = std::exp(x[j] - m));
    for (std::size_t j = 0; j < k; ++j) probs[i * k + j] /= z;
    loss -= x[targets[i]] - m - std::log(z);
  }
  loss /= T(active);
  Tensor<T> out(1, 1, loss);
  return logits.graph->record(std::move(out), {logits},
                              [logits, targets, probs = std::move(probs), r, k, active](Graph<T>& g, std::size_t self) {
                                const T gy = g.grad(self)[0] / T(active);
                                T* gl = g.grad(logits.id);
                                for (std::size_t i = 0; i < r; ++i) {
                                  if (targets[i] == kIgnoreTarget) continue;
                                  for (std::size_t j = 0; j < k; ++j) gl[i * k + j] += gy * probs[i * k + j];
                                  gl[i * k + targets[i]] -= gy;
                                }
                              });
}

// out(i, l) = mats[l](rows[i], cols[i]).
template <class T>
Var<T> gather_cells(const std::vector<Var<T>>& mats, const std::vector<std::size_t>& rows,
                    const std::vector<std::size_t>& cols) {
  if (mats.empty()) throw ShapeError("gather_cells: no inputs");
  if (rows.size() != cols.size()) throw ShapeError("gather_cells: index lists differ in length");
  const std::size_t L = mats.size(), m = rows.size();
  const auto& shape0 = mats[0].value().shape;
  for (auto v : mats) detail::require_same("gather_cells", mats[0].value(), v.value());
  const std::size_t c = mats[0].cols();
  for (std::size_t i = 0; i < m; ++i) {
    if (rows[i] >= shape0[0] || cols[i] >= c) throw ShapeError("gather_cells: index outside " + shape_str(shape0));
  }
  Tensor<T> out(m, L);
  for (std::size_t l = 0; l < L; ++l) {
    const auto& v = mats[l].value();
    for (std::size_t i = 0; i < m; ++i) out(i, l) = v(rows[i], cols[i]);
  }
  return mats[0].graph->record(std::move(out), mats, [mats, rows, cols, L, m, c](Graph<T>& g, std::size_t self) {
    const T* gy = g.grad(self);
    for (std::size_t l = 0; l < L; ++l) {
      if (T* gm = detail::grad_if(g, mats[l]))
        for (std::size_t i = 0; i < m; ++i) gm[rows[i] * c + cols[i]] += gy[i * L + l];
    }
  });
}

// Matrix `index` of a rank-3 stack {L, a, b}.
template <class T>
Var<T> slab(Var<T> stack, std::size_t index) {
  const auto& sv = stack.value();
  if (sv.shape.size() != 3 || index >= sv.shape[0]) {
    throw ShapeError("slab: index " + std::to_string(index) + " outside " + shape_str(sv.shape));
  }
  const std::size_t a = sv.shape[1], b = sv.shape[2];
  Tensor<T> out(a, b);
  std::copy_n(sv.data.data() + index * a * b, a * b, out.data.data());
  return stack.graph->record(std::move(out), {stack}, [stack, index, a, b](Graph<T>& g, std::size_t self) {
    const T* gy = g.grad(self);
    T* gs = g.grad(stack.id) + index * a * b;
    for (std::size_t i = 0; i < a * b; ++i) gs[i] += gy[i];
  });
}

template <class T>
Var<T> ones(Graph<T>& g, std::size_t rows, std::size_t cols) {
  return g.constant(Tensor<T>(rows, cols, T(1)));
}

template <class T>
Var<T> zeros(Graph<T>& g, std::size_t rows, std::size_t cols) {
  return g.constant(Tensor<T>(rows, cols, T(0)));
}

// [x, 1]: appends a column of ones (bias trick for bilinear scorers).
template <class T>
Var<T> append_ones(Var<T> x) {
  return concat_cols<T>({x, ones(*x.graph, x.rows(), 1)});
}

}  // namespace wist::ad
