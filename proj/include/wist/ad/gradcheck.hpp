#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "wist/ad/graph.hpp"

namespace wist::ad {

struct GradCheckResult {
  double max_rel_error = 0;  // worst single coordinate
  std::size_t coords = 0;
  std::string worst;  // "param[index]"
  // Worst per-tensor ||a - n|| / max(||a||, ||n||, 1e-6). Unlike the
  // coordinate maximum it is not dominated by near-zero entries, where finite
  // differences only resolve roundoff; a tensor whose gradient vanishes
  // (e.g. by softmax shift invariance) must match to 1e-6 * threshold absolutely.
  double max_tensor_rel_error = 0;
  std::string worst_tensor;
};

// Central finite differences against reverse-mode gradients.
// `loss` must build a fresh graph and return its scalar root; it has to be
// deterministic (fixed dropout masks). `max_coords` > 0 samples evenly spaced
// coordinates per parameter instead of all of them.
inline GradCheckResult grad_check(const std::function<Var<double>(Graph<double>&)>& loss,
                                  const std::vector<Parameter<double>*>& params, double eps = 1e-5,
                                  std::size_t max_coords = 0) {
  for (auto* p : params) p->zero_grad();
  std::vector<std::vector<double>> analytic;
  {
    Graph<double> g;
    Var<double> root = loss(g);
    if (!std::isfinite(root.scalar())) throw NumericError("non-finite loss in gradient check");
    g.backward(root);
  }
  for (auto* p : params) {
    p->ensure_grad();
    analytic.push_back(p->grad.data);
  }

  auto eval = [&] {
    Graph<double> g;
    const double v = loss(g).scalar();
    if (!std::isfinite(v)) throw NumericError("non-finite loss in gradient check");
    return v;
  };

  GradCheckResult res;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    auto& data = params[pi]->value.data;
    const std::size_t n = data.size();
    const std::size_t stride = (max_coords == 0 || n <= max_coords) ? 1 : n / max_coords;
    double diff_sq = 0, a_sq = 0, n_sq = 0;
    for (std::size_t i = 0; i < n; i += stride) {
      const double orig = data[i];
      data[i] = orig + eps;
      const double up = eval();
      data[i] = orig - eps;
      const double down = eval();
      data[i] = orig;
      const double num = (up - down) / (2 * eps);
      const double a = analytic[pi][i];
      if (!std::isfinite(a)) throw NumericError("non-finite analytic gradient in '" + params[pi]->name + "'");
      const double err = std::abs(a - num) / std::max({std::abs(a), std::abs(num), 1e-8});
      diff_sq += (a - num) * (a - num);
      a_sq += a * a;
      n_sq += num * num;
      ++res.coords;
      if (err > res.max_rel_error) {
        res.max_rel_error = err;
        res.worst = params[pi]->name + "[" + std::to_string(i) + "]";
      }
    }
    const double tensor_err = std::sqrt(diff_sq) / std::max({std::sqrt(a_sq), std::sqrt(n_sq), 1e-6});
    if (tensor_err > res.max_tensor_rel_error) {
      res.max_tensor_rel_error = tensor_err;
      res.worst_tensor = params[pi]->name;
    }
  }
  for (auto* p : params) p->zero_grad();
  return res;
}

}  // namespace wist::ad
