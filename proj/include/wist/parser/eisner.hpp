#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "wist/ad/tensor.hpp"
#include "wist/error.hpp"

namespace wist::parser {

using ScoreMatrix = ad::Tensor<double>;  // (n+1) x (n+1), entry (h, d) scores arc h -> d

// First-order projective decoding with exactly one child of the virtual root.
// Ties go to the lowest split point. Returns heads[d-1] for d = 1..n.
inline std::vector<int> eisner_decode(const ScoreMatrix& scores) {
  const std::size_t N = scores.rows();
  if (N < 2 || scores.cols() != N) throw ShapeError("eisner_decode needs an (n+1)x(n+1) matrix with n >= 1");
  for (double v : scores.data) {
    if (!std::isfinite(v)) throw NumericError("eisner_decode: non-finite arc score");
  }
  const int n = static_cast<int>(N) - 1;
  constexpr double kNeg = -std::numeric_limits<double>::infinity();
  auto idx = [N](int s, int t) { return static_cast<std::size_t>(s) * N + static_cast<std::size_t>(t); };

  // Complete/incomplete spans, right-headed (head s, reaching t) and
  // left-headed (head t, reaching s).
  std::vector<double> cr(N * N, kNeg), cl(N * N, kNeg), ir(N * N, kNeg), il(N * N, kNeg);
  std::vector<int> cr_bp(N * N, -1), cl_bp(N * N, -1), ir_bp(N * N, -1), il_bp(N * N, -1);
  for (int s = 0; s <= n; ++s) {
    cr[idx(s, s)] = 0;
    cl[idx(s, s)] = 0;
  }

  for (int width = 1; width <= n; ++width) {
    for (int s = 0; s + width <= n; ++s) {
      const int t = s + width;
      // Incomplete spans: s -> t and t -> s.
      double best_r = kNeg, best_l = kNeg;
      int arg_r = -1, arg_l = -1;
      for (int r = s; r < t; ++r) {
        const double inner = cr[idx(s, r)] + cl[idx(r + 1, t)];
        // The root may only take its single child with an empty left side.
        if (!(s == 0 && r != 0) && inner > best_r) {
          best_r = inner;
          arg_r = r;
        }
        if (s != 0 && inner > best_l) {
          best_l = inner;
          arg_l = r;
        }
      }
      if (arg_r >= 0) {
        ir[idx(s, t)] = best_r + scores(static_cast<std::size_t>(s), static_cast<std::size_t>(t));
        ir_bp[idx(s, t)] = arg_r;
      }
      if (arg_l >= 0) {
        il[idx(s, t)] = best_l + scores(static_cast<std::size_t>(t), static_cast<std::size_t>(s));
        il_bp[idx(s, t)] = arg_l;
      }

      // Complete spans.
      double bc_l = kNeg;
      int ac_l = -1;
      for (int r = s; r < t; ++r) {
        const double v = cl[idx(s, r)] + il[idx(r, t)];
        if (v > bc_l) {
          bc_l = v;
          ac_l = r;
        }
      }
      cl[idx(s, t)] = bc_l;
      cl_bp[idx(s, t)] = ac_l;

      double bc_r = kNeg;
      int ac_r = -1;
      for (int r = s + 1; r <= t; ++r) {
        // Spans headed by the root must close over the whole sentence.
        if (s == 0 && t != n) break;
        const double v = ir[idx(s, r)] + cr[idx(r, t)];
        if (v > bc_r) {
          bc_r = v;
          ac_r = r;
        }
      }
      cr[idx(s, t)] = bc_r;
      cr_bp[idx(s, t)] = ac_r;
    }
  }

  std::vector<int> heads(static_cast<std::size_t>(n), -1);
  // Iterative backtrack: (kind, s, t) with kind 0 = cr, 1 = cl, 2 = ir, 3 = il.
  struct Item {
    int kind, s, t;
  };
  std::vector<Item> stack{{0, 0, n}};
  while (!stack.empty()) {
    Item it = stack.back();
    stack.pop_back();
    if (it.s == it.t) continue;
    switch (it.kind) {
      case 0: {
        const int r = cr_bp[idx(it.s, it.t)];
        stack.push_back({2, it.s, r});
        stack.push_back({0, r, it.t});
        break;
      }
      case 1: {
        const int r = cl_bp[idx(it.s, it.t)];
        stack.push_back({1, it.s, r});
        stack.push_back({3, r, it.t});
        break;
      }
      case 2: {
        heads[static_cast<std::size_t>(it.t - 1)] = it.s;
        const int r = ir_bp[idx(it.s, it.t)];
        stack.push_back({0, it.s, r});
        stack.push_back({1, r + 1, it.t});
        break;
      }
      case 3: {
        heads[static_cast<std::size_t>(it.s - 1)] = it.t;
        const int r = il_bp[idx(it.s, it.t)];
        stack.push_back({0, it.s, r});
        stack.push_back({1, r + 1, it.t});
        break;
      }
    }
  }
  return heads;
}

inline double tree_score(const ScoreMatrix& scores, const std::vector<int>& heads) {
  double s = 0;
  for (std::size_t d = 1; d <= heads.size(); ++d) s += scores(static_cast<std::size_t>(heads[d - 1]), d);
  return s;
}

// label_scores is {n+1, n+1, L}; picks the best label per arc, lowest index on ties.
// With force_root set, arcs from the virtual root get `root_label` and no
// other arc may take it.
inline std::vector<std::size_t> assign_labels(const std::vector<int>& heads, const ad::Tensor<double>& label_scores,
                                              bool force_root = false, std::size_t root_label = 0) {
  if (label_scores.shape.size() != 3) throw ShapeError("label scores must be {n+1, n+1, L}");
  const std::size_t N = label_scores.shape[0], L = label_scores.shape[2];
  std::vector<std::size_t> out;
  for (std::size_t d = 1; d <= heads.size(); ++d) {
    const auto h = static_cast<std::size_t>(heads[d - 1]);
    if (force_root && h == 0) {
      out.push_back(root_label);
      continue;
    }
    const double* row = label_scores.data.data() + (h * N + d) * L;
    std::size_t best = L;
    for (std::size_t l = 0; l < L; ++l) {
      if (force_root && l == root_label) continue;
      if (best == L || row[l] > row[best]) best = l;
    }
    if (best == L) best = root_label;
    out.push_back(best);
  }
  return out;
}

}  // namespace wist::parser
