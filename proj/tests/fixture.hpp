#pragma once

// Shared helpers for the test suites: random tree generators and brute-force
// oracles that do not reuse the library's own tree routines.

#include <functional>
#include <string>
#include <vector>

#include "wist/random.hpp"
#include "wist/treebank.hpp"

namespace wist::fixture {

// Uniformly random recursive tree: nodes join in random order under an
// already-placed node. Legal, possibly non-projective.
inline std::vector<int> random_tree(int n, Rng& rng) {
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i + 1;
  rng.shuffle(order);
  std::vector<int> heads(n, 0);
  for (int k = 1; k < n; ++k) heads[order[k] - 1] = order[rng.below(k)];
  heads[order[0] - 1] = 0;
  return heads;
}

namespace detail {
// Fills heads for a projective subtree over [lo, hi] headed by h.
inline void projective_span(int lo, int hi, int h, std::vector<int>& heads, Rng& rng) {
  // Left dependents cover [lo, h-1] in consecutive blocks.
  auto blocks = [&](int a, int b) {
    int start = a;
    while (start <= b) {
      int end = start + static_cast<int>(rng.below(static_cast<std::uint64_t>(b - start + 1)));
      int root = start + static_cast<int>(rng.below(static_cast<std::uint64_t>(end - start + 1)));
      heads[root - 1] = h;
      projective_span(start, end, root, heads, rng);
      start = end + 1;
    }
  };
  blocks(lo, h - 1);
  blocks(h + 1, hi);
}
}  // namespace detail

inline std::vector<int> random_projective_tree(int n, Rng& rng) {
  std::vector<int> heads(n, 0);
  int root = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
  heads[root - 1] = 0;
  detail::projective_span(1, n, root, heads, rng);
  return heads;
}

inline std::vector<Label> random_labels(const std::vector<int>& heads, Rng& rng) {
  std::vector<Label> out;
  for (int h : heads) out.push_back(h == 0 ? Label::root : label_at(1 + rng.below(kLabelCount - 1)));
  return out;
}

inline const std::vector<std::string>& test_chars() {
  static const std::vector<std::string> cs = {"婚", "姻", "法", "常", "上", "下", "文", "发", "展", "制",
                                              "服", "年", "轻", "到", "期", "走", "过", "人", "大", "学"};
  return cs;
}

inline WordEntry random_word(int n, Rng& rng, bool projective = true) {
  WordEntry e;
  for (int i = 0; i < n; ++i) e.chars.push_back(test_chars()[rng.below(test_chars().size())]);
  e.tree.heads = projective ? random_projective_tree(n, rng) : random_tree(n, rng);
  e.tree.labels = random_labels(e.tree.heads, rng);
  return e;
}

// Single root and every node reachable from the virtual root by DFS.
inline bool brute_force_legal(const std::vector<int>& heads) {
  const int n = static_cast<int>(heads.size());
  int roots = 0;
  for (int h : heads) {
    if (h < 0 || h > n) return false;
    roots += h == 0;
  }
  if (roots != 1) return false;
  std::vector<std::vector<int>> kids(n + 1);
  for (int d = 1; d <= n; ++d) kids[heads[d - 1]].push_back(d);
  std::vector<int> stack{0};
  std::vector<char> seen(n + 1, 0);
  int visited = 0;
  while (!stack.empty()) {
    int u = stack.back();
    stack.pop_back();
    if (seen[u]) return false;
    seen[u] = 1;
    ++visited;
    for (int v : kids[u]) stack.push_back(v);
  }
  return visited == n + 1;
}

// O(n^3): descendant sets by DFS, then every arc's interior must be inside
// the head's descendant set. Requires a legal tree.
inline bool brute_force_projective(const std::vector<int>& heads) {
  const int n = static_cast<int>(heads.size());
  std::vector<std::vector<int>> kids(n + 1);
  for (int d = 1; d <= n; ++d) kids[heads[d - 1]].push_back(d);
  std::vector<std::vector<char>> desc(n + 1, std::vector<char>(n + 1, 0));
  for (int u = 0; u <= n; ++u) {
    std::vector<int> stack(kids[u].begin(), kids[u].end());
    while (!stack.empty()) {
      int v = stack.back();
      stack.pop_back();
      desc[u][v] = 1;
      for (int w : kids[v]) stack.push_back(w);
    }
  }
  for (int d = 1; d <= n; ++d) {
    int h = heads[d - 1];
    for (int k = std::min(h, d) + 1; k < std::max(h, d); ++k) {
      if (!desc[h][k]) return false;
    }
  }
  return true;
}

// Every single-root projective tree over n nodes.
inline std::vector<std::vector<int>> enumerate_projective_trees(int n) {
  std::vector<std::vector<int>> out;
  std::vector<int> heads(n, 0);
  std::function<void(int)> rec = [&](int i) {
    if (i == n) {
      if (brute_force_legal(heads) && brute_force_projective(heads)) out.push_back(heads);
      return;
    }
    for (int h = 0; h <= n; ++h) {
      if (h == i + 1) continue;
      heads[i] = h;
      rec(i + 1);
    }
  };
  rec(0);
  return out;
}

}  // namespace wist::fixture
