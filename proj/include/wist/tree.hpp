#pragma once

#include <algorithm>
#include <span>
#include <string>
#include <vector>

#include "wist/label.hpp"

namespace wist {

// Labeled dependency tree over n characters. Node 0 is the implicit virtual
// root; heads[i] is the head of node i+1.
struct DepTree {
  std::vector<int> heads;
  std::vector<Label> labels;

  std::size_t size() const { return heads.size(); }
  bool operator==(const DepTree&) const = default;
};

enum class ViolationKind { multi_root, no_root, cycle, root_label_misuse, out_of_range, non_projective };

inline std::string_view violation_name(ViolationKind k) {
  switch (k) {
    case ViolationKind::multi_root: return "multi-root";
    case ViolationKind::no_root: return "no-root";
    case ViolationKind::cycle: return "cycle";
    case ViolationKind::root_label_misuse: return "root-label-misuse";
    case ViolationKind::out_of_range: return "out-of-range";
    case ViolationKind::non_projective: return "non-projective";
  }
  return "unknown";
}

struct Violation {
  ViolationKind kind;
  int node;  // 1-based node where the violation was detected, 0 if global
  std::string message;
};

struct ValidationReport {
  std::vector<Violation> violations;

  bool ok() const { return violations.empty(); }
  bool has(ViolationKind k) const {
    for (const auto& v : violations) {
      if (v.kind == k) return true;
    }
    return false;
  }
  // A structural problem other than non-projectivity.
  bool illegal() const {
    for (const auto& v : violations) {
      if (v.kind != ViolationKind::non_projective) return true;
    }
    return false;
  }
  std::string summary() const {
    std::string s;
    for (const auto& v : violations) {
      if (!s.empty()) s += "; ";
      s += std::string(violation_name(v.kind));
      if (v.node > 0) s += " at node " + std::to_string(v.node);
    }
    return s;
  }
};

namespace detail {

inline bool heads_in_range(std::span<const int> heads) {
  const int n = static_cast<int>(heads.size());
  for (int h : heads) {
    if (h < 0 || h > n) return false;
  }
  return true;
}

// True if `anc` lies on the head chain above `node` (both 0..n). Walk is
// bounded so cyclic input terminates.
inline bool is_ancestor(std::span<const int> heads, int anc, int node) {
  const int n = static_cast<int>(heads.size());
  int cur = node;
  for (int steps = 0; steps <= n && cur != 0; ++steps) {
    cur = heads[cur - 1];
    if (cur == anc) return true;
  }
  return false;
}

}  // namespace detail

// Projectivity over a head array whose entries are all in [0, n].
// Every node strictly inside an arc's span must descend from the arc's head.
inline bool is_projective(std::span<const int> heads) {
  const int n = static_cast<int>(heads.size());
  for (int d = 1; d <= n; ++d) {
    const int h = heads[d - 1];
    const int lo = std::min(h, d);
    const int hi = std::max(h, d);
    for (int k = lo + 1; k < hi; ++k) {
      if (!detail::is_ancestor(heads, h, k)) return false;
    }
  }
  return true;
}

inline bool is_projective(const DepTree& t) { return is_projective(t.heads); }

// Structural checks shared by word-internal and sentence trees.
inline ValidationReport validate_heads(std::span<const int> heads) {
  ValidationReport r;
  const int n = static_cast<int>(heads.size());
  bool in_range = true;
  for (int i = 0; i < n; ++i) {
    if (heads[i] < 0 || heads[i] > n) {
      r.violations.push_back({ViolationKind::out_of_range, i + 1,
                              "head " + std::to_string(heads[i]) + " outside [0," + std::to_string(n) + "]"});
      in_range = false;
    }
  }
  if (!in_range) return r;

  int roots = 0;
  for (int i = 0; i < n; ++i) {
    if (heads[i] == 0) ++roots;
  }
  if (roots == 0) r.violations.push_back({ViolationKind::no_root, 0, "no node attaches to the virtual root"});
  if (roots > 1) {
    r.violations.push_back({ViolationKind::multi_root, 0, std::to_string(roots) + " nodes attach to the virtual root"});
  }

  // A node is on a cycle iff its head chain returns to it.
  std::vector<char> reported(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    if (reported[i]) continue;
    if (detail::is_ancestor(heads, i, i)) {
      int cur = i;
      do {
        reported[cur] = 1;
        cur = heads[cur - 1];
      } while (cur != i);
      r.violations.push_back({ViolationKind::cycle, i, "cycle through node " + std::to_string(i)});
    }
  }

  if (!is_projective(heads)) {
    r.violations.push_back({ViolationKind::non_projective, 0, "crossing arcs"});
  }
  return r;
}

inline ValidationReport validate_tree(const DepTree& t) {
  if (t.labels.size() != t.heads.size()) {
    throw DataError("tree has " + std::to_string(t.heads.size()) + " heads but " + std::to_string(t.labels.size()) +
                    " labels");
  }
  ValidationReport r = validate_heads(t.heads);
  for (std::size_t i = 0; i < t.size(); ++i) {
    const bool from_root = t.heads[i] == 0;
    const bool is_root_label = t.labels[i] == Label::root;
    if (from_root != is_root_label) {
      r.violations.push_back({ViolationKind::root_label_misuse, static_cast<int>(i) + 1,
                              from_root ? "arc from virtual root not labeled root"
                                        : "label root on arc not from virtual root"});
    }
  }
  return r;
}

// Children lists, index 0 is the virtual root.
inline std::vector<std::vector<int>> children_of(std::span<const int> heads) {
  std::vector<std::vector<int>> ch(heads.size() + 1);
  for (std::size_t d = 1; d <= heads.size(); ++d) ch[heads[d - 1]].push_back(static_cast<int>(d));
  return ch;
}

}  // namespace wist
