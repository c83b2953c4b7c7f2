#pragma once

// Structural properties of the word encoders, shared by the unit suite and
// the acceptance runner.

#include <algorithm>
#include <cmath>

#include "wist/wordrep.hpp"

namespace wist::fixture {

using wordrep::Encoder;
using wordrep::Mode;

inline wordrep::Config small_wordrep(Mode mode) {
  wordrep::Config c;
  c.mode = mode;
  c.char_dim = 6;
  c.label_dim = 4;
  c.dim = 8;
  return c;
}

inline double max_abs_diff(const ad::Tensor<double>& a, const ad::Tensor<double>& b) {
  double m = 0;
  for (std::size_t i = 0; i < a.data.size(); ++i) m = std::max(m, std::abs(a.data[i] - b.data[i]));
  return m;
}

// With every character carrying the same label, LabelCharLSTM must equal a
// CharLSTM whose char table rows are [char; label] and whose LSTM weights are
// shared. Returns true on bitwise equality.
inline bool single_label_collapse(std::uint64_t seed, std::size_t n_chars = 7) {
  Rng rng(seed);
  ad::ParameterStore<double> s1, s2;
  auto cfg = small_wordrep(Mode::labelcharlstm);
  auto lab = Encoder<double>::create(s1, "w", cfg, n_chars, rng);
  auto plain_cfg = small_wordrep(Mode::charlstm);
  plain_cfg.char_dim = cfg.char_dim + cfg.label_dim;
  const std::size_t label = rng.below(kLabelCount);
  auto plain = Encoder<double>::create(s2, "w", plain_cfg, n_chars, rng);

  for (std::size_t c = 0; c < n_chars; ++c) {
    for (std::size_t k = 0; k < cfg.char_dim; ++k) plain.char_table->value(c, k) = lab.char_table->value(c, k);
    for (std::size_t k = 0; k < cfg.label_dim; ++k)
      plain.char_table->value(c, cfg.char_dim + k) = lab.label_table->value(label, k);
  }
  for (std::size_t l = 0; l < lab.lstm.layers.size(); ++l)
    for (int dir = 0; dir < 2; ++dir) {
      plain.lstm.layers[l][dir].W->value = lab.lstm.layers[l][dir].W->value;
      plain.lstm.layers[l][dir].U->value = lab.lstm.layers[l][dir].U->value;
      plain.lstm.layers[l][dir].b->value = lab.lstm.layers[l][dir].b->value;
    }

  const std::size_t len = 2 + rng.below(5);
  std::vector<std::size_t> chars;
  for (std::size_t i = 0; i < len; ++i) chars.push_back(rng.below(n_chars));
  std::vector<std::size_t> labels(len, label);
  ad::Graph<double> g(false);
  auto a = lab.labelcharlstm(g, chars, labels).value();
  auto b = plain.charlstm(g, chars).value();
  return a.data == b.data;
}

// Largest deviation of the pooled LabelGCN vector under random node orders.
inline double gcn_permutation_deviation(std::uint64_t seed, int permutations = 10) {
  Rng rng(seed);
  ad::ParameterStore<double> store;
  auto enc = Encoder<double>::create(store, "w", small_wordrep(Mode::labelgcn), 10, rng);
  // Non-zero biases so that no path is trivially dead.
  for (auto* p : store.all()) {
    if (p->name.ends_with(".b") || p->name.ends_with("_b")) {
      for (auto& v : p->value.data) v = rng.uniform(0.0, 0.5);
    }
  }
  const int n = 2 + static_cast<int>(rng.below(7));
  std::vector<int> heads(static_cast<std::size_t>(n));
  {
    // random recursive tree
    std::vector<int> order(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i + 1;
    rng.shuffle(order);
    heads[static_cast<std::size_t>(order[0] - 1)] = 0;
    for (int k = 1; k < n; ++k) heads[static_cast<std::size_t>(order[k] - 1)] = order[rng.below(static_cast<std::uint64_t>(k))];
  }
  std::vector<std::size_t> chars, labels;
  for (int i = 0; i < n; ++i) {
    chars.push_back(rng.below(10));
    labels.push_back(heads[static_cast<std::size_t>(i)] == 0 ? 0 : 1 + rng.below(kLabelCount - 1));
  }
  ad::Graph<double> g(false);
  const auto base = enc.labelgcn(g, chars, labels, heads).value();
  double worst = 0;
  for (int p = 0; p < permutations; ++p) {
    std::vector<std::size_t> order(static_cast<std::size_t>(n));
    for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
    rng.shuffle(order);
    worst = std::max(worst, max_abs_diff(base, enc.labelgcn(g, chars, labels, heads, &order).value()));
  }
  return worst;
}

// Whether a star and a chain over the same characters and labels get
// different LabelGCN vectors.
inline bool star_chain_differ(std::uint64_t seed, double tol = 1e-6) {
  Rng rng(seed);
  ad::ParameterStore<double> store;
  auto enc = Encoder<double>::create(store, "w", small_wordrep(Mode::labelgcn), 10, rng);
  std::vector<std::size_t> chars;
  for (int i = 0; i < 4; ++i) chars.push_back(rng.below(10));
  const std::vector<std::size_t> labels{label_index(Label::att), label_index(Label::att), label_index(Label::att),
                                        label_index(Label::root)};
  ad::Graph<double> g(false);
  auto star = enc.labelgcn(g, chars, labels, {4, 4, 4, 0}).value();
  auto chain = enc.labelgcn(g, chars, labels, {2, 3, 4, 0}).value();
  return max_abs_diff(star, chain) > tol;
}

}  // namespace wist::fixture
