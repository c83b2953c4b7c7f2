#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "wist/nn.hpp"
#include "wist/treebank.hpp"

namespace wist::wordrep {

using ad::Graph;
using ad::Parameter;
using ad::ParameterStore;
using ad::Tensor;
using ad::Var;

enum class Mode { none, charlstm, labelcharlstm, labelgcn };

inline std::string_view mode_name(Mode m) {
  switch (m) {
    case Mode::none: return "none";
    case Mode::charlstm: return "charlstm";
    case Mode::labelcharlstm: return "labelcharlstm";
    case Mode::labelgcn: return "labelgcn";
  }
  return "none";
}

inline Mode parse_mode(std::string_view s) {
  for (Mode m : {Mode::none, Mode::charlstm, Mode::labelcharlstm, Mode::labelgcn}) {
    if (mode_name(m) == s) return m;
  }
  throw DataError("unknown word representation mode '" + std::string(s) + "'");
}

struct Config {
  Mode mode = Mode::charlstm;
  std::size_t char_dim = 50;
  std::size_t label_dim = 50;
  std::size_t dim = 100;  // output width; the char BiLSTM uses dim/2 per direction
  std::size_t gcn_layers = 2;
  bool use_labels = true;  // false zeroes the label channel
};

// One GCN layer over a directed tree with scalar edge gates:
//   h'_u = relu(W_self h_u + sum_{v = head(u)} g_in(v) W_in h_v
//                          + sum_{v in children(u)} g_out(v) W_out h_v + b)
// with g_dir(v) = sigmoid(h_v . w_dir + c_dir).
template <class T>
struct GcnLayer {
  Parameter<T>* w_self = nullptr;
  Parameter<T>* w_in = nullptr;
  Parameter<T>* w_out = nullptr;
  Parameter<T>* bias = nullptr;
  Parameter<T>* gate_in = nullptr;
  Parameter<T>* gate_out = nullptr;
  Parameter<T>* gate_in_bias = nullptr;
  Parameter<T>* gate_out_bias = nullptr;

  static GcnLayer create(ParameterStore<T>& store, const std::string& p, std::size_t in, std::size_t out, Rng& rng) {
    GcnLayer l;
    l.w_self = &store.add(p + ".W_self", {in, out});
    l.w_in = &store.add(p + ".W_in", {in, out});
    l.w_out = &store.add(p + ".W_out", {in, out});
    l.bias = &store.add(p + ".b", {1, out});
    l.gate_in = &store.add(p + ".gate_in", {in, 1});
    l.gate_out = &store.add(p + ".gate_out", {in, 1});
    l.gate_in_bias = &store.add(p + ".gate_in_b", {1, 1});
    l.gate_out_bias = &store.add(p + ".gate_out_b", {1, 1});
    for (auto* w : {l.w_self, l.w_in, l.w_out}) ad::init::xavier_uniform(w->value, in, out, rng);
    for (auto* w : {l.gate_in, l.gate_out}) ad::init::xavier_uniform(w->value, in, 1, rng);
    return l;
  }

  // adj_in(u, v) = 1 iff v is the head of u; adj_out(u, v) = 1 iff u is the head of v.
  Var<T> forward(Graph<T>& g, Var<T> h, Var<T> adj_in, Var<T> adj_out) const {
    Var<T> self = ad::matmul(h, g.param(*w_self));
    Var<T> gin = ad::sigmoid(ad::add_bias(ad::matmul(h, g.param(*gate_in)), g.param(*gate_in_bias)));
    Var<T> gout = ad::sigmoid(ad::add_bias(ad::matmul(h, g.param(*gate_out)), g.param(*gate_out_bias)));
    Var<T> msg_in = ad::matmul(adj_in, ad::scale_rows(ad::matmul(h, g.param(*w_in)), gin));
    Var<T> msg_out = ad::matmul(adj_out, ad::scale_rows(ad::matmul(h, g.param(*w_out)), gout));
    return ad::relu(ad::add_bias(ad::add(ad::add(self, msg_in), msg_out), g.param(*bias)));
  }
};

// Character-based word encoders: CharLSTM, LabelCharLSTM and LabelGCN.
template <class T>
class Encoder {
 public:
  Config config;
  Parameter<T>* char_table = nullptr;   // chars x char_dim
  Parameter<T>* label_table = nullptr;  // kLabelCount x label_dim
  nn::BiLstm<T> lstm;
  std::vector<GcnLayer<T>> gcn;

  static Encoder create(ParameterStore<T>& store, const std::string& prefix, const Config& cfg, std::size_t n_chars,
                        Rng& rng) {
    Encoder e;
    e.config = cfg;
    if (cfg.mode == Mode::none) return e;
    e.char_table = &store.add(prefix + ".char_emb", {n_chars, cfg.char_dim});
    ad::init::normal(e.char_table->value, 1.0 / std::sqrt(static_cast<double>(cfg.char_dim)), rng);
    const bool labeled = cfg.mode != Mode::charlstm;
    if (labeled) {
      e.label_table = &store.add(prefix + ".label_emb", {kLabelCount, cfg.label_dim});
      ad::init::normal(e.label_table->value, 1.0 / std::sqrt(static_cast<double>(cfg.label_dim)), rng);
    }
    const std::size_t in = cfg.char_dim + (labeled ? cfg.label_dim : 0);
    if (cfg.mode == Mode::labelgcn) {
      for (std::size_t l = 0; l < cfg.gcn_layers; ++l) {
        e.gcn.push_back(GcnLayer<T>::create(store, prefix + ".gcn" + std::to_string(l), l == 0 ? in : cfg.dim, cfg.dim, rng));
      }
    } else {
      if (cfg.dim % 2 != 0) throw DataError("char BiLSTM output width must be even");
      e.lstm = nn::BiLstm<T>::create(store, prefix + ".lstm", in, cfg.dim / 2, 1, rng);
    }
    return e;
  }

  std::size_t output_dim() const { return config.mode == Mode::none ? 0 : config.dim; }

  // Concatenation of the final forward and final backward states.
  Var<T> charlstm(Graph<T>& g, const std::vector<std::size_t>& chars) const {
    Var<T> z = ad::embedding_lookup(g.param(*char_table), chars);
    return pooled_lstm(g, z);
  }

  // Same recipe with each character's input extended by its arc-label embedding.
  Var<T> labelcharlstm(Graph<T>& g, const std::vector<std::size_t>& chars,
                       const std::vector<std::size_t>& labels) const {
    return pooled_lstm(g, label_inputs(g, chars, labels));
  }

  // Mean over top-layer node states. `order` optionally permutes node storage
  // (order[k] = original position stored in row k); the result is independent of it.
  Var<T> labelgcn(Graph<T>& g, const std::vector<std::size_t>& chars, const std::vector<std::size_t>& labels,
                  const std::vector<int>& heads, const std::vector<std::size_t>* order = nullptr) const {
    const std::size_t n = chars.size();
    if (labels.size() != n || heads.size() != n) throw DataError("tree does not cover the word");
    std::vector<std::size_t> perm(n);
    for (std::size_t k = 0; k < n; ++k) perm[k] = order ? (*order)[k] : k;
    std::vector<std::size_t> where(n);
    for (std::size_t k = 0; k < n; ++k) where[perm[k]] = k;

    std::vector<std::size_t> c(n), l(n);
    for (std::size_t k = 0; k < n; ++k) {
      c[k] = chars[perm[k]];
      l[k] = labels[perm[k]];
    }
    Tensor<T> ain(n, n), aout(n, n);
    for (std::size_t d = 0; d < n; ++d) {
      const int h = heads[d];
      if (h == 0) continue;
      const std::size_t u = where[d];
      const std::size_t v = where[static_cast<std::size_t>(h - 1)];
      ain(u, v) = T(1);
      aout(v, u) = T(1);
    }
    Var<T> adj_in = g.constant(std::move(ain));
    Var<T> adj_out = g.constant(std::move(aout));
    Var<T> h = label_inputs(g, c, l);
    for (const auto& layer : gcn) h = layer.forward(g, h, adj_in, adj_out);
    return ad::mean_rows(h);
  }

  // Dispatch on the configured mode. Label ids are Label enum indices.
  Var<T> encode(Graph<T>& g, const std::vector<std::size_t>& chars, const DepTree& tree) const {
    switch (config.mode) {
      case Mode::charlstm: return charlstm(g, chars);
      case Mode::labelcharlstm: return labelcharlstm(g, chars, label_ids(tree));
      case Mode::labelgcn: return labelgcn(g, chars, label_ids(tree), tree.heads);
      case Mode::none: break;
    }
    throw DataError("word representation disabled");
  }

  static std::vector<std::size_t> label_ids(const DepTree& t) {
    std::vector<std::size_t> out;
    for (Label l : t.labels) out.push_back(label_index(l));
    return out;
  }

 private:
  Var<T> label_inputs(Graph<T>& g, const std::vector<std::size_t>& chars, const std::vector<std::size_t>& labels) const {
    if (labels.size() != chars.size()) throw DataError("tree/surface length mismatch");
    Var<T> z = ad::embedding_lookup(g.param(*char_table), chars);
    Var<T> le = config.use_labels ? ad::embedding_lookup(g.param(*label_table), labels)
                                  : ad::zeros(g, chars.size(), config.label_dim);
    return ad::concat_cols<T>({z, le});
  }

  Var<T> pooled_lstm(Graph<T>& g, Var<T> z) const {
    auto out = lstm.forward(g, z);
    return ad::concat_cols<T>({out.last_fwd, out.last_bwd});
  }
};

// Trivial tree for a single character; for longer words with no known
// structure, a left-branching chain of att arcs ending in the last character.
inline DepTree default_tree(std::size_t n) {
  DepTree t;
  for (std::size_t i = 0; i < n; ++i) {
    const bool last = i + 1 == n;
    t.heads.push_back(last ? 0 : static_cast<int>(i + 2));
    t.labels.push_back(last ? Label::root : Label::att);
  }
  return t;
}

// One word-internal tree per surface.
struct Lexicon {
  std::map<std::string, DepTree> trees;
  // Used for surfaces missing from `trees`; default_tree when unset.
  std::function<DepTree(const std::vector<std::string>&)> fallback;

  DepTree lookup(const std::string& surface) const {
    if (auto it = trees.find(surface); it != trees.end()) return it->second;
    const auto chars = utf8::split_chars(surface);
    if (chars.size() >= 2 && fallback) return fallback(chars);
    return default_tree(chars.size());
  }

  // Multi-character entries as `.wist` blocks, sorted by surface.
  std::string export_wist() const {
    Treebank tb;
    for (const auto& [s, t] : trees) {
      auto chars = utf8::split_chars(s);
      if (chars.size() < 2) continue;
      WordEntry e;
      e.chars = std::move(chars);
      e.tree = t;
      tb.words.push_back(std::move(e));
    }
    return serialize_treebank(tb);
  }

  static Lexicon import_wist(const std::string& text) {
    Lexicon lex;
    auto tb = parse_treebank(text, TreebankKind::word_internal);
    for (const auto& e : tb.words) lex.trees.emplace(e.surface(), e.tree);
    return lex;
  }
};

// Gold tree where annotated (lowest sense wins), otherwise `parse`; single
// characters get the one-node root tree.
inline Lexicon build_lexicon(const std::vector<std::string>& surfaces, const Treebank& gold,
                             const std::function<DepTree(const std::vector<std::string>&)>& parse) {
  std::map<std::string, const WordEntry*> best;
  for (const auto& e : gold.words) {
    auto s = e.surface();
    auto it = best.find(s);
    if (it == best.end() || e.sense_id < it->second->sense_id) best[s] = &e;
  }
  Lexicon lex;
  for (const auto& s : surfaces) {
    if (lex.trees.count(s)) continue;
    if (auto it = best.find(s); it != best.end()) {
      lex.trees.emplace(s, it->second->tree);
      continue;
    }
    const auto chars = utf8::split_chars(s);
    lex.trees.emplace(s, chars.size() >= 2 && parse ? parse(chars) : default_tree(chars.size()));
  }
  return lex;
}

}  // namespace wist::wordrep
