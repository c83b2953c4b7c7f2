#pragma once

#include <algorithm>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "wist/embeddings.hpp"
#include "wist/nn.hpp"
#include "wist/parser/config.hpp"
#include "wist/parser/eisner.hpp"
#include "wist/parser/vocab.hpp"
#include "wist/wordrep.hpp"

namespace wist::parser {

using ad::Graph;
using ad::Parameter;
using ad::Tensor;
using ad::Var;

struct Vocabs {
  Vocab chars{true};
  Vocab words{true};
  Vocab labels{false};
  Vocab pos{true};
  Vocab word_counts{false};  // every training word with its raw count
};

// Vocabularies from training data; pretrained tokens extend the char
// (word-internal) or word (sentence) table.
inline Vocabs build_vocabs(const Treebank& train, const ParserConfig& cfg, const EmbeddingTable* pretrained = nullptr) {
  Vocabs v;
  if (cfg.mode == TreebankKind::word_internal) {
    for (auto name : kLabelNames) v.labels.add(std::string(name), 0);
    for (const auto& e : train.words) {
      for (const auto& c : e.chars) v.chars.add(c);
      for (Label l : e.tree.labels) v.labels.add(std::string(label_name(l)));
    }
    if (pretrained) {
      for (const auto& t : pretrained->tokens) v.chars.add(t, 0);
    }
  } else {
    for (const auto& s : train.sentences) {
      for (std::size_t i = 0; i < s.size(); ++i) {
        v.word_counts.add(s.words[i]);
        for (const auto& c : utf8::split_chars(s.words[i])) v.chars.add(c);
        v.labels.add(s.labels[i]);
        v.pos.add(s.pos_tags[i].empty() ? kUnk : s.pos_tags[i]);
      }
    }
    for (std::size_t i = 0; i < v.word_counts.size(); ++i) {
      if (v.word_counts.freq(i) >= cfg.min_word_freq) v.words.add(v.word_counts.token(i), v.word_counts.freq(i));
    }
    if (pretrained) {
      for (const auto& t : pretrained->tokens) v.words.add(t, 0);
    }
  }
  return v;
}

// Values-only scores for one input.
struct ScoredChart {
  Tensor<double> arc;     // (n+1) x (n+1), (h, d)
  Tensor<double> labels;  // {n+1, n+1, L}
};

// Everything the network needs about one sequence, with the virtual root at position 0.
struct ParserInput {
  std::vector<std::size_t> ids;                 // char ids (word-internal) or word ids (sentence)
  std::vector<std::size_t> pos_ids;             // sentence mode with gold POS
  std::vector<std::vector<std::size_t>> chars;  // sentence mode: char ids of each word
  std::vector<DepTree> word_trees;              // sentence mode: word-internal trees for label-aware reps
  std::vector<std::optional<std::vector<double>>> external;  // word-internal: per-position vectors
  std::size_t length() const { return ids.size() - 1; }
};

struct Prediction {
  std::vector<int> heads;
  std::vector<std::size_t> labels;  // label vocabulary ids
};

// Biaffine graph-based parser: embeddings, stacked BiLSTM, four MLPs, arc and
// label biaffine scorers, projective decoding.
template <class T>
class BiaffineParser {
 public:
  ParserConfig config;
  Vocabs vocabs;
  ad::ParameterStore<T> params;
  wordrep::Lexicon lexicon;
  std::shared_ptr<const EmbeddingTable> external;

  Parameter<T>* item_emb = nullptr;
  Parameter<T>* item_pretrained = nullptr;  // frozen
  Parameter<T>* pos_emb = nullptr;
  wordrep::Encoder<T> wordrep;
  nn::BiLstm<T> encoder;
  nn::Mlp<T> arc_head, arc_dep, label_head, label_dep;
  Parameter<T>* arc_weight = nullptr;    // (arc_mlp+1) x arc_mlp
  Parameter<T>* label_weight = nullptr;  // {L, label_mlp+1, label_mlp+1}

  // `pretrained_slot` reserves the frozen table without data (checkpoint loading).
  BiaffineParser(ParserConfig cfg, Vocabs v, const EmbeddingTable* pretrained = nullptr, bool pretrained_slot = false)
      : config(std::move(cfg)), vocabs(std::move(v)) {
    config.validate();
    Rng rng(config.seed);
    const bool words_mode = config.mode == TreebankKind::sentence;
    const Vocab& items = words_mode ? vocabs.words : vocabs.chars;
    const std::size_t emb_dim = words_mode ? config.word_emb_dim : config.char_emb_dim;

    item_emb = &params.add(words_mode ? "word_emb" : "char_emb", {items.size(), emb_dim});
    if (pretrained) {
      if (pretrained->dim != emb_dim) {
        throw DataError("pretrained vectors have dimension " + std::to_string(pretrained->dim) + ", expected " +
                        std::to_string(emb_dim));
      }
      // Frozen pretrained rows plus a zero-initialised trainable delta.
      item_pretrained = &params.add(words_mode ? "word_emb.pretrained" : "char_emb.pretrained", {items.size(), emb_dim},
                                    false);
      for (std::size_t i = 0; i < items.size(); ++i) {
        if (const double* vec = pretrained->find(items.token(i))) {
          for (std::size_t k = 0; k < emb_dim; ++k) item_pretrained->value(i, k) = static_cast<T>(vec[k]);
        }
      }
    } else if (pretrained_slot) {
      item_pretrained = &params.add(words_mode ? "word_emb.pretrained" : "char_emb.pretrained", {items.size(), emb_dim},
                                    false);
    } else {
      ad::init::normal(item_emb->value, 1.0, rng);
    }

    std::size_t in_dim = emb_dim;
    if (words_mode) {
      wordrep = wordrep::Encoder<T>::create(params, "wordrep", config.wordrep, vocabs.chars.size(), rng);
      in_dim += wordrep.output_dim();
      if (config.use_gold_pos) {
        pos_emb = &params.add("pos_emb", {vocabs.pos.size(), config.pos_emb_dim});
        ad::init::normal(pos_emb->value, 1.0, rng);
        in_dim += config.pos_emb_dim;
      }
    }
    encoder = nn::BiLstm<T>::create(params, "encoder", in_dim, config.lstm_hidden, config.lstm_layers, rng);
    const std::size_t h2 = encoder.output_dim();
    arc_head = nn::Mlp<T>::create(params, "mlp.arc_head", h2, config.arc_mlp_dim, rng);
    arc_dep = nn::Mlp<T>::create(params, "mlp.arc_dep", h2, config.arc_mlp_dim, rng);
    label_head = nn::Mlp<T>::create(params, "mlp.label_head", h2, config.label_mlp_dim, rng);
    label_dep = nn::Mlp<T>::create(params, "mlp.label_dep", h2, config.label_mlp_dim, rng);
    arc_weight = &params.add("biaffine.arc", {config.arc_mlp_dim + 1, config.arc_mlp_dim});
    label_weight =
        &params.add("biaffine.label", {vocabs.labels.size(), config.label_mlp_dim + 1, config.label_mlp_dim + 1});

    if (!config.external_vectors.empty()) {
      external = std::make_shared<const EmbeddingTable>(load_embeddings(config.external_vectors));
      if (external->dim != emb_dim) throw DataError("external vectors must match the char embedding width");
    }
  }

  BiaffineParser(const BiaffineParser&) = delete;
  BiaffineParser& operator=(const BiaffineParser&) = delete;

  std::size_t n_labels() const { return vocabs.labels.size(); }
  bool word_internal() const { return config.mode == TreebankKind::word_internal; }

  // ---- input preparation ----

  ParserInput prepare_chars(const std::vector<std::string>& chars) const {
    ParserInput in;
    in.ids.push_back(vocabs.chars.root_id());
    for (const auto& c : chars) in.ids.push_back(vocabs.chars.id(c));
    if (external) {
      const std::string word = utf8::join(chars);
      in.external.resize(in.ids.size());
      for (std::size_t i = 1; i <= chars.size(); ++i) {
        if (const double* v = external->find(external_vector_key(word, i))) {
          in.external[i] = std::vector<double>(v, v + external->dim);
        }
      }
    }
    return in;
  }

  ParserInput prepare(const WordEntry& e) const { return prepare_chars(e.chars); }

  ParserInput prepare(const SentenceEntry& s) const {
    ParserInput in;
    in.ids.push_back(vocabs.words.root_id());
    for (const auto& w : s.words) in.ids.push_back(vocabs.words.id(w));
    if (config.use_gold_pos) {
      in.pos_ids.push_back(vocabs.pos.root_id());
      for (const auto& p : s.pos_tags) in.pos_ids.push_back(vocabs.pos.id(p.empty() ? kUnk : p));
    }
    if (config.wordrep.mode != wordrep::Mode::none) {
      in.chars.push_back({vocabs.chars.root_id()});
      in.word_trees.push_back(wordrep::default_tree(1));
      for (const auto& w : s.words) {
        std::vector<std::size_t> cs;
        for (const auto& c : utf8::split_chars(w)) cs.push_back(vocabs.chars.id(c));
        in.chars.push_back(std::move(cs));
        in.word_trees.push_back(config.wordrep.mode == wordrep::Mode::charlstm ? DepTree{} : lexicon.lookup(w));
      }
    }
    return in;
  }

  // ---- network ----

  struct Scores {
    Var<T> arc;                 // (n+1) x (n+1)
    std::vector<Var<T>> label;  // L matrices (n+1) x (n+1)
  };

  // `rng` non-null enables dropout (training).
  Scores forward(Graph<T>& g, const ParserInput& in, Rng* rng = nullptr) const {
    const std::size_t N = in.ids.size();
    Var<T> x = embed(g, in);
    if (rng && config.emb_dropout > 0) x = ad::dropout(x, ad::dropout_mask<T>(N, x.cols(), config.emb_dropout, *rng));

    nn::LstmDropout ld;
    if (rng) ld = {config.lstm_dropout, config.lstm_dropout};
    Var<T> h = encoder.forward(g, x, ld, rng).states;
    if (rng && config.lstm_dropout > 0) h = ad::dropout(h, ad::dropout_mask<T>(1, h.cols(), config.lstm_dropout, *rng));

    auto mlp = [&](const nn::Mlp<T>& m) {
      Var<T> r = m.forward(g, h);
      if (rng && config.mlp_dropout > 0) r = ad::dropout(r, ad::dropout_mask<T>(1, r.cols(), config.mlp_dropout, *rng));
      return r;
    };
    return biaffine(g, mlp(arc_head), mlp(arc_dep), mlp(label_head), mlp(label_dep));
  }

  // Embedding rows for one input, before dropout.
  Var<T> embed(Graph<T>& g, const ParserInput& in) const {
    const std::size_t N = in.ids.size();
    Var<T> x = ad::embedding_lookup(g.param(*item_emb), in.ids);
    if (item_pretrained) x = ad::add(x, ad::embedding_lookup(g.param(*item_pretrained), in.ids));
    if (!in.external.empty()) {
      std::vector<Var<T>> rows;
      for (std::size_t i = 0; i < N; ++i) {
        if (i < in.external.size() && in.external[i]) {
          Tensor<T> t(1, in.external[i]->size());
          for (std::size_t k = 0; k < t.data.size(); ++k) t.data[k] = static_cast<T>((*in.external[i])[k]);
          rows.push_back(g.constant(std::move(t)));
        } else {
          rows.push_back(ad::row(x, i));
        }
      }
      x = ad::concat_rows(rows);
    }
    if (!word_internal()) {
      std::vector<Var<T>> parts{x};
      if (config.wordrep.mode != wordrep::Mode::none) {
        std::vector<Var<T>> reps;
        for (std::size_t i = 0; i < N; ++i) reps.push_back(wordrep.encode(g, in.chars[i], in.word_trees[i]));
        parts.push_back(ad::concat_rows(reps));
      }
      if (config.use_gold_pos) parts.push_back(ad::embedding_lookup(g.param(*pos_emb), in.pos_ids));
      if (parts.size() > 1) x = ad::concat_cols(parts);
    }
    return x;
  }

  Scores biaffine(Graph<T>& g, Var<T> rah, Var<T> rad, Var<T> rlh, Var<T> rld) const {
    Scores s;
    s.arc = ad::bilinear(ad::append_ones(rah), g.param(*arc_weight), rad);
    Var<T> lh = ad::append_ones(rlh), ldp = ad::append_ones(rld);
    Var<T> stack = g.param(*label_weight);
    for (std::size_t l = 0; l < n_labels(); ++l) s.label.push_back(ad::bilinear(lh, ad::slab(stack, l), ldp));
    return s;
  }

  struct Loss {
    Var<T> total, arc, label;
    std::size_t positions = 0;
  };

  // Mean per-position cross-entropy over the head column plus over the labels
  // of the gold arc. Gold label ids < 0 are skipped in the label term.
  Loss loss(Graph<T>& g, const ParserInput& in, const std::vector<int>& heads, const std::vector<long>& labels,
            Rng* rng = nullptr) const {
    const std::size_t n = in.length();
    if (heads.size() != n || labels.size() != n) throw DataError("gold tree does not match input length");
    Scores s = forward(g, in, rng);
    std::vector<int> head_targets{ad::kIgnoreTarget};
    for (int h : heads) head_targets.push_back(h);
    Loss out;
    out.positions = n;
    out.arc = ad::cross_entropy(ad::transpose(s.arc), head_targets);

    std::vector<std::size_t> rows, cols;
    std::vector<int> label_targets;
    for (std::size_t d = 1; d <= n; ++d) {
      rows.push_back(static_cast<std::size_t>(heads[d - 1]));
      cols.push_back(d);
      label_targets.push_back(labels[d - 1] < 0 ? ad::kIgnoreTarget : static_cast<int>(labels[d - 1]));
    }
    const bool any_label = std::any_of(label_targets.begin(), label_targets.end(),
                                       [](int t) { return t != ad::kIgnoreTarget; });
    if (any_label) {
      out.label = ad::cross_entropy(ad::gather_cells(s.label, rows, cols), label_targets);
      out.total = ad::add(out.arc, out.label);
    } else {
      out.label = ad::zeros(g, 1, 1);
      out.total = out.arc;
    }
    return out;
  }

  // Gold label ids for an entry (sentence labels unseen in training map to -1).
  std::vector<long> gold_label_ids(const WordEntry& e) const {
    std::vector<long> out;
    for (Label l : e.tree.labels) out.push_back(vocabs.labels.find(std::string(label_name(l))));
    return out;
  }
  std::vector<long> gold_label_ids(const SentenceEntry& e) const {
    std::vector<long> out;
    for (const auto& l : e.labels) out.push_back(vocabs.labels.find(l));
    return out;
  }

  ScoredChart score(const ParserInput& in) const {
    Graph<T> g(false);
    return to_chart(forward(g, in, nullptr), in.ids.size());
  }

  // Same charts as score() on each input, computed in batches of equal length.
  std::vector<ScoredChart> score_many(const std::vector<ParserInput>& ins, std::size_t max_batch = 64) const {
    std::map<std::size_t, std::vector<std::size_t>> by_len;
    for (std::size_t i = 0; i < ins.size(); ++i) by_len[ins[i].ids.size()].push_back(i);
    std::vector<ScoredChart> out(ins.size());
    for (const auto& [N, idx] : by_len) {
      for (std::size_t b0 = 0; b0 < idx.size(); b0 += max_batch) {
        const std::size_t B = std::min(max_batch, idx.size() - b0);
        Graph<T> g(false);
        std::vector<Var<T>> xs;
        for (std::size_t b = 0; b < B; ++b) xs.push_back(embed(g, ins[idx[b0 + b]]));
        Var<T> h = encoder.forward_batch(g, ad::concat_rows(xs), B);
        Var<T> rah = arc_head.forward(g, h), rad = arc_dep.forward(g, h);
        Var<T> rlh = label_head.forward(g, h), rld = label_dep.forward(g, h);
        for (std::size_t b = 0; b < B; ++b) {
          auto part = [&](Var<T> v) { return ad::slice_rows(v, b * N, (b + 1) * N); };
          out[idx[b0 + b]] = to_chart(biaffine(g, part(rah), part(rad), part(rlh), part(rld)), N);
        }
      }
    }
    return out;
  }

  std::vector<Prediction> predict_many(const std::vector<ParserInput>& ins) const {
    std::vector<Prediction> out;
    for (const auto& c : score_many(ins)) out.push_back(decode(c));
    return out;
  }

  ScoredChart to_chart(const Scores& s, std::size_t N) const {
    const std::size_t L = n_labels();
    ScoredChart c;
    c.arc = Tensor<double>(N, N);
    for (std::size_t i = 0; i < N * N; ++i) c.arc.data[i] = static_cast<double>(s.arc.value().data[i]);
    c.labels = Tensor<double>(std::vector<std::size_t>{N, N, L});
    for (std::size_t l = 0; l < L; ++l) {
      const auto& v = s.label[l].value().data;
      for (std::size_t i = 0; i < N * N; ++i) c.labels.data[i * L + l] = static_cast<double>(v[i]);
    }
    return c;
  }

  Prediction decode(const ScoredChart& chart) const {
    Prediction p;
    p.heads = eisner_decode(chart.arc);
    const long root = vocabs.labels.find(std::string(label_name(Label::root)));
    p.labels = assign_labels(p.heads, chart.labels, word_internal() && root >= 0, root < 0 ? 0 : static_cast<std::size_t>(root));
    return p;
  }

  Prediction predict(const ParserInput& in) const { return decode(score(in)); }

  // Word-internal inference entry point.
  WordEntry parse_word(const std::string& surface) const { return parse_words({surface}).front(); }

  std::vector<WordEntry> parse_words(const std::vector<std::string>& surfaces) const {
    if (!word_internal()) throw DataError("parse_word needs a word-internal model");
    std::vector<WordEntry> out(surfaces.size());
    std::vector<ParserInput> ins;
    for (std::size_t i = 0; i < surfaces.size(); ++i) {
      out[i].chars = utf8::split_chars(surfaces[i]);
      if (out[i].chars.size() < 2) throw DataError("'" + surfaces[i] + "' has fewer than 2 characters");
      ins.push_back(prepare_chars(out[i].chars));
    }
    auto preds = predict_many(ins);
    for (std::size_t i = 0; i < out.size(); ++i) {
      out[i].tree.heads = preds[i].heads;
      for (auto l : preds[i].labels) out[i].tree.labels.push_back(parse_label(vocabs.labels.token(l)));
    }
    return out;
  }
};

}  // namespace wist::parser
