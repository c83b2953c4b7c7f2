#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "wist/analysis.hpp"
#include "wist/parser/model.hpp"

namespace wist::parser {

struct FrequencyBucket {
  std::string name;  // "unknown", "<=2", ">2"
  std::size_t tokens = 0;
  std::size_t las_correct = 0;
  double las() const { return analysis::percent(las_correct, tokens); }
};

struct EvalReport {
  double uas = 0, las = 0, cm = 0;
  std::size_t n_tokens = 0, n_entries = 0;
  std::size_t uas_correct = 0, las_correct = 0, cm_correct = 0;
  // Accuracy grouped by gold label, in label order.
  std::vector<std::pair<std::string, analysis::LabelAccuracy>> per_label;
  std::vector<FrequencyBucket> frequency;  // sentence mode only

  void finish() {
    uas = analysis::percent(uas_correct, n_tokens);
    las = analysis::percent(las_correct, n_tokens);
    cm = analysis::percent(cm_correct, n_entries);
  }
};

struct LabeledHeads {
  std::vector<int> heads;
  std::vector<std::string> labels;
};

namespace detail {

inline analysis::LabelAccuracy& label_slot(EvalReport& r, const std::string& label) {
  for (auto& [name, acc] : r.per_label) {
    if (name == label) return acc;
  }
  r.per_label.emplace_back(label, analysis::LabelAccuracy{});
  return r.per_label.back().second;
}

}  // namespace detail

// Word-internal scoring. A surface annotated with several structures counts
// as a complete match if the prediction equals any of them; arc scores use
// the sense that matches best (most labeled, then unlabeled, hits).
inline EvalReport evaluate_words(const std::vector<WordEntry>& gold, const std::vector<DepTree>& predicted) {
  if (gold.empty()) throw DataError("evaluation over an empty treebank");
  if (gold.size() != predicted.size()) throw DataError("prediction count differs from gold");
  std::map<std::string, std::vector<const DepTree*>> senses;
  for (const auto& g : gold) senses[g.surface()].push_back(&g.tree);

  EvalReport r;
  for (auto name : kLabelNames) r.per_label.emplace_back(std::string(name), analysis::LabelAccuracy{});
  for (std::size_t i = 0; i < gold.size(); ++i) {
    const DepTree& p = predicted[i];
    if (p.size() != gold[i].size()) throw DataError("prediction length differs for '" + gold[i].surface() + "'");
    const DepTree* best = &gold[i].tree;
    std::size_t best_l = 0, best_u = 0;
    bool complete = false;
    bool first = true;
    for (const DepTree* cand : senses[gold[i].surface()]) {
      std::size_t l = 0, u = 0;
      for (std::size_t k = 0; k < p.size(); ++k) {
        if (p.heads[k] == cand->heads[k]) {
          ++u;
          if (p.labels[k] == cand->labels[k]) ++l;
        }
      }
      if (first || l > best_l || (l == best_l && u > best_u)) {
        best = cand;
        best_l = l;
        best_u = u;
        first = false;
      }
      complete = complete || (*cand == p);
    }
    for (std::size_t k = 0; k < p.size(); ++k) {
      auto& slot = r.per_label[label_index(best->labels[k])].second;
      ++slot.total;
      if (p.heads[k] == best->heads[k]) {
        ++slot.unlabeled;
        if (p.labels[k] == best->labels[k]) ++slot.labeled;
      }
    }
    r.n_tokens += p.size();
    r.uas_correct += best_u;
    r.las_correct += best_l;
    r.cm_correct += complete ? 1 : 0;
    ++r.n_entries;
  }
  r.finish();
  return r;
}

// Sentence scoring with punctuation excluded everywhere. `train_counts`, when
// given, adds LAS by training frequency of the word.
inline EvalReport evaluate_sentences(const std::vector<SentenceEntry>& gold, const std::vector<LabeledHeads>& predicted,
                                     const Vocab* train_counts = nullptr) {
  if (gold.empty()) throw DataError("evaluation over an empty treebank");
  if (gold.size() != predicted.size()) throw DataError("prediction count differs from gold");
  EvalReport r;
  if (train_counts) r.frequency = {{"unknown"}, {"<=2"}, {">2"}};
  for (std::size_t i = 0; i < gold.size(); ++i) {
    const auto& g = gold[i];
    const auto& p = predicted[i];
    if (p.heads.size() != g.size() || p.labels.size() != g.size()) throw DataError("prediction length differs from gold");
    bool complete = true;
    for (std::size_t k = 0; k < g.size(); ++k) {
      if (g.is_punct[k]) continue;
      const bool u = p.heads[k] == g.heads[k];
      const bool l = u && p.labels[k] == g.labels[k];
      ++r.n_tokens;
      r.uas_correct += u;
      r.las_correct += l;
      complete = complete && l;
      auto& slot = detail::label_slot(r, g.labels[k]);
      ++slot.total;
      slot.unlabeled += u;
      slot.labeled += l;
      if (train_counts) {
        const long id = train_counts->find(g.words[k]);
        const std::size_t f = id < 0 ? 0 : train_counts->freq(static_cast<std::size_t>(id));
        auto& b = r.frequency[f == 0 ? 0 : f <= 2 ? 1 : 2];
        ++b.tokens;
        b.las_correct += l;
      }
    }
    r.cm_correct += complete ? 1 : 0;
    ++r.n_entries;
  }
  r.finish();
  return r;
}

template <class T>
std::vector<DepTree> predict_words(const BiaffineParser<T>& model, const std::vector<WordEntry>& words) {
  std::vector<DepTree> out;
  out.reserve(words.size());
  std::vector<ParserInput> ins;
  for (const auto& e : words) ins.push_back(model.prepare(e));
  for (const auto& p : model.predict_many(ins)) {
    DepTree t;
    t.heads = p.heads;
    for (auto l : p.labels) t.labels.push_back(parse_label(model.vocabs.labels.token(l)));
    out.push_back(std::move(t));
  }
  return out;
}

template <class T>
std::vector<LabeledHeads> predict_sentences(const BiaffineParser<T>& model, const std::vector<SentenceEntry>& sents) {
  std::vector<LabeledHeads> out;
  out.reserve(sents.size());
  std::vector<ParserInput> ins;
  for (const auto& s : sents) ins.push_back(model.prepare(s));
  for (const auto& p : model.predict_many(ins)) {
    LabeledHeads lh;
    lh.heads = p.heads;
    for (auto l : p.labels) lh.labels.push_back(model.vocabs.labels.token(l));
    out.push_back(std::move(lh));
  }
  return out;
}

template <class T>
EvalReport evaluate(const BiaffineParser<T>& model, const Treebank& tb) {
  if (tb.kind != model.config.mode) {
    throw DataError("treebank kind " + std::string(kind_name(tb.kind)) + " does not match a " +
                    std::string(kind_name(model.config.mode)) + " model");
  }
  if (tb.empty()) throw DataError("evaluation over an empty treebank");
  if (tb.kind == TreebankKind::word_internal) return evaluate_words(tb.words, predict_words(model, tb.words));
  return evaluate_sentences(tb.sentences, predict_sentences(model, tb.sentences), &model.vocabs.word_counts);
}

}  // namespace wist::parser
