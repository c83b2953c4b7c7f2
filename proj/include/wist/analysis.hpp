#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "wist/treebank.hpp"

namespace wist::analysis {

// Percent rounded to one decimal, halves away from zero.
inline double round1(double pct) { return std::floor(pct * 10.0 + 0.5 + 1e-9) / 10.0; }

inline double percent(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : 100.0 * static_cast<double>(num) / static_cast<double>(den);
}

inline const std::vector<std::string>& pos_groups() {
  static const std::vector<std::string> groups = {"Noun",    "Verb",    "Proper Noun", "Adjective",
                                                  "Adverb",  "Numeral", "Others"};
  return groups;
}

// Folds a coarse or UD-style tag into one of the grouping rows.
inline std::string coarse_pos_group(const std::string& tag) {
  static const std::map<std::string, std::string> table = {
      {"Noun", "Noun"},           {"NOUN", "Noun"},           {"Verb", "Verb"},         {"VERB", "Verb"},
      {"Proper Noun", "Proper Noun"}, {"PROPN", "Proper Noun"}, {"Adjective", "Adjective"}, {"ADJ", "Adjective"},
      {"Adverb", "Adverb"},       {"ADV", "Adverb"},          {"Numeral", "Numeral"},   {"NUM", "Numeral"}};
  auto it = table.find(tag);
  return it == table.end() ? "Others" : it->second;
}

struct DistributionRow {
  std::string group;
  std::array<std::size_t, kLabelCount> counts{};
  std::size_t total = 0;   // arcs
  std::size_t n_words = 0;

  double pct(Label l) const { return percent(counts[label_index(l)], total); }
  double rounded(Label l) const { return round1(pct(l)); }
};

struct DistributionTable {
  std::vector<DistributionRow> rows;  // "overall" first

  const DistributionRow* find(const std::string& group) const {
    for (const auto& r : rows) {
      if (r.group == group) return &r;
    }
    return nullptr;
  }
  const DistributionRow& overall() const { return rows.front(); }
};

// Label frequencies; a label counts once per occurrence in a word. With
// grouping, a word contributes its labels once to every distinct POS group it
// carries; words without POS fall into Others.
inline DistributionTable label_distribution(const Treebank& tb, bool group_by_pos) {
  if (tb.kind != TreebankKind::word_internal) throw DataError("label distribution needs a word-internal treebank");
  if (tb.words.empty()) throw DataError("label distribution of an empty treebank");
  DistributionTable t;
  t.rows.push_back({"overall"});
  std::map<std::string, DistributionRow> groups;
  for (const auto& g : pos_groups()) groups[g].group = g;

  auto add = [](DistributionRow& row, const WordEntry& e) {
    for (Label l : e.tree.labels) ++row.counts[label_index(l)];
    row.total += e.size();
    ++row.n_words;
  };
  for (const auto& e : tb.words) {
    add(t.rows.front(), e);
    if (!group_by_pos) continue;
    std::vector<std::string> mine;
    for (const auto& tag : e.pos_tags) mine.push_back(coarse_pos_group(tag));
    if (mine.empty()) mine.push_back("Others");
    std::sort(mine.begin(), mine.end());
    mine.erase(std::unique(mine.begin(), mine.end()), mine.end());
    for (const auto& g : mine) add(groups[g], e);
  }
  if (group_by_pos) {
    for (const auto& g : pos_groups()) {
      if (groups[g].total > 0) t.rows.push_back(groups[g]);
    }
  }
  return t;
}

inline double avg_word_length_from_root(double root_percent) {
  if (!(root_percent > 0.0)) throw DataError("root percentage must be positive");
  return 100.0 / root_percent;
}

inline double avg_word_length_from_root(const DistributionTable& dist) {
  if (dist.rows.empty()) throw DataError("distribution has no overall row");
  return avg_word_length_from_root(dist.overall().pct(Label::root));
}

// One annotator's (or one workflow slot's) trees.
struct AnnotationSet {
  std::string annotator;
  Treebank tb;
};

struct AgreementReport {
  double dep_labeled = 0, dep_unlabeled = 0;
  double word_labeled = 0, word_unlabeled = 0;
  std::size_t n_chars = 0, n_words = 0;
};

// Character-level and whole-word agreement between two annotations of the
// same word list.
inline AgreementReport pairwise_consistency(const AnnotationSet& a, const AnnotationSet& b) {
  const auto& wa = a.tb.words;
  const auto& wb = b.tb.words;
  if (wa.size() != wb.size()) {
    throw DataError("annotation sets differ in size: " + std::to_string(wa.size()) + " vs " + std::to_string(wb.size()));
  }
  std::size_t chars = 0, dep_l = 0, dep_u = 0, word_l = 0, word_u = 0;
  for (std::size_t i = 0; i < wa.size(); ++i) {
    if (wa[i].chars != wb[i].chars) {
      throw DataError("annotation sets disagree on word " + std::to_string(i + 1) + ": '" + wa[i].surface() + "' vs '" +
                      wb[i].surface() + "'");
    }
    const auto& ta = wa[i].tree;
    const auto& tb = wb[i].tree;
    for (std::size_t k = 0; k < ta.size(); ++k) {
      ++chars;
      if (ta.heads[k] == tb.heads[k]) {
        ++dep_u;
        if (ta.labels[k] == tb.labels[k]) ++dep_l;
      }
    }
    if (ta.heads == tb.heads) {
      ++word_u;
      if (ta.labels == tb.labels) ++word_l;
    }
  }
  if (wa.empty()) throw DataError("no shared words to compare");
  AgreementReport r;
  r.n_chars = chars;
  r.n_words = wa.size();
  r.dep_labeled = percent(dep_l, chars);
  r.dep_unlabeled = percent(dep_u, chars);
  r.word_labeled = percent(word_l, wa.size());
  r.word_unlabeled = percent(word_u, wa.size());
  return r;
}

struct LabelAccuracy {
  std::size_t total = 0;
  std::size_t labeled = 0;
  std::size_t unlabeled = 0;
  double labeled_acc() const { return percent(labeled, total); }
  double unlabeled_acc() const { return percent(unlabeled, total); }
};

struct AccuracyReport {
  double overall_labeled = 0, overall_unlabeled = 0;
  double word_labeled = 0, word_unlabeled = 0;
  std::size_t n_arcs = 0, n_words = 0;
  std::array<LabelAccuracy, kLabelCount> per_label{};
};

namespace detail {

inline const WordEntry& find_gold(const std::map<std::pair<std::string, int>, const WordEntry*>& by_sense,
                                  const std::map<std::string, const WordEntry*>& by_surface, const WordEntry& sub) {
  const auto surface = sub.surface();
  if (auto it = by_sense.find({surface, sub.sense_id}); it != by_sense.end()) return *it->second;
  if (auto it = by_surface.find(surface); it != by_surface.end()) return *it->second;
  throw DataError("submission for unknown word '" + surface + "'");
}

}  // namespace detail

// Every submitted arc is scored against the final answer and grouped by the
// final answer's label.
inline AccuracyReport annotation_accuracy(const std::vector<AnnotationSet>& submissions, const Treebank& gold) {
  std::map<std::pair<std::string, int>, const WordEntry*> by_sense;
  std::map<std::string, const WordEntry*> by_surface;
  for (const auto& g : gold.words) {
    by_sense.emplace(std::make_pair(g.surface(), g.sense_id), &g);
    by_surface.emplace(g.surface(), &g);
  }
  AccuracyReport r;
  std::size_t arc_l = 0, arc_u = 0, word_l = 0, word_u = 0;
  for (const auto& set : submissions) {
    for (const auto& sub : set.tb.words) {
      const WordEntry& g = detail::find_gold(by_sense, by_surface, sub);
      if (g.size() != sub.size()) throw DataError("submission length differs from gold for '" + g.surface() + "'");
      for (std::size_t k = 0; k < g.size(); ++k) {
        auto& bucket = r.per_label[label_index(g.tree.labels[k])];
        ++bucket.total;
        ++r.n_arcs;
        if (sub.tree.heads[k] == g.tree.heads[k]) {
          ++bucket.unlabeled;
          ++arc_u;
          if (sub.tree.labels[k] == g.tree.labels[k]) {
            ++bucket.labeled;
            ++arc_l;
          }
        }
      }
      ++r.n_words;
      if (sub.tree.heads == g.tree.heads) {
        ++word_u;
        if (sub.tree.labels == g.tree.labels) ++word_l;
      }
    }
  }
  r.overall_labeled = percent(arc_l, r.n_arcs);
  r.overall_unlabeled = percent(arc_u, r.n_arcs);
  r.word_labeled = percent(word_l, r.n_words);
  r.word_unlabeled = percent(word_u, r.n_words);
  return r;
}

// Head patterns of three-character words, named by arrow direction (head -> dependent).
enum class ThreeCharPattern { left_chain, left_pair_under_third, middle_root, right_chain, other };

inline constexpr std::array<std::string_view, 5> kPatternNames = {"1<-2<-3", "(1->2)<-3", "1<-2->3", "1->2->3",
                                                                 "other"};

inline ThreeCharPattern classify_three_char(const std::vector<int>& heads) {
  if (heads == std::vector<int>{2, 3, 0}) return ThreeCharPattern::left_chain;
  if (heads == std::vector<int>{3, 1, 0}) return ThreeCharPattern::left_pair_under_third;
  if (heads == std::vector<int>{2, 0, 2}) return ThreeCharPattern::middle_root;
  if (heads == std::vector<int>{0, 1, 2}) return ThreeCharPattern::right_chain;
  return ThreeCharPattern::other;
}

struct PatternReport {
  std::size_t n_words = 0;
  std::array<double, 3> root_position{};  // percent with root at char 1, 2, 3
  std::array<double, 5> patterns{};       // indexed by ThreeCharPattern
};

inline PatternReport three_char_stats(const Treebank& tb) {
  std::array<std::size_t, 3> roots{};
  std::array<std::size_t, 5> pats{};
  std::size_t n = 0;
  for (const auto& e : tb.words) {
    if (e.size() != 3) continue;
    ++n;
    for (int k = 0; k < 3; ++k) {
      if (e.tree.heads[k] == 0) ++roots[k];
    }
    ++pats[static_cast<std::size_t>(classify_three_char(e.tree.heads))];
  }
  if (n == 0) throw DataError("treebank has no three-character words");
  PatternReport r;
  r.n_words = n;
  for (int k = 0; k < 3; ++k) r.root_position[k] = percent(roots[k], n);
  for (int k = 0; k < 5; ++k) r.patterns[k] = percent(pats[k], n);
  return r;
}

// Surfaces that occur with at least two different trees, in first-seen order.
inline std::vector<std::string> multi_structure_words(const Treebank& tb) {
  std::vector<std::string> order;
  std::map<std::string, std::vector<const DepTree*>> trees;
  for (const auto& e : tb.words) {
    auto s = e.surface();
    auto [it, fresh] = trees.try_emplace(s);
    if (fresh) order.push_back(s);
    it->second.push_back(&e.tree);
  }
  std::vector<std::string> out;
  for (const auto& s : order) {
    const auto& ts = trees[s];
    bool differs = false;
    for (std::size_t i = 1; i < ts.size() && !differs; ++i) differs = !(*ts[i] == *ts[0]);
    if (differs) out.push_back(s);
  }
  return out;
}

struct ConfusionPair {
  Label a, b;  // a < b
  std::size_t count = 0;
  double pct = 0;
};

// Among characters given the same head but different labels by two
// annotators, the distribution of unordered label pairs, most frequent first.
inline std::vector<ConfusionPair> label_confusion_pairs(const AnnotationSet& x, const AnnotationSet& y) {
  if (x.tb.words.size() != y.tb.words.size()) throw DataError("annotation sets differ in size");
  std::map<std::pair<Label, Label>, std::size_t> counts;
  std::size_t total = 0;
  for (std::size_t i = 0; i < x.tb.words.size(); ++i) {
    const auto& ta = x.tb.words[i].tree;
    const auto& tb = y.tb.words[i].tree;
    if (x.tb.words[i].chars != y.tb.words[i].chars) throw DataError("annotation sets disagree on word list");
    for (std::size_t k = 0; k < ta.size(); ++k) {
      if (ta.heads[k] != tb.heads[k] || ta.labels[k] == tb.labels[k]) continue;
      auto p = std::minmax(ta.labels[k], tb.labels[k]);
      ++counts[{p.first, p.second}];
      ++total;
    }
  }
  std::vector<ConfusionPair> out;
  for (const auto& [k, c] : counts) out.push_back({k.first, k.second, c, percent(c, total)});
  std::stable_sort(out.begin(), out.end(), [](const auto& l, const auto& r) { return l.count > r.count; });
  return out;
}

}  // namespace wist::analysis
