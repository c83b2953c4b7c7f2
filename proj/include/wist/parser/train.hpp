#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "json.hpp"
#include "wist/parser/evaluate.hpp"

namespace wist::parser {

struct EpochLog {
  std::size_t epoch = 0;
  double arc_loss = 0;
  double label_loss = 0;
  double dev_uas = 0;
  double dev_las = 0;
};

inline nlohmann::json to_json(const EpochLog& e) {
  return {{"epoch", e.epoch}, {"arc_loss", e.arc_loss}, {"label_loss", e.label_loss},
          {"dev_uas", e.dev_uas}, {"dev_las", e.dev_las}};
}

struct TrainResult {
  std::vector<EpochLog> log;
  std::size_t best_epoch = 0;
  double best_dev_las = -1;
};

namespace detail {

inline void require_trainable(const Treebank& tb) {
  if (tb.empty()) throw DataError("empty training treebank");
  if (!tb.non_projective.empty()) {
    const std::size_t i = tb.non_projective.front();
    const std::string id = tb.kind == TreebankKind::word_internal ? "'" + tb.words[i].surface() + "'" : "sentence";
    throw DataError("non-projective training entry #" + std::to_string(i + 1) + " " + id);
  }
}

template <class E>
std::vector<std::vector<const E*>> make_batches(const std::vector<E>& entries, std::size_t batch_tokens, Rng& rng) {
  std::vector<const E*> order;
  for (const auto& e : entries) order.push_back(&e);
  rng.shuffle(order);
  std::vector<std::vector<const E*>> batches;
  std::vector<const E*> cur;
  std::size_t tokens = 0;
  for (const E* e : order) {
    cur.push_back(e);
    tokens += e->size();
    if (tokens >= batch_tokens) {
      batches.push_back(std::move(cur));
      cur.clear();
      tokens = 0;
    }
  }
  if (!cur.empty()) batches.push_back(std::move(cur));
  return batches;
}

inline const std::vector<int>& gold_heads(const WordEntry& e) { return e.tree.heads; }
inline const std::vector<int>& gold_heads(const SentenceEntry& e) { return e.heads; }

}  // namespace detail

// Mini-batch training with Adam; after every epoch the dev set is parsed and
// the parameters with the best dev LAS are kept. Training stops after
// `patience` epochs without improvement, at max_epochs, or when `on_epoch`
// returns false. The model ends up holding the best parameters.
template <class T>
TrainResult train(BiaffineParser<T>& model, const Treebank& train_tb, const Treebank& dev_tb,
                  const std::function<bool(const EpochLog&)>& on_epoch = {}) {
  detail::require_trainable(train_tb);
  if (train_tb.kind != model.config.mode || (!dev_tb.empty() && dev_tb.kind != model.config.mode)) {
    throw DataError("treebank kind does not match the model mode");
  }
  const Treebank& dev = dev_tb.empty() ? train_tb : dev_tb;
  const TrainConfig& tc = model.config.train;
  Rng rng(model.config.seed ^ 0x9E3779B97F4A7C15ull);
  ad::Adam<T> adam(tc.adam);
  auto trainable = model.params.trainable();
  model.params.zero_grad();

  TrainResult result;
  std::vector<ad::Tensor<T>> best;
  std::size_t since_best = 0;

  auto run_epoch = [&](const auto& entries) {
    double arc_sum = 0, label_sum = 0;
    std::size_t positions = 0;
    for (const auto& batch : detail::make_batches(entries, std::max<std::size_t>(1, tc.batch_tokens), rng)) {
      std::size_t batch_positions = 0;
      for (const auto* e : batch) batch_positions += e->size();
      for (const auto* e : batch) {
        Graph<T> g;
        auto l = model.loss(g, model.prepare(*e), detail::gold_heads(*e), model.gold_label_ids(*e), &rng);
        const double arc = static_cast<double>(l.arc.scalar());
        const double lab = static_cast<double>(l.label.scalar());
        if (!std::isfinite(arc) || !std::isfinite(lab)) throw NumericError("non-finite training loss");
        arc_sum += arc * static_cast<double>(e->size());
        label_sum += lab * static_cast<double>(e->size());
        positions += e->size();
        g.backward(ad::scale(l.total, static_cast<T>(static_cast<double>(e->size()) / static_cast<double>(batch_positions))));
      }
      if (tc.clip > 0) ad::clip_grad_norm(trainable, tc.clip);
      adam.step(trainable);
    }
    return std::pair{arc_sum / static_cast<double>(positions), label_sum / static_cast<double>(positions)};
  };

  for (std::size_t epoch = 1; epoch <= tc.max_epochs; ++epoch) {
    auto [arc, lab] = train_tb.kind == TreebankKind::word_internal ? run_epoch(train_tb.words) : run_epoch(train_tb.sentences);
    EvalReport rep = evaluate(model, dev);
    EpochLog entry{epoch, arc, lab, rep.uas, rep.las};
    result.log.push_back(entry);
    if (rep.las > result.best_dev_las) {
      result.best_dev_las = rep.las;
      result.best_epoch = epoch;
      since_best = 0;
      best.clear();
      for (auto* p : model.params.all()) best.push_back(p->value);
    } else {
      ++since_best;
    }
    if (on_epoch && !on_epoch(entry)) break;
    if (since_best >= tc.patience) break;
  }
  if (!best.empty()) {
    auto all = model.params.all();
    for (std::size_t i = 0; i < all.size(); ++i) all[i]->value = best[i];
  }
  return result;
}

}  // namespace wist::parser
