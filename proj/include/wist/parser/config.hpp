#pragma once

#include <cstdint>
#include <string>

#include "json.hpp"
#include "wist/ad/adam.hpp"
#include "wist/treebank.hpp"
#include "wist/wordrep.hpp"

namespace wist::parser {

struct TrainConfig {
  std::size_t batch_tokens = 5000;  // batches are filled greedily up to this many tokens
  std::size_t max_epochs = 1000;
  std::size_t patience = 100;
  double clip = 5.0;  // global gradient-norm clip, 0 disables
  ad::AdamConfig adam;
};

struct ParserConfig {
  TreebankKind mode = TreebankKind::word_internal;
  std::size_t char_emb_dim = 100;
  std::size_t word_emb_dim = 100;
  std::size_t pos_emb_dim = 50;
  bool use_gold_pos = false;
  wordrep::Config wordrep{wordrep::Mode::none};
  std::size_t lstm_layers = 3;
  std::size_t lstm_hidden = 400;
  std::size_t arc_mlp_dim = 500;
  std::size_t label_mlp_dim = 100;
  double emb_dropout = 0.33;
  double lstm_dropout = 0.33;
  double mlp_dropout = 0.33;
  std::size_t min_word_freq = 2;
  std::uint64_t seed = 1;
  std::string pretrained;        // token-vector file for chars (word-internal) or words (sentence)
  std::string external_vectors;  // per-character vectors keyed word<US>position, word-internal only
  TrainConfig train;

  void validate() const {
    auto positive = [](std::size_t v, const char* name) {
      if (v == 0) throw DataError(std::string(name) + " must be positive");
    };
    positive(char_emb_dim, "char_emb_dim");
    positive(word_emb_dim, "word_emb_dim");
    positive(lstm_layers, "lstm_layers");
    positive(lstm_hidden, "lstm_hidden");
    positive(arc_mlp_dim, "arc_mlp_dim");
    positive(label_mlp_dim, "label_mlp_dim");
    if (use_gold_pos) positive(pos_emb_dim, "pos_emb_dim");
    for (double r : {emb_dropout, lstm_dropout, mlp_dropout}) {
      if (r < 0 || r >= 1) throw DataError("dropout rates must be in [0,1)");
    }
    if (mode == TreebankKind::word_internal && wordrep.mode != wordrep::Mode::none) {
      throw DataError("word representations apply to sentence mode only");
    }
  }
};

inline nlohmann::json to_json(const ParserConfig& c) {
  return {
      {"mode", std::string(kind_name(c.mode))},
      {"char_emb_dim", c.char_emb_dim},
      {"word_emb_dim", c.word_emb_dim},
      {"pos_emb_dim", c.pos_emb_dim},
      {"use_gold_pos", c.use_gold_pos},
      {"wordrep",
       {{"mode", std::string(wordrep::mode_name(c.wordrep.mode))},
        {"char_dim", c.wordrep.char_dim},
        {"label_dim", c.wordrep.label_dim},
        {"dim", c.wordrep.dim},
        {"gcn_layers", c.wordrep.gcn_layers},
        {"use_labels", c.wordrep.use_labels}}},
      {"lstm_layers", c.lstm_layers},
      {"lstm_hidden", c.lstm_hidden},
      {"arc_mlp_dim", c.arc_mlp_dim},
      {"label_mlp_dim", c.label_mlp_dim},
      {"emb_dropout", c.emb_dropout},
      {"lstm_dropout", c.lstm_dropout},
      {"mlp_dropout", c.mlp_dropout},
      {"min_word_freq", c.min_word_freq},
      {"seed", c.seed},
      {"pretrained", c.pretrained},
      {"external_vectors", c.external_vectors},
      {"train",
       {{"batch_tokens", c.train.batch_tokens},
        {"max_epochs", c.train.max_epochs},
        {"patience", c.train.patience},
        {"clip", c.train.clip},
        {"lr", c.train.adam.lr},
        {"beta1", c.train.adam.beta1},
        {"beta2", c.train.adam.beta2},
        {"eps", c.train.adam.eps},
        {"decay", c.train.adam.decay},
        {"decay_steps", c.train.adam.decay_steps}}},
  };
}

inline ParserConfig config_from_json(const nlohmann::json& j) {
  ParserConfig c;
  try {
    c.mode = parse_kind(j.at("mode").get<std::string>());
    c.char_emb_dim = j.at("char_emb_dim");
    c.word_emb_dim = j.at("word_emb_dim");
    c.pos_emb_dim = j.at("pos_emb_dim");
    c.use_gold_pos = j.at("use_gold_pos");
    const auto& w = j.at("wordrep");
    c.wordrep.mode = wordrep::parse_mode(w.at("mode").get<std::string>());
    c.wordrep.char_dim = w.at("char_dim");
    c.wordrep.label_dim = w.at("label_dim");
    c.wordrep.dim = w.at("dim");
    c.wordrep.gcn_layers = w.at("gcn_layers");
    c.wordrep.use_labels = w.at("use_labels");
    c.lstm_layers = j.at("lstm_layers");
    c.lstm_hidden = j.at("lstm_hidden");
    c.arc_mlp_dim = j.at("arc_mlp_dim");
    c.label_mlp_dim = j.at("label_mlp_dim");
    c.emb_dropout = j.at("emb_dropout");
    c.lstm_dropout = j.at("lstm_dropout");
    c.mlp_dropout = j.at("mlp_dropout");
    c.min_word_freq = j.at("min_word_freq");
    c.seed = j.at("seed");
    c.pretrained = j.at("pretrained");
    c.external_vectors = j.at("external_vectors");
    const auto& t = j.at("train");
    c.train.batch_tokens = t.at("batch_tokens");
    c.train.max_epochs = t.at("max_epochs");
    c.train.patience = t.at("patience");
    c.train.clip = t.at("clip");
    c.train.adam.lr = t.at("lr");
    c.train.adam.beta1 = t.at("beta1");
    c.train.adam.beta2 = t.at("beta2");
    c.train.adam.eps = t.at("eps");
    c.train.adam.decay = t.at("decay");
    c.train.adam.decay_steps = t.at("decay_steps");
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("bad parser config: ") + e.what());
  }
  return c;
}

}  // namespace wist::parser
