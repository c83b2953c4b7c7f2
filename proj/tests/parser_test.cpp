#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "models.hpp"
#include "wist/parser/checkpoint.hpp"

using namespace wist;
using namespace wist::parser;

namespace {

ScoreMatrix random_chart(int n, Rng& rng) {
  ScoreMatrix s(static_cast<std::size_t>(n + 1), static_cast<std::size_t>(n + 1));
  for (auto& v : s.data) v = rng.normal();
  return s;
}

TEST(Eisner, MatchesExhaustiveOracle) {
  Rng rng(21);
  for (int n = 1; n <= 5; ++n) {
    const auto trees = fixture::enumerate_projective_trees(n);
    for (int trial = 0; trial < 300; ++trial) {
      auto chart = random_chart(n, rng);
      double best = -1e300;
      for (const auto& t : trees) best = std::max(best, tree_score(chart, t));
      auto heads = eisner_decode(chart);
      ASSERT_EQ(tree_score(chart, heads), best) << "n=" << n;
    }
  }
}

TEST(Eisner, OracleEnumerationCountsSingleRootProjectiveTrees) {
  // Single-root projective trees over n nodes: 1, 2, 7, 30, 143.
  const std::vector<std::size_t> expected{1, 2, 7, 30, 143};
  for (int n = 1; n <= 5; ++n) EXPECT_EQ(fixture::enumerate_projective_trees(n).size(), expected[n - 1]);
}

TEST(Eisner, OutputsAreLegalProjectiveTrees) {
  Rng rng(5);
  for (int trial = 0; trial < 2000; ++trial) {
    const int n = 1 + static_cast<int>(rng.below(32));
    auto heads = eisner_decode(random_chart(n, rng));
    ASSERT_TRUE(fixture::brute_force_legal(heads));
    ASSERT_TRUE(fixture::brute_force_projective(heads));
    ASSERT_TRUE(validate_heads(heads).ok());
  }
}

TEST(Eisner, SingleRootEvenWhenRootArcsDominate) {
  ScoreMatrix s(5, 5, 0.0);
  for (std::size_t d = 1; d <= 4; ++d) s(0, d) = 100.0;
  auto heads = eisner_decode(s);
  EXPECT_EQ(std::count(heads.begin(), heads.end(), 0), 1);
}

TEST(Eisner, RecoversPlantedTree) {
  const std::vector<int> gold{3, 1, 0, 3};
  ScoreMatrix s(5, 5, -1.0);
  for (std::size_t d = 1; d <= 4; ++d) s(static_cast<std::size_t>(gold[d - 1]), d) = 5.0;
  EXPECT_EQ(eisner_decode(s), gold);
}

TEST(Eisner, TiesGoToLowestSplitDeterministically) {
  ScoreMatrix s(4, 4, 0.0);
  auto a = eisner_decode(s);
  auto b = eisner_decode(s);
  EXPECT_EQ(a, b);
  EXPECT_TRUE(validate_heads(a).ok());
}

TEST(Eisner, RejectsBadShapes) {
  EXPECT_THROW(eisner_decode(ScoreMatrix(1, 1)), ShapeError);
  EXPECT_THROW(eisner_decode(ScoreMatrix(3, 4)), ShapeError);
}

TEST(Eisner, NonFiniteScoresAreNumericFailures) {
  ScoreMatrix m(3, 3);
  m.data[4] = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(eisner_decode(m), NumericError);
  m.data[4] = std::numeric_limits<double>::infinity();
  EXPECT_THROW(eisner_decode(m), NumericError);
}

TEST(Labels, RootArcForcedAndRootLabelReservedForIt) {
  ad::Tensor<double> scores(std::vector<std::size_t>{3, 3, 3}, 0.0);
  // label 0 scores highest everywhere
  for (std::size_t i = 0; i < 9; ++i) scores.data[i * 3] = 10.0;
  scores.data[(0 * 3 + 2) * 3 + 1] = 20.0;
  auto free = assign_labels({2, 0}, scores);
  EXPECT_EQ(free, (std::vector<std::size_t>{0, 1}));
  auto forced = assign_labels({2, 0}, scores, true, 0);
  EXPECT_EQ(forced[1], 0u);
  EXPECT_NE(forced[0], 0u);
}

struct TinyModel {
  Treebank tb = fixture::synthetic_treebank(6, 3);
  std::unique_ptr<BiaffineParser<double>> model;
  explicit TinyModel(std::size_t dim = 6) {
    auto cfg = fixture::tiny_config(dim, 2);
    model = std::make_unique<BiaffineParser<double>>(cfg, build_vocabs(tb, cfg));
    Rng rng(9);
    for (auto* p : model->params.all()) {
      if (p->name.starts_with("biaffine")) {
        for (auto& v : p->value.data) v = rng.uniform(-1, 1);
      }
    }
  }
};

TEST(Model, ChartMatchesExplicitLoops) {
  TinyModel t;
  auto& m = *t.model;
  const auto in = m.prepare(t.tb.words[0]);
  const auto chart = m.score(in);

  ad::Graph<double> g(false);
  auto x = ad::embedding_lookup(g.param(*m.item_emb), in.ids);
  auto h = m.encoder.forward(g, x).states;
  const auto rah = m.arc_head.forward(g, h).value();
  const auto rad = m.arc_dep.forward(g, h).value();
  const auto rlh = m.label_head.forward(g, h).value();
  const auto rld = m.label_dep.forward(g, h).value();
  const auto& W = m.arc_weight->value;
  const auto& U = m.label_weight->value;
  const std::size_t N = in.ids.size(), A = rah.cols(), B = rlh.cols(), L = m.n_labels();
  for (std::size_t hd = 0; hd < N; ++hd) {
    for (std::size_t d = 0; d < N; ++d) {
      double s = 0;
      for (std::size_t i = 0; i <= A; ++i) {
        const double xi = i < A ? rah(hd, i) : 1.0;
        for (std::size_t j = 0; j < A; ++j) s += xi * W(i, j) * rad(d, j);
      }
      ASSERT_NEAR(chart.arc(hd, d), s, 1e-10);
      for (std::size_t l = 0; l < L; ++l) {
        double sl = 0;
        for (std::size_t i = 0; i <= B; ++i) {
          const double xi = i < B ? rlh(hd, i) : 1.0;
          for (std::size_t j = 0; j <= B; ++j) {
            const double yj = j < B ? rld(d, j) : 1.0;
            sl += xi * U.data[(l * (B + 1) + i) * (B + 1) + j] * yj;
          }
        }
        ASSERT_NEAR(chart.labels.data[(hd * N + d) * L + l], sl, 1e-10);
      }
    }
  }
}

TEST(Model, LossMatchesManualCrossEntropy) {
  TinyModel t;
  auto& m = *t.model;
  const auto& e = t.tb.words[1];
  const auto in = m.prepare(e);
  const auto chart = m.score(in);
  const std::size_t n = e.size(), N = n + 1, L = m.n_labels();
  const auto labels = m.gold_label_ids(e);
  double arc = 0, lab = 0;
  for (std::size_t d = 1; d <= n; ++d) {
    double z = 0;
    for (std::size_t hd = 0; hd < N; ++hd) z += std::exp(chart.arc(hd, d));
    arc -= chart.arc(static_cast<std::size_t>(e.tree.heads[d - 1]), d) - std::log(z);
    const double* row = chart.labels.data.data() + (static_cast<std::size_t>(e.tree.heads[d - 1]) * N + d) * L;
    double zl = 0;
    for (std::size_t l = 0; l < L; ++l) zl += std::exp(row[l]);
    lab -= row[labels[d - 1]] - std::log(zl);
  }
  ad::Graph<double> g;
  auto loss = m.loss(g, in, e.tree.heads, labels);
  EXPECT_NEAR(loss.arc.scalar(), arc / n, 1e-10);
  EXPECT_NEAR(loss.label.scalar(), lab / n, 1e-10);
  EXPECT_NEAR(loss.total.scalar(), (arc + lab) / n, 1e-10);
}

TEST(Model, FullGradientCheck) {
  auto r = fixture::full_model_grad_check();
  EXPECT_LT(r.max_tensor_rel_error, 1e-4) << r.worst_tensor;
}

TEST(Model, PredictionsAreLegalWithSingleRootLabel) {
  TinyModel t;
  Rng rng(2);
  for (int i = 0; i < 50; ++i) {
    auto e = fixture::random_word(2 + static_cast<int>(rng.below(8)), rng);
    auto parsed = t.model->parse_word(e.surface());
    auto report = validate_tree(parsed.tree);
    ASSERT_TRUE(report.ok()) << report.summary();
  }
  EXPECT_THROW(t.model->parse_word("的"), DataError);
}

TEST(Model, BatchedScoresEqualOneAtATime) {
  for (bool use_float : {false, true}) {
    auto cfg = fixture::tiny_config(8);
    auto tb = fixture::synthetic_treebank(40, 5, 2, 6);
    auto vocabs = parser::build_vocabs(tb, cfg);
    auto check = [&](const auto& model) {
      std::vector<parser::ParserInput> ins;
      for (const auto& e : tb.words) ins.push_back(model.prepare(e));
      // Small batches force several groups per length.
      auto many = model.score_many(ins, 3);
      ASSERT_EQ(many.size(), ins.size());
      for (std::size_t i = 0; i < ins.size(); ++i) {
        auto one = model.score(ins[i]);
        EXPECT_EQ(one.arc.data, many[i].arc.data) << i;
        EXPECT_EQ(one.labels.data, many[i].labels.data) << i;
      }
    };
    if (use_float) {
      check(parser::BiaffineParser<float>(cfg, vocabs));
    } else {
      check(parser::BiaffineParser<double>(cfg, vocabs));
    }
  }
}

TEST(Model, DropoutOnlyWhenRngGiven) {
  TinyModel t;
  auto& m = *t.model;
  m.config.emb_dropout = m.config.lstm_dropout = m.config.mlp_dropout = 0.33;
  const auto in = m.prepare(t.tb.words[0]);
  auto run = [&](Rng* rng) {
    ad::Graph<double> g(false);
    return m.forward(g, in, rng).arc.value().data;
  };
  EXPECT_EQ(run(nullptr), run(nullptr));
  Rng r1(1), r2(1);
  auto a = run(&r1), b = run(&r2);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, run(nullptr));
}

TEST(Metrics, HandConstructedOracle) {
  std::vector<WordEntry> gold = {make_word("常常", {0, 1}, {Label::root, Label::repet}),
                                 make_word("发展", {0, 1}, {Label::root, Label::coo})};
  std::vector<DepTree> pred = {{{0, 1}, {Label::root, Label::repet}}, {{0, 1}, {Label::root, Label::obj}}};
  auto r = evaluate_words(gold, pred);
  EXPECT_DOUBLE_EQ(r.uas, 100.0);
  EXPECT_DOUBLE_EQ(r.las, 75.0);
  EXPECT_DOUBLE_EQ(r.cm, 50.0);
  EXPECT_EQ(r.per_label[label_index(Label::coo)].second.total, 1u);
  EXPECT_EQ(r.per_label[label_index(Label::coo)].second.labeled, 0u);
}

TEST(Metrics, GoldAgainstItselfIsPerfect) {
  Rng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    auto tb = fixture::synthetic_treebank(30, rng.next(), 2, 6);
    std::vector<DepTree> pred;
    for (const auto& e : tb.words) pred.push_back(e.tree);
    auto r = evaluate_words(tb.words, pred);
    EXPECT_DOUBLE_EQ(r.uas, 100.0);
    EXPECT_DOUBLE_EQ(r.las, 100.0);
    EXPECT_DOUBLE_EQ(r.cm, 100.0);
  }
}

TEST(Metrics, AnySenseCountsAsCompleteMatch) {
  std::vector<WordEntry> gold = {make_word("制服", {0, 1}, {Label::root, Label::cmp}),
                                 make_word("制服", {2, 0}, {Label::att, Label::root}, 2)};
  DepTree second{{2, 0}, {Label::att, Label::root}};
  auto r = evaluate_words(gold, {second, second});
  EXPECT_DOUBLE_EQ(r.cm, 100.0);
  EXPECT_DOUBLE_EQ(r.las, 100.0);
}

TEST(Metrics, SentencePunctuationExcludedAndBuckets) {
  auto tb = parse_treebank(
      "1\t我们\t2\tnsubj\tPN\n2\t走\t0\troot\tVV\n3\t。\t2\tpunct\tPU\n\n"
      "1\t他\t2\tnsubj\tPN\n2\t来\t0\troot\tVV\n3\t。\t1\tpunct\tPU\n",
      TreebankKind::sentence);
  std::vector<LabeledHeads> pred = {{{2, 0, 1}, {"nsubj", "root", "dep"}}, {{2, 0, 1}, {"dobj", "root", "punct"}}};
  Vocab counts(false);
  counts.add("走", 3);
  counts.add("他", 1);
  auto r = evaluate_sentences(tb.sentences, pred, &counts);
  EXPECT_EQ(r.n_tokens, 4u);
  EXPECT_DOUBLE_EQ(r.uas, 100.0);
  EXPECT_DOUBLE_EQ(r.las, 75.0);
  EXPECT_DOUBLE_EQ(r.cm, 50.0);
  ASSERT_EQ(r.frequency.size(), 3u);
  EXPECT_EQ(r.frequency[0].tokens, 2u);  // 我们, 来
  EXPECT_EQ(r.frequency[1].tokens, 1u);  // 他
  EXPECT_EQ(r.frequency[1].las_correct, 0u);
  EXPECT_EQ(r.frequency[2].tokens, 1u);  // 走
}

TEST(Train, OverfitsSmallTreebank) {
  auto tb = fixture::synthetic_treebank(20, 11);
  auto r = fixture::overfit(tb, 150);
  EXPECT_GE(r.train_las, 99.0) << "after " << r.epochs << " epochs";
}

TEST(Train, RejectsNonProjectiveEntries) {
  auto tb = parse_treebank("1\t常\t0\troot\n2\t常\t1\trepet\n\n1\t上\t3\tatt\n2\t下\t0\troot\n3\t文\t2\tobj\n");
  auto cfg = fixture::tiny_config(4, 1);
  BiaffineParser<double> m(cfg, build_vocabs(tb, cfg));
  try {
    train(m, tb, Treebank{});
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("上下文"), std::string::npos) << e.what();
  }
}

TEST(Train, DeterministicForFixedSeed) {
  auto tb = fixture::synthetic_treebank(8, 5);
  auto run = [&] {
    auto cfg = fixture::tiny_config(8, 1);
    cfg.emb_dropout = cfg.lstm_dropout = cfg.mlp_dropout = 0.2;
    cfg.train.max_epochs = 3;
    cfg.train.batch_tokens = 10;
    BiaffineParser<double> m(cfg, build_vocabs(tb, cfg));
    auto res = train(m, tb, tb);
    return std::pair{res.log.back().arc_loss, m.score(m.prepare(tb.words[0])).arc.data};
  };
  EXPECT_EQ(run(), run());
}

TEST(Train, KeepsBestEpochParameters) {
  auto tb = fixture::synthetic_treebank(10, 8);
  auto cfg = fixture::tiny_config(16, 1);
  cfg.train.max_epochs = 12;
  cfg.train.batch_tokens = 10;
  BiaffineParser<double> m(cfg, build_vocabs(tb, cfg));
  auto res = train(m, tb, tb);
  EXPECT_DOUBLE_EQ(evaluate(m, tb).las, res.best_dev_las);
}

class Checkpoint : public ::testing::Test {
 protected:
  std::string path = (std::filesystem::temp_directory_path() / "wist_parser_test.ckpt").string();
  void TearDown() override {
    std::remove(path.c_str());
    std::remove((path + ".json").c_str());
  }
};

TEST_F(Checkpoint, RoundTripPreservesScores) {
  TinyModel t;
  save_checkpoint(*t.model, path);
  auto back = load_checkpoint<double>(path);
  for (const auto& e : t.tb.words) {
    EXPECT_EQ(back->score(back->prepare(e)).arc.data, t.model->score(t.model->prepare(e)).arc.data);
  }
  EXPECT_TRUE(std::filesystem::exists(path + ".json"));
  auto single = load_checkpoint<float>(path);
  auto a = single->score(single->prepare(t.tb.words[0])).arc.data;
  auto b = t.model->score(t.model->prepare(t.tb.words[0])).arc.data;
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-4);
}

TEST_F(Checkpoint, PretrainedTableSurvives) {
  auto tb = fixture::synthetic_treebank(4, 1);
  auto cfg = fixture::tiny_config(3, 1);
  auto emb = parse_embeddings("婚 0.5 0.25 1\n新 1 2 3\n");
  BiaffineParser<double> m(cfg, build_vocabs(tb, cfg, &emb), &emb);
  ASSERT_NE(m.item_pretrained, nullptr);
  EXPECT_FALSE(m.item_pretrained->trainable);
  save_checkpoint(m, path);
  auto back = load_checkpoint<double>(path);
  ASSERT_NE(back->item_pretrained, nullptr);
  EXPECT_EQ(back->item_pretrained->value.data, m.item_pretrained->value.data);
  EXPECT_EQ(back->parse_word("婚新").tree, m.parse_word("婚新").tree);
}

TEST_F(Checkpoint, CorruptFilesRejected) {
  TinyModel t;
  save_checkpoint(*t.model, path);
  auto bytes = read_file(path);
  write_file(path, bytes.substr(0, bytes.size() / 2));
  EXPECT_THROW(load_checkpoint<double>(path), DataError);
  write_file(path, "not a checkpoint at all");
  EXPECT_THROW(load_checkpoint<double>(path), DataError);
  EXPECT_THROW(load_checkpoint<double>(path + ".missing"), DataError);
}

TEST(Config, JsonRoundTripAndValidation) {
  ParserConfig c;
  c.lstm_hidden = 77;
  c.train.adam.lr = 0.5;
  c.wordrep.mode = wordrep::Mode::labelgcn;
  c.mode = TreebankKind::sentence;
  auto back = config_from_json(to_json(c));
  EXPECT_EQ(to_json(back), to_json(c));
  EXPECT_THROW(config_from_json(nlohmann::json{{"mode", "word-internal"}}), DataError);
  ParserConfig bad;
  bad.emb_dropout = 1.0;
  EXPECT_THROW(bad.validate(), DataError);
}

TEST(Vocab, BuildsFromTrainingWithPretrainedExtension) {
  auto tb = parse_treebank("1\t婚\t3\tatt\n2\t姻\t1\tcoo\n3\t法\t0\troot\n");
  ParserConfig cfg;
  auto emb = parse_embeddings("新 1 2\n");
  auto v = build_vocabs(tb, cfg, &emb);
  EXPECT_TRUE(v.chars.contains("婚"));
  EXPECT_TRUE(v.chars.contains("新"));
  EXPECT_EQ(v.labels.size(), kLabelCount);
  EXPECT_EQ(v.chars.id("未"), 0u);
}

}  // namespace
