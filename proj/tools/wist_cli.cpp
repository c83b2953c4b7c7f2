// wist: train, parse, eval, stats, agree, split, lexicon, serve.
// Exit codes: 0 ok, 1 usage, 2 data error, 3 numeric failure.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "wist/analysis.hpp"
#include "wist/annotation/server.hpp"
#include "wist/parser/checkpoint.hpp"
#include "wist/parser/train.hpp"

using namespace wist;
using nlohmann::json;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string fmt(double v, int prec = 2) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", prec, v);
  return buf;
}

// Left-aligned first column, right-aligned rest.
void print_table(std::ostream& os, const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> w(header.size(), 0);
  auto width = [](const std::string& s) { return utf8::length(s); };
  for (std::size_t c = 0; c < header.size(); ++c) w[c] = width(header[c]);
  for (const auto& r : rows)
    for (std::size_t c = 0; c < r.size() && c < w.size(); ++c) w[c] = std::max(w[c], width(r[c]));
  auto line = [&](const std::vector<std::string>& r) {
    for (std::size_t c = 0; c < r.size(); ++c) {
      const std::string pad(w[c] - width(r[c]), ' ');
      if (c) os << "  ";
      os << (c == 0 ? r[c] + pad : pad + r[c]);
    }
    os << '\n';
  };
  line(header);
  std::size_t total = 0;
  for (auto x : w) total += x;
  os << std::string(total + 2 * (w.size() - 1), '-') << '\n';
  for (const auto& r : rows) line(r);
}

// Marks path options in --help; existence is checked by the loaders so a
// missing file is a data error (exit 2), not a usage error.
const CLI::Validator kFile([](std::string&) { return std::string(); }, "FILE");

std::string precision_check(const std::string& p) {
  if (p != "float" && p != "double") throw UsageError("--precision must be float or double");
  return p;
}

// ---------------------------------------------------------------- train

struct TrainOpts {
  std::string mode = "word-internal";
  std::string train, dev, test, out, log, emb, external;
  std::string precision = "float";
  std::uint64_t seed = 1;
  std::size_t epochs = 1000, patience = 100, batch_tokens = 5000;
  double lr = 2e-3, clip = 5.0, dropout = 0.33;
  std::size_t char_emb_dim = 100, word_emb_dim = 100, pos_emb_dim = 50;
  std::size_t lstm_layers = 3, lstm_hidden = 400, arc_mlp = 500, label_mlp = 100, min_word_freq = 2;
  bool gold_pos = false;
  std::string wordrep = "none";
  std::size_t wordrep_dim = 100, wordrep_char_dim = 50, wordrep_label_dim = 50, gcn_layers = 2;
  bool no_labels = false;
  std::string lexicon, wi_model;
  bool quiet = false;
};

parser::ParserConfig to_config(const TrainOpts& o) {
  parser::ParserConfig c;
  c.mode = parse_kind(o.mode);
  c.seed = o.seed;
  c.char_emb_dim = o.char_emb_dim;
  c.word_emb_dim = o.word_emb_dim;
  c.pos_emb_dim = o.pos_emb_dim;
  c.use_gold_pos = o.gold_pos;
  c.lstm_layers = o.lstm_layers;
  c.lstm_hidden = o.lstm_hidden;
  c.arc_mlp_dim = o.arc_mlp;
  c.label_mlp_dim = o.label_mlp;
  c.emb_dropout = c.lstm_dropout = c.mlp_dropout = o.dropout;
  c.min_word_freq = o.min_word_freq;
  c.pretrained = o.emb;
  c.external_vectors = o.external;
  c.wordrep.mode = wordrep::parse_mode(o.wordrep);
  c.wordrep.dim = o.wordrep_dim;
  c.wordrep.char_dim = o.wordrep_char_dim;
  c.wordrep.label_dim = o.wordrep_label_dim;
  c.wordrep.gcn_layers = o.gcn_layers;
  c.wordrep.use_labels = !o.no_labels;
  c.train.max_epochs = o.epochs;
  c.train.patience = o.patience;
  c.train.batch_tokens = o.batch_tokens;
  c.train.clip = o.clip;
  if (!(o.lr > 0) || !std::isfinite(o.lr)) throw UsageError("--lr must be a positive finite number");
  c.train.adam.lr = o.lr;
  c.validate();
  return c;
}

// Word-internal trees for every surface in `tbs`: gold where annotated,
// otherwise parsed by `wi_model` (or the default chain when none is given).
wordrep::Lexicon make_lexicon(const std::vector<const Treebank*>& tbs, const std::string& gold_path,
                              const std::string& wi_model) {
  std::vector<std::string> surfaces;
  for (const auto* tb : tbs)
    for (const auto& s : tb->sentences) surfaces.insert(surfaces.end(), s.words.begin(), s.words.end());
  Treebank gold;
  if (!gold_path.empty()) gold = load_treebank(gold_path, TreebankKind::word_internal);
  std::unique_ptr<parser::BiaffineParser<float>> wi;
  if (!wi_model.empty()) {
    wi = parser::load_checkpoint<float>(wi_model);
    if (!wi->word_internal()) throw DataError("--wi-model must be a word-internal checkpoint");
  }
  std::function<DepTree(const std::vector<std::string>&)> parse;
  if (wi) parse = [&](const std::vector<std::string>& chars) { return wi->parse_word(utf8::join(chars)).tree; };
  return wordrep::build_lexicon(surfaces, gold, parse);
}

// Fully resolved options of one command, readable back through --config.
std::string resolved_config(const CLI::App& cmd) { return "[" + cmd.get_name() + "]\n" + cmd.config_to_str(true, false); }

void write_report(const std::string& path, const json& report, const CLI::App& app) {
  write_file(path, report.dump(2) + "\n");
  write_file(path + ".run.ini", resolved_config(app));
}

template <class T>
int run_train(const TrainOpts& o, const CLI::App& app) {
  const parser::ParserConfig cfg = to_config(o);
  Treebank train_tb = load_treebank(o.train, cfg.mode);
  Treebank dev_tb, test_tb;
  if (!o.dev.empty()) dev_tb = load_treebank(o.dev, cfg.mode);
  if (!o.test.empty()) test_tb = load_treebank(o.test, cfg.mode);
  std::unique_ptr<EmbeddingTable> emb;
  if (!o.emb.empty()) emb = std::make_unique<EmbeddingTable>(load_embeddings(o.emb));
  parser::BiaffineParser<T> model(cfg, parser::build_vocabs(train_tb, cfg, emb.get()), emb.get());
  if (cfg.mode == TreebankKind::sentence && cfg.wordrep.mode != wordrep::Mode::none &&
      cfg.wordrep.mode != wordrep::Mode::charlstm) {
    model.lexicon = make_lexicon({&train_tb, &dev_tb, &test_tb}, o.lexicon, o.wi_model);
  }

  const std::string log_path = o.log.empty() ? o.out + ".log.jsonl" : o.log;
  std::ofstream log(log_path, std::ios::trunc);
  if (!log) throw DataError("cannot write log '" + log_path + "'");
  auto result = parser::train(model, train_tb, dev_tb, [&](const parser::EpochLog& e) {
    log << parser::to_json(e).dump() << '\n';
    log.flush();
    if (!o.quiet) {
      std::cerr << "epoch " << e.epoch << "  arc " << fmt(e.arc_loss, 4) << "  label " << fmt(e.label_loss, 4)
                << "  dev UAS " << fmt(e.dev_uas) << "  LAS " << fmt(e.dev_las) << '\n';
    }
    return true;
  });
  parser::save_checkpoint(model, o.out);
  write_file(o.out + ".run.ini", resolved_config(app));

  const auto dev = parser::evaluate(model, dev_tb.empty() ? train_tb : dev_tb);
  std::vector<std::vector<std::string>> rows = {{dev_tb.empty() ? "train" : "dev", fmt(dev.uas), fmt(dev.las), fmt(dev.cm)}};
  json summary = {{"best_epoch", result.best_epoch},
                  {"epochs", result.log.size()},
                  {"dev", {{"uas", dev.uas}, {"las", dev.las}, {"cm", dev.cm}}}};
  if (!test_tb.empty()) {
    const auto test = parser::evaluate(model, test_tb);
    rows.push_back({"test", fmt(test.uas), fmt(test.las), fmt(test.cm)});
    summary["test"] = {{"uas", test.uas}, {"las", test.las}, {"cm", test.cm}};
  }
  write_file(o.out + ".summary.json", summary.dump(2) + "\n");
  std::cout << "best epoch " << result.best_epoch << " of " << result.log.size() << "\n";
  print_table(std::cout, {"set", "UAS", "LAS", "CM"}, rows);
  return 0;
}

// ---------------------------------------------------------------- parse

struct ParseOpts {
  std::string model, file, output, wi_model, lexicon;
  std::vector<std::string> words;
  std::size_t threads = 0;
  std::string precision = "float";
};

std::vector<std::string> read_lines(const std::string& path) {
  std::vector<std::string> out;
  std::istringstream in(read_file(path));
  std::string line;
  while (std::getline(in, line)) {
    line = detail::trim(line);
    if (!line.empty()) out.push_back(line);
  }
  return out;
}

// Runs fn(i) for i in [0, n) over `threads` workers; results land by index.
void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, std::max<std::size_t>(1, n));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr err;
  std::mutex mu;
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i; (i = next++) < n;) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(mu);
          if (!err) err = std::current_exception();
          next = n;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (err) std::rethrow_exception(err);
}

template <class T>
int run_parse(const ParseOpts& o, const CLI::App& app) {
  std::vector<std::string> inputs = o.words;
  if (!o.file.empty()) {
    auto lines = read_lines(o.file);
    inputs.insert(inputs.end(), lines.begin(), lines.end());
  }
  if (inputs.empty()) throw DataError("no input: give words as arguments or --file");
  auto model = parser::load_checkpoint<T>(o.model);
  std::vector<std::string> blocks(inputs.size());
  if (model->word_internal()) {
    for (const auto& w : inputs) {
      if (utf8::length(w) < 2) throw DataError("'" + w + "' has fewer than 2 characters; word-internal parsing needs 2 or more");
    }
    // Contiguous chunks, one per worker, each parsed in equal-length batches.
    const std::size_t workers = o.threads ? o.threads : std::max(1u, std::thread::hardware_concurrency());
    const std::size_t chunk = (inputs.size() + workers - 1) / workers;
    parallel_for(workers, workers, [&](std::size_t w) {
      const std::size_t b = std::min(inputs.size(), w * chunk), e = std::min(inputs.size(), b + chunk);
      auto parsed = model->parse_words({inputs.begin() + b, inputs.begin() + e});
      for (std::size_t i = b; i < e; ++i) blocks[i] = serialize_entry(parsed[i - b]);
    });
  } else {
    std::vector<SentenceEntry> sents;
    for (const auto& line : inputs) {
      SentenceEntry s;
      std::istringstream in(line);
      for (std::string w; in >> w;) {
        s.words.push_back(w);
        s.pos_tags.push_back("");
        s.is_punct.push_back(false);
      }
      sents.push_back(std::move(s));
    }
    if (!o.lexicon.empty() || !o.wi_model.empty()) {
      Treebank tb;
      tb.kind = TreebankKind::sentence;
      tb.sentences = sents;
      auto extra = make_lexicon({&tb}, o.lexicon, o.wi_model);
      for (auto& [s, t] : extra.trees) model->lexicon.trees.emplace(s, t);
    }
    const std::size_t workers = o.threads ? o.threads : std::max(1u, std::thread::hardware_concurrency());
    const std::size_t chunk = (sents.size() + workers - 1) / workers;
    parallel_for(workers, workers, [&](std::size_t w) {
      const std::size_t b = std::min(sents.size(), w * chunk), e = std::min(sents.size(), b + chunk);
      std::vector<parser::ParserInput> ins;
      for (std::size_t i = b; i < e; ++i) ins.push_back(model->prepare(sents[i]));
      auto preds = model->predict_many(ins);
      for (std::size_t i = b; i < e; ++i) {
        SentenceEntry& s = sents[i];
        s.heads = preds[i - b].heads;
        for (auto l : preds[i - b].labels) s.labels.push_back(model->vocabs.labels.token(l));
        blocks[i] = serialize_entry(s);
      }
    });
  }
  std::string out;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    if (i) out += '\n';
    out += blocks[i];
  }
  if (o.output.empty()) {
    std::cout << out;
  } else {
    write_file(o.output, out);
    write_file(o.output + ".run.ini", resolved_config(app));
  }
  return 0;
}

// ---------------------------------------------------------------- eval

struct EvalOpts {
  std::string model, test, out, wi_model, lexicon;
  std::string precision = "float";
};

json eval_json(const parser::EvalReport& r, bool word_internal) {
  json labels = json::object();
  auto row = [](const analysis::LabelAccuracy& a) {
    return json{{"total", a.total}, {"labeled", a.labeled_acc()}, {"unlabeled", a.unlabeled_acc()}};
  };
  if (word_internal) {
    // Every label present so the key set never changes.
    for (auto name : kLabelNames) labels[std::string(name)] = row({});
  }
  for (const auto& [name, acc] : r.per_label) labels[name] = row(acc);
  json freq = json::object();
  for (const auto& b : r.frequency) freq[b.name] = {{"tokens", b.tokens}, {"las", b.las()}};
  return {{"uas", r.uas},         {"las", r.las},     {"cm", r.cm},         {"tokens", r.n_tokens},
          {"entries", r.n_entries}, {"per_label", labels}, {"frequency", freq}};
}

template <class T>
int run_eval(const EvalOpts& o, const CLI::App& app) {
  auto model = parser::load_checkpoint<T>(o.model);
  Treebank tb = load_treebank(o.test);
  if (tb.kind != model->config.mode) {
    throw DataError("test file is " + std::string(kind_name(tb.kind)) + " but the model is " +
                    std::string(kind_name(model->config.mode)));
  }
  if (tb.kind == TreebankKind::sentence && (!o.lexicon.empty() || !o.wi_model.empty())) {
    auto extra = make_lexicon({&tb}, o.lexicon, o.wi_model);
    for (auto& [s, t] : extra.trees) model->lexicon.trees.emplace(s, t);
  }
  auto r = parser::evaluate(*model, tb);
  std::cout << "entries " << r.n_entries << "  tokens " << r.n_tokens << "\n";
  print_table(std::cout, {"metric", "value"}, {{"UAS", fmt(r.uas)}, {"LAS", fmt(r.las)}, {"CM", fmt(r.cm)}});
  std::cout << '\n';
  std::vector<std::vector<std::string>> rows;
  for (const auto& [name, acc] : r.per_label) {
    if (acc.total == 0) {
      rows.push_back({name, "0", "-", "-"});
    } else {
      rows.push_back({name, std::to_string(acc.total), fmt(acc.unlabeled_acc()), fmt(acc.labeled_acc())});
    }
  }
  print_table(std::cout, {"label", "count", "UAS", "LAS"}, rows);
  if (!r.frequency.empty()) {
    std::cout << '\n';
    rows.clear();
    for (const auto& b : r.frequency) rows.push_back({b.name, std::to_string(b.tokens), fmt(b.las())});
    print_table(std::cout, {"train freq", "tokens", "LAS"}, rows);
  }
  if (!o.out.empty()) write_report(o.out, eval_json(r, tb.kind == TreebankKind::word_internal), app);
  return 0;
}

// ---------------------------------------------------------------- stats

struct StatsOpts {
  std::string tb, out;
  bool by_pos = false;
};

int run_stats(const StatsOpts& o, const CLI::App& app) {
  Treebank tb = load_treebank(o.tb, TreebankKind::word_internal);
  if (tb.empty()) throw DataError("'" + o.tb + "' has no entries");
  auto dist = analysis::label_distribution(tb, o.by_pos);
  std::vector<std::string> header = {"group", "words"};
  for (auto n : kLabelNames) header.emplace_back(n);
  std::vector<std::vector<std::string>> rows;
  json jd = json::object();
  for (const auto& r : dist.rows) {
    std::vector<std::string> row = {r.group, std::to_string(r.n_words)};
    json jr = {{"words", r.n_words}, {"arcs", r.total}};
    for (std::size_t l = 0; l < kLabelCount; ++l) {
      const Label lab = static_cast<Label>(l);
      row.push_back(fmt(r.rounded(lab), 1));
      jr[std::string(label_name(lab))] = r.pct(lab);
    }
    rows.push_back(std::move(row));
    jd[r.group] = jr;
  }
  print_table(std::cout, header, rows);

  const double avg = analysis::avg_word_length_from_root(dist);
  auto pat = analysis::three_char_stats(tb);
  auto multi = analysis::multi_structure_words(tb);
  std::cout << "\naverage word length (chars) " << fmt(avg, 3) << "\n\n";
  std::vector<std::vector<std::string>> prow;
  json jp = json::object();
  for (std::size_t i = 0; i < analysis::kPatternNames.size(); ++i) {
    prow.push_back({std::string(analysis::kPatternNames[i]), fmt(pat.patterns[i], 1)});
    jp[std::string(analysis::kPatternNames[i])] = pat.patterns[i];
  }
  std::cout << "three-char words " << pat.n_words << "  root at char 1/2/3: " << fmt(pat.root_position[0], 1) << " / "
            << fmt(pat.root_position[1], 1) << " / " << fmt(pat.root_position[2], 1) << "\n";
  print_table(std::cout, {"pattern", "%"}, prow);
  std::cout << "\nwords with several structures " << multi.size() << "\n";
  if (!o.out.empty()) {
    json report = {{"entries", tb.words.size()},
                   {"distribution", jd},
                   {"avg_word_length", avg},
                   {"three_char", {{"words", pat.n_words},
                                   {"root_position", pat.root_position},
                                   {"patterns", jp}}},
                   {"multi_structure", {{"count", multi.size()}, {"words", multi}}}};
    write_report(o.out, report, app);
  }
  return 0;
}

// ---------------------------------------------------------------- agree

struct AgreeOpts {
  std::string a, b, gold, out;
};

int run_agree(const AgreeOpts& o, const CLI::App& app) {
  analysis::AnnotationSet a{o.a, load_treebank(o.a, TreebankKind::word_internal)};
  analysis::AnnotationSet b{o.b, load_treebank(o.b, TreebankKind::word_internal)};
  if (a.tb.empty() || b.tb.empty()) throw DataError("annotation files must not be empty");
  auto c = analysis::pairwise_consistency(a, b);
  std::cout << "words " << c.n_words << "  chars " << c.n_chars << "\n";
  print_table(std::cout, {"consistency", "labeled", "unlabeled"},
              {{"dependency", fmt(c.dep_labeled, 1), fmt(c.dep_unlabeled, 1)},
               {"word", fmt(c.word_labeled, 1), fmt(c.word_unlabeled, 1)}});
  json report = {{"words", c.n_words},           {"chars", c.n_chars},
                 {"dep_labeled", c.dep_labeled}, {"dep_unlabeled", c.dep_unlabeled},
                 {"word_labeled", c.word_labeled}, {"word_unlabeled", c.word_unlabeled}};
  json conf = json::array();
  auto pairs = analysis::label_confusion_pairs(a, b);
  if (!pairs.empty()) {
    std::vector<std::vector<std::string>> rows;
    for (const auto& p : pairs) {
      rows.push_back({std::string(label_name(p.a)) + "/" + std::string(label_name(p.b)), std::to_string(p.count), fmt(p.pct, 1)});
      conf.push_back({{"a", label_name(p.a)}, {"b", label_name(p.b)}, {"count", p.count}, {"pct", p.pct}});
    }
    std::cout << '\n';
    print_table(std::cout, {"same head, labels", "count", "%"}, rows);
  }
  report["confusion"] = conf;
  report["accuracy"] = nullptr;
  if (!o.gold.empty()) {
    auto acc = analysis::annotation_accuracy({a, b}, load_treebank(o.gold, TreebankKind::word_internal));
    std::cout << '\n';
    print_table(std::cout, {"accuracy vs gold", "labeled", "unlabeled"},
                {{"dependency", fmt(acc.overall_labeled, 1), fmt(acc.overall_unlabeled, 1)},
                 {"word", fmt(acc.word_labeled, 1), fmt(acc.word_unlabeled, 1)}});
    report["accuracy"] = {{"dep_labeled", acc.overall_labeled}, {"dep_unlabeled", acc.overall_unlabeled},
                          {"word_labeled", acc.word_labeled}, {"word_unlabeled", acc.word_unlabeled}};
  }
  if (!o.out.empty()) write_report(o.out, report, app);
  return 0;
}

// ---------------------------------------------------------------- split / lexicon / serve

struct SplitOpts {
  std::string in, prefix;
  std::size_t dev = 2500, test = 5000;
  std::uint64_t seed = 1;
};

int run_split(const SplitOpts& o, const CLI::App& app) {
  Treebank tb = load_treebank(o.in);
  auto s = split_dataset(tb, o.seed, o.dev, o.test);
  const std::string ext = tb.kind == TreebankKind::word_internal ? ".wist" : ".dep";
  write_file(o.prefix + ".train" + ext, serialize_treebank(s.train));
  write_file(o.prefix + ".dev" + ext, serialize_treebank(s.dev));
  write_file(o.prefix + ".test" + ext, serialize_treebank(s.test));
  write_file(o.prefix + ".run.ini", resolved_config(app));
  std::cout << "train " << s.train.size() << "  dev " << s.dev.size() << "  test " << s.test.size() << "\n";
  return 0;
}

struct LexiconOpts {
  std::string input, gold, wi_model, out;
};

int run_lexicon(const LexiconOpts& o, const CLI::App& app) {
  Treebank tb = load_treebank(o.input, TreebankKind::sentence);
  auto lex = make_lexicon({&tb}, o.gold, o.wi_model);
  write_file(o.out, lex.export_wist());
  write_file(o.out + ".run.ini", resolved_config(app));
  std::cout << "entries " << lex.trees.size() << "\n";
  return 0;
}

struct ServeOpts {
  std::string dir = "annotation-data", host = "127.0.0.1";
  int port = 8080;
  std::size_t snapshot_every = 1000;
};

annotation::Server* g_server = nullptr;

int run_serve(const ServeOpts& o) {
  annotation::Store store(o.dir, o.snapshot_every);
  annotation::Server server(store);
  if (!server.bind(o.host, o.port)) throw DataError("cannot bind " + o.host + ":" + std::to_string(o.port));
  g_server = &server;
  std::signal(SIGINT, [](int) { g_server->stop(); });
  std::signal(SIGTERM, [](int) { g_server->stop(); });
  std::cerr << "serving " << o.dir << " on http://" << o.host << ":" << o.port << "\n";
  server.run();
  store.snapshot();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Character-level word-internal dependency toolkit"};
  app.set_config("--config", "", "Read option defaults from an INI file ([command] sections of key = value)");
  app.require_subcommand(1);
  app.fallthrough();

  TrainOpts tr;
  auto* train = app.add_subcommand("train", "Train a biaffine parser and write a checkpoint");
  train->add_option("--mode", tr.mode, "word-internal or sentence")->capture_default_str();
  train->add_option("--train", tr.train, "Training treebank")->required()->check(kFile);
  train->add_option("--dev", tr.dev, "Development treebank (model selection; train set when absent)")->check(kFile);
  train->add_option("--test", tr.test, "Test treebank, scored with the best model")->check(kFile);
  train->add_option("--out", tr.out, "Checkpoint path; the config, log and summary are written next to it")->required();
  train->add_option("--log", tr.log, "Per-epoch JSONL log (default <out>.log.jsonl)");
  train->add_option("--emb", tr.emb, "Pretrained vectors for chars (word-internal) or words (sentence)")->check(kFile);
  train->add_option("--external", tr.external, "Per-character contextual vectors keyed word<US>position")->check(kFile);
  train->add_option("--seed", tr.seed, "Seed for initialisation, shuffling and dropout")->capture_default_str();
  train->add_option("--epochs", tr.epochs, "Maximum epochs")->capture_default_str();
  train->add_option("--patience", tr.patience, "Stop after this many epochs without dev LAS gain")->capture_default_str();
  train->add_option("--batch-tokens", tr.batch_tokens, "Tokens per mini-batch")->capture_default_str();
  train->add_option("--lr", tr.lr, "Adam learning rate")->capture_default_str();
  train->add_option("--clip", tr.clip, "Gradient norm clip (0 disables)")->capture_default_str();
  train->add_option("--dropout", tr.dropout, "Embedding, LSTM and MLP dropout")->capture_default_str();
  train->add_option("--char-emb-dim", tr.char_emb_dim, "Char embedding width")->capture_default_str();
  train->add_option("--word-emb-dim", tr.word_emb_dim, "Word embedding width (sentence mode)")->capture_default_str();
  train->add_option("--pos-emb-dim", tr.pos_emb_dim, "POS embedding width with --gold-pos")->capture_default_str();
  train->add_option("--lstm-layers", tr.lstm_layers, "BiLSTM layers")->capture_default_str();
  train->add_option("--lstm-hidden", tr.lstm_hidden, "BiLSTM hidden size per direction")->capture_default_str();
  train->add_option("--arc-mlp", tr.arc_mlp, "Arc MLP width")->capture_default_str();
  train->add_option("--label-mlp", tr.label_mlp, "Label MLP width")->capture_default_str();
  train->add_option("--min-word-freq", tr.min_word_freq, "Sentence mode: rarer training words map to <unk>")->capture_default_str();
  train->add_flag("--gold-pos", tr.gold_pos, "Sentence mode: add gold POS embeddings");
  train->add_option("--wordrep", tr.wordrep, "Sentence mode word representation: none, charlstm, labelcharlstm, labelgcn")
      ->capture_default_str();
  train->add_option("--wordrep-dim", tr.wordrep_dim, "Word representation width")->capture_default_str();
  train->add_option("--wordrep-char-dim", tr.wordrep_char_dim, "Char embedding width inside the word encoder")->capture_default_str();
  train->add_option("--wordrep-label-dim", tr.wordrep_label_dim, "Arc-label embedding width")->capture_default_str();
  train->add_option("--gcn-layers", tr.gcn_layers, "LabelGCN layers")->capture_default_str();
  train->add_flag("--no-labels", tr.no_labels, "Zero the label channel of the word encoder");
  train->add_option("--lexicon", tr.lexicon, "Gold word-internal trees (.wist) for the word encoder")->check(kFile);
  train->add_option("--wi-model", tr.wi_model, "Word-internal checkpoint that parses words missing from --lexicon")
      ->check(kFile);
  train->add_option("--precision", tr.precision, "float or double")->capture_default_str();
  train->add_flag("--quiet", tr.quiet, "No per-epoch progress on stderr");

  ParseOpts pa;
  auto* parse = app.add_subcommand("parse", "Parse words (or sentences with a sentence model) to standard output");
  parse->add_option("--model", pa.model, "Checkpoint")->required()->check(kFile);
  parse->add_option("words", pa.words, "Words to parse");
  parse->add_option("--file", pa.file, "One word (or space-separated sentence) per line")->check(kFile);
  parse->add_option("--output", pa.output, "Write blocks here instead of standard output");
  parse->add_option("--threads", pa.threads, "Inference workers (0 = all cores); output order is preserved")->capture_default_str();
  parse->add_option("--lexicon", pa.lexicon, "Extra gold word-internal trees for sentence models")->check(kFile);
  parse->add_option("--wi-model", pa.wi_model, "Word-internal checkpoint for unseen words (sentence models)")
      ->check(kFile);
  parse->add_option("--precision", pa.precision, "float or double")->capture_default_str();

  EvalOpts ev;
  auto* eval = app.add_subcommand("eval", "Score a checkpoint on a treebank");
  eval->add_option("--model", ev.model, "Checkpoint")->required()->check(kFile);
  eval->add_option("--test", ev.test, "Gold treebank")->required()->check(kFile);
  eval->add_option("--out", ev.out, "JSON report");
  eval->add_option("--lexicon", ev.lexicon, "Extra gold word-internal trees for sentence models")->check(kFile);
  eval->add_option("--wi-model", ev.wi_model, "Word-internal checkpoint for unseen words (sentence models)")
      ->check(kFile);
  eval->add_option("--precision", ev.precision, "float or double")->capture_default_str();

  StatsOpts st;
  auto* stats = app.add_subcommand("stats", "Label distribution, three-char patterns and multi-structure words");
  stats->add_option("--tb", st.tb, "Word-internal treebank")->required()->check(kFile);
  stats->add_flag("--by-pos", st.by_pos, "One row per POS group");
  stats->add_option("--out", st.out, "JSON report");

  AgreeOpts ag;
  auto* agree = app.add_subcommand("agree", "Consistency between two annotation files");
  agree->add_option("--a", ag.a, "First annotator's .wist")->required()->check(kFile);
  agree->add_option("--b", ag.b, "Second annotator's .wist")->required()->check(kFile);
  agree->add_option("--gold", ag.gold, "Final answers; adds annotation accuracy")->check(kFile);
  agree->add_option("--out", ag.out, "JSON report");

  SplitOpts sp;
  auto* split = app.add_subcommand("split", "Seeded train/dev/test split");
  split->add_option("--in", sp.in, "Treebank")->required()->check(kFile);
  split->add_option("--prefix", sp.prefix, "Output prefix: <prefix>.train.wist etc.")->required();
  split->add_option("--dev", sp.dev, "Dev entries")->capture_default_str();
  split->add_option("--test", sp.test, "Test entries")->capture_default_str();
  split->add_option("--seed", sp.seed, "Shuffle seed")->capture_default_str();

  LexiconOpts lx;
  auto* lexicon = app.add_subcommand("lexicon", "Word-internal trees for every word of a sentence treebank");
  lexicon->add_option("--in", lx.input, "Sentence treebank")->required()->check(kFile);
  lexicon->add_option("--gold", lx.gold, "Gold word-internal trees")->check(kFile);
  lexicon->add_option("--wi-model", lx.wi_model, "Word-internal checkpoint for the rest")->check(kFile);
  lexicon->add_option("--out", lx.out, "Output .wist")->required();

  ServeOpts sv;
  auto* serve = app.add_subcommand("serve", "Run the annotation service");
  serve->add_option("--dir", sv.dir, "State directory (event log and snapshot)")->capture_default_str();
  serve->add_option("--host", sv.host, "Bind address")->capture_default_str();
  serve->add_option("--port", sv.port, "Port")->capture_default_str();
  serve->add_option("--snapshot-every", sv.snapshot_every, "Snapshot after this many events (0 = only on exit)")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (*train) {
      if (precision_check(tr.precision) == "double") return run_train<double>(tr, *train);
      return run_train<float>(tr, *train);
    }
    if (*parse) {
      if (precision_check(pa.precision) == "double") return run_parse<double>(pa, *parse);
      return run_parse<float>(pa, *parse);
    }
    if (*eval) {
      if (precision_check(ev.precision) == "double") return run_eval<double>(ev, *eval);
      return run_eval<float>(ev, *eval);
    }
    if (*stats) return run_stats(st, *stats);
    if (*agree) return run_agree(ag, *agree);
    if (*split) return run_split(sp, *split);
    if (*lexicon) return run_lexicon(lx, *lexicon);
    if (*serve) return run_serve(sv);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
