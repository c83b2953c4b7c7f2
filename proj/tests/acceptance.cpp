// Acceptance runner: one PASS / FAIL / SKIP line per criterion, exit status 1
// when anything fails. Corpus criteria run only when their data is present:
//   WIST_DATA  word-internal treebank (.wist)
//   CTB5_DIR   directory with train.dep, dev.dep, test.dep
//   WIST_ACCEPT_WORKDIR  scratch directory for corpus runs (default: temp dir)

#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "fixture.hpp"
#include "gradcases.hpp"
#include "models.hpp"
#include "nlohmann/json.hpp"
#include "wist/analysis.hpp"
#include "wordrep_props.hpp"
#include "workflow_model.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace wist;

namespace {

enum class Verdict { pass, fail, skip };

struct Outcome {
  Verdict verdict;
  std::string detail;
};

Outcome pass(std::string d) { return {Verdict::pass, std::move(d)}; }
Outcome fail(std::string d) { return {Verdict::fail, std::move(d)}; }
Outcome skip(std::string d) { return {Verdict::skip, std::move(d)}; }
Outcome check(bool ok, std::string d) { return {ok ? Verdict::pass : Verdict::fail, std::move(d)}; }

std::string num(double v, int prec = 2) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(prec) << v;
  return s.str();
}

std::string sci(double v) {
  std::ostringstream s;
  s << std::scientific << std::setprecision(2) << v;
  return s.str();
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ------------------------------------------------------------ decoder

parser::ScoreMatrix random_chart(int n, Rng& rng) {
  parser::ScoreMatrix s(static_cast<std::size_t>(n + 1), static_cast<std::size_t>(n + 1));
  for (auto& v : s.data) v = rng.normal();
  return s;
}

double tree_score(const parser::ScoreMatrix& s, const std::vector<int>& heads) {
  double total = 0;
  for (std::size_t d = 1; d <= heads.size(); ++d) total += s(static_cast<std::size_t>(heads[d - 1]), d);
  return total;
}

Outcome decoder_optimality() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(2024);
  std::size_t charts = 0;
  for (int n = 2; n <= 5; ++n) {
    const auto trees = fixture::enumerate_projective_trees(n);
    for (int trial = 0; trial < 1000; ++trial, ++charts) {
      const auto chart = random_chart(n, rng);
      double best = -1e300;
      for (const auto& t : trees) best = std::max(best, tree_score(chart, t));
      const auto heads = parser::eisner_decode(chart);
      if (tree_score(chart, heads) != best) {
        return fail("n=" + std::to_string(n) + " trial " + std::to_string(trial) + " below the oracle optimum");
      }
    }
  }
  const double secs = seconds_since(t0);
  return check(secs < 30.0, std::to_string(charts) + " charts equal the exhaustive optimum in " + num(secs) + " s");
}

Outcome decoder_legality() {
  Rng rng(77);
  for (int trial = 0; trial < 10000; ++trial) {
    const int n = 1 + static_cast<int>(rng.below(32));
    DepTree t;
    t.heads = parser::eisner_decode(random_chart(n, rng));
    for (int h : t.heads) t.labels.push_back(h == 0 ? Label::root : Label::att);
    const auto report = validate_tree(t);
    if (!report.ok()) return fail("trial " + std::to_string(trial) + ": " + report.summary());
  }
  return pass("10000 charts, n <= 32, all single-root projective trees");
}

// ------------------------------------------------------------ gradients

Outcome gradient_fidelity() {
  const auto full = fixture::full_model_grad_check();
  double worst = 0;
  std::string where;
  for (const auto& name : fixture::grad_case_names()) {
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
      auto c = fixture::make_grad_case(name, seed);
      const auto r = ad::grad_check(c.loss, c.raw());
      if (r.max_rel_error > worst) {
        worst = r.max_rel_error;
        where = name + " seed " + std::to_string(seed);
      }
    }
  }
  const std::string d = "full model " + sci(full.max_tensor_rel_error) + " per tensor (< 1e-4, worst " +
                        full.worst_tensor + ", per coordinate " + sci(full.max_rel_error) + "); worst primitive " + sci(worst) + " at " +
                        where + " (< 1e-6) over " + std::to_string(fixture::grad_case_names().size()) + " primitives";
  return check(full.max_tensor_rel_error < 1e-4 && worst < 1e-6, d);
}

// ------------------------------------------------------------ training

Outcome overfit() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto r = fixture::overfit(fixture::synthetic_treebank(50, 42), 200);
  const double secs = seconds_since(t0);
  return check(r.train_las >= 99.0 && secs < 120.0,
               "50 words: train LAS " + num(r.train_las) + " after " + std::to_string(r.epochs) + " epochs in " +
                   num(secs, 1) + " s");
}

// ------------------------------------------------------------ metrics

Outcome metric_oracle() {
  std::vector<WordEntry> gold = {make_word("常常", {0, 1}, {Label::root, Label::repet}),
                                 make_word("发展", {0, 1}, {Label::root, Label::coo})};
  std::vector<DepTree> pred = {{{0, 1}, {Label::root, Label::repet}}, {{0, 1}, {Label::root, Label::obj}}};
  const auto r = parser::evaluate_words(gold, pred);
  if (r.uas != 100.0 || r.las != 75.0 || r.cm != 50.0) {
    return fail("hand example gave " + num(r.uas) + "/" + num(r.las) + "/" + num(r.cm));
  }
  Rng rng(9);
  for (int trial = 0; trial < 50; ++trial) {
    auto tb = fixture::synthetic_treebank(40, rng.next(), 2, 6);
    std::vector<DepTree> same;
    for (const auto& e : tb.words) same.push_back(e.tree);
    const auto g = parser::evaluate_words(tb.words, same);
    if (g.uas != 100.0 || g.las != 100.0 || g.cm != 100.0) return fail("gold vs gold below 100 on trial " + std::to_string(trial));
  }
  return pass("hand example 100/75/50; gold vs gold 100/100/100 on 50 random treebanks");
}

Outcome agreement_oracle() {
  auto set = [](std::string who, std::vector<WordEntry> ws) {
    analysis::AnnotationSet s;
    s.annotator = std::move(who);
    s.tb.words = std::move(ws);
    return s;
  };
  const auto a = set("A", {make_word("常常", {0, 1}, {Label::root, Label::repet}),
                           make_word("发展", {0, 1}, {Label::root, Label::coo})});
  const auto b = set("B", {make_word("常常", {0, 1}, {Label::root, Label::repet}),
                           make_word("发展", {0, 1}, {Label::root, Label::obj})});
  const auto r = analysis::pairwise_consistency(a, b);
  const std::string d = num(r.dep_labeled, 1) + " / " + num(r.dep_unlabeled, 1) + " / " + num(r.word_labeled, 1) + " / " +
                        num(r.word_unlabeled, 1);
  return check(r.dep_labeled == 75.0 && r.dep_unlabeled == 100.0 && r.word_labeled == 50.0 && r.word_unlabeled == 100.0,
               d + " (labeled-dep / unlabeled-dep / labeled-word / unlabeled-word)");
}

// ------------------------------------------------------------ format

Outcome format_round_trip() {
  Rng rng(31);
  Treebank tb;
  for (int i = 0; i < 1000; ++i) {
    auto e = fixture::random_word(2 + static_cast<int>(rng.below(7)), rng);
    e.sense_id = i + 1;
    if (rng.below(3) == 0) e.pos_tags = {"Noun"};
    if (rng.below(4) == 0) e.meta.push_back({"source", "s" + std::to_string(i)});
    tb.words.push_back(std::move(e));
  }
  const std::string text = serialize_treebank(tb);
  const auto back = parse_treebank(text);
  if (back.words != tb.words) return fail("parsed entries differ from the originals");
  if (serialize_treebank(back) != text) return fail("second serialization differs");
  return pass("1000 random legal entries: parse(serialize(x)) == x, bytes stable");
}

// ------------------------------------------------------------ workflow

Outcome workflow_model() {
  const auto r = fixture::check_workflow_model();
  if (!r.ok()) return fail(r.failure);
  const std::string d = std::to_string(r.states) + " states, " + std::to_string(r.steps) + " transitions, " +
                        std::to_string(r.rejected) + " refused actions; terminal states all final (direct " +
                        std::to_string(r.direct_final) + ", corrected " + std::to_string(r.corrected_final) +
                        ", senior " + std::to_string(r.resolved_final) + ")";
  return check(r.direct_final > 0, d);
}

// ------------------------------------------------------------ representations

Outcome representation_properties() {
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    if (!fixture::single_label_collapse(seed)) return fail("single-label collapse broken at seed " + std::to_string(seed));
  }
  double worst = 0;
  for (std::uint64_t seed = 1; seed <= 50; ++seed) worst = std::max(worst, fixture::gcn_permutation_deviation(seed));
  if (worst >= 1e-6) return fail("GCN permutation deviation " + sci(worst));
  int differ = 0;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) differ += fixture::star_chain_differ(seed);
  return check(differ >= 95, "collapse exact on 50 seeds; permutation deviation " + sci(worst) + "; star vs chain differ on " +
                                 std::to_string(differ) + "/100 seeds");
}

// ------------------------------------------------------------ corpus criteria

int run_cli(const std::string& args, std::string* out = nullptr) {
  const std::string cmd = std::string(WIST_CLI_PATH) + " " + args + " 2>&1";
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return -1;
  std::string text;
  char buf[4096];
  for (std::size_t n; (n = fread(buf, 1, sizeof(buf), p)) > 0;) text.append(buf, n);
  const int status = pclose(p);
  if (out) *out = text;
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string quote(const fs::path& p) { return "'" + p.string() + "'"; }

fs::path workdir(const std::string& name) {
  const char* base = std::getenv("WIST_ACCEPT_WORKDIR");
  fs::path d = base ? fs::path(base) : fs::temp_directory_path() / ("wist_accept_" + std::to_string(getpid()));
  d /= name;
  fs::create_directories(d);
  return d;
}

json read_json(const fs::path& p) { return json::parse(read_file(p.string())); }

Outcome wist_corpus() {
  const char* data = std::getenv("WIST_DATA");
  if (!data || !fs::exists(data)) return skip("set WIST_DATA to the word-internal treebank");
  const Treebank tb = load_treebank(data, TreebankKind::word_internal);
  const auto& overall = analysis::label_distribution(tb, false).overall();
  const double root = overall.rounded(Label::root), att = overall.rounded(Label::att), coo = overall.rounded(Label::coo);
  const bool stats_ok = std::abs(root - 39.2) <= 0.1 + 1e-9 && std::abs(att - 29.1) <= 0.1 + 1e-9 &&
                        std::abs(coo - 10.2) <= 0.1 + 1e-9;

  const fs::path dir = workdir("wist");
  std::string log;
  if (run_cli("split --in " + quote(data) + " --prefix " + quote(dir / "wist") + " --dev 2500 --test 5000 --seed 1", &log) != 0) {
    return fail("split failed: " + log);
  }
  const std::string train = "train --train " + quote(dir / "wist.train.wist") + " --dev " + quote(dir / "wist.dev.wist") +
                            " --test " + quote(dir / "wist.test.wist") + " --out " + quote(dir / "wist.ckpt") +
                            " --seed 1 --quiet";
  if (run_cli(train, &log) != 0) return fail("training failed: " + log);
  const auto summary = read_json(dir / "wist.ckpt.summary.json");
  const double uas = summary["test"]["uas"], las = summary["test"]["las"];
  const bool parse_ok = std::abs(uas - 80.63) <= 1.5 && std::abs(las - 75.58) <= 1.5;
  return check(stats_ok && parse_ok, "test UAS " + num(uas) + " LAS " + num(las) + " (80.63 / 75.58 +- 1.5); root " +
                                         num(root, 1) + " att " + num(att, 1) + " coo " + num(coo, 1) +
                                         " (39.2 / 29.1 / 10.2 +- 0.1)");
}

Outcome ctb5_corpus() {
  const char* base = std::getenv("CTB5_DIR");
  if (!base || !fs::exists(fs::path(base) / "train.dep")) return skip("set CTB5_DIR to a directory with train/dev/test.dep");
  const fs::path ctb(base);
  const fs::path dir = workdir("ctb5");
  std::string log;
  // Word-internal trees: gold WIST entries where available, the rest parsed by
  // a word-internal model trained on WIST.
  std::string lex_args;
  if (const char* wist = std::getenv("WIST_DATA"); wist && fs::exists(wist)) {
    lex_args = " --lexicon " + quote(wist);
    const fs::path wi = workdir("wist") / "wist.ckpt";
    if (fs::exists(wi)) lex_args += " --wi-model " + quote(wi);
  }
  std::vector<double> gains;
  std::string d;
  for (int seed = 1; seed <= 3; ++seed) {
    double las[2] = {0, 0};
    const char* modes[2] = {"charlstm", "labelgcn"};
    for (int m = 0; m < 2; ++m) {
      const fs::path out = dir / (std::string(modes[m]) + "." + std::to_string(seed) + ".ckpt");
      std::string cmd = "train --mode sentence --train " + quote(ctb / "train.dep") + " --dev " + quote(ctb / "dev.dep") +
                        " --test " + quote(ctb / "test.dep") + " --out " + quote(out) + " --wordrep " + modes[m] +
                        " --seed " + std::to_string(seed) + " --quiet";
      if (m == 1) cmd += lex_args;
      if (run_cli(cmd, &log) != 0) return fail(std::string(modes[m]) + " seed " + std::to_string(seed) + " failed: " + log);
      las[m] = read_json(out.string() + ".summary.json")["test"]["las"];
    }
    gains.push_back(las[1] - las[0]);
    d += (seed > 1 ? ", " : "") + std::string("seed ") + std::to_string(seed) + " " + num(las[1]) + " - " + num(las[0]);
  }
  const bool ok = std::all_of(gains.begin(), gains.end(), [](double g) { return g > 0; });
  return check(ok, "LabelGCN - CharLSTM LAS: " + d);
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"decoder optimality", decoder_optimality},
      {"decoder legality", decoder_legality},
      {"gradient fidelity", gradient_fidelity},
      {"overfit sanity", overfit},
      {"metric oracle", metric_oracle},
      {"agreement oracle", agreement_oracle},
      {"format round-trip", format_round_trip},
      {"workflow model check", workflow_model},
      {"representation properties", representation_properties},
      {"WIST corpus", wist_corpus},
      {"CTB5 corpus", ctb5_corpus},
  };
  int failures = 0;
  for (const auto& [name, run] : criteria) {
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = fail(std::string("exception: ") + e.what());
    }
    const char* tag = o.verdict == Verdict::pass ? "PASS" : o.verdict == Verdict::fail ? "FAIL" : "SKIP";
    failures += o.verdict == Verdict::fail;
    std::cout << tag << "  " << name << ": " << o.detail << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
