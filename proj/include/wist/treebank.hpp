#pragma once

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "wist/error.hpp"
#include "wist/random.hpp"
#include "wist/tree.hpp"
#include "wist/utf8.hpp"

namespace wist {

// A multi-character word with its word-internal tree.
struct WordEntry {
  std::vector<std::string> chars;
  DepTree tree;
  std::vector<std::string> pos_tags;
  int sense_id = 1;
  // Metadata lines other than pos/sense, preserved in file order.
  std::vector<std::pair<std::string, std::string>> meta;

  std::string surface() const { return utf8::join(chars); }
  std::size_t size() const { return chars.size(); }
  bool operator==(const WordEntry&) const = default;
};

// A sentence-level dependency tree over words. Labels are an open set.
struct SentenceEntry {
  std::vector<std::string> words;
  std::vector<int> heads;
  std::vector<std::string> labels;
  std::vector<std::string> pos_tags;  // empty strings when the column is absent
  std::vector<bool> is_punct;
  std::vector<std::pair<std::string, std::string>> meta;

  std::size_t size() const { return words.size(); }
  bool operator==(const SentenceEntry&) const = default;
};

enum class TreebankKind { word_internal, sentence };

inline std::string_view kind_name(TreebankKind k) {
  return k == TreebankKind::word_internal ? "word-internal" : "sentence";
}

inline TreebankKind parse_kind(std::string_view s) {
  if (s == "word-internal") return TreebankKind::word_internal;
  if (s == "sentence") return TreebankKind::sentence;
  throw DataError("unknown treebank kind '" + std::string(s) + "'");
}

struct Treebank {
  TreebankKind kind = TreebankKind::word_internal;
  std::vector<WordEntry> words;
  std::vector<SentenceEntry> sentences;
  // Indices of entries that loaded fine but are non-projective.
  std::vector<std::size_t> non_projective;

  std::size_t size() const { return kind == TreebankKind::word_internal ? words.size() : sentences.size(); }
  bool empty() const { return size() == 0; }
};

// Punctuation rule for sentence files without a POS column.
struct PunctRule {
  std::set<std::string> pos_tags{"PU", "PUNCT"};
  std::string chars =
      "!\"#$%&'()*+,-./:;<=>?@[\\]^_`{|}~"
      "，。、；：？！“”‘’（）《》〈〉【】—…·「」『』～";

  bool is_punct(const std::string& word, const std::string& pos) const {
    if (!pos.empty()) return pos_tags.count(pos) > 0;
    const auto cs = utf8::split_chars(chars);
    const std::set<std::string> set(cs.begin(), cs.end());
    for (const auto& c : utf8::split_chars(word)) {
      if (!set.count(c)) return false;
    }
    return !word.empty();
  }
};

namespace detail {

inline std::vector<std::string> split_tabs(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find('\t', start);
    out.emplace_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline std::optional<int> to_int(std::string_view s) {
  int v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) return std::nullopt;
  return v;
}

[[noreturn]] inline void fail_at(std::size_t line, std::size_t column, const std::string& what) {
  throw DataError("line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + what);
}

struct RawRow {
  std::size_t line;
  std::vector<std::string> cols;
};

struct RawBlock {
  std::size_t first_line = 0;
  std::vector<std::pair<std::string, std::string>> meta;
  std::vector<std::size_t> meta_lines;
  std::vector<RawRow> rows;
};

inline std::pair<std::string, std::string> parse_meta(std::string_view line) {
  std::string body = trim(line.substr(1));
  auto eq = body.find('=');
  if (eq == std::string::npos) return {body, ""};
  return {trim(std::string_view(body).substr(0, eq)), trim(std::string_view(body).substr(eq + 1))};
}

inline std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace detail

// Parses a `.wist` / `.dep` document. `kind` overrides detection; otherwise a
// leading `# kind = ...` header decides, defaulting to word-internal.
inline Treebank parse_treebank(std::string_view text, std::optional<TreebankKind> kind = std::nullopt,
                               const PunctRule& punct = {}) {
  using namespace detail;
  std::vector<RawBlock> blocks;
  std::optional<TreebankKind> header_kind;
  RawBlock cur;
  bool in_block = false;
  bool seen_content = false;

  std::size_t line_no = 0;
  std::size_t pos = 0;
  auto flush = [&] {
    if (in_block) {
      if (cur.rows.empty()) fail_at(cur.first_line, 1, "metadata block without token rows");
      blocks.push_back(std::move(cur));
    }
    cur = RawBlock{};
    in_block = false;
  };
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (trim(line).empty()) {
      flush();
    } else if (line.front() == '#') {
      auto [key, value] = parse_meta(line);
      if (!seen_content && !in_block && key == "kind") {
        header_kind = parse_kind(value);
      } else {
        if (!in_block) cur.first_line = line_no;
        if (!cur.rows.empty()) fail_at(line_no, 1, "metadata line after token rows");
        in_block = true;
        cur.meta.emplace_back(key, value);
        cur.meta_lines.push_back(line_no);
      }
      seen_content = true;
    } else {
      if (!in_block) cur.first_line = line_no;
      in_block = true;
      seen_content = true;
      cur.rows.push_back({line_no, split_tabs(line)});
    }
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }
  flush();

  Treebank tb;
  if (kind && header_kind && *kind != *header_kind) {
    throw DataError("file declares kind " + std::string(kind_name(*header_kind)) + " but " +
                    std::string(kind_name(*kind)) + " was requested");
  }
  tb.kind = kind ? *kind : header_kind.value_or(TreebankKind::word_internal);

  std::set<std::pair<std::string, int>> seen;
  for (auto& b : blocks) {
    const int n = static_cast<int>(b.rows.size());
    std::vector<int> heads(n);
    std::vector<std::string> tokens(n), labels(n), pos_col(n);
    for (int i = 0; i < n; ++i) {
      const auto& row = b.rows[i];
      const std::size_t ncols = row.cols.size();
      const bool ok_cols = tb.kind == TreebankKind::word_internal ? ncols == 4 : (ncols == 4 || ncols == 5);
      if (!ok_cols) {
        fail_at(row.line, 1, "expected " + std::string(tb.kind == TreebankKind::word_internal ? "4" : "4 or 5") +
                                 " tab-separated columns, found " + std::to_string(ncols));
      }
      auto idx = to_int(row.cols[0]);
      if (!idx || *idx != i + 1) fail_at(row.line, 1, "expected index " + std::to_string(i + 1));
      if (row.cols[1].empty()) fail_at(row.line, 2, "empty token");
      tokens[i] = row.cols[1];
      auto h = to_int(row.cols[2]);
      if (!h) fail_at(row.line, 3, "head '" + row.cols[2] + "' is not an integer");
      if (*h < 0 || *h > n) {
        fail_at(row.line, 3, "head index " + std::to_string(*h) + " out of range [0," + std::to_string(n) + "]");
      }
      heads[i] = *h;
      labels[i] = row.cols[3];
      if (tb.kind == TreebankKind::word_internal && !try_parse_label(labels[i])) {
        fail_at(row.line, 4, "unknown label '" + labels[i] + "'");
      }
      if (ncols == 5) pos_col[i] = row.cols[4];
    }

    if (tb.kind == TreebankKind::word_internal) {
      WordEntry e;
      for (int i = 0; i < n; ++i) {
        if (utf8::length(tokens[i]) != 1) fail_at(b.rows[i].line, 2, "expected a single character");
        e.chars.push_back(tokens[i]);
      }
      e.tree.heads = heads;
      for (const auto& l : labels) e.tree.labels.push_back(parse_label(l));
      for (std::size_t m = 0; m < b.meta.size(); ++m) {
        const auto& [key, value] = b.meta[m];
        if (key == "sense") {
          auto s = to_int(value);
          if (!s || *s < 1) fail_at(b.meta_lines[m], 1, "sense must be a positive integer");
          e.sense_id = *s;
        } else if (key == "pos") {
          e.pos_tags = split_commas(value);
        } else {
          e.meta.emplace_back(key, value);
        }
      }
      if (e.size() < 2) fail_at(b.first_line, 1, "word-internal entries need at least 2 characters");
      auto report = validate_tree(e.tree);
      if (report.illegal()) fail_at(b.rows.front().line, 3, "illegal tree for '" + e.surface() + "': " + report.summary());
      if (!seen.insert({e.surface(), e.sense_id}).second) {
        fail_at(b.first_line, 1, "duplicate entry '" + e.surface() + "' sense " + std::to_string(e.sense_id));
      }
      if (report.has(ViolationKind::non_projective)) tb.non_projective.push_back(tb.words.size());
      tb.words.push_back(std::move(e));
    } else {
      SentenceEntry e;
      e.words = tokens;
      e.heads = heads;
      e.labels = labels;
      e.pos_tags = pos_col;
      e.meta = b.meta;
      for (int i = 0; i < n; ++i) e.is_punct.push_back(punct.is_punct(tokens[i], pos_col[i]));
      auto report = validate_heads(e.heads);
      if (report.illegal()) fail_at(b.rows.front().line, 3, "illegal tree: " + report.summary());
      if (report.has(ViolationKind::non_projective)) tb.non_projective.push_back(tb.sentences.size());
      tb.sentences.push_back(std::move(e));
    }
  }
  return tb;
}

inline std::string serialize_entry(const WordEntry& e) {
  std::string out;
  if (e.sense_id != 1) out += "# sense = " + std::to_string(e.sense_id) + "\n";
  if (!e.pos_tags.empty()) {
    out += "# pos = ";
    for (std::size_t i = 0; i < e.pos_tags.size(); ++i) {
      if (i) out += ',';
      out += e.pos_tags[i];
    }
    out += '\n';
  }
  for (const auto& [k, v] : e.meta) out += "# " + k + " = " + v + "\n";
  for (std::size_t i = 0; i < e.size(); ++i) {
    out += std::to_string(i + 1) + '\t' + e.chars[i] + '\t' + std::to_string(e.tree.heads[i]) + '\t' +
           std::string(label_name(e.tree.labels[i])) + '\n';
  }
  return out;
}

inline std::string serialize_entry(const SentenceEntry& e) {
  std::string out;
  for (const auto& [k, v] : e.meta) out += "# " + k + " = " + v + "\n";
  const bool with_pos = std::any_of(e.pos_tags.begin(), e.pos_tags.end(), [](const auto& p) { return !p.empty(); });
  for (std::size_t i = 0; i < e.size(); ++i) {
    out += std::to_string(i + 1) + '\t' + e.words[i] + '\t' + std::to_string(e.heads[i]) + '\t' + e.labels[i];
    if (with_pos) out += '\t' + e.pos_tags[i];
    out += '\n';
  }
  return out;
}

// Entries separated by single blank lines. Sentence files carry a kind header.
inline std::string serialize_treebank(const Treebank& tb) {
  std::string out;
  if (tb.kind == TreebankKind::sentence) out += "# kind = sentence\n\n";
  for (std::size_t i = 0; i < tb.size(); ++i) {
    if (i) out += '\n';
    out += tb.kind == TreebankKind::word_internal ? serialize_entry(tb.words[i]) : serialize_entry(tb.sentences[i]);
  }
  return out;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path + "'");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
}

inline Treebank load_treebank(const std::string& path, std::optional<TreebankKind> kind = std::nullopt,
                              const PunctRule& punct = {}) {
  if (!kind) {
    if (path.size() >= 4 && path.substr(path.size() - 4) == ".dep") kind = TreebankKind::sentence;
  }
  try {
    return parse_treebank(read_file(path), kind, punct);
  } catch (const DataError& e) {
    throw DataError(path + ": " + e.what());
  }
}

// Builds an entry from a head array and labels; throws when the tree is illegal.
inline WordEntry make_word(std::string_view surface, std::vector<int> heads, std::vector<Label> labels,
                           int sense_id = 1) {
  WordEntry e;
  e.chars = utf8::split_chars(surface);
  e.tree.heads = std::move(heads);
  e.tree.labels = std::move(labels);
  e.sense_id = sense_id;
  if (e.chars.size() != e.tree.size()) throw DataError("tree size does not match '" + std::string(surface) + "'");
  auto report = validate_tree(e.tree);
  if (report.illegal()) throw DataError("illegal tree for '" + std::string(surface) + "': " + report.summary());
  return e;
}

struct DatasetSplit {
  Treebank train, dev, test;
};

// Seeded shuffle, then the first dev_n go to dev and the next test_n to test.
// Each part keeps the original file order.
inline DatasetSplit split_dataset(const Treebank& tb, std::uint64_t seed, std::size_t dev_n, std::size_t test_n) {
  const std::size_t total = tb.size();
  if (dev_n + test_n >= total) {
    throw DataError("split of " + std::to_string(dev_n) + "+" + std::to_string(test_n) + " leaves no training data out of " +
                    std::to_string(total));
  }
  std::vector<std::size_t> order(total);
  for (std::size_t i = 0; i < total; ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(order);
  std::vector<int> part(total, 0);
  for (std::size_t i = 0; i < dev_n; ++i) part[order[i]] = 1;
  for (std::size_t i = dev_n; i < dev_n + test_n; ++i) part[order[i]] = 2;

  DatasetSplit s;
  for (Treebank* t : {&s.train, &s.dev, &s.test}) t->kind = tb.kind;
  for (std::size_t i = 0; i < total; ++i) {
    Treebank& dst = part[i] == 0 ? s.train : part[i] == 1 ? s.dev : s.test;
    if (tb.kind == TreebankKind::word_internal) {
      dst.words.push_back(tb.words[i]);
    } else {
      dst.sentences.push_back(tb.sentences[i]);
    }
  }
  return s;
}

}  // namespace wist
