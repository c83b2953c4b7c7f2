#pragma once

#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "wist/error.hpp"
#include "wist/treebank.hpp"

namespace wist {

// Token vectors in the `token v1 ... vd` text format.
struct EmbeddingTable {
  std::size_t dim = 0;
  std::vector<std::string> tokens;
  std::vector<double> values;  // tokens.size() * dim, row-major
  std::unordered_map<std::string, std::size_t> index;

  const double* find(const std::string& token) const {
    auto it = index.find(token);
    return it == index.end() ? nullptr : values.data() + it->second * dim;
  }
};

// First line may be a `count dim` header. Duplicate tokens keep the first row.
inline EmbeddingTable parse_embeddings(const std::string& text) {
  EmbeddingTable t;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ls(line);
    std::vector<std::string> fields;
    std::string f;
    while (ls >> f) fields.push_back(f);
    if (fields.empty()) continue;
    if (line_no == 1 && fields.size() == 2 && detail::to_int(fields[0]) && detail::to_int(fields[1])) continue;
    const std::size_t d = fields.size() - 1;
    if (d == 0) throw DataError("embedding line " + std::to_string(line_no) + ": no values");
    if (t.dim == 0) t.dim = d;
    if (d != t.dim) {
      throw DataError("embedding line " + std::to_string(line_no) + ": expected " + std::to_string(t.dim) +
                      " values, found " + std::to_string(d));
    }
    if (t.index.count(fields[0])) continue;
    t.index.emplace(fields[0], t.tokens.size());
    t.tokens.push_back(fields[0]);
    for (std::size_t k = 1; k < fields.size(); ++k) {
      try {
        std::size_t used = 0;
        t.values.push_back(std::stod(fields[k], &used));
        if (used != fields[k].size()) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        throw DataError("embedding line " + std::to_string(line_no) + ": bad number '" + fields[k] + "'");
      }
    }
  }
  return t;
}

inline EmbeddingTable load_embeddings(const std::string& path) {
  try {
    return parse_embeddings(read_file(path));
  } catch (const DataError& e) {
    throw DataError(path + ": " + e.what());
  }
}

// Key used by external per-character vector files: word, unit separator, 1-based position.
inline std::string external_vector_key(const std::string& word, std::size_t position) {
  return word + '\x1f' + std::to_string(position);
}

}  // namespace wist
