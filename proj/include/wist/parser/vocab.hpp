#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "wist/error.hpp"

namespace wist::parser {

inline const std::string kUnk = "<unk>";
inline const std::string kRoot = "<root>";

// Token <-> id table with training frequencies. Token 0 is the unknown
// fallback when the vocabulary was created with specials.
class Vocab {
 public:
  Vocab() = default;
  explicit Vocab(bool with_specials) {
    if (with_specials) {
      add(kUnk, 0);
      add(kRoot, 0);
      has_unk_ = true;
    }
  }

  std::size_t add(const std::string& token, std::size_t freq = 1) {
    auto it = index_.find(token);
    if (it != index_.end()) {
      freq_[it->second] += freq;
      return it->second;
    }
    index_.emplace(token, tokens_.size());
    tokens_.push_back(token);
    freq_.push_back(freq);
    return tokens_.size() - 1;
  }

  bool contains(const std::string& token) const { return index_.count(token) > 0; }

  // Id of `token`, or the unknown id; throws when there is no fallback.
  std::size_t id(const std::string& token) const {
    auto it = index_.find(token);
    if (it != index_.end()) return it->second;
    if (!has_unk_) throw DataError("token '" + token + "' not in vocabulary");
    return 0;
  }

  // -1 when absent.
  long find(const std::string& token) const {
    auto it = index_.find(token);
    return it == index_.end() ? -1 : static_cast<long>(it->second);
  }

  std::size_t root_id() const { return id(kRoot); }
  const std::string& token(std::size_t i) const { return tokens_.at(i); }
  std::size_t freq(std::size_t i) const { return freq_.at(i); }
  std::size_t size() const { return tokens_.size(); }
  bool has_unk() const { return has_unk_; }
  void set_has_unk(bool v) { has_unk_ = v; }
  const std::vector<std::string>& tokens() const { return tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::vector<std::size_t> freq_;
  std::unordered_map<std::string, std::size_t> index_;
  bool has_unk_ = false;
};

}  // namespace wist::parser
