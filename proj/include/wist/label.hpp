#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "wist/error.hpp"

namespace wist {

// The closed relation inventory for word-internal trees.
enum class Label : std::uint8_t { root, subj, obj, att, adv, cmp, coo, pobj, adjct, frag, repet };

inline constexpr std::size_t kLabelCount = 11;

inline constexpr std::array<std::string_view, kLabelCount> kLabelNames = {
    "root", "subj", "obj", "att", "adv", "cmp", "coo", "pobj", "adjct", "frag", "repet"};

// One-line glosses, used as tooltips by the annotation front end.
inline constexpr std::array<std::string_view, kLabelCount> kLabelGlosses = {
    "root of the word",     "subject",           "object",
    "attribute modifier",   "adverbial modifier", "complement",
    "coordination",         "preposition object", "adjunct",
    "fragment (no composition)", "repetition"};

inline constexpr std::string_view label_name(Label l) {
  return kLabelNames[static_cast<std::size_t>(l)];
}

inline constexpr std::size_t label_index(Label l) { return static_cast<std::size_t>(l); }

inline std::optional<Label> try_parse_label(std::string_view s) {
  for (std::size_t i = 0; i < kLabelCount; ++i) {
    if (kLabelNames[i] == s) return static_cast<Label>(i);
  }
  return std::nullopt;
}

inline Label parse_label(std::string_view s) {
  if (auto l = try_parse_label(s)) return *l;
  throw DataError("unknown label '" + std::string(s) + "'");
}

inline Label label_at(std::size_t i) {
  if (i >= kLabelCount) throw DataError("label index out of range: " + std::to_string(i));
  return static_cast<Label>(i);
}

}  // namespace wist
