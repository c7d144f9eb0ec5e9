#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "aekit/errors.hpp"
#include "aekit/text.hpp"

namespace aekit {

using TokenId = std::uint32_t;

inline constexpr std::string_view kDepTag = "<|dep|>";
inline constexpr std::string_view kStartOfClaimTag = "<|start_of_claim|>";
inline constexpr std::string_view kEndOfClaimTag = "<|end_of_claim|>";

inline std::vector<std::string> default_special_tags() {
  return {std::string(kStartOfClaimTag), std::string(kEndOfClaimTag), std::string(kDepTag)};
}

namespace detail {
struct StringHash {
  using is_transparent = void;
  std::size_t operator()(std::string_view s) const { return std::hash<std::string_view>{}(s); }
};
}  // namespace detail

// Immutable token table. A TokenId is the token's position in the list.
// Encoding is greedy longest-match over surface strings, so concatenating the
// decoded tokens always reproduces the input byte-for-byte. Structural tags
// are ordinary (long) entries for matching purposes but are flagged special:
// they are never typed by a user and never charged keystrokes.
//
// Safe for unlimited concurrent readers once constructed.
class Vocab {
 public:
  Vocab(std::vector<std::string> tokens, const std::vector<std::size_t>& special_indices)
      : tokens_(std::move(tokens)) {
    if (tokens_.empty()) throw DataError("vocabulary is empty");
    for (std::size_t i : special_indices) {
      if (i >= tokens_.size())
        throw DataError("special index out of range: " + std::to_string(i));
      special_.insert(static_cast<TokenId>(i));
    }
    table_.reserve(tokens_.size());
    for (std::size_t i = 0; i < tokens_.size(); ++i) {
      if (tokens_[i].empty())
        throw DataError("token " + std::to_string(i) + " has empty text");
      max_token_len_ = std::max(max_token_len_, tokens_[i].size());
      table_.emplace(tokens_[i], static_cast<TokenId>(i));  // first id wins on duplicates
    }
  }

  // 256 single-byte tokens plus the structural tags: encodes any input.
  static Vocab byte_level(const std::vector<std::string>& tags = default_special_tags()) {
    std::vector<std::string> toks;
    toks.reserve(256 + tags.size());
    for (int b = 0; b < 256; ++b) toks.emplace_back(1, static_cast<char>(b));
    std::vector<std::size_t> special;
    for (const auto& t : tags) {
      special.push_back(toks.size());
      toks.push_back(t);
    }
    return Vocab(std::move(toks), special);
  }

  std::size_t size() const { return tokens_.size(); }

  const std::string& text_of(TokenId id) const {
    if (id >= tokens_.size())
      throw DataError("unknown token id " + std::to_string(id));
    return tokens_[id];
  }

  bool is_special(TokenId id) const { return special_.contains(id); }

  const std::unordered_set<TokenId>& special_ids() const { return special_; }

  std::optional<TokenId> find(std::string_view text) const {
    auto it = table_.find(text);
    if (it == table_.end()) return std::nullopt;
    return it->second;
  }

  TokenId tag_id(std::string_view tag) const {
    auto id = find(tag);
    if (!id || !is_special(*id))
      throw DataError("vocabulary has no special tag " + std::string(tag));
    return *id;
  }

  std::vector<TokenId> encode(std::string_view text) const {
    std::vector<TokenId> out;
    out.reserve(text.size() / 3 + 1);
    std::size_t pos = 0;
    while (pos < text.size()) {
      std::size_t len = std::min(max_token_len_, text.size() - pos);
      for (; len >= 1; --len) {
        auto it = table_.find(text.substr(pos, len));
        if (it != table_.end()) {
          out.push_back(it->second);
          pos += len;
          break;
        }
      }
      if (len == 0)
        throw DataError("input byte 0x" + to_hex(static_cast<unsigned char>(text[pos])) +
                        " at offset " + std::to_string(pos) + " is not covered by the vocabulary");
    }
    return out;
  }

  std::string decode(std::span<const TokenId> ids) const {
    std::string out;
    for (TokenId id : ids) out += text_of(id);
    return out;
  }

  // File format: {"tokens": [str...], "special": [index...]}. Token strings
  // encode raw bytes as code points U+0000..U+00FF (identity for ASCII).
  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    auto toks = nlohmann::ordered_json::array();
    for (const auto& t : tokens_) toks.push_back(bytes_to_utf8(t));
    j["tokens"] = std::move(toks);
    std::vector<std::size_t> special(special_.begin(), special_.end());
    std::sort(special.begin(), special.end());
    j["special"] = special;
    return j;
  }

  static Vocab from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("tokens") || !j["tokens"].is_array())
      throw DataError("vocabulary json must have a \"tokens\" array");
    std::vector<std::string> toks;
    toks.reserve(j["tokens"].size());
    for (const auto& t : j["tokens"]) {
      if (!t.is_string()) throw DataError("vocabulary tokens must be strings");
      toks.push_back(utf8_to_bytes(t.get<std::string>()));
    }
    std::vector<std::size_t> special;
    if (j.contains("special")) {
      for (const auto& s : j["special"]) special.push_back(s.get<std::size_t>());
    }
    return Vocab(std::move(toks), special);
  }

  void save_file(const std::string& path) const {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot write vocabulary file " + path);
    f << to_json().dump(2) << '\n';
  }

  static Vocab load_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot read vocabulary file " + path);
    nlohmann::json j;
    try {
      f >> j;
    } catch (const nlohmann::json::exception& e) {
      throw DataError("malformed vocabulary file " + path + ": " + e.what());
    }
    return from_json(j);
  }

 private:
  static std::string to_hex(unsigned char b) {
    static const char* digits = "0123456789abcdef";
    return {digits[b >> 4], digits[b & 0xF]};
  }

  std::vector<std::string> tokens_;
  std::unordered_set<TokenId> special_;
  std::unordered_map<std::string, TokenId, detail::StringHash, std::equal_to<>> table_;
  std::size_t max_token_len_ = 0;
};

// Byte-pair training: starts from the byte alphabet plus the structural tags
// and repeatedly merges the most frequent adjacent pair (ties broken by the
// lower id pair) until the target size is reached or no pair repeats. Tags
// split the corpus into segments and never take part in merges.
inline Vocab train_tokenizer(std::span<const std::string> corpus,
                             std::size_t target_vocab_size,
                             const std::vector<std::string>& tags = default_special_tags()) {
  bool any = false;
  for (const auto& doc : corpus)
    if (!doc.empty()) {
      any = true;
      break;
    }
  if (!any) throw DataError("tokenizer training corpus is empty");

  const std::size_t floor_size = 256 + tags.size();
  if (target_vocab_size < floor_size)
    throw DataError("target vocabulary size " + std::to_string(target_vocab_size) +
                    " is below the byte alphabet plus tags (" + std::to_string(floor_size) + ")");

  Vocab base = Vocab::byte_level(tags);
  std::vector<std::vector<TokenId>> seqs;
  for (const auto& doc : corpus) {
    auto ids = base.encode(doc);
    std::vector<TokenId> cur;
    for (TokenId id : ids) {
      if (base.is_special(id)) {
        if (cur.size() >= 2) seqs.push_back(std::move(cur));
        cur.clear();
      } else {
        cur.push_back(id);
      }
    }
    if (cur.size() >= 2) seqs.push_back(std::move(cur));
  }

  std::vector<std::string> tokens;
  std::vector<std::size_t> special_idx;
  tokens.reserve(target_vocab_size);
  for (TokenId i = 0; i < base.size(); ++i) {
    tokens.push_back(base.text_of(i));
    if (base.is_special(i)) special_idx.push_back(i);
  }

  auto pack = [](TokenId a, TokenId b) {
    return (static_cast<std::uint64_t>(a) << 32) | b;
  };

  while (tokens.size() < target_vocab_size) {
    std::unordered_map<std::uint64_t, std::uint64_t> counts;
    for (const auto& s : seqs)
      for (std::size_t i = 0; i + 1 < s.size(); ++i) ++counts[pack(s[i], s[i + 1])];

    std::uint64_t best_key = 0, best_count = 0;
    for (const auto& [key, count] : counts) {
      if (count > best_count || (count == best_count && key < best_key)) {
        best_key = key;
        best_count = count;
      }
    }
    if (best_count < 2) break;

    const TokenId left = static_cast<TokenId>(best_key >> 32);
    const TokenId right = static_cast<TokenId>(best_key & 0xFFFFFFFFu);
    const TokenId merged = static_cast<TokenId>(tokens.size());
    tokens.push_back(tokens[left] + tokens[right]);

    for (auto& s : seqs) {
      std::size_t w = 0;
      for (std::size_t r = 0; r < s.size();) {
        if (r + 1 < s.size() && s[r] == left && s[r + 1] == right) {
          s[w++] = merged;
          r += 2;
        } else {
          s[w++] = s[r++];
        }
      }
      s.resize(w);
    }
  }

  return Vocab(std::move(tokens), special_idx);
}

}  // namespace aekit
