#pragma once

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "aekit/errors.hpp"
#include "aekit/predictor.hpp"

namespace aekit {

// Deterministic count-based predictor. A query walks down from the longest
// usable context: the deepest level that has seen the context answers with
// its raw relative frequencies, scaled by one backoff factor per skipped
// level; a context no level has seen falls through to the add-one smoothed
// unigram table, so every token keeps positive mass there. The final vector
// is renormalized, which cancels the scaling and makes the distribution sum
// to one exactly.
//
// Immutable after fitting; concurrent queries are allowed.
class NgramModel final : public DistributionPredictor {
 public:
  static NgramModel fit(std::span<const std::vector<TokenId>> sequences, int order,
                        double backoff_factor, std::size_t vocab_size) {
    if (order < 1) throw DataError("n-gram order must be >= 1");
    if (!(backoff_factor > 0.0 && backoff_factor < 1.0))
      throw DataError("backoff factor must lie in (0, 1)");
    if (vocab_size == 0) throw DataError("vocabulary size must be positive");
    bool any = false;
    for (const auto& s : sequences)
      if (!s.empty()) {
        any = true;
        break;
      }
    if (!any) throw DataError("n-gram training set is empty");

    NgramModel m(order, backoff_factor, vocab_size);
    for (const auto& seq : sequences) {
      for (TokenId t : seq) {
        if (t >= vocab_size) throw DataError("training token id outside the vocabulary");
        ++m.unigram_[t];
        ++m.unigram_total_;
      }
      for (int len = 1; len < order; ++len) {
        const std::size_t ulen = static_cast<std::size_t>(len);
        if (seq.size() <= ulen) break;
        auto& level = m.levels_[ulen - 1];
        for (std::size_t i = ulen; i < seq.size(); ++i) {
          auto& table = level[pack_context(std::span(seq).subspan(i - ulen, ulen))];
          ++table.counts[seq[i]];
          ++table.total;
        }
      }
    }
    return m;
  }

  int order() const { return order_; }
  double backoff_factor() const { return backoff_; }
  std::size_t vocab_size() const override { return vocab_size_; }

  // Unnormalized backoff scores; distribution() is this vector scaled to
  // sum 1. Exposed so the two query paths can be compared in tests.
  std::vector<double> scores(std::span<const TokenId> context) const {
    const std::size_t use = std::min(context.size(), static_cast<std::size_t>(order_ - 1));
    double scale = 1.0;
    for (std::size_t len = use; len >= 1; --len) {
      const auto key = pack_context(context.subspan(context.size() - len, len));
      const auto& level = levels_[len - 1];
      const auto it = level.find(key);
      if (it != level.end()) {
        std::vector<double> s(vocab_size_, 0.0);
        const double total = static_cast<double>(it->second.total);
        for (const auto& [tok, count] : it->second.counts)
          s[tok] = scale * (static_cast<double>(count) / total);
        return s;
      }
      scale *= backoff_;
    }
    std::vector<double> s(vocab_size_);
    const double denom = static_cast<double>(unigram_total_ + vocab_size_);
    for (std::size_t t = 0; t < vocab_size_; ++t)
      s[t] = scale * (static_cast<double>(unigram_[t] + 1) / denom);
    return s;
  }

  std::vector<double> distribution(std::span<const TokenId> context) const override {
    std::vector<double> s = scores(context);
    double sum = 0.0;
    for (double v : s) sum += v;
    for (double& v : s) v /= sum;
    return s;
  }

  std::size_t context_window() const override {
    return std::max<std::size_t>(1, static_cast<std::size_t>(order_) - 1);
  }

  std::string name() const override { return "ngram(order=" + std::to_string(order_) + ")"; }

  // ---- Model file (CBOR) ----

  void save_file(const std::string& path) const {
    nlohmann::json j;
    j["format"] = "aekit-ngram";
    j["version"] = 1;
    j["order"] = order_;
    j["backoff"] = backoff_;
    j["vocab_size"] = vocab_size_;
    j["unigram_total"] = unigram_total_;
    auto uni = nlohmann::json::array();
    for (std::size_t t = 0; t < vocab_size_; ++t) {
      if (unigram_[t] > 0) uni.push_back({t, unigram_[t]});
    }
    j["unigram"] = std::move(uni);
    auto levels = nlohmann::json::array();
    for (const auto& level : levels_) {
      // sort contexts for reproducible bytes
      std::vector<const std::string*> keys;
      keys.reserve(level.size());
      for (const auto& [key, _] : level) keys.push_back(&key);
      std::sort(keys.begin(), keys.end(),
                [](const std::string* a, const std::string* b) { return *a < *b; });
      auto jlevel = nlohmann::json::array();
      for (const std::string* key : keys) {
        const auto& table = level.at(*key);
        auto ctx = nlohmann::json::array();
        for (TokenId t : unpack_context(*key)) ctx.push_back(t);
        std::vector<std::pair<TokenId, std::uint64_t>> counts(table.counts.begin(),
                                                              table.counts.end());
        std::sort(counts.begin(), counts.end());
        auto jcounts = nlohmann::json::array();
        for (const auto& [tok, c] : counts) jcounts.push_back({tok, c});
        jlevel.push_back({std::move(ctx), table.total, std::move(jcounts)});
      }
      levels.push_back(std::move(jlevel));
    }
    j["levels"] = std::move(levels);

    std::ofstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot write model file " + path);
    const std::vector<std::uint8_t> bytes = nlohmann::json::to_cbor(j);
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  }

  static NgramModel load_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot read model file " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                                    std::istreambuf_iterator<char>());
    nlohmann::json j;
    try {
      j = nlohmann::json::from_cbor(bytes);
    } catch (const nlohmann::json::exception& e) {
      throw DataError("malformed model file " + path + ": " + e.what());
    }
    if (!j.is_object() || j.value("format", "") != "aekit-ngram")
      throw DataError(path + " is not an aekit n-gram model file");
    if (j.value("version", 0) != 1)
      throw DataError("unsupported model file version in " + path);

    NgramModel m(j.at("order").get<int>(), j.at("backoff").get<double>(),
                 j.at("vocab_size").get<std::size_t>());
    m.unigram_total_ = j.at("unigram_total").get<std::uint64_t>();
    for (const auto& entry : j.at("unigram")) {
      const std::size_t t = entry.at(0).get<std::size_t>();
      if (t >= m.vocab_size_) throw DataError("model unigram entry outside the vocabulary");
      m.unigram_[t] = entry.at(1).get<std::uint64_t>();
    }
    const auto& levels = j.at("levels");
    if (levels.size() != m.levels_.size()) throw DataError("model levels do not match the order");
    for (std::size_t l = 0; l < m.levels_.size(); ++l) {
      for (const auto& jtable : levels[l]) {
        std::vector<TokenId> ctx;
        for (const auto& t : jtable.at(0)) ctx.push_back(t.get<TokenId>());
        if (ctx.size() != l + 1) throw DataError("model context length does not match its level");
        auto& table = m.levels_[l][pack_context(ctx)];
        table.total = jtable.at(1).get<std::uint64_t>();
        for (const auto& c : jtable.at(2)) table.counts[c.at(0).get<TokenId>()] = c.at(1).get<std::uint64_t>();
      }
    }
    return m;
  }

 private:
  NgramModel(int order, double backoff_factor, std::size_t vocab_size)
      : order_(order), backoff_(backoff_factor), vocab_size_(vocab_size),
        unigram_(vocab_size, 0),
        levels_(order >= 2 ? static_cast<std::size_t>(order - 1) : 0) {}

  struct ContextTable {
    std::uint64_t total = 0;
    std::unordered_map<TokenId, std::uint64_t> counts;
  };

  static std::string pack_context(std::span<const TokenId> ctx) {
    std::string key(ctx.size() * sizeof(TokenId), '\0');
    std::memcpy(key.data(), ctx.data(), key.size());
    return key;
  }

  static std::vector<TokenId> unpack_context(const std::string& key) {
    std::vector<TokenId> ctx(key.size() / sizeof(TokenId));
    std::memcpy(ctx.data(), key.data(), key.size());
    return ctx;
  }

  int order_;
  double backoff_;
  std::size_t vocab_size_;
  std::vector<std::uint64_t> unigram_;
  std::uint64_t unigram_total_ = 0;
  std::vector<std::unordered_map<std::string, ContextTable>> levels_;  // [i] = contexts of length i+1
};

// Convenience used by the CLI and tests: encode and fit in one step.
inline NgramModel fit_ngram(std::span<const std::vector<TokenId>> sequences, int order,
                            double backoff_factor, std::size_t vocab_size) {
  return NgramModel::fit(sequences, order, backoff_factor, vocab_size);
}

}  // namespace aekit
