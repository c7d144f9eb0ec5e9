#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "aekit/errors.hpp"
#include "aekit/vocab.hpp"

namespace aekit {

struct TopEntry {
  TokenId id = 0;
  std::string text;
  double prob = 0.0;
};

// Outcome of one (context, target) query. target_rank is the target's
// 1-based position in a strict total order over the whole vocabulary:
// probability descending, ties broken by ascending token id. topk holds the
// first entries of the same ordering.
struct PredictionResult {
  std::uint32_t target_rank = 0;
  double target_prob = 0.0;
  std::vector<TopEntry> topk;
};

// Ranking backend contract. Implementations must be immutable under queries;
// concurrent calls are allowed.
class Predictor {
 public:
  static constexpr std::size_t kUnboundedWindow = std::numeric_limits<std::size_t>::max();

  virtual ~Predictor() = default;

  virtual PredictionResult rank_and_topk(std::span<const TokenId> context, TokenId target,
                                         int k) const = 0;

  // Number of trailing context tokens the backend actually reads;
  // kUnboundedWindow means the whole context matters.
  virtual std::size_t context_window() const { return kUnboundedWindow; }

  virtual std::string name() const = 0;
};

// Backend that also exposes the full next-token distribution (required for
// sampling and for full-vocabulary rank computation done client-side).
class DistributionPredictor : public Predictor {
 public:
  virtual std::size_t vocab_size() const = 0;

  // Distribution over token ids 0..vocab_size-1; sums to 1 within 1e-9.
  virtual std::vector<double> distribution(std::span<const TokenId> context) const = 0;

  PredictionResult rank_and_topk(std::span<const TokenId> context, TokenId target,
                                 int k) const override {
    if (context.empty()) throw PredictorError(name() + ": context must be non-empty");
    if (k < 1) throw PredictorError(name() + ": k must be >= 1");
    const std::vector<double> probs = distribution(context);
    if (target >= probs.size())
      throw PredictorError(name() + ": target id " + std::to_string(target) +
                           " outside the vocabulary");

    PredictionResult r;
    r.target_prob = probs[target];
    std::uint32_t before = 0;
    for (std::size_t t = 0; t < probs.size(); ++t) {
      if (probs[t] > r.target_prob || (probs[t] == r.target_prob && t < target)) ++before;
    }
    r.target_rank = before + 1;

    const std::size_t kk = std::min<std::size_t>(static_cast<std::size_t>(k), probs.size());
    std::vector<TokenId> idx(probs.size());
    std::iota(idx.begin(), idx.end(), TokenId{0});
    std::partial_sort(idx.begin(), idx.begin() + kk, idx.end(), [&](TokenId a, TokenId b) {
      if (probs[a] != probs[b]) return probs[a] > probs[b];
      return a < b;
    });
    r.topk.reserve(kk);
    for (std::size_t i = 0; i < kk; ++i) r.topk.push_back({idx[i], std::string(), probs[idx[i]]});
    return r;
  }
};

// Every token equally likely; the rank of any target is its id plus one.
class UniformPredictor final : public DistributionPredictor {
 public:
  explicit UniformPredictor(std::size_t vocab_size) : vocab_size_(vocab_size) {
    if (vocab_size_ == 0) throw PredictorError("uniform predictor needs a non-empty vocabulary");
  }

  std::size_t vocab_size() const override { return vocab_size_; }

  std::vector<double> distribution(std::span<const TokenId>) const override {
    return std::vector<double>(vocab_size_, 1.0 / static_cast<double>(vocab_size_));
  }

  std::string name() const override { return "uniform"; }

 private:
  std::size_t vocab_size_;
};

// Degenerate backend that has memorized exactly one sequence: when the
// context is a proper prefix of it, the next memorized token has probability
// one; anywhere else the distribution is uniform.
class MemorizingPredictor final : public DistributionPredictor {
 public:
  MemorizingPredictor(std::vector<TokenId> sequence, std::size_t vocab_size)
      : seq_(std::move(sequence)), vocab_size_(vocab_size) {
    if (vocab_size_ == 0) throw PredictorError("memorizing predictor needs a non-empty vocabulary");
    for (TokenId t : seq_)
      if (t >= vocab_size_)
        throw PredictorError("memorized sequence contains a token outside the vocabulary");
  }

  std::size_t vocab_size() const override { return vocab_size_; }

  std::vector<double> distribution(std::span<const TokenId> context) const override {
    if (context.size() < seq_.size() &&
        std::equal(context.begin(), context.end(), seq_.begin())) {
      std::vector<double> probs(vocab_size_, 0.0);
      probs[seq_[context.size()]] = 1.0;
      return probs;
    }
    return std::vector<double>(vocab_size_, 1.0 / static_cast<double>(vocab_size_));
  }

  std::string name() const override { return "memorizing"; }

 private:
  std::vector<TokenId> seq_;
  std::size_t vocab_size_;
};

// Test oracle that replays an explicit 1-based rank per evaluated position.
// The position is inferred from the context length: a query carrying n
// context tokens reads ranks[n - 1]. The top-k list is synthesized so that
// the PredictionResult invariants hold (descending probabilities, target
// placed at its own rank when visible).
class ScriptedPredictor final : public Predictor {
 public:
  ScriptedPredictor(std::vector<std::uint32_t> ranks, std::size_t vocab_size)
      : ranks_(std::move(ranks)), vocab_size_(vocab_size) {
    if (vocab_size_ == 0) throw PredictorError("scripted predictor needs a non-empty vocabulary");
    for (std::uint32_t r : ranks_)
      if (r < 1 || r > vocab_size_)
        throw PredictorError("scripted rank " + std::to_string(r) +
                             " outside 1.." + std::to_string(vocab_size_));
  }

  PredictionResult rank_and_topk(std::span<const TokenId> context, TokenId target,
                                 int k) const override {
    if (context.empty()) throw PredictorError("scripted: context must be non-empty");
    if (k < 1) throw PredictorError("scripted: k must be >= 1");
    const std::size_t pos = context.size() - 1;
    if (pos >= ranks_.size())
      throw PredictorError("scripted ranks exhausted: no entry for position " +
                           std::to_string(context.size()));

    PredictionResult r;
    r.target_rank = ranks_[pos];
    r.target_prob = prob_at(r.target_rank);
    const std::size_t kk = std::min<std::size_t>(static_cast<std::size_t>(k), vocab_size_);
    r.topk.reserve(kk);
    TokenId filler = 0;
    for (std::size_t slot = 1; slot <= kk; ++slot) {
      TokenId id;
      if (slot == r.target_rank) {
        id = target;
      } else {
        while (filler == target) ++filler;
        id = filler++;
      }
      r.topk.push_back({id, std::string(), prob_at(static_cast<std::uint32_t>(slot))});
    }
    return r;
  }

  std::string name() const override { return "scripted"; }

 private:
  static double prob_at(std::uint32_t rank) { return 1.0 / (rank + 1.0); }

  std::vector<std::uint32_t> ranks_;
  std::size_t vocab_size_;
};

// Incremental context over any predictor. Appending is cheap; the buffer
// keeps only as many trailing tokens as the backend reads, so a session
// query and a fresh query on the same full context agree on every field.
// Single-owner: not shareable across threads.
class PredictorSession {
 public:
  explicit PredictorSession(const Predictor& pred)
      : pred_(&pred), window_(pred.context_window()) {}

  void append(TokenId token) {
    context_.push_back(token);
    ++length_;
    if (window_ != Predictor::kUnboundedWindow && context_.size() > window_)
      context_.erase(context_.begin());
  }

  // Total number of tokens appended (not the buffered count).
  std::size_t length() const { return length_; }

  std::span<const TokenId> context() const { return context_; }

  PredictionResult query(TokenId target, int k) const {
    if (context_.empty()) throw PredictorError("session has an empty context");
    return pred_->rank_and_topk(context_, target, k);
  }

 private:
  const Predictor* pred_;
  std::size_t window_;
  std::size_t length_ = 0;
  std::vector<TokenId> context_;
};

}  // namespace aekit
