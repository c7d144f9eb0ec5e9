#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "aekit/errors.hpp"
#include "aekit/predictor.hpp"
#include "aekit/sampling.hpp"
#include "aekit/text.hpp"
#include "aekit/vocab.hpp"

namespace aekit {

inline constexpr int kDefaultCutoff = 10;

enum class FirstTokenMode { kManual, kFree };
enum class KeystrokeUnit { kChar, kByte };

// Charge categories. kTop2Cutoff covers ranks 2..cutoff; its serialized name
// stays "top2_10" for any cutoff (stable field contract).
enum class Bucket { kFirstToken, kTop1, kTop2Cutoff, kOut };

inline const char* to_string(Bucket b) {
  switch (b) {
    case Bucket::kFirstToken: return "first_token";
    case Bucket::kTop1: return "top1";
    case Bucket::kTop2Cutoff: return "top2_10";
    case Bucket::kOut: return "out";
  }
  return "?";
}

inline const char* to_string(FirstTokenMode m) {
  return m == FirstTokenMode::kManual ? "manual" : "free";
}

inline const char* to_string(KeystrokeUnit u) {
  return u == KeystrokeUnit::kChar ? "char" : "byte";
}

inline FirstTokenMode first_token_mode_from(std::string_view s) {
  if (s == "manual") return FirstTokenMode::kManual;
  if (s == "free") return FirstTokenMode::kFree;
  throw DataError("unknown first-token mode: " + std::string(s));
}

inline KeystrokeUnit keystroke_unit_from(std::string_view s) {
  if (s == "char") return KeystrokeUnit::kChar;
  if (s == "byte") return KeystrokeUnit::kByte;
  throw DataError("unknown keystroke unit: " + std::string(s));
}

inline Bucket bucket_from(std::string_view s) {
  if (s == "first_token") return Bucket::kFirstToken;
  if (s == "top1") return Bucket::kTop1;
  if (s == "top2_10") return Bucket::kTop2Cutoff;
  if (s == "out") return Bucket::kOut;
  throw DataError("unknown bucket: " + std::string(s));
}

// Keystrokes to produce one token whose predicted rank is known:
//   rank 1        -> one "tab"
//   rank 2..cutoff-> rank keys (down-arrows plus tab), or the token text
//                    typed manually when that is shorter
//   beyond cutoff -> the token text typed manually
// Total on rank >= 1, text_len >= 1, cutoff >= 1.
inline int keystroke_charge(std::uint32_t rank, int text_len, int cutoff) {
  if (rank == 1) return 1;
  if (rank <= static_cast<std::uint32_t>(cutoff))
    return std::min(static_cast<int>(rank), text_len);
  return text_len;
}

inline int text_length(std::string_view text, KeystrokeUnit unit) {
  if (unit == KeystrokeUnit::kByte) return static_cast<int>(std::max<std::size_t>(text.size(), 1));
  return static_cast<int>(char_count(text));
}

// Manual-typing cost of a token sequence: the summed decoded text lengths.
// Structural tags must already be filtered out by the caller.
inline std::uint64_t keystrokes_without(std::span<const TokenId> tokens, const Vocab& vocab,
                                        KeystrokeUnit unit = KeystrokeUnit::kChar) {
  std::uint64_t total = 0;
  for (TokenId t : tokens) total += static_cast<std::uint64_t>(text_length(vocab.text_of(t), unit));
  return total;
}

struct TokenOutcome {
  std::size_t position = 0;  // ordinal among evaluated (non-special) tokens
  TokenId token = 0;
  std::string text;
  int text_len = 0;
  std::optional<std::uint32_t> rank;  // absent for the first token
  double prob = 0.0;
  Bucket bucket = Bucket::kFirstToken;
  int keystrokes = 0;
  std::vector<TopEntry> topk;          // stored when capture requested
  std::vector<TokenId> continuation;   // stored when capture requested
  std::string continuation_text;
};

struct SequenceTrace {
  std::string source_id;
  int cutoff = kDefaultCutoff;
  FirstTokenMode first_token = FirstTokenMode::kManual;
  KeystrokeUnit unit = KeystrokeUnit::kChar;
  std::vector<TokenOutcome> outcomes;

  std::uint64_t total_with() const {
    std::uint64_t n = 0;
    for (const auto& o : outcomes) n += static_cast<std::uint64_t>(o.keystrokes);
    return n;
  }
  std::uint64_t total_without() const {
    std::uint64_t n = 0;
    for (const auto& o : outcomes) n += static_cast<std::uint64_t>(o.text_len);
    return n;
  }
};

struct CaptureOptions {
  int topk = 0;             // store the top-k list per ranked position (0 = off)
  bool continuations = false;
  SampleParams sampling;    // parameters for captured continuations
};

struct EvalOptions {
  int cutoff = kDefaultCutoff;
  FirstTokenMode first_token = FirstTokenMode::kManual;
  KeystrokeUnit unit = KeystrokeUnit::kChar;
  CaptureOptions capture;
  std::string source_id;
};

// Replays a token sequence against a predictor and charges every non-special
// token. The first evaluated token has no usable context: it is charged as
// manual typing by default, or zero under FirstTokenMode::kFree. Structural
// tags stay in the prediction context but are never charged.
inline SequenceTrace evaluate_sequence(const Predictor& pred, std::span<const TokenId> tokens,
                                       const Vocab& vocab, const EvalOptions& opt = {}) {
  if (tokens.empty()) throw DataError("cannot evaluate an empty token sequence");
  if (opt.cutoff < 1) throw DataError("cutoff must be >= 1");

  const DistributionPredictor* sampler = nullptr;
  if (opt.capture.continuations) {
    sampler = dynamic_cast<const DistributionPredictor*>(&pred);
    if (!sampler)
      throw PredictorError("continuation capture needs a distribution-capable backend; " +
                           pred.name() + " only answers rank queries");
  }

  SequenceTrace trace;
  trace.source_id = opt.source_id;
  trace.cutoff = opt.cutoff;
  trace.first_token = opt.first_token;
  trace.unit = opt.unit;

  PredictorSession session(pred);
  bool first_done = false;
  std::size_t ordinal = 0;

  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const TokenId tok = tokens[i];
    const std::string& text = vocab.text_of(tok);
    if (vocab.is_special(tok)) {
      session.append(tok);
      continue;
    }

    TokenOutcome o;
    o.position = ordinal;
    o.token = tok;
    o.text = text;
    o.text_len = text_length(text, opt.unit);

    if (!first_done) {
      o.bucket = Bucket::kFirstToken;
      o.keystrokes = opt.first_token == FirstTokenMode::kManual ? o.text_len : 0;
      first_done = true;
    } else {
      PredictionResult pr;
      try {
        pr = session.query(tok, std::max(1, opt.capture.topk));
      } catch (const PredictorError& e) {
        throw PredictorError("position " + std::to_string(ordinal) +
                             (trace.source_id.empty() ? "" : " of " + trace.source_id) + ": " +
                             e.what());
      }
      o.rank = pr.target_rank;
      o.prob = pr.target_prob;
      o.bucket = pr.target_rank == 1 ? Bucket::kTop1
                 : pr.target_rank <= static_cast<std::uint32_t>(opt.cutoff) ? Bucket::kTop2Cutoff
                                                                            : Bucket::kOut;
      o.keystrokes = keystroke_charge(pr.target_rank, o.text_len, opt.cutoff);
      if (opt.capture.topk > 0) {
        o.topk = std::move(pr.topk);
        for (auto& entry : o.topk)
          if (entry.text.empty() && entry.id < vocab.size()) entry.text = vocab.text_of(entry.id);
      }
      if (sampler) {
        SampleParams params = opt.capture.sampling;
        params.seed ^= 0x9e3779b97f4a7c15ULL * (ordinal + 1);  // per-position stream
        o.continuation = sample_continuation(*sampler, session.context(), params);
        o.continuation_text = vocab.decode(o.continuation);
      }
    }

    session.append(tok);
    ++ordinal;
    trace.outcomes.push_back(std::move(o));
  }

  if (trace.outcomes.empty())
    throw DataError("sequence contains only structural tags; nothing to evaluate");
  return trace;
}

// Fraction of manual keystrokes an autocomplete saves; e.g. (277800, 643646)
// evaluates to 0.5683..., printed as 56.8%.
inline double ae_ratio(std::uint64_t total_with, std::uint64_t total_without) {
  if (total_without == 0) throw DataError("total keystrokes without autocomplete is zero");
  if (total_with > total_without)
    throw DataError("keystrokes with autocomplete exceed the manual total");
  return static_cast<double>(total_without - total_with) / static_cast<double>(total_without);
}

// One decimal, half-up: 0.56839 -> "56.8%".
inline std::string format_percent(double fraction) {
  const double tenths = std::floor(fraction * 1000.0 + 0.5);
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f%%", tenths / 10.0);
  return buf;
}

struct KeystrokeBreakdown {
  std::uint64_t total_with = 0;
  std::uint64_t total_without = 0;
  std::uint64_t keys_top10 = 0;   // charges of ranks 1..cutoff (includes top-1)
  std::uint64_t keys_out = 0;     // manual typing beyond the cutoff
  std::uint64_t keys_top1 = 0;    // the tab-only subset of keys_top10
  std::uint64_t keys_first = 0;   // manual first-token charges
  std::uint64_t count_first = 0;
  std::uint64_t count_top1 = 0;
  std::uint64_t count_top2_cutoff = 0;
  std::uint64_t count_out = 0;
  int cutoff = kDefaultCutoff;
  double ae = 0.0;
  double mrr = 0.0;
};

// Mean reciprocal rank over every ranked position: 1/rank within the cutoff,
// 0 beyond it. First tokens are not ranked and do not contribute.
inline double mrr(std::span<const SequenceTrace> traces, int cutoff) {
  double sum = 0.0;
  std::uint64_t ranked = 0;
  for (const auto& trace : traces) {
    for (const auto& o : trace.outcomes) {
      if (!o.rank) continue;
      ++ranked;
      if (*o.rank <= static_cast<std::uint32_t>(cutoff)) sum += 1.0 / static_cast<double>(*o.rank);
    }
  }
  return ranked == 0 ? 0.0 : sum / static_cast<double>(ranked);
}

// Folds traces into the evaluation table columns. All traces must share one
// cutoff; the decomposition total_with == keys_top10 + keys_out + keys_first
// holds exactly.
inline KeystrokeBreakdown aggregate(std::span<const SequenceTrace> traces) {
  if (traces.empty()) throw DataError("cannot aggregate zero traces");
  KeystrokeBreakdown b;
  b.cutoff = traces.front().cutoff;
  for (const auto& trace : traces) {
    if (trace.cutoff != b.cutoff)
      throw DataError("traces were evaluated with different cutoffs");
    for (const auto& o : trace.outcomes) {
      const auto keys = static_cast<std::uint64_t>(o.keystrokes);
      b.total_with += keys;
      b.total_without += static_cast<std::uint64_t>(o.text_len);
      switch (o.bucket) {
        case Bucket::kFirstToken:
          b.keys_first += keys;
          ++b.count_first;
          break;
        case Bucket::kTop1:
          b.keys_top10 += keys;
          b.keys_top1 += keys;
          ++b.count_top1;
          break;
        case Bucket::kTop2Cutoff:
          b.keys_top10 += keys;
          ++b.count_top2_cutoff;
          break;
        case Bucket::kOut:
          b.keys_out += keys;
          ++b.count_out;
          break;
      }
    }
  }
  b.ae = ae_ratio(b.total_with, b.total_without);
  b.mrr = mrr(traces, b.cutoff);
  return b;
}

}  // namespace aekit
