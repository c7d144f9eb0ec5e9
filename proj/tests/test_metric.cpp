#include <doctest.h>

#include <random>
#include <sstream>
#include <vector>

#include "aekit/metric.hpp"
#include "aekit/trace_io.hpp"
#include "alg1_oracle.hpp"

using namespace aekit;

namespace {

// Small fixture vocabulary: ids 0..9 are the digits of their own length-1
// text; the named entries give multi-character tokens.
Vocab fixture_vocab() {
  std::vector<std::string> tokens = {"1", ".", " A", " method", "x", "yy",
                                     "zzzzz", "qqqqqqqqq", "<|dep|>",
                                     "<|start_of_claim|>", "<|end_of_claim|>"};
  return Vocab(std::move(tokens), {8, 9, 10});
}

SequenceTrace scripted_trace(const std::vector<std::uint32_t>& ranks,
                             const std::vector<TokenId>& tokens, const Vocab& vocab,
                             EvalOptions opt = {}) {
  const ScriptedPredictor pred(ranks, 10000);
  return evaluate_sequence(pred, tokens, vocab, opt);
}

}  // namespace

TEST_CASE("keystroke charge follows the rank rules") {
  CHECK(keystroke_charge(1, 7, 10) == 1);    // tab
  CHECK(keystroke_charge(4, 2, 10) == 2);    // typing beats arrowing down
  CHECK(keystroke_charge(12, 5, 10) == 5);   // manual beyond the cutoff
  CHECK(keystroke_charge(2, 9, 10) == 2);    // down-arrow plus tab
  CHECK(keystroke_charge(10, 10, 10) == 10); // boundary: still inside the list
  CHECK(keystroke_charge(11, 10, 10) == 10);
  CHECK(keystroke_charge(1, 1, 1) == 1);
  CHECK(keystroke_charge(2, 3, 5) == 2);
  CHECK(keystroke_charge(6, 3, 5) == 3);
}

TEST_CASE("charges never exceed manual typing") {
  for (std::uint32_t rank = 2; rank <= 60; ++rank) {
    for (int len = 1; len <= 15; ++len) {
      const int charge = keystroke_charge(rank, len, 10);
      CHECK(charge <= len);
      if (rank > 10) CHECK(charge == len);
    }
  }
  // the rank-1 tab also never exceeds a non-empty token's length
  for (int len = 1; len <= 15; ++len) CHECK(keystroke_charge(1, len, 10) <= len);
}

TEST_CASE("manual typing cost is the summed text length") {
  const Vocab v = fixture_vocab();
  const std::vector<TokenId> toks = {0, 1, 2};  // "1", ".", " A"
  CHECK(keystrokes_without(toks, v) == 4);
  CHECK(keystrokes_without(std::vector<TokenId>{}, v) == 0);
  const std::vector<TokenId> bad = {255};
  CHECK_THROWS_AS(keystrokes_without(bad, v), DataError);
}

TEST_CASE("sequence replay matches the worked example") {
  // tokens "1", ".", " A", " method" (lengths 1, 1, 2, 7), ranks 1, 2, 3
  const Vocab v = fixture_vocab();
  const SequenceTrace trace = scripted_trace({1, 2, 3}, {0, 1, 2, 3}, v);

  REQUIRE(trace.outcomes.size() == 4);
  CHECK(trace.outcomes[0].bucket == Bucket::kFirstToken);
  CHECK(trace.outcomes[0].keystrokes == 1);
  CHECK(trace.outcomes[1].keystrokes == 1);
  CHECK(trace.outcomes[2].keystrokes == 2);
  CHECK(trace.outcomes[3].keystrokes == 3);
  CHECK(trace.total_with() == 7);
  CHECK(trace.total_without() == 11);
  CHECK(ae_ratio(trace.total_with(), trace.total_without()) ==
        doctest::Approx((11.0 - 7.0) / 11.0));

  const KeystrokeBreakdown b = aggregate(std::vector<SequenceTrace>{trace});
  CHECK(b.keys_top10 == 6);  // charges 1 + 2 + 3 of ranks 1, 2, 3
  CHECK(b.keys_out == 0);
  CHECK(b.keys_top1 == 1);
  CHECK(b.keys_first == 1);
  CHECK(b.total_with == 7);
  CHECK(b.total_with == b.keys_top10 + b.keys_out + b.keys_first);
}

TEST_CASE("free first-token mode reproduces the bare replay loop") {
  const Vocab v = fixture_vocab();
  EvalOptions opt;
  opt.first_token = FirstTokenMode::kFree;
  const SequenceTrace trace = scripted_trace({1, 2, 3}, {0, 1, 2, 3}, v, opt);
  CHECK(trace.outcomes[0].keystrokes == 0);
  CHECK(trace.total_with() == 6);
  CHECK(trace.total_without() == 11);
}

TEST_CASE("perfect prediction charges one key per ranked token") {
  const Vocab v = fixture_vocab();
  const std::vector<TokenId> tokens = {3, 2, 1, 0, 6};  // " method" first
  const MemorizingPredictor pred(tokens, v.size());
  const SequenceTrace trace = evaluate_sequence(pred, tokens, v);
  CHECK(trace.total_with() == 7 + (tokens.size() - 1));
  for (std::size_t i = 1; i < trace.outcomes.size(); ++i) {
    CHECK(trace.outcomes[i].bucket == Bucket::kTop1);
    CHECK(trace.outcomes[i].keystrokes == 1);
  }
}

TEST_CASE("a never-helpful predictor saves nothing") {
  const Vocab v = fixture_vocab();
  const SequenceTrace trace = scripted_trace({500, 500, 500}, {0, 1, 2, 3}, v);
  CHECK(trace.total_with() == trace.total_without());
  const KeystrokeBreakdown b = aggregate(std::vector<SequenceTrace>{trace});
  CHECK(b.ae == 0.0);
  CHECK(b.keys_top10 == 0);
}

TEST_CASE("single token sequences yield one first-token outcome") {
  const Vocab v = fixture_vocab();
  const SequenceTrace trace = scripted_trace({}, {3}, v);
  REQUIRE(trace.outcomes.size() == 1);
  CHECK(trace.outcomes[0].bucket == Bucket::kFirstToken);
  CHECK(trace.total_with() == 7);
}

TEST_CASE("structural tags stay in context but are never charged") {
  const Vocab v = fixture_vocab();
  // <|start_of_claim|> 1 . <|end_of_claim|>
  const std::vector<TokenId> tokens = {9, 0, 1, 10};
  const SequenceTrace trace = scripted_trace({42, 1}, tokens, v);
  REQUIRE(trace.outcomes.size() == 2);
  CHECK(trace.outcomes[0].token == 0);
  CHECK(trace.outcomes[0].bucket == Bucket::kFirstToken);
  // the query for "." carries the tag + "1" as context, so the scripted
  // rank list is indexed by context length: entry [1] answers here
  CHECK(trace.outcomes[1].rank == 1);
  CHECK(trace.total_without() == 2);
}

TEST_CASE("tag-only sequences are an explicit error") {
  const Vocab v = fixture_vocab();
  const std::vector<TokenId> tokens = {9, 10};
  CHECK_THROWS_AS(scripted_trace({1}, tokens, v), DataError);
}

TEST_CASE("predictor failures carry the failing position") {
  const Vocab v = fixture_vocab();
  try {
    scripted_trace({1, 2}, {0, 1, 2, 3}, v);  // ranks exhausted at position 3
    FAIL("expected a PredictorError");
  } catch (const PredictorError& e) {
    CHECK(std::string(e.what()).find("position 3") != std::string::npos);
  }
}

TEST_CASE("published ratios reproduce from their totals") {
  CHECK(format_percent(ae_ratio(277800, 643646)) == "56.8%");
  CHECK(format_percent(ae_ratio(401, 490)) == "18.2%");
  CHECK(format_percent(ae_ratio(237015, 529900)) == "55.3%");
  CHECK(ae_ratio(7, 7) == 0.0);
  CHECK_THROWS_AS(ae_ratio(1, 0), DataError);
  CHECK_THROWS_AS(ae_ratio(10, 9), DataError);
}

TEST_CASE("mean reciprocal rank") {
  const Vocab v = fixture_vocab();
  std::vector<SequenceTrace> traces = {scripted_trace({1, 2, 37}, {0, 1, 2, 3}, v)};
  CHECK(mrr(traces, 10) == doctest::Approx((1.0 + 0.5 + 0.0) / 3.0));

  traces = {scripted_trace({1, 1, 1}, {0, 1, 2, 3}, v)};
  CHECK(mrr(traces, 10) == 1.0);

  traces = {scripted_trace({11, 12, 13}, {0, 1, 2, 3}, v)};
  CHECK(mrr(traces, 10) == 0.0);
}

TEST_CASE("aggregation is additive") {
  const Vocab v = fixture_vocab();
  const SequenceTrace t = scripted_trace({1, 4, 99}, {3, 2, 1, 0}, v);
  const KeystrokeBreakdown one = aggregate(std::vector<SequenceTrace>{t});
  const KeystrokeBreakdown two = aggregate(std::vector<SequenceTrace>{t, t});
  CHECK(two.total_with == 2 * one.total_with);
  CHECK(two.total_without == 2 * one.total_without);
  CHECK(two.keys_top10 == 2 * one.keys_top10);
  CHECK(two.keys_out == 2 * one.keys_out);
  CHECK(two.keys_top1 == 2 * one.keys_top1);
  CHECK(two.count_out == 2 * one.count_out);
  CHECK(two.ae == one.ae);
}

TEST_CASE("oracle equivalence on random traces") {
  std::mt19937_64 rng(2024);

  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t len = 1 + rng() % 40;
    std::vector<oracle::Position> positions;
    std::vector<std::uint32_t> ranks;
    for (std::size_t i = 0; i < len; ++i) {
      const std::uint32_t rank = 1 + static_cast<std::uint32_t>(rng() % 10000);
      if (i > 0) ranks.push_back(rank);
      positions.push_back({i == 0 ? 0 : rank, 1 + static_cast<int>(rng() % 15)});
    }
    // one synthetic vocabulary entry per position, spelled to the drawn length
    std::vector<std::string> vocab_tokens;
    std::vector<TokenId> seq;
    for (std::size_t i = 0; i < len; ++i) {
      vocab_tokens.push_back(std::string(static_cast<std::size_t>(positions[i].text_len),
                                         static_cast<char>('a' + (i % 26))));
      seq.push_back(static_cast<TokenId>(i));
    }
    const Vocab run_vocab(std::move(vocab_tokens), {});
    const ScriptedPredictor pred(ranks, 10001);
    const SequenceTrace trace = evaluate_sequence(pred, seq, run_vocab);

    const oracle::Totals expected = oracle::simulate(positions, 10, /*charge_first_token=*/true);
    CHECK(trace.total_with() == expected.with_autocomplete);
    CHECK(trace.total_without() == expected.without_autocomplete);
    const KeystrokeBreakdown b = aggregate(std::vector<SequenceTrace>{trace});
    CHECK(b.keys_top10 == expected.top10);
    CHECK(b.keys_out == expected.out);
    CHECK(b.keys_top1 == expected.top1);
    CHECK(b.keys_first == expected.first);
  }
}

TEST_CASE("improving one rank never costs more keystrokes") {
  std::mt19937_64 rng(515);
  for (int trial = 0; trial < 2000; ++trial) {
    const std::size_t len = 2 + rng() % 30;
    std::vector<oracle::Position> positions;
    for (std::size_t i = 0; i < len; ++i)
      positions.push_back({1 + static_cast<std::uint32_t>(rng() % 50),
                           1 + static_cast<int>(rng() % 15)});
    const auto before = oracle::simulate(positions, 10, true);

    const std::size_t pick = 1 + rng() % (len - 1);
    if (positions[pick].rank == 1) continue;
    positions[pick].rank = 1 + static_cast<std::uint32_t>(rng() % (positions[pick].rank - 1));
    const auto after = oracle::simulate(positions, 10, true);
    CHECK(after.with_autocomplete <= before.with_autocomplete);
  }
}

TEST_CASE("decomposition identity holds exactly") {
  std::mt19937_64 rng(77);
  const Vocab v = fixture_vocab();
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t len = 1 + rng() % 12;
    std::vector<TokenId> tokens;
    std::vector<std::uint32_t> ranks;
    for (std::size_t i = 0; i < len; ++i) {
      tokens.push_back(static_cast<TokenId>(rng() % 8));  // non-special fixture ids
      if (i > 0) ranks.push_back(1 + static_cast<std::uint32_t>(rng() % 40));
    }
    const SequenceTrace t = scripted_trace(ranks, tokens, v);
    const KeystrokeBreakdown b = aggregate(std::vector<SequenceTrace>{t});
    CHECK(b.total_with == b.keys_top10 + b.keys_out + b.keys_first);
    CHECK(b.ae >= 0.0);
    CHECK(b.ae < 1.0);
  }
}

TEST_CASE("mrr is one exactly when every ranked token is top-1") {
  const Vocab v = fixture_vocab();
  const SequenceTrace perfect = scripted_trace({1, 1, 1}, {0, 1, 2, 3}, v);
  const KeystrokeBreakdown b = aggregate(std::vector<SequenceTrace>{perfect});
  CHECK(b.mrr == 1.0);
  CHECK(b.keys_top10 == b.count_top1);

  const SequenceTrace mixed = scripted_trace({1, 2, 1}, {0, 1, 2, 3}, v);
  CHECK(aggregate(std::vector<SequenceTrace>{mixed}).mrr < 1.0);
}

TEST_CASE("traces serialize deterministically and round-trip") {
  const Vocab v = fixture_vocab();
  EvalOptions opt;
  opt.source_id = "fixture#1";
  opt.capture.topk = 3;
  const SequenceTrace trace = scripted_trace({1, 2, 37}, {0, 1, 2, 3}, v, opt);

  std::ostringstream a, b;
  write_traces(a, std::vector<SequenceTrace>{trace});
  write_traces(b, std::vector<SequenceTrace>{trace});
  CHECK(a.str() == b.str());

  std::istringstream in(a.str());
  const auto back = read_traces(in);
  REQUIRE(back.size() == 1);
  CHECK(back[0].source_id == trace.source_id);
  CHECK(back[0].cutoff == trace.cutoff);
  REQUIRE(back[0].outcomes.size() == trace.outcomes.size());
  for (std::size_t i = 0; i < trace.outcomes.size(); ++i) {
    CHECK(back[0].outcomes[i].text == trace.outcomes[i].text);
    CHECK(back[0].outcomes[i].rank == trace.outcomes[i].rank);
    CHECK(back[0].outcomes[i].keystrokes == trace.outcomes[i].keystrokes);
    CHECK(back[0].outcomes[i].bucket == trace.outcomes[i].bucket);
    CHECK(back[0].outcomes[i].topk.size() == trace.outcomes[i].topk.size());
  }

  std::ostringstream c;
  write_traces(c, back);
  CHECK(c.str() == a.str());
}

TEST_CASE("percent formatting rounds half-up to one decimal") {
  CHECK(format_percent(0.5) == "50.0%");
  CHECK(format_percent(0.56849) == "56.8%");
  CHECK(format_percent(0.56859) == "56.9%");
  CHECK(format_percent(0.005549) == "0.6%");
  CHECK(format_percent(0.0) == "0.0%");
  CHECK(format_percent(1.0) == "100.0%");
}
