#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "aekit/metric.hpp"
#include "aekit/ngram.hpp"
#include "aekit/report.hpp"

using namespace aekit;

namespace {

Vocab fixture_vocab() {
  std::vector<std::string> tokens = {"1", ".", " A", " method", "x", "yy", "zzzzz",
                                     "qqqqqqqqq", "<|dep|>"};
  return Vocab(std::move(tokens), {8});
}

SequenceTrace make_trace(const std::vector<std::uint32_t>& ranks,
                         const std::vector<TokenId>& tokens, int topk = 0,
                         const std::string& source_id = "fixture") {
  const Vocab v = fixture_vocab();
  const ScriptedPredictor pred(ranks, 10000);
  EvalOptions opt;
  opt.source_id = source_id;
  opt.capture.topk = topk;
  return evaluate_sequence(pred, tokens, v, opt);
}

KeystrokeBreakdown breakdown_of(const SequenceTrace& t) {
  return aggregate(std::vector<SequenceTrace>{t});
}

// Pulls the class attribute and inner text out of every token span.
std::vector<std::pair<std::string, std::string>> spans_of(const std::string& html) {
  std::vector<std::pair<std::string, std::string>> spans;
  std::size_t pos = 0;
  const std::string open = "<span class=\"";
  while ((pos = html.find(open, pos)) != std::string::npos) {
    const std::size_t cls_begin = pos + open.size();
    const std::size_t cls_end = html.find('"', cls_begin);
    const std::size_t text_begin = html.find('>', cls_end) + 1;
    const std::size_t text_end = html.find("</span>", text_begin);
    spans.emplace_back(html.substr(cls_begin, cls_end - cls_begin),
                       html.substr(text_begin, text_end - text_begin));
    pos = text_end;
  }
  return spans;
}

std::string html_unescape(std::string s) {
  const std::pair<const char*, const char*> reps[] = {
      {"&lt;", "<"}, {"&gt;", ">"}, {"&quot;", "\""}, {"&amp;", "&"}};
  for (const auto& [from, to] : reps) {
    std::size_t p = 0;
    while ((p = s.find(from, p)) != std::string::npos) {
      s.replace(p, std::string(from).size(), to);
      p += 1;
    }
  }
  return s;
}

}  // namespace

TEST_CASE("table rows render the published example") {
  KeystrokeBreakdown b;
  b.total_with = 277800;
  b.total_without = 643646;
  b.keys_top10 = 168112;
  b.keys_out = 109688;
  b.keys_top1 = 73600;
  b.ae = ae_ratio(b.total_with, b.total_without);
  const std::vector<LabeledBreakdown> rows = {{"456M", b}};

  const std::string csv = emit_tables(rows, TableFormat::kCsv);
  CHECK(csv.find("456M,56.8%,277800,168112,109688,73600,643646,1") != std::string::npos);

  const std::string text = emit_tables(rows, TableFormat::kText);
  CHECK(text.find("56.8%") != std::string::npos);
  CHECK(text.find("*best") != std::string::npos);
}

TEST_CASE("identical breakdowns emit identical bytes") {
  const auto t = make_trace({1, 2, 37}, {0, 1, 2, 3});
  const std::vector<LabeledBreakdown> rows = {{"a", breakdown_of(t)}, {"b", breakdown_of(t)}};
  CHECK(emit_tables(rows, TableFormat::kCsv) == emit_tables(rows, TableFormat::kCsv));
  const std::string csv = emit_tables(rows, TableFormat::kCsv);
  // both rows carry the same cells; the first of the tied rows is flagged
  CHECK(csv.find(",1\n") != std::string::npos);
}

TEST_CASE("mismatched manual totals across rows are an error") {
  const auto a = breakdown_of(make_trace({1, 2}, {0, 1, 2}));
  const auto b = breakdown_of(make_trace({1, 2, 3}, {0, 1, 2, 3}));
  const std::vector<LabeledBreakdown> rows = {{"a", a}, {"b", b}};
  CHECK_THROWS_AS(emit_tables(rows, TableFormat::kCsv), DataError);
}

TEST_CASE("drifted ae cells are an error") {
  auto b = breakdown_of(make_trace({1, 2}, {0, 1, 2}));
  b.ae += 0.01;
  const std::vector<LabeledBreakdown> rows = {{"a", b}};
  CHECK_THROWS_AS(emit_tables(rows, TableFormat::kCsv), DataError);
}

TEST_CASE("histogram counts buckets per position") {
  const auto t1 = make_trace({1, 5}, {0, 1, 2});     // position 1 rank 1, position 2 rank 5
  const auto t2 = make_trace({37}, {0, 1});          // position 1 rank 37
  const auto h = rank_histogram(std::vector<SequenceTrace>{t1, t2});

  REQUIRE(h.rows.size() == 2);
  CHECK(h.rows[0].position == 1);
  CHECK(h.rows[0].top1 == 1);
  CHECK(h.rows[0].out == 1);
  CHECK(h.rows[0].reaching == 2);
  CHECK(h.rows[1].position == 2);
  CHECK(h.rows[1].top2_cutoff == 1);
  CHECK(h.rows[1].reaching == 1);
  for (const auto& r : h.rows) CHECK(r.top1 + r.top2_cutoff + r.out == r.reaching);

  const std::string csv = histogram_csv(h);
  CHECK(csv.find("position,top1,top2_10,out,reaching\n") == 0);
  CHECK(csv.find("1,1,0,1,2\n") != std::string::npos);
}

TEST_CASE("a 50-position histogram has exactly 50 three-bucket rows") {
  const Vocab v = fixture_vocab();
  std::mt19937_64 rng(13);
  std::vector<SequenceTrace> traces;
  for (int t = 0; t < 4; ++t) {
    std::vector<TokenId> tokens;
    std::vector<std::uint32_t> ranks;
    for (int i = 0; i < 70; ++i) {
      tokens.push_back(static_cast<TokenId>(rng() % 8));
      if (i > 0) ranks.push_back(1 + static_cast<std::uint32_t>(rng() % 40));
    }
    const ScriptedPredictor pred(ranks, 10000);
    traces.push_back(evaluate_sequence(pred, tokens, v));
  }
  const auto h = rank_histogram(traces, 50);
  REQUIRE(h.rows.size() == 50);
  for (std::size_t i = 0; i < h.rows.size(); ++i) {
    CHECK(h.rows[i].position == i + 1);
    CHECK(h.rows[i].reaching == 4);
    CHECK(h.rows[i].top1 + h.rows[i].top2_cutoff + h.rows[i].out == h.rows[i].reaching);
  }
}

TEST_CASE("histogram honors the position limit and drops unreached rows") {
  std::vector<SequenceTrace> traces;
  for (int i = 0; i < 3; ++i) traces.push_back(make_trace({1, 1, 1, 1, 1}, {0, 1, 2, 3, 4, 5}));
  const auto h = rank_histogram(traces, 3);
  REQUIRE(h.rows.size() == 3);  // positions 1..3
  CHECK(h.rows.back().position == 3);

  const auto all = rank_histogram(traces);
  CHECK(all.rows.size() == 5);
}

TEST_CASE("saliency html mirrors the trace") {
  const auto t = make_trace({1, 2, 37}, {0, 1, 2, 3}, /*topk=*/3, "patent-x#1");
  const std::string html = render_saliency_html(t);

  const auto spans = spans_of(html);
  REQUIRE(spans.size() == 4);
  CHECK(spans[0].first == "first_token");
  CHECK(spans[1].first == "top1");
  CHECK(spans[2].first == "top2_10");
  CHECK(spans[3].first == "out");

  std::string concatenated;
  for (const auto& [cls, text] : spans) concatenated += html_unescape(text);
  CHECK(concatenated == "1. A method");

  const std::string expected_header =
      "AE ratio: " + format_percent(ae_ratio(t.total_with(), t.total_without()));
  CHECK(html.find(expected_header) != std::string::npos);
  CHECK(html.find("patent-x#1") != std::string::npos);
}

TEST_CASE("saliency html matches the committed golden file") {
  // regenerate with UPDATE_GOLDEN=1 after an intentional renderer change
  std::vector<std::string> tokens = {"1", ".", " A", " method"};
  const Vocab vocab(std::move(tokens), {});
  const ScriptedPredictor pred({1, 2, 37}, 10000);
  EvalOptions opt;
  opt.source_id = "golden-fixture";
  const SequenceTrace trace =
      evaluate_sequence(pred, std::vector<TokenId>{0, 3, 2, 1}, vocab, opt);
  const std::string html = render_saliency_html(trace);

  const std::string golden_path = std::string(TEST_GOLDEN_DIR) + "/saliency_fixture.html";
  if (std::getenv("UPDATE_GOLDEN")) {
    std::ofstream(golden_path, std::ios::binary) << html;
  }
  std::ifstream f(golden_path, std::ios::binary);
  REQUIRE(f.good());
  std::stringstream golden;
  golden << f.rdbuf();
  CHECK(html == golden.str());
}

TEST_CASE("all-top1 traces render no red spans") {
  const auto t = make_trace({1, 1, 1}, {0, 1, 2, 3});
  const std::string html = render_saliency_html(t);
  CHECK(html.find("class=\"out\"") == std::string::npos);
}

TEST_CASE("html escapes markup in token text") {
  std::vector<std::string> tokens = {"<b>", "&x", "ok"};
  const Vocab v(std::move(tokens), {});
  const ScriptedPredictor pred({1, 2}, 100);
  EvalOptions opt;
  opt.source_id = "esc";
  const auto t = evaluate_sequence(pred, std::vector<TokenId>{0, 1, 2}, v, opt);
  const std::string html = render_saliency_html(t);
  CHECK(html.find("&lt;b&gt;") != std::string::npos);
  CHECK(html.find("&amp;x") != std::string::npos);

  const auto spans = spans_of(html);
  std::string concatenated;
  for (const auto& [cls, text] : spans) concatenated += html_unescape(text);
  CHECK(concatenated == "<b>&xok");
}

TEST_CASE("inspection dump lists ranked entries plus the first-token stub") {
  const auto t = make_trace({1, 2, 37}, {0, 1, 2, 3}, /*topk=*/10, "dump-me");
  const auto j = dump_inspection(t);
  CHECK(j["schema"] == 1);
  CHECK(j["source_id"] == "dump-me");
  REQUIRE(j["positions"].size() == 4);
  CHECK(j["positions"][0]["first_token"] == true);
  CHECK_FALSE(j["positions"][0].contains("rank"));
  for (int i = 1; i < 4; ++i) {
    CHECK(j["positions"][i].contains("rank"));
    CHECK(j["positions"][i]["topk"].is_array());
  }
  // a top-1 hit lists the actual token first
  CHECK(j["positions"][1]["rank"] == 1);
  CHECK(j["positions"][1]["topk"][0]["text"] == j["positions"][1]["text"]);
}

TEST_CASE("captured continuations ride along into the dump") {
  const Vocab v = fixture_vocab();
  // alternating stream gives the bigram something to continue
  const std::vector<TokenId> tokens = {0, 1, 0, 1, 0, 1, 0, 1};
  const auto model =
      NgramModel::fit(std::vector<std::vector<TokenId>>{tokens}, 2, 0.4, v.size());

  EvalOptions opt;
  opt.source_id = "with-continuations";
  opt.capture.topk = 5;
  opt.capture.continuations = true;
  opt.capture.sampling.seed = 9;
  const SequenceTrace trace = evaluate_sequence(model, tokens, v, opt);

  for (const auto& o : trace.outcomes) {
    if (!o.rank) continue;
    CHECK(o.continuation.size() <= 128);  // default generation cap
    CHECK_FALSE(o.continuation.empty());
    CHECK(o.continuation_text == v.decode(o.continuation));
  }

  const auto j = dump_inspection(trace);
  CHECK(j["positions"][1].contains("continuation"));
  CHECK(j["positions"][1]["continuation"]["tokens"].size() <= 128);

  // identical options replay the identical continuations
  const SequenceTrace again = evaluate_sequence(model, tokens, v, opt);
  for (std::size_t i = 0; i < trace.outcomes.size(); ++i)
    CHECK(trace.outcomes[i].continuation == again.outcomes[i].continuation);
}

TEST_CASE("continuation capture refuses rank-only backends") {
  const Vocab v = fixture_vocab();
  const ScriptedPredictor pred({1, 2}, 100);
  EvalOptions opt;
  opt.capture.continuations = true;
  CHECK_THROWS_AS(evaluate_sequence(pred, std::vector<TokenId>{0, 1, 2}, v, opt),
                  PredictorError);
}

TEST_CASE("dumping an uncaptured trace instructs a re-run") {
  const auto t = make_trace({1, 2}, {0, 1, 2});
  try {
    dump_inspection(t);
    FAIL("expected a DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("--store-topk") != std::string::npos);
  }
}
