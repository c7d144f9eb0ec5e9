// aekit: measures how many keystrokes a next-token predictor saves a typist
// in an emulated autocomplete setting, plus the claim-expansion corpus
// pipeline and the reports built on the recorded traces.

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "aekit/claims.hpp"
#include "aekit/errors.hpp"
#include "aekit/metric.hpp"
#include "aekit/ngram.hpp"
#include "aekit/predictor.hpp"
#include "aekit/remote.hpp"
#include "aekit/report.hpp"
#include "aekit/text.hpp"
#include "aekit/trace_io.hpp"
#include "aekit/vocab.hpp"

namespace fs = std::filesystem;
using namespace aekit;

namespace {

// ---- small shared helpers ----

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot read " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot write " + path);
  f << content;
}

std::string digest_hex(const std::string& bytes) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(bytes)));
  return buf;
}

std::string stem_of(const std::string& path) { return fs::path(path).stem().string(); }

bool looks_like_jsonl(const std::string& path) {
  const std::string ext = fs::path(path).extension().string();
  return ext == ".jsonl" || ext == ".ndjson";
}

std::string sanitize_name(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '-' || c == '_')
      out.push_back(c);
    else
      out.push_back('_');
  }
  if (out.size() > 80) out.resize(80);
  return out.empty() ? "trace" : out;
}

// Reproducibility header: configuration plus input digests, on stderr.
void log_header(const std::string& cmd,
                const std::vector<std::pair<std::string, std::string>>& config,
                const std::vector<std::string>& inputs) {
  std::ostringstream ss;
  ss << "# aekit " << cmd;
  for (const auto& [k, v] : config) ss << ' ' << k << '=' << v;
  std::cerr << ss.str() << '\n';
  for (const auto& f : inputs) {
    try {
      std::cerr << "# input " << f << " fnv1a=" << digest_hex(read_file(f)) << '\n';
    } catch (const DataError&) {
      std::cerr << "# input " << f << " unreadable\n";
    }
  }
}

struct TextRecord {
  std::string source_id;
  std::string text;
};

// A text set is either dataset JSON Lines ({"text":...,"provenance":...}) or
// plain text with one record per line.
std::vector<TextRecord> load_text_set(const std::string& path) {
  const std::string content = read_file(path);
  const std::string stem = stem_of(path);
  std::vector<TextRecord> records;
  std::istringstream in(content);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (looks_like_jsonl(path)) {
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(line);
      } catch (const nlohmann::json::exception& e) {
        throw DataError(path + ":" + std::to_string(lineno) + " is not valid json: " + e.what());
      }
      if (!j.contains("text"))
        throw DataError(path + ":" + std::to_string(lineno) + " has no \"text\" field");
      const TrainingRecord r = record_from_json(j);
      std::string id;
      if (j.contains("source_id")) {
        id = j["source_id"].get<std::string>();
      } else if (!r.patent_id.empty()) {
        id = r.patent_id;
        for (std::size_t i = 0; i < r.claim_numbers.size(); ++i)
          id += (i == 0 ? "#" : "+") + std::to_string(r.claim_numbers[i]);
      } else {
        id = stem + ":" + std::to_string(lineno);
      }
      if (r.reversed) id += "/rev";
      records.push_back({std::move(id), r.text});
    } else {
      records.push_back({stem + ":" + std::to_string(lineno), line});
    }
  }
  if (records.empty()) throw DataError(path + " contains no records");
  return records;
}

// Index-sharded worker pool; any task failure cancels the rest and rethrows.
void run_pool(int workers, std::size_t count, const std::function<void(std::size_t)>& fn) {
  if (workers <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex mu;
  auto worker = [&] {
    while (!failed.load()) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (!error) error = std::current_exception();
        failed.store(true);
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  const std::size_t n = std::min<std::size_t>(static_cast<std::size_t>(workers), count);
  pool.reserve(n);
  for (std::size_t w = 0; w < n; ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

// ---- train-tokenizer ----

struct TrainArgs {
  std::vector<std::string> corpus;
  std::size_t vocab_size = 0;
  std::string out;
  std::vector<std::string> tags = default_special_tags();
};

int run_train(const TrainArgs& a) {
  log_header("train-tokenizer",
             {{"vocab-size", std::to_string(a.vocab_size)}, {"out", a.out}}, a.corpus);
  std::vector<std::string> docs;
  docs.reserve(a.corpus.size());
  for (const auto& path : a.corpus) docs.push_back(read_file(path));
  const Vocab vocab = train_tokenizer(docs, a.vocab_size, a.tags);
  vocab.save_file(a.out);
  std::cout << "vocabulary: " << vocab.size() << " tokens ("
            << vocab.size() - 256 - a.tags.size() << " merges, " << a.tags.size()
            << " tags) -> " << a.out << '\n';
  return 0;
}

// ---- fit-ngram ----

struct FitArgs {
  std::vector<std::string> data;
  std::string vocab_path;
  int order = 4;
  double backoff = 0.4;
  std::string out;
};

int run_fit(const FitArgs& a) {
  std::vector<std::string> inputs = a.data;
  inputs.push_back(a.vocab_path);
  log_header("fit-ngram",
             {{"order", std::to_string(a.order)},
              {"backoff", std::to_string(a.backoff)},
              {"out", a.out}},
             inputs);
  const Vocab vocab = Vocab::load_file(a.vocab_path);
  std::vector<std::vector<TokenId>> sequences;
  std::size_t tokens_total = 0;
  for (const auto& path : a.data) {
    for (const auto& rec : load_text_set(path)) {
      sequences.push_back(vocab.encode(rec.text));
      tokens_total += sequences.back().size();
    }
  }
  const NgramModel model = NgramModel::fit(sequences, a.order, a.backoff, vocab.size());
  model.save_file(a.out);
  std::cout << "fitted order-" << a.order << " model on " << sequences.size()
            << " sequences (" << tokens_total << " tokens) -> " << a.out << '\n';
  return 0;
}

// ---- expand-claims ----

struct ExpandArgs {
  std::vector<std::string> in;
  std::string out;
  std::string manifest;
  bool reverse = false;
  bool tags = false;
  bool no_expand = false;
  std::string md_policy = "skip";
  std::string reverse_unit = "token";
  std::string vocab_path;
};

int run_expand(const ExpandArgs& a) {
  log_header("expand-claims",
             {{"out", a.out},
              {"expand", a.no_expand ? "off" : "on"},
              {"reverse", a.reverse ? "on" : "off"},
              {"tags", a.tags ? "on" : "off"},
              {"md-policy", a.md_policy},
              {"reverse-unit", a.reverse_unit}},
             a.in);
  const Vocab vocab =
      a.vocab_path.empty() ? Vocab::byte_level() : Vocab::load_file(a.vocab_path);

  AssembleOptions opt;
  opt.expand = !a.no_expand;
  opt.reverse = a.reverse;
  opt.tags = a.tags;
  opt.md_policy = a.md_policy == "strict" ? MultipleDependentPolicy::kStrict
                                          : MultipleDependentPolicy::kSkip;
  opt.reverse_unit = reverse_unit_from(a.reverse_unit);

  std::vector<ParsedDocument> docs;
  std::vector<std::pair<std::string, std::string>> failures;
  for (const auto& path : a.in) {
    try {
      const std::string content = read_file(path);
      if (looks_like_jsonl(path)) {
        std::istringstream in(content);
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
          ++lineno;
          if (line.empty()) continue;
          try {
            docs.push_back(document_from_json(nlohmann::json::parse(line)));
          } catch (const nlohmann::json::exception& e) {
            throw DataError(path + ":" + std::to_string(lineno) + ": " + e.what());
          }
        }
      } else {
        ParsedDocument doc;
        doc.patent_id = stem_of(path);
        doc.claims = parse_claims(content, &doc.warnings);
        docs.push_back(std::move(doc));
      }
    } catch (const DataError& e) {
      failures.emplace_back(path, e.what());
    }
  }

  AssembleOutcome outcome = assemble_dataset(docs, vocab, opt);
  auto errors = nlohmann::ordered_json::array();
  for (const auto& [input, error] : failures)
    errors.push_back({{"input", input}, {"error", error}});
  outcome.manifest["documents_failed"] = failures.size();
  outcome.manifest["errors"] = std::move(errors);

  std::ostringstream dataset;
  for (const auto& r : outcome.records) dataset << record_to_json(r).dump() << '\n';
  write_file(a.out, dataset.str());
  const std::string manifest_path = a.manifest.empty() ? a.out + ".manifest.json" : a.manifest;
  write_file(manifest_path, outcome.manifest.dump(2) + "\n");

  std::cout << "dataset: " << outcome.records.size() << " records from " << docs.size()
            << " documents -> " << a.out << " (manifest " << manifest_path << ")\n";
  for (const auto& [input, error] : failures)
    std::cerr << "failed input " << input << ": " << error << '\n';
  if (!failures.empty() && docs.empty()) {
    std::cerr << "error: every input failed\n";
    return 2;
  }
  return 0;
}

// ---- evaluate ----

struct EvaluateArgs {
  std::string claims;
  std::string vocab_path;
  std::string ngram_path;
  std::string url;
  std::string scripted_path;
  std::string out;
  std::string label;
  int cutoff = kDefaultCutoff;
  std::string first_token = "manual";
  std::string keystroke_unit = "char";
  int store_topk = 0;
  bool continuations = false;
  int max_tokens = 128;
  double top_p = 0.9;
  double temperature = 0.75;
  std::uint64_t seed = 0;
  int workers = 1;
  int timeout_ms = 30000;
  int retries = 2;
};

std::vector<std::vector<std::uint32_t>> load_scripted_ranks(const std::string& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path + " is not valid json: " + e.what());
  }
  const nlohmann::json* lists = &j;
  if (j.is_object() && j.contains("sequences")) lists = &j["sequences"];
  if (!lists->is_array()) throw DataError(path + ": expected an array of rank lists");
  std::vector<std::vector<std::uint32_t>> out;
  for (const auto& l : *lists) out.push_back(l.get<std::vector<std::uint32_t>>());
  return out;
}

int run_evaluate(const EvaluateArgs& a) {
  const int sources = (!a.ngram_path.empty()) + (!a.url.empty()) + (!a.scripted_path.empty());
  if (sources != 1)
    throw DataError("pick exactly one predictor: --ngram, --predictor-url, or --scripted");

  std::vector<std::string> inputs = {a.claims, a.vocab_path};
  if (!a.ngram_path.empty()) inputs.push_back(a.ngram_path);
  if (!a.scripted_path.empty()) inputs.push_back(a.scripted_path);
  log_header("evaluate",
             {{"cutoff", std::to_string(a.cutoff)},
              {"first-token", a.first_token},
              {"keystroke-unit", a.keystroke_unit},
              {"store-topk", std::to_string(a.store_topk)},
              {"continuations", a.continuations ? "on" : "off"},
              {"seed", std::to_string(a.seed)},
              {"workers", std::to_string(a.workers)}},
             inputs);

  const Vocab vocab = Vocab::load_file(a.vocab_path);
  const auto records = load_text_set(a.claims);
  std::vector<std::vector<TokenId>> sequences;
  sequences.reserve(records.size());
  for (const auto& r : records) sequences.push_back(vocab.encode(r.text));

  std::unique_ptr<Predictor> shared;
  std::vector<std::unique_ptr<Predictor>> per_sequence;
  if (!a.ngram_path.empty()) {
    auto model = std::make_unique<NgramModel>(NgramModel::load_file(a.ngram_path));
    if (model->vocab_size() != vocab.size())
      throw DataError("model was fitted against a different vocabulary (" +
                      std::to_string(model->vocab_size()) + " tokens vs " +
                      std::to_string(vocab.size()) + ")");
    shared = std::move(model);
  } else if (!a.url.empty()) {
    RemoteOptions opt;
    opt.timeout_ms = a.timeout_ms;
    opt.retries = a.retries;
    shared = std::make_unique<RemotePredictor>(a.url, opt);
  } else {
    auto lists = load_scripted_ranks(a.scripted_path);
    if (lists.size() != sequences.size())
      throw DataError("scripted ranks hold " + std::to_string(lists.size()) +
                      " sequences but the text set has " + std::to_string(sequences.size()));
    std::size_t max_rank = 1;
    for (const auto& l : lists)
      for (std::uint32_t r : l) max_rank = std::max<std::size_t>(max_rank, r);
    for (auto& l : lists)
      per_sequence.push_back(
          std::make_unique<ScriptedPredictor>(std::move(l), std::max(vocab.size(), max_rank)));
  }

  EvalOptions base;
  base.cutoff = a.cutoff;
  base.first_token = first_token_mode_from(a.first_token);
  base.unit = keystroke_unit_from(a.keystroke_unit);
  base.capture.topk = a.store_topk;
  base.capture.continuations = a.continuations;
  base.capture.sampling.max_tokens = a.max_tokens;
  base.capture.sampling.top_p = a.top_p;
  base.capture.sampling.temperature = a.temperature;
  base.capture.sampling.seed = a.seed;
  if (const auto stop = vocab.find(kEndOfClaimTag); stop && vocab.is_special(*stop))
    base.capture.sampling.stop_token = *stop;

  std::vector<SequenceTrace> traces(records.size());
  run_pool(a.workers, records.size(), [&](std::size_t i) {
    EvalOptions opt = base;
    opt.source_id = records[i].source_id;
    const Predictor& pred = per_sequence.empty() ? *shared : *per_sequence[i];
    traces[i] = evaluate_sequence(pred, sequences[i], vocab, opt);
  });

  write_traces_file(a.out, traces);
  const KeystrokeBreakdown b = aggregate(traces);
  std::string label = a.label;
  if (label.empty())
    label = shared ? shared->name() : "scripted";
  const std::vector<LabeledBreakdown> rows = {{label, b}};
  std::cout << emit_tables(rows, TableFormat::kText);
  char mrr_text[32];
  std::snprintf(mrr_text, sizeof mrr_text, "%.3f", b.mrr);
  std::cout << "AE ratio: " << format_percent(b.ae) << ", MRR " << mrr_text << " over "
            << traces.size() << " sequences -> " << a.out << '\n';
  return 0;
}

// ---- report ----

struct ReportArgs {
  std::vector<std::string> traces;
  std::vector<std::string> labels;
  std::string tables;
  std::string format = "csv";
  std::string html_dir;
  std::string histogram;
  std::size_t max_position = 0;  // 0 = all
};

int run_report(const ReportArgs& a) {
  log_header("report", {{"format", a.format}}, a.traces);
  if (!a.labels.empty() && a.labels.size() != a.traces.size())
    throw DataError("--label count must match --traces count");

  std::vector<std::pair<std::string, std::vector<SequenceTrace>>> sets;
  for (std::size_t i = 0; i < a.traces.size(); ++i) {
    const std::string label = a.labels.empty() ? stem_of(a.traces[i]) : a.labels[i];
    sets.emplace_back(label, read_traces_file(a.traces[i]));
  }

  std::vector<LabeledBreakdown> rows;
  for (const auto& [label, traces] : sets) rows.push_back({label, aggregate(traces)});

  bool wrote_something = false;
  if (!a.tables.empty()) {
    write_file(a.tables, emit_tables(rows, table_format_from(a.format)));
    std::cout << "tables -> " << a.tables << '\n';
    wrote_something = true;
  }
  if (!a.histogram.empty()) {
    const std::size_t limit = a.max_position == 0 ? kAllPositions : a.max_position;
    for (const auto& [label, traces] : sets) {
      std::string path = a.histogram;
      if (sets.size() > 1) {
        const fs::path p(a.histogram);
        path = (p.parent_path() / (p.stem().string() + "." + sanitize_name(label) +
                                   p.extension().string()))
                   .string();
      }
      write_file(path, histogram_csv(rank_histogram(traces, limit)));
      std::cout << "histogram -> " << path << '\n';
    }
    wrote_something = true;
  }
  if (!a.html_dir.empty()) {
    fs::create_directories(a.html_dir);
    std::size_t written = 0;
    for (const auto& [label, traces] : sets) {
      for (std::size_t i = 0; i < traces.size(); ++i) {
        char idx[16];
        std::snprintf(idx, sizeof idx, "%04zu", i);
        std::string name = std::string(idx) + "_" + sanitize_name(traces[i].source_id);
        if (sets.size() > 1) name = sanitize_name(label) + "_" + name;
        write_file((fs::path(a.html_dir) / (name + ".html")).string(),
                   render_saliency_html(traces[i]));
        ++written;
      }
    }
    std::cout << written << " saliency pages -> " << a.html_dir << '\n';
    wrote_something = true;
  }
  if (!wrote_something) std::cout << emit_tables(rows, TableFormat::kText);
  return 0;
}

// ---- dump ----

struct DumpArgs {
  std::string traces;
  std::string out_dir;
};

int run_dump(const DumpArgs& a) {
  log_header("dump", {{"out", a.out_dir}}, {a.traces});
  const auto traces = read_traces_file(a.traces);
  fs::create_directories(a.out_dir);
  for (std::size_t i = 0; i < traces.size(); ++i) {
    char idx[16];
    std::snprintf(idx, sizeof idx, "%04zu", i);
    const std::string name =
        std::string(idx) + "_" + sanitize_name(traces[i].source_id) + ".json";
    write_file((fs::path(a.out_dir) / name).string(), dump_inspection(traces[i]).dump(2) + "\n");
  }
  std::cout << traces.size() << " inspection dumps -> " << a.out_dir << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"aekit: keystroke-savings (autocomplete effectiveness) harness for "
               "next-token predictors"};
  app.require_subcommand(1);
  std::function<int()> runner;

  TrainArgs train;
  auto* cmd_train = app.add_subcommand("train-tokenizer",
                                       "Train a byte-pair vocabulary on raw text files");
  cmd_train->add_option("--corpus", train.corpus, "Input text files")->required();
  cmd_train->add_option("--vocab-size", train.vocab_size,
                        "Target vocabulary size (bytes + tags + merges)")->required();
  cmd_train->add_option("--out", train.out, "Vocabulary file to write")->required();
  cmd_train->add_option("--tag", train.tags,
                        "Structural tags to embed (default: start/end-of-claim and dep tags)")
      ->capture_default_str();
  cmd_train->callback([&] { runner = [&] { return run_train(train); }; });

  FitArgs fit;
  auto* cmd_fit = app.add_subcommand("fit-ngram", "Fit an n-gram model on a text set");
  cmd_fit->add_option("--data", fit.data, "Training text sets (.jsonl or plain lines)")
      ->required();
  cmd_fit->add_option("--vocab", fit.vocab_path, "Vocabulary file")->required();
  cmd_fit->add_option("--order", fit.order, "n-gram order")->capture_default_str();
  cmd_fit->add_option("--backoff", fit.backoff, "Backoff factor in (0,1)")
      ->capture_default_str();
  cmd_fit->add_option("--out", fit.out, "Model file to write")->required();
  cmd_fit->callback([&] { runner = [&] { return run_fit(fit); }; });

  ExpandArgs expand;
  auto* cmd_expand = app.add_subcommand(
      "expand-claims", "Parse claim documents and emit dependency-expanded records");
  cmd_expand->add_option("--in", expand.in, "Claim documents (.txt) or pre-parsed .jsonl")
      ->required();
  cmd_expand->add_option("--out", expand.out, "Dataset JSONL to write")->required();
  cmd_expand->add_option("--manifest", expand.manifest,
                         "Manifest path (default: <out>.manifest.json)");
  cmd_expand->add_flag("--reverse", expand.reverse, "Append reversed duplicates");
  cmd_expand->add_flag("--tags", expand.tags, "Wrap records in start/end-of-claim tags");
  cmd_expand->add_flag("--no-expand", expand.no_expand,
                       "Emit raw claims without dependency pairing");
  cmd_expand->add_option("--md-policy", expand.md_policy,
                         "Multiple-dependent claims: skip or strict")
      ->check(CLI::IsMember({"skip", "strict"}))
      ->capture_default_str();
  cmd_expand->add_option("--reverse-unit", expand.reverse_unit, "Reversal unit: token or char")
      ->check(CLI::IsMember({"token", "char"}))
      ->capture_default_str();
  cmd_expand->add_option("--vocab", expand.vocab_path,
                         "Vocabulary for token-unit reversal (default: byte-level + tags)");
  cmd_expand->callback([&] { runner = [&] { return run_expand(expand); }; });

  EvaluateArgs eval;
  auto* cmd_eval = app.add_subcommand(
      "evaluate", "Replay a text set against a predictor and write keystroke traces");
  cmd_eval->add_option("--claims", eval.claims, "Text set (.jsonl or plain lines)")->required();
  cmd_eval->add_option("--vocab", eval.vocab_path, "Vocabulary file")->required();
  cmd_eval->add_option("--ngram", eval.ngram_path, "n-gram model file");
  cmd_eval->add_option("--predictor-url", eval.url, "Remote predictor endpoint")
      ->envname("AE_PREDICTOR_URL");
  cmd_eval->add_option("--scripted", eval.scripted_path, "Scripted per-position rank lists");
  cmd_eval->add_option("--out", eval.out, "Trace JSONL to write")->required();
  cmd_eval->add_option("--label", eval.label, "Row label for the printed table");
  cmd_eval->add_option("--cutoff", eval.cutoff, "Autocomplete list length")
      ->capture_default_str();
  cmd_eval->add_option("--first-token", eval.first_token,
                       "Charge for the unranked first token: manual or free")
      ->check(CLI::IsMember({"manual", "free"}))
      ->capture_default_str();
  cmd_eval->add_option("--keystroke-unit", eval.keystroke_unit, "char or byte")
      ->check(CLI::IsMember({"char", "byte"}))
      ->capture_default_str();
  cmd_eval->add_option("--store-topk", eval.store_topk,
                       "Store the top-k list at every ranked position (0 = off)")
      ->capture_default_str();
  cmd_eval->add_flag("--continuations", eval.continuations,
                     "Sample and store a continuation at every ranked position");
  cmd_eval->add_option("--max-tokens", eval.max_tokens, "Continuation length cap")
      ->capture_default_str();
  cmd_eval->add_option("--top-p", eval.top_p, "Nucleus mass for sampling")
      ->capture_default_str();
  cmd_eval->add_option("--temperature", eval.temperature, "Sampling temperature (0 = argmax)")
      ->capture_default_str();
  cmd_eval->add_option("--seed", eval.seed, "Sampling seed")->capture_default_str();
  cmd_eval->add_option("--workers", eval.workers, "Parallel evaluation workers")
      ->capture_default_str();
  cmd_eval->add_option("--timeout-ms", eval.timeout_ms, "Remote request timeout")
      ->capture_default_str();
  cmd_eval->add_option("--retries", eval.retries, "Remote retry budget")
      ->capture_default_str();
  cmd_eval->callback([&] { runner = [&] { return run_evaluate(eval); }; });

  ReportArgs report;
  auto* cmd_report =
      app.add_subcommand("report", "Render tables, histograms, and saliency pages from traces");
  cmd_report->add_option("--traces", report.traces, "Trace files (one table row each)")
      ->required();
  cmd_report->add_option("--label", report.labels, "Row labels (default: file stems)");
  cmd_report->add_option("--tables", report.tables, "Comparison table output path");
  cmd_report->add_option("--format", report.format, "Table format: csv, json, or text")
      ->check(CLI::IsMember({"csv", "json", "text"}))
      ->capture_default_str();
  cmd_report->add_option("--html", report.html_dir, "Directory for per-trace saliency pages");
  cmd_report->add_option("--histogram", report.histogram, "Rank-by-position CSV output path");
  cmd_report->add_option("--max-position", report.max_position,
                         "Histogram position limit (0 = all)")
      ->capture_default_str();
  cmd_report->callback([&] { runner = [&] { return run_report(report); }; });

  DumpArgs dump;
  auto* cmd_dump = app.add_subcommand(
      "dump", "Write per-position inspection JSON (stored top-k and continuations)");
  cmd_dump->add_option("--traces", dump.traces, "Trace file")->required();
  cmd_dump->add_option("--out", dump.out_dir, "Output directory")->required();
  cmd_dump->callback([&] { runner = [&] { return run_dump(dump); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    return runner();
  } catch (const PredictorError& e) {
    std::cerr << "predictor error: " << e.what() << '\n';
    return 3;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    // malformed input files surface as library exceptions; classify as data
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
