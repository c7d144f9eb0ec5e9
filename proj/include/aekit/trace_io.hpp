#pragma once

#include <fstream>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "aekit/errors.hpp"
#include "aekit/metric.hpp"
#include "aekit/text.hpp"

namespace aekit {

// Trace files are JSON Lines, one trace per line. Byte-carrying string
// fields ("text", topk texts, continuation text) encode raw bytes as code
// points U+0000..U+00FF, which is the identity for ASCII. Field names are a
// stable contract; see docs/formats.md.

inline nlohmann::ordered_json trace_to_json(const SequenceTrace& trace) {
  nlohmann::ordered_json j;
  j["schema"] = 1;
  j["source_id"] = trace.source_id;
  j["cutoff"] = trace.cutoff;
  j["first_token"] = to_string(trace.first_token);
  j["keystroke_unit"] = to_string(trace.unit);
  auto outcomes = nlohmann::ordered_json::array();
  for (const auto& o : trace.outcomes) {
    nlohmann::ordered_json jo;
    jo["position"] = o.position;
    jo["token"] = o.token;
    jo["text"] = bytes_to_utf8(o.text);
    jo["text_len"] = o.text_len;
    if (o.rank) {
      jo["rank"] = *o.rank;
      jo["prob"] = o.prob;
    }
    jo["bucket"] = to_string(o.bucket);
    jo["keystrokes"] = o.keystrokes;
    if (!o.topk.empty()) {
      auto topk = nlohmann::ordered_json::array();
      for (const auto& e : o.topk) {
        topk.push_back({{"id", e.id}, {"text", bytes_to_utf8(e.text)}, {"prob", e.prob}});
      }
      jo["topk"] = std::move(topk);
    }
    if (!o.continuation.empty()) {
      jo["continuation"] = {{"tokens", o.continuation},
                            {"text", bytes_to_utf8(o.continuation_text)}};
    }
    outcomes.push_back(std::move(jo));
  }
  j["outcomes"] = std::move(outcomes);
  return j;
}

inline SequenceTrace trace_from_json(const nlohmann::json& j) {
  if (!j.is_object() || j.value("schema", 0) != 1)
    throw DataError("trace line is not a schema-1 trace object");
  SequenceTrace trace;
  trace.source_id = j.value("source_id", "");
  trace.cutoff = j.at("cutoff").get<int>();
  trace.first_token = first_token_mode_from(j.value("first_token", "manual"));
  trace.unit = keystroke_unit_from(j.value("keystroke_unit", "char"));
  for (const auto& jo : j.at("outcomes")) {
    TokenOutcome o;
    o.position = jo.at("position").get<std::size_t>();
    o.token = jo.at("token").get<TokenId>();
    o.text = utf8_to_bytes(jo.at("text").get<std::string>());
    o.text_len = jo.at("text_len").get<int>();
    if (jo.contains("rank")) {
      o.rank = jo.at("rank").get<std::uint32_t>();
      o.prob = jo.value("prob", 0.0);
    }
    o.bucket = bucket_from(jo.at("bucket").get<std::string>());
    o.keystrokes = jo.at("keystrokes").get<int>();
    if (jo.contains("topk")) {
      for (const auto& e : jo.at("topk")) {
        o.topk.push_back({e.at("id").get<TokenId>(),
                          utf8_to_bytes(e.at("text").get<std::string>()),
                          e.at("prob").get<double>()});
      }
    }
    if (jo.contains("continuation")) {
      const auto& c = jo.at("continuation");
      o.continuation = c.at("tokens").get<std::vector<TokenId>>();
      o.continuation_text = utf8_to_bytes(c.at("text").get<std::string>());
    }
    trace.outcomes.push_back(std::move(o));
  }
  return trace;
}

inline void write_traces(std::ostream& out, std::span<const SequenceTrace> traces) {
  for (const auto& t : traces) out << trace_to_json(t).dump() << '\n';
}

inline void write_traces_file(const std::string& path, std::span<const SequenceTrace> traces) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot write trace file " + path);
  write_traces(f, traces);
}

inline std::vector<SequenceTrace> read_traces(std::istream& in) {
  std::vector<SequenceTrace> traces;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw DataError("trace line " + std::to_string(lineno) + " is not valid json: " + e.what());
    }
    traces.push_back(trace_from_json(j));
  }
  return traces;
}

inline std::vector<SequenceTrace> read_traces_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot read trace file " + path);
  return read_traces(f);
}

}  // namespace aekit
