#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "aekit/errors.hpp"
#include "aekit/metric.hpp"
#include "aekit/text.hpp"

namespace aekit {

// ---- Model comparison tables ----

struct LabeledBreakdown {
  std::string label;
  KeystrokeBreakdown breakdown;
};

enum class TableFormat { kCsv, kJson, kText };

inline TableFormat table_format_from(std::string_view s) {
  if (s == "csv") return TableFormat::kCsv;
  if (s == "json") return TableFormat::kJson;
  if (s == "text") return TableFormat::kText;
  throw DataError("unknown table format: " + std::string(s));
}

// Renders the evaluation table: label, AE ratio, total with autocomplete,
// top-10 keys, out-of-top-10 keys, top-1 keys, total without autocomplete.
// Every row must come from the same evaluation text set (identical manual
// totals); AE cells are recomputed from the row totals at emission time, so
// a drifted breakdown is an error rather than a wrong cell. The best-AE row
// is flagged.
inline std::string emit_tables(std::span<const LabeledBreakdown> rows, TableFormat format) {
  if (rows.empty()) throw DataError("cannot emit a table with zero rows");
  const std::uint64_t reference_without = rows.front().breakdown.total_without;
  std::size_t best = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& b = rows[i].breakdown;
    if (b.total_without != reference_without)
      throw DataError("row \"" + rows[i].label +
                      "\" was evaluated on a different text set (total w/o autocomplete " +
                      std::to_string(b.total_without) + " vs " +
                      std::to_string(reference_without) + ")");
    const double recomputed = ae_ratio(b.total_with, b.total_without);
    if (std::abs(recomputed - b.ae) > 1e-12)
      throw DataError("row \"" + rows[i].label + "\" carries an AE ratio that its totals do not");
    if (b.ae > rows[best].breakdown.ae) best = i;
  }

  std::ostringstream out;
  switch (format) {
    case TableFormat::kCsv: {
      out << "label,ae_ratio,total_with_autocomplete,keys_top10,keys_out_of_top10,keys_top1,"
             "total_without_autocomplete,best\n";
      for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& b = rows[i].breakdown;
        out << rows[i].label << ',' << format_percent(b.ae) << ',' << b.total_with << ','
            << b.keys_top10 << ',' << b.keys_out << ',' << b.keys_top1 << ','
            << b.total_without << ',' << (i == best ? 1 : 0) << '\n';
      }
      break;
    }
    case TableFormat::kJson: {
      nlohmann::ordered_json j = nlohmann::ordered_json::array();
      for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& b = rows[i].breakdown;
        j.push_back({{"label", rows[i].label},
                     {"ae_ratio", format_percent(b.ae)},
                     {"ae", b.ae},
                     {"total_with_autocomplete", b.total_with},
                     {"keys_top10", b.keys_top10},
                     {"keys_out_of_top10", b.keys_out},
                     {"keys_top1", b.keys_top1},
                     {"total_without_autocomplete", b.total_without},
                     {"mrr", b.mrr},
                     {"best", i == best}});
      }
      out << j.dump(2) << '\n';
      break;
    }
    case TableFormat::kText: {
      out << "label        AE ratio   total w/   top 10     out of 10  top 1      total w/o\n";
      for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& b = rows[i].breakdown;
        char line[256];
        std::snprintf(line, sizeof line, "%-12s %-10s %-10llu %-10llu %-10llu %-10llu %-10llu%s\n",
                      rows[i].label.c_str(), format_percent(b.ae).c_str(),
                      static_cast<unsigned long long>(b.total_with),
                      static_cast<unsigned long long>(b.keys_top10),
                      static_cast<unsigned long long>(b.keys_out),
                      static_cast<unsigned long long>(b.keys_top1),
                      static_cast<unsigned long long>(b.total_without),
                      i == best ? "  *best" : "");
        out << line;
      }
      break;
    }
  }
  return out.str();
}

// ---- Rank distribution by token position ----

struct PositionHistogramRow {
  std::size_t position = 0;
  std::uint64_t top1 = 0;
  std::uint64_t top2_cutoff = 0;
  std::uint64_t out = 0;
  std::uint64_t reaching = 0;  // traces long enough to contribute here
};

struct PositionHistogram {
  std::vector<PositionHistogramRow> rows;  // only positions some trace reaches
};

inline constexpr std::size_t kAllPositions = std::numeric_limits<std::size_t>::max();

// Counts ranked buckets per evaluated position across traces. Position 0 is
// the unranked first token and never appears; at every emitted row the
// bucket counts sum to the number of traces reaching that position.
inline PositionHistogram rank_histogram(std::span<const SequenceTrace> traces,
                                        std::size_t max_position = kAllPositions) {
  if (traces.empty()) throw DataError("cannot build a histogram from zero traces");
  std::size_t longest = 0;
  for (const auto& t : traces) longest = std::max(longest, t.outcomes.size());
  if (longest == 0) return {};
  std::size_t limit = longest - 1;
  if (max_position != kAllPositions) limit = std::min(limit, max_position);

  PositionHistogram h;
  h.rows.resize(limit + 1);
  for (std::size_t p = 0; p <= limit; ++p) h.rows[p].position = p;
  for (const auto& t : traces) {
    for (const auto& o : t.outcomes) {
      if (!o.rank || o.position > limit) continue;
      auto& row = h.rows[o.position];
      ++row.reaching;
      switch (o.bucket) {
        case Bucket::kTop1: ++row.top1; break;
        case Bucket::kTop2Cutoff: ++row.top2_cutoff; break;
        case Bucket::kOut: ++row.out; break;
        case Bucket::kFirstToken: break;
      }
    }
  }
  std::erase_if(h.rows, [](const PositionHistogramRow& r) { return r.reaching == 0; });
  return h;
}

inline std::string histogram_csv(const PositionHistogram& h) {
  std::ostringstream out;
  out << "position,top1,top2_10,out,reaching\n";
  for (const auto& r : h.rows)
    out << r.position << ',' << r.top1 << ',' << r.top2_cutoff << ',' << r.out << ','
        << r.reaching << '\n';
  return out.str();
}

// ---- Saliency page ----

// Self-contained HTML for one trace: the header reports the AE ratio, every
// token sits in a span whose class is its bucket name, and the title
// attribute carries rank, keystrokes, and the stored top-k list. Class names
// (top1, top2_10, out, first_token) are part of the golden-file contract.
inline std::string render_saliency_html(const SequenceTrace& trace) {
  const std::uint64_t with = trace.total_with();
  const std::uint64_t without = trace.total_without();
  const std::string ae = format_percent(ae_ratio(with, without));

  std::ostringstream out;
  out << "<!DOCTYPE html>\n<html>\n<head>\n<meta charset=\"utf-8\">\n<title>"
      << html_escape(trace.source_id) << "</title>\n<style>\n"
      << "body { font-family: Georgia, serif; margin: 2rem auto; max-width: 60rem; }\n"
      << ".tokens { white-space: pre-wrap; line-height: 1.8; font-size: 1.05rem; }\n"
      << ".summary { color: #333; }\n"
      << "span.top1 { background: #c9f2c9; }\n"
      << "span.top2_10 { background: #2e8b57; color: #ffffff; }\n"
      << "span.out { background: #f4a6a6; }\n"
      << "span.first_token { background: #eeeeee; }\n"
      << "</style>\n</head>\n<body>\n"
      << "<h1>" << html_escape(trace.source_id) << "</h1>\n"
      << "<p class=\"summary\">AE ratio: " << ae << " &mdash; " << with
      << " keystrokes with autocomplete, " << without << " without (cutoff "
      << trace.cutoff << ")</p>\n<div class=\"tokens\">";

  for (const auto& o : trace.outcomes) {
    std::string title;
    if (o.rank) {
      title = "rank " + std::to_string(*o.rank) + ", " + std::to_string(o.keystrokes) +
              (o.keystrokes == 1 ? " keystroke" : " keystrokes");
      if (!o.topk.empty()) {
        title += " | top-" + std::to_string(o.topk.size()) + ":";
        for (const auto& e : o.topk) {
          char prob[32];
          std::snprintf(prob, sizeof prob, "%.3f", e.prob);
          title += " " + (e.text.empty() ? "#" + std::to_string(e.id) : e.text) + " (" + prob + ")";
        }
      }
    } else {
      title = "first token, " + std::to_string(o.keystrokes) +
              (o.keystrokes == 1 ? " keystroke" : " keystrokes");
    }
    out << "<span class=\"" << to_string(o.bucket) << "\" title=\"" << html_escape(title)
        << "\">" << html_escape(o.text) << "</span>";
  }
  out << "</div>\n</body>\n</html>\n";
  return out.str();
}

// ---- Inspection dump ----

// Per-position JSON with the stored top-k and any sampled continuation; the
// machine-readable counterpart of the saliency page. Requires a trace
// captured with stored top-k lists.
inline nlohmann::ordered_json dump_inspection(const SequenceTrace& trace) {
  for (const auto& o : trace.outcomes) {
    if (o.rank && o.topk.empty())
      throw DataError("trace \"" + trace.source_id +
                      "\" was captured without stored top-k lists; re-run evaluate with "
                      "--store-topk");
  }

  nlohmann::ordered_json j;
  j["schema"] = 1;
  j["source_id"] = trace.source_id;
  j["cutoff"] = trace.cutoff;
  j["ae_ratio"] = ae_ratio(trace.total_with(), trace.total_without());
  auto positions = nlohmann::ordered_json::array();
  for (const auto& o : trace.outcomes) {
    nlohmann::ordered_json jp;
    jp["position"] = o.position;
    jp["prompt_tokens"] = o.position;  // evaluated tokens preceding this one
    jp["token"] = o.token;
    jp["text"] = bytes_to_utf8(o.text);
    if (o.rank) {
      jp["rank"] = *o.rank;
      jp["prob"] = o.prob;
      auto topk = nlohmann::ordered_json::array();
      for (const auto& e : o.topk)
        topk.push_back({{"id", e.id}, {"text", bytes_to_utf8(e.text)}, {"prob", e.prob}});
      jp["topk"] = std::move(topk);
      if (!o.continuation.empty()) {
        jp["continuation"] = {{"tokens", o.continuation},
                              {"text", bytes_to_utf8(o.continuation_text)}};
      }
    } else {
      jp["first_token"] = true;
    }
    positions.push_back(std::move(jp));
  }
  j["positions"] = std::move(positions);
  return j;
}

}  // namespace aekit
