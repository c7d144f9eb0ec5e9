#pragma once

#include <algorithm>
#include <cctype>
#include <map>
#include <regex>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "aekit/errors.hpp"
#include "aekit/text.hpp"
#include "aekit/vocab.hpp"

namespace aekit {

struct ClaimRecord {
  int number = 0;
  std::string text;               // body without the leading "N." marker
  std::vector<int> depends_on;    // ascending and unique; empty = independent
  bool multiple_dependent = false;
};

struct TrainingRecord {
  std::string text;
  bool reversed = false;
  std::string patent_id;
  std::vector<int> claim_numbers;
};

enum class MultipleDependentPolicy { kSkip, kStrict };
enum class ReverseUnit { kToken, kChar };

inline ReverseUnit reverse_unit_from(std::string_view s) {
  if (s == "token") return ReverseUnit::kToken;
  if (s == "char") return ReverseUnit::kChar;
  throw DataError("unknown reverse unit: " + std::string(s));
}

namespace detail {

// Dependency references recognized in the first sentence of a claim body.
// The "claims N or M" and "claims N to M" shapes mark multiple-dependent
// claims; otherwise the first "claim N" reference wins.
inline std::vector<int> extract_dependencies(const std::string& first_sentence) {
  static const std::regex or_pair(R"(\bclaims\s+(\d+)\s+or\s+(\d+))", std::regex::icase);
  static const std::regex range(
      "\\bclaims\\s+(\\d+)\\s*(?:-|–|—|\\s+to\\s+|\\s+through\\s+)\\s*(\\d+)",
      std::regex::icase);
  static const std::regex single(R"(\bclaim\s+(\d+))", std::regex::icase);

  std::smatch m;
  if (std::regex_search(first_sentence, m, or_pair))
    return {std::stoi(m[1]), std::stoi(m[2])};
  if (std::regex_search(first_sentence, m, range)) {
    const int lo = std::stoi(m[1]);
    const int hi = std::stoi(m[2]);
    if (hi < lo) throw DataError("claim range " + m[0].str() + " runs backwards");
    std::vector<int> deps;
    for (int n = lo; n <= hi; ++n) deps.push_back(n);
    return deps;
  }
  if (std::regex_search(first_sentence, m, single)) return {std::stoi(m[1])};
  return {};
}

inline std::string first_sentence_of(const std::string& body) {
  const auto dot = body.find('.');
  return dot == std::string::npos ? body : body.substr(0, dot + 1);
}

inline std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

}  // namespace detail

// Splits a plain-text document into numbered claims ("1. ...", "2. ...",
// incrementing from 1; a claim body may span several lines) and extracts the
// dependency edges from the reference phrasing. Claims whose first sentence
// mentions "claim" without matching any known reference pattern stay
// independent and produce a lint warning.
inline std::vector<ClaimRecord> parse_claims(std::string_view document,
                                             std::vector<std::string>* warnings = nullptr) {
  static const std::regex claim_start(R"(^\s*(\d+)\.\s+)");
  static const std::regex mentions_claim(R"(\bclaims?\b)", std::regex::icase);

  struct RawClaim {
    int number;
    std::string body;
  };
  std::vector<RawClaim> raw;

  std::size_t pos = 0;
  while (pos <= document.size()) {
    const auto eol = document.find('\n', pos);
    std::string line(document.substr(pos, eol == std::string_view::npos ? std::string_view::npos
                                                                        : eol - pos));
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::smatch m;
    if (std::regex_search(line, m, claim_start)) {
      raw.push_back({std::stoi(m[1]), line.substr(static_cast<std::size_t>(m[0].length()))});
    } else if (!raw.empty() && !detail::trim(line).empty()) {
      raw.back().body += "\n" + line;
    }
    if (eol == std::string_view::npos) break;
    pos = eol + 1;
  }

  if (raw.empty()) throw DataError("no numbered claims found in document");

  std::vector<ClaimRecord> claims;
  claims.reserve(raw.size());
  int expected = 1;
  for (auto& rc : raw) {
    if (rc.number != expected)
      throw DataError("claim numbering broken: found claim " + std::to_string(rc.number) +
                      " where claim " + std::to_string(expected) + " was expected");
    ++expected;

    ClaimRecord claim;
    claim.number = rc.number;
    claim.text = detail::trim(rc.body);
    const std::string sentence = detail::first_sentence_of(claim.text);
    claim.depends_on = detail::extract_dependencies(sentence);
    std::sort(claim.depends_on.begin(), claim.depends_on.end());
    claim.depends_on.erase(std::unique(claim.depends_on.begin(), claim.depends_on.end()),
                           claim.depends_on.end());
    for (int dep : claim.depends_on) {
      if (dep >= claim.number)
        throw DataError("claim " + std::to_string(claim.number) +
                        " references claim " + std::to_string(dep) +
                        "; claims may only refer backward");
      if (dep < 1)
        throw DataError("claim " + std::to_string(claim.number) + " references claim 0");
    }
    claim.multiple_dependent = claim.depends_on.size() > 1;
    if (claim.depends_on.empty() && warnings &&
        std::regex_search(claim.text, mentions_claim)) {
      warnings->push_back("claim " + std::to_string(claim.number) +
                          " mentions \"claim\" but no reference pattern matched; treated as independent");
    }
    claims.push_back(std::move(claim));
  }
  return claims;
}

// Inverse of parse_claims on well-formed claim sets.
inline std::string render_claims(std::span<const ClaimRecord> claims) {
  std::string out;
  for (const auto& c : claims) {
    out += std::to_string(c.number) + ". " + c.text + "\n\n";
  }
  return out;
}

// One singleton record per independent claim and one pair record per direct
// dependency edge, child joined to its parent with the dependency tag; a
// chain of claims becomes discrete pairs. Multiple-dependent claims are
// skipped with a warning (default) or rejected (strict policy).
inline std::vector<TrainingRecord> expand_pairs(std::span<const ClaimRecord> claims,
                                                MultipleDependentPolicy policy,
                                                const std::string& patent_id = "",
                                                std::vector<std::string>* warnings = nullptr) {
  std::map<int, const ClaimRecord*> by_number;
  for (const auto& c : claims) by_number[c.number] = &c;

  std::vector<TrainingRecord> records;
  for (const auto& c : claims) {
    if (c.depends_on.empty()) {
      records.push_back({c.text, false, patent_id, {c.number}});
    } else if (c.depends_on.size() == 1) {
      const auto parent = by_number.find(c.depends_on.front());
      if (parent == by_number.end())
        throw DataError("claim " + std::to_string(c.number) + " depends on missing claim " +
                        std::to_string(c.depends_on.front()));
      records.push_back({parent->second->text + std::string(kDepTag) + c.text,
                         false,
                         patent_id,
                         {parent->second->number, c.number}});
    } else {
      std::string deps;
      for (int d : c.depends_on) deps += (deps.empty() ? "" : ", ") + std::to_string(d);
      if (policy == MultipleDependentPolicy::kStrict)
        throw DataError("claim " + std::to_string(c.number) +
                        " is multiple-dependent (claims " + deps + ")");
      if (warnings)
        warnings->push_back("skipped multiple-dependent claim " + std::to_string(c.number) +
                            " (depends on claims " + deps + ")");
    }
  }
  return records;
}

// Appends a reversed duplicate of every record. The default unit reverses
// the token sequence under the given vocabulary, which keeps structural tags
// atomic; the char unit reverses UTF-8 scalar values literally.
inline std::vector<TrainingRecord> reverse_augment(std::span<const TrainingRecord> records,
                                                   const Vocab& vocab,
                                                   ReverseUnit unit = ReverseUnit::kToken) {
  std::vector<TrainingRecord> out(records.begin(), records.end());
  out.reserve(records.size() * 2);
  for (const auto& r : records) {
    TrainingRecord rev = r;
    rev.reversed = true;
    if (unit == ReverseUnit::kToken) {
      auto ids = vocab.encode(r.text);
      std::reverse(ids.begin(), ids.end());
      rev.text = vocab.decode(ids);
    } else {
      auto chars = utf8_chars(r.text);
      std::string t;
      t.reserve(r.text.size());
      for (auto it = chars.rbegin(); it != chars.rend(); ++it) t += *it;
      rev.text = std::move(t);
    }
    out.push_back(std::move(rev));
  }
  return out;
}

struct ParsedDocument {
  std::string patent_id;
  std::vector<ClaimRecord> claims;
  std::vector<std::string> warnings;
};

// Pre-parsed JSON Lines form: {"patent_id":str,"claims":[{"num":int,"text":str,
// "deps":[int...]}...]}.
inline ParsedDocument document_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("patent_id") || !j.contains("claims"))
    throw DataError("claim document json needs patent_id and claims fields");
  ParsedDocument doc;
  doc.patent_id = j.at("patent_id").get<std::string>();
  for (const auto& jc : j.at("claims")) {
    ClaimRecord c;
    c.number = jc.at("num").get<int>();
    c.text = jc.at("text").get<std::string>();
    if (jc.contains("deps")) c.depends_on = jc.at("deps").get<std::vector<int>>();
    std::sort(c.depends_on.begin(), c.depends_on.end());
    for (int dep : c.depends_on)
      if (dep >= c.number || dep < 1)
        throw DataError("claim " + std::to_string(c.number) + " of " + doc.patent_id +
                        " has an invalid dependency on claim " + std::to_string(dep));
    c.multiple_dependent = c.depends_on.size() > 1;
    doc.claims.push_back(std::move(c));
  }
  int expected = 1;
  for (const auto& c : doc.claims) {
    if (c.number != expected)
      throw DataError(doc.patent_id + ": claim numbering broken at claim " +
                      std::to_string(c.number));
    ++expected;
  }
  return doc;
}

struct AssembleOptions {
  bool expand = true;
  bool reverse = false;
  bool tags = false;
  MultipleDependentPolicy md_policy = MultipleDependentPolicy::kSkip;
  ReverseUnit reverse_unit = ReverseUnit::kToken;
};

struct AssembleOutcome {
  std::vector<TrainingRecord> records;
  nlohmann::ordered_json manifest;
};

// Full dataset pipeline over parsed documents: expansion, reverse
// augmentation, tag wrapping, and a manifest with counts and size stats.
inline AssembleOutcome assemble_dataset(std::span<const ParsedDocument> documents,
                                        const Vocab& vocab, const AssembleOptions& opt) {
  AssembleOutcome out;
  std::vector<std::string> warnings;
  std::size_t claims_total = 0;
  std::size_t skipped_md = 0;

  for (const auto& doc : documents) {
    claims_total += doc.claims.size();
    for (const auto& w : doc.warnings) warnings.push_back(doc.patent_id + ": " + w);

    std::vector<TrainingRecord> records;
    if (opt.expand) {
      std::vector<std::string> expand_warnings;
      records = expand_pairs(doc.claims, opt.md_policy, doc.patent_id, &expand_warnings);
      skipped_md += expand_warnings.size();
      for (const auto& w : expand_warnings) warnings.push_back(doc.patent_id + ": " + w);
    } else {
      for (const auto& c : doc.claims)
        records.push_back({c.text, false, doc.patent_id, {c.number}});
    }
    if (opt.reverse) records = reverse_augment(records, vocab, opt.reverse_unit);
    if (opt.tags) {
      for (auto& r : records)
        r.text = std::string(kStartOfClaimTag) + r.text + std::string(kEndOfClaimTag);
    }
    out.records.insert(out.records.end(), std::make_move_iterator(records.begin()),
                       std::make_move_iterator(records.end()));
  }

  std::size_t reversed = 0;
  std::size_t bytes_total = 0;
  std::size_t len_min = 0, len_max = 0;
  for (std::size_t i = 0; i < out.records.size(); ++i) {
    const auto& r = out.records[i];
    if (r.reversed) ++reversed;
    bytes_total += r.text.size();
    if (i == 0) {
      len_min = len_max = r.text.size();
    } else {
      len_min = std::min(len_min, r.text.size());
      len_max = std::max(len_max, r.text.size());
    }
  }

  nlohmann::ordered_json manifest;
  manifest["schema"] = 1;
  manifest["documents"] = documents.size();
  manifest["claims"] = claims_total;
  manifest["records"] = out.records.size();
  manifest["records_forward"] = out.records.size() - reversed;
  manifest["records_reversed"] = reversed;
  manifest["skipped_multiple_dependent"] = skipped_md;
  manifest["options"] = {{"expand", opt.expand},
                         {"reverse", opt.reverse},
                         {"tags", opt.tags},
                         {"md_policy",
                          opt.md_policy == MultipleDependentPolicy::kSkip ? "skip" : "strict"},
                         {"reverse_unit",
                          opt.reverse_unit == ReverseUnit::kToken ? "token" : "char"}};
  manifest["bytes_total"] = bytes_total;
  manifest["record_bytes_min"] = len_min;
  manifest["record_bytes_max"] = len_max;
  manifest["record_bytes_mean"] =
      out.records.empty() ? 0.0
                          : static_cast<double>(bytes_total) / static_cast<double>(out.records.size());
  manifest["warnings"] = warnings;
  out.manifest = std::move(manifest);
  return out;
}

// Dataset JSON Lines: {"text":str,"reversed":bool,"provenance":{"patent_id":str,
// "claims":[int...]}}. Text bytes use the U+0000..U+00FF encoding.
inline nlohmann::ordered_json record_to_json(const TrainingRecord& r) {
  nlohmann::ordered_json j;
  j["text"] = bytes_to_utf8(r.text);
  j["reversed"] = r.reversed;
  j["provenance"] = {{"patent_id", r.patent_id}, {"claims", r.claim_numbers}};
  return j;
}

inline TrainingRecord record_from_json(const nlohmann::json& j) {
  TrainingRecord r;
  r.text = utf8_to_bytes(j.at("text").get<std::string>());
  r.reversed = j.value("reversed", false);
  if (j.contains("provenance")) {
    const auto& p = j.at("provenance");
    r.patent_id = p.value("patent_id", "");
    if (p.contains("claims")) r.claim_numbers = p.at("claims").get<std::vector<int>>();
  }
  return r;
}

}  // namespace aekit
