#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "aekit/errors.hpp"
#include "aekit/predictor.hpp"

namespace aekit {

// Client for the one-position-per-request ranking protocol:
//
//   POST <endpoint>/v1/rank
//   request  {"context":[int...], "target":int, "k":int}
//   response {"target_rank":int>=1, "target_prob":float,
//             "topk":[{"id":int,"text":str,"prob":float}...]}
//
// target_rank is the full-vocabulary rank computed server-side. Replies are
// validated against the PredictionResult invariants; an inconsistent reply
// is always an error, never a silent correction. Transport failures are
// retried, validation failures are not.
struct RemoteOptions {
  int timeout_ms = 30000;
  int retries = 2;  // additional attempts after the first
};

class RemotePredictor final : public Predictor {
 public:
  explicit RemotePredictor(std::string endpoint, RemoteOptions opt = RemoteOptions())
      : options_(opt) {
    if (endpoint.empty()) throw PredictorError("predictor endpoint is empty");
    while (endpoint.size() > 1 && endpoint.back() == '/') endpoint.pop_back();
    const auto scheme_end = endpoint.find("://");
    const auto path_start =
        endpoint.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
    if (path_start == std::string::npos) {
      base_ = endpoint;
    } else {
      base_ = endpoint.substr(0, path_start);
      prefix_ = endpoint.substr(path_start);
    }
  }

  PredictionResult rank_and_topk(std::span<const TokenId> context, TokenId target,
                                 int k) const override {
    if (context.empty()) throw PredictorError("remote: context must be non-empty");
    if (k < 1) throw PredictorError("remote: k must be >= 1");

    nlohmann::json req;
    req["context"] = std::vector<TokenId>(context.begin(), context.end());
    req["target"] = target;
    req["k"] = k;
    const std::string body = req.dump();

    std::string last_failure = "no attempt made";
    for (int attempt = 0; attempt <= options_.retries; ++attempt) {
      httplib::Client client(base_);
      client.set_connection_timeout(std::chrono::milliseconds(options_.timeout_ms));
      client.set_read_timeout(std::chrono::milliseconds(options_.timeout_ms));
      client.set_write_timeout(std::chrono::milliseconds(options_.timeout_ms));

      auto res = client.Post(prefix_ + "/v1/rank", body, "application/json");
      if (!res) {
        last_failure = "transport error: " + httplib::to_string(res.error());
        continue;
      }
      if (res->status >= 500) {
        last_failure = "server status " + std::to_string(res->status);
        continue;
      }
      if (res->status != 200)
        throw PredictorError("remote predictor returned status " + std::to_string(res->status));
      return validate_reply(res->body, target, k);
    }
    throw PredictorError("remote predictor unreachable after " +
                         std::to_string(options_.retries + 1) + " attempts (" + last_failure +
                         ")");
  }

  std::string name() const override { return "remote(" + base_ + prefix_ + ")"; }

 private:
  static PredictionResult validate_reply(const std::string& body, TokenId target, int k) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(body);
    } catch (const nlohmann::json::exception& e) {
      throw PredictorError(std::string("remote reply is not valid json: ") + e.what());
    }
    if (!j.is_object() || !j.contains("target_rank") || !j.contains("target_prob") ||
        !j.contains("topk") || !j["topk"].is_array())
      throw PredictorError("remote reply is missing target_rank/target_prob/topk");

    PredictionResult r;
    if (!j["target_rank"].is_number_integer() || j["target_rank"].get<std::int64_t>() < 1)
      throw PredictorError("remote reply: target_rank must be an integer >= 1");
    r.target_rank = j["target_rank"].get<std::uint32_t>();
    r.target_prob = j["target_prob"].get<double>();
    if (!(r.target_prob >= 0.0 && r.target_prob <= 1.0))
      throw PredictorError("remote reply: target_prob outside [0, 1]");

    for (const auto& e : j["topk"]) {
      if (!e.is_object() || !e.contains("id") || !e.contains("prob"))
        throw PredictorError("remote reply: malformed topk entry");
      TopEntry entry;
      entry.id = e["id"].get<TokenId>();
      entry.text = e.value("text", "");
      entry.prob = e["prob"].get<double>();
      if (!(entry.prob >= 0.0 && entry.prob <= 1.0))
        throw PredictorError("remote reply: topk probability outside [0, 1]");
      r.topk.push_back(std::move(entry));
    }

    if (r.topk.size() > static_cast<std::size_t>(k))
      throw PredictorError("remote reply: topk longer than requested k");
    for (std::size_t i = 1; i < r.topk.size(); ++i)
      if (r.topk[i].prob > r.topk[i - 1].prob)
        throw PredictorError("remote reply: topk probabilities are not non-increasing");

    if (r.target_rank <= static_cast<std::uint32_t>(k)) {
      if (r.target_rank > r.topk.size())
        throw PredictorError("remote reply: target_rank " + std::to_string(r.target_rank) +
                             " claims a top-" + std::to_string(k) +
                             " hit but the topk list has only " + std::to_string(r.topk.size()) +
                             " entries");
      const TopEntry& at_rank = r.topk[r.target_rank - 1];
      if (at_rank.id != target)
        throw PredictorError("remote reply: topk entry at target_rank " +
                             std::to_string(r.target_rank) + " is token " +
                             std::to_string(at_rank.id) + ", not the target " +
                             std::to_string(target));
      if (std::abs(at_rank.prob - r.target_prob) > 1e-6)
        throw PredictorError("remote reply: target_prob disagrees with the topk entry at its rank");
    }
    return r;
  }

  RemoteOptions options_;
  std::string base_;
  std::string prefix_;
};

}  // namespace aekit
