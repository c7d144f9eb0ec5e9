#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "aekit/errors.hpp"
#include "aekit/predictor.hpp"

namespace aekit {

struct SampleParams {
  int max_tokens = 128;
  double top_p = 0.9;
  double temperature = 0.75;
  std::uint64_t seed = 0;
  std::optional<TokenId> stop_token;  // generation ends after emitting it
};

namespace detail {
// Uniform double in [0, 1) with a fixed construction, so a seed pins the
// sampled sequence regardless of standard library internals.
inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}
}  // namespace detail

// Nucleus (top-p) sampling with temperature over the predictor's
// distribution; temperature 0 selects the argmax (ties by ascending id).
// Generation stops after max_tokens or after emitting the stop token.
inline std::vector<TokenId> sample_continuation(const DistributionPredictor& pred,
                                                std::span<const TokenId> prompt,
                                                const SampleParams& params = {}) {
  if (prompt.empty()) throw PredictorError("sampling prompt must be non-empty");
  if (!(params.top_p > 0.0 && params.top_p <= 1.0))
    throw PredictorError("top_p must lie in (0, 1]");
  if (params.temperature < 0.0) throw PredictorError("temperature must be >= 0");

  std::mt19937_64 rng(params.seed);
  std::vector<TokenId> context(prompt.begin(), prompt.end());
  std::vector<TokenId> out;
  out.reserve(std::max(0, params.max_tokens));

  for (int step = 0; step < params.max_tokens; ++step) {
    const std::vector<double> probs = pred.distribution(context);
    TokenId next = 0;

    if (params.temperature == 0.0) {
      for (std::size_t t = 1; t < probs.size(); ++t)
        if (probs[t] > probs[next]) next = static_cast<TokenId>(t);
    } else {
      std::vector<double> weights(probs.size());
      const double inv_t = 1.0 / params.temperature;
      for (std::size_t t = 0; t < probs.size(); ++t) weights[t] = std::pow(probs[t], inv_t);

      std::vector<TokenId> idx(probs.size());
      std::iota(idx.begin(), idx.end(), TokenId{0});
      std::sort(idx.begin(), idx.end(), [&](TokenId a, TokenId b) {
        if (weights[a] != weights[b]) return weights[a] > weights[b];
        return a < b;
      });

      double total = 0.0;
      for (double w : weights) total += w;
      const double threshold = params.top_p * total;

      double nucleus_mass = 0.0;
      std::size_t nucleus_size = 0;
      while (nucleus_size < idx.size() && nucleus_mass < threshold)
        nucleus_mass += weights[idx[nucleus_size++]];

      double u = detail::uniform01(rng) * nucleus_mass;
      next = idx[nucleus_size - 1];
      for (std::size_t i = 0; i < nucleus_size; ++i) {
        u -= weights[idx[i]];
        if (u <= 0.0) {
          next = idx[i];
          break;
        }
      }
    }

    out.push_back(next);
    if (params.stop_token && next == *params.stop_token) break;
    context.push_back(next);
  }
  return out;
}

}  // namespace aekit
