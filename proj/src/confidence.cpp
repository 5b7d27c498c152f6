// Copyright 2026 The ctcrelax Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "ctcrelax/confidence.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <string>

#include "ctcrelax/ctc.hpp"
#include "ctcrelax/errors.hpp"

namespace ctcrelax {
namespace {

void check_compatible(const LayerStack& stack, const ProjectionHead& head) {
  if (stack.hidden_dim() != head.hidden_dim()) {
    throw ShapeError("stack hidden_dim " + std::to_string(stack.hidden_dim()) +
                     " != head hidden_dim " +
                     std::to_string(head.hidden_dim()));
  }
}

}  // namespace

FrameConfidence frame_confidence(std::span<const double> probs) {
  if (probs.empty()) throw ValueError("empty distribution");
  double sum = 0.0;
  FrameConfidence out;
  for (double p : probs) {
    if (!(p >= 0.0)) throw ValueError("negative probability");
    sum += p;
    out.max_prob = std::max(out.max_prob, p);
    if (p > 0.0) out.entropy_nats -= p * std::log(p);
  }
  if (std::abs(sum - 1.0) > 1e-6) {
    throw ValueError("distribution sums to " + std::to_string(sum));
  }
  return out;
}

LayerConfidenceProfile layer_confidence_profile(const LayerStack& stack,
                                                const ProjectionHead& head) {
  check_compatible(stack, head);
  LayerConfidenceProfile profile;
  const double frames = static_cast<double>(stack.num_frames());
  for (std::size_t n = 0; n < stack.num_layers(); ++n) {
    double max_sum = 0.0;
    double entropy_sum = 0.0;
    for (std::size_t t = 0; t < stack.num_frames(); ++t) {
      const auto probs = softmax(project(stack.frame(n, t), head));
      const auto fc = frame_confidence(probs);
      max_sum += fc.max_prob;
      entropy_sum += fc.entropy_nats;
    }
    profile.per_layer.push_back({n + 1, max_sum / frames, entropy_sum / frames});
  }
  return profile;
}

LayerConfidenceProfile mean_profile(
    std::span<const LayerConfidenceProfile> profiles) {
  if (profiles.empty()) throw ShapeError("no profiles to average");
  const std::size_t layers = profiles.front().per_layer.size();
  LayerConfidenceProfile out;
  out.per_layer.resize(layers);
  for (const auto& p : profiles) {
    if (p.per_layer.size() != layers) {
      throw ShapeError("profiles have different layer counts");
    }
    for (std::size_t n = 0; n < layers; ++n) {
      out.per_layer[n].layer_index = p.per_layer[n].layer_index;
      out.per_layer[n].mean_max_prob += p.per_layer[n].mean_max_prob;
      out.per_layer[n].mean_entropy_nats += p.per_layer[n].mean_entropy_nats;
    }
  }
  const double count = static_cast<double>(profiles.size());
  for (auto& l : out.per_layer) {
    l.mean_max_prob /= count;
    l.mean_entropy_nats /= count;
  }
  return out;
}

TokenEvolution token_evolution(const LayerStack& stack,
                               const ProjectionHead& head) {
  check_compatible(stack, head);
  TokenEvolution out;
  out.grid.resize(stack.num_layers());
  for (std::size_t n = 0; n < stack.num_layers(); ++n) {
    out.grid[n].reserve(stack.num_frames());
    for (std::size_t t = 0; t < stack.num_frames(); ++t) {
      out.grid[n].push_back(argmax(project(stack.frame(n, t), head)));
    }
  }
  return out;
}

std::vector<std::vector<TokenProb>> top_k_trace(const LogitFrameSeq& logits,
                                                std::size_t k) {
  if (k < 1 || k > logits.vocab_size()) {
    throw ConfigError("k must be in [1, " + std::to_string(logits.vocab_size()) +
                      "]");
  }
  std::vector<std::vector<TokenProb>> trace;
  trace.reserve(logits.num_frames());
  std::vector<std::size_t> order(logits.vocab_size());
  for (std::size_t t = 0; t < logits.num_frames(); ++t) {
    const auto probs = softmax(logits.row(t));
    std::iota(order.begin(), order.end(), 0);
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k),
                      order.end(), [&](std::size_t a, std::size_t b) {
                        if (probs[a] != probs[b]) return probs[a] > probs[b];
                        return a < b;
                      });
    auto& row = trace.emplace_back();
    for (std::size_t i = 0; i < k; ++i) row.push_back({order[i], probs[order[i]]});
  }
  return trace;
}

void write_profile_csv(const LayerConfidenceProfile& profile,
                       std::ostream& sink) {
  sink << "layer,mean_max_prob,mean_entropy\n";
  char buf[96];
  for (const auto& l : profile.per_layer) {
    std::snprintf(buf, sizeof(buf), "%zu,%.6f,%.6f\n", l.layer_index,
                  l.mean_max_prob, l.mean_entropy_nats);
    sink << buf;
  }
}

}  // namespace ctcrelax
