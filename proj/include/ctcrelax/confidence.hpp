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

#pragma once

// Layer probing: each layer's raw hidden states go through the projection
// head and a softmax, then per-frame confidence is averaged.

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "ctcrelax/aggregation.hpp"
#include "ctcrelax/tensor_io.hpp"

namespace ctcrelax {

struct FrameConfidence {
  double max_prob = 0.0;
  double entropy_nats = 0.0;
};

struct LayerConfidence {
  std::size_t layer_index = 0;  // 1 = lowest layer
  double mean_max_prob = 0.0;
  double mean_entropy_nats = 0.0;
};

struct LayerConfidenceProfile {
  std::vector<LayerConfidence> per_layer;  // lowest layer first
};

// Tokens[layer][frame], layer 0 lowest.
struct TokenEvolution {
  std::vector<std::vector<std::size_t>> grid;
};

struct TokenProb {
  std::size_t token = 0;
  double prob = 0.0;
};

// ValueError unless probs are nonnegative and sum to 1 within 1e-6.
FrameConfidence frame_confidence(std::span<const double> probs);

LayerConfidenceProfile layer_confidence_profile(const LayerStack& stack,
                                                const ProjectionHead& head);

// Layer-wise mean of several utterance profiles; ShapeError if their layer
// counts differ or the list is empty.
LayerConfidenceProfile mean_profile(
    std::span<const LayerConfidenceProfile> profiles);

TokenEvolution token_evolution(const LayerStack& stack,
                               const ProjectionHead& head);

// Per frame, the k most probable tokens, descending (ties: lower index).
std::vector<std::vector<TokenProb>> top_k_trace(const LogitFrameSeq& logits,
                                                std::size_t k);

// layer,mean_max_prob,mean_entropy
void write_profile_csv(const LayerConfidenceProfile& profile,
                       std::ostream& sink);

}  // namespace ctcrelax
