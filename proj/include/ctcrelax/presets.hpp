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

#include <cstddef>
#include <span>
#include <string_view>

namespace ctcrelax {

// Tuned (beta, M) pairs for public fine-tuned checkpoints, keyed
// "<family>-<size>-<labelled hours>", e.g. "w2v-base-960h".
struct AggregationPreset {
  std::string_view name;
  std::size_t num_layers;  // transformer depth of the checkpoint
  double beta;
  std::size_t num_aggregated_layers;
};

std::span<const AggregationPreset> aggregation_presets();
// nullptr when unknown.
const AggregationPreset* find_preset(std::string_view name);

}  // namespace ctcrelax
