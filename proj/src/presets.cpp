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

#include "ctcrelax/presets.hpp"

#include <algorithm>
#include <array>

namespace ctcrelax {
namespace {

constexpr std::array<AggregationPreset, 22> kPresets{{
    {"w2v-base-10m", 12, 0.25, 4},
    {"w2v-base-1h", 12, 0.25, 4},
    {"w2v-base-10h", 12, 0.3, 4},
    {"w2v-base-100h", 12, 0.5, 5},
    {"w2v-base-360h", 12, 0.7, 4},
    {"w2v-base-960h", 12, 0.75, 6},
    {"w2v-large-10m", 24, 0.5, 6},
    {"w2v-large-1h", 24, 0.5, 6},
    {"w2v-large-10h", 24, 0.65, 6},
    {"w2v-large-100h", 24, 0.7, 6},
    {"w2v-large-360h", 24, 0.7, 6},
    {"w2v-large-960h", 24, 0.75, 12},
    {"hubert-base-10m", 12, 0.5, 4},
    {"hubert-base-1h", 12, 0.5, 5},
    {"hubert-base-10h", 12, 0.6, 5},
    {"hubert-base-100h", 12, 0.65, 5},
    {"hubert-base-360h", 12, 0.7, 5},
    {"hubert-base-960h", 12, 0.7, 6},
    {"hubert-large-100h", 24, 0.7, 10},
    {"hubert-large-360h", 24, 0.75, 12},
    {"hubert-large-960h", 24, 0.75, 13},
    {"hubert-xl-960h", 48, 0.8, 24},
}};

}  // namespace

std::span<const AggregationPreset> aggregation_presets() { return kPresets; }

const AggregationPreset* find_preset(std::string_view name) {
  const auto it = std::ranges::find(kPresets, name, &AggregationPreset::name);
  return it == kPresets.end() ? nullptr : &*it;
}

}  // namespace ctcrelax
