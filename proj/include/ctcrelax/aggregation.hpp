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
#include <vector>

#include "ctcrelax/tensor_io.hpp"

namespace ctcrelax {

// T x C matrix of logits (or log-probabilities), row per frame.
class LogitFrameSeq {
 public:
  LogitFrameSeq(std::size_t num_frames, std::size_t vocab_size,
                std::vector<double> values);
  // Zero-filled; callers fill rows through row_mut().
  LogitFrameSeq(std::size_t num_frames, std::size_t vocab_size);

  std::size_t num_frames() const { return num_frames_; }
  std::size_t vocab_size() const { return vocab_size_; }
  std::span<const double> values() const { return values_; }
  std::span<const double> row(std::size_t t) const {
    return std::span<const double>(values_).subspan(t * vocab_size_,
                                                    vocab_size_);
  }
  std::span<double> row_mut(std::size_t t) {
    return std::span<double>(values_).subspan(t * vocab_size_, vocab_size_);
  }
  double at(std::size_t t, std::size_t c) const {
    return values_[t * vocab_size_ + c];
  }

  friend bool operator==(const LogitFrameSeq&, const LogitFrameSeq&) = default;

 private:
  std::size_t num_frames_;
  std::size_t vocab_size_;
  std::vector<double> values_;
};

struct AggregationConfig {
  std::size_t num_aggregated_layers = 1;  // M, counted from the top layer
  double beta = 1.0;                      // weight of the top-layer logits
  double temperature = 1.0;

  // ConfigError unless 1 <= M <= num_layers, beta in [0,1], temperature > 0.
  void validate(std::size_t num_layers) const;
};

// Norms at or below this are treated as zero vectors.
inline constexpr double kNormEpsilon = 1e-12;

std::vector<double> l2_normalize(std::span<const double> v);
std::vector<double> l2_normalize(std::span<const float> v);

// weights * h + bias. ShapeError on dimension mismatch.
std::vector<double> project(std::span<const float> h,
                            const ProjectionHead& head);
std::vector<double> project(std::span<const double> h,
                            const ProjectionHead& head);

// Top-layer logits, no normalization.
LogitFrameSeq baseline_logits(const LayerStack& stack,
                              const ProjectionHead& head);

// Per frame: sum over the top M layers of weights * (H_n / ||H_n||), with
// the bias added once after the sum.
LogitFrameSeq aggregate_logits(const LayerStack& stack,
                               const ProjectionHead& head, std::size_t m);

// beta * base + (1 - beta) * agg.
LogitFrameSeq interpolate(const LogitFrameSeq& base, const LogitFrameSeq& agg,
                          double beta);

std::vector<double> log_softmax(std::span<const double> logits,
                                double temperature = 1.0);
std::vector<double> softmax(std::span<const double> logits,
                            double temperature = 1.0);
LogitFrameSeq log_softmax(const LogitFrameSeq& logits,
                          double temperature = 1.0);

// baseline / aggregate / interpolate in one call. With beta == 1 the
// aggregated branch is skipped and the baseline is returned untouched.
LogitFrameSeq combined_logits(const LayerStack& stack,
                              const ProjectionHead& head,
                              const AggregationConfig& cfg);

}  // namespace ctcrelax
