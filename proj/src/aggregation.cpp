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

#include "ctcrelax/aggregation.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ctcrelax/errors.hpp"

namespace ctcrelax {
namespace {

void check_finite(std::span<const double> values) {
  for (double v : values) {
    if (!std::isfinite(v)) throw ValueError("logits must be finite");
  }
}

template <typename T>
std::vector<double> normalize_impl(std::span<const T> v) {
  double sq = 0.0;
  for (T x : v) sq += static_cast<double>(x) * static_cast<double>(x);
  const double norm = std::sqrt(sq);
  std::vector<double> out(v.begin(), v.end());
  if (norm <= kNormEpsilon) return out;
  for (double& x : out) x /= norm;
  return out;
}

template <typename T>
std::vector<double> project_impl(std::span<const T> h,
                                 const ProjectionHead& head) {
  if (h.size() != head.hidden_dim()) {
    throw ShapeError("hidden vector length " + std::to_string(h.size()) +
                     " != head hidden_dim " +
                     std::to_string(head.hidden_dim()));
  }
  std::vector<double> out(head.vocab_size());
  const auto bias = head.bias();
  for (std::size_t c = 0; c < out.size(); ++c) {
    const auto w = head.row(c);
    double acc = 0.0;
    for (std::size_t d = 0; d < h.size(); ++d) {
      acc += static_cast<double>(w[d]) * static_cast<double>(h[d]);
    }
    out[c] = acc + static_cast<double>(bias[c]);
  }
  return out;
}

void check_compatible(const LayerStack& stack, const ProjectionHead& head) {
  if (stack.hidden_dim() != head.hidden_dim()) {
    throw ShapeError("stack hidden_dim " + std::to_string(stack.hidden_dim()) +
                     " != head hidden_dim " +
                     std::to_string(head.hidden_dim()));
  }
}

}  // namespace

LogitFrameSeq::LogitFrameSeq(std::size_t num_frames, std::size_t vocab_size,
                             std::vector<double> values)
    : num_frames_(num_frames),
      vocab_size_(vocab_size),
      values_(std::move(values)) {
  if (num_frames_ == 0 || vocab_size_ == 0) {
    throw ShapeError("logit matrix dimensions must be positive");
  }
  if (values_.size() != num_frames_ * vocab_size_) {
    throw ShapeError("logit matrix length != T*C");
  }
  check_finite(values_);
}

LogitFrameSeq::LogitFrameSeq(std::size_t num_frames, std::size_t vocab_size)
    : LogitFrameSeq(num_frames, vocab_size,
                    std::vector<double>(num_frames * vocab_size, 0.0)) {}

void AggregationConfig::validate(std::size_t num_layers) const {
  if (num_aggregated_layers < 1 || num_aggregated_layers > num_layers) {
    throw ConfigError("number of aggregated layers must be in [1, " +
                      std::to_string(num_layers) + "], got " +
                      std::to_string(num_aggregated_layers));
  }
  if (!(beta >= 0.0 && beta <= 1.0)) {
    throw ConfigError("beta must be in [0,1]");
  }
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw ConfigError("temperature must be positive");
  }
}

std::vector<double> l2_normalize(std::span<const double> v) {
  return normalize_impl(v);
}

std::vector<double> l2_normalize(std::span<const float> v) {
  return normalize_impl(v);
}

std::vector<double> project(std::span<const float> h,
                            const ProjectionHead& head) {
  return project_impl(h, head);
}

std::vector<double> project(std::span<const double> h,
                            const ProjectionHead& head) {
  return project_impl(h, head);
}

LogitFrameSeq baseline_logits(const LayerStack& stack,
                              const ProjectionHead& head) {
  check_compatible(stack, head);
  LogitFrameSeq out(stack.num_frames(), head.vocab_size());
  for (std::size_t t = 0; t < stack.num_frames(); ++t) {
    const auto logits = project(stack.top_frame(t), head);
    std::ranges::copy(logits, out.row_mut(t).begin());
  }
  return out;
}

LogitFrameSeq aggregate_logits(const LayerStack& stack,
                               const ProjectionHead& head, std::size_t m) {
  check_compatible(stack, head);
  if (m < 1 || m > stack.num_layers()) {
    throw ConfigError("number of aggregated layers must be in [1, " +
                      std::to_string(stack.num_layers()) + "], got " +
                      std::to_string(m));
  }
  const std::size_t num_classes = head.vocab_size();
  const std::size_t dim = head.hidden_dim();
  const auto bias = head.bias();
  LogitFrameSeq out(stack.num_frames(), num_classes);
  std::vector<double> acc(num_classes);
  for (std::size_t t = 0; t < stack.num_frames(); ++t) {
    std::ranges::fill(acc, 0.0);
    for (std::size_t n = stack.num_layers() - m; n < stack.num_layers(); ++n) {
      const auto h = l2_normalize(stack.frame(n, t));
      for (std::size_t c = 0; c < num_classes; ++c) {
        const auto w = head.row(c);
        double dot = 0.0;
        for (std::size_t d = 0; d < dim; ++d) {
          dot += static_cast<double>(w[d]) * h[d];
        }
        acc[c] += dot;
      }
    }
    auto row = out.row_mut(t);
    for (std::size_t c = 0; c < num_classes; ++c) {
      row[c] = acc[c] + static_cast<double>(bias[c]);
    }
  }
  return out;
}

LogitFrameSeq interpolate(const LogitFrameSeq& base, const LogitFrameSeq& agg,
                          double beta) {
  if (base.num_frames() != agg.num_frames() ||
      base.vocab_size() != agg.vocab_size()) {
    throw ShapeError("interpolated logit matrices differ in shape");
  }
  if (!(beta >= 0.0 && beta <= 1.0)) {
    throw ConfigError("beta must be in [0,1]");
  }
  std::vector<double> values(base.values().size());
  const auto b = base.values();
  const auto a = agg.values();
  for (std::size_t i = 0; i < values.size(); ++i) {
    values[i] = beta * b[i] + (1.0 - beta) * a[i];
  }
  return LogitFrameSeq(base.num_frames(), base.vocab_size(),
                       std::move(values));
}

std::vector<double> log_softmax(std::span<const double> logits,
                                double temperature) {
  if (!(temperature > 0.0)) throw ConfigError("temperature must be positive");
  std::vector<double> out(logits.size());
  if (logits.empty()) return out;
  double hi = logits[0] / temperature;
  for (double x : logits) hi = std::max(hi, x / temperature);
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = logits[i] / temperature - hi;
    sum += std::exp(out[i]);
  }
  const double log_sum = std::log(sum);
  for (double& x : out) x -= log_sum;
  return out;
}

std::vector<double> softmax(std::span<const double> logits,
                            double temperature) {
  auto out = log_softmax(logits, temperature);
  for (double& x : out) x = std::exp(x);
  return out;
}

LogitFrameSeq log_softmax(const LogitFrameSeq& logits, double temperature) {
  LogitFrameSeq out(logits.num_frames(), logits.vocab_size());
  for (std::size_t t = 0; t < logits.num_frames(); ++t) {
    std::ranges::copy(log_softmax(logits.row(t), temperature),
                      out.row_mut(t).begin());
  }
  return out;
}

LogitFrameSeq combined_logits(const LayerStack& stack,
                              const ProjectionHead& head,
                              const AggregationConfig& cfg) {
  cfg.validate(stack.num_layers());
  auto base = baseline_logits(stack, head);
  if (cfg.beta == 1.0) return base;
  return interpolate(base, aggregate_logits(stack, head,
                                            cfg.num_aggregated_layers),
                     cfg.beta);
}

}  // namespace ctcrelax
