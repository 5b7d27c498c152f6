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

#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "ctcrelax/confidence.hpp"
#include "ctcrelax/ctc.hpp"
#include "ctcrelax/errors.hpp"
#include "fixtures.hpp"

using namespace ctcrelax;

namespace {

LayerStack random_stack(std::mt19937_64& rng, std::size_t n, std::size_t t,
                        std::size_t d) {
  std::normal_distribution<float> g(0.0f, 1.0f);
  std::vector<float> data(n * t * d);
  for (float& v : data) v = g(rng);
  return LayerStack(n, t, d, std::move(data));
}

}  // namespace

TEST_CASE("frame confidence") {
  const std::vector<double> one_hot{0, 1, 0};
  auto fc = frame_confidence(one_hot);
  CHECK(fc.max_prob == 1.0);
  CHECK(fc.entropy_nats == 0.0);

  const std::vector<double> uniform(4, 0.25);
  fc = frame_confidence(uniform);
  CHECK(fc.max_prob == 0.25);
  CHECK(fc.entropy_nats == doctest::Approx(std::log(4.0)).epsilon(1e-12));
  CHECK(fc.entropy_nats == doctest::Approx(1.3863).epsilon(1e-4));

  const std::vector<double> half{0.5, 0.25, 0.25};
  fc = frame_confidence(half);
  CHECK(fc.max_prob == 0.5);
  CHECK(fc.entropy_nats == doctest::Approx(1.0397).epsilon(1e-4));
  const std::vector<double> permuted{0.25, 0.25, 0.5};
  CHECK(frame_confidence(permuted).entropy_nats == fc.entropy_nats);

  const std::vector<double> bad{0.5, 0.4};
  CHECK_THROWS_AS(frame_confidence(bad), ValueError);
  const std::vector<double> negative{1.5, -0.5};
  CHECK_THROWS_AS(frame_confidence(negative), ValueError);
}

TEST_CASE("layer profile") {
  SUBCASE("single layer equals averaged frame confidence") {
    std::mt19937_64 rng(40);
    const auto stack = random_stack(rng, 1, 5, 4);
    const auto head = testing::identity_head(4);
    const auto profile = layer_confidence_profile(stack, head);
    REQUIRE(profile.per_layer.size() == 1);
    double mp = 0, ent = 0;
    for (std::size_t t = 0; t < 5; ++t) {
      const auto p = softmax(project(stack.frame(0, t), head));
      const auto fc = frame_confidence(p);
      mp += fc.max_prob / 5;
      ent += fc.entropy_nats / 5;
    }
    CHECK(profile.per_layer[0].layer_index == 1);
    CHECK(profile.per_layer[0].mean_max_prob == doctest::Approx(mp).epsilon(1e-12));
    CHECK(profile.per_layer[0].mean_entropy_nats == doctest::Approx(ent).epsilon(1e-12));
  }
  SUBCASE("identical layers give identical entries") {
    const std::vector<float> layer{0.3f, -1.0f, 2.0f, 0.1f, 0.0f, 1.0f};
    std::vector<float> data;
    for (int i = 0; i < 3; ++i) data.insert(data.end(), layer.begin(), layer.end());
    const auto profile =
        layer_confidence_profile(LayerStack(3, 2, 3, data), testing::identity_head(3));
    for (const auto& entry : profile.per_layer) {
      CHECK(entry.mean_max_prob == profile.per_layer[0].mean_max_prob);
      CHECK(entry.mean_entropy_nats == profile.per_layer[0].mean_entropy_nats);
    }
    CHECK(profile.per_layer[2].layer_index == 3);
  }
  SUBCASE("scaled top layer is sharper") {
    const std::vector<float> low{0.3f, -0.2f, 0.5f, 0.1f, 0.4f, -0.3f};
    std::vector<float> data = low;
    for (float v : low) data.push_back(10.0f * v);
    const auto profile =
        layer_confidence_profile(LayerStack(2, 2, 3, data), testing::identity_head(3));
    CHECK(profile.per_layer[1].mean_max_prob > profile.per_layer[0].mean_max_prob);
    CHECK(profile.per_layer[1].mean_entropy_nats < profile.per_layer[0].mean_entropy_nats);
  }
  SUBCASE("bounds hold on random stacks") {
    std::mt19937_64 rng(42);
    for (int i = 0; i < 20; ++i) {
      const auto stack = random_stack(rng, 4, 6, 5);
      const auto profile = layer_confidence_profile(stack, testing::identity_head(5));
      for (const auto& e : profile.per_layer) {
        CHECK(e.mean_max_prob >= 1.0 / 5 - 1e-12);
        CHECK(e.mean_max_prob <= 1.0 + 1e-12);
        CHECK(e.mean_entropy_nats >= -1e-12);
        CHECK(e.mean_entropy_nats <= std::log(5.0) + 1e-12);
      }
    }
  }
}

TEST_CASE("mean profile") {
  LayerConfidenceProfile a{{{1, 0.5, 1.0}, {2, 0.7, 0.4}}};
  LayerConfidenceProfile b{{{1, 0.7, 0.6}, {2, 0.9, 0.2}}};
  const std::vector<LayerConfidenceProfile> both{a, b};
  const auto m = mean_profile(both);
  CHECK(m.per_layer[0].mean_max_prob == doctest::Approx(0.6));
  CHECK(m.per_layer[1].mean_entropy_nats == doctest::Approx(0.3));
  const std::vector<LayerConfidenceProfile> mismatch{a, LayerConfidenceProfile{{{1, 0.5, 0.5}}}};
  CHECK_THROWS_AS(mean_profile(mismatch), ShapeError);
  CHECK_THROWS_AS(mean_profile({}), ShapeError);
}

TEST_CASE("token evolution") {
  // Hidden state one-hot at dim k selects token k under an identity head.
  const LayerStack stack(2, 3, 3, {1, 0, 0, 0, 1, 0, 0, 0, 1,  //
                                   0, 0, 1, 1, 0, 0, 0.5f, 0.5f, 0});
  const auto ev = token_evolution(stack, testing::identity_head(3));
  CHECK(ev.grid[0] == std::vector<std::size_t>{0, 1, 2});
  CHECK(ev.grid[1] == std::vector<std::size_t>{2, 0, 0});

  std::mt19937_64 rng(44);
  for (int i = 0; i < 20; ++i) {
    const auto s = random_stack(rng, 3, 7, 4);
    const ProjectionHead head = [&] {
      std::normal_distribution<float> g;
      std::vector<float> w(5 * 4), b(5);
      for (float& v : w) v = g(rng);
      for (float& v : b) v = g(rng);
      return ProjectionHead(5, 4, w, b);
    }();
    const auto grid = token_evolution(s, head).grid;
    for (std::size_t n = 0; n < 3; ++n) {
      for (std::size_t t = 0; t < 7; ++t) {
        const auto logits = project(s.frame(n, t), head);
        std::size_t best = 0;
        for (std::size_t c = 1; c < logits.size(); ++c) {
          if (logits[c] > logits[best]) best = c;
        }
        CHECK(grid[n][t] == best);
      }
    }
    // Top row is the baseline best path.
    const auto path = best_path(baseline_logits(s, head));
    for (std::size_t t = 0; t < 7; ++t) {
      CHECK(grid[2][t] == static_cast<std::size_t>(path.frames[t]));
    }
  }
}

TEST_CASE("top-k trace") {
  const LogitFrameSeq logits(2, 3, {1.0, 3.0, 2.0, 0.0, 0.0, 0.0});
  const auto full = top_k_trace(logits, 3);
  CHECK(full[0][0].token == 1);
  CHECK(full[0][1].token == 2);
  CHECK(full[0][2].token == 0);
  double mass = 0;
  for (const auto& tp : full[0]) mass += tp.prob;
  CHECK(std::abs(mass - 1.0) < 1e-6);
  CHECK(full[0][0].prob >= full[0][1].prob);
  CHECK(full[0][1].prob >= full[0][2].prob);

  const auto two = top_k_trace(logits, 2);
  CHECK(two[1][0].token == 0);
  CHECK(two[1][1].token == 1);
  CHECK(two[1][0].prob == doctest::Approx(1.0 / 3));

  const auto one = top_k_trace(logits, 1);
  CHECK(one[0][0].token == argmax(logits.row(0)));
  CHECK_THROWS_AS(top_k_trace(logits, 0), ConfigError);
  CHECK_THROWS_AS(top_k_trace(logits, 4), ConfigError);
}

TEST_CASE("profile csv") {
  LayerConfidenceProfile p{{{1, 0.5, 1.25}, {2, 0.75, 0.5}}};
  std::ostringstream out;
  write_profile_csv(p, out);
  CHECK(out.str().rfind("layer,mean_max_prob,mean_entropy\n1,0.500000,1.250000\n2,0.750000,0.500000\n", 0) == 0);
}
