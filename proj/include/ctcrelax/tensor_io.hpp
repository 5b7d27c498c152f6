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

// On-disk formats for per-layer hidden states (.ssla), projection heads
// (.sslp), vocabularies (.vocab) and evaluation manifests (.manifest).
//
// Binary layout (all fields little-endian):
//
//   .ssla   "SSLA" u32 version=1  u32 N  u32 T  u32 D  f32[N*T*D]
//   .sslp   "SSLP" u32 version=1  u32 C  u32 D  f32[C*D] f32[C]
//
// Stack payload is layer-major then time-major, so one layer is a
// contiguous T*D block. Head weights are row-major [C][D].

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace ctcrelax {

inline constexpr std::uint32_t kFormatVersion = 1;

// Hidden states H[layer][frame][dim]; layer 0 is the lowest transformer
// layer, layer N-1 the top.
class LayerStack {
 public:
  LayerStack(std::size_t num_layers, std::size_t num_frames,
             std::size_t hidden_dim, std::vector<float> data);

  std::size_t num_layers() const { return num_layers_; }
  std::size_t num_frames() const { return num_frames_; }
  std::size_t hidden_dim() const { return hidden_dim_; }

  std::span<const float> data() const { return data_; }
  std::span<const float> layer(std::size_t n) const;
  std::span<const float> frame(std::size_t n, std::size_t t) const;
  std::span<const float> top_frame(std::size_t t) const {
    return frame(num_layers_ - 1, t);
  }

  friend bool operator==(const LayerStack&, const LayerStack&) = default;

 private:
  std::size_t num_layers_;
  std::size_t num_frames_;
  std::size_t hidden_dim_;
  std::vector<float> data_;
};

// Affine map R^D -> R^C: logits = weights * h + bias.
class ProjectionHead {
 public:
  ProjectionHead(std::size_t vocab_size, std::size_t hidden_dim,
                 std::vector<float> weights, std::vector<float> bias);

  std::size_t vocab_size() const { return vocab_size_; }
  std::size_t hidden_dim() const { return hidden_dim_; }
  std::span<const float> weights() const { return weights_; }
  std::span<const float> bias() const { return bias_; }
  std::span<const float> row(std::size_t c) const {
    return std::span<const float>(weights_).subspan(c * hidden_dim_,
                                                    hidden_dim_);
  }

  friend bool operator==(const ProjectionHead&,
                         const ProjectionHead&) = default;

 private:
  std::size_t vocab_size_;
  std::size_t hidden_dim_;
  std::vector<float> weights_;
  std::vector<float> bias_;
};

inline constexpr std::string_view kBlankToken = "<blank>";
inline constexpr std::string_view kSeparatorToken = "<sep>";

class Vocabulary {
 public:
  explicit Vocabulary(std::vector<std::string> tokens);

  std::size_t size() const { return tokens_.size(); }
  std::size_t blank_index() const { return blank_; }
  std::size_t separator_index() const { return separator_; }
  const std::string& token(std::size_t i) const { return tokens_.at(i); }
  const std::vector<std::string>& tokens() const { return tokens_; }
  // Returns size() when the token is not in the vocabulary.
  std::size_t find(std::string_view token) const;

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::size_t> index_;
  std::size_t blank_ = 0;
  std::size_t separator_ = 0;
};

struct ManifestEntry {
  std::string utterance_id;
  std::filesystem::path stack_path;
  std::string reference;

  friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

struct EvalManifest {
  std::vector<ManifestEntry> entries;
};

std::size_t write_layer_stack(const LayerStack& stack, std::ostream& sink);
LayerStack read_layer_stack(std::istream& source);

std::size_t write_projection_head(const ProjectionHead& head,
                                  std::ostream& sink);
ProjectionHead read_projection_head(std::istream& source);

// One token per line; "<blank>" and "<sep>" must each occur exactly once.
Vocabulary read_vocabulary(std::istream& source);
void write_vocabulary(const Vocabulary& vocab, std::ostream& sink);

// JSON Lines, one object per utterance:
//   {"id": "utt1", "stack": "utt1.ssla", "reference": "the cat sat"}
// Relative stack paths are resolved against `base_dir`. Stack files are not
// opened here; a missing file surfaces as a per-utterance failure when the
// manifest is evaluated.
EvalManifest read_manifest(std::istream& source,
                           const std::filesystem::path& base_dir = {});
void write_manifest(const EvalManifest& manifest, std::ostream& sink);

// File-path conveniences; IoError when the file cannot be opened.
LayerStack load_layer_stack(const std::filesystem::path& path);
void save_layer_stack(const LayerStack& stack,
                      const std::filesystem::path& path);
ProjectionHead load_projection_head(const std::filesystem::path& path);
void save_projection_head(const ProjectionHead& head,
                          const std::filesystem::path& path);
Vocabulary load_vocabulary(const std::filesystem::path& path);
void save_vocabulary(const Vocabulary& vocab,
                     const std::filesystem::path& path);
EvalManifest load_manifest(const std::filesystem::path& path);
void save_manifest(const EvalManifest& manifest,
                   const std::filesystem::path& path);

}  // namespace ctcrelax
