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

#include "ctcrelax/tensor_io.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "ctcrelax/errors.hpp"

namespace ctcrelax {
namespace {

constexpr std::array<char, 4> kStackMagic{'S', 'S', 'L', 'A'};
constexpr std::array<char, 4> kHeadMagic{'S', 'S', 'L', 'P'};
constexpr std::size_t kReadChunk = 1 << 16;

void check_finite(std::span<const float> values, const char* what) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      throw ValueError(std::string(what) + ": non-finite value at element " +
                       std::to_string(i));
    }
  }
}

class LittleEndianWriter {
 public:
  explicit LittleEndianWriter(std::ostream& sink) : sink_(sink) {}

  void bytes(std::span<const char> data) {
    sink_.write(data.data(), static_cast<std::streamsize>(data.size()));
    if (!sink_) throw IoError("write failed");
    written_ += data.size();
  }

  void u32(std::uint32_t v) {
    std::array<char, 4> b;
    for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    bytes(b);
  }

  void f32s(std::span<const float> values) {
    std::vector<char> buf;
    buf.reserve(std::min(values.size(), kReadChunk) * 4);
    for (std::size_t i = 0; i < values.size(); ++i) {
      const auto bits = std::bit_cast<std::uint32_t>(values[i]);
      for (int k = 0; k < 4; ++k) {
        buf.push_back(static_cast<char>((bits >> (8 * k)) & 0xff));
      }
      if (buf.size() >= kReadChunk * 4) {
        bytes(buf);
        buf.clear();
      }
    }
    bytes(buf);
  }

  std::size_t written() const { return written_; }

 private:
  std::ostream& sink_;
  std::size_t written_ = 0;
};

class LittleEndianReader {
 public:
  explicit LittleEndianReader(std::istream& source) : source_(source) {}

  void magic(const std::array<char, 4>& expected, const char* what) {
    std::array<char, 4> got{};
    source_.read(got.data(), 4);
    if (source_.gcount() != 4 || got != expected) {
      throw FormatError(std::string("bad magic: expected ") + what);
    }
  }

  std::uint32_t u32() {
    std::array<unsigned char, 4> b{};
    source_.read(reinterpret_cast<char*>(b.data()), 4);
    if (source_.gcount() != 4) throw TruncationError("truncated header");
    return static_cast<std::uint32_t>(b[0]) |
           (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) |
           (static_cast<std::uint32_t>(b[3]) << 24);
  }

  // Reads in bounded chunks so a corrupt header cannot trigger a huge
  // allocation before the payload is known to exist.
  std::vector<float> f32s(std::uint64_t count) {
    std::vector<float> out;
    std::vector<unsigned char> buf;
    std::uint64_t remaining = count;
    while (remaining > 0) {
      const std::size_t n = static_cast<std::size_t>(
          std::min<std::uint64_t>(remaining, kReadChunk));
      buf.resize(n * 4);
      source_.read(reinterpret_cast<char*>(buf.data()),
                   static_cast<std::streamsize>(buf.size()));
      if (static_cast<std::size_t>(source_.gcount()) != buf.size()) {
        throw TruncationError("payload shorter than header promises: expected " +
                              std::to_string(count) + " floats");
      }
      for (std::size_t i = 0; i < n; ++i) {
        const std::uint32_t bits =
            static_cast<std::uint32_t>(buf[4 * i]) |
            (static_cast<std::uint32_t>(buf[4 * i + 1]) << 8) |
            (static_cast<std::uint32_t>(buf[4 * i + 2]) << 16) |
            (static_cast<std::uint32_t>(buf[4 * i + 3]) << 24);
        out.push_back(std::bit_cast<float>(bits));
      }
      remaining -= n;
    }
    return out;
  }

  void expect_end() {
    if (source_.peek() != std::char_traits<char>::eof()) {
      throw FormatError("trailing bytes after payload");
    }
  }

 private:
  std::istream& source_;
};

void check_version(std::uint32_t version) {
  if (version != kFormatVersion) {
    throw VersionError("unsupported format version " + std::to_string(version));
  }
}

std::uint32_t checked_u32(std::size_t v, const char* what) {
  if (v > 0xffffffffu) throw FormatError(std::string(what) + " exceeds u32");
  return static_cast<std::uint32_t>(v);
}

template <typename Fn>
auto with_input(const std::filesystem::path& path, std::ios::openmode mode,
                Fn&& fn) {
  std::ifstream in(path, mode);
  if (!in) throw IoError("cannot open " + path.string());
  return fn(in);
}

template <typename Fn>
void with_output(const std::filesystem::path& path, std::ios::openmode mode,
                 Fn&& fn) {
  std::ofstream out(path, mode | std::ios::trunc);
  if (!out) throw IoError("cannot create " + path.string());
  fn(out);
  out.flush();
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace

LayerStack::LayerStack(std::size_t num_layers, std::size_t num_frames,
                       std::size_t hidden_dim, std::vector<float> data)
    : num_layers_(num_layers),
      num_frames_(num_frames),
      hidden_dim_(hidden_dim),
      data_(std::move(data)) {
  if (num_layers_ == 0 || num_frames_ == 0 || hidden_dim_ == 0) {
    throw ShapeError("layer stack dimensions must be positive");
  }
  if (data_.size() != num_layers_ * num_frames_ * hidden_dim_) {
    throw ShapeError("layer stack data length " + std::to_string(data_.size()) +
                     " != N*T*D");
  }
  check_finite(data_, "layer stack");
}

std::span<const float> LayerStack::layer(std::size_t n) const {
  if (n >= num_layers_) throw ShapeError("layer index out of range");
  return std::span<const float>(data_).subspan(n * num_frames_ * hidden_dim_,
                                               num_frames_ * hidden_dim_);
}

std::span<const float> LayerStack::frame(std::size_t n, std::size_t t) const {
  if (n >= num_layers_ || t >= num_frames_) {
    throw ShapeError("layer/frame index out of range");
  }
  return std::span<const float>(data_).subspan(
      (n * num_frames_ + t) * hidden_dim_, hidden_dim_);
}

ProjectionHead::ProjectionHead(std::size_t vocab_size, std::size_t hidden_dim,
                               std::vector<float> weights,
                               std::vector<float> bias)
    : vocab_size_(vocab_size),
      hidden_dim_(hidden_dim),
      weights_(std::move(weights)),
      bias_(std::move(bias)) {
  if (vocab_size_ == 0 || hidden_dim_ == 0) {
    throw ShapeError("projection head dimensions must be positive");
  }
  if (weights_.size() != vocab_size_ * hidden_dim_ ||
      bias_.size() != vocab_size_) {
    throw ShapeError("projection head weights/bias length mismatch");
  }
  check_finite(weights_, "projection head weights");
  check_finite(bias_, "projection head bias");
}

Vocabulary::Vocabulary(std::vector<std::string> tokens)
    : tokens_(std::move(tokens)) {
  bool has_blank = false;
  bool has_sep = false;
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (!index_.emplace(tokens_[i], i).second) {
      throw ParseError("duplicate token '" + tokens_[i] + "' at line " +
                       std::to_string(i + 1));
    }
    if (tokens_[i] == kBlankToken) {
      blank_ = i;
      has_blank = true;
    } else if (tokens_[i] == kSeparatorToken) {
      separator_ = i;
      has_sep = true;
    }
  }
  if (!has_blank) throw ParseError("vocabulary is missing <blank>");
  if (!has_sep) throw ParseError("vocabulary is missing <sep>");
}

std::size_t Vocabulary::find(std::string_view token) const {
  const auto it = index_.find(std::string(token));
  return it == index_.end() ? tokens_.size() : it->second;
}

std::size_t write_layer_stack(const LayerStack& stack, std::ostream& sink) {
  LittleEndianWriter w(sink);
  w.bytes(kStackMagic);
  w.u32(kFormatVersion);
  w.u32(checked_u32(stack.num_layers(), "N"));
  w.u32(checked_u32(stack.num_frames(), "T"));
  w.u32(checked_u32(stack.hidden_dim(), "D"));
  w.f32s(stack.data());
  return w.written();
}

LayerStack read_layer_stack(std::istream& source) {
  LittleEndianReader r(source);
  r.magic(kStackMagic, "SSLA");
  check_version(r.u32());
  const std::uint64_t n = r.u32();
  const std::uint64_t t = r.u32();
  const std::uint64_t d = r.u32();
  if (n == 0 || t == 0 || d == 0) {
    throw FormatError("layer stack header has a zero dimension");
  }
  auto data = r.f32s(n * t * d);
  r.expect_end();
  check_finite(data, "layer stack");
  return LayerStack(n, t, d, std::move(data));
}

std::size_t write_projection_head(const ProjectionHead& head,
                                  std::ostream& sink) {
  LittleEndianWriter w(sink);
  w.bytes(kHeadMagic);
  w.u32(kFormatVersion);
  w.u32(checked_u32(head.vocab_size(), "C"));
  w.u32(checked_u32(head.hidden_dim(), "D"));
  w.f32s(head.weights());
  w.f32s(head.bias());
  return w.written();
}

ProjectionHead read_projection_head(std::istream& source) {
  LittleEndianReader r(source);
  r.magic(kHeadMagic, "SSLP");
  check_version(r.u32());
  const std::uint64_t c = r.u32();
  const std::uint64_t d = r.u32();
  if (c == 0 || d == 0) {
    throw FormatError("projection head header has a zero dimension");
  }
  auto weights = r.f32s(c * d);
  auto bias = r.f32s(c);
  r.expect_end();
  check_finite(weights, "projection head weights");
  check_finite(bias, "projection head bias");
  return ProjectionHead(c, d, std::move(weights), std::move(bias));
}

Vocabulary read_vocabulary(std::istream& source) {
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(source, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    tokens.push_back(line);
  }
  return Vocabulary(std::move(tokens));
}

void write_vocabulary(const Vocabulary& vocab, std::ostream& sink) {
  for (const auto& token : vocab.tokens()) sink << token << '\n';
  if (!sink) throw IoError("write failed");
}

EvalManifest read_manifest(std::istream& source,
                           const std::filesystem::path& base_dir) {
  EvalManifest manifest;
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(source, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto where = "manifest line " + std::to_string(line_no) + ": ";
    nlohmann::json record;
    try {
      record = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(where + e.what());
    }
    ManifestEntry entry;
    try {
      entry.utterance_id = record.at("id").get<std::string>();
      entry.stack_path = record.at("stack").get<std::string>();
      entry.reference = record.at("reference").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(where + e.what());
    }
    if (entry.utterance_id.empty()) throw ParseError(where + "empty id");
    if (!seen.insert(entry.utterance_id).second) {
      throw ParseError(where + "duplicate id '" + entry.utterance_id + "'");
    }
    if (entry.stack_path.is_relative() && !base_dir.empty()) {
      entry.stack_path = base_dir / entry.stack_path;
    }
    manifest.entries.push_back(std::move(entry));
  }
  return manifest;
}

void write_manifest(const EvalManifest& manifest, std::ostream& sink) {
  for (const auto& e : manifest.entries) {
    nlohmann::ordered_json record;
    record["id"] = e.utterance_id;
    record["stack"] = e.stack_path.generic_string();
    record["reference"] = e.reference;
    sink << record.dump() << '\n';
  }
  if (!sink) throw IoError("write failed");
}

LayerStack load_layer_stack(const std::filesystem::path& path) {
  return with_input(path, std::ios::binary,
                    [](std::istream& in) { return read_layer_stack(in); });
}

void save_layer_stack(const LayerStack& stack,
                      const std::filesystem::path& path) {
  with_output(path, std::ios::binary,
              [&](std::ostream& out) { write_layer_stack(stack, out); });
}

ProjectionHead load_projection_head(const std::filesystem::path& path) {
  return with_input(path, std::ios::binary,
                    [](std::istream& in) { return read_projection_head(in); });
}

void save_projection_head(const ProjectionHead& head,
                          const std::filesystem::path& path) {
  with_output(path, std::ios::binary,
              [&](std::ostream& out) { write_projection_head(head, out); });
}

Vocabulary load_vocabulary(const std::filesystem::path& path) {
  return with_input(path, std::ios::in,
                    [](std::istream& in) { return read_vocabulary(in); });
}

void save_vocabulary(const Vocabulary& vocab,
                     const std::filesystem::path& path) {
  with_output(path, std::ios::out,
              [&](std::ostream& out) { write_vocabulary(vocab, out); });
}

EvalManifest load_manifest(const std::filesystem::path& path) {
  return with_input(path, std::ios::in, [&](std::istream& in) {
    return read_manifest(in, path.parent_path());
  });
}

void save_manifest(const EvalManifest& manifest,
                   const std::filesystem::path& path) {
  with_output(path, std::ios::out,
              [&](std::ostream& out) { write_manifest(manifest, out); });
}

}  // namespace ctcrelax
