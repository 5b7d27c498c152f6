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

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ctcrelax/cli.hpp"
#include "fixtures.hpp"

using namespace ctcrelax;

namespace {

struct Run {
  int code = -1;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "ctcrelax");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  Run r;
  r.code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

nlohmann::json header_of(const std::string& err) {
  const std::string tag = "# effective parameters: ";
  const auto at = err.find(tag);
  REQUIRE(at != std::string::npos);
  const auto end = err.find('\n', at);
  return nlohmann::json::parse(err.substr(at + tag.size(), end - at - tag.size()));
}

struct Workspace {
  testing::SyntheticCorpus synth;
  std::filesystem::path dir;
  testing::CorpusFiles files;

  explicit Workspace(const std::string& name, std::size_t layers = 6)
      : synth(testing::make_synthetic_corpus({4, layers, 2, 7})),
        dir(testing::scratch_dir(name)) {
    files = testing::write_corpus_files(synth, dir);
  }

  std::vector<std::string> models() const {
    return {"--head", files.head.string(), "--vocab", files.vocab.string(),
            "--lm", files.lm.string()};
  }
};

std::vector<std::string> cat(std::vector<std::string> a,
                             const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

}  // namespace

TEST_CASE("decode with preset values") {
  const Workspace ws("cli_decode", 12);
  const auto r = run(cat({"decode", "--stack", ws.files.stacks[0].string()},
                         cat(ws.models(), {"--beta", "0.75", "--layers", "6",
                                           "--beam", "500"})));
  CHECK(r.code == kExitOk);
  CHECK(!r.out.empty());
  CHECK(r.out.back() == '\n');
  const auto header = header_of(r.err);
  CHECK(header["subcommand"] == "decode");
  CHECK(header["parameters"]["beta"]["value"] == 0.75);
  CHECK(header["parameters"]["beta"]["source"] == "flag");
  CHECK(header["parameters"]["beam"]["value"] == 500);
  CHECK(header["parameters"]["lm-weight"]["source"] == "default");

  const auto p = run(cat({"decode", "--stack", ws.files.stacks[0].string(),
                          "--preset", "w2v-base-960h"},
                         ws.models()));
  CHECK(p.code == kExitOk);
  CHECK(p.out == r.out);
  const auto ph = header_of(p.err);
  CHECK(ph["parameters"]["beta"]["value"] == 0.75);
  CHECK(ph["parameters"]["beta"]["source"] == "preset");
  CHECK(ph["parameters"]["layers"]["value"] == 6);
}

TEST_CASE("usage errors exit with 2") {
  const Workspace ws("cli_usage");
  const std::string stack = ws.files.stacks[0].string();

  auto r = run(cat({"decode", "--stack", stack, "--beta", "1.5"}, ws.models()));
  CHECK(r.code == kExitUsage);
  CHECK(r.err.find("beta must be in [0,1]") != std::string::npos);

  r = run(cat({"decode", "--stack", stack, "--bogus", "1"}, ws.models()));
  CHECK(r.code == kExitUsage);

  r = run({"frobnicate"});
  CHECK(r.code == kExitUsage);


  r = run(cat({"decode", "--stack", stack, "--preset", "no-such-model"}, ws.models()));
  CHECK(r.code == kExitUsage);

  const auto empty = ws.dir / "empty.manifest";
  std::ofstream(empty).flush();
  r = run(cat({"evaluate", "--manifest", empty.string()}, ws.models()));
  CHECK(r.code == kExitUsage);

  r = run({"profile-confidence", "--head", ws.files.head.string()});
  CHECK(r.code == kExitUsage);
}

TEST_CASE("module errors exit with 1") {
  const Workspace ws("cli_failure");
  auto r = run(cat({"decode", "--stack", (ws.dir / "nope.ssla").string()},
                   ws.models()));
  CHECK(r.code == kExitFailure);
  CHECK(r.err.find("error:") != std::string::npos);
  // M larger than the stack depth is only known once the stack is read.
  r = run(cat({"decode", "--stack", ws.files.stacks[0].string(), "--layers", "99"},
              ws.models()));
  CHECK(r.code == kExitFailure);
}

TEST_CASE("jobs falls back to the environment") {
  const Workspace ws("cli_env");
  ::setenv("CTCRELAX_JOBS", "3", 1);
  auto r = run(cat({"evaluate", "--manifest", ws.files.manifest.string()}, ws.models()));
  ::unsetenv("CTCRELAX_JOBS");
  CHECK(r.code == kExitOk);
  auto h = header_of(r.err);
  CHECK(h["parameters"]["jobs"]["value"] == 3);
  CHECK(h["parameters"]["jobs"]["source"] == "env");

  r = run(cat({"evaluate", "--manifest", ws.files.manifest.string(), "--jobs", "2"},
              ws.models()));
  h = header_of(r.err);
  CHECK(h["parameters"]["jobs"]["source"] == "flag");
}

TEST_CASE("evaluate writes a report") {
  const Workspace ws("cli_evaluate");
  const auto out = ws.dir / "report.csv";
  const auto r = run(cat({"evaluate", "--manifest", ws.files.manifest.string(),
                          "--out", out.string()},
                         ws.models()));
  REQUIRE(r.code == kExitOk);
  const std::string csv = slurp(out);
  CHECK(csv.rfind("utt_id,wer,cer,subs,ins,dels,ref_len\n", 0) == 0);
  CHECK(csv.find("__corpus__") != std::string::npos);
  CHECK(r.out.rfind("WER ", 0) == 0);
}

TEST_CASE("search subcommands run") {
  const Workspace ws("cli_search");
  const std::string manifest = ws.files.manifest.string();

  auto r = run(cat({"tune", "--manifest", manifest, "--betas", "0.5,1",
                    "--m-values", "2,3", "--beam", "4"},
                   ws.models()));
  CHECK(r.code == kExitOk);
  CHECK(r.out.rfind("beta,layers,wer,cer,wall_clock_ms\n", 0) == 0);

  r = run(cat({"tune", "--target", "lm", "--manifest", manifest, "--lm-weights",
               "0,1", "--word-scores", "0", "--beam", "4"},
              ws.models()));
  CHECK(r.code == kExitOk);
  CHECK(r.out.rfind("lm_weight,word_score,wer,cer,wall_clock_ms\n", 0) == 0);

  r = run(cat({"sweep-beam", "--manifest", manifest, "--widths", "1,4"}, ws.models()));
  CHECK(r.code == kExitOk);
  CHECK(r.out.rfind("beam_width,wer,cer,wall_clock_ms\n", 0) == 0);

  r = run(cat({"sweep-beam", "--manifest", manifest, "--widths", "4,1"}, ws.models()));
  CHECK(r.code == kExitUsage);

  r = run(cat({"calibrate-temp", "--manifest", manifest, "--temps", "1,2",
               "--objective", "nll"},
              ws.models()));
  CHECK(r.code == kExitOk);
  CHECK(r.out.rfind("temperature,objective,wer,cer,wall_clock_ms\n", 0) == 0);

  r = run(cat({"calibrate-temp", "--manifest", manifest, "--objective", "mse"},
              ws.models()));
  CHECK(r.code == kExitUsage);
}

TEST_CASE("profile-confidence") {
  const Workspace ws("cli_profile");
  auto r = run({"profile-confidence", "--head", ws.files.head.string(), "--stack",
                ws.files.stacks[0].string()});
  CHECK(r.code == kExitOk);
  CHECK(r.out.rfind("layer,mean_max_prob,mean_entropy\n1,", 0) == 0);
  r = run({"profile-confidence", "--head", ws.files.head.string(), "--manifest",
           ws.files.manifest.string()});
  CHECK(r.code == kExitOk);
  CHECK(std::count(r.out.begin(), r.out.end(), '\n') == 7);
}

TEST_CASE("repeated runs give byte-identical outputs") {
  const Workspace ws("cli_repeat");
  const std::vector<std::vector<std::string>> commands{
      cat({"decode", "--stack", ws.files.stacks[1].string(), "--beta", "0.5",
           "--layers", "3", "--lm-weight", "0.8"},
          ws.models()),
      cat({"evaluate", "--manifest", ws.files.manifest.string(), "--beta", "0.5",
           "--layers", "3", "--jobs", "2"},
          ws.models()),
      {"profile-confidence", "--head", ws.files.head.string(), "--manifest",
       ws.files.manifest.string()},
  };
  for (const auto& cmd : commands) {
    const auto a = ws.dir / "a.out";
    const auto b = ws.dir / "b.out";
    const auto ra = run(cat(cmd, {"--out", a.string()}));
    const auto rb = run(cat(cmd, {"--out", b.string()}));
    REQUIRE(ra.code == kExitOk);
    REQUIRE(rb.code == kExitOk);
    CHECK(slurp(a) == slurp(b));
    CHECK(!slurp(a).empty());
    CHECK(ra.out == rb.out);
  }
}
