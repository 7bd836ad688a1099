// Copyright 2026 The entlm Authors.
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

#include <filesystem>
#include <fstream>
#include <sstream>

#include "commands.h"
#include "doctest.h"
#include "entlm/checkpoint.h"
#include "entlm/error.h"
#include "manifest.h"
#include "run_config.h"

namespace entlm::cli {
namespace {

namespace fs = std::filesystem;

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name)
      : path(fs::temp_directory_path() / ("entlm_cli_" + name)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& f) const { return (path / f).string(); }
};

TEST_CASE("config sections, overrides and typed reads") {
  RunConfig c;
  c.parse_text("# comment\ntop = 1\n[model]\nhidden_size = 32\n; another\n[train]\n"
               "peak_lr = 1e-4\nstage1_trainable = a., b.\n");
  c.set_assignment("model.hidden_size=64");
  CHECK(c.get_int("top", 0) == 1);
  CHECK(c.get_int("model.hidden_size", 0) == 64);
  CHECK(c.get_double("train.peak_lr", 0) == 1e-4);
  CHECK(c.get_list("train.stage1_trainable", {}) == std::vector<std::string>{"a.", "b."});
  CHECK(c.get_bool("flag", true));
  CHECK(c.values().at("flag") == "true");
  CHECK_NOTHROW(c.reject_unknown());
  c.set("typo.key", "1");
  CHECK_THROWS_AS(c.reject_unknown(), ValidationError);
}

TEST_CASE("config errors are validation errors") {
  RunConfig c;
  CHECK_THROWS_AS(c.parse_text("a = 1\na = 2\n"), ValidationError);
  CHECK_THROWS_AS(RunConfig{}.parse_text("[open\n"), ValidationError);
  CHECK_THROWS_AS(RunConfig{}.parse_text("Upper = 1\n"), ValidationError);
  CHECK_THROWS_AS(RunConfig{}.parse_text("novalue\n"), ValidationError);
  RunConfig d;
  d.set("n", "12x");
  CHECK_THROWS_AS(d.get_int("n", 0), ValidationError);
  d.set("b", "maybe");
  CHECK_THROWS_AS(d.get_bool("b", false), ValidationError);
  CHECK_THROWS_AS(d.require("missing"), ValidationError);
  CHECK_THROWS_AS(d.set_assignment("noequals"), ValidationError);
}

TEST_CASE("sha256 of known strings") {
  TempDir dir("sha");
  std::ofstream(dir / "abc") << "abc";
  CHECK(sha256_file(dir / "abc") ==
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  std::ofstream(dir / "empty");
  CHECK(sha256_file(dir / "empty") ==
        "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST_CASE("manifest round trip") {
  TempDir dir("manifest");
  Manifest m;
  m.command = "finetune re";
  m.seed = 99;
  m.config = {{"run.seed", "99"}, {"finetune.lr", "0.001"}};
  m.inputs["input.train"] = {"x.tsv", "00ff"};
  m.outputs["output.checkpoint"] = {"y.ckpt", "ab"};
  m.save(dir / "m.json");
  const auto back = Manifest::load(dir / "m.json");
  CHECK(back.command == m.command);
  CHECK(back.seed == 99);
  CHECK(back.config == m.config);
  CHECK(back.inputs.at("input.train").sha256 == "00ff");
  CHECK(back.outputs.at("output.checkpoint").path == "y.ckpt");
}

TEST_CASE("every documented command is registered") {
  for (const char* name :
       {"build-vocab", "pretrain", "link-entities", "finetune qa", "finetune re", "finetune ner",
        "eval qa", "eval re", "eval ner", "cloze-eval", "dump-features", "analyze cwr",
        "analyze modularity", "inspect-checkpoint", "toy-data"}) {
    CHECK_MESSAGE(find_command(name) != nullptr, name);
  }
  CHECK(find_command("frobnicate") == nullptr);
}

RunConfig toy_pretrain_config(const TempDir& dir) {
  RunConfig c;
  c.parse_text(
      "[model]\nhidden_size = 16\nentity_emb_size = 8\nlayers = 1\nheads = 2\n"
      "ffn_size = 32\nmax_positions = 32\nmax_entities = 8\ndropout = 0.1\n"
      "[train]\ntotal_steps = 12\nstage1_steps = 4\nwarmup_steps = 1\nbatch_size = 4\n"
      "stage1_peak_lr = 0.005\npeak_lr = 0.002\n");
  c.set("input.corpus", dir / "toy/train.jsonl");
  c.set("input.words", dir / "words.txt");
  c.set("input.entities", dir / "entities.tsv");
  c.set("output.checkpoint", dir / "a.ckpt");
  c.set("run.seed", "5");
  return c;
}

TEST_CASE("toy pipeline runs and reruns bit-identically") {
  TempDir dir("pipeline");
  std::ostringstream log;
  RunConfig toy;
  toy.set("output.dir", dir / "toy");
  toy.set("toy.train_groups", "20");
  toy.set("toy.heldout_groups", "5");
  run_command("toy-data", toy, log);
  CHECK(fs::exists(dir / "toy/manifest.json"));

  RunConfig vocab;
  vocab.set("input.corpus", dir / "toy/train.jsonl");
  vocab.set("input.links", dir / "toy/links.tsv");
  vocab.set("vocab.min_languages", "2");
  vocab.set("output.words", dir / "words.txt");
  vocab.set("output.entities", dir / "entities.tsv");
  run_command("build-vocab", vocab, log);

  const auto m = run_command("pretrain", toy_pretrain_config(dir), log);
  REQUIRE(m.outputs.count("output.checkpoint") == 1);
  CHECK(m.inputs.count("input.corpus[0]") == 1);
  CHECK(m.config.at("train.total_steps") == "12");
  CHECK(m.config.count("train.weight_decay") == 1);  // defaults are recorded

  const std::string manifest = dir / "a.ckpt.manifest.json";
  CHECK(rerun_manifest(manifest, {"output.checkpoint=" + (dir / "b.ckpt")}, true, log));
  CHECK(bit_identical(Checkpoint::load(dir / "a.ckpt"), Checkpoint::load(dir / "b.ckpt")));

  // A different seed is a different run.
  CHECK_FALSE(rerun_manifest(manifest, {"output.checkpoint=" + (dir / "c.ckpt"), "run.seed=6"},
                             true, log));

  // Changed inputs are refused.
  std::ofstream(dir / "toy/train.jsonl", std::ios::app) << "\n";
  CHECK_THROWS_AS(rerun_manifest(manifest, {}, true, log), ValidationError);
}

TEST_CASE("unknown keys are rejected before any work") {
  TempDir dir("unknown");
  RunConfig c;
  c.set("output.dir", dir / "toy");
  c.set("toy.entitties", "20");
  std::ostringstream log;
  CHECK_THROWS_AS(run_command("toy-data", c, log), ValidationError);
  CHECK_FALSE(fs::exists(dir / "toy/train.jsonl"));
}

}  // namespace
}  // namespace entlm::cli
