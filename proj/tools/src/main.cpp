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

#include <deque>
#include <iostream>
#include <map>

#include "CLI11.hpp"
#include "commands.h"
#include "entlm/error.h"
#include "json.hpp"

namespace {

using entlm::cli::CommandInfo;

struct Leaf {
  const CommandInfo* info = nullptr;
  CLI::App* app = nullptr;
  std::string config_file;
  std::vector<std::string> sets;
  std::map<std::string, std::string> aliased;  // config key -> flag value
  std::vector<std::pair<std::string, CLI::Option*>> options;
};

int report_error(const char* kind, const std::string& message, int code) {
  std::cerr << nlohmann::json{{"error", {{"kind", kind}, {"message", message}, {"exit_code", code}}}}
                   .dump()
            << '\n';
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace entlm::cli;
  CLI::App app{"entlm: entity-aware multilingual encoder toolkit"};
  app.require_subcommand(1);
  std::map<std::string, CLI::App*> groups;
  std::map<std::string, std::string> group_members;
  std::deque<Leaf> leaves;

  for (const auto& info : command_table()) {
    CLI::App* parent = &app;
    std::string leaf_name = info.name;
    if (auto space = info.name.find(' '); space != std::string::npos) {
      const std::string group = info.name.substr(0, space);
      leaf_name = info.name.substr(space + 1);
      auto& g = groups[group];
      if (!g) {
        g = app.add_subcommand(group, "");
        g->require_subcommand(1);
      }
      parent = g;
      auto& names = group_members[group];
      names += (names.empty() ? "" : "|") + leaf_name;
      g->description(group + " {" + names + "}");
    }
    Leaf& leaf = leaves.emplace_back();
    leaf.info = &info;
    leaf.app = parent->add_subcommand(leaf_name, info.help);
    leaf.app->add_option("--config", leaf.config_file, "run configuration file")
        ->check(CLI::ExistingFile);
    leaf.app->add_option("--set", leaf.sets, "override a config key (key=value)");
    const std::vector<FlagAlias> common = {
        {"--seed", "run.seed", "seed for every random stream"},
        {"--manifest", "run.manifest", "manifest path"}};
    for (const auto* list : {&common, &info.flags}) {
      for (const auto& f : *list) {
        auto* opt = leaf.app->add_option(f.flag, leaf.aliased[f.key], f.help + " [" + f.key + "]");
        leaf.options.emplace_back(f.key, opt);
      }
    }
  }

  std::string rerun_manifest_path;
  std::vector<std::string> rerun_sets;
  bool verify = false;
  CLI::App* rerun = app.add_subcommand("rerun", "Repeat a run from its manifest");
  rerun->add_option("manifest", rerun_manifest_path, "manifest JSON")
      ->required()
      ->check(CLI::ExistingFile);
  rerun->add_option("--set", rerun_sets, "override a recorded key (key=value)");
  rerun->add_flag("--verify", verify, "compare outputs with the recorded digests");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (rerun->parsed()) {
      return rerun_manifest(rerun_manifest_path, rerun_sets, verify, std::cout) ? kExitOk
                                                                                  : kExitRuntime;
    }
    for (auto& leaf : leaves) {
      if (!leaf.app->parsed()) continue;
      RunConfig cfg;
      if (!leaf.config_file.empty()) cfg.load_file(leaf.config_file);
      for (const auto& [key, opt] : leaf.options) {
        if (opt->count() > 0) cfg.set(key, leaf.aliased[key]);
      }
      for (const auto& s : leaf.sets) cfg.set_assignment(s);
      run_command(leaf.info->name, std::move(cfg), std::cout);
      return kExitOk;
    }
    return report_error("usage", "no command given", kExitUsage);
  } catch (const entlm::ValidationError& e) {
    return report_error("validation", e.what(), kExitValidation);
  } catch (const entlm::Error& e) {
    return report_error("runtime", e.what(), kExitRuntime);
  } catch (const std::exception& e) {
    return report_error("runtime", e.what(), kExitRuntime);
  }
}
