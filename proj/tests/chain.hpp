/*
 * Copyright 2026 The bcond Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

// Helpers that drive the command-line entry point in process.

#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>
#include <vector>

#include "bcond/commands.hpp"

namespace bcond::testing {

struct CliResult {
  int code = 0;
  std::string out;
  std::string err;
};

inline CliResult run_cli(const std::vector<std::string>& args) {
  std::ostringstream out;
  std::ostringstream err;
  CliResult r;
  r.code = run(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

/// Training settings that let the reference classifier converge on unit-norm
/// descriptors within the end-to-end time budget.
inline const std::vector<std::string> kChainSettings = {"--set", "learning_rate=5", "--set", "epochs=100",
                                                        "--set", "lr_decay=0.05",   "--set", "weight_decay=0"};

struct ChainResult {
  std::vector<CliResult> steps;
  bool ok = true;
  std::string metrics;
};

/// synth -> extract -> train-condition -> predict -> evaluate in `dir`.
inline ChainResult run_chain(const std::filesystem::path& dir, const std::string& seed, const std::string& counts,
                             const std::string& workers = "1") {
  const std::string d = dir.string();
  const auto common = [&](std::initializer_list<std::string> tail) {
    std::vector<std::string> args = {"--seed", seed, "--workers", workers, "--out", d};
    args.insert(args.end(), kChainSettings.begin(), kChainSettings.end());
    args.insert(args.end(), tail);
    return args;
  };
  const std::string manifest = (dir / "manifest.json").string();
  const std::vector<std::vector<std::string>> plan = {
      common({"synth", "--counts", counts}),
      common({"extract", "--manifest", manifest}),
      common({"train-condition", "--manifest", manifest, "--patches", (dir / "patches.csv").string()}),
      common({"predict", "--manifest", manifest, "--model", (dir / "model.bin").string(), "--patches",
              (dir / "patches.csv").string()}),
      common({"evaluate", "--manifest", manifest, "--predictions", (dir / "predictions.csv").string()}),
  };
  ChainResult result;
  for (const auto& args : plan) {
    result.steps.push_back(run_cli(args));
    if (result.steps.back().code != 0) {
      result.ok = false;
      return result;
    }
  }
  result.metrics = read_file(dir / "metrics.json");
  return result;
}

}  // namespace bcond::testing
