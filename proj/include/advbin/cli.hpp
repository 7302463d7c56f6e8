// Copyright 2026 The advbin Authors. All Rights Reserved.
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

// Command-line front end. `RunCli` is the whole program minus process setup
// so that tests and the Python module can drive it in-process.
#ifndef ADVBIN_CLI_HPP_
#define ADVBIN_CLI_HPP_

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "advbin/cfg.hpp"
#include "advbin/evaluation.hpp"
#include "advbin/optimizer.hpp"

namespace advbin {

inline constexpr char kToolVersion[] = "0.1.0";

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitRuntime = 2;

// Everything needed to reproduce one experiment run. Worker
// count is deliberately absent: results never depend on it.
struct RunManifest {
  std::string command;
  std::string tool_version = kToolVersion;
  std::string corpus_path;
  std::string corpus_hash;
  // Empty path means the strand database is derived from the corpus.
  std::string strands_path;
  std::string strands_hash;
  std::vector<std::string> oracles;
  AttackMode mode = AttackMode::kUntargeted;
  std::vector<std::size_t> pool_sizes;
  std::vector<std::size_t> ks;
  std::vector<double> lambdas;
  std::size_t samples = 0;
  std::uint64_t seed = 0;
  AttackConfig attack;
  std::vector<int> levels = EvalConfig{}.levels;
  bool emit_functions = false;
  std::vector<std::string> outputs;

  json ToJson() const;
  static RunManifest FromJson(const json& document);
};

// Hex digest of a corpus in its serialized form.
std::string CorpusHash(std::span<const FunctionCfg> functions);

struct RunOutput {
  // Deterministic results; byte-identical across reruns and worker counts.
  json body;
  json timing;
  // One header line plus one row per (oracle, pool size, k, lambda) cell.
  // Empty for transfer runs.
  std::string csv;
  // Oracle self-descriptions, keyed by the oracle descriptor string.
  json oracles;
};

// Recomputes everything a manifest describes. `jobs` only affects speed.
RunOutput ExecuteManifest(const RunManifest& manifest, std::size_t jobs);

// Runs one command line (without the program name). Returns the exit code.
int RunCli(const std::vector<std::string>& args, std::ostream& out,
           std::ostream& err);

}  // namespace advbin

#endif  // ADVBIN_CLI_HPP_
