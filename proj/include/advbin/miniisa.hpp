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

// Deterministic interpreter for the mini-ISA, the randomized equivalence
// checker built on it, and the synthetic corpus generator (random functions
// plus four compiler-like variants of each).

#ifndef ADVBIN_MINIISA_HPP_
#define ADVBIN_MINIISA_HPP_

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "advbin/cfg.hpp"
#include "advbin/isa.hpp"
#include "advbin/rng.hpp"

namespace advbin {

inline constexpr std::uint64_t kDefaultFuel = 10000;

struct MachineState {
  std::array<std::uint64_t, isa::kNumRegisters> regs{};
  bool zf = false;
  bool sf = false;
  bool cf = false;
  std::vector<std::uint64_t> stack;
  // Zero-valued words are never stored.
  std::map<std::uint64_t, std::uint64_t> mem;
  bool halted = false;
  std::uint64_t fuel = kDefaultFuel;
};

// What equivalence compares: r0..r3 and memory, plus whether the run halted.
// Scratch registers and flags are excluded along with the stack, so
// save/restore sequences are neutral by definition.
struct ObservableState {
  std::array<std::uint64_t, isa::kNumObservableRegisters> regs{};
  std::map<std::uint64_t, std::uint64_t> mem;
  bool halted = false;

  bool operator==(const ObservableState&) const = default;
};

struct ExecResult {
  ObservableState observable;
  std::set<int> visited;
  std::uint64_t steps = 0;
};

// Runs from the entry block until `ret`, a block with no successor, or fuel
// exhaustion (OutOfFuel). Throws IllegalInstruction on non-mini-ISA code or
// stack underflow.
ExecResult Execute(const FunctionCfg& function, const MachineState& input,
                   std::uint64_t fuel = kDefaultFuel);

// Random registers and flags over a populated low memory window.
MachineState RandomState(Rng& rng);

inline constexpr std::uint64_t kMemoryWindow = 48;

struct EquivalenceVerdict {
  bool equivalent = true;
  int trials_run = 0;
  int trials_skipped = 0;
  std::optional<MachineState> counterexample;
  // Union of blocks visited in the second function over all trials.
  std::set<int> visited_second;
};

EquivalenceVerdict CheckEquivalence(const FunctionCfg& first,
                                    const FunctionCfg& second, int trials,
                                    std::uint64_t seed,
                                    std::uint64_t fuel = kDefaultFuel);

struct IntRange {
  int lo;
  int hi;
};

struct GenOptions {
  IntRange blocks{3, 12};
  IntRange instrs_per_block{2, 7};
  int max_loop_depth = 2;
  std::string id = "";
  std::string name = "";
  std::string project = "synthetic";
};

// A random structured (hence reducible) function whose register reads are
// all dominated by writes or by the argument registers, and whose loops are
// counter-bounded.
FunctionCfg GenFunction(std::uint64_t seed, const GenOptions& options = {});

// Four semantics-equivalent variants: identity; scratch-register renaming;
// block renumbering with jump threading and chain merging; instruction
// rescheduling with redundant-instruction padding.
std::array<FunctionCfg, 4> GenVariants(const FunctionCfg& function,
                                       std::uint64_t seed);

// `groups` source functions, four variants each, grouped by name.
std::vector<FunctionCfg> GenCorpus(std::size_t groups, std::uint64_t seed,
                                   const GenOptions& options = {});

}  // namespace advbin

#endif  // ADVBIN_MINIISA_HPP_
