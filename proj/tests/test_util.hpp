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

// Helpers shared by the unit tests: a tiny assembler for hand-written
// functions and a memoized synthetic corpus.
#ifndef ADVBIN_TESTS_TEST_UTIL_HPP_
#define ADVBIN_TESTS_TEST_UTIL_HPP_

#include <string>
#include <vector>

#include "advbin/cfg.hpp"
#include "advbin/evaluation.hpp"
#include "advbin/strand_store.hpp"

namespace advbin::testing {

// "add r1, r2, 3" -> the mini-ISA instruction with its declared effects.
Instruction Asm(const std::string& text);
std::vector<Instruction> AsmAll(const std::vector<std::string>& lines);

struct BlockDef {
  int id;
  std::vector<std::string> code;
  std::vector<int> succs;
};

FunctionCfg MakeFunction(const std::vector<BlockDef>& blocks, const std::string& id = "t",
                         int entry = -1);

// A single block holding `code` and nothing else.
FunctionCfg OneBlock(const std::vector<std::string>& code, const std::string& id = "t");

Strand MakeStrand(const std::vector<std::string>& code);

// Generated corpus (and its strand database) shared across tests of one
// binary. Built on first use.
const GroupedCorpus& SmallCorpus();
const StrandDb& SmallDb();

}  // namespace advbin::testing

#endif  // ADVBIN_TESTS_TEST_UTIL_HPP_
