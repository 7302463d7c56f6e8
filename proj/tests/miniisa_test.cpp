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

#include <charconv>
#include <fstream>

#include <gtest/gtest.h>

#include "advbin/error.hpp"
#include "advbin/isa.hpp"
#include "advbin/miniisa.hpp"
#include "advbin/oracles.hpp"
#include "advbin/transforms.hpp"
#include "test_util.hpp"

namespace advbin {
namespace {

using testing::MakeFunction;
using testing::MakeStrand;
using testing::OneBlock;

MachineState Zeroed() { return MachineState{}; }

TEST(ExecuteTest, MovImmediateThenReturn) {
  const auto r = Execute(OneBlock({"mov r0, 7", "ret"}), Zeroed());
  EXPECT_EQ(r.observable.regs[0], 7u);
  EXPECT_TRUE(r.observable.halted);
  EXPECT_EQ(r.visited, (std::set<int>{0}));
}

TEST(ExecuteTest, PushPopRestoresStackDepth) {
  MachineState in = Zeroed();
  in.regs[2] = 0xdeadbeef;
  const auto r = Execute(OneBlock({"push r2", "pop r1", "mov r0, r1", "ret"}), in);
  EXPECT_EQ(r.observable.regs[0], 0xdeadbeefu);
  // A further pop would underflow: the push/pop pair left the stack empty.
  EXPECT_THROW(Execute(OneBlock({"push r2", "pop r1", "pop r3", "ret"}), in),
               IllegalInstruction);
}

TEST(ExecuteTest, ArithmeticAndFlags) {
  MachineState in = Zeroed();
  in.regs[1] = 5;
  in.regs[2] = 7;
  const FunctionCfg f = MakeFunction({
      {0, {"sub r3, r1, r2", "jnz b2"}, {2, 1}},
      {1, {"mov r0, 100", "ret"}, {}},
      {2, {"shl r0, r3, 65", "pushf", "pop r1", "ret"}, {}},
  });
  const auto r = Execute(f, in);
  EXPECT_EQ(r.visited, (std::set<int>{0, 2}));
  // 5 - 7 wraps; shift count is taken modulo 64.
  EXPECT_EQ(r.observable.regs[0], static_cast<std::uint64_t>(-2) << 1);
  // shl leaves ZF=0, SF=1; CF is untouched from the borrow (1).
  EXPECT_EQ(r.observable.regs[1], 0b110u);
}

TEST(ExecuteTest, CompareAndConditionalBranch) {
  const FunctionCfg f = MakeFunction({
      {0, {"cmp r1, r2", "jz b1"}, {1, 2}},
      {1, {"mov r0, 1", "ret"}, {}},
      {2, {"mov r0, 2", "ret"}, {}},
  });
  MachineState eq = Zeroed();
  eq.regs[1] = eq.regs[2] = 9;
  MachineState ne = eq;
  ne.regs[2] = 10;
  EXPECT_EQ(Execute(f, eq).observable.regs[0], 1u);
  EXPECT_EQ(Execute(f, ne).observable.regs[0], 2u);
}

TEST(ExecuteTest, MemoryLoadStore) {
  MachineState in = Zeroed();
  in.regs[1] = 10;
  in.regs[2] = 42;
  const auto r = Execute(OneBlock({"store [r1+3], r2", "load r0, [r1+3]", "ret"}), in);
  EXPECT_EQ(r.observable.regs[0], 42u);
  EXPECT_EQ(r.observable.mem, (std::map<std::uint64_t, std::uint64_t>{{13, 42}}));
  // Zero words are not materialized, so storing 0 equals never storing.
  in.mem[13] = 5;
  const auto z = Execute(OneBlock({"store [r1+3], r3", "ret"}), in);
  EXPECT_TRUE(z.observable.mem.empty());
}

TEST(ExecuteTest, ObservableStateExcludesScratchRegisters) {
  MachineState a = Zeroed(), b = Zeroed();
  b.regs[9] = 1234;
  const FunctionCfg f = OneBlock({"mov r0, 1", "ret"});
  EXPECT_EQ(Execute(f, a).observable, Execute(f, b).observable);
}

TEST(ExecuteTest, InfiniteLoopRunsOutOfFuel) {
  const FunctionCfg f = MakeFunction({{0, {"nop", "jmp b0"}, {0}}});
  EXPECT_THROW(Execute(f, Zeroed(), 500), OutOfFuel);
}

TEST(ExecuteTest, IsDeterministic) {
  Rng rng(3);
  for (const auto& f : testing::SmallCorpus().functions) {
    const MachineState in = RandomState(rng);
    const auto a = Execute(f, in), b = Execute(f, in);
    EXPECT_EQ(a.observable, b.observable);
    EXPECT_EQ(a.visited, b.visited);
    EXPECT_EQ(a.steps, b.steps);
  }
}

TEST(ExecuteTest, DeadBranchTargetIsNeverVisited) {
  const FunctionCfg f = OneBlock({"mov r1, 3", "add r0, r1, r2", "ret"});
  const FunctionCfg g = ApplyDba(f, {0, 1}, MakeStrand({"mov r0, 99"}));
  const int dead = f.NextBlockId() + 1;
  ASSERT_NE(g.FindBlock(dead), nullptr);
  const auto v = CheckEquivalence(f, g, 8, 17);
  EXPECT_TRUE(v.equivalent);
  EXPECT_EQ(v.visited_second.count(dead), 0u);
  EXPECT_EQ(v.visited_second.size(), 2u);
}

TEST(CheckEquivalenceTest, FunctionIsEquivalentToItself) {
  for (const auto& f : testing::SmallCorpus().functions) {
    EXPECT_TRUE(CheckEquivalence(f, f, 8, 1).equivalent) << f.id();
  }
}

TEST(CheckEquivalenceTest, ReportsACounterexample) {
  const FunctionCfg f = OneBlock({"add r0, r1, r2", "ret"});
  const FunctionCfg g = OneBlock({"add r0, r1, r3", "ret"});
  const auto v = CheckEquivalence(f, g, 8, 2);
  ASSERT_FALSE(v.equivalent);
  ASSERT_TRUE(v.counterexample.has_value());
  EXPECT_NE(Execute(f, *v.counterexample).observable, Execute(g, *v.counterexample).observable);
}

TEST(CheckEquivalenceTest, FuelExhaustionIsASkipNotAVerdict) {
  const FunctionCfg loop = MakeFunction({{0, {"nop", "jmp b0"}, {0}}});
  const auto v = CheckEquivalence(loop, OneBlock({"ret"}), 4, 1, 100);
  EXPECT_TRUE(v.equivalent);
  EXPECT_EQ(v.trials_skipped, 4);
  EXPECT_EQ(v.trials_run, 0);
}

// Replaces the trailing immediate of one instruction by value + 1.
std::optional<FunctionCfg> MutateConstant(const FunctionCfg& f, int block, std::size_t index) {
  const BasicBlock& b = f.block(block);
  const Instruction& in = b.instrs()[index];
  if (in.is_control_flow || in.operands.empty()) return std::nullopt;
  const std::string& op = in.operands.back();
  std::int64_t v = 0;
  auto [p, ec] = std::from_chars(op.data(), op.data() + op.size(), v);
  if (ec != std::errc() || p != op.data() + op.size()) return std::nullopt;
  auto ops = in.operands;
  ops.back() = std::to_string(v + 1);
  auto instrs = b.instrs();
  instrs[index] = isa::Make(in.mnemonic, ops);
  std::vector<BlockPtr> blocks;
  for (const auto& bb : f.blocks()) {
    blocks.push_back(bb->id() == block
                         ? std::make_shared<const BasicBlock>(block, instrs, b.succs())
                         : bb);
  }
  return f.WithBlocks(blocks);
}

TEST(CheckEquivalenceTest, DetectsLiveConstantMutationsWithinEightTrials) {
  int live = 0, detected = 0;
  for (int s = 0; s < 150; ++s) {
    const FunctionCfg f = GenFunction(DeriveSeed(99, s));
    bool done = false;
    for (const auto& b : f.blocks()) {
      for (std::size_t i = 0; i < b->size() && !done; ++i) {
        const auto g = MutateConstant(f, b->id(), i);
        if (!g) continue;
        // Ground truth: the mutation is "live" when it changes the
        // observable result on most inputs.
        Rng rng(7);
        int differing = 0;
        for (int t = 0; t < 64; ++t) {
          const MachineState st = RandomState(rng);
          differing += Execute(f, st).observable != Execute(*g, st).observable;
        }
        if (differing < 32) continue;
        ++live;
        detected += !CheckEquivalence(f, *g, 8, 11).equivalent;
        done = true;
      }
      if (done) break;
    }
  }
  ASSERT_GE(live, 100);
  EXPECT_GE(static_cast<double>(detected) / live, 0.99);
}

TEST(GenFunctionTest, PassesStrictIngestion) {
  for (int s = 0; s < 100; ++s) {
    const FunctionCfg f = GenFunction(s);
    EXPECT_NO_THROW(ParseFunction(SerializeFunction(f), {.strict = true}));
    EXPECT_GE(f.node_count(), kMinCorpusNodes);
    EXPECT_GE(f.instruction_count(), kMinCorpusInstructions);
  }
}

TEST(GenFunctionTest, SameSeedSameFunction) {
  EXPECT_EQ(SerializeFunction(GenFunction(77)), SerializeFunction(GenFunction(77)));
  EXPECT_NE(GenFunction(77).fingerprint(), GenFunction(78).fingerprint());
}

TEST(GenFunctionTest, AlmostAllTerminateWithinDefaultFuel) {
  int terminating = 0;
  for (int s = 0; s < 1000; ++s) {
    const FunctionCfg f = GenFunction(DeriveSeed(5, s));
    Rng rng(s);
    bool ok = true;
    for (int t = 0; t < 8 && ok; ++t) {
      try {
        ok = Execute(f, RandomState(rng), kDefaultFuel).observable.halted;
      } catch (const OutOfFuel&) {
        ok = false;
      }
    }
    terminating += ok;
  }
  EXPECT_GE(terminating, 990);
}

TEST(GenVariantsTest, IdentityVariantKeepsStructure) {
  const FunctionCfg f = GenFunction(11, {.name = "fn"});
  const auto v = GenVariants(f, 3);
  ASSERT_EQ(v[0].blocks().size(), f.blocks().size());
  for (std::size_t i = 0; i < f.blocks().size(); ++i) {
    EXPECT_EQ(*v[0].blocks()[i], *f.blocks()[i]);
  }
  EXPECT_EQ(v[0].fingerprint(), f.fingerprint());
  EXPECT_NE(v[0].provenance(), v[1].provenance());
  std::set<std::string> opt_pairs;
  for (const auto& x : v) opt_pairs.insert(x.provenance().compiler + "/" + x.provenance().opt_level);
  EXPECT_EQ(opt_pairs.size(), 4u);
}

TEST(GenVariantsTest, AllVariantsArePairwiseEquivalent) {
  for (int s = 0; s < 40; ++s) {
    const auto v = GenVariants(GenFunction(DeriveSeed(8, s)), s);
    for (std::size_t i = 0; i < v.size(); ++i) {
      for (std::size_t j = i + 1; j < v.size(); ++j) {
        EXPECT_TRUE(CheckEquivalence(v[i], v[j], 16, s).equivalent) << s << ":" << i << j;
      }
    }
  }
}

TEST(GenVariantsTest, ThreadingChangesBlockCount) {
  int changed = 0;
  for (const auto& group : testing::SmallCorpus().groups) {
    const auto& fs = testing::SmallCorpus().functions;
    if (GsizeSim(fs[group[0]], fs[group[2]]) < 1.0) ++changed;
  }
  EXPECT_GT(changed, 0);
}

TEST(GenCorpusTest, GroupsOfFourNamedVariants) {
  const auto corpus = GenCorpus(5, 9);
  ASSERT_EQ(corpus.size(), 20u);
  const GroupedCorpus g = GroupCorpus(corpus);
  EXPECT_EQ(g.groups.size(), 5u);
  EXPECT_TRUE(g.rejected.empty());
  EXPECT_EQ(corpus[0].id(), corpus[0].name() + ".v0");
}

TEST(IsaTableTest, ShippedAssetMatchesTheBuiltInTable) {
  std::ifstream in(std::string(ADVBIN_SOURCE_DIR) + "/assets/miniisa_table.json");
  ASSERT_TRUE(in.good());
  EXPECT_EQ(json::parse(in), isa::TableJson());
}

TEST(IsaTest, RejectsMalformedInstructions) {
  EXPECT_THROW(isa::Make("frob", {}), IllegalInstruction);
  EXPECT_THROW(isa::Make("add", {"r1", "r2"}), IllegalInstruction);
  EXPECT_THROW(isa::Make("mov", {"r16", "1"}), IllegalInstruction);
  EXPECT_THROW(isa::Make("load", {"r1", "r2"}), IllegalInstruction);
  EXPECT_EQ(isa::ParseReg("r15"), 15);
  EXPECT_EQ(isa::ParseReg("r01"), -1);
}

}  // namespace
}  // namespace advbin
