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

#include <gtest/gtest.h>

#include "advbin/cfg.hpp"
#include "advbin/error.hpp"
#include "advbin/miniisa.hpp"
#include "advbin/rng.hpp"
#include "advbin/transforms.hpp"
#include "test_util.hpp"

namespace advbin {
namespace {

using testing::Asm;
using testing::MakeStrand;
using testing::OneBlock;

json Instr(const std::string& mn, std::vector<std::string> ops, std::vector<std::string> reads,
           std::vector<std::string> writes, bool cf = false, const std::string& mem = "none") {
  return {{"mn", mn}, {"ops", ops}, {"reads", reads}, {"writes", writes}, {"cf", cf}, {"mem", mem}};
}

json TwoBlockDocument() {
  json b0 = {{"id", 0},
             {"succs", {1}},
             {"instrs",
              {Instr("mov", {"r1", "1"}, {}, {"r1"}), Instr("mov", {"r2", "2"}, {}, {"r2"}),
               Instr("add", {"r0", "r1", "r2"}, {"r1", "r2"}, {"r0", "ZF", "SF", "CF"})}}};
  json b1 = {{"id", 1},
             {"succs", json::array()},
             {"instrs",
              {Instr("load", {"r3", "[r1+4]"}, {"r1", "mem"}, {"r3"}, false, "read"),
               Instr("xor", {"r0", "r0", "r3"}, {"r0", "r3"}, {"r0", "ZF", "SF"}),
               Instr("ret", {}, {}, {}, true)}}};
  return {{"id", "f.v0"},
          {"name", "f"},
          {"provenance", {{"project", "p"}, {"compiler", "gcc"}, {"opt_level", "O0"}}},
          {"entry", 0},
          {"blocks", {b0, b1}}};
}

TEST(ParseFunctionTest, MinimalAdmissibleFunction) {
  const FunctionCfg f = ParseFunction(TwoBlockDocument(), {.strict = true});
  EXPECT_EQ(f.node_count(), 2u);
  EXPECT_EQ(f.instruction_count(), 6u);
  EXPECT_EQ(f.edge_count(), 1u);
  EXPECT_EQ(f.provenance().compiler, "gcc");
  EXPECT_EQ(FunctionLen(f), 6u);
}

TEST(ParseFunctionTest, DanglingSuccessorIsGraphError) {
  json doc = TwoBlockDocument();
  doc["blocks"][0]["id"] = 3;
  doc["entry"] = 3;
  doc["blocks"][0]["succs"] = {9};
  EXPECT_THROW(ParseFunction(doc), GraphError);
}

TEST(ParseFunctionTest, MissingEntryBlockIsGraphError) {
  json doc = TwoBlockDocument();
  doc["entry"] = 7;
  EXPECT_THROW(ParseFunction(doc), GraphError);
}

TEST(ParseFunctionTest, StrictModeRejectsSmallFunctions) {
  json doc = TwoBlockDocument();
  json block = doc["blocks"][0];
  block["succs"] = json::array();
  block["instrs"].push_back(Instr("nop", {}, {}, {}));
  block["instrs"].push_back(Instr("ret", {}, {}, {}, true));
  doc["blocks"] = {block};
  ASSERT_EQ(block["instrs"].size(), 5u);
  EXPECT_THROW(ParseFunction(doc, {.strict = true}), FilterError);
  EXPECT_NO_THROW(ParseFunction(doc, {.strict = false}));
}

TEST(ParseFunctionTest, SchemaErrors) {
  json missing = TwoBlockDocument();
  missing.erase("name");
  EXPECT_THROW(ParseFunction(missing), SchemaError);

  json bad_type = TwoBlockDocument();
  bad_type["entry"] = "0";
  EXPECT_THROW(ParseFunction(bad_type), SchemaError);

  json bad_mem = TwoBlockDocument();
  bad_mem["blocks"][0]["instrs"][0]["mem"] = "sometimes";
  EXPECT_THROW(ParseFunction(bad_mem), SchemaError);

  json bad_loc = TwoBlockDocument();
  bad_loc["blocks"][0]["instrs"][0]["reads"] = {3};
  EXPECT_THROW(ParseFunction(bad_loc), SchemaError);

  EXPECT_THROW(ParseCorpus(json::object()), SchemaError);
}

TEST(ParseFunctionTest, EmptyBlockIsGraphError) {
  json doc = TwoBlockDocument();
  doc["blocks"][1]["instrs"] = json::array();
  EXPECT_THROW(ParseFunction(doc), GraphError);
}

TEST(ParseFunctionTest, ControlFlowMustBeLast) {
  json doc = TwoBlockDocument();
  auto& instrs = doc["blocks"][1]["instrs"];
  std::swap(instrs[1], instrs[2]);
  EXPECT_THROW(ParseFunction(doc), GraphError);
}

TEST(RoundTripTest, GeneratedAndTransformedFunctions) {
  const auto& corpus = testing::SmallCorpus();
  const auto& db = testing::SmallDb();
  Rng rng(5);
  for (std::size_t i = 0; i < corpus.functions.size(); i += 7) {
    FunctionCfg f = corpus.functions[i];
    // Mix in synthetic instructions so the flag survives the trip too.
    const auto positions = NonControlPositions(f);
    f = ApplySa(f, rng.Pick(positions), db.strand(rng.Below(db.size())));
    const json doc = SerializeFunction(f);
    const FunctionCfg back = ParseFunction(doc);
    EXPECT_EQ(back, f) << f.id();
    EXPECT_EQ(SerializeFunction(back), doc);
  }
}

TEST(RoundTripTest, CorpusFile) {
  const auto& corpus = testing::SmallCorpus();
  const std::string path = ::testing::TempDir() + "/roundtrip_corpus.json";
  SaveCorpus(path, corpus.functions);
  const auto loaded = LoadCorpus(path, {.strict = true});
  ASSERT_EQ(loaded.size(), corpus.functions.size());
  for (std::size_t i = 0; i < loaded.size(); ++i) EXPECT_EQ(loaded[i], corpus.functions[i]);
}

TEST(FunctionLenTest, AdditiveOverBlocks) {
  for (const auto& f : testing::SmallCorpus().functions) {
    std::size_t sum = 0;
    for (const auto& b : f.blocks()) sum += b->size();
    EXPECT_EQ(FunctionLen(f), sum);
  }
}

TEST(FunctionLenTest, TransformationDeltas) {
  const FunctionCfg f = OneBlock({"mov r1, 1", "mov r2, 2", "add r3, r1, r2", "mov r4, 3",
                                  "mov r5, 4", "add r0, r3, r4", "ret"});
  EXPECT_EQ(FunctionLen(f), 7u);
  EXPECT_EQ(FunctionLen(ApplyNs(f, {0, 2})), 9u);
  const Strand s = MakeStrand({"mov r1, 5", "add r1, r1, 2", "shl r1, r1, 1"});
  EXPECT_EQ(FunctionLen(ApplySa(f, {0, 1}, s)), 7u + 7u);
}

TEST(DependencyTest, Examples) {
  EXPECT_EQ(Dependency(Asm("mov r1, 1"), Asm("mov r2, 2")), Dependence::kIndependent);
  EXPECT_EQ(Dependency(Asm("mov r1, 1"), Asm("add r2, r2, r1")), Dependence::kDependent);
  EXPECT_EQ(Dependency(Asm("store [r4+1], r2"), Asm("load r3, [r5+9]")), Dependence::kDependent);
  EXPECT_EQ(Dependency(Asm("load r2, [r4]"), Asm("load r3, [r5]")), Dependence::kIndependent);
  EXPECT_EQ(Dependency(Asm("add r1, r1, 1"), Asm("sub r2, r2, 1")), Dependence::kDependent)
      << "both write flags";
  EXPECT_EQ(Dependency(Asm("push r1"), Asm("push r2")), Dependence::kDependent);
}

TEST(DependencyTest, VerdictIsSymmetric) {
  std::vector<Instruction> pool;
  for (const auto& f : testing::SmallCorpus().functions) {
    for (const auto& b : f.blocks()) {
      for (const auto& i : b->instrs()) {
        if (!i.is_control_flow) pool.push_back(i);
      }
    }
    if (pool.size() > 400) break;
  }
  for (std::size_t i = 0; i < pool.size(); i += 3) {
    for (std::size_t j = 0; j < pool.size(); j += 5) {
      ASSERT_EQ(Dependency(pool[i], pool[j]), Dependency(pool[j], pool[i]))
          << ToString(pool[i]) << " / " << ToString(pool[j]);
    }
  }
}

TEST(ClobberSetTest, ReadOffTheIsaTable) {
  const Instruction add = Asm("add r1, r2, r3");
  const LocationSet clobber = ClobberSet(MakeStrand({"add r1, r2, r3"}));
  EXPECT_EQ(clobber, add.writes);
  EXPECT_EQ(LocationNames(clobber), (std::vector<std::string>{"CF", "SF", "ZF", "r1"}));
  EXPECT_EQ(LocationNames(ClobberSet(MakeStrand({"xor r1, r2, r3"}))),
            (std::vector<std::string>{"SF", "ZF", "r1"}));
}

TEST(ClobberSetTest, EmptyStrandHasEmptyClobberSet) {
  EXPECT_TRUE(ClobberSet(Strand{}).none());
}

TEST(ClobberSetTest, StoresAndControlFlowAreInvalid) {
  EXPECT_THROW(ClobberSet(MakeStrand({"mov r1, 2", "store [r1+0], r1"})), InvalidStrand);
  EXPECT_THROW(ClobberSet(MakeStrand({"jmp b1"})), InvalidStrand);
  EXPECT_THROW(ClobberSet(MakeStrand({"push r1"})), InvalidStrand);
}

TEST(ValidateStrandTest, RequiresADataDependenceChain) {
  EXPECT_NO_THROW(ValidateStrand(MakeStrand({"mov r1, 1", "add r2, r1, 1"})));
  EXPECT_THROW(ValidateStrand(MakeStrand({"mov r1, 1", "mov r2, 2"})), InvalidStrand);
  EXPECT_THROW(ValidateStrand(Strand{}), InvalidStrand);
  EXPECT_TRUE(IsValidStrand(MakeStrand({"load r3, [r1+2]", "add r0, r3, r3"})));
}

TEST(ModificationSizeTest, CountsAddedInstructionsAndNodes) {
  const FunctionCfg f = OneBlock({"mov r1, 1", "mov r2, 2", "add r3, r1, r2", "mov r0, r3", "ret"});
  const FunctionCfg g = ApplyDba(ApplyNs(f, {0, 1}), {0, 0}, MakeStrand({"mov r1, 9"}));
  EXPECT_EQ(MeasureModification(f, g), (ModificationSize{2 + 6, 2 + 2}));
  EXPECT_EQ(MeasureModification(f, f), (ModificationSize{0, 0}));
  EXPECT_THROW(MeasureModification(g, f), std::invalid_argument);
}

TEST(LocationTest, KindsAndInterning) {
  EXPECT_EQ(InferLocationKind("r7"), LocationKind::kRegister);
  EXPECT_EQ(InferLocationKind("ZF"), LocationKind::kFlag);
  EXPECT_EQ(InferLocationKind("mem"), LocationKind::kMemory);
  EXPECT_EQ(InternLocation("r7"), InternLocation("r7"));
  EXPECT_EQ(LocationInfo(MemoryLocation()).name, "mem");
}

TEST(ShapeTokenTest, AbstractsOperandIdentity) {
  EXPECT_EQ(ShapeToken(Asm("add r1, r2, 3")), "add R R I");
  EXPECT_EQ(ShapeToken(Asm("add r9, r4, 100")), "add R R I");
  EXPECT_EQ(ShapeToken(Asm("load r1, [r2+3]")), "load R M");
}

}  // namespace
}  // namespace advbin
