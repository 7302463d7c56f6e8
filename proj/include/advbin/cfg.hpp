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

// Function / control-flow-graph data model shared by every other module:
// locations, instructions with explicit read/write sets, immutable basic
// blocks and functions. It also holds the JSON ingestion format and the
// dependence and clobber primitives the transformations are built on.

#ifndef ADVBIN_CFG_HPP_
#define ADVBIN_CFG_HPP_

#include <bitset>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace advbin {

using json = nlohmann::json;

enum class LocationKind : std::uint8_t { kRegister, kFlag, kStackSlot, kMemory };

struct Location {
  LocationKind kind = LocationKind::kRegister;
  std::string name;
};

// Locations are interned process-wide so read/write sets are plain bitsets.
// Ids depend on interning order and must never leak into output ordering;
// anything emitted is sorted by name.
using LocationId = std::uint16_t;
inline constexpr std::size_t kMaxLocations = 256;
using LocationSet = std::bitset<kMaxLocations>;

inline constexpr std::string_view kMemoryName = "mem";
inline constexpr std::string_view kStackName = "stack";

LocationKind InferLocationKind(std::string_view name);
LocationId InternLocation(std::string_view name);
const Location& LocationInfo(LocationId id);
LocationId MemoryLocation();
LocationSet MakeLocationSet(std::initializer_list<std::string_view> names);
// Names of the members of `set`, sorted lexicographically.
std::vector<std::string> LocationNames(const LocationSet& set);
bool HasKind(const LocationSet& set, LocationKind kind);

enum class MemEffect : std::uint8_t { kNone, kRead, kWrite };

struct Instruction {
  std::string mnemonic;
  std::vector<std::string> operands;
  LocationSet reads;
  LocationSet writes;
  bool is_control_flow = false;
  MemEffect mem_effect = MemEffect::kNone;
  // Inserted by a transformation rather than ingested.
  bool synthetic = false;

  bool operator==(const Instruction&) const = default;
};

enum class ControlKind { kNone, kJump, kConditional, kReturn, kOther };

ControlKind ControlKindOf(const Instruction& instr);
bool IsNoOpMnemonic(std::string_view mnemonic);
// Throws SchemaError on a violated instruction invariant.
void ValidateInstruction(const Instruction& instr);
std::string ToString(const Instruction& instr);

enum class OperandKind : std::uint8_t { kRegister, kImmediate, kMemory, kLabel };
OperandKind ClassifyOperand(std::string_view operand, bool control_flow);
// Mnemonic followed by one letter per operand kind, e.g. "add R R I".
std::string ShapeToken(const Instruction& instr);

class BasicBlock {
 public:
  // Throws GraphError if the block is empty, a control-flow instruction is
  // not last, or the successor count does not fit the tail.
  BasicBlock(int id, std::vector<Instruction> instrs, std::vector<int> succs);

  int id() const { return id_; }
  const std::vector<Instruction>& instrs() const { return instrs_; }
  const std::vector<int>& succs() const { return succs_; }
  std::size_t size() const { return instrs_.size(); }
  // Instructions before the control-flow tail (all of them if there is none).
  std::size_t NonControlCount() const;
  bool HasControlTail() const;
  // Hash over instruction content only (not id or successors).
  std::uint64_t content_hash() const { return content_hash_; }

  bool operator==(const BasicBlock& other) const;

 private:
  int id_;
  std::vector<Instruction> instrs_;
  std::vector<int> succs_;
  std::uint64_t content_hash_;
};

using BlockPtr = std::shared_ptr<const BasicBlock>;

struct Provenance {
  std::string project;
  std::string compiler;
  std::string opt_level;

  bool operator==(const Provenance&) const = default;
};

// An immutable function. Blocks are shared between a function and the
// variants derived from it, so copies and single-block edits are cheap.
class FunctionCfg {
 public:
  FunctionCfg() = default;
  // Throws GraphError when the entry or a successor is missing, or when two
  // blocks share an id.
  FunctionCfg(std::string id, std::string name, Provenance provenance,
              int entry, std::vector<BlockPtr> blocks);

  // Same identity, new body.
  FunctionCfg WithBlocks(std::vector<BlockPtr> blocks) const;
  FunctionCfg WithBlocks(std::vector<BlockPtr> blocks, int entry) const;
  FunctionCfg WithIdentity(std::string id, std::string name,
                           Provenance provenance) const;

  const std::string& id() const { return id_; }
  const std::string& name() const { return name_; }
  const Provenance& provenance() const { return provenance_; }
  int entry() const { return entry_; }
  // Sorted by block id.
  const std::vector<BlockPtr>& blocks() const { return blocks_; }
  const BasicBlock* FindBlock(int id) const;
  const BasicBlock& block(int id) const;
  std::size_t BlockIndex(int id) const;

  std::size_t node_count() const { return blocks_.size(); }
  std::size_t edge_count() const { return edge_count_; }
  std::size_t instruction_count() const { return instruction_count_; }
  int NextBlockId() const;
  // Content and structure hash (ignores identity fields).
  std::uint64_t fingerprint() const { return fingerprint_; }

  bool operator==(const FunctionCfg& other) const;

 private:
  std::string id_;
  std::string name_;
  Provenance provenance_;
  int entry_ = 0;
  std::vector<BlockPtr> blocks_;
  std::size_t edge_count_ = 0;
  std::size_t instruction_count_ = 0;
  std::uint64_t fingerprint_ = 0;
};

struct ParseOptions {
  // Enforce the corpus admission filter (>= 6 instructions, >= 2 nodes).
  bool strict = false;
};

inline constexpr std::size_t kMinCorpusInstructions = 6;
inline constexpr std::size_t kMinCorpusNodes = 2;

FunctionCfg ParseFunction(const json& document, ParseOptions options = {});
json SerializeFunction(const FunctionCfg& function);
Instruction ParseInstruction(const json& document);
json SerializeInstruction(const Instruction& instr);

std::vector<FunctionCfg> ParseCorpus(const json& document,
                                     ParseOptions options = {});
json SerializeCorpus(std::span<const FunctionCfg> functions);
std::vector<FunctionCfg> LoadCorpus(const std::string& path,
                                    ParseOptions options = {});
void SaveCorpus(const std::string& path, std::span<const FunctionCfg> functions);

bool PassesCorpusFilter(const FunctionCfg& function);
// Throws FilterError.
void CheckCorpusFilter(const FunctionCfg& function);

// Number of instructions, synthetic ones included.
std::size_t FunctionLen(const FunctionCfg& function);

enum class Dependence { kIndependent, kDependent };

// Conflict test for two instructions of one block, `a` before `b`.
Dependence Dependency(const Instruction& a, const Instruction& b);

struct ModificationSize {
  std::size_t m_instrs = 0;
  std::size_t m_nodes = 0;

  bool operator==(const ModificationSize&) const = default;
};

// Throws std::invalid_argument if `adversarial` is smaller than `query`.
ModificationSize MeasureModification(const FunctionCfg& query,
                                     const FunctionCfg& adversarial);

struct StrandSource {
  std::string function_id;
  int block_id = 0;

  bool operator==(const StrandSource&) const = default;
};

// A data-dependent, control-flow-free, memory-write-free instruction chain.
struct Strand {
  std::vector<Instruction> instrs;
  std::optional<StrandSource> source;
};

// Locations written by the strand: exactly what strand addition must save
// and restore. Throws InvalidStrand on control flow and on any write to
// memory or the stack.
LocationSet ClobberSet(const Strand& strand);
// Full strand invariant check, including that every instruction feeds the
// last one through a data-dependence chain. Throws InvalidStrand.
void ValidateStrand(const Strand& strand);
bool IsValidStrand(const Strand& strand);

}  // namespace advbin

#endif  // ADVBIN_CFG_HPP_
