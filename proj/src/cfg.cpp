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

#include "advbin/cfg.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cctype>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <stdexcept>
#include <utility>

#include "advbin/error.hpp"
#include "advbin/hash.hpp"

namespace advbin {
namespace {

class LocationRegistry {
 public:
  static LocationRegistry& Get() {
    static LocationRegistry registry;
    return registry;
  }

  LocationId Intern(std::string_view name) {
    const std::size_t n = count_.load(std::memory_order_acquire);
    for (std::size_t i = 0; i < n; ++i) {
      if (entries_[i].name == name) return static_cast<LocationId>(i);
    }
    std::lock_guard<std::mutex> lock(mutex_);
    const std::size_t m = count_.load(std::memory_order_relaxed);
    for (std::size_t i = n; i < m; ++i) {
      if (entries_[i].name == name) return static_cast<LocationId>(i);
    }
    if (m == kMaxLocations) {
      throw SchemaError("too many distinct locations (limit " +
                        std::to_string(kMaxLocations) + ")");
    }
    entries_[m] = Location{InferLocationKind(name), std::string(name)};
    name_hashes_[m] = Mix64(Fnv1a(name));
    count_.store(m + 1, std::memory_order_release);
    return static_cast<LocationId>(m);
  }

  const Location& Info(LocationId id) const { return entries_.at(id); }
  std::uint64_t NameHash(LocationId id) const { return name_hashes_.at(id); }

 private:
  LocationRegistry() {
    // Fixed ids for the common names keep bitsets stable across runs.
    for (std::string_view name :
         {"mem", "stack", "ZF", "SF", "CF", "r0", "r1", "r2", "r3", "r4", "r5",
          "r6", "r7", "r8", "r9", "r10", "r11", "r12", "r13", "r14", "r15"}) {
      Intern(name);
    }
  }

  std::mutex mutex_;
  std::array<Location, kMaxLocations> entries_;
  std::array<std::uint64_t, kMaxLocations> name_hashes_{};
  std::atomic<std::size_t> count_{0};
};

std::string Lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::uint64_t HashLocationSet(const LocationSet& set) {
  // Order-independent and independent of interning order.
  std::uint64_t acc = 0;
  const auto& registry = LocationRegistry::Get();
  for (std::size_t i = set._Find_first(); i < kMaxLocations; i = set._Find_next(i)) {
    acc += registry.NameHash(static_cast<LocationId>(i));
  }
  return acc;
}

std::uint64_t HashInstruction(const Instruction& instr) {
  std::uint64_t h = Fnv1a(instr.mnemonic);
  for (const auto& op : instr.operands) h = Fnv1a(op, HashCombine(h, 0x2c));
  h = HashCombine(h, HashLocationSet(instr.reads));
  h = HashCombine(h, HashLocationSet(instr.writes) * 3);
  h = HashCombine(h, (instr.is_control_flow ? 1u : 0u) |
                         (static_cast<unsigned>(instr.mem_effect) << 1) |
                         (instr.synthetic ? 8u : 0u));
  return h;
}

const json& Require(const json& doc, const char* key, json::value_t type,
                    const char* what) {
  if (!doc.is_object()) throw SchemaError(std::string(what) + " is not an object");
  auto it = doc.find(key);
  if (it == doc.end()) {
    throw SchemaError(std::string(what) + " is missing field '" + key + "'");
  }
  const bool ok = (type == json::value_t::number_integer)
                      ? it->is_number_integer()
                      : it->type() == type;
  if (!ok) {
    throw SchemaError(std::string(what) + " field '" + key + "' has the wrong type");
  }
  return *it;
}

LocationSet ParseLocations(const json& array, const char* what) {
  LocationSet set;
  for (const auto& item : array) {
    if (!item.is_string()) {
      throw SchemaError(std::string(what) + " entries must be strings");
    }
    set.set(InternLocation(item.get<std::string>()));
  }
  return set;
}

}  // namespace

LocationKind InferLocationKind(std::string_view name) {
  if (name == kMemoryName) return LocationKind::kMemory;
  if (name == kStackName || name.starts_with("stack:")) {
    return LocationKind::kStackSlot;
  }
  static const std::set<std::string, std::less<>> kFlags = {
      "ZF", "SF", "CF", "OF", "PF", "AF", "DF", "flags", "eflags", "rflags",
      "nzcv", "N", "Z", "C", "V"};
  if (kFlags.count(name) != 0) return LocationKind::kFlag;
  return LocationKind::kRegister;
}

LocationId InternLocation(std::string_view name) {
  if (name.empty()) throw SchemaError("empty location name");
  return LocationRegistry::Get().Intern(name);
}

const Location& LocationInfo(LocationId id) {
  return LocationRegistry::Get().Info(id);
}

LocationId MemoryLocation() {
  static const LocationId id = InternLocation(kMemoryName);
  return id;
}

LocationSet MakeLocationSet(std::initializer_list<std::string_view> names) {
  LocationSet set;
  for (auto name : names) set.set(InternLocation(name));
  return set;
}

std::vector<std::string> LocationNames(const LocationSet& set) {
  std::vector<std::string> names;
  for (std::size_t i = 0; i < kMaxLocations; ++i) {
    if (set.test(i)) names.push_back(LocationInfo(static_cast<LocationId>(i)).name);
  }
  std::sort(names.begin(), names.end());
  return names;
}

bool HasKind(const LocationSet& set, LocationKind kind) {
  for (std::size_t i = set._Find_first(); i < kMaxLocations; i = set._Find_next(i)) {
    if (LocationInfo(static_cast<LocationId>(i)).kind == kind) return true;
  }
  return false;
}

bool IsNoOpMnemonic(std::string_view mnemonic) {
  const std::string m = Lower(mnemonic);
  return m == "nop" || m == "nopw" || m == "nopl" || m == "endbr64" ||
         m == "endbr32" || m == "pause";
}

ControlKind ControlKindOf(const Instruction& instr) {
  if (!instr.is_control_flow) return ControlKind::kNone;
  const std::string m = Lower(instr.mnemonic);
  if (m == "jmp" || m == "jmpq" || m == "b" || m == "br" || m == "goto") {
    return ControlKind::kJump;
  }
  if (m == "ret" || m == "retq" || m == "retn" || m == "hlt" || m == "ud2") {
    return ControlKind::kReturn;
  }
  if ((m.size() > 1 && m[0] == 'j') || m.starts_with("b.") || m == "beq" ||
      m == "bne" || m == "cbz" || m == "cbnz" || m == "tbz" || m == "tbnz") {
    return ControlKind::kConditional;
  }
  return ControlKind::kOther;
}

void ValidateInstruction(const Instruction& instr) {
  if (instr.mnemonic.empty()) throw SchemaError("instruction with empty mnemonic");
  const LocationId mem = MemoryLocation();
  if (instr.mem_effect == MemEffect::kWrite && !instr.writes.test(mem)) {
    throw SchemaError("'" + ToString(instr) + "' writes memory but 'mem' is not in writes");
  }
  if (instr.mem_effect == MemEffect::kRead && !instr.reads.test(mem)) {
    throw SchemaError("'" + ToString(instr) + "' reads memory but 'mem' is not in reads");
  }
  if (!instr.is_control_flow && instr.reads.none() && instr.writes.none() &&
      !IsNoOpMnemonic(instr.mnemonic)) {
    throw SchemaError("'" + ToString(instr) + "' has empty read and write sets");
  }
}

std::string ToString(const Instruction& instr) {
  std::string out = instr.mnemonic;
  for (std::size_t i = 0; i < instr.operands.size(); ++i) {
    out += (i == 0) ? " " : ", ";
    out += instr.operands[i];
  }
  return out;
}

OperandKind ClassifyOperand(std::string_view operand, bool control_flow) {
  if (operand.find('[') != std::string_view::npos) return OperandKind::kMemory;
  if (control_flow) return OperandKind::kLabel;
  if (!operand.empty()) {
    const char c = operand.front();
    if (c == '#' || c == '$' || c == '-' || c == '+' ||
        std::isdigit(static_cast<unsigned char>(c))) {
      return OperandKind::kImmediate;
    }
  }
  return OperandKind::kRegister;
}

std::string ShapeToken(const Instruction& instr) {
  std::string token = instr.mnemonic;
  for (const auto& op : instr.operands) {
    switch (ClassifyOperand(op, instr.is_control_flow)) {
      case OperandKind::kRegister: token += " R"; break;
      case OperandKind::kImmediate: token += " I"; break;
      case OperandKind::kMemory: token += " M"; break;
      case OperandKind::kLabel: token += " L"; break;
    }
  }
  return token;
}

BasicBlock::BasicBlock(int id, std::vector<Instruction> instrs,
                       std::vector<int> succs)
    : id_(id), instrs_(std::move(instrs)), succs_(std::move(succs)) {
  const std::string where = "block " + std::to_string(id_);
  if (instrs_.empty()) throw GraphError(where + " is empty");
  for (std::size_t i = 0; i + 1 < instrs_.size(); ++i) {
    if (instrs_[i].is_control_flow) {
      throw GraphError(where + ": control-flow instruction '" +
                       ToString(instrs_[i]) + "' is not the block tail");
    }
  }
  if (succs_.size() > 2) throw GraphError(where + " has more than 2 successors");
  const std::size_t n = succs_.size();
  switch (ControlKindOf(instrs_.back())) {
    case ControlKind::kNone:
      if (n > 1) throw GraphError(where + " falls through to more than 1 successor");
      break;
    case ControlKind::kJump:
      if (n != 1) throw GraphError(where + " ends in an unconditional jump but has " + std::to_string(n) + " successors");
      break;
    case ControlKind::kConditional:
      if (n != 2) throw GraphError(where + " ends in a conditional jump but has " + std::to_string(n) + " successors");
      break;
    case ControlKind::kReturn:
      if (n != 0) throw GraphError(where + " ends in a return but has successors");
      break;
    case ControlKind::kOther:
      break;
  }
  std::uint64_t h = kFnvOffset;
  for (const auto& instr : instrs_) h = HashCombine(h, HashInstruction(instr));
  content_hash_ = h;
}

std::size_t BasicBlock::NonControlCount() const {
  return HasControlTail() ? instrs_.size() - 1 : instrs_.size();
}

bool BasicBlock::HasControlTail() const {
  return instrs_.back().is_control_flow;
}

bool BasicBlock::operator==(const BasicBlock& other) const {
  return id_ == other.id_ && content_hash_ == other.content_hash_ &&
         succs_ == other.succs_ && instrs_ == other.instrs_;
}

FunctionCfg::FunctionCfg(std::string id, std::string name,
                         Provenance provenance, int entry,
                         std::vector<BlockPtr> blocks)
    : id_(std::move(id)),
      name_(std::move(name)),
      provenance_(std::move(provenance)),
      entry_(entry),
      blocks_(std::move(blocks)) {
  for (const auto& b : blocks_) {
    if (!b) throw GraphError("function '" + id_ + "' has a null block");
  }
  if (!std::is_sorted(blocks_.begin(), blocks_.end(),
                      [](const BlockPtr& a, const BlockPtr& b) { return a->id() < b->id(); })) {
    std::sort(blocks_.begin(), blocks_.end(),
              [](const BlockPtr& a, const BlockPtr& b) { return a->id() < b->id(); });
  }
  for (std::size_t i = 1; i < blocks_.size(); ++i) {
    if (blocks_[i]->id() == blocks_[i - 1]->id()) {
      throw GraphError("function '" + id_ + "' has duplicate block id " +
                       std::to_string(blocks_[i]->id()));
    }
  }
  if (FindBlock(entry_) == nullptr) {
    throw GraphError("function '" + id_ + "' has no entry block " + std::to_string(entry_));
  }
  std::uint64_t fp = HashCombine(kFnvOffset, static_cast<std::uint64_t>(entry_));
  for (const auto& b : blocks_) {
    instruction_count_ += b->size();
    std::vector<int> distinct = b->succs();
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    edge_count_ += distinct.size();
    fp = HashCombine(fp, static_cast<std::uint64_t>(b->id()));
    fp = HashCombine(fp, b->content_hash());
    for (int s : b->succs()) {
      if (FindBlock(s) == nullptr) {
        throw GraphError("block " + std::to_string(b->id()) + " of '" + id_ +
                         "' has dangling successor " + std::to_string(s));
      }
      fp = HashCombine(fp, static_cast<std::uint64_t>(s) + 0x51);
    }
    fp = HashCombine(fp, 0xb10c);
  }
  fingerprint_ = fp;
}

FunctionCfg FunctionCfg::WithBlocks(std::vector<BlockPtr> blocks) const {
  return WithBlocks(std::move(blocks), entry_);
}

FunctionCfg FunctionCfg::WithBlocks(std::vector<BlockPtr> blocks, int entry) const {
  return FunctionCfg(id_, name_, provenance_, entry, std::move(blocks));
}

FunctionCfg FunctionCfg::WithIdentity(std::string id, std::string name,
                                      Provenance provenance) const {
  FunctionCfg copy = *this;
  copy.id_ = std::move(id);
  copy.name_ = std::move(name);
  copy.provenance_ = std::move(provenance);
  return copy;
}

const BasicBlock* FunctionCfg::FindBlock(int id) const {
  auto it = std::lower_bound(blocks_.begin(), blocks_.end(), id,
                             [](const BlockPtr& b, int v) { return b->id() < v; });
  if (it == blocks_.end() || (*it)->id() != id) return nullptr;
  return it->get();
}

const BasicBlock& FunctionCfg::block(int id) const {
  const BasicBlock* b = FindBlock(id);
  if (b == nullptr) {
    throw GraphError("function '" + id_ + "' has no block " + std::to_string(id));
  }
  return *b;
}

std::size_t FunctionCfg::BlockIndex(int id) const {
  auto it = std::lower_bound(blocks_.begin(), blocks_.end(), id,
                             [](const BlockPtr& b, int v) { return b->id() < v; });
  if (it == blocks_.end() || (*it)->id() != id) {
    throw GraphError("function '" + id_ + "' has no block " + std::to_string(id));
  }
  return static_cast<std::size_t>(it - blocks_.begin());
}

int FunctionCfg::NextBlockId() const {
  return blocks_.empty() ? 0 : blocks_.back()->id() + 1;
}

bool FunctionCfg::operator==(const FunctionCfg& other) const {
  if (id_ != other.id_ || name_ != other.name_ ||
      provenance_ != other.provenance_ || entry_ != other.entry_ ||
      fingerprint_ != other.fingerprint_ || blocks_.size() != other.blocks_.size()) {
    return false;
  }
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    if (blocks_[i] != other.blocks_[i] && !(*blocks_[i] == *other.blocks_[i])) {
      return false;
    }
  }
  return true;
}

Instruction ParseInstruction(const json& doc) {
  Instruction instr;
  instr.mnemonic = Require(doc, "mn", json::value_t::string, "instruction").get<std::string>();
  for (const auto& op : Require(doc, "ops", json::value_t::array, "instruction")) {
    if (!op.is_string()) throw SchemaError("instruction operands must be strings");
    instr.operands.push_back(op.get<std::string>());
  }
  instr.reads = ParseLocations(Require(doc, "reads", json::value_t::array, "instruction"), "reads");
  instr.writes = ParseLocations(Require(doc, "writes", json::value_t::array, "instruction"), "writes");
  instr.is_control_flow = Require(doc, "cf", json::value_t::boolean, "instruction").get<bool>();
  const std::string mem = Require(doc, "mem", json::value_t::string, "instruction").get<std::string>();
  if (mem == "none") {
    instr.mem_effect = MemEffect::kNone;
  } else if (mem == "read") {
    instr.mem_effect = MemEffect::kRead;
  } else if (mem == "write") {
    instr.mem_effect = MemEffect::kWrite;
  } else {
    throw SchemaError("instruction field 'mem' must be none|read|write, got '" + mem + "'");
  }
  if (auto it = doc.find("synthetic"); it != doc.end()) {
    if (!it->is_boolean()) throw SchemaError("instruction field 'synthetic' must be boolean");
    instr.synthetic = it->get<bool>();
  }
  ValidateInstruction(instr);
  return instr;
}

json SerializeInstruction(const Instruction& instr) {
  static constexpr const char* kMem[] = {"none", "read", "write"};
  json doc = {{"mn", instr.mnemonic},
              {"ops", instr.operands},
              {"reads", LocationNames(instr.reads)},
              {"writes", LocationNames(instr.writes)},
              {"cf", instr.is_control_flow},
              {"mem", kMem[static_cast<int>(instr.mem_effect)]}};
  if (instr.synthetic) doc["synthetic"] = true;
  return doc;
}

FunctionCfg ParseFunction(const json& doc, ParseOptions options) {
  const std::string id = Require(doc, "id", json::value_t::string, "function").get<std::string>();
  const std::string what = "function '" + id + "'";
  Provenance prov;
  const json& p = Require(doc, "provenance", json::value_t::object, what.c_str());
  prov.project = Require(p, "project", json::value_t::string, "provenance").get<std::string>();
  prov.compiler = Require(p, "compiler", json::value_t::string, "provenance").get<std::string>();
  prov.opt_level = Require(p, "opt_level", json::value_t::string, "provenance").get<std::string>();
  const std::string name = Require(doc, "name", json::value_t::string, what.c_str()).get<std::string>();
  const int entry = Require(doc, "entry", json::value_t::number_integer, what.c_str()).get<int>();
  std::vector<BlockPtr> blocks;
  for (const auto& b : Require(doc, "blocks", json::value_t::array, what.c_str())) {
    const int bid = Require(b, "id", json::value_t::number_integer, "block").get<int>();
    std::vector<int> succs;
    for (const auto& s : Require(b, "succs", json::value_t::array, "block")) {
      if (!s.is_number_integer()) throw SchemaError("block successors must be integers");
      succs.push_back(s.get<int>());
    }
    std::vector<Instruction> instrs;
    for (const auto& i : Require(b, "instrs", json::value_t::array, "block")) {
      instrs.push_back(ParseInstruction(i));
    }
    blocks.push_back(std::make_shared<const BasicBlock>(bid, std::move(instrs), std::move(succs)));
  }
  if (blocks.empty()) throw GraphError(what + " has no blocks");
  FunctionCfg f(id, name, std::move(prov), entry, std::move(blocks));
  if (options.strict) CheckCorpusFilter(f);
  return f;
}

json SerializeFunction(const FunctionCfg& f) {
  json blocks = json::array();
  for (const auto& b : f.blocks()) {
    json instrs = json::array();
    for (const auto& instr : b->instrs()) instrs.push_back(SerializeInstruction(instr));
    blocks.push_back({{"id", b->id()}, {"succs", b->succs()}, {"instrs", std::move(instrs)}});
  }
  return {{"id", f.id()},
          {"name", f.name()},
          {"provenance",
           {{"project", f.provenance().project},
            {"compiler", f.provenance().compiler},
            {"opt_level", f.provenance().opt_level}}},
          {"entry", f.entry()},
          {"blocks", std::move(blocks)}};
}

std::vector<FunctionCfg> ParseCorpus(const json& doc, ParseOptions options) {
  if (!doc.is_array()) throw SchemaError("corpus must be a JSON array of functions");
  std::vector<FunctionCfg> out;
  out.reserve(doc.size());
  for (const auto& f : doc) out.push_back(ParseFunction(f, options));
  return out;
}

json SerializeCorpus(std::span<const FunctionCfg> functions) {
  json out = json::array();
  for (const auto& f : functions) out.push_back(SerializeFunction(f));
  return out;
}

std::vector<FunctionCfg> LoadCorpus(const std::string& path, ParseOptions options) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open corpus '" + path + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw SchemaError("corpus '" + path + "' is not valid JSON: " + e.what());
  }
  return ParseCorpus(doc, options);
}

void SaveCorpus(const std::string& path, std::span<const FunctionCfg> functions) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path + "'");
  out << SerializeCorpus(functions).dump() << "\n";
}

bool PassesCorpusFilter(const FunctionCfg& f) {
  return f.instruction_count() >= kMinCorpusInstructions &&
         f.node_count() >= kMinCorpusNodes;
}

void CheckCorpusFilter(const FunctionCfg& f) {
  if (!PassesCorpusFilter(f)) {
    throw FilterError("function '" + f.id() + "' has " +
                      std::to_string(f.instruction_count()) + " instructions and " +
                      std::to_string(f.node_count()) +
                      " nodes; the corpus filter requires at least 6 and 2");
  }
}

std::size_t FunctionLen(const FunctionCfg& f) { return f.instruction_count(); }

Dependence Dependency(const Instruction& a, const Instruction& b) {
  if (a.is_control_flow || b.is_control_flow) return Dependence::kDependent;
  if ((a.writes & b.reads).any() || (a.reads & b.writes).any() ||
      (a.writes & b.writes).any()) {
    return Dependence::kDependent;
  }
  const LocationId mem = MemoryLocation();
  const bool a_touch = a.mem_effect != MemEffect::kNone || a.reads.test(mem) || a.writes.test(mem);
  const bool b_touch = b.mem_effect != MemEffect::kNone || b.reads.test(mem) || b.writes.test(mem);
  const bool a_write = a.mem_effect == MemEffect::kWrite || a.writes.test(mem);
  const bool b_write = b.mem_effect == MemEffect::kWrite || b.writes.test(mem);
  if (a_touch && b_touch && (a_write || b_write)) return Dependence::kDependent;
  return Dependence::kIndependent;
}

ModificationSize MeasureModification(const FunctionCfg& query,
                                     const FunctionCfg& adversarial) {
  if (adversarial.instruction_count() < query.instruction_count() ||
      adversarial.node_count() < query.node_count()) {
    throw std::invalid_argument("adversarial function is smaller than the query");
  }
  return {adversarial.instruction_count() - query.instruction_count(),
          adversarial.node_count() - query.node_count()};
}

LocationSet ClobberSet(const Strand& strand) {
  LocationSet clobbered;
  const LocationId mem = MemoryLocation();
  for (const auto& instr : strand.instrs) {
    if (instr.is_control_flow) {
      throw InvalidStrand("strand contains control flow '" + ToString(instr) + "'");
    }
    if (instr.mem_effect == MemEffect::kWrite || instr.writes.test(mem)) {
      throw InvalidStrand("strand writes memory in '" + ToString(instr) + "'");
    }
    if (HasKind(instr.writes, LocationKind::kStackSlot)) {
      throw InvalidStrand("strand writes the stack in '" + ToString(instr) + "'");
    }
    clobbered |= instr.writes;
  }
  return clobbered;
}

void ValidateStrand(const Strand& strand) {
  if (strand.instrs.empty()) throw InvalidStrand("strand is empty");
  ClobberSet(strand);
  const auto& in = strand.instrs;
  if (in.size() < 2) return;
  // Walk backwards from the result: each earlier instruction must define a
  // location read by something already known to feed the result.
  LocationSet needed = in.back().reads;
  for (std::size_t i = in.size() - 1; i-- > 0;) {
    if ((in[i].writes & needed).none()) {
      throw InvalidStrand("instruction '" + ToString(in[i]) +
                          "' does not feed the strand result");
    }
    needed |= in[i].reads;
  }
}

bool IsValidStrand(const Strand& strand) {
  try {
    ValidateStrand(strand);
    return true;
  } catch (const InvalidStrand&) {
    return false;
  }
}

}  // namespace advbin
