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

#include "advbin/transforms.hpp"

#include <algorithm>
#include <cctype>
#include <stdexcept>

#include "advbin/error.hpp"
#include "advbin/isa.hpp"

namespace advbin {
namespace {

std::string Where(const FunctionCfg& f, Position pos) {
  return f.id() + " block " + std::to_string(pos.block) + " index " + std::to_string(pos.index);
}

const BasicBlock& BlockAt(const FunctionCfg& f, Position pos) {
  const BasicBlock* b = f.FindBlock(pos.block);
  if (b == nullptr) throw NotApplicable("no block at " + Where(f, pos));
  return *b;
}

Instruction Synthetic(Instruction instr) {
  instr.synthetic = true;
  return instr;
}

Instruction SaveRegister(LocationId reg) {
  Instruction instr;
  instr.mnemonic = "push";
  instr.operands = {LocationInfo(reg).name};
  instr.reads.set(reg);
  instr.reads.set(InternLocation(kStackName));
  instr.writes.set(InternLocation(kStackName));
  instr.synthetic = true;
  return instr;
}

Instruction RestoreRegister(LocationId reg) {
  Instruction instr;
  instr.mnemonic = "pop";
  instr.operands = {LocationInfo(reg).name};
  instr.reads.set(InternLocation(kStackName));
  instr.writes.set(reg);
  instr.writes.set(InternLocation(kStackName));
  instr.synthetic = true;
  return instr;
}

// Replaces block `id` with `replacement` and appends `extra` blocks.
FunctionCfg Rebuild(const FunctionCfg& f, int id, BlockPtr replacement,
                    std::vector<BlockPtr> extra = {}) {
  std::vector<BlockPtr> blocks;
  blocks.reserve(f.node_count() + extra.size());
  for (const auto& b : f.blocks()) blocks.push_back(b->id() == id ? replacement : b);
  for (auto& b : extra) blocks.push_back(std::move(b));
  return f.WithBlocks(std::move(blocks));
}

template <typename It>
std::vector<Instruction> Slice(It begin, It end) {
  return std::vector<Instruction>(begin, end);
}

}  // namespace

std::string_view ToString(TransformKind kind) {
  switch (kind) {
    case TransformKind::kIR: return "IR";
    case TransformKind::kNS: return "NS";
    case TransformKind::kDBA: return "DBA";
    case TransformKind::kSA: return "SA";
  }
  return "?";
}

TransformKind ParseTransformKind(std::string_view text) {
  std::string upper(text);
  for (char& c : upper) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  for (auto k : kAllTransformKinds) {
    if (ToString(k) == upper) return k;
  }
  throw std::invalid_argument("unknown transformation '" + std::string(text) + "'");
}

std::vector<TransformKind> KindSet::Kinds() const {
  std::vector<TransformKind> out;
  for (auto k : kAllTransformKinds) {
    if (Contains(k)) out.push_back(k);
  }
  return out;
}

std::string KindSet::ToString() const {
  std::string out;
  for (auto k : Kinds()) {
    if (!out.empty()) out += ',';
    out += advbin::ToString(k);
  }
  return out;
}

KindSet KindSet::Parse(std::string_view text) {
  if (text.empty() || text == "all" || text == "ALL") return All();
  KindSet set;
  while (!text.empty()) {
    const std::size_t comma = text.find(',');
    set.Insert(ParseTransformKind(text.substr(0, comma)));
    if (comma == std::string_view::npos) break;
    text.remove_prefix(comma + 1);
  }
  return set;
}

std::string ToString(const TransformAction& action) {
  std::string out = std::string(ToString(action.kind)) + "@" + std::to_string(action.pos.block) +
                    ":" + std::to_string(action.pos.index);
  if (action.strand) out += "/s" + std::to_string(*action.strand);
  return out;
}

std::vector<Position> AllPositions(const FunctionCfg& f) {
  std::vector<Position> out;
  for (const auto& b : f.blocks()) {
    for (std::size_t i = 0; i < b->size(); ++i) out.push_back({b->id(), i});
  }
  return out;
}

std::vector<Position> NonControlPositions(const FunctionCfg& f) {
  std::vector<Position> out;
  for (const auto& b : f.blocks()) {
    for (std::size_t i = 0; i < b->NonControlCount(); ++i) out.push_back({b->id(), i});
  }
  return out;
}

bool IrApplicable(const FunctionCfg& f, Position pos) {
  const BasicBlock* b = f.FindBlock(pos.block);
  if (b == nullptr || pos.index + 1 >= b->NonControlCount()) return false;
  return Dependency(b->instrs()[pos.index], b->instrs()[pos.index + 1]) ==
         Dependence::kIndependent;
}

bool NsApplicable(const FunctionCfg& f, Position pos) {
  const BasicBlock* b = f.FindBlock(pos.block);
  if (b == nullptr) return false;
  const std::size_t k = b->NonControlCount();
  return k >= 3 && pos.index >= 1 && pos.index + 2 <= k;
}

bool InsertionApplicable(const FunctionCfg& f, Position pos) {
  const BasicBlock* b = f.FindBlock(pos.block);
  return b != nullptr && pos.index <= b->NonControlCount();
}

std::vector<TransformAction> EnumerateActions(const FunctionCfg& f,
                                              std::span<const Position> positions,
                                              KindSet enabled, const CandidatePool& pool,
                                              std::size_t per_action_strands) {
  const bool wants_strands = enabled.Contains(TransformKind::kDBA) || enabled.Contains(TransformKind::kSA);
  if (wants_strands && per_action_strands > pool.entries.size()) {
    throw std::invalid_argument("per_action_strands exceeds the pool size");
  }
  std::vector<TransformAction> out;
  for (const Position& pos : positions) {
    if (enabled.Contains(TransformKind::kIR) && IrApplicable(f, pos)) {
      out.push_back({TransformKind::kIR, pos, std::nullopt});
    }
    if (enabled.Contains(TransformKind::kNS) && NsApplicable(f, pos)) {
      out.push_back({TransformKind::kNS, pos, std::nullopt});
    }
    if (!wants_strands || !InsertionApplicable(f, pos)) continue;
    for (TransformKind kind : {TransformKind::kDBA, TransformKind::kSA}) {
      if (!enabled.Contains(kind)) continue;
      for (std::size_t i = 0; i < per_action_strands; ++i) {
        out.push_back({kind, pos, pool.entries[i]});
      }
    }
  }
  return out;
}

FunctionCfg ApplyIr(const FunctionCfg& f, Position pos) {
  if (!IrApplicable(f, pos)) throw NotApplicable("IR not applicable at " + Where(f, pos));
  const BasicBlock& b = BlockAt(f, pos);
  std::vector<Instruction> instrs = b.instrs();
  std::swap(instrs[pos.index], instrs[pos.index + 1]);
  return Rebuild(f, b.id(), std::make_shared<const BasicBlock>(b.id(), std::move(instrs), b.succs()));
}

FunctionCfg ApplyNs(const FunctionCfg& f, Position pos) {
  if (!NsApplicable(f, pos)) throw NotApplicable("NS not applicable at " + Where(f, pos));
  const BasicBlock& b = BlockAt(f, pos);
  const auto& in = b.instrs();
  const std::size_t k = b.NonControlCount();
  const std::size_t p1 = pos.index;
  const std::size_t p2 = p1 + std::max<std::size_t>(1, (k - p1) / 2);
  const int id_b = f.NextBlockId();
  const int id_c = id_b + 1;
  auto part_a = Slice(in.begin(), in.begin() + static_cast<std::ptrdiff_t>(p1));
  part_a.push_back(Synthetic(isa::Jmp(id_b)));
  auto part_b = Slice(in.begin() + static_cast<std::ptrdiff_t>(p1), in.begin() + static_cast<std::ptrdiff_t>(p2));
  part_b.push_back(Synthetic(isa::Jmp(id_c)));
  auto part_c = Slice(in.begin() + static_cast<std::ptrdiff_t>(p2), in.end());
  return Rebuild(f, b.id(),
                 std::make_shared<const BasicBlock>(b.id(), std::move(part_a), std::vector<int>{id_b}),
                 {std::make_shared<const BasicBlock>(id_b, std::move(part_b), std::vector<int>{id_c}),
                  std::make_shared<const BasicBlock>(id_c, std::move(part_c), b.succs())});
}

FunctionCfg ApplyDba(const FunctionCfg& f, Position pos, const Strand& strand) {
  ValidateStrand(strand);
  if (!InsertionApplicable(f, pos)) throw NotApplicable("DBA not applicable at " + Where(f, pos));
  const BasicBlock& b = BlockAt(f, pos);
  const auto& in = b.instrs();
  const auto cut = in.begin() + static_cast<std::ptrdiff_t>(pos.index);
  const int id_rest = f.NextBlockId();
  const int id_dead = id_rest + 1;
  auto head = Slice(in.begin(), cut);
  head.push_back(Synthetic(isa::Pushf()));
  head.push_back(Synthetic(isa::Cmp(0, 0)));
  head.push_back(Synthetic(isa::Jcc("jne", id_dead)));
  std::vector<Instruction> rest = {Synthetic(isa::Popf())};
  rest.insert(rest.end(), cut, in.end());
  std::vector<Instruction> dead;
  for (const auto& instr : strand.instrs) dead.push_back(Synthetic(instr));
  dead.push_back(Synthetic(isa::Jmp(id_rest)));
  return Rebuild(
      f, b.id(),
      std::make_shared<const BasicBlock>(b.id(), std::move(head), std::vector<int>{id_dead, id_rest}),
      {std::make_shared<const BasicBlock>(id_rest, std::move(rest), b.succs()),
       std::make_shared<const BasicBlock>(id_dead, std::move(dead), std::vector<int>{id_rest})});
}

FunctionCfg ApplySa(const FunctionCfg& f, Position pos, const Strand& strand) {
  ValidateStrand(strand);
  if (!InsertionApplicable(f, pos)) throw NotApplicable("SA not applicable at " + Where(f, pos));
  const LocationSet clobbered = ClobberSet(strand);
  std::vector<LocationId> regs;
  bool flags = false;
  for (const auto& name : LocationNames(clobbered)) {
    const LocationId id = InternLocation(name);
    if (LocationInfo(id).kind == LocationKind::kFlag) {
      flags = true;
    } else {
      regs.push_back(id);
    }
  }
  std::vector<Instruction> inserted;
  for (LocationId r : regs) inserted.push_back(SaveRegister(r));
  if (flags) inserted.push_back(Synthetic(isa::Pushf()));
  for (const auto& instr : strand.instrs) inserted.push_back(Synthetic(instr));
  if (flags) inserted.push_back(Synthetic(isa::Popf()));
  for (auto it = regs.rbegin(); it != regs.rend(); ++it) inserted.push_back(RestoreRegister(*it));

  const BasicBlock& b = BlockAt(f, pos);
  std::vector<Instruction> instrs = b.instrs();
  instrs.insert(instrs.begin() + static_cast<std::ptrdiff_t>(pos.index), inserted.begin(), inserted.end());
  return Rebuild(f, b.id(), std::make_shared<const BasicBlock>(b.id(), std::move(instrs), b.succs()));
}

FunctionCfg ApplyAction(const FunctionCfg& f, const TransformAction& action, const StrandDb& db) {
  switch (action.kind) {
    case TransformKind::kIR: return ApplyIr(f, action.pos);
    case TransformKind::kNS: return ApplyNs(f, action.pos);
    case TransformKind::kDBA:
    case TransformKind::kSA: {
      if (!action.strand || *action.strand >= db.size()) {
        throw InvalidStrand("action " + ToString(action) + " has no usable strand");
      }
      const Strand& s = db.strand(*action.strand);
      return action.kind == TransformKind::kDBA ? ApplyDba(f, action.pos, s)
                                                : ApplySa(f, action.pos, s);
    }
  }
  throw std::logic_error("unhandled transform kind");
}

FunctionCfg RemoveInstruction(const FunctionCfg& f, Position pos) {
  const BasicBlock& b = BlockAt(f, pos);
  if (pos.index >= b.size()) throw NotApplicable("no instruction at " + Where(f, pos));
  if (b.instrs()[pos.index].is_control_flow) {
    throw NotApplicable("cannot remove control flow at " + Where(f, pos));
  }
  std::vector<Instruction> instrs = b.instrs();
  if (instrs.size() == 1) {
    instrs[0] = Synthetic(isa::Nop());
  } else {
    instrs.erase(instrs.begin() + static_cast<std::ptrdiff_t>(pos.index));
  }
  return Rebuild(f, b.id(), std::make_shared<const BasicBlock>(b.id(), std::move(instrs), b.succs()));
}

}  // namespace advbin
