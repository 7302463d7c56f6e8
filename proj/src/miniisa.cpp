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

#include "advbin/miniisa.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <functional>
#include <utility>

#include "advbin/error.hpp"

namespace advbin {
namespace {

enum class Op {
  kMov, kAdd, kSub, kMul, kAnd, kOr, kXor, kShl, kShr, kCmp, kTest,
  kLoad, kStore, kPush, kPop, kPushf, kPopf, kJmp, kJz, kJnz, kRet, kNop
};

struct Decoded {
  Op op = Op::kNop;
  int dst = -1;
  int a = -1;
  int b = -1;  // -1 when the second source is an immediate
  std::int64_t imm = 0;
  int base = -1;
  std::int64_t offset = 0;
};

struct DecodedBlock {
  int id = 0;
  std::vector<Decoded> code;
  std::vector<std::size_t> succs;  // indices into the decoded block list
};

std::int64_t ParseImm(std::string_view s) {
  std::int64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) {
    throw IllegalInstruction("bad immediate '" + std::string(s) + "'");
  }
  return v;
}

void DecodeSource(std::string_view s, Decoded& d) {
  d.b = isa::ParseReg(s);
  if (d.b < 0) d.imm = ParseImm(s);
}

void DecodeMem(std::string_view s, Decoded& d) {
  s = s.substr(1, s.size() - 2);
  const std::size_t sign = s.find_first_of("+-", 1);
  d.base = isa::ParseReg(s.substr(0, sign));
  if (sign != std::string_view::npos) {
    d.offset = ParseImm(s.substr(sign + 1));
    if (s[sign] == '-') d.offset = -d.offset;
  }
}

Decoded Decode(const Instruction& instr) {
  static const std::map<std::string, Op, std::less<>> kOps = {
      {"mov", Op::kMov}, {"add", Op::kAdd}, {"sub", Op::kSub}, {"mul", Op::kMul},
      {"and", Op::kAnd}, {"or", Op::kOr}, {"xor", Op::kXor}, {"shl", Op::kShl},
      {"shr", Op::kShr}, {"cmp", Op::kCmp}, {"test", Op::kTest}, {"load", Op::kLoad},
      {"store", Op::kStore}, {"push", Op::kPush}, {"pop", Op::kPop},
      {"pushf", Op::kPushf}, {"popf", Op::kPopf}, {"jmp", Op::kJmp}, {"jz", Op::kJz},
      {"jnz", Op::kJnz}, {"jne", Op::kJnz}, {"ret", Op::kRet}, {"nop", Op::kNop}};
  auto it = kOps.find(instr.mnemonic);
  if (it == kOps.end()) {
    throw IllegalInstruction("'" + ToString(instr) + "' is not a mini-ISA instruction");
  }
  // Re-deriving through the table validates operand shapes.
  isa::Make(instr.mnemonic, instr.operands);
  Decoded d;
  d.op = it->second;
  const auto& ops = instr.operands;
  switch (d.op) {
    case Op::kMov:
      d.dst = isa::ParseReg(ops[0]);
      DecodeSource(ops[1], d);
      break;
    case Op::kAdd: case Op::kSub: case Op::kMul: case Op::kAnd: case Op::kOr:
    case Op::kXor: case Op::kShl: case Op::kShr:
      d.dst = isa::ParseReg(ops[0]);
      d.a = isa::ParseReg(ops[1]);
      DecodeSource(ops[2], d);
      break;
    case Op::kCmp: case Op::kTest:
      d.a = isa::ParseReg(ops[0]);
      DecodeSource(ops[1], d);
      break;
    case Op::kLoad:
      d.dst = isa::ParseReg(ops[0]);
      DecodeMem(ops[1], d);
      break;
    case Op::kStore:
      DecodeMem(ops[0], d);
      d.a = isa::ParseReg(ops[1]);
      break;
    case Op::kPush:
      d.a = isa::ParseReg(ops[0]);
      break;
    case Op::kPop:
      d.dst = isa::ParseReg(ops[0]);
      break;
    default:
      break;
  }
  return d;
}

std::vector<DecodedBlock> DecodeFunction(const FunctionCfg& f) {
  std::vector<DecodedBlock> out;
  out.reserve(f.node_count());
  for (const auto& b : f.blocks()) {
    DecodedBlock db;
    db.id = b->id();
    for (const auto& instr : b->instrs()) db.code.push_back(Decode(instr));
    for (int s : b->succs()) db.succs.push_back(f.BlockIndex(s));
    out.push_back(std::move(db));
  }
  return out;
}

void SetFlags(MachineState& s, std::uint64_t result) {
  s.zf = result == 0;
  s.sf = (result >> 63) != 0;
}

ExecResult Run(const std::vector<DecodedBlock>& blocks, std::size_t entry,
               const MachineState& input, std::uint64_t fuel) {
  MachineState s = input;
  ExecResult result;
  std::size_t cur = entry;
  auto& r = s.regs;
  for (;;) {
    const DecodedBlock& block = blocks[cur];
    result.visited.insert(block.id);
    bool jumped = false;
    for (const Decoded& d : block.code) {
      if (fuel == 0) throw OutOfFuel("fuel exhausted");
      --fuel;
      ++result.steps;
      const std::uint64_t b = d.b >= 0 ? r[d.b] : static_cast<std::uint64_t>(d.imm);
      switch (d.op) {
        case Op::kMov: r[d.dst] = b; break;
        case Op::kAdd: {
          const std::uint64_t a = r[d.a];
          const std::uint64_t v = a + b;
          s.cf = v < a;
          SetFlags(s, v);
          r[d.dst] = v;
          break;
        }
        case Op::kSub: {
          const std::uint64_t a = r[d.a];
          s.cf = a < b;
          const std::uint64_t v = a - b;
          SetFlags(s, v);
          r[d.dst] = v;
          break;
        }
        case Op::kMul: { const std::uint64_t v = r[d.a] * b; SetFlags(s, v); r[d.dst] = v; break; }
        case Op::kAnd: { const std::uint64_t v = r[d.a] & b; SetFlags(s, v); r[d.dst] = v; break; }
        case Op::kOr: { const std::uint64_t v = r[d.a] | b; SetFlags(s, v); r[d.dst] = v; break; }
        case Op::kXor: { const std::uint64_t v = r[d.a] ^ b; SetFlags(s, v); r[d.dst] = v; break; }
        case Op::kShl: { const std::uint64_t v = r[d.a] << (b & 63); SetFlags(s, v); r[d.dst] = v; break; }
        case Op::kShr: { const std::uint64_t v = r[d.a] >> (b & 63); SetFlags(s, v); r[d.dst] = v; break; }
        case Op::kCmp: {
          const std::uint64_t a = r[d.a];
          s.cf = a < b;
          SetFlags(s, a - b);
          break;
        }
        case Op::kTest: SetFlags(s, r[d.a] & b); break;
        case Op::kLoad: {
          auto it = s.mem.find(r[d.base] + static_cast<std::uint64_t>(d.offset));
          r[d.dst] = it == s.mem.end() ? 0 : it->second;
          break;
        }
        case Op::kStore: {
          const std::uint64_t addr = r[d.base] + static_cast<std::uint64_t>(d.offset);
          if (r[d.a] == 0) {
            s.mem.erase(addr);
          } else {
            s.mem[addr] = r[d.a];
          }
          break;
        }
        case Op::kPush: s.stack.push_back(r[d.a]); break;
        case Op::kPop:
          if (s.stack.empty()) throw IllegalInstruction("pop on an empty stack");
          r[d.dst] = s.stack.back();
          s.stack.pop_back();
          break;
        case Op::kPushf:
          s.stack.push_back((s.zf ? 1u : 0u) | (s.sf ? 2u : 0u) | (s.cf ? 4u : 0u));
          break;
        case Op::kPopf: {
          if (s.stack.empty()) throw IllegalInstruction("popf on an empty stack");
          const std::uint64_t v = s.stack.back();
          s.stack.pop_back();
          s.zf = (v & 1) != 0;
          s.sf = (v & 2) != 0;
          s.cf = (v & 4) != 0;
          break;
        }
        case Op::kJmp:
          cur = block.succs.at(0);
          jumped = true;
          break;
        case Op::kJz:
          cur = block.succs.at(s.zf ? 0 : 1);
          jumped = true;
          break;
        case Op::kJnz:
          cur = block.succs.at(s.zf ? 1 : 0);
          jumped = true;
          break;
        case Op::kRet:
          s.halted = true;
          break;
        case Op::kNop: break;
      }
    }
    if (s.halted) break;
    if (!jumped) {
      if (block.succs.empty()) {
        s.halted = true;
        break;
      }
      cur = block.succs[0];
    }
  }
  for (int i = 0; i < isa::kNumObservableRegisters; ++i) result.observable.regs[i] = r[i];
  result.observable.mem = std::move(s.mem);
  result.observable.halted = s.halted;
  return result;
}

}  // namespace

ExecResult Execute(const FunctionCfg& f, const MachineState& input, std::uint64_t fuel) {
  const auto blocks = DecodeFunction(f);
  return Run(blocks, f.BlockIndex(f.entry()), input, fuel);
}

MachineState RandomState(Rng& rng) {
  MachineState s;
  for (auto& reg : s.regs) reg = rng.Chance(0.5) ? rng.Below(16) : rng.Next();
  s.zf = rng.Chance(0.5);
  s.sf = rng.Chance(0.5);
  s.cf = rng.Chance(0.5);
  for (std::uint64_t addr = 0; addr < kMemoryWindow; ++addr) {
    const std::uint64_t v = rng.Chance(0.25) ? 0 : rng.Next();
    if (v != 0) s.mem[addr] = v;
  }
  return s;
}

EquivalenceVerdict CheckEquivalence(const FunctionCfg& first, const FunctionCfg& second,
                                    int trials, std::uint64_t seed, std::uint64_t fuel) {
  const auto code1 = DecodeFunction(first);
  const auto code2 = DecodeFunction(second);
  const std::size_t entry1 = first.BlockIndex(first.entry());
  const std::size_t entry2 = second.BlockIndex(second.entry());
  EquivalenceVerdict verdict;
  Rng rng(seed);
  for (int t = 0; t < trials; ++t) {
    const MachineState input = RandomState(rng);
    ExecResult r1, r2;
    try {
      r1 = Run(code1, entry1, input, fuel);
      r2 = Run(code2, entry2, input, fuel);
    } catch (const OutOfFuel&) {
      ++verdict.trials_skipped;
      continue;
    }
    ++verdict.trials_run;
    verdict.visited_second.insert(r2.visited.begin(), r2.visited.end());
    if (!(r1.observable == r2.observable)) {
      verdict.equivalent = false;
      verdict.counterexample = input;
      break;
    }
  }
  return verdict;
}

namespace {

constexpr int kFirstScratch = 4;
constexpr int kLastValueReg = 11;  // r12..r15 are loop counters
constexpr int kFirstCounter = 12;

class FunctionBuilder {
 public:
  FunctionBuilder(std::uint64_t seed, const GenOptions& options)
      : rng_(seed), options_(options) {
    target_blocks_ = rng_.Range(options.blocks.lo, options.blocks.hi);
  }

  FunctionCfg Build(const std::string& id, const std::string& name) {
    cur_ = NewBlock();
    std::vector<bool> defined(isa::kNumRegisters, false);
    for (int i = 0; i < isa::kNumObservableRegisters; ++i) defined[i] = true;
    defined = Region(defined, 0, /*top=*/true);
    Straight(defined, 1);
    Emit(isa::Ret());
    if (blocks_.size() < 2) {
      // Degenerate draw; the caller retries with another seed.
      return {};
    }
    std::vector<BlockPtr> built;
    for (std::size_t i = 0; i < blocks_.size(); ++i) {
      built.push_back(std::make_shared<const BasicBlock>(
          static_cast<int>(i), std::move(blocks_[i].instrs), std::move(blocks_[i].succs)));
    }
    return FunctionCfg(id, name, Provenance{options_.project, "source", "none"}, 0,
                       std::move(built));
  }

 private:
  struct Draft {
    std::vector<Instruction> instrs;
    std::vector<int> succs;
  };

  int NewBlock() {
    blocks_.push_back({});
    return static_cast<int>(blocks_.size()) - 1;
  }

  void Emit(Instruction instr) { blocks_[cur_].instrs.push_back(std::move(instr)); }

  int DefinedReg(const std::vector<bool>& defined) {
    std::vector<int> regs;
    for (int i = 0; i <= kLastValueReg; ++i) {
      if (defined[i]) regs.push_back(i);
    }
    return rng_.Pick(regs);
  }

  int DestReg() { return rng_.Range(0, kLastValueReg); }

  int ScratchDest() { return rng_.Range(kFirstScratch, kLastValueReg); }

  void Straight(std::vector<bool>& defined, int min_count) {
    const int n = std::max(min_count, rng_.Range(options_.instrs_per_block.lo,
                                                  options_.instrs_per_block.hi));
    std::vector<int> pending_pops;
    for (int i = 0; i < n; ++i) {
      const double roll = rng_.Uniform01();
      if (roll < 0.33) {
        static const std::vector<std::string> kOps = {"add", "sub", "xor", "and", "or", "mul"};
        const int a = DefinedReg(defined), b = DefinedReg(defined), d = DestReg();
        Emit(isa::Alu(rng_.Pick(kOps), d, a, b));
        defined[d] = true;
      } else if (roll < 0.55) {
        static const std::vector<std::string> kOps = {"add", "sub", "xor", "and", "or", "shl", "shr", "mul"};
        const std::string& op = rng_.Pick(kOps);
        const std::int64_t imm = (op == "shl" || op == "shr") ? rng_.Range(1, 7) : rng_.Range(1, 31);
        const int a = DefinedReg(defined), d = DestReg();
        Emit(isa::AluImm(op, d, a, imm));
        defined[d] = true;
      } else if (roll < 0.70) {
        const int d = DestReg();
        if (rng_.Chance(0.5)) {
          Emit(isa::Mov(d, DefinedReg(defined)));
        } else {
          Emit(isa::MovImm(d, rng_.Range(0, 63)));
        }
        defined[d] = true;
      } else if (roll < 0.80) {
        const int t = ScratchDest();
        Emit(isa::AluImm("and", t, DefinedReg(defined), 31));
        defined[t] = true;
        const int d = DestReg();
        Emit(isa::Load(d, t, rng_.Range(0, 15)));
        defined[d] = true;
      } else if (roll < 0.90) {
        const int t = ScratchDest();
        Emit(isa::AluImm("and", t, DefinedReg(defined), 31));
        defined[t] = true;
        Emit(isa::Store(t, rng_.Range(0, 15), DefinedReg(defined)));
      } else if (pending_pops.size() < 2) {
        Emit(isa::Push(isa::Reg(DefinedReg(defined))));
        pending_pops.push_back(DestReg());
      } else {
        Emit(isa::Nop());
      }
    }
    while (!pending_pops.empty()) {
      const int d = pending_pops.back();
      pending_pops.pop_back();
      Emit(isa::Pop(isa::Reg(d)));
      defined[d] = true;
    }
  }

  void Condition(const std::vector<bool>& defined, int target, int fallthrough) {
    const int a = DefinedReg(defined);
    if (rng_.Chance(0.5)) {
      Emit(isa::TestImm(a, 1 << rng_.Range(0, 3)));
    } else if (rng_.Chance(0.5)) {
      Emit(isa::CmpImm(a, rng_.Range(0, 15)));
    } else {
      Emit(isa::Cmp(a, DefinedReg(defined)));
    }
    Emit(isa::Jcc(rng_.Chance(0.5) ? "jz" : "jnz", target));
    blocks_[cur_].succs = {target, fallthrough};
  }

  // Ends the current block with a jump to `target`, sometimes via a pad
  // block that holds nothing but the jump.
  void JumpTo(int target) {
    if (rng_.Chance(0.3)) {
      const int pad = NewBlock();
      Emit(isa::Jmp(pad));
      blocks_[cur_].succs = {pad};
      cur_ = pad;
    }
    Emit(isa::Jmp(target));
    blocks_[cur_].succs = {target};
  }

  std::vector<bool> Region(std::vector<bool> defined, int depth, bool top) {
    const int statements = top ? 64 : rng_.Range(1, 2);
    for (int s = 0; s < statements; ++s) {
      Straight(defined, 1);
      const bool room = static_cast<int>(blocks_.size()) < target_blocks_;
      if (!room || (!top && !rng_.Chance(0.35))) break;
      const double roll = rng_.Uniform01();
      if (roll < 0.35) {
        // if / else
        const int then_b = NewBlock(), else_b = NewBlock(), join = NewBlock();
        Condition(defined, else_b, then_b);
        cur_ = then_b;
        auto then_defs = Region(defined, depth + 1, false);
        JumpTo(join);
        cur_ = else_b;
        auto else_defs = Region(defined, depth + 1, false);
        blocks_[cur_].succs = {join};
        for (int i = 0; i < isa::kNumRegisters; ++i) defined[i] = then_defs[i] && else_defs[i];
        cur_ = join;
      } else if (roll < 0.60) {
        // if without else
        const int then_b = NewBlock(), join = NewBlock();
        Condition(defined, join, then_b);
        cur_ = then_b;
        Region(defined, depth + 1, false);
        blocks_[cur_].succs = {join};
        cur_ = join;
      } else if (roll < 0.85 && depth < options_.max_loop_depth) {
        // counted do-while loop
        const int counter = kFirstCounter + depth;
        Emit(isa::MovImm(counter, rng_.Range(1, 3)));
        const int header = NewBlock();
        blocks_[cur_].succs = {header};
        cur_ = header;
        defined = Region(defined, depth + 1, false);
        Emit(isa::AluImm("sub", counter, counter, 1));
        const int exit = NewBlock();
        Emit(isa::Jcc("jnz", header));
        blocks_[cur_].succs = {header, exit};
        cur_ = exit;
      } else {
        // plain fallthrough split
        const int next = NewBlock();
        blocks_[cur_].succs = {next};
        cur_ = next;
      }
    }
    if (blocks_[cur_].instrs.empty()) Straight(defined, 1);
    return defined;
  }

  Rng rng_;
  GenOptions options_;
  int target_blocks_ = 0;
  std::vector<Draft> blocks_;
  int cur_ = 0;
};

Instruction Relabel(const Instruction& tail, int target) {
  Instruction out = isa::Make(tail.mnemonic, {"b" + std::to_string(target)});
  out.synthetic = tail.synthetic;
  return out;
}

// Rebuilds blocks from drafts keyed by id, fixing control-flow labels so
// they name succs[0].
struct MutableBlock {
  std::vector<Instruction> instrs;
  std::vector<int> succs;
};

FunctionCfg Assemble(const FunctionCfg& like, int entry, const std::map<int, MutableBlock>& blocks) {
  std::vector<BlockPtr> out;
  for (const auto& [id, b] : blocks) {
    std::vector<Instruction> instrs = b.instrs;
    if (!instrs.empty() && instrs.back().is_control_flow && !instrs.back().operands.empty()) {
      instrs.back() = Relabel(instrs.back(), b.succs.at(0));
    }
    out.push_back(std::make_shared<const BasicBlock>(id, std::move(instrs), b.succs));
  }
  return like.WithBlocks(std::move(out), entry);
}

std::map<int, MutableBlock> Thaw(const FunctionCfg& f) {
  std::map<int, MutableBlock> m;
  for (const auto& b : f.blocks()) m[b->id()] = {b->instrs(), b->succs()};
  return m;
}

FunctionCfg RenameRegisters(const FunctionCfg& f, Rng& rng) {
  std::vector<int> perm;
  for (int i = kFirstScratch; i < isa::kNumRegisters; ++i) perm.push_back(i);
  rng.Shuffle(perm);
  auto rename = [&](const std::string& op) {
    std::string out;
    std::size_t i = 0;
    while (i < op.size()) {
      if (op[i] == 'r' && (i == 0 || op[i - 1] == '[') && i + 1 < op.size() &&
          std::isdigit(static_cast<unsigned char>(op[i + 1]))) {
        std::size_t j = i + 1;
        while (j < op.size() && std::isdigit(static_cast<unsigned char>(op[j]))) ++j;
        const int r = std::stoi(op.substr(i + 1, j - i - 1));
        out += isa::Reg(r >= kFirstScratch ? perm[r - kFirstScratch] : r);
        i = j;
      } else {
        out += op[i++];
      }
    }
    return out;
  };
  auto blocks = Thaw(f);
  for (auto& [id, b] : blocks) {
    for (auto& instr : b.instrs) {
      std::vector<std::string> ops;
      for (const auto& op : instr.operands) ops.push_back(instr.is_control_flow ? op : rename(op));
      instr = isa::Make(instr.mnemonic, std::move(ops));
    }
  }
  return Assemble(f, f.entry(), blocks);
}

std::map<int, int> PredecessorCounts(const std::map<int, MutableBlock>& blocks) {
  std::map<int, int> preds;
  for (const auto& [id, b] : blocks) {
    preds[id];
    std::vector<int> s = b.succs;
    std::sort(s.begin(), s.end());
    s.erase(std::unique(s.begin(), s.end()), s.end());
    for (int t : s) ++preds[t];
  }
  return preds;
}

FunctionCfg ThreadAndMerge(const FunctionCfg& f, Rng& rng) {
  auto blocks = Thaw(f);
  int entry = f.entry();
  auto is_pad = [&](int id) {
    const auto& b = blocks.at(id);
    return b.instrs.size() == 1 && ControlKindOf(b.instrs[0]) == ControlKind::kJump;
  };
  // Jump threading.
  for (auto& [id, b] : blocks) {
    for (std::size_t k = 0; k < b.succs.size(); ++k) {
      int s = b.succs[k];
      for (int hops = 0; hops < 8 && s != id && is_pad(s); ++hops) s = blocks.at(s).succs[0];
      const bool collides = b.succs.size() == 2 && s == b.succs[1 - k];
      if (!collides) b.succs[k] = s;
    }
  }
  // Drop what became unreachable.
  std::set<int> reachable;
  std::vector<int> work = {entry};
  while (!work.empty()) {
    const int id = work.back();
    work.pop_back();
    if (!reachable.insert(id).second) continue;
    for (int s : blocks.at(id).succs) work.push_back(s);
  }
  std::erase_if(blocks, [&](const auto& kv) { return reachable.count(kv.first) == 0; });
  // Merge single-entry chains.
  for (bool changed = true; changed;) {
    changed = false;
    const auto preds = PredecessorCounts(blocks);
    for (auto& [id, a] : blocks) {
      if (a.succs.size() != 1) continue;
      const int next = a.succs[0];
      const ControlKind tail = ControlKindOf(a.instrs.back());
      if (next == id || next == entry || preds.at(next) != 1) continue;
      if (tail != ControlKind::kNone && tail != ControlKind::kJump) continue;
      if (tail == ControlKind::kJump) a.instrs.pop_back();
      const MutableBlock& b = blocks.at(next);
      a.instrs.insert(a.instrs.end(), b.instrs.begin(), b.instrs.end());
      a.succs = b.succs;
      blocks.erase(next);
      changed = true;
      break;
    }
  }
  // Renumber in a shuffled order.
  std::vector<int> ids;
  for (const auto& [id, b] : blocks) ids.push_back(id);
  std::vector<int> fresh(ids.size());
  for (std::size_t i = 0; i < fresh.size(); ++i) fresh[i] = static_cast<int>(i);
  rng.Shuffle(fresh);
  std::map<int, int> remap;
  for (std::size_t i = 0; i < ids.size(); ++i) remap[ids[i]] = fresh[i];
  std::map<int, MutableBlock> renamed;
  for (auto& [id, b] : blocks) {
    for (int& s : b.succs) s = remap.at(s);
    renamed[remap.at(id)] = std::move(b);
  }
  return Assemble(f, remap.at(entry), renamed);
}

FunctionCfg RescheduleAndPad(const FunctionCfg& f, Rng& rng) {
  auto blocks = Thaw(f);
  for (auto& [id, b] : blocks) {
    const std::size_t body = b.instrs.back().is_control_flow ? b.instrs.size() - 1 : b.instrs.size();
    if (body < 2) continue;
    for (std::size_t round = 0; round < 2 * body; ++round) {
      const std::size_t i = rng.Below(body - 1);
      if (Dependency(b.instrs[i], b.instrs[i + 1]) == Dependence::kIndependent) {
        std::swap(b.instrs[i], b.instrs[i + 1]);
      }
    }
  }
  std::vector<int> ids;
  for (const auto& [id, b] : blocks) ids.push_back(id);
  const int pads = rng.Range(1, 3);
  for (int p = 0; p < pads; ++p) {
    MutableBlock& b = blocks.at(rng.Pick(ids));
    const std::size_t body = b.instrs.back().is_control_flow ? b.instrs.size() - 1 : b.instrs.size();
    const std::size_t at = rng.Below(body + 1);
    const int r = rng.Range(0, isa::kNumRegisters - 1);
    b.instrs.insert(b.instrs.begin() + static_cast<std::ptrdiff_t>(at),
                    rng.Chance(0.5) ? isa::Nop() : isa::Mov(r, r));
  }
  return Assemble(f, f.entry(), blocks);
}

}  // namespace

FunctionCfg GenFunction(std::uint64_t seed, const GenOptions& options) {
  const std::string id = options.id.empty() ? "fn_" + std::to_string(seed) : options.id;
  const std::string name = options.name.empty() ? id : options.name;
  for (std::uint64_t attempt = 0;; ++attempt) {
    FunctionBuilder builder(attempt == 0 ? seed : DeriveSeed(seed, attempt), options);
    FunctionCfg f = builder.Build(id, name);
    if (f.node_count() > 0 && PassesCorpusFilter(f)) return f;
  }
}

std::array<FunctionCfg, 4> GenVariants(const FunctionCfg& f, std::uint64_t seed) {
  static const Provenance kToolchains[4] = {{"", "gcc-9.4.0", "O0"},
                                            {"", "clang-12", "O0"},
                                            {"", "gcc-9.4.0", "O3"},
                                            {"", "clang-12", "O3"}};
  Rng rng(seed);
  std::array<FunctionCfg, 4> out = {f, RenameRegisters(f, rng), ThreadAndMerge(f, rng),
                                    RescheduleAndPad(f, rng)};
  for (int i = 0; i < 4; ++i) {
    Provenance p = kToolchains[i];
    p.project = f.provenance().project;
    out[i] = out[i].WithIdentity(f.name() + ".v" + std::to_string(i), f.name(), p);
  }
  return out;
}

std::vector<FunctionCfg> GenCorpus(std::size_t groups, std::uint64_t seed, const GenOptions& options) {
  std::vector<FunctionCfg> corpus;
  corpus.reserve(groups * 4);
  for (std::size_t g = 0; g < groups; ++g) {
    GenOptions opts = options;
    char name[32];
    std::snprintf(name, sizeof(name), "fn_%05zu", g);
    opts.id = name;
    opts.name = name;
    const std::uint64_t s = DeriveSeed(seed, g);
    const FunctionCfg f = GenFunction(s, opts);
    for (auto& v : GenVariants(f, DeriveSeed(s, 0x7a))) corpus.push_back(std::move(v));
  }
  return corpus;
}

}  // namespace advbin
