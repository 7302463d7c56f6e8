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

#include "advbin/isa.hpp"

#include <charconv>
#include <map>
#include <utility>

#include "advbin/error.hpp"

namespace advbin::isa {
namespace {

enum class Form { kMov, kAlu, kCompare, kLoad, kStore, kPush, kPop, kPushf, kPopf, kBranch, kReturn, kNop };

struct OpInfo {
  Form form;
  std::vector<std::string_view> flags_read;
  std::vector<std::string_view> flags_written;
  const char* summary;
};

const std::map<std::string, OpInfo, std::less<>>& Table() {
  static const std::map<std::string, OpInfo, std::less<>> table = {
      {"mov", {Form::kMov, {}, {}, "dst <- src"}},
      {"add", {Form::kAlu, {}, {"ZF", "SF", "CF"}, "dst <- a + b; CF = unsigned carry"}},
      {"sub", {Form::kAlu, {}, {"ZF", "SF", "CF"}, "dst <- a - b; CF = unsigned borrow"}},
      {"mul", {Form::kAlu, {}, {"ZF", "SF"}, "dst <- a * b (mod 2^64)"}},
      {"and", {Form::kAlu, {}, {"ZF", "SF"}, "dst <- a & b"}},
      {"or", {Form::kAlu, {}, {"ZF", "SF"}, "dst <- a | b"}},
      {"xor", {Form::kAlu, {}, {"ZF", "SF"}, "dst <- a ^ b"}},
      {"shl", {Form::kAlu, {}, {"ZF", "SF"}, "dst <- a << (b & 63)"}},
      {"shr", {Form::kAlu, {}, {"ZF", "SF"}, "dst <- a >> (b & 63), logical"}},
      {"cmp", {Form::kCompare, {}, {"ZF", "SF", "CF"}, "flags of a - b"}},
      {"test", {Form::kCompare, {}, {"ZF", "SF"}, "flags of a & b"}},
      {"load", {Form::kLoad, {}, {}, "dst <- mem[base + off]"}},
      {"store", {Form::kStore, {}, {}, "mem[base + off] <- src"}},
      {"push", {Form::kPush, {}, {}, "stack.push(src)"}},
      {"pop", {Form::kPop, {}, {}, "dst <- stack.pop()"}},
      {"pushf", {Form::kPushf, {"ZF", "SF", "CF"}, {}, "stack.push(flags)"}},
      {"popf", {Form::kPopf, {}, {"ZF", "SF", "CF"}, "flags <- stack.pop()"}},
      {"jmp", {Form::kBranch, {}, {}, "goto succs[0]"}},
      {"jz", {Form::kBranch, {"ZF"}, {}, "ZF ? succs[0] : succs[1]"}},
      {"jnz", {Form::kBranch, {"ZF"}, {}, "!ZF ? succs[0] : succs[1]"}},
      {"jne", {Form::kBranch, {"ZF"}, {}, "!ZF ? succs[0] : succs[1]"}},
      {"ret", {Form::kReturn, {}, {}, "halt; r0 holds the result"}},
      {"nop", {Form::kNop, {}, {}, "no effect"}},
  };
  return table;
}

const char* FormOperands(Form form) {
  switch (form) {
    case Form::kMov: return "dst, src";
    case Form::kAlu: return "dst, a, b";
    case Form::kCompare: return "a, b";
    case Form::kLoad: return "dst, [base+off]";
    case Form::kStore: return "[base+off], src";
    case Form::kPush: return "src";
    case Form::kPop: return "dst";
    case Form::kBranch: return "label";
    default: return "";
  }
}

bool IsImmediate(std::string_view s) {
  if (s.empty()) return false;
  std::int64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  return ec == std::errc() && p == s.data() + s.size();
}

[[noreturn]] void Bad(std::string_view mnemonic, const std::vector<std::string>& ops,
                      const char* why) {
  std::string text(mnemonic);
  for (const auto& o : ops) text += " " + o;
  throw IllegalInstruction("malformed '" + text + "': " + why);
}

void RequireReg(std::string_view mn, const std::vector<std::string>& ops, std::size_t i) {
  if (ParseReg(ops[i]) < 0) Bad(mn, ops, "expected a register");
}

void RequireRegOrImm(std::string_view mn, const std::vector<std::string>& ops, std::size_t i) {
  if (ParseReg(ops[i]) < 0 && !IsImmediate(ops[i])) Bad(mn, ops, "expected a register or immediate");
}

// "[rB]", "[rB+off]" or "[rB-off]": returns the base register.
int MemBase(std::string_view mn, const std::vector<std::string>& ops, std::size_t i) {
  std::string_view s = ops[i];
  if (s.size() < 4 || s.front() != '[' || s.back() != ']') Bad(mn, ops, "expected [base+off]");
  s = s.substr(1, s.size() - 2);
  const std::size_t sign = s.find_first_of("+-", 1);
  const int base = ParseReg(s.substr(0, sign));
  if (base < 0) Bad(mn, ops, "memory base must be a register");
  if (sign != std::string_view::npos) {
    std::string_view off = s.substr(sign + 1);
    if (!IsImmediate(off) || off.front() == '-') Bad(mn, ops, "bad memory offset");
  }
  return base;
}

void AddFlags(LocationSet& set, const std::vector<std::string_view>& flags) {
  for (auto f : flags) set.set(InternLocation(f));
}

}  // namespace

std::string Reg(int index) { return "r" + std::to_string(index); }

int ParseReg(std::string_view s) {
  if (s.size() < 2 || s.size() > 3 || s[0] != 'r') return -1;
  int v = 0;
  auto [p, ec] = std::from_chars(s.data() + 1, s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size() || v < 0 || v >= kNumRegisters) return -1;
  if (s.size() == 3 && s[1] == '0') return -1;
  return v;
}

bool IsMnemonic(std::string_view mnemonic) { return Table().count(mnemonic) != 0; }

Instruction Make(std::string_view mnemonic, std::vector<std::string> ops) {
  auto it = Table().find(mnemonic);
  if (it == Table().end()) {
    throw IllegalInstruction("unknown mnemonic '" + std::string(mnemonic) + "'");
  }
  const OpInfo& info = it->second;
  Instruction instr;
  instr.mnemonic = std::string(mnemonic);
  const std::size_t arity = [&] {
    switch (info.form) {
      case Form::kMov: case Form::kCompare: case Form::kLoad: case Form::kStore: return 2;
      case Form::kAlu: return 3;
      case Form::kPush: case Form::kPop: case Form::kBranch: return 1;
      default: return 0;
    }
  }();
  if (ops.size() != arity) Bad(mnemonic, ops, "wrong operand count");
  auto reg = [&](std::size_t i) { return InternLocation(ops[i]); };
  auto read_if_reg = [&](std::size_t i) {
    if (ParseReg(ops[i]) >= 0) instr.reads.set(reg(i));
  };
  const LocationId stack = InternLocation(kStackName);
  switch (info.form) {
    case Form::kMov:
      RequireReg(mnemonic, ops, 0);
      RequireRegOrImm(mnemonic, ops, 1);
      read_if_reg(1);
      instr.writes.set(reg(0));
      break;
    case Form::kAlu:
      RequireReg(mnemonic, ops, 0);
      RequireReg(mnemonic, ops, 1);
      RequireRegOrImm(mnemonic, ops, 2);
      instr.reads.set(reg(1));
      read_if_reg(2);
      instr.writes.set(reg(0));
      break;
    case Form::kCompare:
      RequireReg(mnemonic, ops, 0);
      RequireRegOrImm(mnemonic, ops, 1);
      instr.reads.set(reg(0));
      read_if_reg(1);
      break;
    case Form::kLoad:
      RequireReg(mnemonic, ops, 0);
      instr.reads.set(InternLocation(Reg(MemBase(mnemonic, ops, 1))));
      instr.reads.set(MemoryLocation());
      instr.writes.set(reg(0));
      instr.mem_effect = MemEffect::kRead;
      break;
    case Form::kStore:
      instr.reads.set(InternLocation(Reg(MemBase(mnemonic, ops, 0))));
      RequireReg(mnemonic, ops, 1);
      instr.reads.set(reg(1));
      instr.writes.set(MemoryLocation());
      instr.mem_effect = MemEffect::kWrite;
      break;
    case Form::kPush:
      RequireReg(mnemonic, ops, 0);
      instr.reads.set(reg(0));
      instr.reads.set(stack);
      instr.writes.set(stack);
      break;
    case Form::kPop:
      RequireReg(mnemonic, ops, 0);
      instr.reads.set(stack);
      instr.writes.set(reg(0));
      instr.writes.set(stack);
      break;
    case Form::kPushf:
      instr.reads.set(stack);
      instr.writes.set(stack);
      break;
    case Form::kPopf:
      instr.reads.set(stack);
      instr.writes.set(stack);
      break;
    case Form::kBranch:
      instr.is_control_flow = true;
      break;
    case Form::kReturn:
      instr.is_control_flow = true;
      instr.reads.set(InternLocation("r0"));
      break;
    case Form::kNop:
      break;
  }
  AddFlags(instr.reads, info.flags_read);
  AddFlags(instr.writes, info.flags_written);
  instr.operands = std::move(ops);
  return instr;
}

Instruction Mov(int dst, int src) { return Make("mov", {Reg(dst), Reg(src)}); }
Instruction MovImm(int dst, std::int64_t imm) { return Make("mov", {Reg(dst), std::to_string(imm)}); }
Instruction Alu(std::string_view op, int dst, int a, int b) {
  return Make(op, {Reg(dst), Reg(a), Reg(b)});
}
Instruction AluImm(std::string_view op, int dst, int a, std::int64_t imm) {
  return Make(op, {Reg(dst), Reg(a), std::to_string(imm)});
}
Instruction Cmp(int a, int b) { return Make("cmp", {Reg(a), Reg(b)}); }
Instruction CmpImm(int a, std::int64_t imm) { return Make("cmp", {Reg(a), std::to_string(imm)}); }
Instruction Test(int a, int b) { return Make("test", {Reg(a), Reg(b)}); }
Instruction TestImm(int a, std::int64_t imm) { return Make("test", {Reg(a), std::to_string(imm)}); }

Instruction Load(int dst, int base, std::int64_t offset) {
  return Make("load", {Reg(dst), "[" + Reg(base) + "+" + std::to_string(offset) + "]"});
}
Instruction Store(int base, std::int64_t offset, int src) {
  return Make("store", {"[" + Reg(base) + "+" + std::to_string(offset) + "]", Reg(src)});
}
Instruction Push(std::string_view reg) { return Make("push", {std::string(reg)}); }
Instruction Pop(std::string_view reg) { return Make("pop", {std::string(reg)}); }
Instruction Pushf() { return Make("pushf", {}); }
Instruction Popf() { return Make("popf", {}); }
Instruction Jmp(int target) { return Make("jmp", {"b" + std::to_string(target)}); }
Instruction Jcc(std::string_view mnemonic, int target) {
  return Make(mnemonic, {"b" + std::to_string(target)});
}
Instruction Ret() { return Make("ret", {}); }
Instruction Nop() { return Make("nop", {}); }

Instruction MarkSynthetic(Instruction instr) {
  instr.synthetic = true;
  return instr;
}

json TableJson() {
  json entries = json::array();
  for (const auto& [mn, info] : Table()) {
    json reads = json::array();
    json writes = json::array();
    switch (info.form) {
      case Form::kMov: reads = {"src if register"}; writes = {"dst"}; break;
      case Form::kAlu: reads = {"a", "b if register"}; writes = {"dst"}; break;
      case Form::kCompare: reads = {"a", "b if register"}; break;
      case Form::kLoad: reads = {"base", "mem"}; writes = {"dst"}; break;
      case Form::kStore: reads = {"base", "src"}; writes = {"mem"}; break;
      case Form::kPush: reads = {"src", "stack"}; writes = {"stack"}; break;
      case Form::kPop: reads = {"stack"}; writes = {"dst", "stack"}; break;
      case Form::kPushf: reads = {"stack"}; writes = {"stack"}; break;
      case Form::kPopf: reads = {"stack"}; writes = {"stack"}; break;
      case Form::kReturn: reads = {"r0"}; break;
      default: break;
    }
    for (auto f : info.flags_read) reads.push_back(f);
    for (auto f : info.flags_written) writes.push_back(f);
    const bool cf = info.form == Form::kBranch || info.form == Form::kReturn;
    const char* mem = info.form == Form::kLoad ? "read" : info.form == Form::kStore ? "write" : "none";
    entries.push_back({{"mn", mn},
                       {"operands", FormOperands(info.form)},
                       {"reads", reads},
                       {"writes", writes},
                       {"cf", cf},
                       {"mem", mem},
                       {"semantics", info.summary}});
  }
  return {{"registers", "r0..r15 (64-bit); r0..r3 observable"},
          {"flags", {"ZF", "SF", "CF"}},
          {"memory", "flat word-addressed map; unwritten words read as 0"},
          {"stack", "separate word stack, not observable"},
          {"instructions", entries}};
}

}  // namespace advbin::isa
