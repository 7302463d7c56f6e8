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

// The mini-ISA instruction table and instruction builders. Every mnemonic
// carries a fixed read/write-set definition; the transformations emit their
// synthetic instructions (jumps, guards, saves) through these builders too.

#ifndef ADVBIN_ISA_HPP_
#define ADVBIN_ISA_HPP_

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "advbin/cfg.hpp"

namespace advbin::isa {

inline constexpr int kNumRegisters = 16;
// r0..r3 are the observable argument/result registers.
inline constexpr int kNumObservableRegisters = 4;

std::string Reg(int index);
// Register index of "rN", or -1.
int ParseReg(std::string_view operand);

bool IsMnemonic(std::string_view mnemonic);

// Builds an instruction from mnemonic and operand tokens, deriving the
// read/write sets from the table. Throws IllegalInstruction on an unknown
// mnemonic or malformed operands.
Instruction Make(std::string_view mnemonic, std::vector<std::string> operands);

Instruction Mov(int dst, int src);
Instruction MovImm(int dst, std::int64_t imm);
// add/sub/xor/and/or/shl/shr/mul dst, a, b
Instruction Alu(std::string_view op, int dst, int a, int b);
Instruction AluImm(std::string_view op, int dst, int a, std::int64_t imm);
Instruction Cmp(int a, int b);
Instruction CmpImm(int a, std::int64_t imm);
Instruction Test(int a, int b);
Instruction TestImm(int a, std::int64_t imm);
Instruction Load(int dst, int base, std::int64_t offset);
Instruction Store(int base, std::int64_t offset, int src);
Instruction Push(std::string_view reg);
Instruction Pop(std::string_view reg);
Instruction Pushf();
Instruction Popf();
Instruction Jmp(int target);
// jz / jnz / jne
Instruction Jcc(std::string_view mnemonic, int target);
Instruction Ret();
Instruction Nop();

Instruction MarkSynthetic(Instruction instr);

// The table as a documented JSON asset (see assets/miniisa_table.json).
json TableJson();

}  // namespace advbin::isa

#endif  // ADVBIN_ISA_HPP_
