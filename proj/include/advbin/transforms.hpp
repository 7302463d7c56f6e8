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

#ifndef ADVBIN_TRANSFORMS_HPP_
#define ADVBIN_TRANSFORMS_HPP_

#include <compare>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "advbin/cfg.hpp"
#include "advbin/strand_store.hpp"

namespace advbin {

enum class TransformKind : std::uint8_t { kIR = 0, kNS = 1, kDBA = 2, kSA = 3 };

inline constexpr TransformKind kAllTransformKinds[] = {
    TransformKind::kIR, TransformKind::kNS, TransformKind::kDBA, TransformKind::kSA};

std::string_view ToString(TransformKind kind);
// Accepts "IR", "NS", "DBA", "SA" (case-insensitive). Throws invalid_argument.
TransformKind ParseTransformKind(std::string_view text);

// Small bitset over the four kinds.
class KindSet {
 public:
  KindSet() = default;
  KindSet(std::initializer_list<TransformKind> kinds) {
    for (auto k : kinds) Insert(k);
  }
  static KindSet All() { return {TransformKind::kIR, TransformKind::kNS, TransformKind::kDBA, TransformKind::kSA}; }

  void Insert(TransformKind k) { bits_ |= Bit(k); }
  bool Contains(TransformKind k) const { return (bits_ & Bit(k)) != 0; }
  bool empty() const { return bits_ == 0; }
  std::vector<TransformKind> Kinds() const;
  std::string ToString() const;  // e.g. "IR,NS,DBA,SA"
  // Parses a comma-separated list; "all" or "" selects every kind.
  static KindSet Parse(std::string_view text);

  bool operator==(const KindSet&) const = default;

 private:
  static unsigned Bit(TransformKind k) { return 1u << static_cast<unsigned>(k); }
  unsigned bits_ = 0;
};

struct Position {
  int block = 0;
  std::size_t index = 0;

  auto operator<=>(const Position&) const = default;
};

struct TransformAction {
  TransformKind kind = TransformKind::kIR;
  Position pos;
  // Index into the strand database; set exactly for DBA and SA.
  std::optional<std::size_t> strand;

  bool operator==(const TransformAction&) const = default;
};

std::string ToString(const TransformAction& action);

// Every instruction position of the function, in block-id order.
std::vector<Position> AllPositions(const FunctionCfg& f);
// Positions of instructions that are not control flow.
std::vector<Position> NonControlPositions(const FunctionCfg& f);

bool IrApplicable(const FunctionCfg& f, Position pos);
bool NsApplicable(const FunctionCfg& f, Position pos);
// DBA and SA insert before the instruction at pos (or at the block end).
bool InsertionApplicable(const FunctionCfg& f, Position pos);

// Per position, in order: IR, NS, then per_action_strands DBA actions and
// per_action_strands SA actions using the first pool entries.
std::vector<TransformAction> EnumerateActions(const FunctionCfg& f,
                                              std::span<const Position> positions,
                                              KindSet enabled,
                                              const CandidatePool& pool,
                                              std::size_t per_action_strands);

FunctionCfg ApplyIr(const FunctionCfg& f, Position pos);
FunctionCfg ApplyNs(const FunctionCfg& f, Position pos);
FunctionCfg ApplyDba(const FunctionCfg& f, Position pos, const Strand& strand);
FunctionCfg ApplySa(const FunctionCfg& f, Position pos, const Strand& strand);
FunctionCfg ApplyAction(const FunctionCfg& f, const TransformAction& action,
                        const StrandDb& db);

// Deletes one non-control-flow instruction. A block that would become empty
// keeps a nop instead.
FunctionCfg RemoveInstruction(const FunctionCfg& f, Position pos);

}  // namespace advbin

#endif  // ADVBIN_TRANSFORMS_HPP_
