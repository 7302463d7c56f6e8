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

#ifndef ADVBIN_ORACLES_HPP_
#define ADVBIN_ORACLES_HPP_

#include <array>
#include <atomic>
#include <cstdint>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "advbin/cfg.hpp"

namespace advbin {

// Black-box similarity score; higher means more similar.
class SimilarityOracle {
 public:
  virtual ~SimilarityOracle() = default;

  virtual std::string name() const = 0;
  virtual double Similarity(const FunctionCfg& a, const FunctionCfg& b) const = 0;
  // One score per reference. Oracles that can reuse work on `candidate`
  // override this.
  virtual std::vector<double> SimilarityMany(const FunctionCfg& candidate,
                                             std::span<const FunctionCfg> refs) const;
  // Configuration notes surfaced in report headers.
  virtual json Describe() const;
};

using OraclePtr = std::shared_ptr<const SimilarityOracle>;

// ---- GSIZE -----------------------------------------------------------------

double GsizeSim(const FunctionCfg& a, const FunctionCfg& b);

class GsizeOracle final : public SimilarityOracle {
 public:
  std::string name() const override { return "gsize"; }
  double Similarity(const FunctionCfg& a, const FunctionCfg& b) const override {
    return GsizeSim(a, b);
  }
  json Describe() const override;
};

// ---- GEDIT -----------------------------------------------------------------

// Plain labeled digraph view used by the edit-distance code.
struct LabeledGraph {
  std::vector<std::uint64_t> labels;
  // Distinct directed edges, self loops allowed.
  std::vector<std::pair<int, int>> edges;

  std::size_t node_count() const { return labels.size(); }
};

LabeledGraph ToLabeledGraph(const FunctionCfg& f);

// Edit cost of a node mapping: map[i] is the target node of source node i,
// or -1 for deletion. Unmapped target nodes are insertions.
double InducedEditCost(const LabeledGraph& a, const LabeledGraph& b, const std::vector<int>& map);

// Bipartite-assignment approximation refined by local search. Always an
// upper bound of the exact distance.
double ApproxEditDistance(const LabeledGraph& a, const LabeledGraph& b);

double GeditSim(const FunctionCfg& a, const FunctionCfg& b);

class GeditOracle final : public SimilarityOracle {
 public:
  std::string name() const override { return "gedit"; }
  double Similarity(const FunctionCfg& a, const FunctionCfg& b) const override;
  json Describe() const override;
};

// Minimum-cost assignment for a square matrix; returns the column for each row.
std::vector<int> SolveAssignment(const std::vector<std::vector<double>>& cost);

// ---- Catalog1 --------------------------------------------------------------

inline constexpr std::size_t kMinHashSize = 256;
inline constexpr std::uint64_t kMinHashSalt = 0xca7a1091ull;

using MinHashSignature = std::array<std::uint64_t, kMinHashSize>;

// Canonical byte stream: per instruction, the mnemonic, then for each
// operand a kind tag byte followed by a one-byte digest of the operand text
// (labels get the tag only), then a newline.
std::string CanonicalBytes(const FunctionCfg& f);
std::string CanonicalBytes(const BasicBlock& b);
// Distinct 4-byte windows of a stream, packed little-endian.
std::vector<std::uint32_t> Shingles(std::string_view bytes);
MinHashSignature SignatureOf(std::span<const std::uint32_t> shingles);
double SignatureAgreement(const MinHashSignature& a, const MinHashSignature& b);
double ExactJaccard(std::span<const std::uint32_t> a, std::span<const std::uint32_t> b);

class Catalog1Oracle final : public SimilarityOracle {
 public:
  Catalog1Oracle() = default;

  std::string name() const override { return "catalog1"; }
  double Similarity(const FunctionCfg& a, const FunctionCfg& b) const override;
  std::vector<double> SimilarityMany(const FunctionCfg& candidate,
                                     std::span<const FunctionCfg> refs) const override;
  json Describe() const override;

  // Equal to SignatureOf(Shingles(CanonicalBytes(f))), computed block-wise
  // with memoization.
  MinHashSignature Signature(const FunctionCfg& f) const;

 private:
  struct BlockSketch {
    MinHashSignature signature;
    std::string head;
    std::string tail;
  };
  using SigPtr = std::shared_ptr<const MinHashSignature>;

  std::shared_ptr<const BlockSketch> Sketch(const BasicBlock& b) const;
  // Signature of the three windows straddling the boundary of two blocks.
  SigPtr Boundary(const BasicBlock& prev, const BlockSketch& prev_sketch, const BasicBlock& next,
                  const BlockSketch& next_sketch) const;
  void MergeGram(std::uint32_t gram, MinHashSignature& sig) const;
  MinHashSignature ComputeSignature(const FunctionCfg& f) const;

  mutable std::mutex mutex_;
  mutable std::unordered_map<std::uint64_t, std::shared_ptr<const BlockSketch>> blocks_;
  mutable std::unordered_map<std::uint64_t, SigPtr> boundaries_;
  mutable std::unordered_map<std::uint32_t, SigPtr> grams_;
  mutable std::unordered_map<std::uint64_t, SigPtr> functions_;
};

// ---- n-gram cosine -----------------------------------------------------------

inline constexpr std::uint64_t kNgramSalt = 0x9e3779b1ull;

double NgramCosineSim(const FunctionCfg& a, const FunctionCfg& b);

class NgramOracle final : public SimilarityOracle {
 public:
  std::string name() const override { return "ngram"; }
  double Similarity(const FunctionCfg& a, const FunctionCfg& b) const override {
    return NgramCosineSim(a, b);
  }
  json Describe() const override;
};

// ---- wrappers -----------------------------------------------------------------

// Forwards to another oracle and counts every pairwise score it produces.
class CountingOracle final : public SimilarityOracle {
 public:
  explicit CountingOracle(OraclePtr inner) : inner_(std::move(inner)) {}

  std::string name() const override { return inner_->name(); }
  double Similarity(const FunctionCfg& a, const FunctionCfg& b) const override;
  std::vector<double> SimilarityMany(const FunctionCfg& candidate,
                                     std::span<const FunctionCfg> refs) const override;
  json Describe() const override { return inner_->Describe(); }

  std::uint64_t count() const { return count_.load(); }
  void Reset() { count_ = 0; }

 private:
  OraclePtr inner_;
  mutable std::atomic<std::uint64_t> count_{0};
};

// "gsize", "gedit", "catalog1", "ngram" or "remote:HOST:PORT".
OraclePtr MakeOracle(const std::string& descriptor);

}  // namespace advbin

#endif  // ADVBIN_ORACLES_HPP_
