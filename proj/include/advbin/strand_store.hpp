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

#ifndef ADVBIN_STRAND_STORE_HPP_
#define ADVBIN_STRAND_STORE_HPP_

#include <cstddef>
#include <cstdint>
#include <mutex>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "advbin/cfg.hpp"

namespace advbin {

inline constexpr std::size_t kEmbeddingDim = 128;
inline constexpr std::uint64_t kEmbeddingSalt = 0x5eed0fa11ce5ull;

using Embedding = std::vector<double>;

// Hashed bag of instruction-shape unigrams and bigrams, L2-normalized.
// Register identity is abstracted away: only mnemonics and operand kinds
// contribute.
Embedding EmbedStrand(const Strand& strand, std::size_t dim = kEmbeddingDim,
                      std::uint64_t salt = kEmbeddingSalt);

double Cosine(const Embedding& a, const Embedding& b);

// Canonical text used for deduplication.
std::string StrandText(const Strand& strand);

class StrandDb {
 public:
  StrandDb() = default;
  // Throws InvalidStrand if any strand is invalid.
  explicit StrandDb(std::vector<Strand> strands, std::size_t dim = kEmbeddingDim,
                    std::uint64_t salt = kEmbeddingSalt);
  StrandDb(const StrandDb& other);
  StrandDb& operator=(const StrandDb& other);

  std::size_t size() const { return strands_.size(); }
  bool empty() const { return strands_.empty(); }
  const Strand& strand(std::size_t i) const { return strands_.at(i); }
  const std::vector<Strand>& strands() const { return strands_; }
  const Embedding& vector(std::size_t i) const { return vectors_.at(i); }
  std::size_t dim() const { return dim_; }
  std::uint64_t salt() const { return salt_; }

  // The k strands closest to strand i by cosine, excluding i itself; ties go
  // to the lower index. Results are memoized.
  std::vector<std::size_t> Neighbors(std::size_t i, std::size_t k) const;

  json ToJson() const;
  static StrandDb FromJson(const json& document);
  void Save(const std::string& path) const;
  static StrandDb Load(const std::string& path);

 private:
  std::vector<Strand> strands_;
  std::vector<Embedding> vectors_;
  std::size_t dim_ = kEmbeddingDim;
  std::uint64_t salt_ = kEmbeddingSalt;
  mutable std::mutex cache_mutex_;
  mutable std::unordered_map<std::size_t, std::vector<std::size_t>> neighbor_cache_;
};

// Backward-slice decomposition of every block. Throws EmptyDb when nothing
// survives.
StrandDb ExtractStrands(std::span<const FunctionCfg> corpus,
                        std::size_t dim = kEmbeddingDim,
                        std::uint64_t salt = kEmbeddingSalt);

// The per-block slices before filtering and deduplication.
std::vector<Strand> SliceBlock(const BasicBlock& block);

inline constexpr std::size_t kDefaultPoolCapacity = 100;
inline constexpr double kDefaultRandomFraction = 0.5;

struct CandidatePool {
  std::vector<std::size_t> entries;
  std::size_t capacity = kDefaultPoolCapacity;
  double random_fraction = kDefaultRandomFraction;
};

CandidatePool InitPool(const StrandDb& db, std::size_t capacity, std::uint64_t seed,
                       double random_fraction = kDefaultRandomFraction);

// Refreshes the pool from the strands used by the iteration's best actions.
// Neighbor and random picks alternate in the resulting order so that any
// prefix of the pool mixes both sources.
CandidatePool UpdatePool(const CandidatePool& pool,
                         std::span<const std::size_t> top_strands,
                         const StrandDb& db, std::uint64_t seed);

std::size_t NeighborSlots(const CandidatePool& pool);

}  // namespace advbin

#endif  // ADVBIN_STRAND_STORE_HPP_
