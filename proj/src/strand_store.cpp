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

#include "advbin/strand_store.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <unordered_set>

#include "advbin/error.hpp"
#include "advbin/hash.hpp"
#include "advbin/rng.hpp"

namespace advbin {
Embedding EmbedStrand(const Strand& strand, std::size_t dim, std::uint64_t salt) {
  Embedding v(dim, 0.0);
  std::vector<std::uint64_t> unigrams;
  for (const auto& instr : strand.instrs) {
    unigrams.push_back(Fnv1a(ShapeToken(instr), salt));
  }
  for (std::size_t i = 0; i < unigrams.size(); ++i) {
    v[Mix64(unigrams[i]) % dim] += 1.0;
    if (i + 1 < unigrams.size()) {
      v[Mix64(HashCombine(unigrams[i], unigrams[i + 1])) % dim] += 1.0;
    }
  }
  double norm = 0.0;
  for (double x : v) norm += x * x;
  if (norm == 0.0) {
    v[0] = 1.0;
    return v;
  }
  norm = std::sqrt(norm);
  for (double& x : v) x /= norm;
  return v;
}

double Cosine(const Embedding& a, const Embedding& b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

std::string StrandText(const Strand& strand) {
  std::string text;
  for (const auto& instr : strand.instrs) {
    text += ToString(instr);
    text += ';';
  }
  return text;
}

StrandDb::StrandDb(std::vector<Strand> strands, std::size_t dim, std::uint64_t salt)
    : strands_(std::move(strands)), dim_(dim), salt_(salt) {
  if (dim_ == 0) throw std::invalid_argument("embedding dimension must be positive");
  vectors_.reserve(strands_.size());
  for (const auto& s : strands_) {
    ValidateStrand(s);
    vectors_.push_back(EmbedStrand(s, dim_, salt_));
  }
}

StrandDb::StrandDb(const StrandDb& other)
    : strands_(other.strands_), vectors_(other.vectors_), dim_(other.dim_), salt_(other.salt_) {}

StrandDb& StrandDb::operator=(const StrandDb& other) {
  if (this != &other) {
    strands_ = other.strands_;
    vectors_ = other.vectors_;
    dim_ = other.dim_;
    salt_ = other.salt_;
    std::lock_guard lock(cache_mutex_);
    neighbor_cache_.clear();
  }
  return *this;
}

std::vector<std::size_t> StrandDb::Neighbors(std::size_t i, std::size_t k) const {
  if (i >= strands_.size()) throw std::out_of_range("strand index out of range");
  k = std::min(k, strands_.size() - 1);
  {
    std::lock_guard lock(cache_mutex_);
    auto it = neighbor_cache_.find(i);
    if (it != neighbor_cache_.end() && it->second.size() >= k) {
      return {it->second.begin(), it->second.begin() + static_cast<std::ptrdiff_t>(k)};
    }
  }
  std::vector<std::pair<double, std::size_t>> scored;
  scored.reserve(strands_.size());
  for (std::size_t j = 0; j < strands_.size(); ++j) {
    if (j != i) scored.emplace_back(Cosine(vectors_[i], vectors_[j]), j);
  }
  auto better = [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first > b.first : a.second < b.second;
  };
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(k),
                    scored.end(), better);
  std::vector<std::size_t> out;
  out.reserve(k);
  for (std::size_t j = 0; j < k; ++j) out.push_back(scored[j].second);
  std::lock_guard lock(cache_mutex_);
  auto& slot = neighbor_cache_[i];
  if (slot.size() < out.size()) slot = out;
  return out;
}

json StrandDb::ToJson() const {
  json strands = json::array();
  for (const auto& s : strands_) {
    json instrs = json::array();
    for (const auto& instr : s.instrs) instrs.push_back(SerializeInstruction(instr));
    json entry = {{"instrs", std::move(instrs)}};
    if (s.source) {
      entry["source"] = {{"function", s.source->function_id}, {"block", s.source->block_id}};
    }
    strands.push_back(std::move(entry));
  }
  return {{"format", "advbin-strands"},
          {"version", 1},
          {"embedding", {{"dim", dim_}, {"salt", salt_}}},
          {"strands", std::move(strands)}};
}

StrandDb StrandDb::FromJson(const json& doc) {
  try {
    if (!doc.is_object() || !doc.contains("strands") || !doc["strands"].is_array()) {
      throw SchemaError("strand database must be an object with a 'strands' array");
    }
    std::size_t dim = kEmbeddingDim;
    std::uint64_t salt = kEmbeddingSalt;
    if (doc.contains("embedding")) {
      dim = doc["embedding"].at("dim").get<std::size_t>();
      salt = doc["embedding"].at("salt").get<std::uint64_t>();
    }
    std::vector<Strand> strands;
    for (const auto& entry : doc["strands"]) {
      Strand s;
      for (const auto& instr : entry.at("instrs")) s.instrs.push_back(ParseInstruction(instr));
      if (entry.contains("source")) {
        s.source = StrandSource{entry["source"].at("function").get<std::string>(),
                                entry["source"].at("block").get<int>()};
      }
      strands.push_back(std::move(s));
    }
    return StrandDb(std::move(strands), dim, salt);
  } catch (const json::exception& e) {
    throw SchemaError(std::string("malformed strand database: ") + e.what());
  }
}

void StrandDb::Save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path + "'");
  out << ToJson().dump() << '\n';
}

StrandDb StrandDb::Load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read '" + path + "'");
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw SchemaError("'" + path + "' is not valid JSON: " + e.what());
  }
  return FromJson(doc);
}

std::vector<Strand> SliceBlock(const BasicBlock& block) {
  const auto& instrs = block.instrs();
  const std::size_t n = block.NonControlCount();
  // Memory and stack dependences are not followed; only register and flag
  // data flow links a strand together.
  LocationSet untracked;
  untracked.set(MemoryLocation());
  untracked.set(InternLocation(kStackName));
  std::vector<bool> used(n, false);
  std::vector<Strand> out;
  for (std::size_t root = n; root-- > 0;) {
    if (used[root]) continue;
    used[root] = true;
    if (IsNoOpMnemonic(instrs[root].mnemonic)) continue;
    std::vector<std::size_t> members = {root};
    LocationSet needed = instrs[root].reads & ~untracked;
    for (std::size_t j = root; j-- > 0 && needed.any();) {
      const LocationSet hit = instrs[j].writes & needed;
      if (hit.none()) continue;
      members.push_back(j);
      used[j] = true;
      needed &= ~instrs[j].writes;
      needed |= instrs[j].reads & ~untracked;
    }
    Strand s;
    for (auto it = members.rbegin(); it != members.rend(); ++it) s.instrs.push_back(instrs[*it]);
    for (auto& instr : s.instrs) instr.synthetic = false;
    out.push_back(std::move(s));
  }
  return out;
}

StrandDb ExtractStrands(std::span<const FunctionCfg> corpus, std::size_t dim,
                        std::uint64_t salt) {
  if (corpus.empty()) throw EmptyDb("cannot extract strands from an empty corpus");
  std::vector<Strand> kept;
  std::unordered_set<std::string> seen;
  for (const auto& f : corpus) {
    for (const auto& b : f.blocks()) {
      for (auto& s : SliceBlock(*b)) {
        if (!IsValidStrand(s)) continue;
        if (!seen.insert(StrandText(s)).second) continue;
        s.source = StrandSource{f.id(), b->id()};
        kept.push_back(std::move(s));
      }
    }
  }
  if (kept.empty()) throw EmptyDb("no valid strand in the corpus");
  return StrandDb(std::move(kept), dim, salt);
}

CandidatePool InitPool(const StrandDb& db, std::size_t capacity, std::uint64_t seed,
                       double random_fraction) {
  if (capacity == 0) throw std::invalid_argument("pool capacity must be positive");
  if (random_fraction < 0.0 || random_fraction > 1.0) {
    throw std::invalid_argument("random fraction must lie in [0, 1]");
  }
  if (db.size() < capacity) {
    throw InsufficientStrands("strand database holds " + std::to_string(db.size()) +
                              " strands, pool needs " + std::to_string(capacity));
  }
  Rng rng(seed);
  CandidatePool pool;
  pool.capacity = capacity;
  pool.random_fraction = random_fraction;
  pool.entries = rng.SampleWithoutReplacement(db.size(), capacity);
  return pool;
}

std::size_t NeighborSlots(const CandidatePool& pool) {
  const double slots = std::ceil(static_cast<double>(pool.capacity) * (1.0 - pool.random_fraction) - 1e-9);
  return std::min(pool.capacity, static_cast<std::size_t>(std::max(0.0, slots)));
}

CandidatePool UpdatePool(const CandidatePool& pool, std::span<const std::size_t> top_strands,
                         const StrandDb& db, std::uint64_t seed) {
  if (db.size() < pool.capacity) {
    throw InsufficientStrands("strand database smaller than the pool");
  }
  const std::size_t slots = NeighborSlots(pool);
  std::set<std::size_t> chosen;
  std::vector<std::size_t> neighbors;
  if (slots > 0 && !top_strands.empty()) {
    std::vector<std::vector<std::size_t>> lists;
    for (std::size_t s : top_strands) lists.push_back(db.Neighbors(s, slots));
    for (std::size_t rank = 0; neighbors.size() < slots; ++rank) {
      bool any = false;
      for (const auto& list : lists) {
        if (rank >= list.size()) continue;
        any = true;
        if (neighbors.size() < slots && chosen.insert(list[rank]).second) {
          neighbors.push_back(list[rank]);
        }
      }
      if (!any) break;
    }
  }
  std::vector<std::size_t> remaining;
  remaining.reserve(db.size());
  for (std::size_t i = 0; i < db.size(); ++i) {
    if (chosen.count(i) == 0) remaining.push_back(i);
  }
  Rng rng(seed);
  std::vector<std::size_t> randoms;
  for (std::size_t i : rng.SampleWithoutReplacement(remaining.size(), pool.capacity - neighbors.size())) {
    randoms.push_back(remaining[i]);
  }
  CandidatePool out = pool;
  out.entries.clear();
  for (std::size_t i = 0; i < std::max(neighbors.size(), randoms.size()); ++i) {
    if (i < neighbors.size()) out.entries.push_back(neighbors[i]);
    if (i < randoms.size()) out.entries.push_back(randoms[i]);
  }
  return out;
}

}  // namespace advbin
