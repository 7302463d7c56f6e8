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

#include "advbin/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "advbin/error.hpp"
#include "advbin/hash.hpp"
#include "advbin/remote_oracle.hpp"

namespace advbin {

std::vector<double> SimilarityOracle::SimilarityMany(const FunctionCfg& candidate,
                                                     std::span<const FunctionCfg> refs) const {
  std::vector<double> out;
  out.reserve(refs.size());
  for (const auto& r : refs) out.push_back(Similarity(candidate, r));
  return out;
}

json SimilarityOracle::Describe() const { return {{"oracle", name()}}; }

// ---- GSIZE -----------------------------------------------------------------

double GsizeSim(const FunctionCfg& a, const FunctionCfg& b) {
  const double na = static_cast<double>(a.node_count());
  const double nb = static_cast<double>(b.node_count());
  const double hi = std::max(na, nb);
  if (hi == 0.0) return 1.0;
  return 1.0 - std::abs(na - nb) / hi;
}

json GsizeOracle::Describe() const {
  return {{"oracle", "gsize"}, {"formula", "1 - |Na - Nb| / max(Na, Nb) over basic-block counts"}};
}

// ---- GEDIT -----------------------------------------------------------------

LabeledGraph ToLabeledGraph(const FunctionCfg& f) {
  LabeledGraph g;
  for (const auto& b : f.blocks()) {
    std::uint64_t h = kFnvOffset;
    for (const auto& instr : b->instrs()) {
      h = Fnv1a(instr.mnemonic, h);
      h = Fnv1a(";", h);
    }
    g.labels.push_back(h);
  }
  for (std::size_t i = 0; i < f.blocks().size(); ++i) {
    std::vector<int> succs = f.blocks()[i]->succs();
    std::sort(succs.begin(), succs.end());
    succs.erase(std::unique(succs.begin(), succs.end()), succs.end());
    for (int s : succs) g.edges.emplace_back(static_cast<int>(i), static_cast<int>(f.BlockIndex(s)));
  }
  return g;
}

namespace {

struct EditContext {
  const LabeledGraph& a;
  const LabeledGraph& b;
  std::vector<std::uint8_t> b_adj;  // m x m

  EditContext(const LabeledGraph& a_, const LabeledGraph& b_) : a(a_), b(b_) {
    const std::size_t m = b.node_count();
    b_adj.assign(m * m, 0);
    for (auto [u, v] : b.edges) b_adj[static_cast<std::size_t>(u) * m + static_cast<std::size_t>(v)] = 1;
  }

  double Cost(const std::vector<int>& map) const {
    const std::size_t m = b.node_count();
    double cost = 0.0;
    std::size_t mapped = 0;
    for (std::size_t i = 0; i < map.size(); ++i) {
      if (map[i] < 0) {
        cost += 1.0;
      } else {
        ++mapped;
        if (a.labels[i] != b.labels[static_cast<std::size_t>(map[i])]) cost += 1.0;
      }
    }
    cost += static_cast<double>(m - mapped);
    std::size_t kept = 0;
    for (auto [u, v] : a.edges) {
      const int pu = map[static_cast<std::size_t>(u)], pv = map[static_cast<std::size_t>(v)];
      if (pu >= 0 && pv >= 0 && b_adj[static_cast<std::size_t>(pu) * m + static_cast<std::size_t>(pv)]) ++kept;
    }
    cost += static_cast<double>(a.edges.size() - kept) + static_cast<double>(b.edges.size() - kept);
    return cost;
  }
};

void Degrees(const LabeledGraph& g, std::vector<double>& in, std::vector<double>& out) {
  in.assign(g.node_count(), 0.0);
  out.assign(g.node_count(), 0.0);
  for (auto [u, v] : g.edges) {
    out[static_cast<std::size_t>(u)] += 1.0;
    in[static_cast<std::size_t>(v)] += 1.0;
  }
}

std::vector<int> AssignmentMapping(const LabeledGraph& a, const LabeledGraph& b) {
  const std::size_t n = a.node_count(), m = b.node_count(), size = n + m;
  constexpr double kForbidden = 1e9;
  std::vector<double> ain, aout, bin, bout;
  Degrees(a, ain, aout);
  Degrees(b, bin, bout);
  std::vector<std::vector<double>> cost(size, std::vector<double>(size, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      cost[i][j] = (a.labels[i] != b.labels[j] ? 1.0 : 0.0) +
                   0.5 * (std::abs(ain[i] - bin[j]) + std::abs(aout[i] - bout[j]));
    }
    for (std::size_t k = 0; k < n; ++k) cost[i][m + k] = k == i ? 1.0 + 0.5 * (ain[i] + aout[i]) : kForbidden;
  }
  for (std::size_t k = 0; k < m; ++k) {
    for (std::size_t j = 0; j < m; ++j) cost[n + k][j] = k == j ? 1.0 + 0.5 * (bin[j] + bout[j]) : kForbidden;
  }
  const std::vector<int> assign = SolveAssignment(cost);
  std::vector<int> map(n, -1);
  for (std::size_t i = 0; i < n; ++i) {
    if (assign[i] < static_cast<int>(m)) map[i] = assign[i];
  }
  return map;
}

// First-improvement search over swaps and reassignments.
double LocalSearch(const EditContext& ctx, std::vector<int>& map, int max_rounds) {
  const std::size_t n = map.size();
  const int m = static_cast<int>(ctx.b.node_count());
  double best = ctx.Cost(map);
  for (int round = 0; round < max_rounds && best > 0.0; ++round) {
    bool improved = false;
    std::vector<char> used(static_cast<std::size_t>(m), 0);
    for (int t : map) {
      if (t >= 0) used[static_cast<std::size_t>(t)] = 1;
    }
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = i + 1; k < n; ++k) {
        if (map[i] == map[k]) continue;
        std::swap(map[i], map[k]);
        const double c = ctx.Cost(map);
        if (c < best) {
          best = c;
          improved = true;
        } else {
          std::swap(map[i], map[k]);
        }
      }
      for (int j = -1; j < m; ++j) {
        if (j == map[i] || (j >= 0 && used[static_cast<std::size_t>(j)])) continue;
        const int old = map[i];
        map[i] = j;
        const double c = ctx.Cost(map);
        if (c < best) {
          best = c;
          improved = true;
          if (old >= 0) used[static_cast<std::size_t>(old)] = 0;
          if (j >= 0) used[static_cast<std::size_t>(j)] = 1;
        } else {
          map[i] = old;
        }
      }
    }
    if (!improved) break;
  }
  return best;
}

double DirectedApprox(const LabeledGraph& a, const LabeledGraph& b) {
  const EditContext ctx(a, b);
  const std::size_t n = a.node_count(), m = b.node_count();
  const int rounds = n + m <= 32 ? 8 : 2;
  std::vector<int> assigned = AssignmentMapping(a, b);
  double best = LocalSearch(ctx, assigned, rounds);
  if (best == 0.0) return 0.0;
  std::vector<int> aligned(n, -1);
  for (std::size_t i = 0; i < std::min(n, m); ++i) aligned[i] = static_cast<int>(i);
  best = std::min(best, LocalSearch(ctx, aligned, rounds));
  return best;
}

}  // namespace

double InducedEditCost(const LabeledGraph& a, const LabeledGraph& b, const std::vector<int>& map) {
  if (map.size() != a.node_count()) throw std::invalid_argument("mapping size mismatch");
  std::vector<char> seen(b.node_count(), 0);
  for (int t : map) {
    if (t < -1 || t >= static_cast<int>(b.node_count())) throw std::invalid_argument("mapping target out of range");
    if (t >= 0 && seen[static_cast<std::size_t>(t)]++) throw std::invalid_argument("mapping is not injective");
  }
  return EditContext(a, b).Cost(map);
}

double ApproxEditDistance(const LabeledGraph& a, const LabeledGraph& b) {
  const double ab = DirectedApprox(a, b);
  if (ab == 0.0) return 0.0;
  return std::min(ab, DirectedApprox(b, a));
}

double GeditSim(const FunctionCfg& a, const FunctionCfg& b) {
  const LabeledGraph ga = ToLabeledGraph(a), gb = ToLabeledGraph(b);
  const double denom = static_cast<double>(ga.node_count() + gb.node_count() + ga.edges.size() + gb.edges.size());
  if (denom == 0.0) return 1.0;
  return 1.0 - ApproxEditDistance(ga, gb) / denom;
}

double GeditOracle::Similarity(const FunctionCfg& a, const FunctionCfg& b) const {
  return GeditSim(a, b);
}

json GeditOracle::Describe() const {
  return {{"oracle", "gedit"},
          {"distance", "bipartite assignment over node label and degree costs, refined by local search, min of both directions"},
          {"formula", "1 - d / (Na + Nb + Ea + Eb)"},
          {"costs", {{"node_substitution", 1}, {"node_indel", 1}, {"edge_indel", 1}}}};
}

std::vector<int> SolveAssignment(const std::vector<std::vector<double>>& cost) {
  // Shortest augmenting path Hungarian method, 1-indexed internally.
  const std::size_t n = cost.size();
  if (n == 0) return {};
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(n + 1, kInf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      double delta = kInf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> row_to_col(n, -1);
  for (std::size_t j = 1; j <= n; ++j) row_to_col[p[j] - 1] = static_cast<int>(j - 1);
  return row_to_col;
}

// ---- Catalog1 --------------------------------------------------------------

namespace {

const std::array<std::uint64_t, kMinHashSize>& HashSeeds() {
  static const auto seeds = [] {
    std::array<std::uint64_t, kMinHashSize> s{};
    for (std::size_t i = 0; i < kMinHashSize; ++i) s[i] = Mix64(kMinHashSalt + 0x9e3779b97f4a7c15ull * (i + 1));
    return s;
  }();
  return seeds;
}

void AppendInstructionBytes(const Instruction& instr, std::string& out) {
  out += instr.mnemonic;
  for (const auto& op : instr.operands) {
    const OperandKind kind = ClassifyOperand(op, instr.is_control_flow);
    out += static_cast<char>(1 + static_cast<int>(kind));
    // Stand-in for the register and immediate fields of a real encoding.
    // Labels carry none since block ids are not stable across variants.
    if (kind != OperandKind::kLabel) out += static_cast<char>(Fnv1a(op) & 0xff);
  }
  out += '\n';
}

std::uint32_t Pack(const char* p) {
  return static_cast<std::uint32_t>(static_cast<unsigned char>(p[0])) |
         static_cast<std::uint32_t>(static_cast<unsigned char>(p[1])) << 8 |
         static_cast<std::uint32_t>(static_cast<unsigned char>(p[2])) << 16 |
         static_cast<std::uint32_t>(static_cast<unsigned char>(p[3])) << 24;
}

MinHashSignature EmptySignature() {
  MinHashSignature s;
  s.fill(std::numeric_limits<std::uint64_t>::max());
  return s;
}

void MergeInto(MinHashSignature& into, const MinHashSignature& from) {
  for (std::size_t i = 0; i < kMinHashSize; ++i) into[i] = std::min(into[i], from[i]);
}

constexpr std::size_t kMaxCachedBlocks = 1u << 15;
constexpr std::size_t kMaxCachedGrams = 1u << 16;
constexpr std::size_t kMaxCachedFunctions = 1u << 12;

}  // namespace

std::string CanonicalBytes(const BasicBlock& b) {
  std::string out;
  for (const auto& instr : b.instrs()) AppendInstructionBytes(instr, out);
  return out;
}

std::string CanonicalBytes(const FunctionCfg& f) {
  std::string out;
  for (const auto& b : f.blocks()) {
    for (const auto& instr : b->instrs()) AppendInstructionBytes(instr, out);
  }
  return out;
}

std::vector<std::uint32_t> Shingles(std::string_view bytes) {
  std::vector<std::uint32_t> out;
  if (bytes.size() < 4) return out;
  out.reserve(bytes.size() - 3);
  for (std::size_t i = 0; i + 4 <= bytes.size(); ++i) out.push_back(Pack(bytes.data() + i));
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

MinHashSignature SignatureOf(std::span<const std::uint32_t> shingles) {
  const auto& seeds = HashSeeds();
  MinHashSignature sig = EmptySignature();
  for (std::uint32_t x : shingles) {
    for (std::size_t i = 0; i < kMinHashSize; ++i) sig[i] = std::min(sig[i], Mix64(x ^ seeds[i]));
  }
  return sig;
}

double SignatureAgreement(const MinHashSignature& a, const MinHashSignature& b) {
  std::size_t same = 0;
  for (std::size_t i = 0; i < kMinHashSize; ++i) same += a[i] == b[i] ? 1 : 0;
  return static_cast<double>(same) / static_cast<double>(kMinHashSize);
}

double ExactJaccard(std::span<const std::uint32_t> a, std::span<const std::uint32_t> b) {
  std::vector<std::uint32_t> x(a.begin(), a.end()), y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  x.erase(std::unique(x.begin(), x.end()), x.end());
  std::sort(y.begin(), y.end());
  y.erase(std::unique(y.begin(), y.end()), y.end());
  if (x.empty() && y.empty()) return 1.0;
  std::vector<std::uint32_t> common;
  std::set_intersection(x.begin(), x.end(), y.begin(), y.end(), std::back_inserter(common));
  const double inter = static_cast<double>(common.size());
  return inter / (static_cast<double>(x.size() + y.size()) - inter);
}

void Catalog1Oracle::MergeGram(std::uint32_t gram, MinHashSignature& sig) const {
  std::shared_ptr<const MinHashSignature> hashes;
  {
    std::lock_guard lock(mutex_);
    auto it = grams_.find(gram);
    if (it != grams_.end()) hashes = it->second;
  }
  if (!hashes) {
    const std::uint32_t one[1] = {gram};
    hashes = std::make_shared<const MinHashSignature>(SignatureOf(one));
    std::lock_guard lock(mutex_);
    if (grams_.size() >= kMaxCachedGrams) grams_.clear();
    grams_.emplace(gram, hashes);
  }
  MergeInto(sig, *hashes);
}

std::shared_ptr<const Catalog1Oracle::BlockSketch> Catalog1Oracle::Sketch(const BasicBlock& b) const {
  {
    std::lock_guard lock(mutex_);
    auto it = blocks_.find(b.content_hash());
    if (it != blocks_.end()) return it->second;
  }
  auto sketch = std::make_shared<BlockSketch>();
  const std::string bytes = CanonicalBytes(b);
  sketch->signature = EmptySignature();
  for (std::uint32_t g : Shingles(bytes)) MergeGram(g, sketch->signature);
  sketch->head = bytes.substr(0, 3);
  sketch->tail = bytes.size() >= 3 ? bytes.substr(bytes.size() - 3) : bytes;
  std::lock_guard lock(mutex_);
  if (blocks_.size() >= kMaxCachedBlocks) blocks_.clear();
  blocks_.emplace(b.content_hash(), sketch);
  return sketch;
}

Catalog1Oracle::SigPtr Catalog1Oracle::Boundary(const BasicBlock& prev, const BlockSketch& prev_sketch,
                                                const BasicBlock& next, const BlockSketch& next_sketch) const {
  const std::uint64_t key = HashCombine(prev.content_hash(), Mix64(next.content_hash()));
  {
    std::lock_guard lock(mutex_);
    auto it = boundaries_.find(key);
    if (it != boundaries_.end()) return it->second;
  }
  auto sig = std::make_shared<MinHashSignature>(EmptySignature());
  const std::string window = prev_sketch.tail + next_sketch.head;
  for (std::size_t i = 0; i < 3; ++i) MergeGram(Pack(window.data() + i), *sig);
  std::lock_guard lock(mutex_);
  if (boundaries_.size() >= kMaxCachedBlocks) boundaries_.clear();
  boundaries_.emplace(key, sig);
  return sig;
}

MinHashSignature Catalog1Oracle::ComputeSignature(const FunctionCfg& f) const {
  MinHashSignature sig = EmptySignature();
  const BasicBlock* prev = nullptr;
  std::shared_ptr<const BlockSketch> prev_sketch;
  for (const auto& b : f.blocks()) {
    auto sketch = Sketch(*b);
    if (sketch->head.size() < 3) {
      // Windows may span several short blocks; fall back to the full stream.
      return SignatureOf(Shingles(CanonicalBytes(f)));
    }
    MergeInto(sig, sketch->signature);
    if (prev != nullptr) MergeInto(sig, *Boundary(*prev, *prev_sketch, *b, *sketch));
    prev = b.get();
    prev_sketch = std::move(sketch);
  }
  return sig;
}

MinHashSignature Catalog1Oracle::Signature(const FunctionCfg& f) const {
  {
    std::lock_guard lock(mutex_);
    auto it = functions_.find(f.fingerprint());
    if (it != functions_.end()) return *it->second;
  }
  auto sig = std::make_shared<const MinHashSignature>(ComputeSignature(f));
  std::lock_guard lock(mutex_);
  if (functions_.size() >= kMaxCachedFunctions) functions_.clear();
  functions_.emplace(f.fingerprint(), sig);
  return *sig;
}

double Catalog1Oracle::Similarity(const FunctionCfg& a, const FunctionCfg& b) const {
  // The first argument is usually a one-off candidate; only the second is
  // memoized at function level.
  return SignatureAgreement(ComputeSignature(a), Signature(b));
}

std::vector<double> Catalog1Oracle::SimilarityMany(const FunctionCfg& candidate,
                                                   std::span<const FunctionCfg> refs) const {
  const MinHashSignature sig = ComputeSignature(candidate);
  std::vector<double> out;
  out.reserve(refs.size());
  for (const auto& r : refs) out.push_back(SignatureAgreement(sig, Signature(r)));
  return out;
}

json Catalog1Oracle::Describe() const {
  return {{"oracle", "catalog1"},
          {"signature_size", kMinHashSize},
          {"shingle_bytes", 4},
          {"salt", kMinHashSalt},
          {"stream", "mnemonic bytes, per operand a kind tag byte and a one-byte operand digest, newline"}};
}

// ---- n-gram cosine -----------------------------------------------------------

namespace {

std::vector<std::pair<std::uint64_t, double>> BigramCounts(const FunctionCfg& f) {
  std::vector<std::uint64_t> tokens;
  for (const auto& b : f.blocks()) {
    for (const auto& instr : b->instrs()) tokens.push_back(Fnv1a(ShapeToken(instr), kNgramSalt));
  }
  std::vector<std::uint64_t> keys;
  for (std::size_t i = 0; i + 1 < tokens.size(); ++i) keys.push_back(HashCombine(tokens[i], tokens[i + 1]));
  std::sort(keys.begin(), keys.end());
  std::vector<std::pair<std::uint64_t, double>> out;
  for (std::uint64_t k : keys) {
    if (!out.empty() && out.back().first == k) {
      out.back().second += 1.0;
    } else {
      out.emplace_back(k, 1.0);
    }
  }
  return out;
}

}  // namespace

double NgramCosineSim(const FunctionCfg& a, const FunctionCfg& b) {
  const auto x = BigramCounts(a), y = BigramCounts(b);
  if (x.empty() || y.empty()) return x.empty() && y.empty() ? 1.0 : 0.0;
  double dot = 0.0, nx = 0.0, ny = 0.0;
  for (const auto& [k, c] : x) nx += c * c;
  for (const auto& [k, c] : y) ny += c * c;
  for (std::size_t i = 0, j = 0; i < x.size() && j < y.size();) {
    if (x[i].first < y[j].first) {
      ++i;
    } else if (y[j].first < x[i].first) {
      ++j;
    } else {
      dot += x[i].second * y[j].second;
      ++i;
      ++j;
    }
  }
  return std::min(1.0, dot / std::sqrt(nx * ny));
}

json NgramOracle::Describe() const {
  return {{"oracle", "ngram"},
          {"features", "bigrams of mnemonic plus operand-kind tokens in block order"},
          {"salt", kNgramSalt}};
}

// ---- wrappers -----------------------------------------------------------------

double CountingOracle::Similarity(const FunctionCfg& a, const FunctionCfg& b) const {
  ++count_;
  return inner_->Similarity(a, b);
}

std::vector<double> CountingOracle::SimilarityMany(const FunctionCfg& candidate,
                                                   std::span<const FunctionCfg> refs) const {
  count_ += refs.size();
  return inner_->SimilarityMany(candidate, refs);
}

OraclePtr MakeOracle(const std::string& descriptor) {
  if (descriptor == "gsize") return std::make_shared<GsizeOracle>();
  if (descriptor == "gedit") return std::make_shared<GeditOracle>();
  if (descriptor == "catalog1") return std::make_shared<Catalog1Oracle>();
  if (descriptor == "ngram") return std::make_shared<NgramOracle>();
  if (descriptor.rfind("remote:", 0) == 0) return ConnectRemoteOracle(descriptor.substr(7));
  throw std::invalid_argument("unknown oracle '" + descriptor + "'");
}

}  // namespace advbin
