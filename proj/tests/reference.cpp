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

#include "reference.hpp"

#include <algorithm>
#include <functional>
#include <limits>

namespace advbin::reference {
namespace {

bool HasEdge(const LabeledGraph& g, int u, int v) {
  return std::find(g.edges.begin(), g.edges.end(), std::make_pair(u, v)) != g.edges.end();
}

std::size_t DistinctEdges(const LabeledGraph& g) {
  std::set<std::pair<int, int>> s(g.edges.begin(), g.edges.end());
  return s.size();
}

// Cost of a complete mapping: map[i] is the image of a-node i or -1.
double MappingCost(const LabeledGraph& a, const LabeledGraph& b, const std::vector<int>& map) {
  double cost = 0.0;
  std::vector<bool> used(b.node_count(), false);
  for (std::size_t i = 0; i < map.size(); ++i) {
    if (map[i] < 0) {
      cost += 1.0;
    } else {
      used[static_cast<std::size_t>(map[i])] = true;
      if (a.labels[i] != b.labels[static_cast<std::size_t>(map[i])]) cost += 1.0;
    }
  }
  for (bool u : used) cost += u ? 0.0 : 1.0;
  std::set<std::pair<int, int>> a_edges(a.edges.begin(), a.edges.end());
  std::set<std::pair<int, int>> b_edges(b.edges.begin(), b.edges.end());
  std::size_t kept = 0;
  for (auto [u, v] : a_edges) {
    const int mu = map[static_cast<std::size_t>(u)], mv = map[static_cast<std::size_t>(v)];
    if (mu >= 0 && mv >= 0 && b_edges.count({mu, mv})) ++kept;
  }
  cost += static_cast<double>(a_edges.size() - kept) + static_cast<double>(b_edges.size() - kept);
  return cost;
}

}  // namespace

double ExactEditDistance(const LabeledGraph& a, const LabeledGraph& b) {
  const std::size_t n = a.node_count(), m = b.node_count();
  std::vector<int> map(n, -1);
  std::vector<bool> used(m, false);
  double best = std::numeric_limits<double>::infinity();
  std::function<void(std::size_t)> rec = [&](std::size_t i) {
    if (i == n) {
      best = std::min(best, MappingCost(a, b, map));
      return;
    }
    map[i] = -1;
    rec(i + 1);
    for (std::size_t j = 0; j < m; ++j) {
      if (used[j]) continue;
      used[j] = true;
      map[i] = static_cast<int>(j);
      rec(i + 1);
      used[j] = false;
    }
    map[i] = -1;
  };
  rec(0);
  return best;
}

bool LabelIsomorphic(const LabeledGraph& a, const LabeledGraph& b) {
  if (a.node_count() != b.node_count() || DistinctEdges(a) != DistinctEdges(b)) return false;
  std::vector<int> perm(a.node_count());
  for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = static_cast<int>(i);
  do {
    bool ok = true;
    for (std::size_t i = 0; i < perm.size() && ok; ++i) {
      ok = a.labels[i] == b.labels[static_cast<std::size_t>(perm[i])];
    }
    for (auto [u, v] : a.edges) {
      if (!ok) break;
      ok = HasEdge(b, perm[static_cast<std::size_t>(u)], perm[static_cast<std::size_t>(v)]);
    }
    if (ok) return true;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return false;
}

double ExactByteJaccard(const std::string& a, const std::string& b) {
  auto grams = [](const std::string& s) {
    std::set<std::string> out;
    for (std::size_t i = 0; i + 4 <= s.size(); ++i) out.insert(s.substr(i, 4));
    return out;
  };
  const auto x = grams(a), y = grams(b);
  if (x.empty() && y.empty()) return 1.0;
  std::size_t inter = 0;
  for (const auto& g : x) inter += y.count(g);
  return static_cast<double>(inter) / static_cast<double>(x.size() + y.size() - inter);
}

NaiveMetrics ComputeNaive(const std::vector<SampleOutcome>& outcomes, const std::vector<int>& levels) {
  NaiveMetrics r;
  const double n = static_cast<double>(outcomes.size());
  double weight_sum = 0.0, pre_sum = 0.0, post_sum = 0.0;
  for (const auto& o : outcomes) {
    // Each successful variant counts for 1/|V| of a sample.
    weight_sum += static_cast<double>(o.post_success) / static_cast<double>(o.variants);
    pre_sum += static_cast<double>(o.pre_in_topk) / static_cast<double>(o.variants);
    post_sum += static_cast<double>(o.post_in_topk) / static_cast<double>(o.variants);
  }
  r.wasr = 100.0 * (weight_sum / n);
  r.recall_pre = pre_sum / n;
  r.recall_post = post_sum / n;
  for (int level : levels) {
    int init = 0, asr = 0;
    double instrs = 0.0, nodes = 0.0;
    for (const auto& o : outcomes) {
      if (o.pre_success >= static_cast<std::size_t>(level)) ++init;
      if (o.post_success >= static_cast<std::size_t>(level)) {
        ++asr;
        instrs += static_cast<double>(o.modification.m_instrs);
        nodes += static_cast<double>(o.modification.m_nodes);
      }
    }
    r.init_at[level] = 100.0 * init / n;
    r.asr_at[level] = 100.0 * asr / n;
    r.m_instrs_at[level] = asr == 0 ? std::nullopt : std::optional<double>(instrs / asr);
    r.m_nodes_at[level] = asr == 0 ? std::nullopt : std::optional<double>(nodes / asr);
  }
  return r;
}

}  // namespace advbin::reference
