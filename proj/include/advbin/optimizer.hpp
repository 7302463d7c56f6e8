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

#ifndef ADVBIN_OPTIMIZER_HPP_
#define ADVBIN_OPTIMIZER_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "advbin/cfg.hpp"
#include "advbin/oracles.hpp"
#include "advbin/rng.hpp"
#include "advbin/strand_store.hpp"
#include "advbin/transforms.hpp"

namespace advbin {

enum class AttackMode { kTargeted, kUntargeted };

std::string_view ToString(AttackMode mode);
AttackMode ParseAttackMode(std::string_view text);

struct AttackConfig {
  int max_iterations = 30;
  double lambda = 0.0;
  double epsilon = 0.1;
  std::size_t n_positions = 50;
  std::size_t strands_tested = 20;
  std::size_t pool_capacity = kDefaultPoolCapacity;
  double random_fraction = kDefaultRandomFraction;
  // How many of an iteration's best DBA/SA candidates seed the neighbor
  // refresh of the strand pool.
  std::size_t top_actions = 5;
  KindSet enabled = KindSet::All();
  std::uint64_t seed = 0;

  // Throws invalid_argument on out-of-range values.
  void Validate() const;
  json ToJson() const;
  static AttackConfig FromJson(const json& document);
};

struct AttackSample {
  std::vector<FunctionCfg> pool;
  std::vector<FunctionCfg> variants;
  FunctionCfg query;
  AttackMode mode = AttackMode::kUntargeted;
};

struct AttackResult {
  FunctionCfg f_adv;
  // Actions leading from the query to f_adv.
  std::vector<TransformAction> trace;
  // The action chosen at every iteration, including those after the best.
  std::vector<TransformAction> chosen;
  std::vector<double> per_iteration_objective;
  // Objective of the unmodified query; NaN when no iteration ran.
  double initial_objective = 0.0;
  // -1 when f_adv is the query itself.
  int best_iteration = -1;
  std::uint64_t oracle_queries = 0;
  double wall_time_s = 0.0;
  std::vector<double> iteration_times_s;
  ModificationSize modification;
  bool stopped_early = false;
  bool aborted = false;
  std::string abort_reason;

  double best_objective() const;
  // Timing fields are omitted unless requested so that bodies compare
  // byte-for-byte across reruns.
  json ToJson(bool include_timing = false, bool include_function = false) const;
};

json ActionToJson(const TransformAction& action);
TransformAction ActionFromJson(const json& document);

// Attacker objective from precomputed similarities; higher is better.
double ObjectiveFromSims(std::span<const double> sims, std::size_t query_len,
                         std::size_t candidate_len, double lambda, AttackMode mode);

double Objective(const FunctionCfg& candidate, const FunctionCfg& query,
                 std::span<const FunctionCfg> variants, const SimilarityOracle& oracle,
                 double lambda, AttackMode mode);

// Index of the variant importance is measured against.
std::size_t ReferenceVariant(std::span<const double> sims, AttackMode mode);

struct ImportanceResult {
  std::vector<std::pair<Position, double>> scores;
  // Similarities of the probed function to every variant.
  std::vector<double> sims;
  std::size_t reference = 0;
  std::uint64_t queries = 0;
};

ImportanceResult ImportanceScores(const FunctionCfg& f, std::span<const FunctionCfg> variants,
                                  const SimilarityOracle& oracle, AttackMode mode);

std::vector<Position> SelectPositions(std::span<const std::pair<Position, double>> scores,
                                      std::size_t n);

// Draws u in [0, 1): u >= epsilon picks the first maximum, otherwise a
// uniform choice among the non-maximal entries (the first entry if all tie).
std::size_t EpsilonSelect(std::span<const double> objectives, double epsilon, Rng& rng);

AttackResult RunAttack(const AttackSample& sample, const SimilarityOracle& oracle,
                       const StrandDb& db, const AttackConfig& config);

// Baseline: every iteration applies a uniformly random applicable action,
// without consulting any oracle. The last output is returned.
AttackResult RunRandomAttack(const AttackSample& sample, const StrandDb& db,
                             const AttackConfig& config);

// Re-applies a trace to the query.
FunctionCfg ReplayTrace(const FunctionCfg& query, std::span<const TransformAction> trace,
                        const StrandDb& db);

}  // namespace advbin

#endif  // ADVBIN_OPTIMIZER_HPP_
