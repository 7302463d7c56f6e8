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

#ifndef ADVBIN_EVALUATION_HPP_
#define ADVBIN_EVALUATION_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "advbin/cfg.hpp"
#include "advbin/optimizer.hpp"
#include "advbin/oracles.hpp"
#include "advbin/strand_store.hpp"

namespace advbin {

inline constexpr std::size_t kVariantsPerGroup = 4;

// Functions grouped by source identity (project, name).
struct GroupedCorpus {
  std::vector<FunctionCfg> functions;
  // Indices into `functions`, ordered by function id; only complete groups.
  std::vector<std::vector<std::size_t>> groups;
  std::vector<std::string> group_keys;
  // Groups dropped for not having exactly four variants.
  std::vector<std::string> rejected;
};

GroupedCorpus GroupCorpus(std::vector<FunctionCfg> functions);

// Throws BadGroup when any group does not have exactly four members.
void RequireCompleteGroups(const GroupedCorpus& corpus);

std::vector<AttackSample> BuildSamples(const GroupedCorpus& corpus, std::size_t pool_size,
                                       std::size_t n_samples, AttackMode mode, std::uint64_t seed);

struct RankEntry {
  std::string id;
  double score = 0.0;

  bool operator==(const RankEntry&) const = default;
};

// Descending score, ties by ascending id.
std::vector<RankEntry> RankPool(const SimilarityOracle& oracle, const FunctionCfg& query,
                                std::span<const FunctionCfg> pool);

// Variants inside (targeted) or outside (untargeted) the top k.
std::size_t SuccessCount(std::span<const RankEntry> ranking, const std::set<std::string>& variant_ids,
                         std::size_t k, AttackMode mode);

std::size_t VariantsInTopK(std::span<const RankEntry> ranking, const std::set<std::string>& variant_ids,
                           std::size_t k);

// Everything the metrics need from one attacked sample.
struct SampleOutcome {
  std::size_t variants = kVariantsPerGroup;
  std::size_t pre_success = 0;
  std::size_t post_success = 0;
  std::size_t pre_in_topk = 0;
  std::size_t post_in_topk = 0;
  ModificationSize modification;
  std::vector<TransformKind> trace_kinds;
  std::vector<double> iteration_times_s;
  double wall_time_s = 0.0;
  std::uint64_t oracle_queries = 0;
};

struct EvalConfig {
  std::size_t k = 10;
  std::vector<int> levels = {1, 2, 3, 4};
};

struct MetricsReport {
  std::size_t samples = 0;
  std::map<int, double> asr_at;
  std::map<int, double> init_at;
  double wasr = 0.0;
  double recall_pre = 0.0;
  double recall_post = 0.0;
  // Absent when no sample succeeds at that level.
  std::map<int, std::optional<double>> m_instrs_at;
  std::map<int, std::optional<double>> m_nodes_at;
  std::map<TransformKind, double> transform_distribution;
  double mean_oracle_queries = 0.0;
  double mean_iteration_time_s = 0.0;
  double stddev_iteration_time_s = 0.0;
  double mean_run_time_s = 0.0;

  json ToJson(bool include_timing = false) const;
};

MetricsReport ComputeMetrics(std::span<const SampleOutcome> outcomes, const EvalConfig& config);

SampleOutcome EvaluateOutcome(const SimilarityOracle& oracle, const AttackSample& sample,
                              const AttackResult& attack, std::size_t k);

struct SampleRun {
  AttackResult attack;
  SampleOutcome outcome;
};

// Attack seed for sample i is DeriveSeed(config.seed, i), so results do not
// depend on `jobs`.
std::vector<SampleRun> RunEvaluation(std::span<const AttackSample> samples,
                                     const SimilarityOracle& oracle, const StrandDb& db,
                                     const AttackConfig& config, std::size_t k, std::size_t jobs);

// Runs fn(i) for i in [0, n) on up to `jobs` threads. The first exception is
// rethrown after all workers stop.
void ParallelFor(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& fn);

// wASR of a set of adversarial queries against one oracle.
double WasrOn(const SimilarityOracle& oracle, std::span<const AttackSample> samples,
              std::span<const FunctionCfg> adversarial, std::size_t k, std::size_t jobs);

struct TransferSummary {
  std::map<std::string, double> tsr;
  std::map<std::string, double> vr;
};

// Off-diagonal row and column means of a (source, target) -> wASR matrix.
TransferSummary SummarizeTransfer(const std::map<std::pair<std::string, std::string>, double>& matrix);

struct TransferReport {
  std::vector<std::string> sources;
  std::vector<std::string> targets;
  std::map<std::pair<std::string, std::string>, double> matrix;
  TransferSummary summary;
  // Per target: mean and population standard deviation over baseline seeds.
  std::map<std::string, std::pair<double, double>> random_baseline;
  std::vector<std::uint64_t> baseline_seeds;

  json ToJson() const;
};

inline constexpr std::uint64_t kBaselineSeeds[3] = {11, 22, 33};

TransferReport TransferMatrix(std::span<const AttackSample> samples,
                              std::span<const OraclePtr> sources, std::span<const OraclePtr> targets,
                              const StrandDb& db, const AttackConfig& config, std::size_t k,
                              std::size_t jobs,
                              std::span<const std::uint64_t> baseline_seeds = kBaselineSeeds);

// Header and one row per configuration, columns as in the results tables.
std::string MetricsCsvHeader(const EvalConfig& config);
std::string MetricsCsvRow(const std::string& oracle, std::size_t pool_size, std::size_t k,
                          double lambda, AttackMode mode, const MetricsReport& report,
                          const EvalConfig& config);

}  // namespace advbin

#endif  // ADVBIN_EVALUATION_HPP_
