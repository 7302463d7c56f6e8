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

#include "advbin/optimizer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "advbin/error.hpp"

namespace advbin {
namespace {

using Clock = std::chrono::steady_clock;

double Seconds(Clock::time_point since) {
  return std::chrono::duration<double>(Clock::now() - since).count();
}

constexpr std::uint64_t kPoolStream = 1;
constexpr std::uint64_t kRefreshStream = 0x1000;

}  // namespace

std::string_view ToString(AttackMode mode) {
  return mode == AttackMode::kTargeted ? "targeted" : "untargeted";
}

AttackMode ParseAttackMode(std::string_view text) {
  if (text == "targeted") return AttackMode::kTargeted;
  if (text == "untargeted") return AttackMode::kUntargeted;
  throw std::invalid_argument("mode must be 'targeted' or 'untargeted', got '" + std::string(text) + "'");
}

void AttackConfig::Validate() const {
  if (max_iterations < 0) throw std::invalid_argument("iterations must be non-negative");
  if (lambda < 0.0) throw std::invalid_argument("lambda must be non-negative");
  if (epsilon < 0.0 || epsilon > 1.0) throw std::invalid_argument("epsilon must lie in [0, 1]");
  if (n_positions < 1) throw std::invalid_argument("positions must be at least 1");
  if (pool_capacity < 1) throw std::invalid_argument("pool capacity must be at least 1");
  if (strands_tested > pool_capacity) {
    throw std::invalid_argument("strands tested cannot exceed the pool capacity");
  }
  if (random_fraction < 0.0 || random_fraction > 1.0) {
    throw std::invalid_argument("random fraction must lie in [0, 1]");
  }
}

json AttackConfig::ToJson() const {
  return {{"iterations", max_iterations},   {"lambda", lambda},
          {"epsilon", epsilon},             {"positions", n_positions},
          {"strands_tested", strands_tested}, {"pool_capacity", pool_capacity},
          {"random_fraction", random_fraction}, {"top_actions", top_actions},
          {"transforms", enabled.ToString()}, {"seed", seed}};
}

AttackConfig AttackConfig::FromJson(const json& doc) {
  AttackConfig c;
  c.max_iterations = doc.value("iterations", c.max_iterations);
  c.lambda = doc.value("lambda", c.lambda);
  c.epsilon = doc.value("epsilon", c.epsilon);
  c.n_positions = doc.value("positions", c.n_positions);
  c.strands_tested = doc.value("strands_tested", c.strands_tested);
  c.pool_capacity = doc.value("pool_capacity", c.pool_capacity);
  c.random_fraction = doc.value("random_fraction", c.random_fraction);
  c.top_actions = doc.value("top_actions", c.top_actions);
  if (doc.contains("transforms")) {
    const std::string t = doc["transforms"].get<std::string>();
    c.enabled = t.empty() ? KindSet{} : KindSet::Parse(t);
  }
  c.seed = doc.value("seed", c.seed);
  c.Validate();
  return c;
}

double AttackResult::best_objective() const {
  const auto i = static_cast<std::size_t>(best_iteration);
  if (best_iteration < 0 || i >= per_iteration_objective.size()) return initial_objective;
  return per_iteration_objective[i];
}

json ActionToJson(const TransformAction& a) {
  json j = {{"kind", ToString(a.kind)}, {"block", a.pos.block}, {"index", a.pos.index}};
  if (a.strand) j["strand"] = *a.strand;
  return j;
}

TransformAction ActionFromJson(const json& j) {
  TransformAction a;
  a.kind = ParseTransformKind(j.at("kind").get<std::string>());
  a.pos = {j.at("block").get<int>(), j.at("index").get<std::size_t>()};
  if (j.contains("strand")) a.strand = j["strand"].get<std::size_t>();
  return a;
}

json AttackResult::ToJson(bool include_timing, bool include_function) const {
  json trace_json = json::array();
  for (const auto& a : trace) trace_json.push_back(ActionToJson(a));
  json chosen_json = json::array();
  for (const auto& a : chosen) chosen_json.push_back(ActionToJson(a));
  json j = {{"trace", std::move(trace_json)},
            {"chosen", std::move(chosen_json)},
            {"objectives", per_iteration_objective},
            {"best_iteration", best_iteration},
            {"oracle_queries", oracle_queries},
            {"m_instrs", modification.m_instrs},
            {"m_nodes", modification.m_nodes},
            {"f_adv_fingerprint", f_adv.fingerprint()},
            {"stopped_early", stopped_early},
            {"aborted", aborted}};
  j["initial_objective"] = std::isnan(initial_objective) ? json(nullptr) : json(initial_objective);
  if (aborted) j["abort_reason"] = abort_reason;
  if (include_function) j["f_adv"] = SerializeFunction(f_adv);
  if (include_timing) {
    j["wall_time_s"] = wall_time_s;
    j["iteration_times_s"] = iteration_times_s;
  }
  return j;
}

double ObjectiveFromSims(std::span<const double> sims, std::size_t query_len,
                         std::size_t candidate_len, double lambda, AttackMode mode) {
  if (sims.empty()) throw std::invalid_argument("objective needs at least one variant");
  if (query_len == 0) throw std::invalid_argument("query length must be positive");
  const double diff = std::abs(static_cast<double>(query_len) - static_cast<double>(candidate_len));
  const double penalty = lambda * diff / static_cast<double>(query_len);
  if (mode == AttackMode::kTargeted) return *std::min_element(sims.begin(), sims.end()) - penalty;
  return -*std::max_element(sims.begin(), sims.end()) - penalty;
}

double Objective(const FunctionCfg& candidate, const FunctionCfg& query,
                 std::span<const FunctionCfg> variants, const SimilarityOracle& oracle,
                 double lambda, AttackMode mode) {
  const auto sims = oracle.SimilarityMany(candidate, variants);
  return ObjectiveFromSims(sims, FunctionLen(query), FunctionLen(candidate), lambda, mode);
}

std::size_t ReferenceVariant(std::span<const double> sims, AttackMode mode) {
  if (sims.empty()) throw std::invalid_argument("no variants");
  const auto it = mode == AttackMode::kTargeted ? std::min_element(sims.begin(), sims.end())
                                                : std::max_element(sims.begin(), sims.end());
  return static_cast<std::size_t>(it - sims.begin());
}

ImportanceResult ImportanceScores(const FunctionCfg& f, std::span<const FunctionCfg> variants,
                                  const SimilarityOracle& oracle, AttackMode mode) {
  if (variants.empty()) throw std::invalid_argument("importance needs at least one variant");
  ImportanceResult r;
  r.sims = oracle.SimilarityMany(f, variants);
  r.queries += variants.size();
  r.reference = ReferenceVariant(r.sims, mode);
  const double base = r.sims[r.reference];
  const std::span<const FunctionCfg> ref = variants.subspan(r.reference, 1);
  for (const Position& pos : NonControlPositions(f)) {
    FunctionCfg probe;
    try {
      probe = RemoveInstruction(f, pos);
    } catch (const NotApplicable&) {
      continue;
    }
    const double s = oracle.SimilarityMany(probe, ref).front();
    ++r.queries;
    r.scores.emplace_back(pos, std::abs(base - s));
  }
  return r;
}

std::vector<Position> SelectPositions(std::span<const std::pair<Position, double>> scores,
                                      std::size_t n) {
  std::vector<std::pair<Position, double>> sorted(scores.begin(), scores.end());
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  std::vector<Position> out;
  for (std::size_t i = 0; i < std::min(n, sorted.size()); ++i) out.push_back(sorted[i].first);
  return out;
}

std::size_t EpsilonSelect(std::span<const double> objectives, double epsilon, Rng& rng) {
  if (objectives.empty()) throw std::invalid_argument("nothing to select from");
  const double u = rng.Uniform01();
  const std::size_t best =
      static_cast<std::size_t>(std::max_element(objectives.begin(), objectives.end()) - objectives.begin());
  if (u >= epsilon) return best;
  std::vector<std::size_t> others;
  for (std::size_t i = 0; i < objectives.size(); ++i) {
    if (objectives[i] < objectives[best]) others.push_back(i);
  }
  if (others.empty()) return 0;
  return rng.Pick(others);
}

AttackResult RunAttack(const AttackSample& sample, const SimilarityOracle& oracle,
                       const StrandDb& db, const AttackConfig& config) {
  config.Validate();
  if (sample.variants.empty()) throw std::invalid_argument("sample has no variants");
  if (db.empty()) throw EmptyDb("attack needs a non-empty strand database");
  const auto start = Clock::now();
  const std::span<const FunctionCfg> variants(sample.variants);
  const std::size_t query_len = FunctionLen(sample.query);

  AttackResult result;
  result.f_adv = sample.query;
  result.initial_objective = std::numeric_limits<double>::quiet_NaN();
  Rng rng(config.seed);
  CandidatePool pool = InitPool(db, config.pool_capacity, DeriveSeed(config.seed, kPoolStream),
                                config.random_fraction);
  const std::size_t per_action = std::min(config.strands_tested, pool.entries.size());

  FunctionCfg current = sample.query;
  double best = -std::numeric_limits<double>::infinity();
  try {
    for (int it = 0; it < config.max_iterations; ++it) {
      if (config.enabled.empty()) {
        result.stopped_early = true;
        break;
      }
      const auto iter_start = Clock::now();
      const ImportanceResult importance = ImportanceScores(current, variants, oracle, sample.mode);
      result.oracle_queries += importance.queries;
      if (it == 0) {
        result.initial_objective = ObjectiveFromSims(importance.sims, query_len, FunctionLen(current),
                                                     config.lambda, sample.mode);
      }
      const auto positions = SelectPositions(importance.scores, config.n_positions);
      const auto actions = EnumerateActions(current, positions, config.enabled, pool, per_action);
      if (actions.empty()) {
        result.stopped_early = true;
        break;
      }
      std::vector<double> objectives;
      objectives.reserve(actions.size());
      for (const auto& action : actions) {
        const FunctionCfg candidate = ApplyAction(current, action, db);
        const auto sims = oracle.SimilarityMany(candidate, variants);
        result.oracle_queries += sims.size();
        objectives.push_back(ObjectiveFromSims(sims, query_len, FunctionLen(candidate),
                                               config.lambda, sample.mode));
      }
      const std::size_t pick = EpsilonSelect(objectives, config.epsilon, rng);
      current = ApplyAction(current, actions[pick], db);
      result.chosen.push_back(actions[pick]);
      result.per_iteration_objective.push_back(objectives[pick]);
      if (objectives[pick] > best) {
        best = objectives[pick];
        result.best_iteration = it;
        result.f_adv = current;
      }

      std::vector<std::size_t> strand_actions;
      for (std::size_t i = 0; i < actions.size(); ++i) {
        if (actions[i].strand) strand_actions.push_back(i);
      }
      std::stable_sort(strand_actions.begin(), strand_actions.end(),
                       [&](std::size_t a, std::size_t b) { return objectives[a] > objectives[b]; });
      std::vector<std::size_t> top_strands;
      for (std::size_t i = 0; i < std::min(config.top_actions, strand_actions.size()); ++i) {
        top_strands.push_back(*actions[strand_actions[i]].strand);
      }
      pool = UpdatePool(pool, top_strands, db, DeriveSeed(config.seed, kRefreshStream + static_cast<std::uint64_t>(it)));
      result.iteration_times_s.push_back(Seconds(iter_start));
    }
  } catch (const OracleError& e) {
    result.aborted = true;
    result.abort_reason = e.what();
  }
  if (result.best_iteration >= 0) {
    result.trace.assign(result.chosen.begin(), result.chosen.begin() + result.best_iteration + 1);
  }
  result.modification = MeasureModification(sample.query, result.f_adv);
  result.wall_time_s = Seconds(start);
  return result;
}

AttackResult RunRandomAttack(const AttackSample& sample, const StrandDb& db, const AttackConfig& config) {
  config.Validate();
  if (db.empty()) throw EmptyDb("attack needs a non-empty strand database");
  const auto start = Clock::now();
  AttackResult result;
  result.f_adv = sample.query;
  result.initial_objective = std::numeric_limits<double>::quiet_NaN();
  Rng rng(config.seed);
  CandidatePool pool = InitPool(db, config.pool_capacity, DeriveSeed(config.seed, kPoolStream),
                                config.random_fraction);
  const std::size_t per_action = std::min(config.strands_tested, pool.entries.size());
  FunctionCfg current = sample.query;
  for (int it = 0; it < config.max_iterations && !config.enabled.empty(); ++it) {
    const auto iter_start = Clock::now();
    const auto positions = NonControlPositions(current);
    const auto actions = EnumerateActions(current, positions, config.enabled, pool, per_action);
    if (actions.empty()) {
      result.stopped_early = true;
      break;
    }
    const TransformAction& action = rng.Pick(actions);
    current = ApplyAction(current, action, db);
    result.chosen.push_back(action);
    result.per_iteration_objective.push_back(std::numeric_limits<double>::quiet_NaN());
    pool = UpdatePool(pool, {}, db, DeriveSeed(config.seed, kRefreshStream + static_cast<std::uint64_t>(it)));
    result.iteration_times_s.push_back(Seconds(iter_start));
  }
  result.trace = result.chosen;
  result.best_iteration = static_cast<int>(result.chosen.size()) - 1;
  result.f_adv = current;
  result.per_iteration_objective.clear();
  result.modification = MeasureModification(sample.query, result.f_adv);
  result.wall_time_s = Seconds(start);
  return result;
}

FunctionCfg ReplayTrace(const FunctionCfg& query, std::span<const TransformAction> trace,
                        const StrandDb& db) {
  FunctionCfg f = query;
  for (const auto& a : trace) f = ApplyAction(f, a, db);
  return f;
}

}  // namespace advbin
