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

#include "advbin/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <mutex>
#include <numeric>
#include <thread>

#include "advbin/error.hpp"
#include "advbin/rng.hpp"

namespace advbin {
namespace {

double Mean(std::span<const double> xs) {
  if (xs.empty()) return 0.0;
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double PopulationStddev(std::span<const double> xs) {
  if (xs.empty()) return 0.0;
  const double m = Mean(xs);
  double acc = 0.0;
  for (double x : xs) acc += (x - m) * (x - m);
  return std::sqrt(acc / static_cast<double>(xs.size()));
}

std::set<std::string> Ids(std::span<const FunctionCfg> fs) {
  std::set<std::string> ids;
  for (const auto& f : fs) ids.insert(f.id());
  return ids;
}

std::string Num(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4f", x);
  return buf;
}

json OptionalNumber(const std::optional<double>& x) { return x ? json(*x) : json(nullptr); }

}  // namespace

GroupedCorpus GroupCorpus(std::vector<FunctionCfg> functions) {
  GroupedCorpus out;
  out.functions = std::move(functions);
  std::map<std::string, std::vector<std::size_t>> by_key;
  for (std::size_t i = 0; i < out.functions.size(); ++i) {
    const auto& f = out.functions[i];
    by_key[f.provenance().project + "\x1f" + f.name()].push_back(i);
  }
  for (auto& [key, members] : by_key) {
    std::sort(members.begin(), members.end(), [&](std::size_t a, std::size_t b) {
      return out.functions[a].id() < out.functions[b].id();
    });
    if (members.size() == kVariantsPerGroup) {
      out.groups.push_back(members);
      out.group_keys.push_back(key);
    } else {
      out.rejected.push_back(key);
    }
  }
  return out;
}

void RequireCompleteGroups(const GroupedCorpus& corpus) {
  if (!corpus.rejected.empty()) {
    std::string key = corpus.rejected.front();
    std::replace(key.begin(), key.end(), '\x1f', '/');
    throw BadGroup(std::to_string(corpus.rejected.size()) +
                   " function group(s) do not have exactly four variants, e.g. '" + key + "'");
  }
}

std::vector<AttackSample> BuildSamples(const GroupedCorpus& corpus, std::size_t pool_size,
                                       std::size_t n_samples, AttackMode mode, std::uint64_t seed) {
  if (pool_size == 0 || pool_size % kVariantsPerGroup != 0) {
    throw std::invalid_argument("pool size must be a positive multiple of 4");
  }
  const std::size_t pool_groups = pool_size / kVariantsPerGroup;
  const std::size_t needed = pool_groups + (mode == AttackMode::kTargeted ? 1 : 0);
  if (corpus.groups.size() < needed) {
    throw CorpusTooSmall("need " + std::to_string(needed) + " complete groups, corpus has " +
                         std::to_string(corpus.groups.size()));
  }
  std::vector<AttackSample> samples;
  samples.reserve(n_samples);
  for (std::size_t s = 0; s < n_samples; ++s) {
    Rng rng(DeriveSeed(seed, s));
    const auto picks = rng.SampleWithoutReplacement(corpus.groups.size(), needed);
    AttackSample sample;
    sample.mode = mode;
    for (std::size_t g = 0; g < pool_groups; ++g) {
      for (std::size_t idx : corpus.groups[picks[g]]) sample.pool.push_back(corpus.functions[idx]);
    }
    for (std::size_t idx : corpus.groups[picks[0]]) sample.variants.push_back(corpus.functions[idx]);
    if (mode == AttackMode::kUntargeted) {
      sample.query = sample.variants[rng.Below(sample.variants.size())];
    } else {
      const auto& foreign = corpus.groups[picks[pool_groups]];
      sample.query = corpus.functions[foreign[rng.Below(foreign.size())]];
    }
    samples.push_back(std::move(sample));
  }
  return samples;
}

std::vector<RankEntry> RankPool(const SimilarityOracle& oracle, const FunctionCfg& query,
                                std::span<const FunctionCfg> pool) {
  if (pool.empty()) throw std::invalid_argument("cannot rank an empty pool");
  const auto scores = oracle.SimilarityMany(query, pool);
  std::vector<RankEntry> ranking;
  ranking.reserve(pool.size());
  for (std::size_t i = 0; i < pool.size(); ++i) ranking.push_back({pool[i].id(), scores[i]});
  std::sort(ranking.begin(), ranking.end(), [](const RankEntry& a, const RankEntry& b) {
    return a.score != b.score ? a.score > b.score : a.id < b.id;
  });
  return ranking;
}

std::size_t VariantsInTopK(std::span<const RankEntry> ranking, const std::set<std::string>& variant_ids,
                           std::size_t k) {
  std::size_t inside = 0;
  for (std::size_t i = 0; i < std::min(k, ranking.size()); ++i) inside += variant_ids.count(ranking[i].id);
  return inside;
}

std::size_t SuccessCount(std::span<const RankEntry> ranking, const std::set<std::string>& variant_ids,
                         std::size_t k, AttackMode mode) {
  const std::size_t inside = VariantsInTopK(ranking, variant_ids, k);
  return mode == AttackMode::kTargeted ? inside : variant_ids.size() - inside;
}

MetricsReport ComputeMetrics(std::span<const SampleOutcome> outcomes, const EvalConfig& config) {
  if (outcomes.empty()) throw std::invalid_argument("no outcomes to summarize");
  if (config.levels.empty()) throw std::invalid_argument("no success levels requested");
  MetricsReport r;
  r.samples = outcomes.size();
  const double n = static_cast<double>(outcomes.size());
  const int top_level = *std::max_element(config.levels.begin(), config.levels.end());
  std::vector<double> weights, recall_pre, recall_post, iteration_times, run_times, queries;
  std::map<TransformKind, std::size_t> kind_counts;
  std::size_t kind_total = 0;
  for (const auto& o : outcomes) {
    const double v = static_cast<double>(o.variants);
    weights.push_back(static_cast<double>(o.post_success) / v);
    recall_pre.push_back(static_cast<double>(o.pre_in_topk) / v);
    recall_post.push_back(static_cast<double>(o.post_in_topk) / v);
    iteration_times.insert(iteration_times.end(), o.iteration_times_s.begin(), o.iteration_times_s.end());
    run_times.push_back(o.wall_time_s);
    queries.push_back(static_cast<double>(o.oracle_queries));
    if (static_cast<int>(o.post_success) >= top_level) {
      for (TransformKind k : o.trace_kinds) {
        ++kind_counts[k];
        ++kind_total;
      }
    }
  }
  for (int level : config.levels) {
    std::size_t post = 0, pre = 0;
    double instrs = 0.0, nodes = 0.0;
    for (const auto& o : outcomes) {
      if (static_cast<int>(o.pre_success) >= level) ++pre;
      if (static_cast<int>(o.post_success) >= level) {
        ++post;
        instrs += static_cast<double>(o.modification.m_instrs);
        nodes += static_cast<double>(o.modification.m_nodes);
      }
    }
    r.asr_at[level] = 100.0 * static_cast<double>(post) / n;
    r.init_at[level] = 100.0 * static_cast<double>(pre) / n;
    if (post > 0) {
      r.m_instrs_at[level] = instrs / static_cast<double>(post);
      r.m_nodes_at[level] = nodes / static_cast<double>(post);
    } else {
      r.m_instrs_at[level] = std::nullopt;
      r.m_nodes_at[level] = std::nullopt;
    }
  }
  r.wasr = 100.0 * Mean(weights);
  r.recall_pre = Mean(recall_pre);
  r.recall_post = Mean(recall_post);
  for (TransformKind k : kAllTransformKinds) {
    r.transform_distribution[k] =
        kind_total == 0 ? 0.0 : 100.0 * static_cast<double>(kind_counts[k]) / static_cast<double>(kind_total);
  }
  r.mean_oracle_queries = Mean(queries);
  r.mean_iteration_time_s = Mean(iteration_times);
  r.stddev_iteration_time_s = PopulationStddev(iteration_times);
  r.mean_run_time_s = Mean(run_times);
  return r;
}

json MetricsReport::ToJson(bool include_timing) const {
  json asr = json::object(), init = json::object(), mi = json::object(), mn = json::object();
  for (const auto& [i, v] : asr_at) asr[std::to_string(i)] = v;
  for (const auto& [i, v] : init_at) init[std::to_string(i)] = v;
  for (const auto& [i, v] : m_instrs_at) mi[std::to_string(i)] = OptionalNumber(v);
  for (const auto& [i, v] : m_nodes_at) mn[std::to_string(i)] = OptionalNumber(v);
  json dist = json::object();
  for (const auto& [k, v] : transform_distribution) dist[std::string(ToString(k))] = v;
  json j = {{"samples", samples},         {"asr_at", asr},
            {"init_at", init},            {"wasr", wasr},
            {"recall_pre", recall_pre},   {"recall_post", recall_post},
            {"m_instrs_at", mi},          {"m_nodes_at", mn},
            {"transform_distribution", dist}, {"mean_oracle_queries", mean_oracle_queries}};
  if (include_timing) {
    j["mean_iteration_time_s"] = mean_iteration_time_s;
    j["stddev_iteration_time_s"] = stddev_iteration_time_s;
    j["mean_run_time_s"] = mean_run_time_s;
  }
  return j;
}

SampleOutcome EvaluateOutcome(const SimilarityOracle& oracle, const AttackSample& sample,
                              const AttackResult& attack, std::size_t k) {
  const std::set<std::string> ids = Ids(sample.variants);
  const auto pre = RankPool(oracle, sample.query, sample.pool);
  const auto post = RankPool(oracle, attack.f_adv, sample.pool);
  SampleOutcome o;
  o.variants = ids.size();
  o.pre_success = SuccessCount(pre, ids, k, sample.mode);
  o.post_success = SuccessCount(post, ids, k, sample.mode);
  o.pre_in_topk = VariantsInTopK(pre, ids, k);
  o.post_in_topk = VariantsInTopK(post, ids, k);
  o.modification = attack.modification;
  for (const auto& a : attack.trace) o.trace_kinds.push_back(a.kind);
  o.iteration_times_s = attack.iteration_times_s;
  o.wall_time_s = attack.wall_time_s;
  o.oracle_queries = attack.oracle_queries;
  return o;
}

void ParallelFor(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& fn) {
  jobs = std::max<std::size_t>(1, std::min(jobs, n));
  if (jobs == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> workers;
  for (std::size_t w = 0; w < jobs; ++w) {
    workers.emplace_back([&] {
      for (;;) {
        const std::size_t i = next++;
        if (i >= n) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
          next = n;
          return;
        }
      }
    });
  }
  for (auto& t : workers) t.join();
  if (failure) std::rethrow_exception(failure);
}

std::vector<SampleRun> RunEvaluation(std::span<const AttackSample> samples,
                                     const SimilarityOracle& oracle, const StrandDb& db,
                                     const AttackConfig& config, std::size_t k, std::size_t jobs) {
  std::vector<SampleRun> runs(samples.size());
  ParallelFor(samples.size(), jobs, [&](std::size_t i) {
    AttackConfig c = config;
    c.seed = DeriveSeed(config.seed, i);
    runs[i].attack = RunAttack(samples[i], oracle, db, c);
    runs[i].outcome = EvaluateOutcome(oracle, samples[i], runs[i].attack, k);
  });
  return runs;
}

double WasrOn(const SimilarityOracle& oracle, std::span<const AttackSample> samples,
              std::span<const FunctionCfg> adversarial, std::size_t k, std::size_t jobs) {
  if (samples.size() != adversarial.size() || samples.empty()) {
    throw std::invalid_argument("need one adversarial function per sample");
  }
  std::vector<double> weights(samples.size());
  ParallelFor(samples.size(), jobs, [&](std::size_t i) {
    const auto ranking = RankPool(oracle, adversarial[i], samples[i].pool);
    const auto ids = Ids(samples[i].variants);
    weights[i] = static_cast<double>(SuccessCount(ranking, ids, k, samples[i].mode)) /
                 static_cast<double>(ids.size());
  });
  return 100.0 * Mean(weights);
}

TransferSummary SummarizeTransfer(const std::map<std::pair<std::string, std::string>, double>& matrix) {
  std::map<std::string, std::vector<double>> rows, cols;
  for (const auto& [key, value] : matrix) {
    if (key.first == key.second) continue;
    rows[key.first].push_back(value);
    cols[key.second].push_back(value);
  }
  TransferSummary s;
  for (const auto& [name, values] : rows) s.tsr[name] = Mean(values);
  for (const auto& [name, values] : cols) s.vr[name] = Mean(values);
  return s;
}

TransferReport TransferMatrix(std::span<const AttackSample> samples, std::span<const OraclePtr> sources,
                              std::span<const OraclePtr> targets, const StrandDb& db,
                              const AttackConfig& config, std::size_t k, std::size_t jobs,
                              std::span<const std::uint64_t> baseline_seeds) {
  if (samples.empty()) throw std::invalid_argument("transfer needs samples");
  TransferReport report;
  for (const auto& s : sources) report.sources.push_back(s->name());
  for (const auto& t : targets) report.targets.push_back(t->name());
  for (const auto& source : sources) {
    const auto runs = RunEvaluation(samples, *source, db, config, k, jobs);
    std::vector<FunctionCfg> adversarial;
    for (const auto& r : runs) adversarial.push_back(r.attack.f_adv);
    for (const auto& target : targets) {
      if (target->name() == source->name()) continue;
      report.matrix[{source->name(), target->name()}] = WasrOn(*target, samples, adversarial, k, jobs);
    }
  }
  report.summary = SummarizeTransfer(report.matrix);
  report.baseline_seeds.assign(baseline_seeds.begin(), baseline_seeds.end());
  std::map<std::string, std::vector<double>> baseline;
  for (std::uint64_t seed : baseline_seeds) {
    std::vector<FunctionCfg> adversarial(samples.size());
    ParallelFor(samples.size(), jobs, [&](std::size_t i) {
      AttackConfig c = config;
      c.seed = DeriveSeed(seed, i);
      adversarial[i] = RunRandomAttack(samples[i], db, c).f_adv;
    });
    for (const auto& target : targets) {
      baseline[target->name()].push_back(WasrOn(*target, samples, adversarial, k, jobs));
    }
  }
  for (const auto& [name, values] : baseline) {
    report.random_baseline[name] = {Mean(values), PopulationStddev(values)};
  }
  return report;
}

json TransferReport::ToJson() const {
  json cells = json::array();
  for (const auto& [key, value] : matrix) {
    cells.push_back({{"source", key.first}, {"target", key.second}, {"wasr", value}});
  }
  json baseline = json::object();
  for (const auto& [name, mv] : random_baseline) baseline[name] = {{"mean", mv.first}, {"stddev", mv.second}};
  return {{"sources", sources},          {"targets", targets},
          {"matrix", std::move(cells)},  {"tsr", summary.tsr},
          {"vr", summary.vr},            {"random_baseline", std::move(baseline)},
          {"baseline_seeds", baseline_seeds}};
}

std::string MetricsCsvHeader(const EvalConfig& config) {
  std::string h = "oracle,mode,pool_size,k,lambda,samples";
  for (int i : config.levels) h += ",INIT@" + std::to_string(i);
  for (int i : config.levels) h += ",ASR@" + std::to_string(i);
  h += ",wASR";
  for (int i : config.levels) h += ",M-Instrs@" + std::to_string(i);
  for (int i : config.levels) h += ",M-Nodes@" + std::to_string(i);
  h += ",recall_pre,recall_post";
  return h;
}

std::string MetricsCsvRow(const std::string& oracle, std::size_t pool_size, std::size_t k, double lambda,
                          AttackMode mode, const MetricsReport& r, const EvalConfig& config) {
  auto opt = [](const std::optional<double>& x) { return x ? Num(*x) : std::string(); };
  std::string row = oracle + "," + std::string(ToString(mode)) + "," + std::to_string(pool_size) + "," +
                    std::to_string(k) + "," + Num(lambda) + "," + std::to_string(r.samples);
  for (int i : config.levels) row += "," + Num(r.init_at.at(i));
  for (int i : config.levels) row += "," + Num(r.asr_at.at(i));
  row += "," + Num(r.wasr);
  for (int i : config.levels) row += "," + opt(r.m_instrs_at.at(i));
  for (int i : config.levels) row += "," + opt(r.m_nodes_at.at(i));
  row += "," + Num(r.recall_pre) + "," + Num(r.recall_post);
  return row;
}

}  // namespace advbin
