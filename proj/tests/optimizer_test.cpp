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

#include <algorithm>
#include <atomic>
#include <cmath>

#include <gtest/gtest.h>

#include "advbin/error.hpp"
#include "advbin/evaluation.hpp"
#include "advbin/miniisa.hpp"
#include "advbin/optimizer.hpp"
#include "test_util.hpp"

namespace advbin {
namespace {

using testing::MakeFunction;

// Multiplies every score by `scale`, which keeps all orderings intact.
class ScaledOracle final : public SimilarityOracle {
 public:
  ScaledOracle(OraclePtr inner, double scale) : inner_(std::move(inner)), scale_(scale) {}
  std::string name() const override { return "scaled"; }
  double Similarity(const FunctionCfg& a, const FunctionCfg& b) const override {
    return scale_ * inner_->Similarity(a, b);
  }

 private:
  OraclePtr inner_;
  double scale_;
};

// Fails with a transport error once `budget` scores have been served.
class FlakyOracle final : public SimilarityOracle {
 public:
  explicit FlakyOracle(std::uint64_t budget) : budget_(budget) {}
  std::string name() const override { return "flaky"; }
  double Similarity(const FunctionCfg& a, const FunctionCfg& b) const override {
    if (served_++ >= budget_) throw ProtocolError("connection reset");
    return GsizeSim(a, b);
  }

 private:
  std::uint64_t budget_;
  mutable std::atomic<std::uint64_t> served_{0};
};

const std::vector<AttackSample>& Samples(AttackMode mode) {
  static const auto untargeted = BuildSamples(testing::SmallCorpus(), 16, 6, AttackMode::kUntargeted, 3);
  static const auto targeted = BuildSamples(testing::SmallCorpus(), 16, 6, AttackMode::kTargeted, 3);
  return mode == AttackMode::kTargeted ? targeted : untargeted;
}

AttackConfig SmallConfig(int iterations, double epsilon, std::uint64_t seed = 5) {
  AttackConfig c;
  c.max_iterations = iterations;
  c.epsilon = epsilon;
  c.n_positions = 6;
  c.strands_tested = 4;
  c.seed = seed;
  return c;
}

double RecomputedObjective(const FunctionCfg& f, const AttackSample& s, const SimilarityOracle& o,
                           double lambda) {
  return Objective(f, s.query, s.variants, o, lambda, s.mode);
}

TEST(ObjectiveTest, ArithmeticExamples) {
  const std::vector<double> sims = {0.3, 0.7};
  EXPECT_DOUBLE_EQ(ObjectiveFromSims(sims, 10, 10, 0.0, AttackMode::kTargeted), 0.3);
  EXPECT_DOUBLE_EQ(ObjectiveFromSims(sims, 10, 10, 0.0, AttackMode::kUntargeted), -0.7);
  const std::vector<double> half = {0.5, 0.9};
  EXPECT_DOUBLE_EQ(ObjectiveFromSims(half, 100, 150, 0.3, AttackMode::kTargeted), 0.35);
  // The penalty is symmetric in the length difference.
  EXPECT_DOUBLE_EQ(ObjectiveFromSims(half, 100, 50, 0.3, AttackMode::kTargeted), 0.35);
  EXPECT_THROW(ObjectiveFromSims({}, 10, 10, 0.0, AttackMode::kTargeted), std::invalid_argument);
  EXPECT_THROW(ObjectiveFromSims(sims, 0, 10, 0.0, AttackMode::kTargeted), std::invalid_argument);
}

TEST(ObjectiveTest, MatchesOracleScores) {
  const auto oracle = MakeOracle("ngram");
  for (const auto& s : Samples(AttackMode::kTargeted)) {
    const auto sims = oracle->SimilarityMany(s.query, s.variants);
    EXPECT_EQ(RecomputedObjective(s.query, s, *oracle, 0.3),
              *std::min_element(sims.begin(), sims.end()));
  }
}

TEST(ImportanceTest, GsizeScoresAreAllZero) {
  const auto oracle = MakeOracle("gsize");
  const auto& s = Samples(AttackMode::kUntargeted)[0];
  const auto r = ImportanceScores(s.query, s.variants, *oracle, s.mode);
  EXPECT_FALSE(r.scores.empty());
  for (const auto& [pos, score] : r.scores) EXPECT_EQ(score, 0.0);
  EXPECT_EQ(r.queries, s.variants.size() + r.scores.size());
}

TEST(ImportanceTest, DuplicatedInstructionsScoreEqually) {
  const FunctionCfg f = MakeFunction({{0, {"add r2, r2, 1", "xor r3, r3, r3", "xor r3, r3, r3", "mul r4, r4, 3",
                                           "jmp b1"}, {1}},
                                      {1, {"mov r0, r2", "ret"}, {}}});
  const std::vector<FunctionCfg> variants = {testing::SmallCorpus().functions[3]};
  const auto oracle = MakeOracle("ngram");
  for (AttackMode mode : {AttackMode::kTargeted, AttackMode::kUntargeted}) {
    const auto r = ImportanceScores(f, variants, *oracle, mode);
    EXPECT_EQ(r.reference, 0u);
    std::map<Position, double> by_pos(r.scores.begin(), r.scores.end());
    EXPECT_EQ(by_pos.at(Position{0, 1}), by_pos.at(Position{0, 2}));
  }
}

TEST(ImportanceTest, ReferenceVariantFollowsMode) {
  const std::vector<double> sims = {0.4, 0.1, 0.9, 0.1};
  EXPECT_EQ(ReferenceVariant(sims, AttackMode::kTargeted), 1u);
  EXPECT_EQ(ReferenceVariant(sims, AttackMode::kUntargeted), 2u);
}

TEST(SelectPositionsTest, ZeroScoresFallBackToPositionOrder) {
  std::vector<std::pair<Position, double>> scores;
  for (int b = 0; b < 8; ++b) {
    for (int i = 0; i < 10; ++i) scores.push_back({Position{b, i}, 0.0});
  }
  Rng rng(1);
  rng.Shuffle(scores);
  const auto picked = SelectPositions(scores, 50);
  ASSERT_EQ(picked.size(), 50u);
  for (std::size_t j = 0; j < 50; ++j) {
    EXPECT_EQ(picked[j], (Position{static_cast<int>(j / 10), static_cast<int>(j % 10)}));
  }
  EXPECT_EQ(SelectPositions(scores, 500).size(), 80u);
}

TEST(SelectPositionsTest, AgreesWithFullSort) {
  Rng rng(2);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<std::pair<Position, double>> scores;
    const std::size_t n = 1 + rng.Below(60);
    for (std::size_t i = 0; i < n; ++i) {
      scores.push_back({Position{static_cast<int>(i / 7), static_cast<int>(i % 7)}, rng.Uniform01()});
    }
    const std::size_t take = rng.Below(n + 5);
    auto sorted = scores;
    std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
    std::set<Position> expected;
    for (std::size_t i = 0; i < std::min(take, n); ++i) expected.insert(sorted[i].first);
    const auto picked = SelectPositions(scores, take);
    EXPECT_EQ(std::set<Position>(picked.begin(), picked.end()), expected);
  }
}

TEST(EpsilonSelectTest, GreedyExploratoryAndDegenerate) {
  const std::vector<double> objectives = {0.1, 0.8, 0.3};
  Rng rng(9);
  for (int i = 0; i < 1000; ++i) EXPECT_EQ(EpsilonSelect(objectives, 0.0, rng), 1u);
  int argmax_hits = 0;
  std::set<std::size_t> seen;
  for (int i = 0; i < 1000; ++i) {
    const std::size_t pick = EpsilonSelect(objectives, 1.0, rng);
    argmax_hits += pick == 1;
    seen.insert(pick);
  }
  EXPECT_EQ(argmax_hits, 0);
  EXPECT_EQ(seen, (std::set<std::size_t>{0, 2}));
  const std::vector<double> single = {-0.2};
  for (double eps : {0.0, 0.5, 1.0}) EXPECT_EQ(EpsilonSelect(single, eps, rng), 0u);
  const std::vector<double> ties = {0.5, 0.5, 0.5};
  for (double eps : {0.0, 1.0}) EXPECT_EQ(EpsilonSelect(ties, eps, rng), 0u);
  EXPECT_THROW(EpsilonSelect({}, 0.1, rng), std::invalid_argument);
}

TEST(RunAttackTest, NoEnabledTransformsIsANoOp) {
  AttackConfig c = SmallConfig(5, 0.1);
  c.enabled = KindSet{};
  const auto& s = Samples(AttackMode::kUntargeted)[0];
  const auto r = RunAttack(s, *MakeOracle("gsize"), testing::SmallDb(), c);
  EXPECT_EQ(SerializeFunction(r.f_adv), SerializeFunction(s.query));
  EXPECT_TRUE(r.trace.empty());
  EXPECT_TRUE(r.per_iteration_objective.empty());
  EXPECT_EQ(r.best_iteration, -1);
}

TEST(RunAttackTest, SingleGreedyStepUnderGsizeAddsANode) {
  const auto oracle = MakeOracle("gsize");
  const auto& db = testing::SmallDb();
  for (const auto& s : Samples(AttackMode::kUntargeted)) {
    const auto r = RunAttack(s, *oracle, db, SmallConfig(1, 0.0));
    ASSERT_EQ(r.chosen.size(), 1u);
    const TransformKind kind = r.chosen[0].kind;
    EXPECT_TRUE(kind == TransformKind::kNS || kind == TransformKind::kDBA) << ToString(r.chosen[0]);
    EXPECT_GT(r.per_iteration_objective[0], r.initial_objective);
    EXPECT_EQ(r.per_iteration_objective[0], RecomputedObjective(r.f_adv, s, *oracle, 0.0));
    // Exhaustive check: nothing that keeps the block count can move the score.
    std::vector<Position> positions = NonControlPositions(s.query);
    for (const auto& pos : positions) {
      for (std::size_t strand = 0; strand < 3; ++strand) {
        for (const TransformAction& a : {TransformAction{TransformKind::kIR, pos, std::nullopt},
                                         TransformAction{TransformKind::kSA, pos, strand}}) {
          FunctionCfg g;
          try {
            g = ApplyAction(s.query, a, db);
          } catch (const NotApplicable&) {
            continue;
          }
          EXPECT_EQ(RecomputedObjective(g, s, *oracle, 0.0), r.initial_objective);
        }
      }
    }
  }
}

TEST(RunAttackTest, SameSeedSameResult) {
  const auto oracle = MakeOracle("ngram");
  const auto& s = Samples(AttackMode::kTargeted)[1];
  const auto a = RunAttack(s, *oracle, testing::SmallDb(), SmallConfig(4, 0.3, 77));
  const auto b = RunAttack(s, *oracle, testing::SmallDb(), SmallConfig(4, 0.3, 77));
  EXPECT_EQ(a.ToJson(false, true).dump(), b.ToJson(false, true).dump());
}

TEST(RunAttackTest, BestOfRunReplayAndSemantics) {
  const auto oracle = MakeOracle("ngram");
  const auto& db = testing::SmallDb();
  for (AttackMode mode : {AttackMode::kTargeted, AttackMode::kUntargeted}) {
    for (std::size_t i = 0; i < 3; ++i) {
      const auto& s = Samples(mode)[i];
      AttackConfig c = SmallConfig(6, 0.5, 100 + i);
      c.lambda = 0.1;
      const auto r = RunAttack(s, *oracle, db, c);
      ASSERT_EQ(r.per_iteration_objective.size(), 6u);
      const auto best = std::max_element(r.per_iteration_objective.begin(), r.per_iteration_objective.end());
      EXPECT_EQ(r.best_iteration, best - r.per_iteration_objective.begin());
      EXPECT_EQ(r.best_objective(), *best);
      EXPECT_DOUBLE_EQ(RecomputedObjective(r.f_adv, s, *oracle, c.lambda), *best);
      EXPECT_LE(r.trace.size(), 6u);
      EXPECT_EQ(SerializeFunction(ReplayTrace(s.query, r.trace, db)), SerializeFunction(r.f_adv));
      EXPECT_TRUE(CheckEquivalence(s.query, r.f_adv, 16, 4).equivalent);
      EXPECT_EQ(r.modification, MeasureModification(s.query, r.f_adv));
    }
  }
}

TEST(RunAttackTest, GreedyRunningMaximumNeverDrops) {
  const auto oracle = MakeOracle("catalog1");
  const auto& s = Samples(AttackMode::kUntargeted)[2];
  const auto r = RunAttack(s, *oracle, testing::SmallDb(), SmallConfig(5, 0.0));
  double running = r.initial_objective;
  for (double v : r.per_iteration_objective) {
    EXPECT_GE(std::max(running, v), running);
    running = std::max(running, v);
  }
  EXPECT_EQ(running, r.best_objective());
}

TEST(RunAttackTest, QueryAccountingMatchesCountingWrapper) {
  CountingOracle counter(MakeOracle("ngram"));
  const auto& s = Samples(AttackMode::kTargeted)[0];
  const auto r = RunAttack(s, counter, testing::SmallDb(), SmallConfig(3, 0.1));
  EXPECT_GT(r.oracle_queries, 0u);
  EXPECT_EQ(r.oracle_queries, counter.count());
}

TEST(RunAttackTest, ScalingTheOracleKeepsTheActionSequence) {
  const OraclePtr base = MakeOracle("ngram");
  const ScaledOracle scaled(base, 0.5);
  for (AttackMode mode : {AttackMode::kTargeted, AttackMode::kUntargeted}) {
    const auto& s = Samples(mode)[3];
    const auto a = RunAttack(s, *base, testing::SmallDb(), SmallConfig(4, 0.0));
    const auto b = RunAttack(s, scaled, testing::SmallDb(), SmallConfig(4, 0.0));
    EXPECT_EQ(a.chosen, b.chosen);
  }
}

TEST(RunAttackTest, OracleFailureKeepsPartialProgress) {
  const auto& s = Samples(AttackMode::kUntargeted)[0];
  const auto full = RunAttack(s, *MakeOracle("gsize"), testing::SmallDb(), SmallConfig(4, 0.0));
  // Enough budget for the first iteration and part of the second.
  const FlakyOracle flaky(full.oracle_queries / 4 + full.oracle_queries / 8);
  const auto r = RunAttack(s, flaky, testing::SmallDb(), SmallConfig(4, 0.0));
  EXPECT_TRUE(r.aborted);
  EXPECT_NE(r.abort_reason.find("connection reset"), std::string::npos);
  EXPECT_GE(r.chosen.size(), 1u);
  EXPECT_LT(r.chosen.size(), 4u);
  EXPECT_EQ(SerializeFunction(ReplayTrace(s.query, r.trace, testing::SmallDb())), SerializeFunction(r.f_adv));
}

TEST(RunRandomAttackTest, ReplaysAndPreservesSemantics) {
  const auto& s = Samples(AttackMode::kUntargeted)[4];
  const auto r = RunRandomAttack(s, testing::SmallDb(), SmallConfig(8, 0.0, 21));
  EXPECT_EQ(r.trace.size(), 8u);
  EXPECT_EQ(SerializeFunction(ReplayTrace(s.query, r.trace, testing::SmallDb())), SerializeFunction(r.f_adv));
  EXPECT_TRUE(CheckEquivalence(s.query, r.f_adv, 16, 8).equivalent);
  const auto again = RunRandomAttack(s, testing::SmallDb(), SmallConfig(8, 0.0, 21));
  EXPECT_EQ(again.trace, r.trace);
}

TEST(AttackConfigTest, ValidationAndJson) {
  AttackConfig c;
  EXPECT_NO_THROW(c.Validate());
  EXPECT_EQ(c.epsilon, 0.1);
  EXPECT_EQ(c.top_actions, 5u);
  c.epsilon = 1.5;
  EXPECT_THROW(c.Validate(), std::invalid_argument);
  c = AttackConfig{};
  c.max_iterations = -1;
  EXPECT_THROW(c.Validate(), std::invalid_argument);
  c = SmallConfig(7, 0.2, 99);
  c.lambda = 0.3;
  c.enabled = KindSet{TransformKind::kSA};
  EXPECT_EQ(AttackConfig::FromJson(c.ToJson()).ToJson(), c.ToJson());
  EXPECT_EQ(ParseAttackMode(ToString(AttackMode::kTargeted)), AttackMode::kTargeted);
  EXPECT_THROW(ParseAttackMode("sideways"), std::invalid_argument);
}

TEST(ActionJsonTest, RoundTrips) {
  for (const TransformAction& a : {TransformAction{TransformKind::kIR, {2, 3}, std::nullopt},
                                   TransformAction{TransformKind::kDBA, {0, 0}, 17}}) {
    EXPECT_EQ(ActionFromJson(ActionToJson(a)), a);
  }
}

}  // namespace
}  // namespace advbin
