#include <gtest/gtest.h>

#include <random>

#include "mlad/dependency_metrics.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace mlad;

namespace {

LabelGrid grid(const std::vector<std::vector<int>>& per_class) {
  LabelGrid y(per_class[0].size(), per_class.size());
  for (std::size_t c = 0; c < per_class.size(); ++c)
    for (std::size_t t = 0; t < per_class[c].size(); ++t) y(t, c) = std::uint8_t(per_class[c][t]);
  return y;
}

std::vector<bool> as_bool(const std::vector<std::uint8_t>& m) { return {m.begin(), m.end()}; }

// One video, T=3: y(c1) = [1,1,0], y(c2) = [1,0,0]; predicted c1 = [1,0,1], c2 = [0,0,0].
EvalInstance three_step_example() {
  EvalInstance inst;
  inst.C = 2;
  EvalVideo v;
  v.id = "v";
  v.labels = grid({{1, 1, 0}, {1, 0, 0}});
  v.scores = ScoreGrid::from_labels(grid({{1, 0, 1}, {0, 0, 0}}));
  inst.videos.push_back(v);
  return inst;
}

EvalInstance random_instance(std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> K(1, 5), T(1, 20), C(2, 6);
  EvalInstance inst;
  inst.C = C(rng);
  const std::size_t k = K(rng);
  std::uniform_real_distribution<double> density(0.05, 0.6);
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t t = T(rng);
    EvalVideo v{"v" + std::to_string(i), mlad::testing::random_labels(t, inst.C, rng, density(rng)),
                mlad::testing::random_scores(t, inst.C, rng)};
    inst.videos.push_back(std::move(v));
  }
  return inst;
}

}  // namespace

TEST(Binarize, StrictThreshold) {
  const ScoreGrid half(2, 2, 0.5);
  EXPECT_EQ(binarize(half, 0.5), LabelGrid(2, 2));
  std::mt19937_64 rng(1);
  const ScoreGrid s = mlad::testing::random_scores(7, 4, rng);
  const LabelGrid b = binarize(s, 0.3);
  for (std::size_t i = 0; i < s.cells.size(); ++i) EXPECT_EQ(b.cells[i], s.cells[i] > 0.3 ? 1 : 0);
  EXPECT_THROW(binarize(s, 1.0), Error);
  EXPECT_THROW(binarize(s, 0.0), Error);
}

TEST(ConditionMask, AbsentConditioningClassMasksNothing) {
  const LabelGrid y(6, 2);
  for (std::size_t tau : {0u, 3u}) EXPECT_EQ(as_bool(condition_mask(y, 1, tau)), std::vector<bool>(6, false));
}

TEST(ConditionMask, WindowAfterSingleOccurrence) {
  const LabelGrid y = grid({{1, 0, 0, 0, 0}});
  EXPECT_EQ(as_bool(condition_mask(y, 0, 3)), (std::vector<bool>{false, true, true, true, false}));
}

TEST(ConditionMask, AlwaysPresentExcludesCooccurrenceSteps) {
  const LabelGrid y = grid({{1, 1, 1, 1}});
  EXPECT_EQ(as_bool(condition_mask(y, 0, 2)), std::vector<bool>(4, false));
  EXPECT_EQ(as_bool(condition_mask(y, 0, 0)), std::vector<bool>(4, true));
  EXPECT_THROW(condition_mask(y, 1, 0), Error);
}

TEST(ConditionMask, MatchesLiteralWindowScan) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    const LabelGrid y = mlad::testing::random_labels(15, 2, rng, 0.3);
    for (std::size_t tau : {0u, 1u, 2u, 5u, 20u}) {
      const auto m = condition_mask(y, 1, tau);
      for (std::size_t t = 0; t < 15; ++t) ASSERT_EQ(bool(m[t]), oracle::conditioned(y, 1, tau, t));
    }
  }
}

TEST(PairCounts, ThreeStepWorkedExample) {
  const EvalInstance inst = three_step_example();
  const auto pred = binarize(inst, 0.5);
  const auto a = pair_counts(inst, pred, 0, 1, 0);
  EXPECT_EQ(a.n_correct, 1u);
  EXPECT_EQ(a.n_predict, 1u);
  EXPECT_EQ(a.n_gt, 1u);
  const auto b = pair_counts(inst, pred, 1, 0, 0);  // the reverse pair differs
  EXPECT_EQ(b.n_correct, 0u);
  EXPECT_EQ(b.n_predict, 0u);
  EXPECT_EQ(b.n_gt, 1u);
  EXPECT_THROW(pair_counts(inst, pred, 1, 1, 0), Error);
}

TEST(PairCounts, PredictionOutsideWindowIgnored) {
  EvalInstance inst;
  inst.C = 2;
  inst.videos.push_back({"v", grid({{0, 0, 1, 0, 0}, {1, 0, 0, 0, 0}}),
                         ScoreGrid::from_labels(grid({{0, 0, 1, 0, 1}, {0, 0, 0, 0, 0}}))});
  const auto c = pair_counts(inst, binarize(inst, 0.5), 0, 1, 3);
  EXPECT_EQ(c.n_correct, 1u);
  EXPECT_EQ(c.n_predict, 1u);
  EXPECT_EQ(c.n_gt, 1u);
}

TEST(PairCounts, WindowsDoNotCrossVideos) {
  EvalInstance inst;
  inst.C = 2;
  // cj at the last step of the first video must not condition the second video's first step.
  inst.videos.push_back({"a", grid({{0, 0}, {0, 1}}), ScoreGrid(2, 2, 0.9)});
  inst.videos.push_back({"b", grid({{1, 0}, {0, 0}}), ScoreGrid(2, 2, 0.9)});
  const auto c = pair_counts(inst, binarize(inst, 0.5), 0, 1, 5);
  EXPECT_EQ(c.n_gt, 0u);
  EXPECT_EQ(c.n_predict, 0u);
}

TEST(PrecisionRecallF1, Conventions) {
  auto prf = [](std::uint64_t nc, std::uint64_t np, std::uint64_t ng) {
    return pair_precision_recall_f1(PairCounts{0, 1, 0, nc, np, ng});
  };
  auto r = prf(1, 1, 1);
  EXPECT_EQ(r.precision, 1.0);
  EXPECT_EQ(r.recall, 1.0);
  EXPECT_EQ(r.f1, 1.0);
  r = prf(0, 0, 1);
  EXPECT_EQ(r.precision, 0.0);
  EXPECT_EQ(r.recall, 0.0);
  EXPECT_EQ(r.f1, 0.0);
  r = prf(1, 2, 1);
  EXPECT_EQ(r.precision, 0.5);
  EXPECT_EQ(r.recall, 1.0);
  EXPECT_NEAR(r.f1, 2.0 / 3.0, 1e-15);
  try {
    prf(0, 0, 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), "invalid_pair");
  }
}

TEST(AveragePrecision, HandExamples) {
  const std::vector<double> s{0.9, 0.8, 0.1, 0.05};
  EXPECT_EQ(average_precision(s, std::vector<std::uint8_t>{1, 1, 0, 0}), 1.0);
  EXPECT_EQ(average_precision(std::vector<double>{0.3}, std::vector<std::uint8_t>{1}), 1.0);
  EXPECT_NEAR(average_precision(std::vector<double>{0.9, 0.5, 0.1}, std::vector<std::uint8_t>{1, 0, 1}), 5.0 / 6.0,
              1e-15);
  EXPECT_THROW(average_precision(s, std::vector<std::uint8_t>{0, 0, 0, 0}), Error);
}

TEST(AveragePrecision, TiesKeepInputOrder) {
  const std::vector<double> s{0.5, 0.5};
  EXPECT_EQ(average_precision(s, std::vector<std::uint8_t>{1, 0}), 1.0);
  EXPECT_EQ(average_precision(s, std::vector<std::uint8_t>{0, 1}), 0.5);
}

TEST(Aggregate, PerfectPredictorScoresOneEverywhere) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    EvalInstance inst = random_instance(rng);
    for (auto& v : inst.videos) v.scores = ScoreGrid::from_labels(v.labels);
    const std::vector<std::size_t> taus{0, 1, 3, 10};
    for (const auto& tr : aggregate(inst, 0.5, taus).per_tau) {
      if (!tr.aggregate) continue;
      EXPECT_EQ(tr.aggregate->precision, 1.0);
      EXPECT_EQ(tr.aggregate->recall, 1.0);
      EXPECT_EQ(tr.aggregate->f1, 1.0);
      EXPECT_EQ(tr.aggregate->map, 1.0);
    }
  }
}

TEST(Aggregate, AllZeroPredictions) {
  std::mt19937_64 rng(4);
  EvalInstance inst = random_instance(rng);
  for (auto& v : inst.videos) v.scores = ScoreGrid(v.labels.T, inst.C, 0.1);
  const std::vector<std::size_t> taus{0, 4};
  for (const auto& tr : aggregate(inst, 0.5, taus).per_tau) {
    if (!tr.aggregate) continue;
    EXPECT_EQ(tr.aggregate->precision, 0.0);
    EXPECT_EQ(tr.aggregate->recall, 0.0);
    EXPECT_EQ(tr.aggregate->f1, 0.0);
  }
}

TEST(Aggregate, AbsentWhenNoValidPair) {
  EvalInstance inst;
  inst.C = 3;
  inst.videos.push_back({"v", LabelGrid(4, 3), ScoreGrid(4, 3, 0.7)});
  const std::vector<std::size_t> taus{0, 2};
  const auto rep = aggregate(inst, 0.5, taus);
  ASSERT_EQ(rep.per_tau.size(), 2u);
  for (const auto& tr : rep.per_tau) {
    EXPECT_FALSE(tr.aggregate.has_value());
    EXPECT_TRUE(tr.pairs.empty());
  }
  EXPECT_FALSE(rep.per_class[0].recall.has_value());
  EXPECT_EQ(rep.per_class[0].precision, 0.0);
}

TEST(Aggregate, MatchesBruteForceEnumeration) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> thr(0.1, 0.9);
  for (int trial = 0; trial < 300; ++trial) {
    const EvalInstance inst = random_instance(rng);
    const double th = thr(rng);
    const std::vector<std::size_t> taus{0, 1, 2, 7};
    const auto rep = aggregate(inst, th, taus);
    for (const auto& tr : rep.per_tau) {
      for (const auto& p : tr.pairs) {
        const auto c = oracle::pair_counts(inst, th, p.counts.ci, p.counts.cj, tr.tau);
        ASSERT_EQ(p.counts.n_correct, c.n_correct);
        ASSERT_EQ(p.counts.n_predict, c.n_predict);
        ASSERT_EQ(p.counts.n_gt, c.n_gt);
        ASSERT_NEAR(p.ap, oracle::pair_ap(inst, p.counts.ci, p.counts.cj, tr.tau), 1e-12);
      }
      const auto o = oracle::aggregate(inst, th, tr.tau);
      ASSERT_EQ(o.has_value(), tr.aggregate.has_value());
      if (!o) continue;
      ASSERT_EQ(o->pairs, tr.aggregate->num_pairs);
      ASSERT_NEAR(o->p, tr.aggregate->precision, 1e-12);
      ASSERT_NEAR(o->r, tr.aggregate->recall, 1e-12);
      ASSERT_NEAR(o->f1, tr.aggregate->f1, 1e-12);
      ASSERT_NEAR(o->map, tr.aggregate->map, 1e-12);
    }
  }
}

TEST(Aggregate, CountInvariants) {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 100; ++trial) {
    const EvalInstance inst = random_instance(rng);
    const std::vector<std::size_t> taus{0, 3};
    const auto rep = aggregate(inst, 0.5, taus);
    for (const auto& p : rep.per_tau[0].pairs) {
      ASSERT_LE(p.counts.n_correct, std::min(p.counts.n_predict, p.counts.n_gt));
      // At τ=0 both directions count the steps where ci and cj co-occur.
      const auto rev = oracle::pair_counts(inst, 0.5, p.counts.cj, p.counts.ci, 0);
      ASSERT_EQ(rev.n_gt, p.counts.n_gt);
    }
    for (const auto& p : rep.per_tau[1].pairs) ASSERT_LE(p.counts.n_correct, std::min(p.counts.n_predict, p.counts.n_gt));
  }
}

TEST(Aggregate, RaisingThresholdNeverIncreasesPredictions) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const EvalInstance inst = random_instance(rng);
    const std::vector<std::size_t> taus{0, 2};
    const auto lo = aggregate(inst, 0.3, taus), hi = aggregate(inst, 0.7, taus);
    for (std::size_t k = 0; k < taus.size(); ++k) {
      ASSERT_EQ(lo.per_tau[k].pairs.size(), hi.per_tau[k].pairs.size());
      for (std::size_t i = 0; i < lo.per_tau[k].pairs.size(); ++i) {
        ASSERT_GE(lo.per_tau[k].pairs[i].counts.n_predict, hi.per_tau[k].pairs[i].counts.n_predict);
        ASSERT_GE(lo.per_tau[k].pairs[i].counts.n_correct, hi.per_tau[k].pairs[i].counts.n_correct);
        ASSERT_EQ(lo.per_tau[k].pairs[i].ap, hi.per_tau[k].pairs[i].ap);
      }
    }
  }
}

TEST(Aggregate, RejectsMalformedInput) {
  EvalInstance inst = three_step_example();
  EXPECT_THROW(aggregate(inst, 0.5, std::vector<std::size_t>{}), Error);
  inst.videos[0].scores(0, 0) = 1.5;
  EXPECT_THROW(aggregate(inst, 0.5, std::vector<std::size_t>{0}), Error);
  inst = three_step_example();
  inst.videos[0].scores = ScoreGrid(2, 2);
  EXPECT_THROW(aggregate(inst, 0.5, std::vector<std::size_t>{0}), Error);
}
