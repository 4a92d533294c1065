// Acceptance suite: one PASS/FAIL line per criterion. Exit status is nonzero
// when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "mlad/inference.hpp"
#include "mlad/synth.hpp"
#include "mlad/train.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace mlad;
using Clock = std::chrono::steady_clock;

namespace {

// ---------------------------------------------------------------- tolerances
constexpr int kOracleInstances = 1000;
constexpr double kRatioTol = 1e-9;
constexpr double kOracleBudgetSec = 60.0;
constexpr double kGradTol = 1e-4;
constexpr double kGradEps = 1e-5;
constexpr double kGradBudgetSec = 60.0;
constexpr int kAttentionPasses = 100;
constexpr double kAttentionTol = 1e-12;
constexpr int kSuiteInstances = 500;
constexpr double kSuiteTol = 1e-9;
constexpr int kSeeds = 5;
constexpr int kSeedsRequired = 4;
constexpr double kBenefitPoints = 5.0;
constexpr double kTrendBudgetSec = 15 * 60.0;
constexpr double kAlphaSlackPoints = 0.5;

// ----------------------------------------------------- planted-data recipe
constexpr std::size_t kC = 8, kF = 16;
constexpr std::size_t kTrainVideos = 200, kTestVideos = 100;

SyntheticSpec planted_spec(std::uint64_t seed) {
  SyntheticSpec s;
  s.C = kC;
  s.F = kF;
  s.num_videos = kTrainVideos;
  s.t_min = 24;
  s.t_max = 48;
  s.rate.assign(kC, 4.0);
  s.duration.assign(kC, {8, 16});
  s.cooccur = {{0, 1, 0.9}, {2, 3, 0.9}};
  s.temporal = {{4, 5, 0.9, 5}, {6, 7, 0.9, 5}};
  s.context_only = {{3, 0.8}, {5, 0.8}};
  s.noise_sigma = 1.0;
  s.prototype_seed = 777 + seed;
  return s;
}

ModelConfig planted_model(std::size_t L, Branches b, AlphaMode a, std::uint64_t seed) {
  ModelConfig c;
  c.num_classes = kC;
  c.feature_dim = kF;
  c.hidden_dim = 16;
  c.num_layers = L;
  c.branches = b;
  c.alpha_mode = a;
  c.alpha_fixed = 0.5;
  c.seed = seed;
  return c;
}

TrainOptions planted_training(std::uint64_t seed) {
  TrainOptions o;
  o.adam.lr = 1e-2;
  o.epochs = 15;
  o.batch_size = 16;
  o.train_lengths = {24};
  o.seed = seed;
  return o;
}

// ------------------------------------------------------------------ output
int failures = 0;

void report(bool pass, const std::string& name, const std::string& detail) {
  std::printf("%s %s: %s\n", pass ? "PASS" : "FAIL", name.c_str(), detail.c_str());
  std::fflush(stdout);
  failures += !pass;
}

template <typename... A>
std::string fmt(const char* f, A... a) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, a...);
  return buf;
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// ---------------------------------------------------------------- criteria

void metric_oracle() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(20240101);
  std::uniform_int_distribution<std::size_t> K(1, 5), T(1, 20), C(2, 6);
  std::uniform_real_distribution<double> thr(0.05, 0.95), density(0.05, 0.7);
  const std::vector<std::size_t> taus{0, 1, 2, 3, 5};
  std::size_t pairs = 0, count_mismatch = 0;
  double worst = 0.0;
  for (int n = 0; n < kOracleInstances; ++n) {
    EvalInstance inst;
    inst.C = C(rng);
    const std::size_t k = K(rng);
    for (std::size_t i = 0; i < k; ++i) {
      const std::size_t t = T(rng);
      inst.videos.push_back({"v" + std::to_string(i), mlad::testing::random_labels(t, inst.C, rng, density(rng)),
                             mlad::testing::random_scores(t, inst.C, rng)});
    }
    const double th = thr(rng);
    const auto rep = aggregate(inst, th, taus);
    for (const auto& tr : rep.per_tau) {
      std::size_t valid = 0;
      for (std::size_t ci = 0; ci < inst.C; ++ci)
        for (std::size_t cj = 0; cj < inst.C; ++cj)
          if (ci != cj && oracle::pair_counts(inst, th, ci, cj, tr.tau).n_gt > 0) ++valid;
      count_mismatch += valid != tr.pairs.size();
      for (const auto& p : tr.pairs) {
        ++pairs;
        const auto o = oracle::pair_counts(inst, th, p.counts.ci, p.counts.cj, tr.tau);
        count_mismatch += o.n_correct != p.counts.n_correct || o.n_predict != p.counts.n_predict || o.n_gt != p.counts.n_gt;
        const double op = o.n_predict ? double(o.n_correct) / double(o.n_predict) : 0.0;
        const double orr = double(o.n_correct) / double(o.n_gt);
        const double of = op + orr > 0 ? 2 * op * orr / (op + orr) : 0.0;
        worst = std::max({worst, std::abs(op - p.precision), std::abs(orr - p.recall), std::abs(of - p.f1),
                          std::abs(oracle::pair_ap(inst, p.counts.ci, p.counts.cj, tr.tau) - p.ap)});
      }
      const auto oa = oracle::aggregate(inst, th, tr.tau);
      if (oa.has_value() != tr.aggregate.has_value()) {
        ++count_mismatch;
      } else if (oa) {
        worst = std::max({worst, std::abs(oa->p - tr.aggregate->precision), std::abs(oa->r - tr.aggregate->recall),
                          std::abs(oa->f1 - tr.aggregate->f1), std::abs(oa->map - tr.aggregate->map)});
      }
    }
  }
  const double sec = seconds_since(t0);
  report(count_mismatch == 0 && worst <= kRatioTol && sec < kOracleBudgetSec, "metric-oracle-equivalence",
         fmt("%d instances, %zu pairs, count mismatches %zu, max ratio/AP error %.2e (tol %.0e), %.1fs (budget %.0fs)",
             kOracleInstances, pairs, count_mismatch, worst, kRatioTol, sec, kOracleBudgetSec));
}

void gradient_check() {
  const auto t0 = Clock::now();
  ModelConfig cfg;
  cfg.num_classes = 4;
  cfg.feature_dim = 6;
  cfg.hidden_dim = 5;
  cfg.num_layers = 2;
  cfg.branches = Branches::Both;
  cfg.seed = 11;
  std::mt19937_64 rng(12);
  const Model m = mlad::testing::random_model(cfg, 13);
  const auto res = mlad::testing::check_gradients(m, mlad::testing::random_crop(7, 6, 4, rng), kGradEps);
  const double sec = seconds_since(t0);
  report(res.max_rel_error < kGradTol && sec < kGradBudgetSec, "gradient-correctness",
         fmt("%zu parameters, max relative error %.2e at %s (tol %.0e), %.1fs", parameter_count(m.params),
             res.max_rel_error, res.worst.c_str(), kGradTol, sec));
}

void attention_checks() {
  std::mt19937_64 rng(31);
  std::uniform_int_distribution<std::size_t> T(1, 30), C(1, 9), F(1, 8), H(1, 8), L(1, 3);
  double worst = 0.0;
  std::size_t rows = 0, storage_bad = 0, layers = 0;
  for (int pass = 0; pass < kAttentionPasses; ++pass) {
    ModelConfig cfg;
    cfg.num_classes = C(rng);
    cfg.feature_dim = F(rng);
    cfg.hidden_dim = H(rng);
    cfg.num_layers = L(rng);
    const std::size_t t = T(rng);
    const Model m = mlad::testing::random_model(cfg, 1000 + pass, 2.0);
    const auto out = forward(m, mlad::testing::random_tensor({t, cfg.feature_dim}, rng, -4.0, 4.0));
    const std::size_t c = cfg.num_classes;
    for (std::size_t l = 0; l < out.cb_maps.size(); ++l) {
      ++layers;
      const Tensor& cb = out.cb_maps[l];
      const Tensor& tb = out.tb_maps[l];
      const std::size_t stored = cb.size() + tb.size();
      storage_bad += stored != t * c * c + c * t * t;
      storage_bad += cb.shape() != Shape{t, c, c} || tb.shape() != Shape{c, t, t};
      for (const Tensor* map : {&cb, &tb}) {
        const std::size_t n = map->dim(2);
        for (std::size_t r = 0; r < map->size() / n; ++r) {
          double s = 0.0;
          for (std::size_t j = 0; j < n; ++j) s += (*map)[r * n + j];
          worst = std::max(worst, std::abs(s - 1.0));
          ++rows;
        }
      }
    }
  }
  report(worst <= kAttentionTol, "attention-normalization",
         fmt("%d forward passes, %zu rows, max |row sum - 1| = %.2e (tol %.0e)", kAttentionPasses, rows, worst,
             kAttentionTol));
  report(storage_bad == 0, "complexity-invariant",
         fmt("%zu layers checked, %zu with storage other than T*C^2 + C*T^2", layers, storage_bad));
}

void standard_suite_check() {
  std::mt19937_64 rng(41);
  std::uniform_int_distribution<std::size_t> n(1, 30), C(2, 7);
  std::uniform_real_distribution<double> thr(0.05, 0.95);
  double worst = 0.0;
  std::size_t presence_mismatch = 0;
  for (int k = 0; k < kSuiteInstances; ++k) {
    SampleSet s;
    const std::size_t c = C(rng), m = n(rng);
    ScoreGrid sc = mlad::testing::random_scores(m, c, rng);
    if (k % 3 == 0)
      for (double& v : sc.cells) v = std::round(v * 4.0) / 4.0;
    s.append(mlad::testing::random_labels(m, c, rng, 0.35), sc);
    const double th = thr(rng);
    const auto got = standard_suite(s, th);
    const auto want = oracle::standard(s, th);
    worst = std::max({worst, std::abs(got.hamming_loss - want.hl), std::abs(got.zero_one_loss - want.zl),
                      std::abs(got.jaccard - want.js)});
    presence_mismatch += got.ranking_loss.has_value() != want.rl.has_value();
    presence_mismatch += got.lrap.has_value() != want.lrap.has_value();
    if (got.ranking_loss && want.rl) worst = std::max(worst, std::abs(*got.ranking_loss - *want.rl));
    if (got.lrap && want.lrap)
      worst = std::max({worst, std::abs(*got.coverage_error - *want.ce), std::abs(*got.lrap - *want.lrap)});
  }
  SampleSet one;
  one.C = 2;
  one.labels = {1, 0};
  one.scores = {0.2, 0.9};
  const auto w = standard_suite(one, 0.5);
  const bool exact = w.hamming_loss == 1.0 && w.zero_one_loss == 1.0 && w.ranking_loss == 1.0 &&
                     w.coverage_error == 2.0 && w.jaccard == 0.0 && w.lrap == 0.5;
  report(worst <= kSuiteTol && presence_mismatch == 0 && exact, "standard-suite-correctness",
         fmt("%d instances, max error %.2e (tol %.0e); worked example HL=%g ZL=%g RL=%g CE=%g JS=%g LRAP=%g", kSuiteInstances,
             worst, kSuiteTol, w.hamming_loss, w.zero_one_loss, w.ranking_loss.value_or(NAN),
             w.coverage_error.value_or(NAN), w.jaccard, w.lrap.value_or(NAN)));
}

// --------------------------------------------------- trained-model criteria

struct SeedResult {
  double f_none = 0, f_both = 0, f_fixed = 0, f_cb = 0, f_tb = 0;
  double ac0_none = 0, ac0_both = 0, ac5_none = 0, ac5_both = 0;
  bool alpha_in_range = true;
  std::vector<std::pair<double, double>> rule_attention;  // (trigger weight, mean non-rule weight) per cooccur pair
};

struct Scores {
  double f_map = 0, ac0 = 0, ac5 = 0;
};

Scores evaluate_model(const Model& m, const Dataset& test) {
  EvalInstance inst;
  inst.C = kC;
  SampleSet s;
  for (const auto& v : test) {
    ScoreGrid sc = predict_scores(m, v.features);
    s.append(v.labels, sc);
    inst.videos.push_back({v.id, v.labels, std::move(sc)});
  }
  const std::vector<std::size_t> taus{0, 5};
  const auto rep = aggregate(inst, 0.5, taus);
  return {100.0 * f_map(s).mean, 100.0 * rep.per_tau[0].aggregate.value().map,
          100.0 * rep.per_tau[1].aggregate.value().map};
}

/// Final-layer CB attention from `induced` to every class, averaged over the
/// test steps where `trigger` is present.
std::pair<double, double> rule_attention(const Model& m, const Dataset& test, std::size_t trigger, std::size_t induced) {
  std::vector<double> acc(kC, 0.0);
  std::size_t steps = 0;
  for (const auto& v : test) {
    const auto fw = forward(m, v.features);
    const Tensor& a = fw.cb_maps.back();
    for (std::size_t t = 0; t < v.length(); ++t) {
      if (!v.labels(t, trigger)) continue;
      ++steps;
      for (std::size_t k = 0; k < kC; ++k) acc[k] += a(t, induced, k);
    }
  }
  double others = 0.0;
  for (std::size_t k = 0; k < kC; ++k)
    if (k != trigger && k != induced) others += acc[k];
  return {acc[trigger] / double(steps), others / double(steps) / double(kC - 2)};
}

SeedResult run_seed(std::uint64_t seed) {
  SyntheticSpec spec = planted_spec(seed);
  const Dataset train_set = generate(spec, 1000 + seed).videos;
  spec.num_videos = kTestVideos;
  const Dataset test_set = generate(spec, 2000 + seed).videos;
  const TrainOptions opt = planted_training(seed);

  SeedResult r;
  auto fit = [&](std::size_t L, Branches b, AlphaMode a, TrainOptions o) {
    return train(train_set, planted_model(L, b, a, seed), o).model;
  };

  const Model none = fit(0, Branches::None, AlphaMode::Learned, opt);
  const Scores s_none = evaluate_model(none, test_set);

  TrainOptions watched = opt;
  watched.on_step = [&](const Model& m, std::uint64_t) {
    for (std::size_t l = 0; l < m.params.layers.size(); ++l) {
      const double a = m.alpha(l);
      r.alpha_in_range = r.alpha_in_range && a > 0.0 && a < 1.0;
    }
  };
  const Model both = fit(2, Branches::Both, AlphaMode::Learned, watched);
  const Scores s_both = evaluate_model(both, test_set);

  r.f_none = s_none.f_map;
  r.ac0_none = s_none.ac0;
  r.ac5_none = s_none.ac5;
  r.f_both = s_both.f_map;
  r.ac0_both = s_both.ac0;
  r.ac5_both = s_both.ac5;
  r.f_fixed = evaluate_model(fit(2, Branches::Both, AlphaMode::Fixed, opt), test_set).f_map;
  r.f_cb = evaluate_model(fit(2, Branches::CbOnly, AlphaMode::Learned, opt), test_set).f_map;
  r.f_tb = evaluate_model(fit(2, Branches::TbOnly, AlphaMode::Learned, opt), test_set).f_map;
  for (const auto& rule : spec.cooccur) r.rule_attention.push_back(rule_attention(both, test_set, rule.trigger, rule.induced));
  return r;
}

void trained_model_criteria() {
  const auto t0 = Clock::now();
  std::vector<SeedResult> res;
  for (int s = 1; s <= kSeeds; ++s) {
    res.push_back(run_seed(std::uint64_t(s)));
    const auto& r = res.back();
    std::printf("  seed %d: f-mAP none %.1f both %.1f fixed %.1f cb %.1f tb %.1f | mAP_AC(0) %.1f vs %.1f | "
                "mAP_AC(5) %.1f vs %.1f\n",
                s, r.f_none, r.f_both, r.f_fixed, r.f_cb, r.f_tb, r.ac0_both, r.ac0_none, r.ac5_both, r.ac5_none);
    std::fflush(stdout);
  }
  const double sec = seconds_since(t0);

  int benefit_seeds = 0;
  std::string gaps;
  for (const auto& r : res) {
    const double df = r.f_both - r.f_none, d0 = r.ac0_both - r.ac0_none, d5 = r.ac5_both - r.ac5_none;
    benefit_seeds += df >= kBenefitPoints && d0 >= kBenefitPoints && d5 >= kBenefitPoints;
    gaps += fmt(" (%+.1f,%+.1f,%+.1f)", df, d0, d5);
  }
  report(benefit_seeds >= kSeedsRequired && sec < kTrendBudgetSec, "dependency-learning-benefit",
         fmt("%d/%d seeds with all gaps >= %.0f points; gaps (f-mAP, mAP_AC tau=0, tau=5):%s; %.0fs for all trained "
             "criteria (budget %.0fs)",
             benefit_seeds, kSeeds, kBenefitPoints, gaps.c_str(), sec, kTrendBudgetSec));

  auto med = [&](double SeedResult::*field) {
    std::vector<double> v;
    for (const auto& r : res) v.push_back(r.*field);
    return median(v);
  };
  const double m_both = med(&SeedResult::f_both), m_cb = med(&SeedResult::f_cb), m_tb = med(&SeedResult::f_tb),
               m_none = med(&SeedResult::f_none), m_fixed = med(&SeedResult::f_fixed);
  const double hi = std::max(m_cb, m_tb), lo = std::min(m_cb, m_tb);
  report(m_both >= hi && hi >= lo && lo >= m_none, "branch-ablation-ordering",
         fmt("median f-mAP both %.2f, tb-only %.2f, cb-only %.2f, none %.2f; required both >= max(single) >= "
             "min(single) >= none",
             m_both, m_tb, m_cb, m_none));

  bool alpha_ok = true;
  for (const auto& r : res) alpha_ok = alpha_ok && r.alpha_in_range;
  report(alpha_ok && m_both >= m_fixed - kAlphaSlackPoints, "learned-alpha-sanity",
         fmt("alpha stayed in (0,1) at every step: %s; median f-mAP learned %.2f vs fixed 0.5 %.2f (slack %.1f)",
             alpha_ok ? "yes" : "no", m_both, m_fixed, kAlphaSlackPoints));

  // The criterion scores the first planted co-occurrence pair; the others are
  // printed alongside.
  int interp_seeds = 0;
  std::string detail;
  for (const auto& r : res) {
    interp_seeds += r.rule_attention[0].first > r.rule_attention[0].second;
    for (const auto& [to_trigger, to_others] : r.rule_attention) detail += fmt(" %.3f/%.3f", to_trigger, to_others);
    detail += " |";
  }
  const auto first = planted_spec(1).cooccur[0];
  report(interp_seeds >= kSeedsRequired, "interpretability",
         fmt("%d/%d seeds where final-layer CB attention from induced class %zu to trigger %zu, averaged over steps "
             "with the trigger present, exceeds the mean to non-rule classes; trigger/other for each planted pair:%s",
             interp_seeds, kSeeds, first.induced, first.trigger, detail.c_str()));
}

}  // namespace

int main() {
  metric_oracle();
  gradient_check();
  attention_checks();
  standard_suite_check();
  trained_model_criteria();
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
