#include <gtest/gtest.h>

#include <random>

#include "mlad/inference.hpp"
#include "test_util.hpp"

using namespace mlad;
using mlad::testing::random_model;
using mlad::testing::random_tensor;

namespace {

ModelConfig cfg(std::size_t L) {
  ModelConfig c;
  c.num_classes = 3;
  c.feature_dim = 4;
  c.hidden_dim = 5;
  c.num_layers = L;
  c.seed = 1;
  return c;
}

}  // namespace

TEST(Windows, EveryStepEmittedExactlyOnce) {
  for (std::size_t T = 1; T <= 40; ++T)
    for (std::size_t w : {1u, 3u, 8u, 16u}) {
      std::vector<int> hits(T, 0);
      for (const auto& win : inference_windows(T, w)) {
        ASSERT_LE(win.end, T);
        ASSERT_LE(win.end - win.begin, std::max<std::size_t>(w, 0));
        ASSERT_GE(win.emit_from, win.begin);
        for (std::size_t t = win.emit_from; t < win.end; ++t) ++hits[t];
      }
      for (int h : hits) ASSERT_EQ(h, 1) << "T=" << T << " w=" << w;
    }
}

TEST(Windows, RemainderIsRightAligned) {
  const auto w = inference_windows(24, 16);  // 1.5× the window length
  ASSERT_EQ(w.size(), 2u);
  EXPECT_EQ(w[0].begin, 0u);
  EXPECT_EQ(w[0].end, 16u);
  EXPECT_EQ(w[1].begin, 8u);
  EXPECT_EQ(w[1].end, 24u);
  EXPECT_EQ(w[1].emit_from, 16u);
}

TEST(Windows, ShortOrUnboundedIsSingleWindow) {
  EXPECT_EQ(inference_windows(5, 16).size(), 1u);
  EXPECT_EQ(inference_windows(50, 0).size(), 1u);
  EXPECT_TRUE(inference_windows(0, 4).empty());
}

TEST(Predict, StitchedScoresComeFromTheirWindows) {
  std::mt19937_64 rng(1);
  Model m = random_model(cfg(2), 2);
  m.window_length = 16;
  const Tensor x = random_tensor({24, 4}, rng);
  const ScoreGrid s = predict_scores(m, x);
  const auto first = forward(m, ops::slice0(x, 0, 16)).y_final;
  const auto last = forward(m, ops::slice0(x, 8, 24)).y_final;
  for (std::size_t t = 0; t < 24; ++t)
    for (std::size_t c = 0; c < 3; ++c) EXPECT_EQ(s(t, c), t < 16 ? first(t, c) : last(t - 8, c));
}

TEST(Predict, WholeVideoWhenWindowUnset) {
  std::mt19937_64 rng(3);
  const Model m = random_model(cfg(1), 4);
  const Tensor x = random_tensor({11, 4}, rng);
  EXPECT_EQ(predict_scores(m, x), ScoreGrid::from_tensor(forward(m, x).y_final));
}

TEST(Predict, ZeroLayerModelGivesBaselineScores) {
  std::mt19937_64 rng(5);
  Model m = random_model(cfg(0), 6);
  m.window_length = 4;
  const Tensor x = random_tensor({10, 4}, rng);
  const Tensor cf = classify(extract_class_features(x, m.params.extractor), m.params.head_final);
  EXPECT_EQ(predict_scores(m, x), ScoreGrid::from_tensor(cf));  // per-step model: windowing is invisible
}

TEST(Predict, Deterministic) {
  std::mt19937_64 rng(7);
  Model m = random_model(cfg(2), 8);
  m.window_length = 5;
  const Tensor x = random_tensor({13, 4}, rng);
  EXPECT_EQ(predict_scores(m, x), predict_scores(m, x));
  EXPECT_THROW(predict_scores(m, Tensor({4})), Error);
}
