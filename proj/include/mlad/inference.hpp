#pragma once

#include <algorithm>
#include <utility>
#include <vector>

#include "mlad/dataset.hpp"
#include "mlad/model.hpp"

namespace mlad {

/// [begin, end) windows tiling [0, T) for inference plus the first step of
/// each window that is written out. Windows are non-overlapping except the
/// last, which is right-aligned and only contributes steps not yet covered.
struct InferenceWindow {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t emit_from = 0;
};

inline std::vector<InferenceWindow> inference_windows(std::size_t T, std::size_t window) {
  std::vector<InferenceWindow> out;
  if (T == 0) return out;
  if (window == 0 || T <= window) {
    out.push_back({0, T, 0});
    return out;
  }
  std::size_t b = 0;
  for (; b + window <= T; b += window) out.push_back({b, b + window, b});
  if (b < T) out.push_back({T - window, T, b});
  return out;
}

inline Tensor rows(const Tensor& m, std::size_t begin, std::size_t end) { return ops::slice0(m, begin, end); }

/// Final-head scores for a whole video, stitched from inference windows.
inline ScoreGrid predict_scores(const Model& model, const Tensor& features) {
  if (features.rank() != 2) throw Error("dimension_mismatch", "features must be T×F");
  const std::size_t T = features.dim(0), C = model.config.num_classes;
  ScoreGrid out(T, C);
  for (const auto& w : inference_windows(T, model.window_length)) {
    const auto fw = forward(model, rows(features, w.begin, w.end));
    for (std::size_t t = w.emit_from; t < w.end; ++t)
      for (std::size_t c = 0; c < C; ++c) out(t, c) = fw.y_final(t - w.begin, c);
  }
  return out;
}

inline std::vector<ScoreGrid> predict_scores(const Model& model, const Dataset& data) {
  std::vector<ScoreGrid> out;
  out.reserve(data.size());
  for (const auto& v : data) out.push_back(predict_scores(model, v.features));
  return out;
}

}  // namespace mlad
