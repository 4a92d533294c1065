#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "mlad/tensor.hpp"

namespace mlad {

/// All-point (uninterpolated) average precision: scores ranked descending,
/// ties kept in input order, AP = Σ_k P(k)·rel(k) / #positives.
/// Throws when there are no positives.
inline double average_precision(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  if (scores.size() != labels.size()) throw Error("dimension_mismatch", "average_precision: length mismatch");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  double hits = 0.0, acc = 0.0;
  for (std::size_t k = 0; k < order.size(); ++k) {
    if (!labels[order[k]]) continue;
    hits += 1.0;
    acc += hits / static_cast<double>(k + 1);
  }
  if (hits == 0.0) throw Error("no_positives", "average precision undefined without positives");
  return acc / hits;
}

}  // namespace mlad
