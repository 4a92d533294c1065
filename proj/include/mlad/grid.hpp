#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mlad/tensor.hpp"

namespace mlad {

/// Binary ground truth y[t][c], dense, row-major over (t, c).
struct LabelGrid {
  std::size_t T = 0;
  std::size_t C = 0;
  std::vector<std::uint8_t> cells;

  LabelGrid() = default;
  LabelGrid(std::size_t t, std::size_t c) : T(t), C(c), cells(t * c, 0) {}

  std::uint8_t operator()(std::size_t t, std::size_t c) const { return cells[t * C + c]; }
  std::uint8_t& operator()(std::size_t t, std::size_t c) { return cells[t * C + c]; }

  /// Throws if any cell is not 0/1.
  void validate_binary() const {
    for (std::size_t i = 0; i < cells.size(); ++i)
      if (cells[i] > 1)
        throw Error("invalid_label", "label value " + std::to_string(int(cells[i])) + " at (t=" +
                                         std::to_string(i / C) + ", c=" + std::to_string(i % C) + ") is not 0 or 1");
  }

  Tensor to_tensor() const {
    Tensor out({T, C});
    for (std::size_t i = 0; i < cells.size(); ++i) out[i] = cells[i];
    return out;
  }

  friend bool operator==(const LabelGrid&, const LabelGrid&) = default;
};

/// Predicted probabilities ŷ[t][c].
struct ScoreGrid {
  std::size_t T = 0;
  std::size_t C = 0;
  std::vector<double> cells;

  ScoreGrid() = default;
  ScoreGrid(std::size_t t, std::size_t c, double fill = 0.0) : T(t), C(c), cells(t * c, fill) {}

  static ScoreGrid from_tensor(const Tensor& m) {
    if (m.rank() != 2) throw Error("dimension_mismatch", "score grid needs a T×C tensor, got " + shape_str(m.shape()));
    ScoreGrid g(m.dim(0), m.dim(1));
    g.cells = m.vec();
    return g;
  }

  static ScoreGrid from_labels(const LabelGrid& y) {
    ScoreGrid g(y.T, y.C);
    for (std::size_t i = 0; i < y.cells.size(); ++i) g.cells[i] = y.cells[i];
    return g;
  }

  double operator()(std::size_t t, std::size_t c) const { return cells[t * C + c]; }
  double& operator()(std::size_t t, std::size_t c) { return cells[t * C + c]; }

  friend bool operator==(const ScoreGrid&, const ScoreGrid&) = default;
};

}  // namespace mlad
