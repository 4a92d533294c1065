#pragma once

#include <string>
#include <vector>

#include "mlad/grid.hpp"
#include "mlad/tensor.hpp"

namespace mlad {

/// One video: features x_t (T×F, empty shape for label-only data) and labels.
struct Video {
  std::string id;
  Tensor features;
  LabelGrid labels;

  std::size_t length() const noexcept { return labels.T; }
  bool has_features() const noexcept { return features.rank() == 2 && features.size() > 0; }
};

using Dataset = std::vector<Video>;

}  // namespace mlad
