#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "mlad/average_precision.hpp"
#include "mlad/grid.hpp"

namespace mlad {

/// Every time-step of every video as an independent multi-label sample.
struct SampleSet {
  std::size_t C = 0;
  std::vector<std::uint8_t> labels;  // n×C
  std::vector<double> scores;        // n×C

  std::size_t size() const noexcept { return C ? labels.size() / C : 0; }

  void append(const LabelGrid& y, const ScoreGrid& s) {
    if (y.C != s.C || y.T != s.T) throw Error("dimension_mismatch", "label/score grid shapes differ");
    if (C == 0) C = y.C;
    if (y.C != C) throw Error("dimension_mismatch", "class count differs between videos");
    labels.insert(labels.end(), y.cells.begin(), y.cells.end());
    scores.insert(scores.end(), s.cells.begin(), s.cells.end());
  }
};

struct FMapResult {
  std::vector<std::optional<double>> per_class_ap;  // absent for classes without positives
  double mean = 0.0;
};

/// Per-frame mAP: all-point AP per class over all samples, averaged over
/// classes that have at least one positive.
inline FMapResult f_map(const SampleSet& s) {
  FMapResult r;
  r.per_class_ap.resize(s.C);
  const std::size_t n = s.size();
  std::vector<double> sc(n);
  std::vector<std::uint8_t> lb(n);
  double acc = 0.0;
  std::size_t counted = 0;
  for (std::size_t c = 0; c < s.C; ++c) {
    bool any = false;
    for (std::size_t i = 0; i < n; ++i) {
      sc[i] = s.scores[i * s.C + c];
      lb[i] = s.labels[i * s.C + c];
      any = any || lb[i];
    }
    if (!any) continue;
    r.per_class_ap[c] = average_precision(sc, lb);
    acc += *r.per_class_ap[c];
    ++counted;
  }
  if (counted == 0) throw Error("no_positives", "f-mAP undefined: no class has a positive sample");
  r.mean = acc / double(counted);
  return r;
}

struct StandardMetrics {
  double hamming_loss = 0.0;
  double zero_one_loss = 0.0;
  std::optional<double> ranking_loss;    // samples with both positives and negatives
  std::optional<double> coverage_error;  // samples with >= 1 positive
  double jaccard = 0.0;
  std::optional<double> lrap;            // samples with >= 1 positive
};

/// HL, ZL, RL, CE, JS, LRAP. Thresholded metrics use score > threshold.
/// RL counts tied (positive, negative) pairs as half wrong; CE and LRAP rank a
/// label by the number of labels scoring at least as high.
inline StandardMetrics standard_suite(const SampleSet& s, double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0)) throw Error("invalid_argument", "threshold must lie in (0,1)");
  const std::size_t n = s.size(), C = s.C;
  if (n == 0) throw Error("invalid_argument", "standard_suite needs at least one sample");
  StandardMetrics m;
  double wrong = 0.0, zl = 0.0, js = 0.0;
  double rl = 0.0, ce = 0.0, lrap = 0.0;
  std::size_t rl_n = 0, pos_n = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double* sc = s.scores.data() + i * C;
    const std::uint8_t* y = s.labels.data() + i * C;
    std::size_t inter = 0, uni = 0, npos = 0, mism = 0;
    for (std::size_t c = 0; c < C; ++c) {
      const bool pred = sc[c] > threshold;
      mism += pred != bool(y[c]);
      inter += pred && y[c];
      uni += pred || y[c];
      npos += y[c];
    }
    wrong += double(mism);
    zl += mism ? 1.0 : 0.0;
    js += uni ? double(inter) / double(uni) : 1.0;

    const std::size_t nneg = C - npos;
    if (npos > 0 && nneg > 0) {
      double bad = 0.0;
      for (std::size_t p = 0; p < C; ++p) {
        if (!y[p]) continue;
        for (std::size_t q = 0; q < C; ++q) {
          if (y[q]) continue;
          if (sc[p] < sc[q]) bad += 1.0;
          else if (sc[p] == sc[q]) bad += 0.5;
        }
      }
      rl += bad / double(npos * nneg);
      ++rl_n;
    }
    if (npos > 0) {
      double worst = 0.0, prec = 0.0;
      for (std::size_t j = 0; j < C; ++j) {
        if (!y[j]) continue;
        std::size_t rank = 0, true_above = 0;
        for (std::size_t k = 0; k < C; ++k) {
          if (sc[k] >= sc[j]) {
            ++rank;
            true_above += y[k];
          }
        }
        worst = std::max(worst, double(rank));
        prec += double(true_above) / double(rank);
      }
      ce += worst;
      lrap += prec / double(npos);
      ++pos_n;
    }
  }
  m.hamming_loss = wrong / double(n * C);
  m.zero_one_loss = zl / double(n);
  m.jaccard = js / double(n);
  if (rl_n) m.ranking_loss = rl / double(rl_n);
  if (pos_n) {
    m.coverage_error = ce / double(pos_n);
    m.lrap = lrap / double(pos_n);
  }
  return m;
}

}  // namespace mlad
