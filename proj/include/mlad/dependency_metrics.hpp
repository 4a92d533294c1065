#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mlad/average_precision.hpp"
#include "mlad/grid.hpp"

// Action-conditional precision / recall / F1 / AP.
//
// For an ordered pair (ci | cj) and window τ, a time-step t of video k is
// "conditioned" when
//   τ = 0: y[t][cj] = 1                        (co-occurrence)
//   τ > 0: y[t][cj] = 0 and y[t*][cj] = 1 for some t* in [max(0, t−τ), t)
// and counts are taken over conditioned steps only. Windows never cross
// video boundaries.

namespace mlad {

struct EvalVideo {
  std::string id;
  LabelGrid labels;
  ScoreGrid scores;
};

struct EvalInstance {
  std::size_t C = 0;
  std::vector<EvalVideo> videos;

  void validate() const {
    for (const auto& v : videos) {
      if (v.labels.C != C || v.scores.C != C)
        throw Error("dimension_mismatch", "video '" + v.id + "' has a class count different from " + std::to_string(C));
      if (v.labels.T != v.scores.T)
        throw Error("dimension_mismatch", "video '" + v.id + "' label/score lengths differ");
      v.labels.validate_binary();
      for (double s : v.scores.cells)
        if (!(s >= 0.0 && s <= 1.0)) throw Error("invalid_score", "video '" + v.id + "' has a score outside [0,1]");
    }
  }
};

/// ỹ = 1 iff score > threshold.
inline LabelGrid binarize(const ScoreGrid& scores, double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0)) throw Error("invalid_argument", "threshold must lie in (0,1)");
  LabelGrid out(scores.T, scores.C);
  for (std::size_t i = 0; i < scores.cells.size(); ++i) out.cells[i] = scores.cells[i] > threshold ? 1 : 0;
  return out;
}

inline std::vector<LabelGrid> binarize(const EvalInstance& inst, double threshold) {
  std::vector<LabelGrid> out;
  out.reserve(inst.videos.size());
  for (const auto& v : inst.videos) out.push_back(binarize(v.scores, threshold));
  return out;
}

/// Conditioned time-steps of one video for conditioning class cj at window τ.
inline std::vector<std::uint8_t> condition_mask(const LabelGrid& y, std::size_t cj, std::size_t tau) {
  if (cj >= y.C) throw Error("invalid_argument", "class " + std::to_string(cj) + " out of range");
  std::vector<std::uint8_t> mask(y.T, 0);
  if (tau == 0) {
    for (std::size_t t = 0; t < y.T; ++t) mask[t] = y(t, cj);
    return mask;
  }
  std::optional<std::size_t> last;  // most recent t* < t with y[t*][cj] = 1
  for (std::size_t t = 0; t < y.T; ++t) {
    mask[t] = (y(t, cj) == 0 && last && *last + tau >= t) ? 1 : 0;
    if (y(t, cj)) last = t;
  }
  return mask;
}

struct PairCounts {
  std::size_t ci = 0;
  std::size_t cj = 0;
  std::size_t tau = 0;
  std::uint64_t n_correct = 0;
  std::uint64_t n_predict = 0;
  std::uint64_t n_gt = 0;

  PairCounts& operator+=(const PairCounts& o) {
    n_correct += o.n_correct;
    n_predict += o.n_predict;
    n_gt += o.n_gt;
    return *this;
  }

  friend bool operator==(const PairCounts&, const PairCounts&) = default;
};

namespace detail {
inline void check_pair(std::size_t C, std::size_t ci, std::size_t cj) {
  if (ci >= C || cj >= C) throw Error("invalid_argument", "class index out of range");
  if (ci == cj) throw Error("invalid_argument", "action-conditional pair needs ci != cj");
}

inline void count_video(const LabelGrid& y, const LabelGrid& pred, std::size_t ci,
                        std::span<const std::uint8_t> mask, PairCounts& out) {
  for (std::size_t t = 0; t < y.T; ++t) {
    if (!mask[t]) continue;
    const bool gt = y(t, ci), pr = pred(t, ci);
    out.n_gt += gt;
    out.n_predict += pr;
    out.n_correct += gt && pr;
  }
}
}  // namespace detail

/// N_correct, N_predict, N_gt for (ci | cj, τ) summed over all videos.
inline PairCounts pair_counts(const EvalInstance& inst, std::span<const LabelGrid> predicted, std::size_t ci,
                              std::size_t cj, std::size_t tau) {
  detail::check_pair(inst.C, ci, cj);
  if (predicted.size() != inst.videos.size()) throw Error("dimension_mismatch", "one predicted grid per video required");
  PairCounts out{ci, cj, tau, 0, 0, 0};
  for (std::size_t k = 0; k < inst.videos.size(); ++k) {
    const auto mask = condition_mask(inst.videos[k].labels, cj, tau);
    detail::count_video(inst.videos[k].labels, predicted[k], ci, mask, out);
  }
  return out;
}

struct PairPRF {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// P = n_correct/n_predict (0 when nothing predicted), R = n_correct/n_gt,
/// F1 = 2PR/(P+R) (0 when P+R = 0). The pair must be valid (n_gt > 0).
inline PairPRF pair_precision_recall_f1(const PairCounts& c) {
  if (c.n_gt == 0) throw Error("invalid_pair", "pair has no conditioned ground truth");
  if (c.n_correct > c.n_predict || c.n_correct > c.n_gt) throw Error("invalid_argument", "inconsistent pair counts");
  PairPRF r;
  r.precision = c.n_predict ? double(c.n_correct) / double(c.n_predict) : 0.0;
  r.recall = double(c.n_correct) / double(c.n_gt);
  r.f1 = (r.precision + r.recall) > 0.0 ? 2.0 * r.precision * r.recall / (r.precision + r.recall) : 0.0;
  return r;
}

namespace detail {
inline double masked_ap(const EvalInstance& inst, std::size_t ci, std::span<const std::vector<std::uint8_t>> masks) {
  std::vector<double> scores;
  std::vector<std::uint8_t> labels;
  for (std::size_t k = 0; k < inst.videos.size(); ++k) {
    const auto& v = inst.videos[k];
    for (std::size_t t = 0; t < v.labels.T; ++t) {
      if (!masks[k][t]) continue;
      scores.push_back(v.scores(t, ci));
      labels.push_back(v.labels(t, ci));
    }
  }
  return average_precision(scores, labels);
}
}  // namespace detail

/// AP of ci's scores ranked over the conditioned steps of (ci | cj, τ).
inline double pair_ap(const EvalInstance& inst, std::size_t ci, std::size_t cj, std::size_t tau) {
  detail::check_pair(inst.C, ci, cj);
  std::vector<std::vector<std::uint8_t>> masks;
  for (const auto& v : inst.videos) masks.push_back(condition_mask(v.labels, cj, tau));
  return detail::masked_ap(inst, ci, masks);
}

struct PairResult {
  PairCounts counts;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double ap = 0.0;

  friend bool operator==(const PairResult&, const PairResult&) = default;
};

struct ConditionalAggregate {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double map = 0.0;
  std::size_t num_pairs = 0;
};

struct TauReport {
  std::size_t tau = 0;
  std::vector<PairResult> pairs;                 // valid pairs only, ordered by (cj, ci)
  std::optional<ConditionalAggregate> aggregate;  // absent when no pair is valid
};

/// Per-class precision/recall without conditioning.
struct ClassPR {
  std::size_t c = 0;
  std::uint64_t n_correct = 0;
  std::uint64_t n_predict = 0;
  std::uint64_t n_gt = 0;
  double precision = 0.0;            // 0 when nothing predicted
  std::optional<double> recall;      // absent when the class never occurs
};

struct MetricReport {
  double threshold = 0.5;
  std::vector<std::size_t> taus;
  std::vector<TauReport> per_tau;
  std::vector<ClassPR> per_class;
};

inline std::vector<ClassPR> per_class_precision_recall(const EvalInstance& inst, std::span<const LabelGrid> predicted) {
  std::vector<ClassPR> out(inst.C);
  for (std::size_t c = 0; c < inst.C; ++c) out[c].c = c;
  for (std::size_t k = 0; k < inst.videos.size(); ++k) {
    const auto& y = inst.videos[k].labels;
    for (std::size_t t = 0; t < y.T; ++t)
      for (std::size_t c = 0; c < inst.C; ++c) {
        const bool gt = y(t, c), pr = predicted[k](t, c);
        out[c].n_gt += gt;
        out[c].n_predict += pr;
        out[c].n_correct += gt && pr;
      }
  }
  for (auto& r : out) {
    r.precision = r.n_predict ? double(r.n_correct) / double(r.n_predict) : 0.0;
    if (r.n_gt) r.recall = double(r.n_correct) / double(r.n_gt);
  }
  return out;
}

/// Every valid pair's P/R/F1/AP and their unweighted means per τ.
inline MetricReport aggregate(const EvalInstance& inst, double threshold, std::span<const std::size_t> taus) {
  if (taus.empty()) throw Error("invalid_argument", "at least one tau is required");
  inst.validate();
  const auto predicted = binarize(inst, threshold);
  MetricReport rep;
  rep.threshold = threshold;
  rep.taus.assign(taus.begin(), taus.end());
  rep.per_class = per_class_precision_recall(inst, predicted);

  std::vector<std::vector<std::uint8_t>> masks(inst.videos.size());
  for (std::size_t tau : taus) {
    TauReport tr;
    tr.tau = tau;
    for (std::size_t cj = 0; cj < inst.C; ++cj) {
      for (std::size_t k = 0; k < inst.videos.size(); ++k) masks[k] = condition_mask(inst.videos[k].labels, cj, tau);
      for (std::size_t ci = 0; ci < inst.C; ++ci) {
        if (ci == cj) continue;
        PairCounts pc{ci, cj, tau, 0, 0, 0};
        for (std::size_t k = 0; k < inst.videos.size(); ++k)
          detail::count_video(inst.videos[k].labels, predicted[k], ci, masks[k], pc);
        if (pc.n_gt == 0) continue;
        const auto prf = pair_precision_recall_f1(pc);
        tr.pairs.push_back({pc, prf.precision, prf.recall, prf.f1, detail::masked_ap(inst, ci, masks)});
      }
    }
    if (!tr.pairs.empty()) {
      ConditionalAggregate a;
      for (const auto& p : tr.pairs) {
        a.precision += p.precision;
        a.recall += p.recall;
        a.f1 += p.f1;
        a.map += p.ap;
      }
      const double n = double(tr.pairs.size());
      a.precision /= n;
      a.recall /= n;
      a.f1 /= n;
      a.map /= n;
      a.num_pairs = tr.pairs.size();
      tr.aggregate = a;
    }
    rep.per_tau.push_back(std::move(tr));
  }
  return rep;
}

}  // namespace mlad
