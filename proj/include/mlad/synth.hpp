#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "mlad/dataset.hpp"
#include "mlad/dependency_metrics.hpp"

namespace mlad {

struct CooccurRule {
  std::size_t trigger = 0;
  std::size_t induced = 0;
  double p = 1.0;
};

struct TemporalRule {
  std::size_t trigger = 0;
  std::size_t induced = 0;
  double p = 1.0;
  std::size_t max_gap = 1;
};

/// A class whose feature signal is dropped with probability `dropout` per instance.
struct ContextOnly {
  std::size_t cls = 0;
  double dropout = 0.0;
};

struct SyntheticSpec {
  std::size_t C = 1;
  std::size_t F = 1;
  std::size_t num_videos = 1;
  std::size_t t_min = 1;
  std::size_t t_max = 1;
  std::vector<double> rate;                                   // per class, instances per 100 steps
  std::vector<std::pair<std::size_t, std::size_t>> duration;  // per class, [min, max]
  std::vector<CooccurRule> cooccur;
  std::vector<TemporalRule> temporal;
  std::vector<ContextOnly> context_only;
  double noise_sigma = 0.5;
  std::uint64_t seed = 0;
  /// When set, prototypes come from this seed instead of the dataset seed, so
  /// separately generated train/test sets share the same class signals.
  std::optional<std::uint64_t> prototype_seed;

  void validate() const {
    auto fail = [](const std::string& m) { throw Error("invalid_spec", m); };
    auto prob = [&](double p, const char* what) {
      if (!(p >= 0.0 && p <= 1.0)) fail(std::string(what) + " must lie in [0,1]");
    };
    auto cls = [&](std::size_t c) {
      if (c >= C) fail("class index " + std::to_string(c) + " out of range for C=" + std::to_string(C));
    };
    if (C < 1 || F < 1) fail("C and F must be >= 1");
    if (t_min < 1 || t_min > t_max) fail("length_range must satisfy 1 <= Tmin <= Tmax");
    if (rate.size() != C) fail("rate needs one entry per class");
    if (duration.size() != C) fail("duration needs one range per class");
    for (double r : rate)
      if (!(r >= 0.0) || !std::isfinite(r)) fail("instance rates must be finite and >= 0");
    for (const auto& [lo, hi] : duration)
      if (lo < 1 || lo > hi) fail("durations must satisfy 1 <= min <= max");
    for (const auto& r : cooccur) {
      cls(r.trigger);
      cls(r.induced);
      prob(r.p, "cooccur probability");
      if (r.trigger == r.induced) fail("a rule cannot pair a class with itself");
    }
    for (const auto& r : temporal) {
      cls(r.trigger);
      cls(r.induced);
      prob(r.p, "temporal probability");
      if (r.trigger == r.induced) fail("a rule cannot pair a class with itself");
      if (r.max_gap < 1) fail("temporal max_gap must be >= 1");
    }
    for (const auto& c : context_only) {
      cls(c.cls);
      prob(c.dropout, "context-only dropout");
    }
    if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) fail("noise_sigma must be finite and >= 0");
  }
};

/// Action instance over steps [start, end).
struct Instance {
  std::size_t cls = 0;
  std::size_t start = 0;
  std::size_t end = 0;
  bool signal = true;
  bool clipped = false;  // its sampled duration ran past the video end

  bool same_span(const Instance& o) const { return cls == o.cls && start == o.start && end == o.end; }
};

struct SyntheticDataset {
  SyntheticSpec spec;
  std::uint64_t seed = 0;
  Tensor prototypes;  // C×F
  Dataset videos;
  std::vector<std::vector<Instance>> instances;  // per video
};

namespace detail {

inline std::vector<Instance> place_instances(const SyntheticSpec& spec, std::size_t T, std::mt19937_64& rng) {
  std::vector<Instance> inst;
  auto sample = [&](std::size_t c, std::size_t start) {
    std::uniform_int_distribution<std::size_t> dur(spec.duration[c].first, spec.duration[c].second);
    const std::size_t d = dur(rng);
    Instance i{c, start, std::min(start + d, T), true, start + d > T};
    return i;
  };
  for (std::size_t c = 0; c < spec.C; ++c) {
    const double mean = spec.rate[c] * double(T) / 100.0;
    if (mean <= 0.0) continue;
    std::poisson_distribution<int> count(mean);
    const int n = count(rng);
    std::uniform_int_distribution<std::size_t> start(0, T - 1);
    for (int k = 0; k < n; ++k) inst.push_back(sample(c, start(rng)));
  }
  auto add = [&](const Instance& cand) {
    for (const auto& e : inst)
      if (e.same_span(cand)) return;
    inst.push_back(cand);
  };
  // Every placed instance, including induced ones, is a potential trigger.
  for (std::size_t w = 0; w < inst.size(); ++w) {
    const Instance cur = inst[w];
    for (const auto& r : spec.cooccur) {
      if (r.trigger != cur.cls) continue;
      if (std::bernoulli_distribution(r.p)(rng)) add(Instance{r.induced, cur.start, cur.end, true, cur.clipped});
    }
    for (const auto& r : spec.temporal) {
      if (r.trigger != cur.cls) continue;
      if (!std::bernoulli_distribution(r.p)(rng)) continue;
      const std::size_t lo = cur.end;  // first step after the trigger's last step
      const std::size_t hi = std::min(cur.end - 1 + r.max_gap, T - 1);
      if (cur.clipped || lo > hi) continue;
      std::uniform_int_distribution<std::size_t> start(lo, hi);
      add(sample(r.induced, start(rng)));
    }
  }
  for (auto& i : inst)
    for (const auto& c : spec.context_only)
      if (c.cls == i.cls && std::bernoulli_distribution(c.dropout)(rng)) i.signal = false;
  return inst;
}

}  // namespace detail

/// Deterministic in (spec, seed).
inline SyntheticDataset generate(const SyntheticSpec& spec, std::uint64_t seed) {
  spec.validate();
  SyntheticDataset ds;
  ds.spec = spec;
  ds.seed = seed;
  std::mt19937_64 rng(seed);
  ds.prototypes = Tensor({spec.C, spec.F});
  {
    std::mt19937_64 proto_rng(spec.prototype_seed.value_or(seed));
    std::mt19937_64& src = spec.prototype_seed ? proto_rng : rng;
    std::normal_distribution<double> proto(0.0, 1.0 / std::sqrt(double(spec.F)));
    for (double& v : ds.prototypes.data()) v = proto(src);
  }
  std::uniform_int_distribution<std::size_t> length(spec.t_min, spec.t_max);
  const std::size_t width = std::to_string(spec.num_videos == 0 ? 0 : spec.num_videos - 1).size();
  for (std::size_t k = 0; k < spec.num_videos; ++k) {
    const std::size_t T = length(rng);
    auto inst = detail::place_instances(spec, T, rng);

    Video v;
    std::string num = std::to_string(k);
    v.id = "synth_" + std::string(width - std::min(width, num.size()), '0') + num;
    v.labels = LabelGrid(T, spec.C);
    LabelGrid signal(T, spec.C);
    for (const auto& i : inst)
      for (std::size_t t = i.start; t < i.end; ++t) {
        v.labels(t, i.cls) = 1;
        if (i.signal) signal(t, i.cls) = 1;
      }
    v.features = Tensor({T, spec.F});
    std::normal_distribution<double> noise(0.0, 1.0);
    for (std::size_t t = 0; t < T; ++t)
      for (std::size_t f = 0; f < spec.F; ++f) {
        double x = spec.noise_sigma * noise(rng);
        for (std::size_t c = 0; c < spec.C; ++c)
          if (signal(t, c)) x += ds.prototypes(c, f);
        v.features(t, f) = x;
      }
    ds.videos.push_back(std::move(v));
    ds.instances.push_back(std::move(inst));
  }
  return ds;
}

/// Entry (i, j): fraction of steps conditioned on j at window τ where i is
/// present. Absent on the diagonal and where j conditions no step.
inline std::vector<std::vector<std::optional<double>>> empirical_dependency_matrix(const Dataset& data,
                                                                                    std::size_t tau) {
  if (data.empty()) throw Error("invalid_argument", "empty dataset");
  const std::size_t C = data.front().labels.C;
  std::vector<std::vector<std::optional<double>>> m(C, std::vector<std::optional<double>>(C));
  for (std::size_t j = 0; j < C; ++j) {
    std::vector<std::uint64_t> hits(C, 0);
    std::uint64_t steps = 0;
    for (const auto& v : data) {
      if (v.labels.C != C) throw Error("dimension_mismatch", "class count differs between videos");
      const auto mask = condition_mask(v.labels, j, tau);
      for (std::size_t t = 0; t < v.labels.T; ++t) {
        if (!mask[t]) continue;
        ++steps;
        for (std::size_t i = 0; i < C; ++i) hits[i] += v.labels(t, i);
      }
    }
    if (steps == 0) continue;
    for (std::size_t i = 0; i < C; ++i)
      if (i != j) m[i][j] = double(hits[i]) / double(steps);
  }
  return m;
}

}  // namespace mlad
