#pragma once

// Split-conformal and weighted-quantile calibration, neighborhood-adaptive
// and naive prediction-set construction, and the coverage-gap bound.
//
// The weighted quantile places mass w_i/(W+1) on each calibration score and
// the residual 1/(W+1) at +infinity (the unseen test point's slot), so a
// threshold of +infinity is a legitimate result meaning "full label set".
// weighted_threshold with all-ones weights reproduces split_threshold bit
// for bit, including the +infinity cases: both compare integer-valued
// cumulative mass against the same floating-point target expression.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "naps/aps.hpp"
#include "naps/error.hpp"
#include "naps/graph.hpp"

namespace naps {

struct QuantileThreshold {
  double value = std::numeric_limits<double>::infinity();
  double effective_sample_size = 0.0;

  bool is_infinite() const { return std::isinf(value); }
  friend bool operator==(const QuantileThreshold&, const QuantileThreshold&) = default;
};

// How calibration weights are assigned around a test node.
struct WeightScheme {
  enum class Kind : std::uint8_t {
    uniform_full,             // weight 1 on every pool node; graph ignored
    khop_indicator,           // weight 1 on pool nodes within k hops
    hop_decay,                // gamma^(d-1) on pool nodes at hop d <= k
    alternating_heterophilic  // weight 1 on pool nodes at even hops <= k
  };

  Kind kind = Kind::khop_indicator;
  std::uint32_t k = 2;
  double gamma = 0.5;

  static WeightScheme uniform_full() { return {Kind::uniform_full, 0, 1.0}; }
  static WeightScheme khop_indicator(std::uint32_t k) {
    if (k < 1) throw InputError("khop_indicator requires k >= 1");
    return {Kind::khop_indicator, k, 1.0};
  }
  static WeightScheme hop_decay(std::uint32_t k, double gamma) {
    if (k < 1) throw InputError("hop_decay requires k >= 1");
    if (!(gamma > 0.0) || gamma > 1.0) {
      throw InputError("hop_decay requires gamma in (0, 1]");
    }
    return {Kind::hop_decay, k, gamma};
  }
  static WeightScheme alternating_heterophilic(std::uint32_t k) {
    if (k < 1) throw InputError("alternating_heterophilic requires k >= 1");
    return {Kind::alternating_heterophilic, k, 1.0};
  }

  // Weight contributed by a calibration node at hop distance d (1-based).
  double weight_at_hop(std::uint32_t d) const {
    switch (kind) {
      case Kind::uniform_full:
        return 1.0;
      case Kind::khop_indicator:
        return d <= k ? 1.0 : 0.0;
      case Kind::hop_decay:
        return d <= k ? std::pow(gamma, static_cast<double>(d - 1)) : 0.0;
      case Kind::alternating_heterophilic:
        return (d <= k && d % 2 == 0) ? 1.0 : 0.0;
    }
    return 0.0;
  }
};

struct PredictionSet {
  NodeId node = 0;
  std::vector<std::uint32_t> labels;  // sorted ascending
  QuantileThreshold threshold;
  std::optional<bool> contains_truth;
  bool used_fallback = false;  // empty neighborhood; full set returned

  bool contains(std::uint32_t label) const {
    return std::binary_search(labels.begin(), labels.end(), label);
  }
};

namespace detail {

inline void check_alpha(double alpha) {
  if (!(alpha > 0.0) || !(alpha < 1.0)) {
    throw InputError("alpha must lie in (0, 1)");
  }
}

// Shared target expression: both threshold routines compare cumulative
// weight mass against exactly this value so the all-ones weighted case
// agrees with the split rank path bit for bit.
inline double mass_target(double total_weight, double alpha) {
  return (total_weight + 1.0) * (1.0 - alpha);
}

}  // namespace detail

// The ceil((n+1)(1-alpha))-th smallest score; +infinity when that rank
// exceeds n (the quantile then falls on the test point's residual mass).
inline QuantileThreshold split_threshold(const ScoreSet& scores, double alpha) {
  detail::check_alpha(alpha);
  const std::size_t n = scores.entries.size();
  if (n == 0) {
    throw InsufficientCalibrationError("split_threshold: no calibration scores");
  }
  const double target = detail::mass_target(static_cast<double>(n), alpha);
  const auto rank = static_cast<std::uint64_t>(std::ceil(target));
  QuantileThreshold t;
  t.effective_sample_size = static_cast<double>(n);
  if (rank > n) return t;  // +infinity sentinel
  std::vector<double> vals;
  vals.reserve(n);
  for (const auto& e : scores.entries) vals.push_back(e.score);
  std::nth_element(vals.begin(), vals.begin() + (rank - 1), vals.end());
  t.value = vals[rank - 1];
  return t;
}

// Smallest score whose cumulative (unnormalized) weight mass reaches
// (1-alpha)(W+1); +infinity when the finite scores never accumulate enough.
inline QuantileThreshold weighted_threshold(const ScoreSet& scores,
                                            std::span<const double> weights,
                                            double alpha) {
  detail::check_alpha(alpha);
  const std::size_t n = scores.entries.size();
  if (weights.size() != n) {
    throw InputError("weighted_threshold: " + std::to_string(n) + " scores but " +
                     std::to_string(weights.size()) + " weights");
  }
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || w > 1.0) {
      throw InputError("weighted_threshold: weights must lie in [0, 1]");
    }
    total += w;
  }
  if (!(total > 0.0)) {
    throw InsufficientCalibrationError("weighted_threshold: all weights are zero");
  }

  std::vector<std::uint32_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0u);
  std::sort(idx.begin(), idx.end(), [&](std::uint32_t a, std::uint32_t b) {
    return scores.entries[a].score < scores.entries[b].score;
  });

  const double target = detail::mass_target(total, alpha);
  QuantileThreshold t;
  t.effective_sample_size = total;
  double cum = 0.0;
  for (std::uint32_t i : idx) {
    cum += weights[i];
    if (cum >= target) {
      t.value = scores.entries[i].score;
      return t;
    }
  }
  return t;  // +infinity sentinel
}

// Upper bound on the coverage shortfall under non-exchangeability:
// sum(w_i * t_i) / (1 + sum(w_i)), with t_i a total-variation bound for
// calibration point i.
inline double coverage_gap_bound(std::span<const double> weights,
                                 std::span<const double> tv_bounds) {
  if (weights.size() != tv_bounds.size()) {
    throw InputError("coverage_gap_bound: " + std::to_string(weights.size()) +
                     " weights but " + std::to_string(tv_bounds.size()) +
                     " total-variation bounds");
  }
  double num = 0.0, total = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const double w = weights[i], t = tv_bounds[i];
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw InputError("coverage_gap_bound: weights must be finite and nonnegative");
    }
    if (!(t >= 0.0) || t > 1.0) {
      throw InputError("coverage_gap_bound: tv bounds must lie in [0, 1]");
    }
    num += w * t;
    total += w;
  }
  return num / (1.0 + total);
}

namespace detail {

inline std::vector<std::uint32_t> all_labels(std::uint32_t num_classes) {
  std::vector<std::uint32_t> all(num_classes);
  std::iota(all.begin(), all.end(), 0u);
  return all;
}

inline PredictionSet finish_prediction(const ProbabilityMatrix& probs,
                                       const NodeLabels& labels, NodeId test,
                                       QuantileThreshold threshold, double u,
                                       bool used_fallback) {
  PredictionSet p;
  p.node = test;
  p.threshold = threshold;
  p.used_fallback = used_fallback;
  p.labels = threshold.is_infinite()
                 ? all_labels(probs.classes)
                 : randomized_aps_set(probs.row(test), threshold.value, u);
  if (test < labels.labels.size()) {
    p.contains_truth = p.contains(labels.labels[test]);
  }
  return p;
}

}  // namespace detail

// Neighborhood-adaptive prediction: calibrate on the scheme-weighted
// intersection of the test node's k-hop neighborhood with the pool, then
// build the randomized set at the weighted threshold. When the weighted
// neighborhood is empty, returns the (trivially covering) full label set
// with used_fallback set, or throws if fallback_full_set is false.
inline PredictionSet naps_predict(const Graph& g, const ProbabilityMatrix& probs,
                                  const NodeLabels& labels,
                                  std::span<const NodeId> pool, NodeId test,
                                  double alpha, const WeightScheme& scheme,
                                  double u, bool fallback_full_set = true) {
  detail::check_alpha(alpha);
  if (test >= g.node_count || test >= probs.rows) {
    throw InputError("test node " + std::to_string(test) + " out of range");
  }
  std::vector<std::uint8_t> in_pool(g.node_count, 0);
  for (NodeId v : pool) {
    if (v >= g.node_count) {
      throw InputError("pool node " + std::to_string(v) + " out of range");
    }
    if (v == test) {
      throw InputError("test node " + std::to_string(test) + " must not be in the pool");
    }
    in_pool[v] = 1;
  }

  std::vector<NodeId> cal;
  std::vector<double> w;
  if (scheme.kind == WeightScheme::Kind::uniform_full) {
    cal.assign(pool.begin(), pool.end());
    w.assign(cal.size(), 1.0);
  } else {
    const HopNeighborhood hood = k_hop_neighborhood(g, test, scheme.k);
    for (std::uint32_t d = 1; d <= scheme.k && d <= hood.by_hop.size(); ++d) {
      const double wd = scheme.weight_at_hop(d);
      if (wd == 0.0) continue;
      for (NodeId v : hood.by_hop[d - 1]) {
        if (!in_pool[v]) continue;
        cal.push_back(v);
        w.push_back(wd);
      }
    }
  }

  if (cal.empty()) {
    if (!fallback_full_set) {
      throw InsufficientCalibrationError(
          "no calibration nodes in the weighted neighborhood of node " +
          std::to_string(test));
    }
    return detail::finish_prediction(probs, labels, test, QuantileThreshold{}, u, true);
  }
  const ScoreSet scores = score_calibration_set(probs, labels, cal);
  const QuantileThreshold t = weighted_threshold(scores, w, alpha);
  return detail::finish_prediction(probs, labels, test, t, u, false);
}

// Naive baseline: uniform weight on every pool node, graph ignored.
inline PredictionSet naive_predict(const ProbabilityMatrix& probs,
                                   const NodeLabels& labels,
                                   std::span<const NodeId> pool, NodeId test,
                                   double alpha, double u) {
  detail::check_alpha(alpha);
  if (test >= probs.rows) {
    throw InputError("test node " + std::to_string(test) + " out of range");
  }
  if (pool.empty()) {
    throw InsufficientCalibrationError("naive_predict: empty calibration pool");
  }
  for (NodeId v : pool) {
    if (v == test) {
      throw InputError("test node " + std::to_string(test) + " must not be in the pool");
    }
  }
  const ScoreSet scores = score_calibration_set(probs, labels, pool);
  const QuantileThreshold t = split_threshold(scores, alpha);
  return detail::finish_prediction(probs, labels, test, t, u, false);
}

}  // namespace naps
