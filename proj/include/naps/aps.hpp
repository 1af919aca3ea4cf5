#pragma once

// Adaptive prediction-set scores and randomized set construction.
//
// A row's score for its true label is the cumulative probability mass of all
// classes ranked at or above that label (descending probability, ties broken
// by ascending class index). Set construction inverts the same cumulative
// sums at a threshold tau, randomizing the boundary class away with
// probability proportional to the overshoot. Randomness (u) is always
// injected by the caller; every operation here is a pure function.

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "naps/error.hpp"
#include "naps/graph.hpp"

namespace naps {

struct ProbabilityMatrix {
  std::uint32_t rows = 0;
  std::uint32_t classes = 0;
  std::vector<double> values;  // row-major, rows * classes

  std::span<const double> row(std::uint32_t r) const {
    return {values.data() + static_cast<std::size_t>(r) * classes, classes};
  }
  friend bool operator==(const ProbabilityMatrix&, const ProbabilityMatrix&) = default;
};

// Descending-probability class order (ties by ascending class index) and the
// cumulative sums along that order.
struct RankedRow {
  std::vector<std::uint32_t> order;
  std::vector<double> csum;
};

inline RankedRow rank_row(std::span<const double> row) {
  RankedRow r;
  r.order.resize(row.size());
  std::iota(r.order.begin(), r.order.end(), 0u);
  std::sort(r.order.begin(), r.order.end(), [&](std::uint32_t a, std::uint32_t b) {
    if (row[a] != row[b]) return row[a] > row[b];
    return a < b;
  });
  r.csum.resize(row.size());
  double acc = 0.0;
  for (std::size_t j = 0; j < r.order.size(); ++j) {
    acc += row[r.order[j]];
    r.csum[j] = acc;
  }
  return r;
}

// Cumulative mass of classes ranked at or above true_label. Accumulation
// order matches rank_row's cumulative sums exactly, so a node's score equals
// the cumulative sum at its label's rank, bit for bit.
inline double aps_score(std::span<const double> row, std::uint32_t true_label) {
  if (true_label >= row.size()) {
    throw InputError("label " + std::to_string(true_label) + " outside [0, " +
                     std::to_string(row.size()) + ")");
  }
  const RankedRow r = rank_row(row);
  for (std::size_t j = 0; j < r.order.size(); ++j) {
    if (r.order[j] == true_label) return r.csum[j];
  }
  return r.csum.back();  // unreachable
}

// Smallest k (1-based) whose cumulative mass reaches tau; clamps to the class
// count when rounding keeps every partial sum below tau.
inline std::uint32_t generalized_quantile_L(const RankedRow& ranked, double tau) {
  const auto k = static_cast<std::uint32_t>(ranked.csum.size());
  for (std::uint32_t j = 0; j < k; ++j) {
    if (ranked.csum[j] >= tau) return j + 1;
  }
  return k;
}

// Fractional overshoot of the cumulative mass at L beyond tau, used as the
// randomized-exclusion probability. Clamped to [0,1] against rounding.
inline double tie_break_V(const RankedRow& ranked, double tau) {
  const std::uint32_t L = generalized_quantile_L(ranked, tau);
  const double p_last = L == 1 ? ranked.csum[0] : ranked.csum[L - 1] - ranked.csum[L - 2];
  if (!(p_last > 0.0)) {
    throw DegenerateDistributionError(
        "boundary class has zero probability; tie-break undefined");
  }
  const double v = (ranked.csum[L - 1] - tau) / p_last;
  return std::clamp(v, 0.0, 1.0);
}

// Labels of the L-1 highest-probability classes if u <= V, else of the L
// highest. tau above 1 (including the +infinity threshold sentinel) returns
// every label without consulting u. Result is sorted ascending.
inline std::vector<std::uint32_t> randomized_aps_set(std::span<const double> row,
                                                     double tau, double u) {
  std::vector<std::uint32_t> labels;
  if (tau > 1.0) {
    labels.resize(row.size());
    std::iota(labels.begin(), labels.end(), 0u);
    return labels;
  }
  const RankedRow r = rank_row(row);
  const std::uint32_t L = generalized_quantile_L(r, tau);
  const double v = tie_break_V(r, tau);
  const std::uint32_t keep = u <= v ? L - 1 : L;
  labels.assign(r.order.begin(), r.order.begin() + keep);
  std::sort(labels.begin(), labels.end());
  return labels;
}

// Calibration scores paired with node identifiers.
struct ScoreSet {
  struct Entry {
    NodeId node;
    double score;
  };
  std::vector<Entry> entries;
};

inline ScoreSet score_calibration_set(const ProbabilityMatrix& probs,
                                      const NodeLabels& labels,
                                      std::span<const NodeId> nodes) {
  ScoreSet s;
  s.entries.reserve(nodes.size());
  for (NodeId v : nodes) {
    if (v >= probs.rows) {
      throw InputError("node " + std::to_string(v) + " has no probability row");
    }
    if (v >= labels.labels.size()) {
      throw InputError("node " + std::to_string(v) + " has no label");
    }
    s.entries.push_back({v, aps_score(probs.row(v), labels.labels[v])});
  }
  return s;
}

// Row sanity for loaded matrices: entries nonnegative, each row within tol of
// summing to 1, then renormalized exactly. Returns the worst deviation seen.
inline double normalize_rows(ProbabilityMatrix& m, double tol = 1e-6) {
  double worst = 0.0;
  for (std::uint32_t r = 0; r < m.rows; ++r) {
    double sum = 0.0;
    for (std::uint32_t c = 0; c < m.classes; ++c) {
      const double x = m.values[static_cast<std::size_t>(r) * m.classes + c];
      if (!(x >= 0.0)) {
        throw InputError("probability row " + std::to_string(r) +
                         " has a negative or non-finite entry");
      }
      sum += x;
    }
    const double dev = std::abs(sum - 1.0);
    worst = std::max(worst, dev);
    if (dev > tol) {
      throw InputError("probability row " + std::to_string(r) + " sums to " +
                       std::to_string(sum) + ", beyond tolerance");
    }
    for (std::uint32_t c = 0; c < m.classes; ++c) {
      m.values[static_cast<std::size_t>(r) * m.classes + c] /= sum;
    }
  }
  return worst;
}

}  // namespace naps
