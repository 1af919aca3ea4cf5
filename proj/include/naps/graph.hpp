#pragma once

// Immutable undirected graph in compressed sparse row form, k-hop
// neighborhood queries, and label-assortativity (homophily) diagnostics.
// Graphs are simple: self-loops and duplicate edges are dropped at build
// time, and neighbor lists are sorted so equal graphs compare equal.

#include <algorithm>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "naps/error.hpp"

namespace naps {

using NodeId = std::uint32_t;

struct Graph {
  std::uint32_t node_count = 0;
  std::vector<std::uint64_t> offsets;  // size node_count + 1
  std::vector<NodeId> targets;         // per-node sorted, deduped

  std::span<const NodeId> neighbors(NodeId v) const {
    return {targets.data() + offsets[v],
            targets.data() + offsets[v + 1]};
  }
  std::uint64_t degree(NodeId v) const { return offsets[v + 1] - offsets[v]; }
  std::uint64_t edge_count() const { return targets.size() / 2; }

  friend bool operator==(const Graph&, const Graph&) = default;
};

struct NodeLabels {
  std::vector<std::uint32_t> labels;  // labels[v] in [0, num_classes)
  std::uint32_t num_classes = 0;
};

// Nodes at shortest-path distance 1..depth from center, grouped by exact
// distance. Groups are disjoint, sorted ascending, and never contain center.
struct HopNeighborhood {
  NodeId center = 0;
  std::uint32_t depth = 0;
  std::vector<std::vector<NodeId>> by_hop;  // by_hop[d-1] = nodes at hop d

  std::vector<NodeId> members_sorted() const {
    std::vector<NodeId> all;
    for (const auto& layer : by_hop) all.insert(all.end(), layer.begin(), layer.end());
    std::sort(all.begin(), all.end());
    return all;
  }
  std::size_t member_count() const {
    std::size_t total = 0;
    for (const auto& layer : by_hop) total += layer.size();
    return total;
  }
};

// Canonical undirected simple graph from an edge list. Duplicate edges and
// self-loops are dropped; input order never affects the result.
inline Graph build_graph(std::span<const std::pair<NodeId, NodeId>> edges,
                         std::uint32_t node_count) {
  for (const auto& [a, b] : edges) {
    if (a >= node_count || b >= node_count) {
      throw InputError("edge (" + std::to_string(a) + ", " + std::to_string(b) +
                       ") has an endpoint outside [0, " +
                       std::to_string(node_count) + ")");
    }
  }
  std::vector<std::pair<NodeId, NodeId>> dir;
  dir.reserve(edges.size() * 2);
  for (const auto& [a, b] : edges) {
    if (a == b) continue;
    dir.emplace_back(a, b);
    dir.emplace_back(b, a);
  }
  std::sort(dir.begin(), dir.end());
  dir.erase(std::unique(dir.begin(), dir.end()), dir.end());

  Graph g;
  g.node_count = node_count;
  g.offsets.assign(node_count + 1, 0);
  for (const auto& [a, b] : dir) ++g.offsets[a + 1];
  for (std::uint32_t v = 0; v < node_count; ++v) g.offsets[v + 1] += g.offsets[v];
  g.targets.reserve(dir.size());
  for (const auto& [a, b] : dir) g.targets.push_back(b);
  return g;
}

inline Graph build_graph(const std::vector<std::pair<NodeId, NodeId>>& edges,
                         std::uint32_t node_count) {
  return build_graph(std::span<const std::pair<NodeId, NodeId>>(edges), node_count);
}

// Layered breadth-first search. by_hop[d-1] holds exactly the nodes whose
// shortest-path distance from v is d.
inline HopNeighborhood k_hop_neighborhood(const Graph& g, NodeId v,
                                          std::uint32_t k) {
  if (v >= g.node_count) {
    throw InputError("node " + std::to_string(v) + " outside [0, " +
                     std::to_string(g.node_count) + ")");
  }
  if (k < 1) throw InputError("hop depth must be at least 1");

  HopNeighborhood out;
  out.center = v;
  out.depth = k;
  out.by_hop.resize(k);

  std::vector<std::uint8_t> seen(g.node_count, 0);
  seen[v] = 1;
  std::vector<NodeId> frontier{v};
  std::vector<NodeId> next;
  for (std::uint32_t d = 1; d <= k && !frontier.empty(); ++d) {
    next.clear();
    for (NodeId u : frontier) {
      for (NodeId w : g.neighbors(u)) {
        if (!seen[w]) {
          seen[w] = 1;
          next.push_back(w);
        }
      }
    }
    std::sort(next.begin(), next.end());
    out.by_hop[d - 1] = next;
    frontier.swap(next);
  }
  return out;
}

namespace detail {

// Scope mask for an optional node subset; defaults to every node.
inline std::vector<std::uint8_t> scope_mask(std::uint32_t node_count,
                                            std::optional<std::span<const NodeId>> subset) {
  std::vector<std::uint8_t> in(node_count, subset ? 0 : 1);
  if (subset) {
    for (NodeId v : *subset) {
      if (v >= node_count) {
        throw InputError("subset node " + std::to_string(v) + " outside [0, " +
                         std::to_string(node_count) + ")");
      }
      in[v] = 1;
    }
  }
  return in;
}

}  // namespace detail

// Mean over non-isolated in-scope nodes of the fraction of (in-scope)
// neighbors sharing the node's label. With a subset this is evaluated on the
// induced subgraph: edges leaving the subset are invisible, and subset nodes
// left without neighbors are excluded from the mean. Throws when every node
// in scope is isolated (the ratio is undefined, not zero).
inline double node_homophily_ratio(const Graph& g, const NodeLabels& labels,
                                   std::optional<std::span<const NodeId>> subset = {}) {
  if (labels.labels.size() != g.node_count) {
    throw InputError("labels cover " + std::to_string(labels.labels.size()) +
                     " nodes, graph has " + std::to_string(g.node_count));
  }
  const auto in = detail::scope_mask(g.node_count, subset);
  double sum = 0.0;
  std::uint64_t counted = 0;
  for (NodeId v = 0; v < g.node_count; ++v) {
    if (!in[v]) continue;
    std::uint64_t deg = 0, same = 0;
    for (NodeId w : g.neighbors(v)) {
      if (!in[w]) continue;
      ++deg;
      if (labels.labels[w] == labels.labels[v]) ++same;
    }
    if (deg == 0) continue;
    sum += static_cast<double>(same) / static_cast<double>(deg);
    ++counted;
  }
  if (counted == 0) {
    throw UndefinedValueError("homophily ratio undefined: no node in scope has a neighbor");
  }
  return sum / static_cast<double>(counted);
}

// Sum of squared empirical label frequencies over the scope: the expected
// homophily ratio if labels were assigned independently at random.
inline double expected_random_homophily(const NodeLabels& labels,
                                        std::optional<std::span<const NodeId>> subset = {}) {
  const auto n = static_cast<std::uint32_t>(labels.labels.size());
  const auto in = detail::scope_mask(n, subset);
  std::vector<std::uint64_t> freq(labels.num_classes == 0 ? 1 : labels.num_classes, 0);
  std::uint64_t total = 0;
  for (NodeId v = 0; v < n; ++v) {
    if (!in[v]) continue;
    if (labels.labels[v] >= freq.size()) freq.resize(labels.labels[v] + 1, 0);
    ++freq[labels.labels[v]];
    ++total;
  }
  if (total == 0) throw InputError("expected_random_homophily: empty node scope");
  double h = 0.0;
  for (std::uint64_t c : freq) {
    double p = static_cast<double>(c) / static_cast<double>(total);
    h += p * p;
  }
  return h;
}

// Candidates whose k-hop neighborhood contains at least min_size other
// candidates: the set of nodes eligible for neighborhood calibration.
inline std::vector<NodeId> calibration_eligible_nodes(const Graph& g,
                                                      std::span<const NodeId> candidates,
                                                      std::uint32_t k,
                                                      std::uint32_t min_size) {
  if (min_size < 1) throw InputError("min_size must be at least 1");
  std::vector<std::uint8_t> is_candidate(g.node_count, 0);
  for (NodeId v : candidates) {
    if (v >= g.node_count) {
      throw InputError("candidate node " + std::to_string(v) + " outside [0, " +
                       std::to_string(g.node_count) + ")");
    }
    is_candidate[v] = 1;
  }
  std::vector<NodeId> eligible;
  for (NodeId v : candidates) {
    const auto hood = k_hop_neighborhood(g, v, k);
    std::uint64_t inside = 0;
    for (const auto& layer : hood.by_hop) {
      for (NodeId w : layer) inside += is_candidate[w];
    }
    if (inside >= min_size) eligible.push_back(v);
  }
  return eligible;
}

}  // namespace naps
