#pragma once

// Repeated-split evaluation protocol: sample an evaluation batch from the
// calibration-eligible nodes, calibrate every method on the remaining pool,
// and aggregate per-repetition metrics.
//
// Determinism contract: repetition r draws from keys derived only from
// (master_seed, r), every evaluation node's tie-break u is indexed by its
// position in the sampled batch, and results land in pre-sized slots by
// repetition index. Worker threads only pick which slot to fill next, so
// reports are byte-identical for any --threads value.

#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <limits>
#include <mutex>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <utility>
#include <vector>

#include "naps/aps.hpp"
#include "naps/conformal.hpp"
#include "naps/error.hpp"
#include "naps/graph.hpp"
#include "naps/io.hpp"
#include "naps/rng.hpp"
#include "naps/version.hpp"

namespace naps {

namespace stream {
inline constexpr std::uint64_t kRepetition = 4;
inline constexpr std::uint64_t kBatch = 1;
inline constexpr std::uint64_t kTieBreak = 2;
inline constexpr std::uint64_t kPredict = 5;
}  // namespace stream

enum class Method : std::uint8_t {
  naive_aps,
  naps,
  naps_hop_decay,
  naps_alternating,
};

inline std::string_view method_name(Method m) {
  switch (m) {
    case Method::naive_aps: return "naive_aps";
    case Method::naps: return "naps";
    case Method::naps_hop_decay: return "naps_hop_decay";
    case Method::naps_alternating: return "naps_alternating";
  }
  return "unknown";
}

inline Method parse_method(std::string_view name) {
  if (name == "naive_aps") return Method::naive_aps;
  if (name == "naps") return Method::naps;
  if (name == "naps_hop_decay") return Method::naps_hop_decay;
  if (name == "naps_alternating") return Method::naps_alternating;
  throw InputError("unknown method '" + std::string(name) +
                   "' (expected naive_aps, naps, naps_hop_decay, naps_alternating)");
}

struct ExperimentConfig {
  double alpha = 0.1;
  std::uint32_t k = 2;
  std::uint32_t eval_batch = 1000;
  std::uint32_t repetitions = 100;
  std::uint32_t min_neighborhood = 50;
  std::vector<Method> methods{Method::naive_aps, Method::naps};
  std::uint64_t master_seed = 0;
  std::uint32_t threads = 0;  // 0: hardware concurrency
  double hop_decay_gamma = 0.5;
};

struct Metrics {
  double coverage = 0.0;
  double avg_size = 0.0;
  double size_given_cov = std::numeric_limits<double>::quiet_NaN();
  std::uint32_t n_eval = 0;
};

struct MethodResult {
  Method method = Method::naive_aps;
  std::vector<Metrics> per_rep;
  Metrics mean;    // arithmetic mean across repetitions, ascending order
  Metrics stddev;  // sample standard deviation (NaN when repetitions == 1)
};

struct ExperimentReport {
  std::vector<MethodResult> methods;
  ExperimentConfig config;
  std::uint64_t dataset_fingerprint = 0;
  std::uint32_t n_eligible = 0;
};

// Borrowed views of the three dataset components every experiment needs.
struct DatasetView {
  const Graph& graph;
  const NodeLabels& labels;
  const ProbabilityMatrix& probs;
};

struct SummaryRecord {
  std::uint64_t nodes = 0;
  std::uint64_t edges = 0;
  std::uint32_t num_classes = 0;
  std::uint64_t eligible = 0;
  std::optional<double> homophily;         // empty when undefined (no edges)
  std::optional<double> random_homophily;  // empty when no labeled nodes
};

namespace detail {

// Covered/size of the randomized set at threshold tau without materializing
// the label vector. Equivalent to randomized_aps_set + membership test.
struct SetOutcome {
  bool covered = false;
  std::uint32_t size = 0;
};

inline SetOutcome evaluate_set(std::span<const double> row, std::uint32_t truth,
                               double tau, double u) {
  if (tau > 1.0) {  // +infinity threshold: full label set
    return {true, static_cast<std::uint32_t>(row.size())};
  }
  const RankedRow r = rank_row(row);
  const std::uint32_t L = generalized_quantile_L(r, tau);
  const double v = tie_break_V(r, tau);
  const std::uint32_t keep = u <= v ? L - 1 : L;
  std::uint32_t truth_rank = 0;  // 0-based position of truth in the ranking
  for (; truth_rank < r.order.size(); ++truth_rank) {
    if (r.order[truth_rank] == truth) break;
  }
  return {truth_rank < keep, keep};
}

struct MethodAccumulator {
  std::uint64_t covered = 0;
  std::uint64_t size_sum = 0;
  std::uint64_t size_sum_covered = 0;

  void add(SetOutcome o) {
    covered += o.covered;
    size_sum += o.size;
    if (o.covered) size_sum_covered += o.size;
  }
  Metrics finish(std::uint32_t n_eval) const {
    Metrics m;
    m.n_eval = n_eval;
    m.coverage = static_cast<double>(covered) / n_eval;
    m.avg_size = static_cast<double>(size_sum) / n_eval;
    if (covered > 0) {
      m.size_given_cov = static_cast<double>(size_sum_covered) / static_cast<double>(covered);
    }
    return m;
  }
};

inline WeightScheme scheme_for(Method m, const ExperimentConfig& cfg) {
  switch (m) {
    case Method::naps: return WeightScheme::khop_indicator(cfg.k);
    case Method::naps_hop_decay: return WeightScheme::hop_decay(cfg.k, cfg.hop_decay_gamma);
    case Method::naps_alternating: return WeightScheme::alternating_heterophilic(cfg.k);
    case Method::naive_aps: break;
  }
  throw InputError("naive_aps has no weight scheme");
}

// Mean and sample standard deviation over repetitions, ascending order.
// size_given_cov aggregates only over repetitions where it is defined.
inline void aggregate(MethodResult& r) {
  const std::size_t n = r.per_rep.size();
  auto moments = [&](auto&& get, bool skip_nan, Metrics& mean_out, Metrics& sd_out,
                     auto&& set) {
    double sum = 0.0;
    std::size_t count = 0;
    for (const Metrics& m : r.per_rep) {
      const double x = get(m);
      if (skip_nan && std::isnan(x)) continue;
      sum += x;
      ++count;
    }
    const double mean = count ? sum / static_cast<double>(count)
                              : std::numeric_limits<double>::quiet_NaN();
    double sq = 0.0;
    for (const Metrics& m : r.per_rep) {
      const double x = get(m);
      if (skip_nan && std::isnan(x)) continue;
      sq += (x - mean) * (x - mean);
    }
    const double sd = count > 1 ? std::sqrt(sq / static_cast<double>(count - 1))
                                : std::numeric_limits<double>::quiet_NaN();
    set(mean_out, mean);
    set(sd_out, sd);
  };
  moments([](const Metrics& m) { return m.coverage; }, false, r.mean, r.stddev,
          [](Metrics& m, double v) { m.coverage = v; });
  moments([](const Metrics& m) { return m.avg_size; }, false, r.mean, r.stddev,
          [](Metrics& m, double v) { m.avg_size = v; });
  moments([](const Metrics& m) { return m.size_given_cov; }, true, r.mean, r.stddev,
          [](Metrics& m, double v) { m.size_given_cov = v; });
  r.mean.n_eval = n ? r.per_rep.front().n_eval : 0;
  r.stddev.n_eval = r.mean.n_eval;
}

}  // namespace detail

inline ExperimentReport run_experiment(const DatasetView& data,
                                       const ExperimentConfig& cfg) {
  const Graph& g = data.graph;
  const NodeLabels& labels = data.labels;
  const ProbabilityMatrix& probs = data.probs;

  if (labels.labels.size() != g.node_count || probs.rows != g.node_count) {
    throw InputError("dataset size mismatch: graph has " + std::to_string(g.node_count) +
                     " nodes, labels " + std::to_string(labels.labels.size()) +
                     ", probability rows " + std::to_string(probs.rows));
  }
  if (labels.num_classes > probs.classes) {
    throw InputError("labels use " + std::to_string(labels.num_classes) +
                     " classes but the probability matrix has " +
                     std::to_string(probs.classes) + " columns");
  }
  if (!(cfg.alpha > 0.0) || !(cfg.alpha < 1.0)) throw InputError("alpha must lie in (0, 1)");
  if (cfg.eval_batch < 1) throw InputError("eval_batch must be at least 1");
  if (cfg.repetitions < 1) throw InputError("repetitions must be at least 1");
  if (cfg.k < 1 || cfg.k > 255) throw InputError("k must lie in [1, 255]");
  if (cfg.methods.empty()) throw InputError("no methods selected");
  if (cfg.eval_batch >= g.node_count) {
    throw InputError("eval_batch " + std::to_string(cfg.eval_batch) +
                     " leaves no calibration pool in a graph of " +
                     std::to_string(g.node_count) + " nodes");
  }

  // Scores and per-node rank positions never change across repetitions.
  std::vector<double> score(g.node_count);
  for (NodeId v = 0; v < g.node_count; ++v) {
    score[v] = aps_score(probs.row(v), labels.labels[v]);
  }

  std::vector<NodeId> all_nodes(g.node_count);
  std::iota(all_nodes.begin(), all_nodes.end(), 0u);
  const std::vector<NodeId> eligible =
      calibration_eligible_nodes(g, all_nodes, cfg.k, cfg.min_neighborhood);
  if (eligible.size() < cfg.eval_batch) {
    throw InputError("only " + std::to_string(eligible.size()) +
                     " calibration-eligible nodes for eval_batch=" +
                     std::to_string(cfg.eval_batch) +
                     "; lower min_neighborhood or eval_batch");
  }

  // Hop-annotated neighborhood members, precomputed once per eligible node.
  const bool needs_hoods = std::any_of(cfg.methods.begin(), cfg.methods.end(),
                                       [](Method m) { return m != Method::naive_aps; });
  std::vector<std::vector<std::pair<NodeId, std::uint8_t>>> hood_of(
      needs_hoods ? eligible.size() : 0);
  if (needs_hoods) {
    for (std::size_t i = 0; i < eligible.size(); ++i) {
      const HopNeighborhood h = k_hop_neighborhood(g, eligible[i], cfg.k);
      auto& flat = hood_of[i];
      flat.reserve(h.member_count());
      for (std::uint32_t d = 1; d <= h.by_hop.size(); ++d) {
        for (NodeId w : h.by_hop[d - 1]) {
          flat.emplace_back(w, static_cast<std::uint8_t>(d));
        }
      }
    }
  }

  struct MethodPlan {
    Method method;
    bool is_naive;
    WeightScheme scheme;  // unused for naive
    double hop_weight[256];
  };
  std::vector<MethodPlan> plans;
  for (Method m : cfg.methods) {
    MethodPlan p{m, m == Method::naive_aps, WeightScheme::uniform_full(), {}};
    if (!p.is_naive) {
      p.scheme = detail::scheme_for(m, cfg);
      for (std::uint32_t d = 1; d <= 255; ++d) {
        p.hop_weight[d] = d <= cfg.k ? p.scheme.weight_at_hop(d) : 0.0;
      }
    }
    plans.push_back(p);
  }

  std::vector<std::vector<Metrics>> results(plans.size());
  for (auto& r : results) r.resize(cfg.repetitions);

  const std::uint64_t rep_root = rng::derive(cfg.master_seed, stream::kRepetition);

  auto run_rep = [&](std::uint32_t rep) {
    const std::uint64_t rep_key = rng::derive(rep_root, rep);
    rng::CounterRng batch_rng(rng::derive(rep_key, stream::kBatch));
    const rng::CounterRng u_rng(rng::derive(rep_key, stream::kTieBreak));

    // Partial Fisher-Yates draw of eval_batch distinct eligible indices.
    std::vector<std::uint32_t> draw(eligible.size());
    std::iota(draw.begin(), draw.end(), 0u);
    std::vector<std::uint32_t> batch(cfg.eval_batch);
    for (std::uint32_t i = 0; i < cfg.eval_batch; ++i) {
      const std::uint64_t j =
          i + batch_rng.next_below(static_cast<std::uint64_t>(draw.size()) - i);
      std::swap(draw[i], draw[j]);
      batch[i] = draw[i];
    }

    std::vector<std::uint8_t> in_pool(g.node_count, 1);
    for (std::uint32_t idx : batch) in_pool[eligible[idx]] = 0;

    // Global split threshold over the pool, shared by all naive evaluations.
    double naive_tau = std::numeric_limits<double>::infinity();
    const bool any_naive = std::any_of(plans.begin(), plans.end(),
                                       [](const MethodPlan& p) { return p.is_naive; });
    if (any_naive) {
      ScoreSet pool_scores;
      pool_scores.entries.reserve(g.node_count - cfg.eval_batch);
      for (NodeId v = 0; v < g.node_count; ++v) {
        if (in_pool[v]) pool_scores.entries.push_back({v, score[v]});
      }
      naive_tau = split_threshold(pool_scores, cfg.alpha).value;
    }

    std::vector<detail::MethodAccumulator> acc(plans.size());
    ScoreSet cal;
    std::vector<double> w;
    for (std::uint32_t i = 0; i < cfg.eval_batch; ++i) {
      const std::uint32_t idx = batch[i];
      const NodeId v = eligible[idx];
      const double u = u_rng.unit_at(i);
      const auto row = probs.row(v);
      const std::uint32_t truth = labels.labels[v];

      for (std::size_t mi = 0; mi < plans.size(); ++mi) {
        const MethodPlan& plan = plans[mi];
        double tau;
        if (plan.is_naive) {
          tau = naive_tau;
        } else {
          cal.entries.clear();
          w.clear();
          double total = 0.0;
          for (const auto& [node, hop] : hood_of[idx]) {
            if (!in_pool[node]) continue;
            const double wd = plan.hop_weight[hop];
            if (wd == 0.0) continue;
            cal.entries.push_back({node, score[node]});
            w.push_back(wd);
            total += wd;
          }
          tau = total > 0.0 ? weighted_threshold(cal, w, cfg.alpha).value
                            : std::numeric_limits<double>::infinity();
        }
        acc[mi].add(detail::evaluate_set(row, truth, tau, u));
      }
    }

    for (std::size_t mi = 0; mi < plans.size(); ++mi) {
      results[mi][rep] = acc[mi].finish(cfg.eval_batch);
    }
  };

  const std::uint32_t hw = std::max(1u, std::thread::hardware_concurrency());
  const std::uint32_t n_threads =
      std::min(cfg.threads == 0 ? hw : cfg.threads, cfg.repetitions);
  if (n_threads <= 1) {
    for (std::uint32_t r = 0; r < cfg.repetitions; ++r) run_rep(r);
  } else {
    std::atomic<std::uint32_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto worker = [&] {
      while (true) {
        const std::uint32_t r = next.fetch_add(1);
        if (r >= cfg.repetitions) return;
        try {
          run_rep(r);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
          return;
        }
      }
    };
    std::vector<std::thread> threads;
    threads.reserve(n_threads);
    for (std::uint32_t t = 0; t < n_threads; ++t) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
    if (first_error) std::rethrow_exception(first_error);
  }

  ExperimentReport report;
  report.config = cfg;
  report.dataset_fingerprint = io::fingerprint_dataset(g, labels, probs);
  report.n_eligible = static_cast<std::uint32_t>(eligible.size());
  for (std::size_t mi = 0; mi < plans.size(); ++mi) {
    MethodResult r;
    r.method = plans[mi].method;
    r.per_rep = std::move(results[mi]);
    detail::aggregate(r);
    report.methods.push_back(std::move(r));
  }
  return report;
}

// One row of dataset statistics: counts, eligibility, and homophily.
inline SummaryRecord summarize_dataset(const Graph& g, const NodeLabels& labels,
                                       std::uint32_t k, std::uint32_t min_neighborhood) {
  SummaryRecord s;
  s.nodes = g.node_count;
  s.edges = g.edge_count();
  s.num_classes = labels.num_classes;
  if (g.node_count > 0) {
    std::vector<NodeId> all_nodes(g.node_count);
    std::iota(all_nodes.begin(), all_nodes.end(), 0u);
    s.eligible = calibration_eligible_nodes(g, all_nodes, k, min_neighborhood).size();
    try {
      s.homophily = node_homophily_ratio(g, labels);
    } catch (const UndefinedValueError&) {
      s.homophily = std::nullopt;
    }
    s.random_homophily = expected_random_homophily(labels);
  }
  return s;
}

// --- report serialization --------------------------------------------------

// Machine-readable report: `#` metadata comments, a header, then one row per
// (method, repetition) in method-then-repetition order. Thread count is
// deliberately not part of the metadata: it must not affect output bytes.
inline std::string write_report_csv(const ExperimentReport& report) {
  std::string out;
  out += "# version=" + std::string(kVersion) + "\n";
  out += "# rng=" + std::string(kRngSchemeId) + "\n";
  out += "# seed=" + std::to_string(report.config.master_seed) + "\n";
  out += "# alpha=" + io::format_double(report.config.alpha) + "\n";
  out += "# k=" + std::to_string(report.config.k) + "\n";
  out += "# eval_batch=" + std::to_string(report.config.eval_batch) + "\n";
  out += "# repetitions=" + std::to_string(report.config.repetitions) + "\n";
  out += "# min_neighborhood=" + std::to_string(report.config.min_neighborhood) + "\n";
  out += "# hop_decay_gamma=" + io::format_double(report.config.hop_decay_gamma) + "\n";
  std::string methods;
  for (const auto& m : report.methods) {
    if (!methods.empty()) methods += ',';
    methods += method_name(m.method);
  }
  out += "# methods=" + methods + "\n";
  out += "# eligible=" + std::to_string(report.n_eligible) + "\n";
  out += "# fingerprint=" + io::fingerprint_hex(report.dataset_fingerprint) + "\n";
  out += "method,rep,coverage,avg_size,size_given_cov,n_eval\n";
  for (const auto& m : report.methods) {
    for (std::size_t r = 0; r < m.per_rep.size(); ++r) {
      const Metrics& x = m.per_rep[r];
      out += std::string(method_name(m.method)) + "," + std::to_string(r) + "," +
             io::format_double(x.coverage) + "," + io::format_double(x.avg_size) + "," +
             io::format_double(x.size_given_cov) + "," + std::to_string(x.n_eval) + "\n";
    }
  }
  return out;
}

// Human-readable aggregate table: one row per method, mean and spread across
// repetitions for coverage, set size, and size among covering sets.
inline std::string render_report_table(const ExperimentReport& report) {
  auto cell = [](double mean, double sd) {
    return io::format_double(std::round(mean * 1e4) / 1e4) + " +- " +
           io::format_double(std::round(sd * 1e4) / 1e4);
  };
  std::vector<std::vector<std::string>> rows;
  rows.push_back({"method", "coverage", "size", "size|covered", "n_eval"});
  for (const auto& m : report.methods) {
    rows.push_back({std::string(method_name(m.method)),
                    cell(m.mean.coverage, m.stddev.coverage),
                    cell(m.mean.avg_size, m.stddev.avg_size),
                    cell(m.mean.size_given_cov, m.stddev.size_given_cov),
                    std::to_string(m.mean.n_eval)});
  }
  std::vector<std::size_t> width(rows[0].size(), 0);
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      width[c] = std::max(width[c], row[c].size());
    }
  }
  std::string out;
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      out += row[c];
      if (c + 1 < row.size()) {
        out.append(width[c] - row[c].size() + 2, ' ');
      }
    }
    out += '\n';
  }
  return out;
}

// Summary in the dataset-statistics table schema.
inline std::string render_summary(const SummaryRecord& s, std::uint32_t k,
                                  std::uint32_t min_neighborhood) {
  std::string out;
  out += "nodes=" + std::to_string(s.nodes) + "\n";
  out += "edges=" + std::to_string(s.edges) + "\n";
  out += "classes=" + std::to_string(s.num_classes) + "\n";
  out += "eligible_k" + std::to_string(k) + "_min" + std::to_string(min_neighborhood) +
         "=" + std::to_string(s.eligible) + "\n";
  out += "homophily=" +
         (s.homophily ? io::format_double(*s.homophily) : std::string("undefined")) + "\n";
  out += "random_homophily=" +
         (s.random_homophily ? io::format_double(*s.random_homophily)
                             : std::string("undefined")) +
         "\n";
  return out;
}

}  // namespace naps
