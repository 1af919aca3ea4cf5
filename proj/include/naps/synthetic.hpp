#pragma once

// Synthetic data: stochastic block model graphs with block labels, plus a
// simulated classifier whose per-block temperature controls miscalibration.
//
// All draws are counter-indexed (see rng.hpp), so every output is a pure
// function of (config, seed): node i's label comes from index i of the label
// stream, pair (i, j) from index i*n+j of the edge stream, and node i's
// logits from a per-node derived key. Regenerating with the same seed yields
// byte-identical datasets on any platform.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "naps/aps.hpp"
#include "naps/error.hpp"
#include "naps/graph.hpp"
#include "naps/rng.hpp"

namespace naps {

namespace stream {
inline constexpr std::uint64_t kLabels = 1;
inline constexpr std::uint64_t kEdges = 2;
inline constexpr std::uint64_t kClassifier = 3;
}  // namespace stream

struct SbmConfig {
  std::uint32_t n = 0;
  std::uint32_t blocks = 0;
  std::vector<double> block_probs;  // length blocks, sums to 1
  double p_in = 0.0;
  double p_out = 0.0;
  std::uint64_t seed = 0;
};

struct ClassifierProfile {
  double mu = 0.0;     // logit mass added to the true class
  double sigma = 0.0;  // per-class Gaussian logit noise
  std::vector<double> per_block_temperature;  // length blocks, all > 0
};

struct SyntheticDataset {
  Graph graph;
  NodeLabels labels;
  ProbabilityMatrix probs;
  std::optional<ProbabilityMatrix> true_conditionals;
  SbmConfig sbm;                // config echo for metadata output
  ClassifierProfile classifier;
  std::uint64_t seed = 0;
};

namespace detail {

inline void check_sbm(const SbmConfig& cfg) {
  if (cfg.n == 0) throw InputError("sbm: node count must be positive");
  if (cfg.blocks == 0 || cfg.block_probs.size() != cfg.blocks) {
    throw InputError("sbm: block_probs length must equal the block count");
  }
  double sum = 0.0;
  for (double p : cfg.block_probs) {
    if (!(p >= 0.0)) throw InputError("sbm: block probabilities must be nonnegative");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-6) {
    throw InputError("sbm: block probabilities sum to " + std::to_string(sum));
  }
  for (double p : {cfg.p_in, cfg.p_out}) {
    if (!(p >= 0.0) || p > 1.0) throw InputError("sbm: edge probabilities must lie in [0, 1]");
  }
}

inline std::uint32_t categorical(std::span<const double> probs, double u) {
  double cum = 0.0;
  for (std::uint32_t k = 0; k + 1 < probs.size(); ++k) {
    cum += probs[k];
    if (u < cum) return k;
  }
  return static_cast<std::uint32_t>(probs.size()) - 1;
}

inline void softmax_into(std::span<const double> logits, std::span<double> out) {
  double top = logits[0];
  for (double x : logits) top = std::max(top, x);
  double sum = 0.0;
  for (std::size_t c = 0; c < logits.size(); ++c) {
    out[c] = std::exp(logits[c] - top);
    sum += out[c];
  }
  for (std::size_t c = 0; c < logits.size(); ++c) out[c] /= sum;
}

}  // namespace detail

// Labels drawn independently from block_probs; each intra-block pair linked
// with probability p_in, inter-block with p_out, independently.
inline std::pair<Graph, NodeLabels> generate_sbm(const SbmConfig& cfg) {
  detail::check_sbm(cfg);
  const rng::CounterRng label_stream(rng::derive(cfg.seed, stream::kLabels));
  NodeLabels labels;
  labels.num_classes = cfg.blocks;
  labels.labels.resize(cfg.n);
  for (std::uint32_t i = 0; i < cfg.n; ++i) {
    labels.labels[i] = detail::categorical(cfg.block_probs, label_stream.unit_at(i));
  }

  const rng::CounterRng edge_stream(rng::derive(cfg.seed, stream::kEdges));
  std::vector<std::pair<NodeId, NodeId>> edges;
  const std::uint64_t n64 = cfg.n;
  for (std::uint32_t i = 0; i < cfg.n; ++i) {
    for (std::uint32_t j = i + 1; j < cfg.n; ++j) {
      const double p = labels.labels[i] == labels.labels[j] ? cfg.p_in : cfg.p_out;
      if (p <= 0.0) continue;
      if (edge_stream.unit_at(i * n64 + j) < p) edges.emplace_back(i, j);
    }
  }
  return {build_graph(edges, cfg.n), std::move(labels)};
}

// For a node with label y in block b (labels are blocks): raw logits are
// mu on the true class plus Gaussian(0, sigma^2) per class; reported
// probabilities are softmax(logits / T_b). T_b = 1 is the calibrated regime.
//
// true_cond, when requested, receives the Bayes posterior of the label given
// the raw logits: softmax over c of (log prior_c + mu * logit_c / sigma^2).
// The prior defaults to the empirical label frequencies; pass the generative
// block probabilities to get the exact posterior of the generator.
inline ProbabilityMatrix simulate_classifier(const NodeLabels& labels,
                                             const ClassifierProfile& profile,
                                             std::uint64_t seed,
                                             ProbabilityMatrix* true_cond = nullptr,
                                             std::span<const double> prior = {}) {
  const std::uint32_t n = static_cast<std::uint32_t>(labels.labels.size());
  const std::uint32_t k = labels.num_classes;
  if (k == 0) throw InputError("simulate_classifier: labels carry no classes");
  if (profile.per_block_temperature.size() != k) {
    throw InputError("simulate_classifier: need one temperature per block");
  }
  for (double t : profile.per_block_temperature) {
    if (!(t > 0.0)) throw InputError("simulate_classifier: temperatures must be positive");
  }
  if (!std::isfinite(profile.mu) || profile.mu < 0.0 || !std::isfinite(profile.sigma) ||
      profile.sigma < 0.0) {
    throw InputError("simulate_classifier: mu and sigma must be finite and nonnegative");
  }
  if (!prior.empty() && prior.size() != k) {
    throw InputError("simulate_classifier: prior length must equal the class count");
  }

  std::vector<double> log_prior(k);
  if (prior.empty()) {
    std::vector<double> freq(k, 0.0);
    for (std::uint32_t y : labels.labels) freq[y] += 1.0;
    for (std::uint32_t c = 0; c < k; ++c) {
      log_prior[c] = freq[c] > 0.0 ? std::log(freq[c] / n)
                                   : -std::numeric_limits<double>::infinity();
    }
  } else {
    for (std::uint32_t c = 0; c < k; ++c) {
      log_prior[c] = prior[c] > 0.0 ? std::log(prior[c])
                                    : -std::numeric_limits<double>::infinity();
    }
  }

  ProbabilityMatrix probs;
  probs.rows = n;
  probs.classes = k;
  probs.values.resize(static_cast<std::size_t>(n) * k);
  if (true_cond) {
    true_cond->rows = n;
    true_cond->classes = k;
    true_cond->values.assign(static_cast<std::size_t>(n) * k, 0.0);
  }

  const std::uint64_t clf_key = rng::derive(seed, stream::kClassifier);
  std::vector<double> logits(k), scaled(k), posterior(k);
  for (std::uint32_t i = 0; i < n; ++i) {
    const std::uint32_t y = labels.labels[i];
    const rng::CounterRng node_stream(rng::derive(clf_key, i));
    for (std::uint32_t c = 0; c < k; c += 2) {
      const auto [z0, z1] = node_stream.gauss_pair_at(c);
      logits[c] = profile.sigma * z0;
      if (c + 1 < k) logits[c + 1] = profile.sigma * z1;
    }
    logits[y] += profile.mu;

    const double temp = profile.per_block_temperature[y];
    for (std::uint32_t c = 0; c < k; ++c) scaled[c] = logits[c] / temp;
    detail::softmax_into(scaled, std::span<double>(probs.values).subspan(
                                     static_cast<std::size_t>(i) * k, k));

    if (true_cond) {
      auto out = std::span<double>(true_cond->values)
                     .subspan(static_cast<std::size_t>(i) * k, k);
      if (profile.sigma > 0.0) {
        const double scale = profile.mu / (profile.sigma * profile.sigma);
        for (std::uint32_t c = 0; c < k; ++c) {
          posterior[c] = log_prior[c] + scale * logits[c];
        }
        detail::softmax_into(posterior, out);
      } else if (profile.mu > 0.0) {
        out[y] = 1.0;  // noiseless logits reveal the label exactly
      } else {
        detail::softmax_into(log_prior, out);
      }
    }
  }
  return probs;
}

// Constants for the two built-in dataset presets. The showcase puts all
// calibration-eligible nodes in two large near-calibrated blocks and fills
// the pool with tiny sharp blocks whose high scores drag the global quantile
// up, so globally calibrated prediction overcovers the evaluated nodes while
// neighborhood calibration stays near-nominal. The iid preset removes every
// such asymmetry (one edge probability, unit temperature everywhere).
namespace preset {

inline constexpr std::uint32_t kNodes = 2000;
inline constexpr std::uint32_t kBlocks = 40;
inline constexpr double kMu = 2.0;
inline constexpr double kSigma = 1.5;

// showcase: blocks 0-1 hold 80% of nodes at temperatures 1.0 / 0.95;
// blocks 2-31 are sharp (0.6), blocks 32-39 flat (2.0), all tiny.
inline constexpr double kShowcasePIn = 0.04;
inline constexpr double kShowcasePOut = 2e-5;
inline constexpr double kShowcaseBigBlockProb = 0.4;
inline constexpr std::uint32_t kShowcaseSharpBlocks = 30;
inline constexpr double kShowcaseSharpTemp = 0.6;
inline constexpr double kShowcaseFlatTemp = 2.0;
inline constexpr double kShowcaseBigTemp0 = 1.0;
inline constexpr double kShowcaseBigTemp1 = 0.95;

inline constexpr double kIidEdgeProb = 0.01;

}  // namespace preset

inline SyntheticDataset make_naps_showcase(std::uint64_t seed) {
  SyntheticDataset d;
  d.seed = seed;
  d.sbm.n = preset::kNodes;
  d.sbm.blocks = preset::kBlocks;
  d.sbm.seed = seed;
  d.sbm.p_in = preset::kShowcasePIn;
  d.sbm.p_out = preset::kShowcasePOut;
  const std::uint32_t small_blocks = preset::kBlocks - 2;
  d.sbm.block_probs.assign(preset::kBlocks,
                           (1.0 - 2 * preset::kShowcaseBigBlockProb) / small_blocks);
  d.sbm.block_probs[0] = d.sbm.block_probs[1] = preset::kShowcaseBigBlockProb;

  d.classifier.mu = preset::kMu;
  d.classifier.sigma = preset::kSigma;
  auto& temps = d.classifier.per_block_temperature;
  temps.assign(preset::kBlocks, preset::kShowcaseFlatTemp);
  temps[0] = preset::kShowcaseBigTemp0;
  temps[1] = preset::kShowcaseBigTemp1;
  for (std::uint32_t b = 2; b < 2 + preset::kShowcaseSharpBlocks; ++b) {
    temps[b] = preset::kShowcaseSharpTemp;
  }

  auto [graph, labels] = generate_sbm(d.sbm);
  d.graph = std::move(graph);
  d.labels = std::move(labels);
  ProbabilityMatrix true_cond;
  d.probs = simulate_classifier(d.labels, d.classifier, seed, &true_cond,
                                d.sbm.block_probs);
  d.true_conditionals = std::move(true_cond);

  // Generation check: the graph must actually be homophilous.
  const double h = node_homophily_ratio(d.graph, d.labels);
  const double h_rand = expected_random_homophily(d.labels);
  if (!(h > h_rand)) {
    throw Error("showcase generation check failed: homophily " + std::to_string(h) +
                " not above random baseline " + std::to_string(h_rand));
  }
  return d;
}

// Exchangeable baseline: every block connects with the same probability and
// every temperature is 1, so evaluation and calibration scores are drawn
// from one distribution.
inline SyntheticDataset make_iid_baseline(std::uint64_t seed) {
  SyntheticDataset d;
  d.seed = seed;
  d.sbm.n = preset::kNodes;
  d.sbm.blocks = preset::kBlocks;
  d.sbm.seed = seed;
  d.sbm.p_in = preset::kIidEdgeProb;
  d.sbm.p_out = preset::kIidEdgeProb;
  d.sbm.block_probs.assign(preset::kBlocks, 1.0 / preset::kBlocks);

  d.classifier.mu = preset::kMu;
  d.classifier.sigma = preset::kSigma;
  d.classifier.per_block_temperature.assign(preset::kBlocks, 1.0);

  auto [graph, labels] = generate_sbm(d.sbm);
  d.graph = std::move(graph);
  d.labels = std::move(labels);
  ProbabilityMatrix true_cond;
  d.probs = simulate_classifier(d.labels, d.classifier, seed, &true_cond,
                                d.sbm.block_probs);
  d.true_conditionals = std::move(true_cond);
  return d;
}

}  // namespace naps
