#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "naps/harness.hpp"
#include "naps/synthetic.hpp"

namespace {

using naps::DatasetView;
using naps::ExperimentConfig;
using naps::ExperimentReport;
using naps::Graph;
using naps::Method;
using naps::Metrics;
using naps::NodeId;
using naps::NodeLabels;
using naps::ProbabilityMatrix;
using naps::run_experiment;

using Edge = std::pair<NodeId, NodeId>;

struct Fixture {
  Graph graph;
  NodeLabels labels;
  ProbabilityMatrix probs;
  DatasetView view() const { return {graph, labels, probs}; }
};

Fixture small_sbm(std::uint64_t seed) {
  naps::SbmConfig cfg;
  cfg.n = 300;
  cfg.blocks = 3;
  cfg.block_probs = {1.0 / 3, 1.0 / 3, 1.0 / 3};
  cfg.p_in = 0.08;
  cfg.p_out = 0.01;
  cfg.seed = seed;
  Fixture f;
  auto [g, labels] = naps::generate_sbm(cfg);
  f.graph = std::move(g);
  f.labels = std::move(labels);
  naps::ClassifierProfile clf;
  clf.mu = 2.0;
  clf.sigma = 1.0;
  clf.per_block_temperature = {1.0, 1.0, 1.0};
  f.probs = naps::simulate_classifier(f.labels, clf, seed);
  return f;
}

Fixture triangle_fixture() {
  Fixture f;
  f.graph = naps::build_graph(std::vector<Edge>{{0, 1}, {1, 2}, {0, 2}}, 3);
  f.labels = NodeLabels{{0, 0, 1}, 2};
  f.probs = ProbabilityMatrix{3, 2, {0.7, 0.3, 0.6, 0.4, 0.2, 0.8}};
  return f;
}

TEST(MethodNames, RoundTripAndErrors) {
  for (Method m : {Method::naive_aps, Method::naps, Method::naps_hop_decay,
                   Method::naps_alternating}) {
    EXPECT_EQ(naps::parse_method(naps::method_name(m)), m);
  }
  EXPECT_THROW(naps::parse_method("nope"), naps::InputError);
}

TEST(EvaluateSet, AgreesWithMaterializedSets) {
  const naps::rng::CounterRng r(naps::rng::derive(64, 2));
  for (std::uint64_t trial = 0; trial < 200; ++trial) {
    std::vector<double> row(6);
    double sum = 0.0;
    for (int c = 0; c < 6; ++c) {
      row[c] = 0.01 + r.unit_at(trial * 16 + c);
      sum += row[c];
    }
    for (auto& x : row) x /= sum;
    const double tau_draw = r.unit_at(trial * 16 + 8);
    const double tau = tau_draw < 0.1 ? 2.0 : tau_draw;  // sometimes the +inf path
    const double u = r.unit_at(trial * 16 + 9);
    const auto truth = static_cast<std::uint32_t>(r.bits_at(trial * 16 + 10) % 6);
    const auto outcome = naps::detail::evaluate_set(row, truth, tau, u);
    const auto set = naps::randomized_aps_set(row, tau, u);
    EXPECT_EQ(outcome.size, set.size()) << "trial " << trial;
    EXPECT_EQ(outcome.covered, std::binary_search(set.begin(), set.end(), truth))
        << "trial " << trial;
  }
}

TEST(RunExperiment, DegenerateSingleRepSingleEval) {
  const Fixture f = triangle_fixture();
  ExperimentConfig cfg;
  cfg.eval_batch = 1;
  cfg.repetitions = 1;
  cfg.k = 1;
  cfg.min_neighborhood = 1;
  const ExperimentReport report = run_experiment(f.view(), cfg);
  ASSERT_EQ(report.methods.size(), 2u);
  for (const auto& m : report.methods) {
    ASSERT_EQ(m.per_rep.size(), 1u);
    const Metrics& rep = m.per_rep[0];
    EXPECT_EQ(rep.n_eval, 1u);
    EXPECT_TRUE(rep.coverage == 0.0 || rep.coverage == 1.0);
    EXPECT_GE(rep.avg_size, 0.0);
    EXPECT_DOUBLE_EQ(m.mean.coverage, rep.coverage);
    EXPECT_TRUE(std::isnan(m.stddev.coverage));  // undefined at one repetition
  }
  EXPECT_EQ(report.n_eligible, 3u);
}

TEST(RunExperiment, SameSeedSameBytes) {
  const Fixture f = small_sbm(11);
  ExperimentConfig cfg;
  cfg.eval_batch = 40;
  cfg.repetitions = 6;
  cfg.min_neighborhood = 10;
  cfg.master_seed = 99;
  const auto a = run_experiment(f.view(), cfg);
  const auto b = run_experiment(f.view(), cfg);
  EXPECT_EQ(naps::write_report_csv(a), naps::write_report_csv(b));

  cfg.master_seed = 100;
  const auto c = run_experiment(f.view(), cfg);
  EXPECT_NE(naps::write_report_csv(a), naps::write_report_csv(c));
}

TEST(RunExperiment, ThreadCountNeverChangesBytes) {
  const Fixture f = small_sbm(12);
  ExperimentConfig cfg;
  cfg.eval_batch = 40;
  cfg.repetitions = 8;
  cfg.min_neighborhood = 10;
  cfg.master_seed = 7;
  cfg.methods = {Method::naive_aps, Method::naps, Method::naps_hop_decay};
  cfg.threads = 1;
  const std::string one = naps::write_report_csv(run_experiment(f.view(), cfg));
  cfg.threads = 4;
  const std::string four = naps::write_report_csv(run_experiment(f.view(), cfg));
  EXPECT_EQ(one, four);
  // The report must not record the thread count anywhere.
  EXPECT_EQ(one.find("threads"), std::string::npos);
}

TEST(RunExperiment, WholeGraphNeighborhoodReproducesNaive) {
  // Ring: connected, diameter 30; k = 200 makes every neighborhood the whole
  // graph minus the center, so weighted calibration sees exactly the naive
  // pool and every repetition's metrics coincide.
  const std::uint32_t n = 60;
  std::vector<Edge> edges;
  for (NodeId v = 0; v < n; ++v) edges.emplace_back(v, (v + 1) % n);
  Fixture f;
  f.graph = naps::build_graph(edges, n);
  const naps::rng::CounterRng r(naps::rng::derive(31, 9));
  f.labels.num_classes = 4;
  f.probs.rows = n;
  f.probs.classes = 4;
  for (NodeId v = 0; v < n; ++v) {
    f.labels.labels.push_back(static_cast<std::uint32_t>(r.bits_at(v) % 4));
    double row[4], sum = 0.0;
    for (int c = 0; c < 4; ++c) {
      row[c] = 0.05 + r.unit_at(1000 + v * 4 + c);
      sum += row[c];
    }
    for (int c = 0; c < 4; ++c) f.probs.values.push_back(row[c] / sum);
  }

  ExperimentConfig cfg;
  cfg.eval_batch = 10;
  cfg.repetitions = 5;
  cfg.k = 200;
  cfg.min_neighborhood = 1;
  cfg.master_seed = 3;
  const ExperimentReport report = run_experiment(f.view(), cfg);
  ASSERT_EQ(report.methods.size(), 2u);
  const auto& naive = report.methods[0];
  const auto& adaptive = report.methods[1];
  for (std::uint32_t rep = 0; rep < cfg.repetitions; ++rep) {
    EXPECT_EQ(naive.per_rep[rep].coverage, adaptive.per_rep[rep].coverage) << rep;
    EXPECT_EQ(naive.per_rep[rep].avg_size, adaptive.per_rep[rep].avg_size) << rep;
  }
}

TEST(RunExperiment, ValidationErrors) {
  const Fixture f = triangle_fixture();
  ExperimentConfig cfg;
  cfg.eval_batch = 1;
  cfg.repetitions = 1;
  cfg.k = 1;
  cfg.min_neighborhood = 1;

  auto bad = cfg;
  bad.alpha = 0.0;
  EXPECT_THROW(run_experiment(f.view(), bad), naps::InputError);
  bad = cfg;
  bad.k = 0;
  EXPECT_THROW(run_experiment(f.view(), bad), naps::InputError);
  bad = cfg;
  bad.methods.clear();
  EXPECT_THROW(run_experiment(f.view(), bad), naps::InputError);
  bad = cfg;
  bad.eval_batch = 3;  // leaves no pool
  EXPECT_THROW(run_experiment(f.view(), bad), naps::InputError);

  bad = cfg;
  bad.min_neighborhood = 50;
  try {
    run_experiment(f.view(), bad);
    FAIL() << "expected InputError";
  } catch (const naps::InputError& e) {
    EXPECT_NE(std::string(e.what()).find("lower min_neighborhood"), std::string::npos);
  }

  Fixture mismatched = triangle_fixture();
  mismatched.labels.labels.pop_back();
  EXPECT_THROW(run_experiment(mismatched.view(), cfg), naps::InputError);
}

TEST(Aggregate, MatchesRecomputedMoments) {
  const Fixture f = small_sbm(13);
  ExperimentConfig cfg;
  cfg.eval_batch = 30;
  cfg.repetitions = 10;
  cfg.min_neighborhood = 10;
  const ExperimentReport report = run_experiment(f.view(), cfg);
  for (const auto& m : report.methods) {
    double sum = 0.0;
    for (const Metrics& rep : m.per_rep) sum += rep.coverage;
    const double mean = sum / static_cast<double>(m.per_rep.size());
    EXPECT_DOUBLE_EQ(m.mean.coverage, mean);
    double sq = 0.0;
    for (const Metrics& rep : m.per_rep) sq += (rep.coverage - mean) * (rep.coverage - mean);
    EXPECT_DOUBLE_EQ(m.stddev.coverage,
                     std::sqrt(sq / static_cast<double>(m.per_rep.size() - 1)));
  }
}

TEST(Aggregate, SizeGivenCoverageSkipsUndefinedReps) {
  naps::MethodResult r;
  r.method = Method::naive_aps;
  Metrics a;
  a.coverage = 1.0;
  a.avg_size = 2.0;
  a.size_given_cov = 2.0;
  a.n_eval = 1;
  Metrics b;
  b.coverage = 0.0;
  b.avg_size = 3.0;
  b.size_given_cov = std::numeric_limits<double>::quiet_NaN();  // nothing covered
  b.n_eval = 1;
  Metrics c = a;
  c.size_given_cov = 4.0;
  r.per_rep = {a, b, c};
  naps::detail::aggregate(r);
  EXPECT_DOUBLE_EQ(r.mean.size_given_cov, 3.0);  // mean of {2, 4}
  EXPECT_DOUBLE_EQ(r.mean.avg_size, (2.0 + 3.0 + 2.0) / 3.0);
}

TEST(Accumulator, NothingCoveredLeavesSizeGivenCovUndefined) {
  naps::detail::MethodAccumulator acc;
  acc.add({false, 3});
  acc.add({false, 2});
  const Metrics m = acc.finish(2);
  EXPECT_DOUBLE_EQ(m.coverage, 0.0);
  EXPECT_DOUBLE_EQ(m.avg_size, 2.5);
  EXPECT_TRUE(std::isnan(m.size_given_cov));
}

TEST(ReportCsv, SchemaAndRowCount) {
  const Fixture f = small_sbm(14);
  ExperimentConfig cfg;
  cfg.eval_batch = 20;
  cfg.repetitions = 4;
  cfg.min_neighborhood = 5;
  cfg.methods = {Method::naive_aps, Method::naps};
  const std::string csv = naps::write_report_csv(run_experiment(f.view(), cfg));

  EXPECT_EQ(csv.rfind("# version=", 0), 0u);
  EXPECT_NE(csv.find("# rng=splitmix64-counter-v1\n"), std::string::npos);
  EXPECT_NE(csv.find("# fingerprint="), std::string::npos);
  EXPECT_NE(csv.find("method,rep,coverage,avg_size,size_given_cov,n_eval\n"),
            std::string::npos);

  std::size_t data_rows = 0, naive_rows = 0;
  std::size_t pos = 0;
  while (pos < csv.size()) {
    const std::size_t nl = csv.find('\n', pos);
    const std::string line = csv.substr(pos, nl - pos);
    if (!line.empty() && line[0] != '#' && line.rfind("method,", 0) != 0) {
      ++data_rows;
      if (line.rfind("naive_aps,", 0) == 0) ++naive_rows;
    }
    if (nl == std::string::npos) break;
    pos = nl + 1;
  }
  EXPECT_EQ(data_rows, 8u);  // 2 methods x 4 repetitions
  EXPECT_EQ(naive_rows, 4u);
}

TEST(ReportTable, AlignedAndLabeled) {
  const Fixture f = small_sbm(15);
  ExperimentConfig cfg;
  cfg.eval_batch = 20;
  cfg.repetitions = 3;
  cfg.min_neighborhood = 5;
  const std::string table = naps::render_report_table(run_experiment(f.view(), cfg));
  EXPECT_EQ(table.rfind("method", 0), 0u);
  EXPECT_NE(table.find("coverage"), std::string::npos);
  EXPECT_NE(table.find("size|covered"), std::string::npos);
  EXPECT_NE(table.find("naive_aps"), std::string::npos);
  EXPECT_NE(table.find("+-"), std::string::npos);
}

TEST(Summarize, TriangleStatistics) {
  const Fixture f = triangle_fixture();
  const auto s = naps::summarize_dataset(f.graph, f.labels, 1, 2);
  EXPECT_EQ(s.nodes, 3u);
  EXPECT_EQ(s.edges, 3u);
  EXPECT_EQ(s.num_classes, 2u);
  EXPECT_EQ(s.eligible, 3u);
  ASSERT_TRUE(s.homophily.has_value());
  EXPECT_DOUBLE_EQ(*s.homophily, 1.0 / 3.0);
  ASSERT_TRUE(s.random_homophily.has_value());
  EXPECT_DOUBLE_EQ(*s.random_homophily, 5.0 / 9.0);

  const std::string text = naps::render_summary(s, 1, 2);
  EXPECT_NE(text.find("nodes=3\n"), std::string::npos);
  EXPECT_NE(text.find("eligible_k1_min2=3\n"), std::string::npos);
}

TEST(Summarize, EdgelessGraphHasUndefinedHomophily) {
  const Graph g = naps::build_graph(std::vector<Edge>{}, 3);
  const NodeLabels labels{{0, 1, 0}, 2};
  const auto s = naps::summarize_dataset(g, labels, 2, 1);
  EXPECT_FALSE(s.homophily.has_value());
  EXPECT_EQ(s.eligible, 0u);
  const std::string text = naps::render_summary(s, 2, 1);
  EXPECT_NE(text.find("homophily=undefined\n"), std::string::npos);
}

}  // namespace
