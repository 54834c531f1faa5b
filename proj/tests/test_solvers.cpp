#include <gtest/gtest.h>

#include <relucirc/gadgets.hpp>
#include <relucirc/search.hpp>
#include <relucirc/verify.hpp>

#include "naive.hpp"
#include "nets.hpp"

using namespace relucirc;

namespace {

const Graph kK3(3, {{0, 1}, {1, 2}, {0, 2}});
const Graph kC4(4, {{0, 1}, {1, 2}, {2, 3}, {0, 3}});
const Graph kP3(3, {{0, 1}, {1, 2}});
const NeuronId kH1{1, 0}, kH2{1, 1};

QuerySpec query(QueryKind kind, Coverage cov) {
  QuerySpec q;
  q.kind = kind;
  q.coverage = std::move(cov);
  return q;
}

std::uint64_t binom_sum(std::size_t n, std::size_t k) {
  std::uint64_t total = 0, c = 1;
  for (std::size_t i = 0; i <= std::min(n, k); ++i) {
    total += c;
    c = c * (n - i) / (i + 1);
  }
  return total;
}

}  // namespace

TEST(Solve, CliqueTriangleFound) {
  auto ci = compile(ReductionKind::CliqueToMLSC, kK3, 2);
  EXPECT_EQ(*ci.query.size_bound, 5u);
  auto r = solve(ci.query, ci.mlp);
  ASSERT_EQ(r.status, SolveReport::Status::Found);
  EXPECT_EQ(r.witness->size(), 5u);
  EXPECT_TRUE(check_sufficient(ci.mlp, *r.witness, ci.query.coverage).verdict);
  EXPECT_EQ(decode(ci, *r.witness), (VertexSet{0, 1}));
}

TEST(Solve, FourCycleHasNoTriangle) {
  auto ci = compile(ReductionKind::CliqueToMLSC, kC4, 3);
  EXPECT_EQ(solve(ci.query, ci.mlp).status, SolveReport::Status::NotFound);
}

TEST(Solve, AblationOfSizeZeroNeverExists) {
  auto q = query(QueryKind::Ablation, Coverage::local({1}));
  q.size_bound = 0;
  EXPECT_EQ(solve(q, testnets::three_paths()).status, SolveReport::Status::NotFound);
}

TEST(Solve, ReportJsonShape) {
  auto ci = compile(ReductionKind::CliqueToMLSC, kK3, 2);
  auto j = to_json(solve(ci.query, ci.mlp));
  EXPECT_EQ(j["status"], "found");
  EXPECT_TRUE(j["witness"].is_array());
  EXPECT_TRUE(j.contains("explored"));
  EXPECT_TRUE(j.contains("forward_passes"));
}

TEST(Solve, PoolCapFailsLoudly) {
  Mlp m = testnets::dense({1, 30, 1}, {{std::vector<Rational>(30, 1)}, std::vector<std::vector<Rational>>(30, {1})},
                          {std::vector<Rational>(30, 0), {0}});
  EXPECT_THROW(solve(query(QueryKind::Sufficient, Coverage::local({1})), m), CapExceeded);
}

TEST(Count, PathMinimalCircuitsMatchCovers) {
  auto ci = compile(ReductionKind::MnlVcToMnlLSC, kP3, std::nullopt);
  auto r = count(ci.query, ci.mlp, verification_caps());
  EXPECT_EQ(r.status, SolveReport::Status::Count);
  EXPECT_EQ(r.count, 2u);
}

TEST(Count, OnlyFullCircuitIsSufficient) {
  auto q = query(QueryKind::Sufficient, Coverage::local({1}));
  q.minimal = true;
  EXPECT_EQ(count(q, testnets::chain()).count, 1u);
}

TEST(Count, VacuousGnosticCountsEveryNeuron) {
  auto q = query(QueryKind::Gnostic, Coverage::local({1}));
  q.t = 3;
  Mlp m = testnets::three_paths();
  EXPECT_EQ(count(q, m).count, m.total_neurons());
}

TEST(EnumerateMinimal, PathDecodesToBothCovers) {
  auto ci = compile(ReductionKind::MnlVcToMnlLSC, kP3, std::nullopt);
  auto all = enumerate_minimal(ci.query, ci.mlp, verification_caps());
  ASSERT_EQ(all.size(), 2u);
  std::set<VertexSet> decoded;
  for (auto& c : all) decoded.insert(decode(ci, c));
  EXPECT_EQ(decoded, (std::set<VertexSet>{{1}, {0, 2}}));
  auto prop = sufficiency_property(ci.mlp, ci.query.coverage);
  for (auto& c : all) EXPECT_TRUE(check_minimal(c, prop, internal_neurons(ci.mlp), 64).verdict);
}

TEST(EnumerateMinimal, NoProperSubcircuit) {
  auto q = query(QueryKind::Sufficient, Coverage::local({1}));
  Mlp m = testnets::chain();
  auto all = enumerate_minimal(q, m);
  ASSERT_EQ(all.size(), 1u);
  EXPECT_EQ(all.front(), all_neurons(m));
}

TEST(SolveOptimal, MinCliqueCircuit) {
  auto ci = compile(ReductionKind::CliqueToMLSC, kK3, 2);
  auto r = solve_optimal(ci.query, ci.mlp, Direction::Min);
  EXPECT_EQ(r.status, SolveReport::Status::Optimal);
  EXPECT_EQ(r.value, 5u);
}

TEST(SolveOptimal, MaxRobustnessOfParallelPaths) {
  // {h1,h2} is not an admissible ablation, so neither single nor double removal breaks the net.
  auto q = query(QueryKind::Robustness, Coverage::local({1}));
  q.region = {kH1, kH2};
  auto r = solve_optimal(q, testnets::parallel_paths(), Direction::Max);
  EXPECT_EQ(r.value, 2u);
  q.region = {kH1, kH2, {1, 2}};
  EXPECT_EQ(solve_optimal(q, testnets::three_paths(), Direction::Max).value, 1u);
}

TEST(SolveOptimal, ConstantOutputHasNoAblation) {
  auto q = query(QueryKind::Ablation, Coverage::local({1}));
  auto r = solve_optimal(q, testnets::constant_zero(), Direction::Min);
  EXPECT_EQ(r.status, SolveReport::Status::NotFound);
  EXPECT_FALSE(r.witness);
}

TEST(RobustnessFpt, LargeNetMatchesChecker) {
  SplitMix64 rng(41);
  std::vector<std::size_t> sizes{4, 32, 32, 31, 1};
  Mlp m;
  m.layer_sizes = sizes;
  for (std::size_t l = 1; l < sizes.size(); ++l) {
    m.weights.emplace_back(sizes[l - 1], std::vector<Rational>(sizes[l]));
    for (auto& row : m.weights.back())
      for (auto& w : row) w = rng.range(-2, 2);
    m.biases.emplace_back(sizes[l]);
    for (auto& b : m.biases.back()) b = rng.range(-1, 1);
  }
  ASSERT_EQ(m.total_neurons(), 100u);
  auto hidden = internal_neurons(m).ids();
  for (int t = 0; t < 10; ++t) {
    rng.shuffle(hidden);
    NeuronSet H{hidden[0], hidden[1], hidden[2]};
    BoolVec x = random_input(rng, m.input_arity());
    auto r = solve_robustness_fpt(m, H, 2, Coverage::local(x));
    EXPECT_EQ(*r.verdict, check_robust(m, H, 2, Coverage::local(x)).verdict);
    EXPECT_LE(r.explored, binom_sum(3, 2) - 1);
  }
}

TEST(RobustnessFpt, BreakingPairAndDeadNeuron) {
  Mlp m = testnets::three_paths();
  NeuronSet H{kH1, kH2, {1, 2}};
  auto r = solve_robustness_fpt(m, H, 3, Coverage::local({1}));
  EXPECT_FALSE(*r.verdict);
  EXPECT_EQ(r.witness, (NeuronSet{kH1, kH2}));
  Mlp dead = testnets::dense({1, 2, 1}, {{{1, 1}}, {{1}, {0}}}, {{0, 0}, {0}});
  EXPECT_TRUE(*solve_robustness_fpt(dead, {kH2}, 1, Coverage::global()).verdict);
}

TEST(Solvers, AgreeWithNaiveLoopsOnEveryKind) {
  SplitMix64 rng(42);
  for (int i = 0; i < 50; ++i) {
    Mlp m = random_mlp(rng);
    for (auto kind : naive::all_query_kinds()) {
      auto q = naive::random_query(rng, m, kind);
      auto bad = naive::compare(m, q);
      EXPECT_FALSE(bad) << kind_name(kind) << " net " << i << ": " << bad->what << "\n" << to_json(m).dump();
    }
  }
}

TEST(Solvers, ExploredRespectsSizeBound) {
  SplitMix64 rng(43);
  for (int i = 0; i < 30; ++i) {
    Mlp m = random_mlp(rng);
    auto q = query(QueryKind::Ablation, Coverage::local(random_input(rng, m.input_arity())));
    std::size_t k = rng.below(3);
    q.size_bound = k;
    auto r = solve(q, m);
    EXPECT_LE(r.explored, binom_sum(naive::pool(m, q).size(), k));
  }
}
