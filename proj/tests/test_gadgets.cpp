#include <gtest/gtest.h>

#include <relucirc/gadgets.hpp>
#include <relucirc/search.hpp>
#include <relucirc/verify.hpp>

#include "nets.hpp"

using namespace relucirc;
using testnets::tagged;

namespace {

const Graph kK2(2, {{0, 1}});
const Graph kK3(3, {{0, 1}, {1, 2}, {0, 2}});
const Graph kP3(3, {{0, 1}, {1, 2}});
const Graph kStar(3, {{0, 1}, {0, 2}});

BoolVec bits(std::uint64_t v, std::size_t n) {
  BoolVec x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = (v >> i) & 1;
  return x;
}

// A source solution for the kind, found with the oracles.
std::optional<VertexSet> source_solution(ReductionKind kind, const Source& src, std::size_t k) {
  switch (source_type(kind)) {
    case SourceType::HittingSet: {
      auto [s, w] = min_hitting_set(std::get<HittingSetInstance>(src));
      return s <= k ? std::optional(w) : std::nullopt;
    }
    case SourceType::Dnf: {
      auto w = min_tautology_subset(std::get<DnfFormula>(src), k);
      return w ? std::optional(VertexSet(w->begin(), w->end())) : std::nullopt;
    }
    case SourceType::Graph: break;
  }
  const Graph& g = std::get<Graph>(src);
  switch (kind) {
    case ReductionKind::CliqueToMLSC:
    case ReductionKind::CliqueToMLCA:
    case ReductionKind::CliqueToMLCC:
    case ReductionKind::CliqueToMSR: {
      auto c = max_clique(g);
      if (c.size() < k) return std::nullopt;
      c.resize(k);
      return c;
    }
    case ReductionKind::VcToMLSC:
    case ReductionKind::MnlVcToMnlLSC:
    case ReductionKind::VcToMGSC:
    case ReductionKind::MinVcToMinMLCA: {
      auto [s, w] = min_vertex_cover(g);
      return s <= k ? std::optional(w) : std::nullopt;
    }
    default: {
      auto [s, w] = min_dominating_set(g);
      return s <= k ? std::optional(w) : std::nullopt;
    }
  }
}

}  // namespace

TEST(Gates, Not) {
  Mlp m = gate_mlp(relu_not());
  EXPECT_EQ(forward(m, {0}), BoolVec{1});
  EXPECT_EQ(forward(m, {1}), BoolVec{0});
}

TEST(Gates, AndTruthTables) {
  for (std::size_t n : {1, 2, 3}) {
    Mlp m = gate_mlp(relu_and(n));
    for (std::uint64_t v = 0; v < (1ull << n); ++v)
      EXPECT_EQ(forward(m, bits(v, n))[0], v == (1ull << n) - 1) << n << " " << v;
  }
  EXPECT_THROW(relu_and(0), InvalidInput);
}

TEST(Gates, OrTruthTable) {
  Mlp m = relu_or(3);
  EXPECT_EQ(m.num_layers(), 4u);
  for (std::uint64_t v = 0; v < 8; ++v) EXPECT_EQ(forward(m, bits(v, 3))[0], v != 0) << v;
  EXPECT_THROW(relu_or(0), InvalidInput);
}

TEST(Bowtie, Counts) {
  for (std::size_t c : {1, 2, 3, 8}) {
    Graph b = bowtie(c);
    EXPECT_EQ(b.n, 2 * c + 2);
    EXPECT_EQ(b.edges.size(), 2 * c + 1);
  }
  EXPECT_THROW(bowtie(0), InvalidInput);
}

TEST(Bowtie, CentresAreTheUniqueMinimumCover) {
  for (std::size_t c : {1, 2, 3}) {
    auto [s, w] = min_vertex_cover(bowtie(c));
    EXPECT_EQ(s, 2u);
    EXPECT_EQ(w, (VertexSet{0, 1}));
  }
}

TEST(Bow, EdgeUnion) {
  Graph b = bow(kK2);
  EXPECT_EQ(b.n, 12u);
  EXPECT_EQ(b.edges.size(), 10u);
  EXPECT_TRUE(b.adjacent(0, 1));
  EXPECT_TRUE(b.adjacent(2, 3));
}

TEST(Bow, RejectsIsolatedVertex) {
  try {
    bow(Graph(3, {{0, 1}}));
    FAIL() << "expected InvalidInput";
  } catch (const InvalidInput& e) {
    EXPECT_NE(std::string(e.what()).find("vertex 2"), std::string::npos);
  }
}

TEST(Compile, CliqueTriangle) {
  auto ci = compile(ReductionKind::CliqueToMLSC, kK3, 3);
  EXPECT_EQ(ci.mlp.total_neurons(), 8u);
  EXPECT_EQ(ci.mlp.layer_sizes, (std::vector<std::size_t>{1, 3, 3, 1}));
  auto t = forward_trace(ci.mlp, {1});
  EXPECT_EQ(t.output, BoolVec{1});
  EXPECT_EQ(t.layers.back()[0], Rational(1));
  EXPECT_EQ(*ci.query.size_bound, 3u + 3u + 2u);
  EXPECT_EQ(*ci.query.depth_bound, 4u);
  EXPECT_EQ(*ci.query.width_bound, 3u);
  EXPECT_EQ(ci.provenance.size(), 8u);
  EXPECT_EQ(ci.provenance[1], "vertex:0");
}

TEST(Compile, DominatingSetAblationStar) {
  auto ci = compile(ReductionKind::DsToMLCA, kStar, 1);
  EXPECT_EQ(forward(ci.mlp, {1, 1, 1}), BoolVec{0});
  EXPECT_EQ(forward_masked(ci.mlp, all_neurons(ci.mlp).without({0, 0}), {1, 1, 1}), BoolVec{1});
  EXPECT_EQ(forward_masked(ci.mlp, all_neurons(ci.mlp).without({0, 1}), {1, 1, 1}), BoolVec{0});
}

TEST(Compile, HittingSetForcedInput) {
  HittingSetInstance h{3, {{0, 1}, {1, 2}}};
  auto ci = compile(ReductionKind::HsToMLNC, h, 1);
  EXPECT_EQ(forward(ci.mlp, {0}), BoolVec{1});
  EXPECT_EQ(ci.query.kind, QueryKind::Necessary);
}

TEST(Compile, MinVcSixLayers) {
  auto ci = compile(ReductionKind::MinVcToMinMLCA, kP3, std::nullopt);
  EXPECT_EQ(ci.mlp.num_layers(), 6u);
  EXPECT_EQ(ci.mlp.total_neurons(), 3u * 3 + 2u * 2 + 2);
}

TEST(Compile, ParameterErrors) {
  EXPECT_THROW(compile(ReductionKind::CliqueToMLSC, kK3, std::nullopt), InvalidInput);
  EXPECT_THROW(compile(ReductionKind::CliqueToMLSC, kK3, 4), InvalidInput);
  EXPECT_THROW(compile(ReductionKind::VcToMGSC, Graph(3, {{0, 1}}), 1), InvalidInput);
  EXPECT_THROW(compile(ReductionKind::HsToMLNC, kK3, 1), InvalidInput);
  DnfFormula not_taut{1, {{{0, true}}}};
  EXPECT_THROW(compile(ReductionKind::TdtToMGSC, not_taut, 1), InvalidInput);
}

TEST(Compile, InstanceJsonRoundTrip) {
  for (auto kind : all_reduction_kinds()) {
    SplitMix64 rng(kind_seed(61, kind));
    Source src = random_source(kind, rng);
    auto ks = feasible_k(kind, src);
    if (ks.empty()) continue;
    auto ci = compile(kind, src, needs_k(kind) ? std::optional(ks.front()) : std::nullopt);
    auto j = to_json(ci);
    EXPECT_TRUE(j.contains("provenance"));
    EXPECT_TRUE(j.contains("designated_inputs"));
    auto back = instance_from_json(j);
    EXPECT_EQ(to_json(back).dump(), j.dump()) << reduction_name(kind);
  }
}

TEST(Compile, KindNamesRoundTrip) {
  EXPECT_EQ(all_reduction_kinds().size(), 14u);
  for (auto kind : all_reduction_kinds()) EXPECT_EQ(reduction_from_name(reduction_name(kind)), kind);
  EXPECT_THROW(reduction_from_name("nope"), InvalidInput);
}

TEST(Decode, VertexCoverPath) {
  auto ci = compile(ReductionKind::VcToMLSC, kP3, 1);
  auto r = solve(ci.query, ci.mlp, verification_caps());
  ASSERT_TRUE(r.witness);
  EXPECT_TRUE(r.witness->contains(tagged(ci, "vertex:1")));
  EXPECT_EQ(decode(ci, *r.witness), (VertexSet{1}));
}

TEST(Decode, CliqueWitnessIsAnEdge) {
  auto ci = compile(ReductionKind::CliqueToMLSC, kK3, 2);
  auto r = solve(ci.query, ci.mlp);
  auto d = decode(ci, *r.witness);
  ASSERT_EQ(d.size(), 2u);
  EXPECT_TRUE(kK3.adjacent(d[0], d[1]));
}

TEST(Decode, FullNetworkGivesAllVertices) {
  auto ci = compile(ReductionKind::VcToMLSC, kP3, 3);
  EXPECT_EQ(decode(ci, all_neurons(ci.mlp)), (VertexSet{0, 1, 2}));
}

TEST(Decode, ForbiddenRoleAndUnknownNeuron) {
  auto ci = compile(ReductionKind::HsToMLNC, HittingSetInstance{3, {{0, 1}, {1, 2}}}, 1);
  EXPECT_THROW(decode(ci, {tagged(ci, "set:0")}), InvalidInput);
  EXPECT_THROW(decode(ci, {{9, 9}}), InvalidInput);
  EXPECT_EQ(decode(ci, {tagged(ci, "element:2")}), (VertexSet{2}));
}

TEST(Decode, TermNeedsBothNeurons) {
  DnfFormula f{1, {{{0, true}}, {{0, false}}}};
  auto ci = compile(ReductionKind::TdtToMGSC, f, 2);
  EXPECT_EQ(decode(ci, {tagged(ci, "term:0"), tagged(ci, "term_mod:0"), tagged(ci, "term:1")}), (VertexSet{0}));
}

TEST(Properties, RoundTripThroughForwardMapping) {
  for (auto kind : all_reduction_kinds()) {
    SplitMix64 rng(kind_seed(62, kind));
    for (int i = 0; i < 10; ++i) {
      Source src = random_source(kind, rng);
      for (auto k : feasible_k(kind, src)) {
        std::size_t kk = needs_k(kind) ? k : 1000;
        auto sol = source_solution(kind, src, kk);
        if (!sol) continue;
        auto ci = compile(kind, src, needs_k(kind) ? std::optional(k) : std::nullopt);
        EXPECT_EQ(decode(ci, encode_solution(ci, *sol)), *sol) << reduction_name(kind);
      }
    }
  }
}

TEST(Properties, EncodedSolutionsSatisfyTheQuery) {
  auto clique = compile(ReductionKind::CliqueToMLSC, kK3, 3);
  EXPECT_TRUE(check_sufficient(clique.mlp, encode_solution(clique, {0, 1, 2}), clique.query.coverage).verdict);
  auto vc = compile(ReductionKind::VcToMGSC, kP3, 1);
  EXPECT_TRUE(check_sufficient(vc.mlp, encode_solution(vc, {1}), vc.query.coverage).verdict);
  auto ds = compile(ReductionKind::DsToMLCP, kStar, 1);
  EXPECT_TRUE(check_patching(ds.mlp, encode_solution(ds, {0}), ds.query.donor, ds.query.coverage.xs).verdict);
  auto hs = compile(ReductionKind::HsToMLNC, HittingSetInstance{3, {{0, 1}, {1, 2}}}, 1);
  EXPECT_TRUE(check_necessary(hs.mlp, encode_solution(hs, {1}), hs.query.coverage).verdict);
}

TEST(Properties, SizeFormulas) {
  for (auto kind : all_reduction_kinds()) {
    SplitMix64 rng(kind_seed(63, kind));
    for (int i = 0; i < 10; ++i) {
      Source src = random_source(kind, rng);
      auto ks = feasible_k(kind, src);
      if (ks.empty()) continue;
      auto ci = compile(kind, src, needs_k(kind) ? std::optional(ks.front()) : std::nullopt);
      EXPECT_EQ(ci.mlp.total_neurons(), expected_neuron_count(kind, src)) << reduction_name(kind);
      EXPECT_EQ(ci.provenance.size(), ci.mlp.total_neurons());
      for (auto& tag : ci.provenance) EXPECT_FALSE(tag.empty());
      EXPECT_TRUE(validate(ci.mlp).empty());
    }
  }
}

TEST(Properties, BehaviorTablesMatch) {
  for (auto kind : all_reduction_kinds()) {
    SplitMix64 rng(kind_seed(64, kind));
    for (int i = 0; i < 10; ++i) {
      Source src = random_source(kind, rng);
      auto ks = feasible_k(kind, src);
      if (ks.empty()) continue;
      auto ci = compile(kind, src, needs_k(kind) ? std::optional(ks.back()) : std::nullopt);
      auto v = verify_behavior(ci, src);
      EXPECT_TRUE(v.passed) << reduction_name(kind) << ": " << v.mismatch_detail.value_or("");
    }
  }
}
