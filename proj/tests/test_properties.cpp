#include <gtest/gtest.h>

#include <relucirc/gadgets.hpp>
#include <relucirc/poly.hpp>
#include <relucirc/search.hpp>
#include <relucirc/verify.hpp>

#include "naive.hpp"
#include "nets.hpp"

using namespace relucirc;

namespace {

// Rebuilds the net without the dropped neurons; requires every layer to keep one.
Mlp physically_pruned(const Mlp& m, const NeuronSet& keep) {
  std::vector<std::vector<std::size_t>> kept(m.num_layers());
  for (auto id : keep) kept[id.layer].push_back(id.index);
  Mlp r;
  r.output_activation = m.output_activation;
  for (auto& k : kept) r.layer_sizes.push_back(k.size());
  if (!m.input_weights.empty())
    for (auto i : kept[0]) r.input_weights.push_back(m.input_weights[i]);
  if (!m.input_biases.empty())
    for (auto i : kept[0]) r.input_biases.push_back(m.input_biases[i]);
  for (std::size_t l = 0; l + 1 < m.num_layers(); ++l) {
    std::vector<std::vector<Rational>> w;
    for (auto a : kept[l]) {
      std::vector<Rational> row;
      for (auto b : kept[l + 1]) row.push_back(m.weights[l][a][b]);
      w.push_back(row);
    }
    r.weights.push_back(w);
    std::vector<Rational> b;
    for (auto j : kept[l + 1]) b.push_back(m.biases[l][j]);
    r.biases.push_back(b);
  }
  return r;
}

NeuronSet random_keep(SplitMix64& rng, const Mlp& m) {
  NeuronSet keep;
  for (std::uint32_t l = 0; l < m.num_layers(); ++l) {
    bool any = false;
    for (std::uint32_t i = 0; i < m.layer_sizes[l]; ++i)
      if (m.is_output({l, i}) || rng.coin()) {
        keep.insert({l, i});
        any = true;
      }
    if (!any) keep.insert({l, static_cast<std::uint32_t>(rng.below(m.layer_sizes[l]))});
  }
  return keep;
}

}  // namespace

TEST(Properties, FullCircuitAlwaysSufficient) {
  SplitMix64 rng(71);
  for (int i = 0; i < 50; ++i) {
    Mlp m = random_mlp(rng);
    EXPECT_TRUE(check_sufficient(m, all_neurons(m), Coverage::global()).verdict);
  }
}

TEST(Properties, ZeroAblationEqualsPhysicalPruning) {
  SplitMix64 rng(72);
  for (int i = 0; i < 100; ++i) {
    Mlp m = random_mlp(rng);
    NeuronSet keep = random_keep(rng, m);
    Mlp pruned = physically_pruned(m, keep);
    for (auto& x : all_inputs(m.input_arity(), Caps{})) {
      BoolVec sub;
      for (auto id : keep)
        if (id.layer == 0) sub.push_back(x[id.index]);
      EXPECT_EQ(forward_masked(m, keep, x), forward(pruned, sub));
    }
  }
}

TEST(Properties, ZeroAblationOnGadgetInputLines) {
  // Gadgets give input neurons their own line weight and bias; pruning must respect them.
  auto ci = compile(ReductionKind::CliqueToMLCC, Graph(3, {{0, 1}, {1, 2}}), 2);
  SplitMix64 rng(73);
  for (int i = 0; i < 20; ++i) {
    NeuronSet keep = random_keep(rng, ci.mlp);
    Mlp pruned = physically_pruned(ci.mlp, keep);
    for (auto& x : all_inputs(ci.mlp.input_arity(), Caps{})) {
      BoolVec sub;
      for (auto id : keep)
        if (id.layer == 0) sub.push_back(x[id.index]);
      EXPECT_EQ(forward_masked(ci.mlp, keep, x), forward(pruned, sub));
    }
  }
}

TEST(Properties, PatchingWithOwnInputIsNoOp) {
  SplitMix64 rng(74);
  for (int i = 0; i < 50; ++i) {
    Mlp m = random_mlp(rng);
    BoolVec x = random_input(rng, m.input_arity());
    NeuronSet c;
    for (auto id : internal_neurons(m))
      if (rng.coin()) c.insert(id);
    EXPECT_EQ(forward_patched(m, c, x, x), forward(m, x));
  }
}

TEST(Properties, ComplementLaw) {
  SplitMix64 rng(75);
  for (int i = 0; i < 60; ++i) {
    Mlp m = random_mlp(rng);
    BoolVec x = random_input(rng, m.input_arity());
    NeuronSet H;
    for (auto id : all_neurons(m))
      if (!m.is_output(id)) H.insert(id);
    auto hids = H.ids();
    for (std::size_t k = 1; k <= H.size(); ++k) {
      bool some_ablation = false;
      for (std::uint64_t s = 1; s < (1ull << hids.size()); ++s) {
        if (static_cast<std::size_t>(std::popcount(s)) > k) continue;
        NeuronSet a;
        for (std::size_t j = 0; j < hids.size(); ++j)
          if (s >> j & 1) a.insert(hids[j]);
        try {
          some_ablation |= check_ablation(m, a, Coverage::local(x)).verdict;
        } catch (const PreconditionError&) {
        }
      }
      EXPECT_EQ(check_robust(m, H, k, Coverage::local(x)).verdict, !some_ablation);
    }
  }
}

TEST(Properties, RobustnessMonotoneInK) {
  SplitMix64 rng(76);
  for (int i = 0; i < 60; ++i) {
    Mlp m = random_mlp(rng);
    NeuronSet H = complement(m, io_neurons(m));
    if (H.size() < 2) continue;
    auto cov = rng.coin() ? Coverage::global() : Coverage::local(random_input(rng, m.input_arity()));
    for (std::size_t k = 2; k <= H.size(); ++k)
      if (check_robust(m, H, k, cov).verdict) {
        EXPECT_TRUE(check_robust(m, H, k - 1, cov).verdict);
      }
  }
}

TEST(Properties, GlobalIsLoopOverLocal) {
  SplitMix64 rng(77);
  for (int i = 0; i < 40; ++i) {
    Mlp m = random_mlp(rng);
    if (m.input_arity() > 6) continue;
    auto inputs = all_inputs(m.input_arity(), Caps{});
    NeuronSet c = random_keep(rng, m);
    for (auto id : io_neurons(m)) c.insert(id);
    NeuronSet s;
    for (auto id : internal_neurons(m))
      if (rng.coin()) s.insert(id);
    NeuronSet H = complement(m, io_neurons(m));
    int val = static_cast<int>(rng.below(2));
    auto each = [&](auto check) {
      bool all = true, any = false;
      for (auto& x : inputs) {
        bool v = check(Coverage::local(x));
        all &= v;
        any |= v;
      }
      EXPECT_EQ(check(Coverage::global()), all);
      EXPECT_EQ(check(Coverage::local_set(inputs)), all);
      return any;
    };
    bool any_suff = each([&](const Coverage& cov) { return check_sufficient(m, c, cov).verdict; });
    EXPECT_EQ(check_sufficient(m, c, Coverage::exists()).verdict, any_suff);
    bool any_clamp = each([&](const Coverage& cov) { return check_clamping(m, s, val, cov).verdict; });
    EXPECT_EQ(check_clamping(m, s, val, Coverage::exists()).verdict, any_clamp);
    bool any_nec = each([&](const Coverage& cov) { return check_necessary(m, s, cov).verdict; });
    EXPECT_EQ(check_necessary(m, s, Coverage::exists()).verdict, any_nec);
    try {
      bool any_abl = each([&](const Coverage& cov) { return check_ablation(m, s, cov).verdict; });
      EXPECT_EQ(check_ablation(m, s, Coverage::exists()).verdict, any_abl);
    } catch (const PreconditionError&) {
    }
    if (!H.empty()) each([&](const Coverage& cov) { return check_robust(m, H, 1, cov).verdict; });
  }
}

TEST(Properties, CountEqualsEnumerateAndOptimalIsMinimum) {
  SplitMix64 rng(78);
  for (int i = 0; i < 40; ++i) {
    Mlp m = random_mlp(rng);
    for (auto kind : {QueryKind::Sufficient, QueryKind::Ablation, QueryKind::Clamping, QueryKind::Patching,
                      QueryKind::Necessary, QueryKind::SufficientReason}) {
      auto q = naive::random_query(rng, m, kind);
      q.size_bound.reset();
      QuerySpec qm = q;
      qm.minimal = true;
      auto mins = enumerate_minimal(qm, m);
      EXPECT_EQ(count(qm, m).count, mins.size()) << kind_name(kind);
      auto opt = solve_optimal(q, m, Direction::Min);
      if (mins.empty()) {
        EXPECT_EQ(opt.status, SolveReport::Status::NotFound);
        continue;
      }
      std::size_t best = mins.front().size();
      for (auto& s : mins) best = std::min(best, s.size());
      EXPECT_EQ(opt.value, best) << kind_name(kind);
    }
  }
}

TEST(Properties, GnosticScanIsBruteForceFilter) {
  SplitMix64 rng(79);
  for (int i = 0; i < 50; ++i) {
    Mlp m = random_mlp(rng);
    auto q = naive::random_query(rng, m, QueryKind::Gnostic);
    NeuronSet g;
    for (auto id : all_neurons(m))
      if (check_gnostic(m, q.X, q.Y, q.t, {id}).verdict) g.insert(id);
    auto r = gnostic_scan(m, q.X, q.Y, q.t, q.k);
    EXPECT_EQ(r.has_value(), g.size() >= q.k);
    if (r) {
      EXPECT_EQ(*r, g);
    }
  }
}

TEST(Properties, EnumeratedSetsPassMinimalityCheck) {
  SplitMix64 rng(80);
  for (int i = 0; i < 30; ++i) {
    Mlp m = random_mlp(rng);
    auto cov = Coverage::local(random_input(rng, m.input_arity()));
    QuerySpec q;
    q.coverage = cov;
    auto prop = sufficiency_property(m, cov);
    for (auto& c : enumerate_minimal(q, m)) EXPECT_TRUE(check_minimal(c, prop, internal_neurons(m)).verdict);
  }
}
