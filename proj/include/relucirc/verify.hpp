#pragma once

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include "gadgets.hpp"
#include "rng.hpp"
#include "search.hpp"

namespace relucirc {

struct VerificationVerdict {
  enum class Kind { IffCorrespondence, ParsimonyBijection, BehaviorTable };
  Kind kind = Kind::IffCorrespondence;
  bool passed = false;
  json source_value;
  json target_value;
  std::optional<std::string> mismatch_detail;
};

inline std::string verdict_kind_name(VerificationVerdict::Kind k) {
  switch (k) {
    case VerificationVerdict::Kind::IffCorrespondence: return "iff";
    case VerificationVerdict::Kind::ParsimonyBijection: return "parsimony";
    default: return "behavior";
  }
}

inline json to_json(const VerificationVerdict& v) {
  json j = {{"kind", verdict_kind_name(v.kind)},
            {"passed", v.passed},
            {"source_value", v.source_value},
            {"target_value", v.target_value}};
  if (v.mismatch_detail) j["mismatch_detail"] = *v.mismatch_detail;
  return j;
}

inline VerificationVerdict verdict_from_json(const json& j) {
  if (!j.is_object() || !j.contains("passed") || !j["passed"].is_boolean() || !j.contains("kind") ||
      !j["kind"].is_string())
    throw InvalidInput("verdict: needs boolean 'passed' and string 'kind'");
  VerificationVerdict v;
  auto k = j["kind"].get<std::string>();
  if (k == "iff")
    v.kind = VerificationVerdict::Kind::IffCorrespondence;
  else if (k == "parsimony")
    v.kind = VerificationVerdict::Kind::ParsimonyBijection;
  else if (k == "behavior")
    v.kind = VerificationVerdict::Kind::BehaviorTable;
  else
    throw InvalidInput("verdict: unknown kind '" + k + "'");
  v.passed = j["passed"].get<bool>();
  v.source_value = j.value("source_value", json());
  v.target_value = j.value("target_value", json());
  if (j.contains("mismatch_detail")) v.mismatch_detail = j["mismatch_detail"].get<std::string>();
  return v;
}

// ---- source oracles ----

inline bool source_answer(ReductionKind kind, const Source& src, std::size_t k) {
  switch (source_type(kind)) {
    case SourceType::HittingSet: return min_hitting_set(std::get<HittingSetInstance>(src)).first <= k;
    case SourceType::Dnf: return min_tautology_subset(std::get<DnfFormula>(src), k).has_value();
    case SourceType::Graph: break;
  }
  const Graph& g = std::get<Graph>(src);
  switch (kind) {
    case ReductionKind::CliqueToMLSC:
    case ReductionKind::CliqueToMLCA:
    case ReductionKind::CliqueToMLCC:
    case ReductionKind::CliqueToMSR: return has_clique(g, k);
    case ReductionKind::VcToMLSC:
    case ReductionKind::VcToMGSC:
    case ReductionKind::MnlVcToMnlLSC:
    case ReductionKind::MinVcToMinMLCA: return min_vertex_cover(g).first <= k;
    default: return min_dominating_set(g).first <= k;
  }
}

// Parameters k for which the construction is defined on this source.
inline std::vector<std::size_t> feasible_k(ReductionKind kind, const Source& src) {
  std::vector<std::size_t> ks;
  if (kind == ReductionKind::HsToMLNC) {
    auto& h = std::get<HittingSetInstance>(src);
    if (h.sets.empty()) return ks;
    for (std::size_t k = 1; k <= h.universe_size; ++k) ks.push_back(k);
    return ks;
  }
  if (kind == ReductionKind::TdtToMGSC) {
    auto& f = std::get<DnfFormula>(src);
    for (std::size_t k = 1; k <= f.terms.size(); ++k) ks.push_back(k);
    return ks;
  }
  const Graph& g = std::get<Graph>(src);
  std::size_t E = g.edges.size();
  switch (kind) {
    case ReductionKind::CliqueToMLSC:
    case ReductionKind::CliqueToMSR:
      for (std::size_t k = 2; k <= g.n; ++k)
        if (E >= 1 && k * (k - 1) / 2 <= E) ks.push_back(k);
      break;
    case ReductionKind::CliqueToMLCA:
    case ReductionKind::CliqueToMLCC:
      for (std::size_t k = 2; k <= g.n && E >= 1; ++k) ks.push_back(k);
      break;
    case ReductionKind::VcToMLSC:
    case ReductionKind::VcToMGSC:
      for (std::size_t k = 1; k <= g.n && E >= 1; ++k) ks.push_back(k);
      break;
    case ReductionKind::DsToMLCA:
      for (std::size_t k = 1; k <= g.n && E >= 1; ++k) ks.push_back(k);
      break;
    case ReductionKind::MnlVcToMnlLSC:
    case ReductionKind::MinVcToMinMLCA:
      if (E >= 1) ks.push_back(0);
      break;
    default:
      for (std::size_t k = 1; k <= g.n; ++k) ks.push_back(k);
  }
  return ks;
}

// ---- behaviour tables ----

// Expected per-layer pattern on one designated input, written from the
// construction's timestep tables rather than from the compiler.
struct ExpectedTable {
  BoolVec input;
  std::vector<std::vector<int>> layers;  // all layers except the output
  int output = 0;
  std::optional<long> output_pre;
};

namespace detail {

inline std::vector<int> rep(std::size_t n, int v) { return std::vector<int>(n, v); }

inline std::vector<int> cat(std::vector<int> a, const std::vector<int>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

}  // namespace detail

inline std::vector<ExpectedTable> expected_tables(ReductionKind kind, const Source& src, std::optional<std::size_t> k) {
  using detail::rep;
  std::vector<ExpectedTable> out;
  if (kind == ReductionKind::TdtToMGSC) {
    auto& f = std::get<DnfFormula>(src);
    std::size_t V = f.var_count;
    for (std::uint64_t a = 0; a < (1ull << V); ++a) {
      ExpectedTable t;
      std::vector<int> x(V), nx(V), terms;
      for (std::size_t i = 0; i < V; ++i) {
        x[i] = (a >> i) & 1;
        nx[i] = 1 - x[i];
        t.input.push_back(static_cast<std::uint8_t>(x[i]));
      }
      long sat = 0;
      for (auto& term : f.terms) {
        terms.push_back(term_satisfied(term, a));
        sat += terms.back();
      }
      t.layers = {x, detail::cat(x, nx), detail::cat(terms, {1}), terms};
      t.output = 1;
      t.output_pre = sat;
      out.push_back(t);
    }
    return out;
  }
  if (kind == ReductionKind::HsToMLNC) {
    auto& h = std::get<HittingSetInstance>(src);
    out.push_back({{0}, {{1}, rep(h.universe_size, 1), rep(h.sets.size(), 1)}, 1, static_cast<long>(h.sets.size())});
    return out;
  }
  const Graph& g = std::get<Graph>(src);
  std::size_t n = g.n, E = g.edges.size();
  long need = k ? static_cast<long>(*k * (*k - 1) / 2) : 0;
  switch (kind) {
    case ReductionKind::CliqueToMLSC:
      out.push_back({{1}, {{1}, rep(n, 1), rep(E, 1)}, 1, static_cast<long>(E) - (need - 1)});
      break;
    case ReductionKind::VcToMLSC:
    case ReductionKind::MnlVcToMnlLSC:
      out.push_back({{1}, {{1}, rep(n, 0), rep(E, 0), rep(E, 1)}, 1, 1});
      break;
    case ReductionKind::VcToMGSC: {
      Graph b = bow(g);
      std::size_t n2 = b.n, E2 = b.edges.size();
      out.push_back({{1}, {{1}, rep(n2, 0), rep(E2, 0), rep(E2, 1)}, 1, 1});
      out.push_back({{0}, {{0}, rep(n2, 1), rep(E2, 1), rep(E2, 0)}, 0, -static_cast<long>(E2 - 1)});
      break;
    }
    case ReductionKind::CliqueToMLCA:
      out.push_back({{1}, {{1}, rep(2 * n, 1), rep(n, 0), rep(E, 0)}, 0, -(need - 1)});
      break;
    case ReductionKind::DsToMLCA:
    case ReductionKind::DsToMLCC:
      out.push_back({BoolVec(n, 1), {rep(n, 1), rep(n, 1), rep(n, 0)}, 0, -static_cast<long>(n - 1)});
      break;
    case ReductionKind::CliqueToMLCC:
      out.push_back({BoolVec(n, 0), {rep(n, 0), rep(E, 0)}, 0, -(need - 1)});
      break;
    case ReductionKind::DsToMLCP:
      out.push_back({BoolVec(n, 1), {rep(n, 1), rep(n, 1), rep(n, 1), rep(n, 0)}, 0, -static_cast<long>(n - 1)});
      out.push_back({BoolVec(n, 0), {rep(n, 0), rep(n, 0), rep(n, 0), rep(n, 1)}, 1, 1});
      break;
    case ReductionKind::CliqueToMSR:
      out.push_back({BoolVec(n, 1), {rep(n, 1), rep(E, 1)}, 1, static_cast<long>(E) - (need - 1)});
      break;
    case ReductionKind::DsToMSR:
      out.push_back({BoolVec(n, 0), {rep(n, 0), rep(n, 0), rep(n, 1)}, 1, 1});
      break;
    case ReductionKind::MinVcToMinMLCA:
      out.push_back({{1}, {{1}, rep(2 * n, 1), rep(n, 1), rep(E, 1), rep(E, 0)}, 0, -static_cast<long>(E - 1)});
      break;
    default: break;
  }
  return out;
}

// Stated neuron totals of each construction.
inline std::size_t expected_neuron_count(ReductionKind kind, const Source& src) {
  if (kind == ReductionKind::TdtToMGSC) {
    auto& f = std::get<DnfFormula>(src);
    return 3 * f.var_count + 2 * f.terms.size() + 2;
  }
  if (kind == ReductionKind::HsToMLNC) {
    auto& h = std::get<HittingSetInstance>(src);
    return h.universe_size + h.sets.size() + 2;
  }
  const Graph& g = std::get<Graph>(src);
  std::size_t n = g.n, E = g.edges.size();
  switch (kind) {
    case ReductionKind::CliqueToMLSC: return n + E + 2;
    case ReductionKind::VcToMLSC:
    case ReductionKind::MnlVcToMnlLSC: return n + 2 * E + 2;
    case ReductionKind::VcToMGSC: {
      Graph b = bow(g);
      return b.n + 2 * b.edges.size() + 2;
    }
    case ReductionKind::CliqueToMLCA: return 3 * n + E + 2;
    case ReductionKind::CliqueToMLCC:
    case ReductionKind::CliqueToMSR: return n + E + 1;
    case ReductionKind::DsToMLCP: return 4 * n + 1;
    case ReductionKind::MinVcToMinMLCA: return 3 * n + 2 * E + 2;
    default: return 3 * n + 1;
  }
}

inline VerificationVerdict verify_behavior(const CompiledInstance& ci, const Source& src) {
  VerificationVerdict v;
  v.kind = VerificationVerdict::Kind::BehaviorTable;
  std::ostringstream err;
  std::size_t want_n = expected_neuron_count(ci.kind, src);
  if (ci.mlp.total_neurons() != want_n)
    err << "neuron count " << ci.mlp.total_neurons() << " != " << want_n << "; ";
  auto tables = expected_tables(ci.kind, src, ci.k);
  Evaluator ev(ci.mlp);
  std::size_t rows = 0, good = 0;
  for (auto& t : tables) {
    ++rows;
    auto tr = ev.trace(t.input);
    bool ok = tr.layers.size() == t.layers.size() + 1;
    for (std::size_t l = 0; ok && l < t.layers.size(); ++l) {
      if (tr.layers[l].size() != t.layers[l].size()) {
        ok = false;
        break;
      }
      for (std::size_t i = 0; i < t.layers[l].size(); ++i)
        if (tr.layers[l][i] != t.layers[l][i]) {
          err << "input " << to_json(t.input).dump() << ": neuron " << l << "," << i << " = "
              << to_string(tr.layers[l][i]) << ", expected " << t.layers[l][i] << "; ";
          ok = false;
        }
    }
    if (ok && tr.output.size() == 1 && tr.output[0] != t.output) {
      err << "input " << to_json(t.input).dump() << ": output " << int(tr.output[0]) << "; ";
      ok = false;
    }
    if (ok && t.output_pre && tr.layers.back()[0] != Rational(*t.output_pre)) {
      err << "input " << to_json(t.input).dump() << ": output pre-activation " << to_string(tr.layers.back()[0])
          << ", expected " << *t.output_pre << "; ";
      ok = false;
    }
    if (!ok && err.tellp() == 0) err << "layer shape mismatch; ";
    good += ok;
  }
  v.source_value = rows;
  v.target_value = good;
  v.passed = rows == good && ci.mlp.total_neurons() == want_n && rows > 0;
  if (!v.passed) v.mismatch_detail = err.str().empty() ? "no table rows" : err.str();
  return v;
}

// ---- iff correspondence and parsimony ----

inline Caps verification_caps() {
  Caps c;
  c.max_pool = 64;
  c.max_deletable = 64;
  return c;
}

// Runs the source oracle and the target solver. `override_mlp` replaces the
// compiled net (for corrupted-instance negative controls).
inline VerificationVerdict verify_reduction(ReductionKind kind, const Source& src, std::optional<std::size_t> k,
                                            const std::optional<Mlp>& override_mlp = std::nullopt,
                                            const Caps& caps = verification_caps()) {
  VerificationVerdict v;
  auto ci = compile(kind, src, k);
  if (override_mlp) ci.mlp = *override_mlp;
  if (kind == ReductionKind::MinVcToMinMLCA) {
    std::size_t tau = min_vertex_cover(std::get<Graph>(src)).first;
    auto r = solve_optimal(ci.query, ci.mlp, Direction::Min, caps);
    v.source_value = tau;
    v.target_value = r.status == SolveReport::Status::Optimal ? json(r.value) : json("none");
    v.passed = r.status == SolveReport::Status::Optimal && r.value == tau;
    if (!v.passed) v.mismatch_detail = "min vertex cover " + std::to_string(tau) + " vs min ablation " + v.target_value.dump();
    return v;
  }
  if (kind == ReductionKind::MnlVcToMnlLSC) throw InvalidInput("mnlvc-mnllsc is verified with verify-parsimony");
  bool s = source_answer(kind, src, *k);
  auto r = solve(ci.query, ci.mlp, caps);
  bool t = r.status == SolveReport::Status::Found;
  v.source_value = s;
  v.target_value = t;
  v.passed = s == t;
  if (!v.passed) {
    std::string d = reduction_name(kind) + " k=" + std::to_string(*k) + ": source " + (s ? "yes" : "no") +
                    ", target " + (t ? "yes" : "no");
    if (r.witness) d += " (witness " + to_json(*r.witness).dump() + ")";
    v.mismatch_detail = d;
  }
  return v;
}

inline std::string family_string(const std::vector<VertexSet>& f) {
  std::string s = "{";
  for (std::size_t i = 0; i < f.size(); ++i) {
    s += i ? ",{" : "{";
    for (std::size_t j = 0; j < f[i].size(); ++j) s += (j ? "," : "") + std::to_string(f[i][j]);
    s += "}";
  }
  return s + "}";
}

inline VerificationVerdict verify_parsimony(const Graph& g, const std::optional<Mlp>& override_mlp = std::nullopt,
                                            const Caps& caps = verification_caps()) {
  VerificationVerdict v;
  v.kind = VerificationVerdict::Kind::ParsimonyBijection;
  if (g.n > 6) throw CapExceeded("verify-parsimony supports at most 6 vertices");
  auto covers = enumerate_minimal_vertex_covers(g);
  std::set<VertexSet> want(covers.begin(), covers.end());
  if (g.edges.empty()) {
    v.source_value = 1;
    v.target_value = 1;
    v.passed = true;
    v.mismatch_detail = "vacuous: edgeless graph, both families are {{}}";
    return v;
  }
  auto ci = compile(ReductionKind::MnlVcToMnlLSC, g, std::nullopt);
  if (override_mlp) ci.mlp = *override_mlp;
  auto circuits = enumerate_minimal(ci.query, ci.mlp, caps);
  std::set<VertexSet> got;
  for (auto& c : circuits) got.insert(decode(ci, c));
  v.source_value = covers.size();
  v.target_value = circuits.size();
  v.passed = got == want && circuits.size() == covers.size();
  if (!v.passed)
    v.mismatch_detail = "minimal covers " + family_string({want.begin(), want.end()}) + " vs decoded circuits " +
                        family_string({got.begin(), got.end()}) + " (" + std::to_string(circuits.size()) +
                        " circuits)";
  else
    v.source_value = family_string({want.begin(), want.end()});
  if (v.passed) v.target_value = v.source_value;
  return v;
}

// ---- source generators ----

// All non-isomorphic simple graphs with n vertices (n <= 6), canonical by
// minimal edge bitmask over all vertex permutations.
inline std::vector<Graph> nonisomorphic_graphs(std::size_t n) {
  if (n > 6) throw CapExceeded("graph enumeration supports at most 6 vertices");
  std::vector<std::pair<std::size_t, std::size_t>> slots;
  for (std::size_t u = 0; u < n; ++u)
    for (std::size_t v = u + 1; v < n; ++v) slots.push_back({u, v});
  std::vector<std::vector<std::size_t>> perm_slot;
  std::vector<std::size_t> p(n);
  for (std::size_t i = 0; i < n; ++i) p[i] = i;
  do {
    std::vector<std::size_t> ps;
    for (auto [u, v] : slots) {
      auto a = std::min(p[u], p[v]), b = std::max(p[u], p[v]);
      ps.push_back(std::find(slots.begin(), slots.end(), std::make_pair(a, b)) - slots.begin());
    }
    perm_slot.push_back(ps);
  } while (std::next_permutation(p.begin(), p.end()));
  std::set<std::uint64_t> seen;
  std::vector<Graph> out;
  for (std::uint64_t mask = 0; mask < (1ull << slots.size()); ++mask) {
    std::uint64_t canon = ~0ull;
    for (auto& ps : perm_slot) {
      std::uint64_t m = 0;
      for (std::size_t s = 0; s < slots.size(); ++s)
        if (mask >> s & 1) m |= 1ull << ps[s];
      canon = std::min(canon, m);
    }
    if (!seen.insert(canon).second) continue;
    Graph g;
    g.n = n;
    for (std::size_t s = 0; s < slots.size(); ++s)
      if (canon >> s & 1) g.edges.push_back(slots[s]);
    g.normalize();
    out.push_back(g);
  }
  return out;
}

inline std::vector<Graph> small_graph_universe(std::size_t max_n = 5) {
  std::vector<Graph> all;
  for (std::size_t n = 1; n <= max_n; ++n)
    for (auto& g : nonisomorphic_graphs(n)) all.push_back(g);
  return all;
}

inline Graph random_graph(SplitMix64& rng, std::size_t n, std::uint64_t p_num = 1, std::uint64_t p_den = 2) {
  Graph g;
  g.n = n;
  for (std::size_t u = 0; u < n; ++u)
    for (std::size_t v = u + 1; v < n; ++v)
      if (rng.below(p_den) < p_num) g.edges.push_back({u, v});
  g.normalize();
  return g;
}

// Random graph with 1..max_edges edges and no isolated vertex.
inline Graph random_graph_no_isolated(SplitMix64& rng, std::size_t max_edges) {
  std::size_t m = 1 + rng.below(max_edges);
  std::size_t n = 2 + rng.below(2 * m - 1);
  while (n * (n - 1) / 2 < m) ++n;
  while (true) {
    Graph g;
    g.n = n;
    while (g.edges.size() < m) {
      std::size_t u = rng.below(n), w = rng.below(n);
      if (u == w) continue;
      g.add_edge(u, w);
      g.normalize();
    }
    if (!g.isolated_vertex()) return g;
  }
}

inline HittingSetInstance random_hs(SplitMix64& rng, std::size_t max_universe = 5, std::size_t max_sets = 4) {
  HittingSetInstance h;
  h.universe_size = 1 + rng.below(max_universe);
  std::size_t c = 1 + rng.below(max_sets);
  for (std::size_t j = 0; j < c; ++j) {
    VertexSet s;
    while (s.empty())
      for (std::size_t e = 0; e < h.universe_size; ++e)
        if (rng.coin()) s.push_back(e);
    h.sets.push_back(s);
  }
  return h;
}

// Tautology from a random decision tree over at most max_vars variables
// (each leaf path becomes a term of 1..3 literals), plus 0..2 random extra terms.
inline DnfFormula random_tautology(SplitMix64& rng, std::size_t max_vars = 3) {
  DnfFormula f;
  f.var_count = 1 + rng.below(max_vars);
  std::vector<std::size_t> order(f.var_count);
  for (std::size_t i = 0; i < f.var_count; ++i) order[i] = i;
  rng.shuffle(order);
  std::vector<std::vector<Literal>> stack = {{}};
  while (!stack.empty()) {
    auto path = stack.back();
    stack.pop_back();
    bool split = path.size() < std::min<std::size_t>(3, f.var_count) && (path.empty() || rng.coin());
    if (!split) {
      f.terms.push_back(path);
      continue;
    }
    std::size_t v = order[path.size()];
    for (bool pos : {false, true}) {
      auto q = path;
      q.push_back({v, pos});
      stack.push_back(q);
    }
  }
  std::size_t extra = rng.below(3);
  for (std::size_t e = 0; e < extra; ++e) {
    std::vector<Literal> t;
    std::size_t len = 1 + rng.below(std::min<std::size_t>(3, f.var_count));
    auto vars = order;
    rng.shuffle(vars);
    for (std::size_t i = 0; i < len; ++i) t.push_back({vars[i], rng.coin()});
    f.terms.push_back(t);
  }
  return f;
}

// Random source that satisfies the kind's construction preconditions.
inline Source random_source(ReductionKind kind, SplitMix64& rng) {
  switch (source_type(kind)) {
    case SourceType::HittingSet: return random_hs(rng);
    case SourceType::Dnf: return random_tautology(rng);
    case SourceType::Graph: break;
  }
  if (kind == ReductionKind::VcToMGSC) return random_graph_no_isolated(rng, 2);
  while (true) {
    Graph g = random_graph(rng, 2 + rng.below(4));
    if (!feasible_k(kind, g).empty()) return g;
  }
}

// ---- random nets ----

struct RandomNetOptions {
  std::size_t max_neurons = 10;
  std::size_t max_layers = 4;
  long max_abs_weight = 2;
  long max_abs_bias = 1;
  std::uint64_t zero_weight_permille = 300;
};

inline Mlp random_mlp(SplitMix64& rng, const RandomNetOptions& o = {}) {
  std::size_t L = 3 + rng.below(o.max_layers - 2);
  std::vector<std::size_t> sizes(L, 1);
  std::size_t budget = std::max<std::size_t>(o.max_neurons, L) - L;
  sizes[0] += rng.below(std::min<std::size_t>(budget, 2) + 1);
  budget -= sizes[0] - 1;
  for (std::size_t l = 1; l + 1 < L && budget > 0; ++l) {
    std::size_t extra = rng.below(std::min<std::size_t>(budget, 3) + 1);
    sizes[l] += extra;
    budget -= extra;
  }
  if (budget > 0 && rng.coin()) sizes[L - 1] += 1;
  Mlp m;
  m.layer_sizes = sizes;
  for (std::size_t l = 1; l < L; ++l) {
    std::vector<std::vector<Rational>> w(sizes[l - 1], std::vector<Rational>(sizes[l]));
    for (auto& row : w)
      for (auto& x : row)
        x = rng.below(1000) < o.zero_weight_permille ? 0 : rng.range(-o.max_abs_weight, o.max_abs_weight);
    m.weights.push_back(w);
    std::vector<Rational> b(sizes[l]);
    for (auto& x : b) x = rng.range(-o.max_abs_bias, o.max_abs_bias);
    m.biases.push_back(b);
  }
  return m;
}

inline BoolVec random_input(SplitMix64& rng, std::size_t n) {
  BoolVec x(n);
  for (auto& b : x) b = rng.coin();
  return x;
}

// ---- sweeps and reports ----

struct SweepOptions {
  std::size_t per_kind = 5;
  std::uint64_t seed = 0;
  std::size_t jobs = 1;
};

// Deterministic per-kind stream: seed mixed with the kind index.
inline std::uint64_t kind_seed(std::uint64_t seed, ReductionKind kind) {
  SplitMix64 r(seed ^ (0xA5A5A5A5ull * (static_cast<std::uint64_t>(kind) + 1)));
  return r.next();
}

inline json sweep_kind(ReductionKind kind, const SweepOptions& o) {
  SplitMix64 rng(kind_seed(o.seed, kind));
  json rows = json::array();
  for (std::size_t i = 0; i < o.per_kind; ++i) {
    Source src = random_source(kind, rng);
    json row;
    json source_json = std::visit([](const auto& s) { return to_json(s); }, src);
    row["source"] = source_json;
    try {
      if (kind == ReductionKind::MnlVcToMnlLSC) {
        row["verdict"] = to_json(verify_parsimony(std::get<Graph>(src)));
      } else {
        auto ks = feasible_k(kind, src);
        std::optional<std::size_t> k;
        if (kind != ReductionKind::MinVcToMinMLCA) k = ks[rng.below(ks.size())];
        if (k) row["k"] = *k;
        auto ci = compile(kind, src, k);
        row["behavior"] = to_json(verify_behavior(ci, src));
        row["verdict"] = to_json(verify_reduction(kind, src, k));
      }
    } catch (const CapExceeded& e) {
      row["verdict"] = to_json(VerificationVerdict{VerificationVerdict::Kind::IffCorrespondence, false, "cap", "cap",
                                                   std::string("cap exceeded: ") + e.what()});
    }
    rows.push_back(row);
  }
  return {{"kind", reduction_name(kind)}, {"seed", o.seed}, {"rows", rows}};
}

// One file per kind, written as <dir>/<kind>.json. Kinds run on a pool of
// o.jobs threads; each result lands in its own slot, so output is order-free.
inline void write_sweep(const std::filesystem::path& dir, const std::vector<ReductionKind>& kinds,
                        const SweepOptions& o) {
  std::filesystem::create_directories(dir);
  std::vector<json> results(kinds.size());
  std::vector<std::string> errors(kinds.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t i; (i = next++) < kinds.size();) {
      try {
        results[i] = sweep_kind(kinds[i], o);
      } catch (const std::exception& e) {
        errors[i] = reduction_name(kinds[i]) + ": " + e.what();
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < std::max<std::size_t>(1, o.jobs); ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (!e.empty()) throw std::runtime_error(e);
  for (std::size_t i = 0; i < kinds.size(); ++i) {
    std::ofstream f(dir / (reduction_name(kinds[i]) + ".json"));
    f << results[i].dump(2) << "\n";
  }
}

struct ReportRow {
  std::string kind;
  std::size_t total = 0, passed = 0, behavior_total = 0, behavior_passed = 0;
};

// Aggregates every *.json verdict file in dir (sorted by name).
inline std::vector<ReportRow> aggregate(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw InvalidInput("report: " + dir.string() + " is not a directory");
  std::vector<std::filesystem::path> files;
  for (auto& e : std::filesystem::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  std::map<std::string, ReportRow> rows;
  for (auto& p : files) {
    try {
      std::ifstream in(p);
      json j = json::parse(in);
      if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string() || !j.contains("rows") ||
          !j["rows"].is_array())
        throw InvalidInput("needs 'kind' and 'rows'");
      auto& r = rows[j["kind"].get<std::string>()];
      r.kind = j["kind"].get<std::string>();
      for (auto& row : j["rows"]) {
        if (!row.is_object() || !row.contains("verdict")) throw InvalidInput("row without verdict");
        auto v = verdict_from_json(row["verdict"]);
        ++r.total;
        r.passed += v.passed;
        if (row.contains("behavior")) {
          auto b = verdict_from_json(row["behavior"]);
          ++r.behavior_total;
          r.behavior_passed += b.passed;
        }
      }
    } catch (const std::exception& e) {
      throw InvalidInput("report: malformed verdict file " + p.filename().string() + ": " + e.what());
    }
  }
  std::vector<ReportRow> out;
  for (auto& [k, r] : rows) out.push_back(r);
  return out;
}

inline std::string report_markdown(const std::vector<ReportRow>& rows) {
  std::ostringstream s;
  s << "| kind | cases | passed | behavior cases | behavior passed |\n";
  s << "|---|---|---|---|---|\n";
  for (auto& r : rows)
    s << "| " << r.kind << " | " << r.total << " | " << r.passed << " | " << r.behavior_total << " | "
      << r.behavior_passed << " |\n";
  return s.str();
}

inline json report_json(const std::vector<ReportRow>& rows) {
  json a = json::array();
  for (auto& r : rows)
    a.push_back({{"kind", r.kind},
                 {"cases", r.total},
                 {"passed", r.passed},
                 {"behavior_cases", r.behavior_total},
                 {"behavior_passed", r.behavior_passed}});
  return {{"rows", a}};
}

}  // namespace relucirc
