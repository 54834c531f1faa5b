#pragma once

#include <algorithm>

#include <relucirc/query.hpp>
#include <relucirc/rng.hpp>
#include <relucirc/search.hpp>

// Plain all-subsets loops over the checkers, written without the search code.
namespace naive {

using namespace relucirc;

inline std::vector<NeuronId> pool(const Mlp& m, const QuerySpec& q) {
  std::vector<NeuronId> out;
  if (q.kind == QueryKind::Robustness) return q.region.ids();
  for (auto id : all_neurons(m)) {
    switch (q.kind) {
      case QueryKind::Ablation:
      case QueryKind::Clamping:
        if (!m.is_output(id)) out.push_back(id);
        break;
      case QueryKind::SufficientReason:
        if (m.is_input(id)) out.push_back(id);
        break;
      default:
        if (m.is_internal(id)) out.push_back(id);
    }
  }
  return out;
}

inline bool holds(const Mlp& m, const QuerySpec& q, const NeuronSet& s) {
  CheckOptions o;
  o.require_connected = q.require_connected;
  o.include_trivial = q.include_trivial;
  switch (q.kind) {
    case QueryKind::Sufficient: {
      NeuronSet c = s;
      for (auto id : io_neurons(m)) c.insert(id);
      return check_sufficient(m, c, q.coverage, o).verdict;
    }
    case QueryKind::Ablation:
      try {
        return check_ablation(m, s, q.coverage, o).verdict;
      } catch (const PreconditionError&) {
        return false;
      }
    case QueryKind::Clamping: return check_clamping(m, s, q.val, q.coverage, o).verdict;
    case QueryKind::Patching:
      return check_patching(m, s, q.donor, coverage_inputs(q.coverage, m.input_arity(), o.caps)).verdict;
    case QueryKind::Necessary: return check_necessary(m, s, q.coverage, o).verdict;
    case QueryKind::Robustness: {
      // a breaking set: an admissible ablation inside H that changes the output somewhere
      if (s.empty()) return false;
      Coverage cov = q.coverage;
      if (cov.type == Coverage::Type::Global) cov.type = Coverage::Type::Exists;
      QuerySpec a;
      a.kind = QueryKind::Ablation;
      if (cov.type == Coverage::Type::LocalSet) {
        for (auto& x : cov.xs) {
          a.coverage = Coverage::local(x);
          if (holds(m, a, s)) return true;
        }
        return false;
      }
      a.coverage = cov;
      return holds(m, a, s);
    }
    case QueryKind::SufficientReason: {
      std::vector<std::size_t> pos;
      for (auto id : s) pos.push_back(id.index);
      return check_sufficient_reason(m, q.coverage.xs.at(0), pos, o).verdict;
    }
    case QueryKind::Gnostic: return check_gnostic(m, q.X, q.Y, q.t, s).verdict;
  }
  return false;
}

// Every satisfying set within the size bound, canonical order. Sufficient sets include I/O neurons.
inline std::vector<NeuronSet> all(const Mlp& m, const QuerySpec& q) {
  auto p = pool(m, q);
  std::size_t io = q.kind == QueryKind::Sufficient ? io_neurons(m).size() : 0;
  std::vector<NeuronSet> hits;
  for (std::uint64_t mask = 0; mask < (1ull << p.size()); ++mask) {
    NeuronSet s;
    for (std::size_t i = 0; i < p.size(); ++i)
      if (mask >> i & 1) s.insert(p[i]);
    std::size_t size = s.size() + io;
    if (q.size_bound && size > *q.size_bound) continue;
    if (q.kind == QueryKind::Robustness && s.size() > q.k) continue;
    if (q.depth_bound || q.width_bound) {
      NeuronSet c = s;
      for (auto id : io_neurons(m)) c.insert(id);
      auto [d, w] = circuit_depth_width(m, c);
      if ((q.depth_bound && d > *q.depth_bound) || (q.width_bound && w > *q.width_bound)) continue;
    }
    if (!holds(m, q, s)) continue;
    if (q.kind == QueryKind::Sufficient)
      for (auto id : io_neurons(m)) s.insert(id);
    hits.push_back(s);
  }
  std::sort(hits.begin(), hits.end(), canonical_less);
  return hits;
}

inline std::vector<NeuronSet> minimal(const std::vector<NeuronSet>& sets) {
  std::vector<NeuronSet> out;
  for (auto& a : sets) {
    bool dominated = false;
    for (auto& b : sets)
      if (b.size() < a.size() && std::includes(a.begin(), a.end(), b.begin(), b.end())) dominated = true;
    if (!dominated) out.push_back(a);
  }
  return out;
}

struct Mismatch {
  std::string what;
};

// Compares solve / count / enumerate_minimal / solve_optimal(Min) with the loops; empty on agreement.
inline std::optional<Mismatch> compare(const Mlp& m, QuerySpec q) {
  if (q.kind == QueryKind::Gnostic) {
    NeuronSet g;
    for (auto id : all_neurons(m))
      if (check_gnostic(m, q.X, q.Y, q.t, {id}).verdict) g.insert(id);
    auto r = solve(q, m);
    bool found = g.size() >= q.k;
    if ((r.status == SolveReport::Status::Found) != found) return Mismatch{"gnostic solve status"};
    if (found && *r.witness != g) return Mismatch{"gnostic solve witness"};
    if (count(q, m).count != g.size()) return Mismatch{"gnostic count"};
    if (enumerate_minimal(q, m).size() != g.size()) return Mismatch{"gnostic enumerate"};
    return std::nullopt;
  }
  auto sets = all(m, q);
  auto r = solve(q, m);
  if ((r.status == SolveReport::Status::Found) != !sets.empty()) return Mismatch{"solve status"};
  if (r.witness && *r.witness != sets.front()) return Mismatch{"solve witness"};
  if (q.kind == QueryKind::Robustness && *r.verdict != sets.empty()) return Mismatch{"robust verdict"};
  if (count(q, m).count != sets.size()) return Mismatch{"count"};
  auto mins = minimal(sets);
  if (enumerate_minimal(q, m) != mins) return Mismatch{"enumerate_minimal"};
  QuerySpec qm = q;
  qm.minimal = true;
  if (count(qm, m).count != mins.size()) return Mismatch{"minimal count"};
  if (q.kind != QueryKind::Robustness && !q.size_bound) {
    auto opt = solve_optimal(q, m, Direction::Min);
    if (sets.empty() != (opt.status == SolveReport::Status::NotFound)) return Mismatch{"optimal status"};
    if (!sets.empty() && opt.value != sets.front().size()) return Mismatch{"optimal value"};
  }
  return std::nullopt;
}

// Random query of the given kind for a random net, with small random parameters.
inline QuerySpec random_query(SplitMix64& rng, const Mlp& m, QueryKind kind) {
  auto input = [&] {
    BoolVec x(m.input_arity());
    for (auto& b : x) b = rng.coin();
    return x;
  };
  QuerySpec q;
  q.kind = kind;
  switch (rng.below(3)) {
    case 0: q.coverage = Coverage::global(); break;
    case 1: q.coverage = Coverage::local_set({input(), input()}); break;
    default: q.coverage = Coverage::local(input());
  }
  if (kind == QueryKind::Necessary || kind == QueryKind::SufficientReason || kind == QueryKind::Gnostic)
    q.coverage = Coverage::local(input());
  if (kind != QueryKind::Robustness && kind != QueryKind::Gnostic && rng.below(4) == 0)
    q.size_bound = rng.below(m.total_neurons());
  q.val = static_cast<int>(rng.below(2));
  q.donor = input();
  if (kind == QueryKind::Robustness) {
    auto cand = all_neurons(m).ids();
    std::erase_if(cand, [&](NeuronId id) { return m.is_output(id); });
    rng.shuffle(cand);
    cand.resize(std::min<std::size_t>(cand.size(), 1 + rng.below(4)));
    q.region = NeuronSet(cand);
    q.k = 1 + rng.below(q.region.size());
  }
  if (kind == QueryKind::Gnostic) {
    q.X = {input()};
    q.Y = {input()};
    q.t = Rational(static_cast<long>(rng.below(3)));
    q.k = rng.below(3);
  }
  if (kind == QueryKind::Necessary) q.include_trivial = rng.coin();
  return q;
}

inline const std::vector<QueryKind>& all_query_kinds() {
  static const std::vector<QueryKind> k{QueryKind::Sufficient, QueryKind::Ablation,  QueryKind::Clamping,
                                        QueryKind::Patching,   QueryKind::Necessary, QueryKind::Robustness,
                                        QueryKind::SufficientReason, QueryKind::Gnostic};
  return k;
}

}  // namespace naive
