#pragma once

#include <optional>
#include <vector>

#include "query.hpp"
#include "rng.hpp"

namespace relucirc {

struct OrderingHeuristic {
  enum class Type { CanonicalAscending, CanonicalDescending, Seeded };
  Type type = Type::CanonicalAscending;
  std::uint64_t seed = 0;

  static OrderingHeuristic ascending() { return {}; }
  static OrderingHeuristic descending() { return {Type::CanonicalDescending, 0}; }
  static OrderingHeuristic seeded(std::uint64_t s) { return {Type::Seeded, s}; }

  std::vector<NeuronId> apply(std::vector<NeuronId> ids) const {
    if (type == Type::CanonicalDescending) std::reverse(ids.begin(), ids.end());
    if (type == Type::Seeded) {
      SplitMix64 rng(seed);
      rng.shuffle(ids);
    }
    return ids;
  }
};

struct QuasiResult {
  NeuronSet circuit;
  NeuronId breaking_point;
  std::uint64_t forward_passes = 0;
};

inline json to_json(const QuasiResult& q) {
  return {{"circuit", to_json(q.circuit)},
          {"breaking_point", {q.breaking_point.layer, q.breaking_point.index}},
          {"forward_passes", q.forward_passes}};
}

// Binary search over prefixes of the order: prefix 0 removed is YES, all removed is NO.
inline QuasiResult quasi_minimal_sufficient_circuit(const Mlp& m, const BoolVec& x,
                                                    const OrderingHeuristic& order = {},
                                                    bool require_connected = true) {
  Evaluator ev(m);
  Probe p = make_probe(ev, Coverage::local(x), Caps{});
  auto seq = order.apply(internal_neurons(m).ids());
  std::vector<std::uint8_t> keep(ev.layout().total, 1);
  auto yes = [&](std::size_t removed) {
    std::fill(keep.begin(), keep.end(), 1);
    for (std::size_t i = 0; i < removed; ++i) keep[ev.layout().flat(seq[i])] = 0;
    return core::sufficient(ev, p, keep, require_connected).verdict;
  };
  std::size_t n = seq.size();
  if (n == 0 || yes(n)) throw PreconditionError("degenerate: removing every internal neuron still reproduces the output");
  if (!yes(0)) throw PreconditionError("full network is not sufficient");
  std::size_t lo = 0, hi = n;
  while (hi - lo > 1) {
    std::size_t mid = lo + (hi - lo) / 2;
    if (yes(mid))
      lo = mid;
    else
      hi = mid;
  }
  QuasiResult r;
  std::vector<NeuronId> kept = all_neurons(m).ids();
  NeuronSet c(kept);
  for (std::size_t i = 0; i < lo; ++i) c.erase(seq[i]);
  r.circuit = c;
  r.breaking_point = seq[lo];
  r.forward_passes = ev.passes();
  return r;
}

// Prefix 0 patched is NO, everything patched is YES.
inline QuasiResult quasi_minimal_patch(const Mlp& m, const BoolVec& y, const std::vector<BoolVec>& X,
                                       const OrderingHeuristic& order = {}) {
  Evaluator ev(m);
  Intervention iv;
  ev.record_donor(y, iv);
  BoolVec target = ev.output(y);
  for (auto& x : X) ev.check_arity(x);
  Probe p{Coverage::Type::LocalSet, X, {}};
  auto seq = order.apply(internal_neurons(m).ids());
  std::vector<std::uint8_t> patched(ev.layout().total, 0);
  auto yes = [&](std::size_t count) {
    std::fill(patched.begin(), patched.end(), 0);
    for (std::size_t i = 0; i < count; ++i) patched[ev.layout().flat(seq[i])] = 1;
    return core::patching(ev, p, iv, target, patched).verdict;
  };
  std::size_t n = seq.size();
  if (yes(0)) throw PreconditionError("empty patch already succeeds: no breaking point");
  if (n == 0 || !yes(n)) throw PreconditionError("patching every internal neuron does not reach the donor output");
  std::size_t lo = 0, hi = n;
  while (hi - lo > 1) {
    std::size_t mid = lo + (hi - lo) / 2;
    if (yes(mid))
      hi = mid;
    else
      lo = mid;
  }
  QuasiResult r;
  r.circuit = NeuronSet(std::vector<NeuronId>(seq.begin(), seq.begin() + static_cast<std::ptrdiff_t>(hi)));
  r.breaking_point = seq[hi - 1];
  r.forward_passes = ev.passes();
  return r;
}

struct LocalSearchResult {
  NeuronSet circuit;
  std::uint64_t iterations = 0;
  std::uint64_t forward_passes = 0;
};

// Random local search from the trivial circuit: try to drop a random untried
// internal neuron; on success the untried list restarts from the new circuit.
inline LocalSearchResult minimal_lsc_local_search(const Mlp& m, const BoolVec& x, std::uint64_t seed,
                                                  bool require_connected = true) {
  Evaluator ev(m);
  Probe p = make_probe(ev, Coverage::local(x), Caps{});
  SplitMix64 rng(seed);
  std::vector<std::uint8_t> keep(ev.layout().total, 1);
  auto internal = internal_neurons(m).ids();
  std::vector<NeuronId> untried = internal;
  LocalSearchResult r;
  while (!untried.empty()) {
    ++r.iterations;
    std::size_t pick = rng.below(untried.size());
    NeuronId v = untried[pick];
    untried.erase(untried.begin() + static_cast<std::ptrdiff_t>(pick));
    std::size_t f = ev.layout().flat(v);
    keep[f] = 0;
    if (core::sufficient(ev, p, keep, require_connected).verdict) {
      untried.clear();
      for (auto id : internal)
        if (keep[ev.layout().flat(id)]) untried.push_back(id);
    } else {
      keep[f] = 1;
    }
  }
  std::vector<NeuronId> c;
  for (std::size_t f = 0; f < keep.size(); ++f)
    if (keep[f]) c.push_back(ev.layout().id(f));
  r.circuit = NeuronSet(std::move(c));
  r.forward_passes = ev.passes();
  return r;
}

// Every neuron meeting the threshold predicate, or nothing if fewer than k.
inline std::optional<NeuronSet> gnostic_scan(const Mlp& m, const std::vector<BoolVec>& X,
                                             const std::vector<BoolVec>& Y, const Rational& t, std::size_t k) {
  Evaluator ev(m);
  std::vector<ActivationTrace> tx, ty;
  for (auto& x : X) tx.push_back(ev.trace(x));
  for (auto& y : Y) ty.push_back(ev.trace(y));
  NeuronSet out;
  for (auto id : all_neurons(m))
    if (gnostic_holds(tx, ty, t, id)) out.insert(id);
  if (out.size() < k) return std::nullopt;
  return out;
}

}  // namespace relucirc
