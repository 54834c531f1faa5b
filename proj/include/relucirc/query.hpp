#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "eval.hpp"
#include "graphs.hpp"

namespace relucirc {

struct PreconditionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Caps {
  std::size_t max_inputs = 20;    // quantified input arity (Global / Exists)
  std::size_t max_deletable = 20; // check_minimal / necessity family pool
  std::size_t max_pool = 24;      // exact solver candidate pool
  std::size_t max_free = 20;      // free positions in sufficient reasons
};

struct Coverage {
  enum class Type { Local, LocalSet, Global, Exists };
  Type type = Type::Local;
  std::vector<BoolVec> xs;  // one vector for Local, any number for LocalSet

  static Coverage local(BoolVec x) { return {Type::Local, {std::move(x)}}; }
  static Coverage local_set(std::vector<BoolVec> X) { return {Type::LocalSet, std::move(X)}; }
  static Coverage global() { return {Type::Global, {}}; }
  static Coverage exists() { return {Type::Exists, {}}; }
  bool universal() const { return type != Type::Exists; }
};

inline std::vector<BoolVec> all_inputs(std::size_t arity, const Caps& caps) {
  if (arity > caps.max_inputs)
    throw CapExceeded("input arity " + std::to_string(arity) + " exceeds cap " + std::to_string(caps.max_inputs));
  std::vector<BoolVec> out;
  for (std::uint64_t a = 0; a < (1ull << arity); ++a) {
    BoolVec x(arity);
    for (std::size_t i = 0; i < arity; ++i) x[i] = (a >> i) & 1;
    out.push_back(x);
  }
  return out;
}

inline std::vector<BoolVec> coverage_inputs(const Coverage& c, std::size_t arity, const Caps& caps) {
  switch (c.type) {
    case Coverage::Type::Local:
      if (c.xs.size() != 1) throw InvalidInput("local coverage needs exactly one input vector");
      [[fallthrough]];
    case Coverage::Type::LocalSet:
      for (auto& x : c.xs)
        if (x.size() != arity) throw InvalidInput("coverage vector has wrong arity");
      return c.xs;
    default:
      return all_inputs(arity, caps);
  }
}

inline json to_json(const Coverage& c) {
  switch (c.type) {
    case Coverage::Type::Local: return {{"local", to_json(c.xs.at(0))}};
    case Coverage::Type::LocalSet: {
      json a = json::array();
      for (auto& x : c.xs) a.push_back(to_json(x));
      return {{"local_set", a}};
    }
    case Coverage::Type::Global: return {{"global", true}};
    default: return {{"exists", true}};
  }
}

inline Coverage coverage_from_json(const json& j) {
  if (!j.is_object() || j.size() != 1) throw InvalidInput("coverage must be an object with one key");
  if (j.contains("local")) return Coverage::local(boolvec_from_json(j["local"]));
  if (j.contains("local_set")) {
    if (!j["local_set"].is_array()) throw InvalidInput("local_set must be an array");
    std::vector<BoolVec> X;
    for (auto& x : j["local_set"]) X.push_back(boolvec_from_json(x));
    return Coverage::local_set(X);
  }
  if (j.contains("global") && j["global"] == true) return Coverage::global();
  if (j.contains("exists") && j["exists"] == true) return Coverage::exists();
  throw InvalidInput("unknown coverage");
}

enum class QueryKind { Sufficient, Ablation, Clamping, Patching, Necessary, Robustness, SufficientReason, Gnostic };

inline std::string kind_name(QueryKind k) {
  switch (k) {
    case QueryKind::Sufficient: return "sufficient";
    case QueryKind::Ablation: return "ablation";
    case QueryKind::Clamping: return "clamping";
    case QueryKind::Patching: return "patching";
    case QueryKind::Necessary: return "necessary";
    case QueryKind::Robustness: return "robustness";
    case QueryKind::SufficientReason: return "sufficient_reason";
    default: return "gnostic";
  }
}

inline QueryKind kind_from_name(const std::string& s) {
  for (auto k : {QueryKind::Sufficient, QueryKind::Ablation, QueryKind::Clamping, QueryKind::Patching,
                 QueryKind::Necessary, QueryKind::Robustness, QueryKind::SufficientReason, QueryKind::Gnostic})
    if (kind_name(k) == s) return k;
  throw InvalidInput("unknown query kind '" + s + "'");
}

struct QuerySpec {
  QueryKind kind = QueryKind::Sufficient;
  Coverage coverage;
  std::optional<std::size_t> size_bound;   // circuit size for Sufficient, set size otherwise
  std::optional<std::size_t> depth_bound;  // Sufficient only
  std::optional<std::size_t> width_bound;  // Sufficient only
  bool minimal = false;
  int val = 1;                  // Clamping
  BoolVec donor;                // Patching
  NeuronSet region;             // Robustness H
  std::size_t k = 1;            // Robustness k; Gnostic minimum count
  std::vector<BoolVec> X, Y;    // Gnostic
  Rational t = 0;               // Gnostic
  bool include_trivial = true;  // Necessary
  bool require_connected = true;
};

inline json to_json(const QuerySpec& q) {
  json j;
  j["kind"] = kind_name(q.kind);
  j["coverage"] = to_json(q.coverage);
  j["minimal"] = q.minimal;
  if (q.size_bound) j["size_bound"] = *q.size_bound;
  if (q.depth_bound) j["depth_bound"] = *q.depth_bound;
  if (q.width_bound) j["width_bound"] = *q.width_bound;
  j["require_connected"] = q.require_connected;
  switch (q.kind) {
    case QueryKind::Clamping: j["val"] = q.val; break;
    case QueryKind::Patching: j["donor"] = to_json(q.donor); break;
    case QueryKind::Necessary: j["include_trivial"] = q.include_trivial; break;
    case QueryKind::Robustness:
      j["region"] = to_json(q.region);
      j["k"] = q.k;
      break;
    case QueryKind::Gnostic: {
      json X = json::array(), Y = json::array();
      for (auto& x : q.X) X.push_back(to_json(x));
      for (auto& y : q.Y) Y.push_back(to_json(y));
      j["X"] = X;
      j["Y"] = Y;
      j["t"] = to_string(q.t);
      j["k"] = q.k;
      break;
    }
    default: break;
  }
  return j;
}

inline QuerySpec query_from_json(const json& j) {
  try {
    if (!j.is_object()) throw InvalidInput("query must be an object");
    QuerySpec q;
    q.kind = kind_from_name(j.at("kind").get<std::string>());
    q.coverage = coverage_from_json(j.at("coverage"));
    q.minimal = j.value("minimal", false);
    auto opt = [&](const char* key, std::optional<std::size_t>& out) {
      if (j.contains(key)) {
        if (!j[key].is_number_unsigned()) throw InvalidInput(std::string(key) + " must be a non-negative integer");
        out = j[key].get<std::size_t>();
      }
    };
    opt("size_bound", q.size_bound);
    opt("depth_bound", q.depth_bound);
    opt("width_bound", q.width_bound);
    q.require_connected = j.value("require_connected", true);
    q.val = j.value("val", 1);
    if (q.val != 0 && q.val != 1) throw InvalidInput("val must be 0 or 1");
    if (j.contains("donor")) q.donor = boolvec_from_json(j["donor"]);
    q.include_trivial = j.value("include_trivial", true);
    if (j.contains("region")) q.region = neuron_set_from_json(j["region"]);
    if (j.contains("k")) {
      if (!j["k"].is_number_unsigned()) throw InvalidInput("k must be a non-negative integer");
      q.k = j["k"].get<std::size_t>();
    }
    if (j.contains("X"))
      for (auto& x : j["X"]) q.X.push_back(boolvec_from_json(x));
    if (j.contains("Y"))
      for (auto& y : j["Y"]) q.Y.push_back(boolvec_from_json(y));
    if (j.contains("t")) {
      auto p = parse_rational(j["t"].get<std::string>());
      if (!p.value) throw InvalidInput("t: " + p.error);
      q.t = *p.value;
    }
    return q;
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("query: ") + e.what());
  }
}

struct CheckReport {
  bool verdict = false;
  std::optional<BoolVec> witness_input;
  std::string details;
};

// Inputs of a coverage together with the full model's outputs on them.
struct Probe {
  Coverage::Type type;
  std::vector<BoolVec> xs;
  std::vector<BoolVec> ref;
  bool universal() const { return type != Coverage::Type::Exists; }
};

inline Probe make_probe(const Evaluator& ev, const Coverage& cov, const Caps& caps) {
  Probe p{cov.type, coverage_inputs(cov, ev.mlp().input_arity(), caps), {}};
  for (auto& x : p.xs) p.ref.push_back(ev.output(x));
  return p;
}

namespace core {

// Quantifies `holds(i)` over the probe inputs.
template <class F>
CheckReport quantify(const Probe& p, F&& holds) {
  CheckReport r;
  if (p.universal()) {
    for (std::size_t i = 0; i < p.xs.size(); ++i)
      if (!holds(i)) {
        r.verdict = false;
        r.witness_input = p.xs[i];
        r.details = "fails on a covered input";
        return r;
      }
    r.verdict = true;
    return r;
  }
  for (std::size_t i = 0; i < p.xs.size(); ++i)
    if (holds(i)) {
      r.verdict = true;
      r.witness_input = p.xs[i];
      r.details = "holds on an input";
      return r;
    }
  r.verdict = false;
  r.details = "holds on no input";
  return r;
}

// First kept neuron that has nonzero-weight predecessors but keeps none of them.
inline std::optional<std::size_t> disconnected_neuron(const Evaluator& ev, const std::vector<std::uint8_t>& keep) {
  for (std::size_t f = ev.mlp().input_arity(); f < ev.layout().total; ++f) {
    if (!keep[f] || !ev.has_nonzero_pred(f)) continue;
    bool any = false;
    for (std::size_t e = ev.pred_begin(f); e < ev.pred_end(f) && !any; ++e) any = keep[ev.pred_from(e)];
    if (!any) return f;
  }
  return std::nullopt;
}

inline CheckReport sufficient(const Evaluator& ev, const Probe& p, const std::vector<std::uint8_t>& keep,
                              bool require_connected) {
  Intervention iv;
  iv.mode.resize(keep.size());
  for (std::size_t f = 0; f < keep.size(); ++f) iv.mode[f] = keep[f] ? Mode::Normal : Mode::Zero;
  auto r = quantify(p, [&](std::size_t i) { return ev.output(p.xs[i], &iv) == p.ref[i]; });
  if (r.verdict && require_connected) {
    if (auto f = disconnected_neuron(ev, keep)) {
      r.verdict = false;
      r.witness_input.reset();
      r.details = "disconnected: neuron " + to_string(ev.layout().id(*f)) + " keeps none of its inputs";
    }
  }
  return r;
}

inline std::optional<std::string> ablation_violation(const Evaluator& ev, const std::vector<std::uint8_t>& removed) {
  const Mlp& m = ev.mlp();
  const Layout& lay = ev.layout();
  std::size_t base = lay.offset[m.num_layers() - 1];
  for (std::size_t i = 0; i < m.output_arity(); ++i)
    if (removed[base + i]) return "ablation removes output neuron " + to_string(lay.id(base + i));
  bool input_left = false;
  for (std::size_t i = 0; i < m.input_arity(); ++i) input_left |= !removed[i];
  if (!input_left) return std::string("ablation removes every input neuron");
  std::vector<std::uint8_t> keep(removed.size());
  for (std::size_t f = 0; f < keep.size(); ++f) keep[f] = !removed[f];
  if (!is_active(ev, keep)) return std::string("ablated network has no active input-output path");
  return std::nullopt;
}

inline CheckReport ablation(const Evaluator& ev, const Probe& p, const std::vector<std::uint8_t>& removed) {
  Intervention iv;
  iv.mode.resize(removed.size());
  for (std::size_t f = 0; f < removed.size(); ++f) iv.mode[f] = removed[f] ? Mode::Zero : Mode::Normal;
  return quantify(p, [&](std::size_t i) { return ev.output(p.xs[i], &iv) != p.ref[i]; });
}

inline CheckReport clamping(const Evaluator& ev, const Probe& p, const std::vector<std::uint8_t>& clamped, int val) {
  Intervention iv;
  iv.clamp_val = val;
  iv.mode.resize(clamped.size());
  for (std::size_t f = 0; f < clamped.size(); ++f) iv.mode[f] = clamped[f] ? Mode::Clamp : Mode::Normal;
  return quantify(p, [&](std::size_t i) { return ev.output(p.xs[i], &iv) != p.ref[i]; });
}

// `donor_iv` carries recorded donor values; modes are filled here.
inline CheckReport patching(const Evaluator& ev, const Probe& p, Intervention& donor_iv, const BoolVec& target,
                            const std::vector<std::uint8_t>& patched) {
  donor_iv.mode.resize(patched.size());
  for (std::size_t f = 0; f < patched.size(); ++f) donor_iv.mode[f] = patched[f] ? Mode::Donor : Mode::Normal;
  return quantify(p, [&](std::size_t i) { return ev.output(p.xs[i], &donor_iv) == target; });
}

}  // namespace core

namespace detail {

inline std::vector<std::uint8_t> flags(const Evaluator& ev, const NeuronSet& s) {
  detail::check_ids(ev.mlp(), s, "neuron set");
  std::vector<std::uint8_t> f(ev.layout().total, 0);
  for (auto id : s) f[ev.layout().flat(id)] = 1;
  return f;
}

}  // namespace detail

struct CheckOptions {
  Caps caps;
  bool require_connected = true;
  bool include_trivial = true;
};

inline CheckReport check_sufficient(const Mlp& m, const NeuronSet& c, const Coverage& cov,
                                    const CheckOptions& opt = {}) {
  for (auto id : io_neurons(m))
    if (!c.contains(id)) throw PreconditionError("circuit must keep input/output neuron " + to_string(id));
  Evaluator ev(m);
  auto p = make_probe(ev, cov, opt.caps);
  return core::sufficient(ev, p, detail::flags(ev, c), opt.require_connected);
}

inline CheckReport check_ablation(const Mlp& m, const NeuronSet& s, const Coverage& cov,
                                  const CheckOptions& opt = {}) {
  Evaluator ev(m);
  auto removed = detail::flags(ev, s);
  if (auto v = core::ablation_violation(ev, removed)) throw PreconditionError(*v);
  auto p = make_probe(ev, cov, opt.caps);
  return core::ablation(ev, p, removed);
}

inline CheckReport check_clamping(const Mlp& m, const NeuronSet& s, int val, const Coverage& cov,
                                  const CheckOptions& opt = {}) {
  for (auto id : s)
    if (m.is_output(id)) throw PreconditionError("output neuron " + to_string(id) + " cannot be clamped");
  if (val != 0 && val != 1) throw InvalidInput("clamp value must be 0 or 1");
  Evaluator ev(m);
  auto p = make_probe(ev, cov, opt.caps);
  return core::clamping(ev, p, detail::flags(ev, s), val);
}

inline CheckReport check_patching(const Mlp& m, const NeuronSet& c, const BoolVec& y, const std::vector<BoolVec>& X) {
  for (auto id : c)
    if (!m.is_internal(id)) throw PreconditionError("patch set contains non-internal neuron " + to_string(id));
  Evaluator ev(m);
  Intervention iv;
  ev.record_donor(y, iv);
  BoolVec target = ev.output(y);
  Probe p{Coverage::Type::LocalSet, X, {}};
  for (auto& x : X) ev.check_arity(x);
  return core::patching(ev, p, iv, target, detail::flags(ev, c));
}

// Minimal sufficient circuits at one input, as masks over the internal neurons.
inline std::vector<std::uint64_t> minimal_sc_family(const Evaluator& ev, const BoolVec& x, const CheckOptions& opt) {
  const Mlp& m = ev.mlp();
  auto hidden = internal_neurons(m);
  if (hidden.size() > opt.caps.max_deletable || hidden.size() > 63)
    throw CapExceeded("necessity: " + std::to_string(hidden.size()) + " internal neurons exceed cap " +
                      std::to_string(opt.caps.max_deletable));
  Probe p = make_probe(ev, Coverage::local(x), opt.caps);
  std::vector<std::size_t> flat;
  for (auto id : hidden) flat.push_back(ev.layout().flat(id));
  std::vector<std::uint8_t> keep(ev.layout().total, 0);
  for (auto id : io_neurons(m)) keep[ev.layout().flat(id)] = 1;
  std::vector<std::uint64_t> sats;
  std::uint64_t full = (1ull << hidden.size()) - 1;
  for (std::uint64_t s = 0; s <= full; ++s) {
    for (std::size_t i = 0; i < flat.size(); ++i) keep[flat[i]] = (s >> i) & 1;
    if (core::sufficient(ev, p, keep, opt.require_connected).verdict) sats.push_back(s);
  }
  std::sort(sats.begin(), sats.end(), [](auto a, auto b) {
    int pa = std::popcount(a), pb = std::popcount(b);
    return pa != pb ? pa < pb : a < b;
  });
  std::vector<std::uint64_t> minimal;
  for (auto s : sats) {
    bool dominated = false;
    for (auto t : minimal) dominated |= (t & ~s) == 0;
    if (!dominated) minimal.push_back(s);
  }
  if (!opt.include_trivial) std::erase(minimal, full);
  return minimal;
}

inline bool hits_family(const std::vector<std::uint64_t>& family, std::uint64_t s) {
  for (auto t : family)
    if ((t & s) == 0) return false;
  return true;
}

inline CheckReport check_necessary(const Mlp& m, const NeuronSet& s, const Coverage& cov,
                                   const CheckOptions& opt = {}) {
  Evaluator ev(m);
  detail::check_ids(m, s, "necessary set");
  bool touches_io = false;
  std::uint64_t mask = 0;
  auto hidden = internal_neurons(m);
  for (auto id : s) {
    if (!m.is_internal(id)) {
      touches_io = true;
      continue;
    }
    auto it = std::lower_bound(hidden.begin(), hidden.end(), id);
    mask |= 1ull << (it - hidden.begin());
  }
  Probe p{cov.type, coverage_inputs(cov, m.input_arity(), opt.caps), {}};
  return core::quantify(p, [&](std::size_t i) {
    if (touches_io) return true;  // every sufficient circuit keeps all I/O neurons
    return hits_family(minimal_sc_family(ev, p.xs[i], opt), mask);
  });
}

inline CheckReport check_robust(const Mlp& m, const NeuronSet& H, std::size_t k, const Coverage& cov,
                                const CheckOptions& opt = {}) {
  if (k < 1 || k > H.size()) throw PreconditionError("robustness needs 1 <= k <= |H|");
  if (cov.type == Coverage::Type::Exists) throw InvalidInput("robustness does not take exists coverage");
  if (H.size() > opt.caps.max_deletable || H.size() > 63)
    throw CapExceeded("robustness region of " + std::to_string(H.size()) + " neurons exceeds cap");
  Evaluator ev(m);
  detail::check_ids(m, H, "region");
  // Any covered input whose output changes breaks robustness.
  Probe p = make_probe(ev, cov, opt.caps);
  p.type = Coverage::Type::Exists;
  std::vector<NeuronId> ids(H.begin(), H.end());
  std::uint64_t full = (1ull << ids.size()) - 1;
  for (std::uint64_t s = 1; s <= full; ++s) {
    if (static_cast<std::size_t>(std::popcount(s)) > k) continue;
    std::vector<std::uint8_t> removed(ev.layout().total, 0);
    for (std::size_t i = 0; i < ids.size(); ++i)
      if ((s >> i) & 1) removed[ev.layout().flat(ids[i])] = 1;
    if (core::ablation_violation(ev, removed)) continue;
    auto r = core::ablation(ev, p, removed);
    if (r.verdict) {
      NeuronSet br;
      for (std::size_t i = 0; i < ids.size(); ++i)
        if ((s >> i) & 1) br.insert(ids[i]);
      std::string d = "ablating {";
      for (auto id : br) d += "(" + to_string(id) + ")";
      return {false, r.witness_input, d + "} changes the output"};
    }
  }
  return {true, std::nullopt, "no admissible ablation within the region changes the output"};
}

inline CheckReport check_sufficient_reason(const Mlp& m, const BoolVec& x, const std::vector<std::size_t>& positions,
                                           const CheckOptions& opt = {}) {
  Evaluator ev(m);
  ev.check_arity(x);
  std::vector<std::uint8_t> fixed(x.size(), 0);
  for (auto p : positions) {
    if (p >= x.size()) throw InvalidInput("position out of range");
    fixed[p] = 1;
  }
  std::vector<std::size_t> free;
  for (std::size_t i = 0; i < x.size(); ++i)
    if (!fixed[i]) free.push_back(i);
  if (free.size() > opt.caps.max_free)
    throw CapExceeded(std::to_string(free.size()) + " free positions exceed cap " + std::to_string(opt.caps.max_free));
  BoolVec ref = ev.output(x);
  BoolVec y = x;
  for (std::uint64_t a = 0; a < (1ull << free.size()); ++a) {
    for (std::size_t i = 0; i < free.size(); ++i) y[free[i]] = (a >> i) & 1;
    if (ev.output(y) != ref) return {false, y, "a completion changes the output"};
  }
  return {true, std::nullopt, "every completion reproduces the output"};
}

inline bool gnostic_holds(const std::vector<ActivationTrace>& tx, const std::vector<ActivationTrace>& ty,
                          const Rational& t, NeuronId v) {
  for (auto& tr : tx)
    if (tr.layers[v.layer][v.index] < t) return false;
  for (auto& tr : ty)
    if (!(tr.layers[v.layer][v.index] < t)) return false;
  return true;
}

inline CheckReport check_gnostic(const Mlp& m, const std::vector<BoolVec>& X, const std::vector<BoolVec>& Y,
                                 const Rational& t, const NeuronSet& V) {
  Evaluator ev(m);
  detail::check_ids(m, V, "gnostic set");
  std::vector<ActivationTrace> tx, ty;
  for (auto& x : X) tx.push_back(ev.trace(x));
  for (auto& y : Y) ty.push_back(ev.trace(y));
  for (auto v : V)
    if (!gnostic_holds(tx, ty, t, v))
      return {false, std::nullopt, "neuron " + to_string(v) + " is not gnostic"};
  return {true, std::nullopt, "all neurons gnostic"};
}

using Property = std::function<bool(const NeuronSet&)>;

// Exhaustive subset-deletion minimality over candidate ∩ pool.
inline CheckReport check_minimal(const NeuronSet& candidate, const Property& property, const NeuronSet& pool,
                                 std::size_t cap = 20) {
  if (!property(candidate)) throw PreconditionError("candidate does not satisfy the property");
  std::vector<NeuronId> del;
  for (auto id : candidate)
    if (pool.contains(id)) del.push_back(id);
  if (del.size() > cap || del.size() > 63)
    throw CapExceeded("deletable pool of " + std::to_string(del.size()) + " exceeds cap " + std::to_string(cap));
  std::uint64_t full = del.empty() ? 0 : ((1ull << del.size()) - 1);
  for (std::uint64_t d = 1; d <= full; ++d) {
    NeuronSet c = candidate;
    for (std::size_t i = 0; i < del.size(); ++i)
      if ((d >> i) & 1) c.erase(del[i]);
    if (property(c)) {
      std::string s = "removable subset {";
      for (std::size_t i = 0; i < del.size(); ++i)
        if ((d >> i) & 1) s += "(" + to_string(del[i]) + ")";
      return {false, std::nullopt, s + "}"};
    }
  }
  return {true, std::nullopt, "minimal"};
}

inline CheckReport check_one_minimal(const NeuronSet& candidate, const Property& property, const NeuronSet& pool) {
  if (!property(candidate)) throw PreconditionError("candidate does not satisfy the property");
  for (auto id : candidate)
    if (pool.contains(id) && property(candidate.without(id)))
      return {false, std::nullopt, "neuron " + to_string(id) + " is removable"};
  return {true, std::nullopt, "1-minimal"};
}

inline Property sufficiency_property(const Mlp& m, const Coverage& cov, const CheckOptions& opt = {}) {
  auto ev = std::make_shared<Evaluator>(m);
  auto p = std::make_shared<Probe>(make_probe(*ev, cov, opt.caps));
  bool rc = opt.require_connected;
  return [ev, p, rc](const NeuronSet& c) {
    return core::sufficient(*ev, *p, detail::flags(*ev, c), rc).verdict;
  };
}

}  // namespace relucirc
