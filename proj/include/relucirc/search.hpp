#pragma once

#include <algorithm>
#include <bit>
#include <memory>
#include <optional>
#include <vector>

#include "query.hpp"

namespace relucirc {

struct SolveReport {
  enum class Status { Found, NotFound, Count, Optimal };
  Status status = Status::NotFound;
  std::optional<NeuronSet> witness;
  std::uint64_t count = 0;
  std::size_t value = 0;
  std::uint64_t explored = 0;
  std::uint64_t forward_passes = 0;
  std::optional<bool> verdict;          // robustness: true = robust
  std::optional<NeuronId> breaking_point;  // quasi-minimal solvers
  std::optional<std::uint64_t> seed;
};

inline std::string status_name(SolveReport::Status s) {
  switch (s) {
    case SolveReport::Status::Found: return "found";
    case SolveReport::Status::NotFound: return "not_found";
    case SolveReport::Status::Count: return "count";
    default: return "optimal";
  }
}

inline json to_json(const SolveReport& r) {
  json j;
  j["status"] = status_name(r.status);
  if (r.witness) j["witness"] = to_json(*r.witness);
  if (r.status == SolveReport::Status::Count) j["count"] = r.count;
  if (r.status == SolveReport::Status::Optimal) j["value"] = r.value;
  if (r.verdict) j["robust"] = *r.verdict;
  if (r.breaking_point) j["breaking_point"] = {r.breaking_point->layer, r.breaking_point->index};
  if (r.seed) j["seed"] = *r.seed;
  j["explored"] = r.explored;
  j["forward_passes"] = r.forward_passes;
  return j;
}

// Depth = layers with at least one kept neuron, width = max kept per layer.
inline std::pair<std::size_t, std::size_t> circuit_depth_width(const Mlp& m, const NeuronSet& c) {
  std::vector<std::size_t> per(m.num_layers(), 0);
  for (auto id : c) ++per[id.layer];
  std::size_t d = 0, w = 0;
  for (auto p : per) {
    d += p > 0;
    w = std::max(w, p);
  }
  return {d, w};
}

// Candidate space, leaf predicate and pruning for one query on one net.
class SearchProblem {
 public:
  SearchProblem(const QuerySpec& q, const Mlp& m, const Caps& caps) : q_(q), m_(m), ev_(m), caps_(caps) {
    const Layout& lay = ev_.layout();
    std::size_t L = m.num_layers();
    auto push_layer = [&](std::size_t l) {
      for (std::size_t i = 0; i < m.layer_sizes[l]; ++i) pool_.push_back(lay.offset[l] + i);
    };
    switch (q.kind) {
      case QueryKind::Sufficient:
      case QueryKind::Patching:
      case QueryKind::Necessary:
        for (std::size_t l = 1; l + 1 < L; ++l) push_layer(l);
        break;
      case QueryKind::Ablation:
      case QueryKind::Clamping:
        for (std::size_t l = 0; l + 1 < L; ++l) push_layer(l);
        break;
      case QueryKind::SufficientReason: push_layer(0); break;
      case QueryKind::Robustness:
        detail::check_ids(m, q.region, "region");
        for (auto id : q.region) pool_.push_back(lay.flat(id));
        break;
      case QueryKind::Gnostic: break;
    }
    // Decide output-side layers first: kept neurons then constrain their
    // predecessors early through the connectivity rule and the intervals.
    order_.resize(pool_.size());
    for (std::size_t j = 0; j < pool_.size(); ++j) order_[j] = j;
    std::stable_sort(order_.begin(), order_.end(), [&](std::size_t a, std::size_t b) {
      return lay.id(pool_[a]).layer > lay.id(pool_[b]).layer;
    });
    if (pool_.size() > caps.max_pool || pool_.size() > 64)
      throw CapExceeded("candidate pool of " + std::to_string(pool_.size()) + " neurons exceeds cap " +
                        std::to_string(std::min<std::size_t>(caps.max_pool, 64)));
    base_.assign(lay.total, 0);
    if (q.kind == QueryKind::Sufficient) {
      for (auto id : io_neurons(m)) base_[lay.flat(id)] = 1;
      offset_ = io_neurons(m).size();
    }
    switch (q.kind) {
      case QueryKind::Sufficient:
      case QueryKind::Ablation:
      case QueryKind::Clamping:
      case QueryKind::Necessary:
        probe_ = make_probe(ev_, q.coverage, caps);
        break;
      case QueryKind::Patching: {
        if (q.coverage.type == Coverage::Type::Exists) throw InvalidInput("patching does not take exists coverage");
        ev_.check_arity(q.donor);
        ev_.record_donor(q.donor, donor_);
        target_ = ev_.output(q.donor);
        probe_ = Probe{Coverage::Type::LocalSet, coverage_inputs(q.coverage, m.input_arity(), caps), {}};
        break;
      }
      case QueryKind::Robustness:
        if (q.coverage.type == Coverage::Type::Exists) throw InvalidInput("robustness does not take exists coverage");
        if (q.k > q.region.size()) throw PreconditionError("robustness needs k <= |H|");
        probe_ = make_probe(ev_, q.coverage, caps);
        probe_.type = Coverage::Type::Exists;
        break;
      case QueryKind::SufficientReason:
        if (q.coverage.type != Coverage::Type::Local) throw InvalidInput("sufficient reason needs local coverage");
        sr_x_ = q.coverage.xs.at(0);
        ev_.check_arity(sr_x_);
        sr_ref_ = ev_.output(sr_x_);
        if (m.input_arity() > caps.max_free) throw CapExceeded("input arity exceeds free-position cap");
        break;
      case QueryKind::Gnostic: break;
    }
    if (q.kind == QueryKind::Necessary) {
      CheckOptions opt{caps, q.require_connected, q.include_trivial};
      for (auto& x : probe_.xs) families_.push_back(minimal_sc_family(ev_, x, opt));
    }
    if (q.depth_bound && (*q.depth_bound < 1 || *q.depth_bound > L)) throw InvalidInput("depth bound out of range");
    if (q.width_bound && *q.width_bound < 1) throw InvalidInput("width bound out of range");
  }

  std::size_t pool_size() const { return pool_.size(); }
  std::size_t offset() const { return offset_; }
  const Evaluator& evaluator() const { return ev_; }
  std::uint64_t explored() const { return explored_; }

  NeuronSet to_set(std::uint64_t mask) const {
    std::vector<NeuronId> v;
    for (std::size_t f = 0; f < base_.size(); ++f)
      if (base_[f]) v.push_back(ev_.layout().id(f));
    for (std::size_t i = 0; i < pool_.size(); ++i)
      if ((mask >> i) & 1) v.push_back(ev_.layout().id(pool_[i]));
    return NeuronSet(std::move(v));
  }

  bool within_depth_width(std::uint64_t mask) const {
    if (!q_.depth_bound && !q_.width_bound) return true;
    auto [d, w] = circuit_depth_width(m_, to_set(mask));
    return (!q_.depth_bound || d <= *q_.depth_bound) && (!q_.width_bound || w <= *q_.width_bound);
  }

  bool leaf(std::uint64_t mask) {
    ++explored_;
    std::vector<std::uint8_t> f = base_;
    for (std::size_t i = 0; i < pool_.size(); ++i)
      if ((mask >> i) & 1) f[pool_[i]] = 1;
    switch (q_.kind) {
      case QueryKind::Sufficient: return core::sufficient(ev_, probe_, f, q_.require_connected).verdict;
      case QueryKind::Ablation:
        if (core::ablation_violation(ev_, f)) return false;
        return core::ablation(ev_, probe_, f).verdict;
      case QueryKind::Clamping: return core::clamping(ev_, probe_, f, q_.val).verdict;
      case QueryKind::Patching: return core::patching(ev_, probe_, donor_, target_, f).verdict;
      case QueryKind::Necessary:
        return core::quantify(probe_, [&](std::size_t i) { return hits_family(families_[i], mask); }).verdict;
      case QueryKind::Robustness:
        if (mask == 0 || core::ablation_violation(ev_, f)) return false;
        return core::ablation(ev_, probe_, f).verdict;
      case QueryKind::SufficientReason: {
        std::vector<std::size_t> free;
        for (std::size_t i = 0; i < pool_.size(); ++i)
          if (!((mask >> i) & 1)) free.push_back(i);
        BoolVec y = sr_x_;
        for (std::uint64_t a = 0; a < (1ull << free.size()); ++a) {
          for (std::size_t i = 0; i < free.size(); ++i) y[free[i]] = (a >> i) & 1;
          if (ev_.output(y) != sr_ref_) return false;
        }
        return true;
      }
      case QueryKind::Gnostic: return false;
    }
    return false;
  }

  // Visits every satisfying mask of exactly `size` pool elements (in search
  // order, not canonical order; see canonical_mask_less). Masks that contain
  // a member of `exclude_supersets` are skipped.
  // The callback returns false to stop; the function then returns false.
  template <class CB>
  bool for_each_of_size(std::size_t size, const std::vector<std::uint64_t>& exclude_supersets, CB&& cb) {
    if (size > pool_.size()) return true;
    dec_.assign(pool_.size(), -1);
    return dfs(0, 0, 0, size, exclude_supersets, cb);
  }

 private:
  template <class CB>
  bool dfs(std::size_t i, std::uint64_t mask, std::size_t chosen, std::size_t size,
           const std::vector<std::uint64_t>& excl, CB& cb) {
    for (auto t : excl)
      if ((t & ~mask) == 0) return true;
    if (chosen + (pool_.size() - i) < size) return true;
    if (i > 0 && prunable(i)) return true;
    if (chosen == size) {
      for (std::size_t j = i; j < pool_.size(); ++j) dec_[order_[j]] = 0;
      bool cont = true;
      if ((i == pool_.size() || !prunable(pool_.size())) && leaf(mask)) cont = cb(mask);
      for (std::size_t j = i; j < pool_.size(); ++j) dec_[order_[j]] = -1;
      return cont;
    }
    std::size_t p = order_[i];
    dec_[p] = 1;
    if (!dfs(i + 1, mask | (1ull << p), chosen + 1, size, excl, cb)) {
      dec_[p] = -1;
      return false;
    }
    dec_[p] = 0;
    bool cont = dfs(i + 1, mask, chosen, size, excl, cb);
    dec_[p] = -1;
    return cont;
  }

  // Sound pruning: true only if no completion of the current decisions can satisfy.
  bool prunable(std::size_t decided) {
    switch (q_.kind) {
      case QueryKind::Sufficient:
      case QueryKind::Ablation:
      case QueryKind::Clamping:
      case QueryKind::Patching: break;
      default: return false;
    }
    const Layout& lay = ev_.layout();
    if (q_.kind == QueryKind::Sufficient && q_.require_connected) {
      // state: 1 kept, 0 removed, 2 undecided
      std::vector<std::uint8_t> st(lay.total, 0);
      for (std::size_t f = 0; f < lay.total; ++f) st[f] = base_[f];
      for (std::size_t j = 0; j < pool_.size(); ++j) st[pool_[j]] = dec_[j] < 0 ? 2 : dec_[j];
      for (std::size_t f = m_.input_arity(); f < lay.total; ++f) {
        if (st[f] != 1 || !ev_.has_nonzero_pred(f)) continue;
        bool possible = false;
        for (std::size_t e = ev_.pred_begin(f); e < ev_.pred_end(f) && !possible; ++e)
          possible = st[ev_.pred_from(e)] != 0;
        if (!possible) return true;
      }
    }
    Intervention& iv = q_.kind == QueryKind::Patching ? donor_ : scratch_;
    iv.mode.assign(lay.total, Mode::Normal);
    iv.clamp_val = q_.val;
    Mode on = Mode::Normal, off = Mode::Normal, maybe = Mode::Normal;
    switch (q_.kind) {
      case QueryKind::Sufficient: on = Mode::Normal; off = Mode::Zero; maybe = Mode::MaybeZero; break;
      case QueryKind::Ablation: on = Mode::Zero; off = Mode::Normal; maybe = Mode::MaybeZero; break;
      case QueryKind::Clamping: on = Mode::Clamp; off = Mode::Normal; maybe = Mode::MaybeClamp; break;
      default: on = Mode::Donor; off = Mode::Normal; maybe = Mode::MaybeDonor; break;
    }
    if (q_.kind == QueryKind::Sufficient)
      for (std::size_t f = 0; f < lay.total; ++f) iv.mode[f] = base_[f] ? Mode::Normal : Mode::Zero;
    (void)decided;
    for (std::size_t j = 0; j < pool_.size(); ++j) iv.mode[pool_[j]] = dec_[j] < 0 ? maybe : (dec_[j] ? on : off);
    bool want_equal = q_.kind == QueryKind::Sufficient || q_.kind == QueryKind::Patching;
    bool universal = probe_.universal();
    bool any_possible = false;
    for (std::size_t i = 0; i < probe_.xs.size(); ++i) {
      auto pos = ev_.possible_outputs(probe_.xs[i], iv);
      if (!pos) return false;
      const BoolVec& ref = q_.kind == QueryKind::Patching ? target_ : probe_.ref[i];
      bool can_equal = true, must_equal = true;
      for (std::size_t o = 0; o < ref.size(); ++o) {
        bool c_ref = ref[o] ? (*pos)[o].can1 : (*pos)[o].can0;
        bool c_other = ref[o] ? (*pos)[o].can0 : (*pos)[o].can1;
        can_equal &= c_ref;
        must_equal &= !c_other;
      }
      bool possible = want_equal ? can_equal : !must_equal;
      if (universal && !possible) return true;
      any_possible |= possible;
      if (!universal && any_possible) return false;
    }
    return !universal && !any_possible;
  }

  QuerySpec q_;
  const Mlp& m_;
  Evaluator ev_;
  Caps caps_;
  std::vector<std::size_t> pool_;
  std::vector<std::uint8_t> base_;
  std::size_t offset_ = 0;
  Probe probe_{Coverage::Type::Local, {}, {}};
  Intervention donor_, scratch_;
  BoolVec target_;
  BoolVec sr_x_, sr_ref_;
  std::vector<std::vector<std::uint64_t>> families_;
  std::vector<int> dec_;
  std::vector<std::size_t> order_;
  std::uint64_t explored_ = 0;
};

// Canonical order between equal-size masks over the same pool: the set whose
// lowest differing pool neuron it contains comes first.
inline bool canonical_mask_less(std::uint64_t a, std::uint64_t b) {
  std::uint64_t x = a ^ b;
  return x && (a & (x & (~x + 1)));
}

namespace detail {

inline std::size_t max_chosen(const QuerySpec& q, const SearchProblem& sp) {
  std::size_t hi = sp.pool_size();
  if (q.kind == QueryKind::Robustness) hi = std::min(hi, q.k);
  if (q.size_bound) {
    if (*q.size_bound < sp.offset()) return static_cast<std::size_t>(-1);
    hi = std::min(hi, *q.size_bound - sp.offset());
  }
  return hi;
}

inline std::vector<std::size_t> gnostic_neurons(const QuerySpec& q, const Mlp& m, std::uint64_t& passes) {
  Evaluator ev(m);
  std::vector<ActivationTrace> tx, ty;
  for (auto& x : q.X) tx.push_back(ev.trace(x));
  for (auto& y : q.Y) ty.push_back(ev.trace(y));
  passes = ev.passes();
  std::vector<std::size_t> out;
  for (std::size_t f = 0; f < ev.layout().total; ++f)
    if (gnostic_holds(tx, ty, q.t, ev.layout().id(f))) out.push_back(f);
  return out;
}

}  // namespace detail

inline SolveReport solve(const QuerySpec& q, const Mlp& m, const Caps& caps = {}) {
  SolveReport r;
  if (q.kind == QueryKind::Gnostic) {
    auto g = detail::gnostic_neurons(q, m, r.forward_passes);
    Layout lay(m);
    r.explored = lay.total;
    if (g.size() >= q.k) {
      r.status = SolveReport::Status::Found;
      NeuronSet s;
      for (auto f : g) s.insert(lay.id(f));
      r.witness = s;
    }
    return r;
  }
  SearchProblem sp(q, m, caps);
  std::size_t hi = detail::max_chosen(q, sp);
  std::vector<std::uint64_t> none;
  if (hi != static_cast<std::size_t>(-1)) {
    for (std::size_t s = 0; s <= hi && !r.witness; ++s) {
      std::optional<std::uint64_t> best;
      sp.for_each_of_size(s, none, [&](std::uint64_t mask) {
        if (sp.within_depth_width(mask) && (!best || canonical_mask_less(mask, *best))) best = mask;
        return true;
      });
      if (best) r.witness = sp.to_set(*best);
    }
  }
  r.status = r.witness ? SolveReport::Status::Found : SolveReport::Status::NotFound;
  if (q.kind == QueryKind::Robustness) r.verdict = !r.witness;
  r.explored = sp.explored();
  r.forward_passes = sp.evaluator().passes();
  return r;
}

namespace detail {

// All satisfying masks (or only minimal ones) within the size bound, canonical order.
inline std::vector<std::uint64_t> collect(SearchProblem& sp, const QuerySpec& q, bool minimal_only) {
  std::size_t hi = max_chosen(q, sp);
  std::vector<std::uint64_t> all, minimal;
  if (hi == static_cast<std::size_t>(-1)) return all;
  std::vector<std::uint64_t> none;
  for (std::size_t s = 0; s <= hi; ++s) {
    std::vector<std::uint64_t> found;
    sp.for_each_of_size(s, minimal_only ? minimal : none, [&](std::uint64_t mask) {
      found.push_back(mask);
      return true;
    });
    std::sort(found.begin(), found.end(), canonical_mask_less);
    for (auto f : found) (minimal_only ? minimal : all).push_back(f);
  }
  return minimal_only ? minimal : all;
}

}  // namespace detail

inline SolveReport count(const QuerySpec& q, const Mlp& m, const Caps& caps = {}) {
  SolveReport r;
  r.status = SolveReport::Status::Count;
  if (q.kind == QueryKind::Gnostic) {
    r.count = detail::gnostic_neurons(q, m, r.forward_passes).size();
    r.explored = Layout(m).total;
    return r;
  }
  SearchProblem sp(q, m, caps);
  for (auto mask : detail::collect(sp, q, q.minimal))
    if (sp.within_depth_width(mask)) ++r.count;
  r.explored = sp.explored();
  r.forward_passes = sp.evaluator().passes();
  return r;
}

inline std::vector<NeuronSet> enumerate_minimal(const QuerySpec& q, const Mlp& m, const Caps& caps = {}) {
  std::vector<NeuronSet> out;
  if (q.kind == QueryKind::Gnostic) {
    std::uint64_t passes = 0;
    Layout lay(m);
    for (auto f : detail::gnostic_neurons(q, m, passes)) out.push_back(NeuronSet{lay.id(f)});
    return out;
  }
  SearchProblem sp(q, m, caps);
  for (auto mask : detail::collect(sp, q, true))
    if (sp.within_depth_width(mask)) out.push_back(sp.to_set(mask));
  return out;
}

enum class Direction { Min, Max };

inline SolveReport solve_optimal(const QuerySpec& q, const Mlp& m, Direction dir, const Caps& caps = {}) {
  SolveReport r;
  QuerySpec qq = q;
  qq.size_bound.reset();
  if (q.kind == QueryKind::Robustness) qq.k = q.region.size();
  if (q.kind == QueryKind::Gnostic) throw InvalidInput("optimization is not defined for gnostic queries");
  SearchProblem sp(qq, m, caps);
  std::size_t hi = detail::max_chosen(qq, sp);
  std::vector<std::uint64_t> none;
  std::optional<std::uint64_t> best;
  std::optional<std::size_t> best_size;
  auto try_size = [&](std::size_t s) {
    sp.for_each_of_size(s, none, [&](std::uint64_t mask) {
      if (!sp.within_depth_width(mask)) return true;
      if (!best || canonical_mask_less(mask, *best)) best = mask;
      best_size = s;
      return true;
    });
    return best.has_value();
  };
  bool max_dir = dir == Direction::Max && q.kind != QueryKind::Robustness;
  if (max_dir) {
    for (std::size_t s = hi + 1; s-- > 0;)
      if (try_size(s)) break;
  } else {
    for (std::size_t s = 0; s <= hi; ++s)
      if (try_size(s)) break;
  }
  r.explored = sp.explored();
  r.forward_passes = sp.evaluator().passes();
  if (q.kind == QueryKind::Robustness && dir == Direction::Max) {
    // Largest k such that no admissible ablation of size <= k breaks the output.
    r.status = SolveReport::Status::Optimal;
    r.value = best_size ? *best_size - 1 : q.region.size();
    r.witness = best ? sp.to_set(*best) : NeuronSet{};
    return r;
  }
  if (!best) return r;
  r.status = SolveReport::Status::Optimal;
  r.value = *best_size + sp.offset();
  r.witness = sp.to_set(*best);
  return r;
}

// Enumerates every H' ⊆ H with |H'| <= k; the net itself may be large.
inline SolveReport solve_robustness_fpt(const Mlp& m, const NeuronSet& H, std::size_t k, const Coverage& cov,
                                        const Caps& caps = {}) {
  if (H.size() > 20) throw CapExceeded("robustness region larger than 20 neurons");
  if (k < 1 || k > H.size()) throw PreconditionError("robustness needs 1 <= k <= |H|");
  if (cov.type == Coverage::Type::Exists) throw InvalidInput("robustness does not take exists coverage");
  Evaluator ev(m);
  detail::check_ids(m, H, "region");
  Probe p = make_probe(ev, cov, caps);
  p.type = Coverage::Type::Exists;
  std::vector<NeuronId> ids(H.begin(), H.end());
  SolveReport r;
  std::vector<std::uint8_t> removed(ev.layout().total, 0);
  for (std::size_t size = 1; size <= k && !r.witness; ++size) {
    std::vector<std::size_t> idx(size);
    for (std::size_t i = 0; i < size; ++i) idx[i] = i;
    while (true) {
      ++r.explored;
      for (auto i : idx) removed[ev.layout().flat(ids[i])] = 1;
      bool breaks = !core::ablation_violation(ev, removed) && core::ablation(ev, p, removed).verdict;
      for (auto i : idx) removed[ev.layout().flat(ids[i])] = 0;
      if (breaks) {
        NeuronSet w;
        for (auto i : idx) w.insert(ids[i]);
        r.witness = w;
        break;
      }
      std::size_t i = size;
      while (i > 0 && idx[i - 1] == ids.size() - size + i - 1) --i;
      if (i == 0) break;
      ++idx[i - 1];
      for (std::size_t j = i; j < size; ++j) idx[j] = idx[j - 1] + 1;
    }
  }
  r.status = r.witness ? SolveReport::Status::Found : SolveReport::Status::NotFound;
  r.verdict = !r.witness;
  r.forward_passes = ev.passes();
  return r;
}

}  // namespace relucirc
