#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "mlp.hpp"

namespace relucirc {

struct ActivationTrace {
  // layers[0] holds input neuron outputs, hidden layers hold ReLU outputs,
  // the last layer holds pre-step values.
  std::vector<std::vector<Rational>> layers;
  BoolVec output;
};

enum class Mode : std::uint8_t {
  Normal,
  Zero,
  Clamp,
  Donor,
  // Interval analysis only: the neuron is either normal or zero / clamped / donor.
  MaybeZero,
  MaybeClamp,
  MaybeDonor,
};

struct Intervention {
  std::vector<Mode> mode;  // per flat neuron
  int clamp_val = 0;
  std::vector<std::int64_t> donor_fast;
  std::vector<Rational> donor_exact;
};

// Exact evaluator. Uses an integer-scaled copy of the net when a static bound
// rules out int64 overflow, otherwise mpq arithmetic.
class Evaluator {
 public:
  explicit Evaluator(const Mlp& m) : m_(m), lay_(m) {
    auto v = validate(m);
    if (!v.empty()) throw InvalidInput("invalid mlp: " + v.front());
    build_topology();
    build_fast();
  }

  const Mlp& mlp() const { return m_; }
  const Layout& layout() const { return lay_; }
  bool fast() const { return fast_; }
  std::uint64_t passes() const { return passes_; }
  void reset_passes() { passes_ = 0; }

  std::size_t pred_begin(std::size_t f) const { return pred_off_[f]; }
  std::size_t pred_end(std::size_t f) const { return pred_off_[f + 1]; }
  std::uint32_t pred_from(std::size_t e) const { return pred_from_[e]; }
  bool has_nonzero_pred(std::size_t f) const { return pred_off_[f + 1] > pred_off_[f]; }

  void check_arity(const BoolVec& x) const {
    if (x.size() != m_.input_arity())
      throw InvalidInput("input arity mismatch: expected " + std::to_string(m_.input_arity()) + ", got " +
                         std::to_string(x.size()));
    for (auto b : x)
      if (b > 1) throw InvalidInput("input entries must be 0 or 1");
  }

  BoolVec output(const BoolVec& x, const Intervention* iv = nullptr) const {
    check_arity(x);
    ++passes_;
    if (fast_) {
      thread_local std::vector<std::int64_t> vals;
      run_fast(x, iv, vals);
      return bits_fast(vals, iv);
    }
    std::vector<Rational> vals;
    run_exact(x, iv, vals);
    return bits_exact(vals, iv);
  }

  ActivationTrace trace(const BoolVec& x, const Intervention* iv = nullptr) const {
    check_arity(x);
    ++passes_;
    ActivationTrace t;
    t.layers.resize(m_.num_layers());
    if (fast_) {
      std::vector<std::int64_t> vals;
      run_fast(x, iv, vals);
      for (std::size_t l = 0; l < m_.num_layers(); ++l)
        for (std::size_t i = 0; i < m_.layer_sizes[l]; ++i)
          t.layers[l].push_back(Rational(mpz_class(std::to_string(vals[lay_.offset[l] + i])), scale_z_[l]));
      for (auto& layer : t.layers)
        for (auto& v : layer) v.canonicalize();
      t.output = bits_fast(vals, iv);
    } else {
      std::vector<Rational> vals;
      run_exact(x, iv, vals);
      for (std::size_t l = 0; l < m_.num_layers(); ++l)
        for (std::size_t i = 0; i < m_.layer_sizes[l]; ++i) t.layers[l].push_back(vals[lay_.offset[l] + i]);
      t.output = bits_exact(vals, iv);
    }
    return t;
  }

  // Donor values for patching, in whichever representation this evaluator uses.
  void record_donor(const BoolVec& y, Intervention& iv) const {
    check_arity(y);
    ++passes_;
    if (fast_)
      run_fast(y, nullptr, iv.donor_fast);
    else
      run_exact(y, nullptr, iv.donor_exact);
  }

  // For each output neuron, whether it can be 0 and whether it can be 1 under
  // every resolution of the Maybe* modes. Empty result when not supported.
  struct Possible {
    bool can0, can1;
  };
  std::optional<std::vector<Possible>> possible_outputs(const BoolVec& x, const Intervention& iv) const {
    if (!fast_) return std::nullopt;
    thread_local std::vector<std::int64_t> lo, hi;
    lo.assign(lay_.total, 0);
    hi.assign(lay_.total, 0);
    std::size_t L = m_.num_layers();
    for (std::size_t l = 0; l < L; ++l) {
      for (std::size_t i = 0; i < m_.layer_sizes[l]; ++i) {
        std::size_t f = lay_.offset[l] + i;
        std::int64_t a, b;
        if (l == 0) {
          a = b = relu(in_w_[i] * x[i] + bias_[f]);
        } else {
          a = b = bias_[f];
          for (std::size_t e = pred_off_[f]; e < pred_off_[f + 1]; ++e) {
            std::int64_t w = w_fast_[e];
            std::uint32_t p = pred_from_[e];
            if (w > 0) {
              a += w * lo[p];
              b += w * hi[p];
            } else {
              a += w * hi[p];
              b += w * lo[p];
            }
          }
          if (l + 1 < L) {
            a = relu(a);
            b = relu(b);
          }
        }
        std::int64_t c = 0;
        Mode md = iv.mode.empty() ? Mode::Normal : iv.mode[f];
        switch (md) {
          case Mode::Normal: break;
          case Mode::Zero: a = b = 0; break;
          case Mode::Clamp: a = b = iv.clamp_val * scale_[l]; break;
          case Mode::Donor: a = b = iv.donor_fast[f]; break;
          case Mode::MaybeZero: c = 0; a = std::min(a, c); b = std::max(b, c); break;
          case Mode::MaybeClamp:
            c = iv.clamp_val * scale_[l];
            a = std::min(a, c);
            b = std::max(b, c);
            break;
          case Mode::MaybeDonor:
            c = iv.donor_fast[f];
            a = std::min(a, c);
            b = std::max(b, c);
            break;
        }
        lo[f] = a;
        hi[f] = b;
      }
    }
    std::vector<Possible> out;
    for (std::size_t i = 0; i < m_.output_arity(); ++i) {
      std::size_t f = lay_.offset[L - 1] + i;
      Mode md = iv.mode.empty() ? Mode::Normal : iv.mode[f];
      if (md == Mode::Zero) {
        out.push_back({true, false});
        continue;
      }
      bool s_lo = step_i(lo[f]), s_hi = step_i(hi[f]);
      bool can0 = !s_lo, can1 = s_hi;
      if (md == Mode::MaybeZero) can0 = true;
      out.push_back({can0, can1});
    }
    return out;
  }

 private:
  static std::int64_t relu(std::int64_t v) { return v > 0 ? v : 0; }
  bool step_i(std::int64_t z) const { return m_.output_activation == OutputActivation::Step ? z > 0 : z >= 0; }
  bool step_q(const Rational& z) const {
    return m_.output_activation == OutputActivation::Step ? sgn(z) > 0 : sgn(z) >= 0;
  }

  void build_topology() {
    pred_off_.assign(lay_.total + 1, 0);
    for (std::size_t l = 0; l < m_.num_layers(); ++l) {
      for (std::size_t i = 0; i < m_.layer_sizes[l]; ++i) {
        std::size_t f = lay_.offset[l] + i;
        pred_off_[f] = pred_from_.size();
        if (l == 0) continue;
        for (std::size_t p = 0; p < m_.layer_sizes[l - 1]; ++p) {
          const Rational& w = m_.weight(l, p, i);
          if (sgn(w) == 0) continue;
          pred_from_.push_back(static_cast<std::uint32_t>(lay_.offset[l - 1] + p));
          w_exact_.push_back(w);
        }
      }
    }
    pred_off_[lay_.total] = pred_from_.size();
    bias_exact_.assign(lay_.total, 0);
    for (std::size_t l = 1; l < m_.num_layers(); ++l)
      for (std::size_t i = 0; i < m_.layer_sizes[l]; ++i) bias_exact_[lay_.offset[l] + i] = m_.bias(l, i);
    for (std::size_t i = 0; i < m_.input_arity(); ++i) bias_exact_[i] = m_.input_bias(i);
  }

  void build_fast() {
    std::size_t L = m_.num_layers();
    const mpz_class limit = mpz_class(1) << 62;
    scale_z_.assign(L, 1);
    mpz_class s0 = 1;
    for (std::size_t i = 0; i < m_.input_arity(); ++i) {
      s0 = lcm(s0, m_.input_weight(i).get_den());
      s0 = lcm(s0, m_.input_bias(i).get_den());
    }
    scale_z_[0] = s0;
    for (std::size_t l = 1; l < L; ++l) {
      mpz_class d = 1;
      for (std::size_t i = 0; i < m_.layer_sizes[l]; ++i) {
        std::size_t f = lay_.offset[l] + i;
        d = lcm(d, bias_exact_[f].get_den());
        for (std::size_t e = pred_off_[f]; e < pred_off_[f + 1]; ++e) d = lcm(d, w_exact_[e].get_den());
      }
      scale_z_[l] = scale_z_[l - 1] * d;
      if (scale_z_[l] >= limit) return;
    }
    auto fits = [&](const mpz_class& z) { return abs(z) < limit; };
    std::vector<long double> bound(L, 0);
    scale_.assign(L, 0);
    for (std::size_t l = 0; l < L; ++l) {
      if (!fits(scale_z_[l])) return;
      scale_[l] = scale_z_[l].get_si();
    }
    in_w_.assign(m_.input_arity(), 0);
    bias_.assign(lay_.total, 0);
    w_fast_.assign(w_exact_.size(), 0);
    for (std::size_t i = 0; i < m_.input_arity(); ++i) {
      Rational w = m_.input_weight(i) * Rational(scale_z_[0]);
      Rational b = bias_exact_[i] * Rational(scale_z_[0]);
      if (!fits(w.get_num()) || !fits(b.get_num())) return;
      in_w_[i] = w.get_num().get_si();
      bias_[i] = b.get_num().get_si();
      bound[0] = std::max(bound[0], std::fabs((long double)in_w_[i]) + std::fabs((long double)bias_[i]));
    }
    bound[0] = std::max(bound[0], (long double)scale_[0]);
    for (std::size_t l = 1; l < L; ++l) {
      mpz_class ratio = scale_z_[l] / scale_z_[l - 1];
      for (std::size_t i = 0; i < m_.layer_sizes[l]; ++i) {
        std::size_t f = lay_.offset[l] + i;
        Rational b = bias_exact_[f] * Rational(scale_z_[l]);
        if (!fits(b.get_num())) return;
        bias_[f] = b.get_num().get_si();
        long double acc = std::fabs((long double)bias_[f]);
        for (std::size_t e = pred_off_[f]; e < pred_off_[f + 1]; ++e) {
          Rational w = w_exact_[e] * Rational(ratio);
          if (!fits(w.get_num())) return;
          w_fast_[e] = w.get_num().get_si();
          acc += std::fabs((long double)w_fast_[e]) * bound[l - 1];
        }
        bound[l] = std::max(bound[l], acc);
      }
      bound[l] = std::max(bound[l], (long double)scale_[l]);
      if (bound[l] >= 4.0e18L) return;
    }
    fast_ = true;
  }

  void run_fast(const BoolVec& x, const Intervention* iv, std::vector<std::int64_t>& vals) const {
    vals.assign(lay_.total, 0);
    std::size_t L = m_.num_layers();
    for (std::size_t l = 0; l < L; ++l) {
      for (std::size_t i = 0; i < m_.layer_sizes[l]; ++i) {
        std::size_t f = lay_.offset[l] + i;
        Mode md = (iv && !iv->mode.empty()) ? iv->mode[f] : Mode::Normal;
        if (md == Mode::Zero) continue;
        if (md == Mode::Clamp) {
          vals[f] = iv->clamp_val * scale_[l];
          continue;
        }
        if (md == Mode::Donor) {
          vals[f] = iv->donor_fast[f];
          continue;
        }
        std::int64_t z;
        if (l == 0) {
          z = in_w_[i] * x[i] + bias_[f];
        } else {
          z = bias_[f];
          for (std::size_t e = pred_off_[f]; e < pred_off_[f + 1]; ++e) z += w_fast_[e] * vals[pred_from_[e]];
        }
        vals[f] = (l + 1 < L) ? relu(z) : z;
      }
    }
  }

  void run_exact(const BoolVec& x, const Intervention* iv, std::vector<Rational>& vals) const {
    vals.assign(lay_.total, 0);
    std::size_t L = m_.num_layers();
    for (std::size_t l = 0; l < L; ++l) {
      for (std::size_t i = 0; i < m_.layer_sizes[l]; ++i) {
        std::size_t f = lay_.offset[l] + i;
        Mode md = (iv && !iv->mode.empty()) ? iv->mode[f] : Mode::Normal;
        if (md == Mode::Zero) continue;
        if (md == Mode::Clamp) {
          vals[f] = iv->clamp_val;
          continue;
        }
        if (md == Mode::Donor) {
          vals[f] = iv->donor_exact[f];
          continue;
        }
        Rational z;
        if (l == 0) {
          z = m_.input_weight(i) * x[i] + bias_exact_[f];
        } else {
          z = bias_exact_[f];
          for (std::size_t e = pred_off_[f]; e < pred_off_[f + 1]; ++e) z += w_exact_[e] * vals[pred_from_[e]];
        }
        if (l + 1 < L && sgn(z) < 0) z = 0;
        vals[f] = z;
      }
    }
  }

  BoolVec bits_fast(const std::vector<std::int64_t>& vals, const Intervention* iv) const {
    BoolVec out;
    std::size_t base = lay_.offset[m_.num_layers() - 1];
    for (std::size_t i = 0; i < m_.output_arity(); ++i) {
      Mode md = (iv && !iv->mode.empty()) ? iv->mode[base + i] : Mode::Normal;
      out.push_back(md == Mode::Zero ? 0 : step_i(vals[base + i]));
    }
    return out;
  }
  BoolVec bits_exact(const std::vector<Rational>& vals, const Intervention* iv) const {
    BoolVec out;
    std::size_t base = lay_.offset[m_.num_layers() - 1];
    for (std::size_t i = 0; i < m_.output_arity(); ++i) {
      Mode md = (iv && !iv->mode.empty()) ? iv->mode[base + i] : Mode::Normal;
      out.push_back(md == Mode::Zero ? 0 : step_q(vals[base + i]));
    }
    return out;
  }

  const Mlp& m_;
  Layout lay_;
  std::vector<std::size_t> pred_off_;
  std::vector<std::uint32_t> pred_from_;
  std::vector<Rational> w_exact_;
  std::vector<Rational> bias_exact_;  // inputs hold their input bias
  bool fast_ = false;
  std::vector<mpz_class> scale_z_;
  std::vector<std::int64_t> scale_;
  std::vector<std::int64_t> in_w_;
  std::vector<std::int64_t> bias_;
  std::vector<std::int64_t> w_fast_;
  mutable std::uint64_t passes_ = 0;
};

namespace detail {

inline void check_ids(const Mlp& m, const NeuronSet& s, const char* what) {
  for (auto id : s)
    if (!m.valid_id(id)) throw InvalidInput(std::string(what) + " contains invalid neuron " + to_string(id));
}

}  // namespace detail

inline Intervention mask_intervention(const Evaluator& ev, const NeuronSet& keep) {
  Intervention iv;
  iv.mode.assign(ev.layout().total, Mode::Zero);
  for (auto id : keep) iv.mode[ev.layout().flat(id)] = Mode::Normal;
  return iv;
}

inline Intervention clamp_intervention(const Evaluator& ev, const NeuronSet& clamped, int val) {
  Intervention iv;
  iv.mode.assign(ev.layout().total, Mode::Normal);
  iv.clamp_val = val;
  for (auto id : clamped) iv.mode[ev.layout().flat(id)] = Mode::Clamp;
  return iv;
}

inline Intervention patch_intervention(const Evaluator& ev, const NeuronSet& patch, const BoolVec& donor) {
  Intervention iv;
  iv.mode.assign(ev.layout().total, Mode::Normal);
  ev.record_donor(donor, iv);
  for (auto id : patch) iv.mode[ev.layout().flat(id)] = Mode::Donor;
  return iv;
}

inline BoolVec forward(const Mlp& m, const BoolVec& x) { return Evaluator(m).output(x); }

inline ActivationTrace forward_trace(const Mlp& m, const BoolVec& x) { return Evaluator(m).trace(x); }

inline BoolVec forward_masked(const Mlp& m, const NeuronSet& keep, const BoolVec& x, bool strict = false) {
  detail::check_ids(m, keep, "keep");
  if (strict) {
    bool any_input = false;
    for (auto id : keep) any_input |= m.is_input(id);
    if (!any_input) throw InvalidInput("keep omits every input neuron");
    for (std::uint32_t i = 0; i < m.output_arity(); ++i)
      if (!keep.contains({static_cast<std::uint32_t>(m.num_layers() - 1), i}))
        throw InvalidInput("keep omits output neuron " + to_string(NeuronId{static_cast<std::uint32_t>(m.num_layers() - 1), i}));
  }
  Evaluator ev(m);
  auto iv = mask_intervention(ev, keep);
  return ev.output(x, &iv);
}

inline BoolVec forward_clamped(const Mlp& m, const NeuronSet& clamped, int val, const BoolVec& x) {
  detail::check_ids(m, clamped, "clamped");
  if (val != 0 && val != 1) throw InvalidInput("clamp value must be 0 or 1");
  for (auto id : clamped)
    if (m.is_output(id)) throw InvalidInput("output neuron " + to_string(id) + " cannot be clamped");
  Evaluator ev(m);
  auto iv = clamp_intervention(ev, clamped, val);
  return ev.output(x, &iv);
}

inline BoolVec forward_patched(const Mlp& m, const NeuronSet& patch, const BoolVec& donor, const BoolVec& x) {
  detail::check_ids(m, patch, "patch");
  for (auto id : patch)
    if (!m.is_internal(id)) throw InvalidInput("patch contains non-internal neuron " + to_string(id));
  Evaluator ev(m);
  auto iv = patch_intervention(ev, patch, donor);
  return ev.output(x, &iv);
}

// Path of nonzero-weight connections inside keep from an input to an output.
inline bool is_active(const Evaluator& ev, const std::vector<std::uint8_t>& keep_flat) {
  const Mlp& m = ev.mlp();
  const Layout& lay = ev.layout();
  std::vector<std::uint8_t> reach(lay.total, 0);
  for (std::size_t i = 0; i < m.input_arity(); ++i) reach[i] = keep_flat[i];
  for (std::size_t f = m.input_arity(); f < lay.total; ++f) {
    if (!keep_flat[f]) continue;
    for (std::size_t e = ev.pred_begin(f); e < ev.pred_end(f); ++e)
      if (reach[ev.pred_from(e)]) {
        reach[f] = 1;
        break;
      }
  }
  std::size_t base = lay.offset[m.num_layers() - 1];
  for (std::size_t i = 0; i < m.output_arity(); ++i)
    if (reach[base + i]) return true;
  return false;
}

inline bool is_active(const Mlp& m, const NeuronSet& keep) {
  detail::check_ids(m, keep, "keep");
  Evaluator ev(m);
  std::vector<std::uint8_t> flat(ev.layout().total, 0);
  for (auto id : keep) flat[ev.layout().flat(id)] = 1;
  return is_active(ev, flat);
}

}  // namespace relucirc
