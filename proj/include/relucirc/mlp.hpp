#pragma once

#include <algorithm>
#include <compare>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "rational.hpp"

namespace relucirc {

using json = nlohmann::ordered_json;

struct InvalidInput : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NeuronId {
  std::uint32_t layer = 0;
  std::uint32_t index = 0;
  auto operator<=>(const NeuronId&) const = default;
};

inline std::string to_string(NeuronId id) {
  return std::to_string(id.layer) + "," + std::to_string(id.index);
}

// Sorted, duplicate-free set of neuron ids.
class NeuronSet {
 public:
  NeuronSet() = default;
  NeuronSet(std::initializer_list<NeuronId> ids) : ids_(ids) { normalize(); }
  explicit NeuronSet(std::vector<NeuronId> ids) : ids_(std::move(ids)) { normalize(); }

  bool contains(NeuronId id) const { return std::binary_search(ids_.begin(), ids_.end(), id); }
  void insert(NeuronId id) {
    auto it = std::lower_bound(ids_.begin(), ids_.end(), id);
    if (it == ids_.end() || *it != id) ids_.insert(it, id);
  }
  void erase(NeuronId id) {
    auto it = std::lower_bound(ids_.begin(), ids_.end(), id);
    if (it != ids_.end() && *it == id) ids_.erase(it);
  }
  NeuronSet without(NeuronId id) const {
    NeuronSet r = *this;
    r.erase(id);
    return r;
  }
  std::size_t size() const { return ids_.size(); }
  bool empty() const { return ids_.empty(); }
  auto begin() const { return ids_.begin(); }
  auto end() const { return ids_.end(); }
  const std::vector<NeuronId>& ids() const { return ids_; }
  bool operator==(const NeuronSet&) const = default;

 private:
  void normalize() {
    std::sort(ids_.begin(), ids_.end());
    ids_.erase(std::unique(ids_.begin(), ids_.end()), ids_.end());
  }
  std::vector<NeuronId> ids_;
};

// Canonical order: by size, then lexicographic on (layer, index).
inline bool canonical_less(const NeuronSet& a, const NeuronSet& b) {
  if (a.size() != b.size()) return a.size() < b.size();
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

using BoolVec = std::vector<std::uint8_t>;

enum class OutputActivation { Step, StepNonneg };

struct Mlp {
  std::vector<std::size_t> layer_sizes;
  // weights[i] connects layer i to layer i+1: rows = layer_sizes[i], cols = layer_sizes[i+1].
  std::vector<std::vector<std::vector<Rational>>> weights;
  // biases[i] belongs to layer i+1.
  std::vector<std::vector<Rational>> biases;
  // Optional per-input-neuron line weight and bias; empty means identity (1, 0).
  std::vector<Rational> input_weights;
  std::vector<Rational> input_biases;
  OutputActivation output_activation = OutputActivation::Step;

  std::size_t num_layers() const { return layer_sizes.size(); }
  std::size_t input_arity() const { return layer_sizes.empty() ? 0 : layer_sizes.front(); }
  std::size_t output_arity() const { return layer_sizes.empty() ? 0 : layer_sizes.back(); }
  std::size_t total_neurons() const {
    std::size_t t = 0;
    for (auto s : layer_sizes) t += s;
    return t;
  }
  std::size_t depth() const { return num_layers(); }
  std::size_t max_width() const {
    return layer_sizes.empty() ? 0 : *std::max_element(layer_sizes.begin(), layer_sizes.end());
  }
  Rational input_weight(std::size_t i) const { return input_weights.empty() ? Rational(1) : input_weights[i]; }
  Rational input_bias(std::size_t i) const { return input_biases.empty() ? Rational(0) : input_biases[i]; }
  const Rational& weight(std::size_t to_layer, std::size_t from, std::size_t to) const {
    return weights[to_layer - 1][from][to];
  }
  const Rational& bias(std::size_t layer, std::size_t index) const { return biases[layer - 1][index]; }
  bool is_input(NeuronId id) const { return id.layer == 0; }
  bool is_output(NeuronId id) const { return id.layer + 1 == num_layers(); }
  bool is_internal(NeuronId id) const { return !is_input(id) && !is_output(id); }
  bool valid_id(NeuronId id) const { return id.layer < num_layers() && id.index < layer_sizes[id.layer]; }

  Rational max_abs_weight() const {
    Rational best = 0;
    for (auto& w : weights)
      for (auto& row : w)
        for (auto& v : row) best = std::max(best, Rational(abs(v)));
    return best;
  }
  Rational max_abs_bias() const {
    Rational best = 0;
    for (auto& b : biases)
      for (auto& v : b) best = std::max(best, Rational(abs(v)));
    return best;
  }
};

// Flat numbering of neurons in layer order.
struct Layout {
  std::vector<std::size_t> offset;
  std::size_t total = 0;
  Layout() = default;
  explicit Layout(const Mlp& m) {
    offset.resize(m.num_layers() + 1);
    for (std::size_t l = 0; l < m.num_layers(); ++l) offset[l + 1] = offset[l] + m.layer_sizes[l];
    total = offset.back();
  }
  std::size_t flat(NeuronId id) const { return offset[id.layer] + id.index; }
  NeuronId id(std::size_t flat) const {
    auto it = std::upper_bound(offset.begin(), offset.end(), flat);
    auto layer = static_cast<std::uint32_t>(it - offset.begin() - 1);
    return {layer, static_cast<std::uint32_t>(flat - offset[layer])};
  }
};

inline NeuronSet all_neurons(const Mlp& m) {
  std::vector<NeuronId> v;
  for (std::uint32_t l = 0; l < m.num_layers(); ++l)
    for (std::uint32_t i = 0; i < m.layer_sizes[l]; ++i) v.push_back({l, i});
  return NeuronSet(std::move(v));
}

inline NeuronSet io_neurons(const Mlp& m) {
  std::vector<NeuronId> v;
  for (std::uint32_t l = 0; l < m.num_layers(); ++l) {
    if (l != 0 && l + 1 != m.num_layers()) continue;
    for (std::uint32_t i = 0; i < m.layer_sizes[l]; ++i) v.push_back({l, i});
  }
  return NeuronSet(std::move(v));
}

inline NeuronSet internal_neurons(const Mlp& m) {
  std::vector<NeuronId> v;
  for (std::uint32_t l = 1; l + 1 < m.num_layers(); ++l)
    for (std::uint32_t i = 0; i < m.layer_sizes[l]; ++i) v.push_back({l, i});
  return NeuronSet(std::move(v));
}

inline NeuronSet complement(const Mlp& m, const NeuronSet& s) {
  std::vector<NeuronId> v;
  for (auto id : all_neurons(m))
    if (!s.contains(id)) v.push_back(id);
  return NeuronSet(std::move(v));
}

// Empty result means the net is well formed.
inline std::vector<std::string> validate(const Mlp& m) {
  std::vector<std::string> out;
  if (m.layer_sizes.size() < 2) out.push_back("need at least 2 layers (input and output)");
  for (std::size_t l = 0; l < m.layer_sizes.size(); ++l)
    if (m.layer_sizes[l] == 0) out.push_back("layer " + std::to_string(l) + ": size must be positive");
  std::size_t L = m.layer_sizes.size();
  if (L >= 1 && m.weights.size() != L - 1)
    out.push_back("expected " + std::to_string(L - 1) + " weight matrices, got " + std::to_string(m.weights.size()));
  if (L >= 1 && m.biases.size() != L - 1)
    out.push_back("expected " + std::to_string(L - 1) + " bias vectors, got " + std::to_string(m.biases.size()));
  for (std::size_t i = 0; i + 1 < L && i < m.weights.size(); ++i) {
    auto& w = m.weights[i];
    std::string name = "layer " + std::to_string(i + 1) + " weights";
    if (w.size() != m.layer_sizes[i]) {
      out.push_back(name + ": expected " + std::to_string(m.layer_sizes[i]) + " rows, got " + std::to_string(w.size()));
      continue;
    }
    for (std::size_t r = 0; r < w.size(); ++r)
      if (w[r].size() != m.layer_sizes[i + 1])
        out.push_back(name + " row " + std::to_string(r) + ": expected " + std::to_string(m.layer_sizes[i + 1]) +
                      " columns, got " + std::to_string(w[r].size()));
  }
  for (std::size_t i = 0; i + 1 < L && i < m.biases.size(); ++i)
    if (m.biases[i].size() != m.layer_sizes[i + 1])
      out.push_back("layer " + std::to_string(i + 1) + " biases: expected " + std::to_string(m.layer_sizes[i + 1]) +
                    " entries, got " + std::to_string(m.biases[i].size()));
  std::size_t n_in = L ? m.layer_sizes[0] : 0;
  if (!m.input_weights.empty() && m.input_weights.size() != n_in)
    out.push_back("input_weights: expected " + std::to_string(n_in) + " entries");
  if (!m.input_biases.empty() && m.input_biases.size() != n_in)
    out.push_back("input_biases: expected " + std::to_string(n_in) + " entries");
  return out;
}

inline std::string activation_name(OutputActivation a) { return a == OutputActivation::Step ? "step" : "step_nonneg"; }

inline json to_json(const Mlp& m) {
  json j;
  j["layer_sizes"] = m.layer_sizes;
  json ws = json::array();
  for (auto& w : m.weights) {
    json mat = json::array();
    for (auto& row : w) {
      json r = json::array();
      for (auto& v : row) r.push_back(to_string(v));
      mat.push_back(r);
    }
    ws.push_back(mat);
  }
  j["weights"] = ws;
  json bs = json::array();
  for (auto& b : m.biases) {
    json r = json::array();
    for (auto& v : b) r.push_back(to_string(v));
    bs.push_back(r);
  }
  j["biases"] = bs;
  auto vec = [](const std::vector<Rational>& v) {
    json r = json::array();
    for (auto& x : v) r.push_back(to_string(x));
    return r;
  };
  if (!m.input_weights.empty()) j["input_weights"] = vec(m.input_weights);
  if (!m.input_biases.empty()) j["input_biases"] = vec(m.input_biases);
  j["output_activation"] = activation_name(m.output_activation);
  return j;
}

namespace detail {

inline Rational json_rational(const json& v, const std::string& where, std::vector<std::string>& errs) {
  if (v.is_string()) {
    auto p = parse_rational(v.get<std::string>());
    if (p.value) return *p.value;
    errs.push_back(where + ": " + p.error);
    return 0;
  }
  if (v.is_number_integer()) return Rational(v.get<long>());
  errs.push_back(where + ": rational must be a \"p/q\" or integer string");
  return 0;
}

}  // namespace detail

// Parses and validates; throws InvalidInput listing every violation.
inline Mlp mlp_from_json(const json& j) {
  std::vector<std::string> errs;
  Mlp m;
  if (!j.is_object()) throw InvalidInput("mlp: expected a JSON object");
  try {
    if (!j.contains("layer_sizes") || !j["layer_sizes"].is_array()) throw InvalidInput("mlp: missing layer_sizes");
    for (auto& s : j["layer_sizes"]) {
      if (!s.is_number_integer() || s.get<long>() < 0) throw InvalidInput("mlp: layer_sizes must be non-negative integers");
      m.layer_sizes.push_back(s.get<std::size_t>());
    }
    if (!j.contains("weights") || !j["weights"].is_array()) throw InvalidInput("mlp: missing weights");
    for (std::size_t i = 0; i < j["weights"].size(); ++i) {
      auto& mat = j["weights"][i];
      if (!mat.is_array()) throw InvalidInput("mlp: weights[" + std::to_string(i) + "] must be a matrix");
      std::vector<std::vector<Rational>> w;
      for (std::size_t r = 0; r < mat.size(); ++r) {
        if (!mat[r].is_array()) throw InvalidInput("mlp: weights[" + std::to_string(i) + "] rows must be arrays");
        std::vector<Rational> row;
        for (std::size_t c = 0; c < mat[r].size(); ++c)
          row.push_back(detail::json_rational(mat[r][c],
                                              "layer " + std::to_string(i + 1) + " neuron " + std::to_string(c) +
                                                  " weight from " + std::to_string(r),
                                              errs));
        w.push_back(std::move(row));
      }
      m.weights.push_back(std::move(w));
    }
    if (!j.contains("biases") || !j["biases"].is_array()) throw InvalidInput("mlp: missing biases");
    for (std::size_t i = 0; i < j["biases"].size(); ++i) {
      auto& b = j["biases"][i];
      if (!b.is_array()) throw InvalidInput("mlp: biases[" + std::to_string(i) + "] must be an array");
      std::vector<Rational> row;
      for (std::size_t c = 0; c < b.size(); ++c)
        row.push_back(detail::json_rational(
            b[c], "layer " + std::to_string(i + 1) + " neuron " + std::to_string(c) + " bias", errs));
      m.biases.push_back(std::move(row));
    }
    auto vec = [&](const char* key, std::vector<Rational>& out) {
      if (!j.contains(key)) return;
      if (!j[key].is_array()) throw InvalidInput(std::string("mlp: ") + key + " must be an array");
      for (std::size_t c = 0; c < j[key].size(); ++c)
        out.push_back(detail::json_rational(j[key][c], std::string(key) + " neuron " + std::to_string(c), errs));
    };
    vec("input_weights", m.input_weights);
    vec("input_biases", m.input_biases);
    std::string act = j.value("output_activation", std::string("step"));
    if (act == "step")
      m.output_activation = OutputActivation::Step;
    else if (act == "step_nonneg")
      m.output_activation = OutputActivation::StepNonneg;
    else
      errs.push_back("output_activation: unknown value '" + act + "'");
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("mlp: ") + e.what());
  }
  for (auto& v : validate(m)) errs.push_back(v);
  if (!errs.empty()) {
    std::string msg = "invalid mlp:";
    for (auto& e : errs) msg += "\n  " + e;
    throw InvalidInput(msg);
  }
  return m;
}

inline json to_json(const NeuronSet& s) {
  json a = json::array();
  for (auto id : s) a.push_back({id.layer, id.index});
  return a;
}

inline NeuronSet neuron_set_from_json(const json& j) {
  if (!j.is_array()) throw InvalidInput("neuron set must be an array of [layer,index] pairs");
  std::vector<NeuronId> v;
  for (auto& p : j) {
    if (!p.is_array() || p.size() != 2 || !p[0].is_number_unsigned() || !p[1].is_number_unsigned())
      throw InvalidInput("neuron set entries must be [layer,index] pairs");
    v.push_back({p[0].get<std::uint32_t>(), p[1].get<std::uint32_t>()});
  }
  return NeuronSet(std::move(v));
}

inline BoolVec boolvec_from_json(const json& j) {
  if (!j.is_array()) throw InvalidInput("boolean vector must be an array");
  BoolVec v;
  for (auto& b : j) {
    if (b.is_boolean())
      v.push_back(b.get<bool>() ? 1 : 0);
    else if (b.is_number_integer() && (b.get<long>() == 0 || b.get<long>() == 1))
      v.push_back(static_cast<std::uint8_t>(b.get<long>()));
    else
      throw InvalidInput("boolean vector entries must be 0 or 1");
  }
  return v;
}

inline json to_json(const BoolVec& v) {
  json a = json::array();
  for (auto b : v) a.push_back(static_cast<int>(b));
  return a;
}

}  // namespace relucirc
