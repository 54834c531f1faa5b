#pragma once

#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "graphs.hpp"
#include "query.hpp"

namespace relucirc {

// ---- gates ----

struct GateSpec {
  std::vector<Rational> weights;
  Rational bias;
};

inline GateSpec relu_not() { return {{Rational(-1)}, Rational(1)}; }

inline GateSpec relu_and(std::size_t n) {
  if (n == 0) throw InvalidInput("AND gate needs at least one input");
  return {std::vector<Rational>(n, Rational(1)), Rational(-static_cast<long>(n - 1))};
}

// Net with n inputs and one stepped output neuron implementing the gate.
inline Mlp gate_mlp(const GateSpec& g) {
  Mlp m;
  m.layer_sizes = {g.weights.size(), 1};
  m.weights.push_back({});
  for (auto& w : g.weights) m.weights[0].push_back({w});
  m.biases = {{g.bias}};
  return m;
}

// OR by De Morgan: NOT on every input, an n-way AND, NOT on the result.
inline Mlp relu_or(std::size_t n) {
  if (n == 0) throw InvalidInput("OR gate needs at least one input");
  Mlp m;
  m.layer_sizes = {n, n, 1, 1};
  auto nt = relu_not();
  auto an = relu_and(n);
  std::vector<std::vector<Rational>> w1(n, std::vector<Rational>(n, Rational(0)));
  for (std::size_t i = 0; i < n; ++i) w1[i][i] = nt.weights[0];
  std::vector<std::vector<Rational>> w2(n, std::vector<Rational>(1));
  for (std::size_t i = 0; i < n; ++i) w2[i][0] = an.weights[i];
  m.weights = {w1, w2, {{nt.weights[0]}}};
  m.biases = {std::vector<Rational>(n, nt.bias), {an.bias}, {nt.bias}};
  return m;
}

// ---- bowtie graphs ----

// Vertex 0 = v_B1, 1 = v_B2, then c pendants on v_B1 and c pendants on v_B2.
inline Graph bowtie(std::size_t c) {
  if (c < 1) throw InvalidInput("bowtie needs c >= 1");
  Graph g;
  g.n = 2 * c + 2;
  g.add_edge(0, 1);
  for (std::size_t i = 0; i < c; ++i) {
    g.add_edge(0, 2 + i);
    g.add_edge(1, 2 + c + i);
  }
  g.normalize();
  return g;
}

// Disjoint union of g (vertices keep their indices) and B_{4|E|} (shifted by n).
inline Graph bow(const Graph& g) {
  if (auto v = g.isolated_vertex()) throw InvalidInput("bow: vertex " + std::to_string(*v) + " is isolated");
  if (g.edges.empty()) throw InvalidInput("bow: graph has no edges");
  Graph b = bowtie(4 * g.edges.size());
  Graph out;
  out.n = g.n + b.n;
  out.edges = g.edges;
  for (auto [u, v] : b.edges) out.add_edge(u + g.n, v + g.n);
  out.normalize();
  return out;
}

// ---- reduction kinds ----

enum class ReductionKind {
  CliqueToMLSC,
  VcToMLSC,
  MnlVcToMnlLSC,
  VcToMGSC,
  TdtToMGSC,
  CliqueToMLCA,
  DsToMLCA,
  CliqueToMLCC,
  DsToMLCC,
  DsToMLCP,
  HsToMLNC,
  CliqueToMSR,
  DsToMSR,
  MinVcToMinMLCA,
};

inline const std::vector<ReductionKind>& all_reduction_kinds() {
  static const std::vector<ReductionKind> v = {
      ReductionKind::CliqueToMLSC, ReductionKind::VcToMLSC,     ReductionKind::MnlVcToMnlLSC,
      ReductionKind::VcToMGSC,     ReductionKind::TdtToMGSC,    ReductionKind::CliqueToMLCA,
      ReductionKind::DsToMLCA,     ReductionKind::CliqueToMLCC, ReductionKind::DsToMLCC,
      ReductionKind::DsToMLCP,     ReductionKind::HsToMLNC,     ReductionKind::CliqueToMSR,
      ReductionKind::DsToMSR,      ReductionKind::MinVcToMinMLCA};
  return v;
}

inline std::string reduction_name(ReductionKind k) {
  switch (k) {
    case ReductionKind::CliqueToMLSC: return "clique-mlsc";
    case ReductionKind::VcToMLSC: return "vc-mlsc";
    case ReductionKind::MnlVcToMnlLSC: return "mnlvc-mnllsc";
    case ReductionKind::VcToMGSC: return "vc-mgsc";
    case ReductionKind::TdtToMGSC: return "tdt-mgsc";
    case ReductionKind::CliqueToMLCA: return "clique-mlca";
    case ReductionKind::DsToMLCA: return "ds-mlca";
    case ReductionKind::CliqueToMLCC: return "clique-mlcc";
    case ReductionKind::DsToMLCC: return "ds-mlcc";
    case ReductionKind::DsToMLCP: return "ds-mlcp";
    case ReductionKind::HsToMLNC: return "hs-mlnc";
    case ReductionKind::CliqueToMSR: return "clique-msr";
    case ReductionKind::DsToMSR: return "ds-msr";
    default: return "minvc-minmlca";
  }
}

inline ReductionKind reduction_from_name(const std::string& s) {
  for (auto k : all_reduction_kinds())
    if (reduction_name(k) == s) return k;
  throw InvalidInput("unknown reduction kind '" + s + "'");
}

enum class SourceType { Graph, HittingSet, Dnf };

inline SourceType source_type(ReductionKind k) {
  if (k == ReductionKind::HsToMLNC) return SourceType::HittingSet;
  if (k == ReductionKind::TdtToMGSC) return SourceType::Dnf;
  return SourceType::Graph;
}

inline bool needs_k(ReductionKind k) {
  return k != ReductionKind::MnlVcToMnlLSC && k != ReductionKind::MinVcToMinMLCA;
}

using Source = std::variant<Graph, HittingSetInstance, DnfFormula>;

struct CompiledInstance {
  ReductionKind kind = ReductionKind::CliqueToMLSC;
  Mlp mlp;
  QuerySpec query;
  std::vector<std::string> provenance;  // per flat neuron
  std::vector<BoolVec> designated_inputs;
  std::optional<std::size_t> k;
  std::size_t source_size = 0;  // |V|, |S| or number of variables
};

inline std::pair<std::string, std::size_t> split_tag(const std::string& tag) {
  auto c = tag.find(':');
  if (c == std::string::npos) return {tag, 0};
  return {tag.substr(0, c), std::stoul(tag.substr(c + 1))};
}

inline json to_json(const CompiledInstance& ci) {
  json j = to_json(ci.mlp);
  j["query"] = to_json(ci.query);
  json prov = json::object();
  Layout lay(ci.mlp);
  for (std::size_t f = 0; f < ci.provenance.size(); ++f) prov[to_string(lay.id(f))] = ci.provenance[f];
  j["provenance"] = prov;
  json d = json::array();
  for (auto& x : ci.designated_inputs) d.push_back(to_json(x));
  j["designated_inputs"] = d;
  json r = {{"kind", reduction_name(ci.kind)}, {"source_size", ci.source_size}};
  if (ci.k) r["k"] = *ci.k;
  j["reduction"] = r;
  return j;
}

inline CompiledInstance instance_from_json(const json& j) {
  try {
    CompiledInstance ci;
    ci.mlp = mlp_from_json(j);
    if (!j.contains("query")) throw InvalidInput("instance: missing query");
    ci.query = query_from_json(j["query"]);
    Layout lay(ci.mlp);
    ci.provenance.assign(lay.total, "");
    if (j.contains("provenance")) {
      if (!j["provenance"].is_object()) throw InvalidInput("instance: provenance must be an object");
      for (auto& [key, val] : j["provenance"].items()) {
        auto c = key.find(',');
        if (c == std::string::npos || !val.is_string()) throw InvalidInput("instance: bad provenance entry " + key);
        NeuronId id{static_cast<std::uint32_t>(std::stoul(key.substr(0, c))),
                    static_cast<std::uint32_t>(std::stoul(key.substr(c + 1)))};
        if (!ci.mlp.valid_id(id)) throw InvalidInput("instance: provenance names invalid neuron " + key);
        ci.provenance[lay.flat(id)] = val.get<std::string>();
      }
    }
    if (j.contains("designated_inputs"))
      for (auto& x : j["designated_inputs"]) ci.designated_inputs.push_back(boolvec_from_json(x));
    if (j.contains("reduction")) {
      auto& r = j["reduction"];
      ci.kind = reduction_from_name(r.at("kind").get<std::string>());
      if (r.contains("k")) ci.k = r["k"].get<std::size_t>();
      ci.source_size = r.value("source_size", std::size_t{0});
    }
    return ci;
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("instance: ") + e.what());
  } catch (const std::logic_error& e) {
    throw InvalidInput(std::string("instance: ") + e.what());
  }
}

namespace detail {

class NetBuilder {
 public:
  explicit NetBuilder(std::vector<std::size_t> sizes) {
    for (auto s : sizes)
      if (s == 0) throw InvalidInput("construction would have an empty layer");
    m_.layer_sizes = sizes;
    for (std::size_t l = 1; l < sizes.size(); ++l) {
      m_.weights.emplace_back(sizes[l - 1], std::vector<Rational>(sizes[l], Rational(0)));
      m_.biases.emplace_back(sizes[l], Rational(0));
    }
    lay_ = Layout(m_);
    tags_.assign(lay_.total, "");
  }
  void weight(std::size_t to_layer, std::size_t from, std::size_t to, long w) {
    m_.weights[to_layer - 1][from][to] = w;
  }
  void bias(std::size_t layer, std::size_t i, long b) { m_.biases[layer - 1][i] = b; }
  void input_line(std::size_t i, long w, long b) {
    if (m_.input_weights.empty()) {
      m_.input_weights.assign(m_.layer_sizes[0], Rational(1));
      m_.input_biases.assign(m_.layer_sizes[0], Rational(0));
    }
    m_.input_weights[i] = w;
    m_.input_biases[i] = b;
  }
  void tag(std::size_t layer, std::size_t i, std::string t) { tags_[lay_.offset[layer] + i] = std::move(t); }
  void tag(std::size_t layer, std::size_t i, const std::string& role, std::size_t idx) {
    tag(layer, i, role + ":" + std::to_string(idx));
  }
  Mlp& mlp() { return m_; }
  std::vector<std::string>& tags() { return tags_; }

 private:
  Mlp m_;
  Layout lay_;
  std::vector<std::string> tags_;
};

inline long edges_needed(std::size_t k) { return static_cast<long>(k * (k - 1) / 2); }

inline void require(bool ok, const std::string& msg) {
  if (!ok) throw InvalidInput(msg);
}

inline void clique_k(const Graph& g, std::size_t k) {
  require(k >= 2 && k <= g.n, "clique reductions need 2 <= k <= |V|");
  require(!g.edges.empty(), "clique reductions need at least one edge");
}

// in -> vertex NOT -> edge AND -> edge NOT -> |E|-way AND output.
inline NetBuilder vc_net(const Graph& g) {
  require(!g.edges.empty(), "vertex cover reductions need at least one edge");
  std::size_t E = g.edges.size();
  NetBuilder b({1, g.n, E, E, 1});
  b.tag(0, 0, "input");
  for (std::size_t i = 0; i < g.n; ++i) {
    b.weight(1, 0, i, -1);
    b.bias(1, i, 1);
    b.tag(1, i, "vertex", i);
  }
  for (std::size_t e = 0; e < E; ++e) {
    b.weight(2, g.edges[e].first, e, 1);
    b.weight(2, g.edges[e].second, e, 1);
    b.bias(2, e, -1);
    b.tag(2, e, "edge_and", e);
    b.weight(3, e, e, -1);
    b.bias(3, e, 1);
    b.tag(3, e, "edge_not", e);
    b.weight(4, e, 0, 1);
  }
  b.bias(4, 0, -static_cast<long>(E - 1));
  b.tag(4, 0, "output");
  return b;
}

// Closed-neighbourhood AND layer, NOT layer and |V|-way AND output on top of
// the layer `src` whose neuron i stands for vertex i.
inline void ds_tail(NetBuilder& b, const Graph& g, std::size_t src) {
  for (std::size_t j = 0; j < g.n; ++j) {
    auto nc = g.closed_neighbourhood(j);
    for (auto i : nc) b.weight(src + 1, i, j, 1);
    b.bias(src + 1, j, -static_cast<long>(nc.size() - 1));
    b.tag(src + 1, j, "nbhd_and", j);
    b.weight(src + 2, j, j, -1);
    b.bias(src + 2, j, 1);
    b.tag(src + 2, j, "nbhd_not", j);
    b.weight(src + 3, j, 0, 1);
  }
  b.bias(src + 3, 0, -static_cast<long>(g.n - 1));
  b.tag(src + 3, 0, "output");
}

inline CompiledInstance finish(ReductionKind kind, NetBuilder& b, QuerySpec q, std::vector<BoolVec> designated,
                               std::optional<std::size_t> k, std::size_t source_size) {
  CompiledInstance ci;
  ci.kind = kind;
  ci.mlp = std::move(b.mlp());
  ci.provenance = std::move(b.tags());
  ci.query = std::move(q);
  ci.designated_inputs = std::move(designated);
  ci.k = k;
  ci.source_size = source_size;
  auto v = validate(ci.mlp);
  if (!v.empty()) throw std::logic_error("compiled net is malformed: " + v.front());
  return ci;
}

inline QuerySpec base_query(QueryKind kind, Coverage cov) {
  QuerySpec q;
  q.kind = kind;
  q.coverage = std::move(cov);
  return q;
}

}  // namespace detail

inline CompiledInstance compile(ReductionKind kind, const Source& src, std::optional<std::size_t> k_opt,
                                std::size_t dnf_cap = 20) {
  using detail::require;
  if (needs_k(kind) && !k_opt) throw InvalidInput("kind " + reduction_name(kind) + " requires -k");
  std::size_t k = k_opt.value_or(0);
  auto graph = [&]() -> const Graph& {
    if (!std::holds_alternative<Graph>(src)) throw InvalidInput(reduction_name(kind) + " takes a graph source");
    return std::get<Graph>(src);
  };
  switch (kind) {
    case ReductionKind::CliqueToMLSC: {
      const Graph& g = graph();
      detail::clique_k(g, k);
      long need = detail::edges_needed(k);
      require(static_cast<long>(g.edges.size()) >= need, "clique-mlsc needs k(k-1)/2 <= |E|");
      std::size_t E = g.edges.size();
      detail::NetBuilder b({1, g.n, E, 1});
      b.tag(0, 0, "input");
      for (std::size_t i = 0; i < g.n; ++i) {
        b.weight(1, 0, i, 1);
        b.tag(1, i, "vertex", i);
      }
      for (std::size_t e = 0; e < E; ++e) {
        b.weight(2, g.edges[e].first, e, 1);
        b.weight(2, g.edges[e].second, e, 1);
        b.bias(2, e, -1);
        b.tag(2, e, "edge", e);
        b.weight(3, e, 0, 1);
      }
      b.bias(3, 0, -(need - 1));
      b.tag(3, 0, "output");
      auto q = detail::base_query(QueryKind::Sufficient, Coverage::local({1}));
      q.size_bound = static_cast<std::size_t>(need) + k + 2;
      q.depth_bound = 4;
      q.width_bound = std::max<std::size_t>(k, static_cast<std::size_t>(need));
      return detail::finish(kind, b, q, {{1}}, k, g.n);
    }
    case ReductionKind::VcToMLSC:
    case ReductionKind::MnlVcToMnlLSC: {
      const Graph& g = graph();
      if (kind == ReductionKind::VcToMLSC) require(k <= g.n, "vc-mlsc needs 0 <= k <= |V|");
      auto b = detail::vc_net(g);
      auto q = detail::base_query(QueryKind::Sufficient, Coverage::local({1}));
      std::size_t E = g.edges.size();
      if (kind == ReductionKind::VcToMLSC) {
        q.size_bound = 2 * E + k + 2;
        q.depth_bound = 5;
        q.width_bound = E;
      } else {
        b.input_line(0, 0, 1);
        q.minimal = true;
      }
      return detail::finish(kind, b, q, {{1}}, k_opt, g.n);
    }
    case ReductionKind::VcToMGSC: {
      const Graph& g = graph();
      require(k <= g.n, "vc-mgsc needs 0 <= k <= |V|");
      Graph gb = bow(g);
      auto b = detail::vc_net(gb);
      for (std::size_t i = g.n; i < gb.n; ++i) b.tag(1, i, "bowtie", i - g.n);
      std::size_t E = gb.edges.size();
      auto q = detail::base_query(QueryKind::Sufficient, Coverage::global());
      q.size_bound = 2 * E + k + 4;
      q.depth_bound = 5;
      q.width_bound = E;
      return detail::finish(kind, b, q, {{1}, {0}}, k, g.n);
    }
    case ReductionKind::TdtToMGSC: {
      if (!std::holds_alternative<DnfFormula>(src)) throw InvalidInput("tdt-mgsc takes a DNF source");
      const DnfFormula& f = std::get<DnfFormula>(src);
      validate_dnf(f);
      std::size_t V = f.var_count, T = f.terms.size();
      require(V >= 1 && T >= 1, "tdt-mgsc needs at least one variable and one term");
      require(k >= 1 && k <= T, "tdt-mgsc needs 1 <= k <= T");
      if (!dnf_is_tautology(f, dnf_cap)) throw InvalidInput("tdt-mgsc: formula is not a tautology");
      detail::NetBuilder b({V, 2 * V, T + 1, T, 1});
      for (std::size_t i = 0; i < V; ++i) {
        b.tag(0, i, "var", i);
        b.weight(1, i, i, 1);
        b.tag(1, i, "var_pos", i);
        b.weight(1, i, V + i, -1);
        b.bias(1, V + i, 1);
        b.tag(1, V + i, "var_neg", i);
      }
      for (std::size_t t = 0; t < T; ++t) {
        for (auto& lit : f.terms[t]) b.weight(2, lit.positive ? lit.var : V + lit.var, t, 1);
        b.bias(2, t, -static_cast<long>(f.terms[t].size() - 1));
        b.tag(2, t, "term", t);
        b.weight(3, t, t, 1);
        b.weight(3, T, t, 1);
        b.bias(3, t, -1);
        b.tag(3, t, "term_mod", t);
        b.weight(4, t, 0, 1);
      }
      for (std::size_t i = 0; i < 2 * V; ++i) b.weight(2, i, T, 1);
      b.bias(2, T, -static_cast<long>(V - 1));
      b.tag(2, T, "gadget");
      b.tag(4, 0, "output");
      auto q = detail::base_query(QueryKind::Sufficient, Coverage::global());
      q.size_bound = 3 * V + 2 * k + 2;
      std::vector<BoolVec> des;
      if (V <= 10) {
        Caps caps;
        des = all_inputs(V, caps);
      }
      return detail::finish(kind, b, q, des, k, V);
    }
    case ReductionKind::CliqueToMLCA: {
      const Graph& g = graph();
      detail::clique_k(g, k);
      std::size_t n = g.n, E = g.edges.size();
      detail::NetBuilder b({1, 2 * n, n, E, 1});
      b.input_line(0, 0, 1);
      b.tag(0, 0, "input");
      for (std::size_t i = 0; i < n; ++i) {
        b.weight(1, 0, i, 1);
        b.weight(1, 0, n + i, 1);
        b.tag(1, i, "p1", i);
        b.tag(1, n + i, "p2", i);
        b.weight(2, i, i, -2);
        b.weight(2, n + i, i, 1);
        b.tag(2, i, "regulator", i);
      }
      for (std::size_t e = 0; e < E; ++e) {
        b.weight(3, g.edges[e].first, e, 1);
        b.weight(3, g.edges[e].second, e, 1);
        b.bias(3, e, -1);
        b.tag(3, e, "edge", e);
        b.weight(4, e, 0, 1);
      }
      b.bias(4, 0, -(detail::edges_needed(k) - 1));
      b.tag(4, 0, "output");
      auto q = detail::base_query(QueryKind::Ablation, Coverage::local({1}));
      q.size_bound = k;
      return detail::finish(kind, b, q, {{1}}, k, n);
    }
    case ReductionKind::DsToMLCA:
    case ReductionKind::DsToMLCC: {
      const Graph& g = graph();
      require(g.n >= 1, "dominating set reductions need a vertex");
      require(k >= 1 && k <= g.n, "dominating set reductions need 1 <= k <= |V|");
      if (kind == ReductionKind::DsToMLCA) require(!g.edges.empty(), "ds-mlca needs at least one edge");
      detail::NetBuilder b({g.n, g.n, g.n, 1});
      for (std::size_t i = 0; i < g.n; ++i) {
        b.input_line(i, 0, 1);
        b.tag(0, i, "vertex", i);
      }
      detail::ds_tail(b, g, 0);
      BoolVec ones(g.n, 1);
      QuerySpec q;
      if (kind == ReductionKind::DsToMLCA) {
        q = detail::base_query(QueryKind::Ablation, Coverage::local(ones));
      } else {
        q = detail::base_query(QueryKind::Clamping, Coverage::local(ones));
        q.val = 0;
      }
      q.size_bound = k;
      return detail::finish(kind, b, q, {ones}, k, g.n);
    }
    case ReductionKind::CliqueToMLCC: {
      const Graph& g = graph();
      detail::clique_k(g, k);
      std::size_t n = g.n, E = g.edges.size();
      detail::NetBuilder b({n, E, 1});
      for (std::size_t i = 0; i < n; ++i) {
        b.input_line(i, 1, -2);
        b.tag(0, i, "vertex", i);
      }
      for (std::size_t e = 0; e < E; ++e) {
        b.weight(1, g.edges[e].first, e, 1);
        b.weight(1, g.edges[e].second, e, 1);
        b.bias(1, e, -1);
        b.tag(1, e, "edge", e);
        b.weight(2, e, 0, 1);
      }
      b.bias(2, 0, -(detail::edges_needed(k) - 1));
      b.tag(2, 0, "output");
      BoolVec zeros(n, 0);
      auto q = detail::base_query(QueryKind::Clamping, Coverage::local(zeros));
      q.val = 1;
      q.size_bound = k;
      return detail::finish(kind, b, q, {zeros}, k, n);
    }
    case ReductionKind::DsToMLCP: {
      const Graph& g = graph();
      require(g.n >= 1, "ds-mlcp needs a vertex");
      require(k >= 1 && k <= g.n, "ds-mlcp needs 1 <= k <= |V|");
      detail::NetBuilder b({g.n, g.n, g.n, g.n, 1});
      for (std::size_t i = 0; i < g.n; ++i) {
        b.tag(0, i, "vertex", i);
        b.weight(1, i, i, 1);
        b.tag(1, i, "hidden_vertex", i);
      }
      detail::ds_tail(b, g, 1);
      BoolVec ones(g.n, 1), zeros(g.n, 0);
      auto q = detail::base_query(QueryKind::Patching, Coverage::local(ones));
      q.donor = zeros;
      q.size_bound = k;
      return detail::finish(kind, b, q, {ones, zeros}, k, g.n);
    }
    case ReductionKind::HsToMLNC: {
      if (!std::holds_alternative<HittingSetInstance>(src)) throw InvalidInput("hs-mlnc takes a hitting set source");
      const HittingSetInstance& h = std::get<HittingSetInstance>(src);
      validate_hs(h);
      std::size_t S = h.universe_size, C = h.sets.size();
      require(S >= 1 && C >= 1, "hs-mlnc needs a non-empty universe and at least one set");
      require(k >= 1 && k <= S, "hs-mlnc needs 1 <= k <= |S|");
      detail::NetBuilder b({1, S, C, 1});
      b.input_line(0, 0, 1);
      b.tag(0, 0, "input");
      for (std::size_t s = 0; s < S; ++s) {
        b.weight(1, 0, s, 1);
        b.tag(1, s, "element", s);
      }
      for (std::size_t j = 0; j < C; ++j) {
        for (auto s : h.sets[j]) b.weight(2, s, j, 1);
        b.bias(2, j, -static_cast<long>(h.sets[j].size() - 1));
        b.tag(2, j, "set", j);
        b.weight(3, j, 0, 1);
      }
      b.tag(3, 0, "output");
      auto q = detail::base_query(QueryKind::Necessary, Coverage::local({0}));
      q.size_bound = k;
      return detail::finish(kind, b, q, {{0}}, k, S);
    }
    case ReductionKind::CliqueToMSR: {
      const Graph& g = graph();
      detail::clique_k(g, k);
      long need = detail::edges_needed(k);
      require(static_cast<long>(g.edges.size()) >= need, "clique-msr needs k(k-1)/2 <= |E|");
      std::size_t n = g.n, E = g.edges.size();
      detail::NetBuilder b({n, E, 1});
      for (std::size_t i = 0; i < n; ++i) b.tag(0, i, "vertex", i);
      for (std::size_t e = 0; e < E; ++e) {
        b.weight(1, g.edges[e].first, e, 1);
        b.weight(1, g.edges[e].second, e, 1);
        b.bias(1, e, -1);
        b.tag(1, e, "edge", e);
        b.weight(2, e, 0, 1);
      }
      b.bias(2, 0, -(need - 1));
      b.tag(2, 0, "output");
      BoolVec ones(n, 1);
      auto q = detail::base_query(QueryKind::SufficientReason, Coverage::local(ones));
      q.size_bound = k;
      return detail::finish(kind, b, q, {ones}, k, n);
    }
    case ReductionKind::DsToMSR: {
      const Graph& g = graph();
      require(g.n >= 1, "ds-msr needs a vertex");
      require(k >= 1 && k <= g.n, "ds-msr needs 1 <= k <= |V|");
      detail::NetBuilder b({g.n, g.n, g.n, 1});
      for (std::size_t i = 0; i < g.n; ++i) b.tag(0, i, "vertex", i);
      detail::ds_tail(b, g, 0);
      BoolVec zeros(g.n, 0);
      auto q = detail::base_query(QueryKind::SufficientReason, Coverage::local(zeros));
      q.size_bound = k;
      return detail::finish(kind, b, q, {zeros}, k, g.n);
    }
    case ReductionKind::MinVcToMinMLCA: {
      const Graph& g = graph();
      require(!g.edges.empty(), "minvc-minmlca needs at least one edge");
      std::size_t n = g.n, E = g.edges.size();
      detail::NetBuilder b({1, 2 * n, n, E, E, 1});
      b.input_line(0, 0, 1);
      b.tag(0, 0, "input");
      for (std::size_t i = 0; i < n; ++i) {
        b.weight(1, 0, i, 1);
        b.weight(1, 0, n + i, 1);
        b.tag(1, i, "p1", i);
        b.tag(1, n + i, "p2", i);
        b.weight(2, i, i, 2);
        b.weight(2, n + i, i, 0);
        b.bias(2, i, -1);
        b.tag(2, i, "vertex_and", i);
      }
      for (std::size_t e = 0; e < E; ++e) {
        b.weight(3, g.edges[e].first, e, 1);
        b.weight(3, g.edges[e].second, e, 1);
        b.bias(3, e, -1);
        b.tag(3, e, "edge_and", e);
        b.weight(4, e, e, -1);
        b.bias(4, e, 1);
        b.tag(4, e, "edge_not", e);
        b.weight(5, e, 0, 1);
      }
      b.bias(5, 0, -static_cast<long>(E - 1));
      b.tag(5, 0, "output");
      auto q = detail::base_query(QueryKind::Ablation, Coverage::local({1}));
      return detail::finish(kind, b, q, {{1}}, k_opt, n);
    }
  }
  throw InvalidInput("unknown reduction kind");
}

// ---- decoding ----

namespace detail {

// role -> whether it decodes to its index; roles absent from the map are
// structural (ignored) for circuit kinds and forbidden for set kinds.
inline std::map<std::string, bool> decode_roles(ReductionKind k, bool& forbid_others) {
  forbid_others = true;
  switch (k) {
    case ReductionKind::CliqueToMLSC:
    case ReductionKind::VcToMLSC:
    case ReductionKind::MnlVcToMnlLSC:
    case ReductionKind::VcToMGSC:
      forbid_others = false;
      return {{"vertex", true}};
    case ReductionKind::TdtToMGSC:
      forbid_others = false;
      return {{"term", true}};
    case ReductionKind::CliqueToMLCA:
    case ReductionKind::MinVcToMinMLCA: return {{"p1", true}};
    case ReductionKind::DsToMLCA:
    case ReductionKind::DsToMLCC: return {{"vertex", true}, {"nbhd_and", true}};
    case ReductionKind::DsToMLCP: return {{"hidden_vertex", true}, {"nbhd_and", true}, {"nbhd_not", true}};
    case ReductionKind::CliqueToMLCC: return {{"vertex", true}};
    case ReductionKind::HsToMLNC: return {{"element", true}};
    case ReductionKind::CliqueToMSR:
    case ReductionKind::DsToMSR: return {{"vertex", true}};
  }
  return {};
}

}  // namespace detail

inline VertexSet decode(const CompiledInstance& ci, const NeuronSet& witness) {
  Layout lay(ci.mlp);
  bool forbid = true;
  auto roles = detail::decode_roles(ci.kind, forbid);
  std::vector<std::size_t> out;
  std::vector<std::size_t> term_mod;
  for (auto id : witness) {
    if (!ci.mlp.valid_id(id)) throw InvalidInput("witness neuron " + to_string(id) + " does not exist");
    auto [role, idx] = split_tag(ci.provenance[lay.flat(id)]);
    if (ci.kind == ReductionKind::TdtToMGSC && role == "term_mod") term_mod.push_back(idx);
    if (roles.count(role)) {
      out.push_back(idx);
    } else if (forbid) {
      throw InvalidInput("witness neuron " + to_string(id) + " has non-decodable role '" + role + "'");
    }
  }
  if (ci.kind == ReductionKind::TdtToMGSC)
    std::erase_if(out, [&](std::size_t t) { return std::find(term_mod.begin(), term_mod.end(), t) == term_mod.end(); });
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

// Forward mapping of a source solution to the witness the proofs construct.
inline NeuronSet encode_solution(const CompiledInstance& ci, const VertexSet& sol) {
  Layout lay(ci.mlp);
  auto has = [&](std::size_t i) { return std::find(sol.begin(), sol.end(), i) != sol.end(); };
  NeuronSet out;
  bool circuit = ci.query.kind == QueryKind::Sufficient;
  for (std::size_t f = 0; f < lay.total; ++f) {
    auto id = lay.id(f);
    auto [role, idx] = split_tag(ci.provenance[f]);
    bool keep = false;
    if (circuit) {
      if (role == "input" || role == "output" || role == "var" || role == "var_pos" || role == "var_neg" ||
          role == "gadget" || role == "edge_and" || role == "edge_not")
        keep = true;
      if (role == "vertex") keep = has(idx);
      if (role == "term" || role == "term_mod") keep = has(idx);
      if (role == "edge") {
        // edge neurons of a clique circuit: both endpoints chosen
        keep = false;
      }
    } else {
      switch (ci.kind) {
        case ReductionKind::CliqueToMLCA:
        case ReductionKind::MinVcToMinMLCA: keep = role == "p1" && has(idx); break;
        case ReductionKind::DsToMLCP: keep = role == "hidden_vertex" && has(idx); break;
        case ReductionKind::HsToMLNC: keep = role == "element" && has(idx); break;
        default: keep = role == "vertex" && has(idx); break;
      }
    }
    if (keep) out.insert(id);
  }
  if (ci.kind == ReductionKind::CliqueToMLSC) {
    // edge e is kept iff both endpoint vertex neurons are kept
    const auto& w = ci.mlp.weights[1];
    for (std::size_t e = 0; e < ci.mlp.layer_sizes[2]; ++e) {
      std::size_t ends = 0;
      for (std::size_t v = 0; v < ci.mlp.layer_sizes[1]; ++v)
        if (sgn(w[v][e]) != 0 && has(v)) ++ends;
      if (ends == 2) out.insert({2, static_cast<std::uint32_t>(e)});
    }
  }
  if (ci.kind == ReductionKind::VcToMGSC) {
    // bowtie centre vertices complete the cover of Bow(G)
    for (std::size_t f = 0; f < lay.total; ++f) {
      auto [role, idx] = split_tag(ci.provenance[f]);
      if (role == "bowtie" && idx < 2) out.insert(lay.id(f));
    }
  }
  return out;
}

}  // namespace relucirc
