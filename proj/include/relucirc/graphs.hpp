#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "mlp.hpp"

namespace relucirc {

using VertexSet = std::vector<std::size_t>;

struct CapExceeded : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Graph {
  std::size_t n = 0;
  std::vector<std::pair<std::size_t, std::size_t>> edges;  // u < v, sorted, unique

  Graph() = default;
  Graph(std::size_t n_, std::vector<std::pair<std::size_t, std::size_t>> es) : n(n_) {
    for (auto [u, v] : es) add_edge(u, v);
    normalize();
  }
  void add_edge(std::size_t u, std::size_t v) {
    if (u >= n || v >= n) throw InvalidInput("edge endpoint out of range");
    if (u == v) throw InvalidInput("self-loop on vertex " + std::to_string(u));
    edges.emplace_back(std::min(u, v), std::max(u, v));
  }
  void normalize() {
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  }
  bool adjacent(std::size_t u, std::size_t v) const {
    return std::binary_search(edges.begin(), edges.end(), std::make_pair(std::min(u, v), std::max(u, v)));
  }
  std::vector<std::vector<std::size_t>> adjacency() const {
    std::vector<std::vector<std::size_t>> adj(n);
    for (auto [u, v] : edges) {
      adj[u].push_back(v);
      adj[v].push_back(u);
    }
    return adj;
  }
  // N_C(v): v together with its neighbours, ascending.
  VertexSet closed_neighbourhood(std::size_t v) const {
    VertexSet r{v};
    for (auto [a, b] : edges) {
      if (a == v) r.push_back(b);
      if (b == v) r.push_back(a);
    }
    std::sort(r.begin(), r.end());
    return r;
  }
  std::optional<std::size_t> isolated_vertex() const {
    std::vector<std::uint8_t> deg(n, 0);
    for (auto [u, v] : edges) deg[u] = deg[v] = 1;
    for (std::size_t i = 0; i < n; ++i)
      if (!deg[i]) return i;
    return std::nullopt;
  }
};

struct HittingSetInstance {
  std::size_t universe_size = 0;
  std::vector<VertexSet> sets;
};

struct Literal {
  std::size_t var;
  bool positive;
};

struct DnfFormula {
  std::size_t var_count = 0;
  std::vector<std::vector<Literal>> terms;
};

// ---- validation ----

inline void validate_hs(const HittingSetInstance& h) {
  for (std::size_t j = 0; j < h.sets.size(); ++j) {
    if (h.sets[j].empty()) throw InvalidInput("set " + std::to_string(j) + " is empty");
    for (auto e : h.sets[j])
      if (e >= h.universe_size) throw InvalidInput("set " + std::to_string(j) + " has element out of range");
  }
}

inline void validate_dnf(const DnfFormula& f) {
  for (std::size_t t = 0; t < f.terms.size(); ++t) {
    auto& term = f.terms[t];
    if (term.empty()) throw InvalidInput("term " + std::to_string(t) + " is empty");
    if (term.size() > 3) throw InvalidInput("term " + std::to_string(t) + " has more than 3 literals");
    for (std::size_t a = 0; a < term.size(); ++a) {
      if (term[a].var >= f.var_count) throw InvalidInput("term " + std::to_string(t) + " uses an undeclared variable");
      for (std::size_t b = a + 1; b < term.size(); ++b)
        if (term[a].var == term[b].var)
          throw InvalidInput("term " + std::to_string(t) + " repeats variable x" + std::to_string(term[a].var));
    }
  }
}

// ---- JSON ----

inline json to_json(const Graph& g) {
  json e = json::array();
  for (auto [u, v] : g.edges) e.push_back({u, v});
  return {{"n", g.n}, {"edges", e}};
}

inline Graph graph_from_json(const json& j) {
  try {
    if (!j.is_object() || !j.contains("n") || !j["n"].is_number_unsigned()) throw InvalidInput("graph: missing n");
    Graph g;
    g.n = j["n"].get<std::size_t>();
    if (!j.contains("edges") || !j["edges"].is_array()) throw InvalidInput("graph: missing edges");
    for (auto& e : j["edges"]) {
      if (!e.is_array() || e.size() != 2 || !e[0].is_number_unsigned() || !e[1].is_number_unsigned())
        throw InvalidInput("graph: edges must be [u,v] pairs of vertex indices");
      std::size_t u = e[0].get<std::size_t>(), v = e[1].get<std::size_t>();
      if (u >= g.n || v >= g.n) throw InvalidInput("graph: edge endpoint out of range");
      if (u == v) throw InvalidInput("graph: self-loop on vertex " + std::to_string(u));
      std::pair<std::size_t, std::size_t> p{std::min(u, v), std::max(u, v)};
      if (std::find(g.edges.begin(), g.edges.end(), p) != g.edges.end())
        throw InvalidInput("graph: duplicate edge " + std::to_string(u) + "-" + std::to_string(v));
      g.edges.push_back(p);
    }
    g.normalize();
    return g;
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("graph: ") + e.what());
  }
}

inline json to_json(const HittingSetInstance& h) {
  json s = json::array();
  for (auto& c : h.sets) s.push_back(c);
  return {{"universe", h.universe_size}, {"sets", s}};
}

inline HittingSetInstance hs_from_json(const json& j) {
  try {
    if (!j.is_object() || !j.contains("universe") || !j["universe"].is_number_unsigned())
      throw InvalidInput("hitting set: missing universe");
    HittingSetInstance h;
    h.universe_size = j["universe"].get<std::size_t>();
    if (!j.contains("sets") || !j["sets"].is_array()) throw InvalidInput("hitting set: missing sets");
    for (auto& s : j["sets"]) {
      if (!s.is_array()) throw InvalidInput("hitting set: sets must be arrays");
      VertexSet c;
      for (auto& e : s) {
        if (!e.is_number_unsigned()) throw InvalidInput("hitting set: elements must be indices");
        c.push_back(e.get<std::size_t>());
      }
      std::sort(c.begin(), c.end());
      c.erase(std::unique(c.begin(), c.end()), c.end());
      h.sets.push_back(c);
    }
    validate_hs(h);
    return h;
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("hitting set: ") + e.what());
  }
}

inline json to_json(const DnfFormula& f) {
  json terms = json::array();
  for (auto& t : f.terms) {
    json term = json::array();
    for (auto& l : t) term.push_back({"x" + std::to_string(l.var), l.positive});
    terms.push_back(term);
  }
  return {{"vars", f.var_count}, {"terms", terms}};
}

inline DnfFormula dnf_from_json(const json& j) {
  try {
    if (!j.is_object() || !j.contains("vars") || !j["vars"].is_number_unsigned())
      throw InvalidInput("dnf: missing vars");
    DnfFormula f;
    f.var_count = j["vars"].get<std::size_t>();
    if (!j.contains("terms") || !j["terms"].is_array()) throw InvalidInput("dnf: missing terms");
    for (auto& t : j["terms"]) {
      if (!t.is_array()) throw InvalidInput("dnf: terms must be arrays of literals");
      std::vector<Literal> term;
      for (auto& l : t) {
        if (!l.is_array() || l.size() != 2 || !l[1].is_boolean())
          throw InvalidInput("dnf: literals must be [variable, polarity] pairs");
        std::size_t var;
        if (l[0].is_number_unsigned()) {
          var = l[0].get<std::size_t>();
        } else if (l[0].is_string()) {
          auto s = l[0].get<std::string>();
          if (s.size() < 2 || s[0] != 'x' || s.find_first_not_of("0123456789", 1) != std::string::npos)
            throw InvalidInput("dnf: variable names must look like x<index>");
          var = std::stoul(s.substr(1));
        } else {
          throw InvalidInput("dnf: variable must be an index or x<index>");
        }
        term.push_back({var, l[1].get<bool>()});
      }
      f.terms.push_back(term);
    }
    validate_dnf(f);
    return f;
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("dnf: ") + e.what());
  } catch (const std::out_of_range&) {
    throw InvalidInput("dnf: variable index too large");
  }
}

// ---- clique ----

inline bool is_clique(const Graph& g, const VertexSet& s) {
  for (std::size_t a = 0; a < s.size(); ++a)
    for (std::size_t b = a + 1; b < s.size(); ++b)
      if (!g.adjacent(s[a], s[b])) return false;
  return true;
}

inline VertexSet max_clique(const Graph& g) {
  auto adj = g.adjacency();
  std::vector<std::vector<std::uint8_t>> A(g.n, std::vector<std::uint8_t>(g.n, 0));
  for (auto [u, v] : g.edges) A[u][v] = A[v][u] = 1;
  VertexSet best, cur;
  // Simple branch and bound over candidates in index order.
  auto rec = [&](auto&& self, std::vector<std::size_t> cand) -> void {
    if (cur.size() > best.size()) best = cur;
    while (!cand.empty()) {
      if (cur.size() + cand.size() <= best.size()) return;
      std::size_t v = cand.front();
      cand.erase(cand.begin());
      std::vector<std::size_t> next;
      for (auto u : cand)
        if (A[v][u]) next.push_back(u);
      cur.push_back(v);
      self(self, next);
      cur.pop_back();
    }
  };
  std::vector<std::size_t> all(g.n);
  for (std::size_t i = 0; i < g.n; ++i) all[i] = i;
  rec(rec, all);
  return best;
}

inline bool has_clique(const Graph& g, std::size_t k) { return max_clique(g).size() >= k; }

// ---- vertex cover ----

inline bool is_vertex_cover(const Graph& g, const VertexSet& s) {
  std::vector<std::uint8_t> in(g.n, 0);
  for (auto v : s) in[v] = 1;
  for (auto [u, v] : g.edges)
    if (!in[u] && !in[v]) return false;
  return true;
}

namespace detail {

// Branching: degree-0 vertices drop out, a degree-1 vertex forces its
// neighbour, otherwise branch on a max-degree vertex v (take v, or take N(v)).
inline void vc_branch(std::vector<std::vector<std::size_t>>& adj, std::vector<std::uint8_t>& alive,
                      std::vector<std::size_t>& cur, std::vector<std::size_t>& best, bool& have_best) {
  if (have_best && cur.size() >= best.size()) return;
  std::size_t n = adj.size();
  auto degree = [&](std::size_t v) {
    std::size_t d = 0;
    for (auto u : adj[v]) d += alive[u];
    return d;
  };
  std::vector<std::size_t> removed;
  std::size_t cur_mark = cur.size();
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t v = 0; v < n; ++v) {
      if (!alive[v]) continue;
      std::size_t d = degree(v);
      if (d == 0) {
        alive[v] = 0;
        removed.push_back(v);
        changed = true;
      } else if (d == 1) {
        std::size_t u = 0;
        for (auto w : adj[v])
          if (alive[w]) u = w;
        alive[u] = 0;
        removed.push_back(u);
        cur.push_back(u);
        changed = true;
      }
    }
  }
  auto restore = [&]() {
    for (auto v : removed) alive[v] = 1;
    cur.resize(cur_mark);
  };
  if (have_best && cur.size() >= best.size()) {
    restore();
    return;
  }
  std::size_t pick = n, pd = 0;
  for (std::size_t v = 0; v < n; ++v) {
    if (!alive[v]) continue;
    std::size_t d = degree(v);
    if (d > pd) {
      pd = d;
      pick = v;
    }
  }
  if (pick == n) {
    best = cur;
    have_best = true;
    restore();
    return;
  }
  alive[pick] = 0;
  cur.push_back(pick);
  vc_branch(adj, alive, cur, best, have_best);
  cur.pop_back();
  std::vector<std::size_t> nb;
  for (auto u : adj[pick])
    if (alive[u]) nb.push_back(u);
  for (auto u : nb) {
    alive[u] = 0;
    cur.push_back(u);
  }
  vc_branch(adj, alive, cur, best, have_best);
  for (auto u : nb) {
    alive[u] = 1;
    cur.pop_back();
  }
  alive[pick] = 1;
  restore();
}

}  // namespace detail

// Optionally forbid one vertex from the cover (its neighbours are then forced).
inline std::pair<std::size_t, VertexSet> min_vertex_cover(const Graph& g,
                                                          std::optional<std::size_t> excluded = std::nullopt) {
  auto adj = g.adjacency();
  std::vector<std::uint8_t> alive(g.n, 1);
  std::vector<std::size_t> cur, best;
  if (excluded) {
    alive[*excluded] = 0;
    for (auto u : adj[*excluded])
      if (alive[u]) {
        alive[u] = 0;
        cur.push_back(u);
      }
  }
  bool have = false;
  detail::vc_branch(adj, alive, cur, best, have);
  std::sort(best.begin(), best.end());
  return {best.size(), best};
}

inline std::vector<VertexSet> enumerate_minimal_vertex_covers(const Graph& g, std::size_t cap = 16) {
  if (g.n > cap) throw CapExceeded("minimal vertex cover enumeration: " + std::to_string(g.n) + " vertices > cap " + std::to_string(cap));
  std::vector<std::uint64_t> nb(g.n, 0);
  for (auto [u, v] : g.edges) {
    nb[u] |= 1ull << v;
    nb[v] |= 1ull << u;
  }
  std::vector<VertexSet> out;
  std::uint64_t full = g.n == 64 ? ~0ull : ((1ull << g.n) - 1);
  for (std::uint64_t s = 0; s <= full; ++s) {
    bool cover = true;
    for (auto [u, v] : g.edges)
      if (!((s >> u) & 1) && !((s >> v) & 1)) {
        cover = false;
        break;
      }
    if (!cover) continue;
    // Minimal iff every chosen vertex has an unchosen neighbour.
    bool minimal = true;
    for (std::size_t v = 0; v < g.n && minimal; ++v)
      if (((s >> v) & 1) && (nb[v] & ~s) == 0) minimal = false;
    if (!minimal) continue;
    VertexSet c;
    for (std::size_t v = 0; v < g.n; ++v)
      if ((s >> v) & 1) c.push_back(v);
    out.push_back(c);
    if (s == full) break;
  }
  std::sort(out.begin(), out.end(), [](const VertexSet& a, const VertexSet& b) {
    if (a.size() != b.size()) return a.size() < b.size();
    return a < b;
  });
  return out;
}

// ---- dominating set / hitting set ----

inline bool is_dominating_set(const Graph& g, const VertexSet& s) {
  std::vector<std::uint8_t> dom(g.n, 0);
  for (auto v : s)
    for (auto u : g.closed_neighbourhood(v)) dom[u] = 1;
  return std::all_of(dom.begin(), dom.end(), [](auto d) { return d; });
}

namespace detail {

// Smallest subset of [0, n) whose bitmask hits every mask in `needs`.
inline std::pair<std::size_t, VertexSet> min_hitting_masks(std::size_t n, const std::vector<std::uint64_t>& needs) {
  for (std::size_t k = 0; k <= n; ++k) {
    std::vector<std::size_t> idx(k);
    for (std::size_t i = 0; i < k; ++i) idx[i] = i;
    while (true) {
      std::uint64_t s = 0;
      for (auto i : idx) s |= 1ull << i;
      bool ok = std::all_of(needs.begin(), needs.end(), [&](std::uint64_t m) { return (m & s) != 0; });
      if (ok) return {k, VertexSet(idx.begin(), idx.end())};
      std::size_t i = k;
      while (i > 0 && idx[i - 1] == n - k + i - 1) --i;
      if (i == 0) break;
      ++idx[i - 1];
      for (std::size_t j = i; j < k; ++j) idx[j] = idx[j - 1] + 1;
    }
  }
  return {n + 1, {}};
}

}  // namespace detail

inline std::pair<std::size_t, VertexSet> min_dominating_set(const Graph& g, std::size_t cap = 24) {
  if (g.n > cap) throw CapExceeded("dominating set: " + std::to_string(g.n) + " vertices > cap");
  std::vector<std::uint64_t> needs;
  for (std::size_t v = 0; v < g.n; ++v) {
    std::uint64_t m = 0;
    for (auto u : g.closed_neighbourhood(v)) m |= 1ull << u;
    needs.push_back(m);
  }
  return detail::min_hitting_masks(g.n, needs);
}

inline bool is_hitting_set(const HittingSetInstance& h, const VertexSet& s) {
  for (auto& c : h.sets) {
    bool hit = false;
    for (auto e : c) hit |= std::find(s.begin(), s.end(), e) != s.end();
    if (!hit) return false;
  }
  return true;
}

inline std::pair<std::size_t, VertexSet> min_hitting_set(const HittingSetInstance& h, std::size_t cap = 24) {
  validate_hs(h);
  if (h.universe_size > cap) throw CapExceeded("hitting set: universe " + std::to_string(h.universe_size) + " > cap");
  std::vector<std::uint64_t> needs;
  for (auto& c : h.sets) {
    std::uint64_t m = 0;
    for (auto e : c) m |= 1ull << e;
    needs.push_back(m);
  }
  return detail::min_hitting_masks(h.universe_size, needs);
}

// ---- DNF ----

inline bool term_satisfied(const std::vector<Literal>& t, std::uint64_t assignment) {
  for (auto& l : t)
    if ((((assignment >> l.var) & 1) != 0) != l.positive) return false;
  return true;
}

inline bool eval_dnf(const DnfFormula& f, std::uint64_t assignment) {
  for (auto& t : f.terms)
    if (term_satisfied(t, assignment)) return true;
  return false;
}

inline bool dnf_is_tautology(const DnfFormula& f, std::size_t cap = 20) {
  validate_dnf(f);
  if (f.var_count > cap) throw CapExceeded("dnf: " + std::to_string(f.var_count) + " variables > cap");
  for (std::uint64_t a = 0; a < (1ull << f.var_count); ++a)
    if (!eval_dnf(f, a)) return false;
  return true;
}

// Smallest-first search for a tautological subset of at most k terms.
inline std::optional<std::vector<std::size_t>> min_tautology_subset(const DnfFormula& f, std::size_t k,
                                                                    std::size_t cap = 20) {
  validate_dnf(f);
  if (f.var_count > cap) throw CapExceeded("dnf: " + std::to_string(f.var_count) + " variables > cap");
  std::size_t T = f.terms.size();
  if (T > 24) throw CapExceeded("dnf: too many terms for subset search");
  std::uint64_t A = 1ull << f.var_count;
  std::vector<std::vector<std::uint64_t>> sat(T);  // bitset over assignments
  std::size_t words = (A + 63) / 64;
  for (std::size_t t = 0; t < T; ++t) {
    sat[t].assign(words, 0);
    for (std::uint64_t a = 0; a < A; ++a)
      if (term_satisfied(f.terms[t], a)) sat[t][a / 64] |= 1ull << (a % 64);
  }
  for (std::size_t size = 0; size <= std::min(k, T); ++size) {
    std::vector<std::size_t> idx(size);
    for (std::size_t i = 0; i < size; ++i) idx[i] = i;
    while (true) {
      bool all = true;
      for (std::size_t w = 0; w < words && all; ++w) {
        std::uint64_t acc = 0;
        for (auto i : idx) acc |= sat[i][w];
        std::uint64_t want = (w + 1 == words && A % 64) ? ((1ull << (A % 64)) - 1) : ~0ull;
        if (A < 64 && w == 0) want = (1ull << A) - 1;
        all = (acc & want) == want;
      }
      if (all) return idx;
      std::size_t i = size;
      while (i > 0 && idx[i - 1] == T - size + i - 1) --i;
      if (i == 0) break;
      ++idx[i - 1];
      for (std::size_t j = i; j < size; ++j) idx[j] = idx[j - 1] + 1;
    }
  }
  return std::nullopt;
}

}  // namespace relucirc
