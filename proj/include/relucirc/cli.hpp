#pragma once

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include "poly.hpp"
#include "verify.hpp"

namespace relucirc::cli {

enum Exit { Ok = 0, NoSolution = 1, Invalid = 2, Cap = 3 };

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot read " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw InvalidInput(path + ": " + e.what());
  }
}

inline void write_text(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
    return;
  }
  std::ofstream f(path);
  if (!f) throw InvalidInput("cannot write " + path);
  f << text;
}

struct SourceArgs {
  std::string graph, hs, dnf;
};

inline Source load_source(const SourceArgs& a, ReductionKind kind) {
  int given = !a.graph.empty() + !a.hs.empty() + !a.dnf.empty();
  if (given != 1) throw InvalidInput("give exactly one of --graph, --hs, --dnf");
  SourceType want = source_type(kind);
  if (!a.graph.empty()) {
    if (want != SourceType::Graph) throw InvalidInput(reduction_name(kind) + " does not take --graph");
    return graph_from_json(read_json_file(a.graph));
  }
  if (!a.hs.empty()) {
    if (want != SourceType::HittingSet) throw InvalidInput(reduction_name(kind) + " does not take --hs");
    return hs_from_json(read_json_file(a.hs));
  }
  if (want != SourceType::Dnf) throw InvalidInput(reduction_name(kind) + " does not take --dnf");
  return dnf_from_json(read_json_file(a.dnf));
}

inline Caps make_caps(std::optional<std::size_t> neurons, std::optional<std::size_t> inputs) {
  Caps c;
  if (neurons) c.max_pool = c.max_deletable = *neurons;
  if (inputs) c.max_inputs = c.max_free = *inputs;
  return c;
}

inline BoolVec circuit_input(const CompiledInstance& ci) {
  auto& cov = ci.query.coverage;
  if (cov.type == Coverage::Type::Local) return cov.xs.at(0);
  if (!ci.designated_inputs.empty()) return ci.designated_inputs.front();
  throw InvalidInput("instance has no local input for this method");
}

inline void attach_decoding(json& j, const CompiledInstance& ci, const std::optional<NeuronSet>& w) {
  bool has_prov = std::any_of(ci.provenance.begin(), ci.provenance.end(), [](auto& s) { return !s.empty(); });
  if (!w || !has_prov) return;
  try {
    j["decoded"] = decode(ci, *w);
  } catch (const InvalidInput& e) {
    j["decode_error"] = e.what();
  }
}

inline int run(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Circuit discovery queries on Boolean ReLU MLPs, with gadget reductions and their verifiers."};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  std::string kind_name, out_path, instance_path, method = "brute", order = "ascending", optimal, format = "md";
  SourceArgs src;
  std::optional<std::size_t> k, cap_neurons, cap_inputs, random_n;
  std::uint64_t seed = 0;
  std::size_t jobs = 1;
  bool enumerate = false;

  auto add_source = [&](CLI::App* c) {
    c->add_option("--graph", src.graph, "graph JSON file");
    c->add_option("--hs", src.hs, "hitting set JSON file");
    c->add_option("--dnf", src.dnf, "DNF formula JSON file");
  };
  auto add_caps = [&](CLI::App* c) {
    c->add_option("--cap-neurons", cap_neurons, "candidate pool cap");
    c->add_option("--cap-inputs", cap_inputs, "quantified input arity cap");
  };

  auto* compile_cmd = app.add_subcommand("compile", "compile a source instance into an MLP query");
  compile_cmd->add_option("--kind", kind_name, "reduction kind")->required();
  add_source(compile_cmd);
  compile_cmd->add_option("-k", k, "source parameter");
  compile_cmd->add_option("-o", out_path, "output file (default stdout)");

  auto* solve_cmd = app.add_subcommand("solve", "solve a compiled instance");
  solve_cmd->add_option("--instance", instance_path, "instance JSON")->required();
  solve_cmd->add_option("--method", method, "brute|fpt|qmsc|qmcp|local-search|gnostic")
      ->check(CLI::IsMember({"brute", "fpt", "qmsc", "qmcp", "local-search", "gnostic"}));
  solve_cmd->add_option("--order", order, "ascending|descending|seeded (qmsc, qmcp)")
      ->check(CLI::IsMember({"ascending", "descending", "seeded"}));
  solve_cmd->add_option("--optimal", optimal, "min|max (brute)")->check(CLI::IsMember({"min", "max"}));
  solve_cmd->add_option("--seed", seed, "random seed");
  solve_cmd->add_option("-o", out_path, "output file (default stdout)");
  add_caps(solve_cmd);

  auto* count_cmd = app.add_subcommand("count", "count (or enumerate) solutions of a compiled instance");
  count_cmd->add_option("--instance", instance_path, "instance JSON")->required();
  count_cmd->add_flag("--enumerate", enumerate, "list the minimal solutions");
  count_cmd->add_option("-o", out_path, "output file (default stdout)");
  add_caps(count_cmd);

  auto* vr_cmd = app.add_subcommand("verify-reduction", "check source answer <=> target answer");
  vr_cmd->add_option("--kind", kind_name, "reduction kind, or 'all' for a random sweep")->required();
  add_source(vr_cmd);
  vr_cmd->add_option("-k", k, "source parameter (default: every feasible k)");
  vr_cmd->add_option("--instance", instance_path, "replace the compiled net (negative controls)");
  vr_cmd->add_option("--random", random_n, "sweep: random sources per kind");
  vr_cmd->add_option("--seed", seed, "sweep seed");
  vr_cmd->add_option("--jobs", jobs, "sweep worker threads");
  vr_cmd->add_option("-o", out_path, "sweep output directory, or verdict file");
  add_caps(vr_cmd);

  auto* vp_cmd = app.add_subcommand("verify-parsimony", "compare minimal circuits with minimal vertex covers");
  vp_cmd->add_option("--graph", src.graph, "graph JSON file")->required();
  vp_cmd->add_option("--instance", instance_path, "replace the compiled net (negative controls)");
  vp_cmd->add_option("-o", out_path, "output file (default stdout)");
  add_caps(vp_cmd);

  std::string report_dir;
  auto* report_cmd = app.add_subcommand("report", "aggregate a sweep directory");
  report_cmd->add_option("dir", report_dir, "run directory")->required();
  report_cmd->add_option("--format", format, "md|json")->check(CLI::IsMember({"md", "json"}));
  report_cmd->add_option("-o", out_path, "output file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return Ok;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return Ok;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return Invalid;
  }

  Caps caps = make_caps(cap_neurons, cap_inputs);
  try {
    if (*compile_cmd) {
      auto kind = reduction_from_name(kind_name);
      auto ci = compile(kind, load_source(src, kind), k);
      write_text(out_path, to_json(ci).dump(2) + "\n", out);
      return Ok;
    }

    if (*solve_cmd) {
      auto ci = instance_from_json(read_json_file(instance_path));
      const QuerySpec& q = ci.query;
      json j;
      int code = Ok;
      if (method == "brute") {
        SolveReport r;
        if (optimal.empty()) {
          r = solve(q, ci.mlp, caps);
        } else {
          r = solve_optimal(q, ci.mlp, optimal == "min" ? Direction::Min : Direction::Max, caps);
        }
        j = to_json(r);
        if (q.kind != QueryKind::Robustness) attach_decoding(j, ci, r.witness);
        bool none = r.status == SolveReport::Status::NotFound;
        code = none && q.kind != QueryKind::Robustness ? NoSolution : Ok;
      } else if (method == "fpt") {
        if (q.kind != QueryKind::Robustness) throw InvalidInput("fpt solves robustness instances");
        auto r = solve_robustness_fpt(ci.mlp, q.region, q.k, q.coverage, caps);
        j = to_json(r);
      } else if (method == "qmsc" || method == "qmcp") {
        OrderingHeuristic h = order == "descending" ? OrderingHeuristic::descending()
                              : order == "seeded"   ? OrderingHeuristic::seeded(seed)
                                                    : OrderingHeuristic::ascending();
        QuasiResult r;
        if (method == "qmsc") {
          r = quasi_minimal_sufficient_circuit(ci.mlp, circuit_input(ci), h, q.require_connected);
        } else {
          if (q.kind != QueryKind::Patching) throw InvalidInput("qmcp needs a patching instance");
          r = quasi_minimal_patch(ci.mlp, q.donor, coverage_inputs(q.coverage, ci.mlp.input_arity(), caps), h);
        }
        j = to_json(r);
        j["status"] = "found";
        j["method"] = method;
        if (order == "seeded") j["seed"] = seed;
      } else if (method == "local-search") {
        auto r = minimal_lsc_local_search(ci.mlp, circuit_input(ci), seed, q.require_connected);
        j = {{"status", "found"},
             {"circuit", to_json(r.circuit)},
             {"iterations", r.iterations},
             {"forward_passes", r.forward_passes},
             {"seed", seed}};
        attach_decoding(j, ci, r.circuit);
      } else {
        if (q.kind != QueryKind::Gnostic) throw InvalidInput("gnostic method needs a gnostic instance");
        auto r = gnostic_scan(ci.mlp, q.X, q.Y, q.t, q.k);
        j = {{"status", r ? "found" : "not_found"}};
        if (r) j["witness"] = to_json(*r);
        code = r ? Ok : NoSolution;
      }
      write_text(out_path, j.dump(2) + "\n", out);
      return code;
    }

    if (*count_cmd) {
      auto ci = instance_from_json(read_json_file(instance_path));
      auto r = count(ci.query, ci.mlp, caps);
      json j = to_json(r);
      if (enumerate) {
        json list = json::array();
        for (auto& s : enumerate_minimal(ci.query, ci.mlp, caps)) list.push_back(to_json(s));
        j["minimal"] = list;
      }
      write_text(out_path, j.dump(2) + "\n", out);
      return Ok;
    }

    if (*vr_cmd) {
      if (kind_name == "all" || random_n) {
        if (out_path.empty()) throw InvalidInput("sweeps need -o <directory>");
        std::vector<ReductionKind> kinds =
            kind_name == "all" ? all_reduction_kinds() : std::vector<ReductionKind>{reduction_from_name(kind_name)};
        SweepOptions o{random_n.value_or(5), seed, jobs};
        write_sweep(out_path, kinds, o);
        auto rows = aggregate(out_path);
        bool all_pass = true;
        for (auto& r : rows) all_pass &= r.passed == r.total && r.behavior_passed == r.behavior_total;
        out << report_markdown(rows);
        return all_pass ? Ok : NoSolution;
      }
      auto kind = reduction_from_name(kind_name);
      Source s = load_source(src, kind);
      std::optional<Mlp> override_mlp;
      if (!instance_path.empty()) override_mlp = instance_from_json(read_json_file(instance_path)).mlp;
      Caps vcaps = verification_caps();
      if (cap_neurons) vcaps.max_pool = vcaps.max_deletable = *cap_neurons;
      if (cap_inputs) vcaps.max_inputs = vcaps.max_free = *cap_inputs;
      json rows = json::array();
      bool all_pass = true;
      if (kind == ReductionKind::MnlVcToMnlLSC) {
        auto v = verify_parsimony(std::get<Graph>(s), override_mlp, vcaps);
        all_pass = v.passed;
        rows.push_back({{"verdict", to_json(v)}});
      } else {
        std::vector<std::optional<std::size_t>> ks;
        if (!needs_k(kind))
          ks.push_back(std::nullopt);
        else if (k)
          ks.push_back(k);
        else
          for (auto x : feasible_k(kind, s)) ks.push_back(x);
        if (ks.empty()) throw InvalidInput("no feasible k for this source");
        for (auto kk : ks) {
          auto ci = compile(kind, s, kk);
          if (override_mlp) ci.mlp = *override_mlp;
          auto b = verify_behavior(ci, s);
          auto v = verify_reduction(kind, s, kk, override_mlp, vcaps);
          json row = {{"verdict", to_json(v)}, {"behavior", to_json(b)}};
          if (kk) row["k"] = *kk;
          all_pass &= v.passed && b.passed;
          rows.push_back(row);
        }
      }
      json j = {{"kind", reduction_name(kind)}, {"passed", all_pass}, {"rows", rows}};
      write_text(out_path, j.dump(2) + "\n", out);
      return all_pass ? Ok : NoSolution;
    }

    if (*vp_cmd) {
      Graph g = graph_from_json(read_json_file(src.graph));
      std::optional<Mlp> override_mlp;
      if (!instance_path.empty()) override_mlp = instance_from_json(read_json_file(instance_path)).mlp;
      Caps vcaps = verification_caps();
      if (cap_neurons) vcaps.max_pool = vcaps.max_deletable = *cap_neurons;
      auto v = verify_parsimony(g, override_mlp, vcaps);
      write_text(out_path, to_json(v).dump(2) + "\n", out);
      return v.passed ? Ok : NoSolution;
    }

    if (*report_cmd) {
      auto rows = aggregate(report_dir);
      write_text(out_path, format == "json" ? report_json(rows).dump(2) + "\n" : report_markdown(rows), out);
      return Ok;
    }
  } catch (const CapExceeded& e) {
    err << "cap exceeded: " << e.what() << "\n";
    return Cap;
  } catch (const InvalidInput& e) {
    err << "invalid input: " << e.what() << "\n";
    return Invalid;
  } catch (const PreconditionError& e) {
    err << "precondition: " << e.what() << "\n";
    return Invalid;
  } catch (const json::exception& e) {
    err << "invalid input: " << e.what() << "\n";
    return Invalid;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "i/o error: " << e.what() << "\n";
    return Invalid;
  }
  return Invalid;
}

}  // namespace relucirc::cli
