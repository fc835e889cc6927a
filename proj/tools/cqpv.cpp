// Command-line front end: parse and check programs, run explorations,
// dump the gate output state, decide equivalence, and export transition
// graphs as JSON.
//
// Exit codes: 0 success or equivalent, 1 not equivalent, 2 usage error,
// 3 parse or ownership error, 4 exploration limit exceeded.

#include <CLI11.hpp>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <sstream>

#include "cqpv/equivalence.hpp"
#include "cqpv/models.hpp"
#include "cqpv/ownership.hpp"
#include "cqpv/printer.hpp"

using namespace cqpv;
namespace md = cqpv::models;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitNotEquivalent = 1;
constexpr int kExitUsage = 2;
constexpr int kExitParse = 3;
constexpr int kExitLimit = 4;

double default_tol() {
  if (const char* t = std::getenv("CQP_LOQC_TOL")) {
    try {
      return std::stod(t);
    } catch (...) {
      throw Error("CQP_LOQC_TOL is not a number: " + std::string(t));
    }
  }
  return 1e-6;
}

// --input takes four real or four re,im amplitude pairs
md::InputStateSpec parse_input(const std::string& text) {
  std::vector<double> xs;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      xs.push_back(std::stod(item));
    } catch (...) {
      throw Error("bad amplitude component: " + item);
    }
  }
  md::InputStateSpec in;
  if (xs.size() == 4) {
    in = {xs[0], xs[1], xs[2], xs[3]};
  } else if (xs.size() == 8) {
    in = {Amp(xs[0], xs[1]), Amp(xs[2], xs[3]), Amp(xs[4], xs[5]),
          Amp(xs[6], xs[7])};
  } else {
    throw Error("--input needs 4 amplitudes (or 4 re,im pairs)");
  }
  in.validate();
  return in;
}

std::vector<md::InputStateSpec> input_family(const std::string& spec) {
  if (spec == "basis")
    return {{1, 0, 0, 0}, {0, 1, 0, 0}, {0, 0, 1, 0}, {0, 0, 0, 1}};
  if (spec == "family") return md::default_family();
  std::ifstream f(spec);
  if (!f) throw Error("unreadable input family file: " + spec);
  std::vector<md::InputStateSpec> out;
  std::string line;
  while (std::getline(f, line)) {
    if (line.empty() || line[0] == '#') continue;
    out.push_back(parse_input(line));
  }
  if (out.empty()) throw Error("input family file is empty: " + spec);
  return out;
}

std::string fnv_hex(const std::string& s) {
  unsigned long long h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", h);
  return buf;
}

std::string format_amp(const Amp& a) {
  std::ostringstream os;
  os.precision(9);
  os << std::fixed << a.real();
  if (std::abs(a.imag()) > 1e-12) os << (a.imag() < 0 ? "" : "+") << a.imag() << "i";
  return os.str();
}

json label_json(const Label& l) {
  json j;
  switch (l.kind) {
    case Label::Kind::Tau: j["kind"] = "tau"; break;
    case Label::Kind::Prob:
      j["kind"] = "prob";
      j["p"] = l.prob;
      break;
    case Label::Kind::In:
    case Label::Kind::Out: {
      j["kind"] = l.kind == Label::Kind::In ? "in" : "out";
      j["chan"] = l.chan;
      json vals = json::array();
      if (l.kind == Label::Kind::In) {
        for (const auto& v : l.values) vals.push_back(v.str());
      } else {
        for (const auto& tuple : l.value_set) {
          json t = json::array();
          for (const auto& v : tuple) t.push_back(v.str());
          vals.push_back(t);
        }
      }
      j["values"] = vals;
      j["names"] = l.qnames;
      break;
    }
  }
  return j;
}

int cmd_parse(const std::string& file) {
  std::ifstream in(file);
  if (!in) {
    std::cerr << "cannot open " << file << "\n";
    return kExitParse;
  }
  std::ostringstream text;
  text << in.rdbuf();
  Program prog;
  try {
    prog = parse(text.str());
  } catch (const SyntaxError& e) {
    std::cerr << file << ": " << e.what() << "\n";
    return kExitParse;
  }
  auto diags = check_ownership(prog);
  for (const auto& d : diags) std::cerr << file << ": " << d.message << "\n";
  if (!diags.empty()) return kExitParse;
  std::cout << file << ": ok (" << prog.definitions.size() << " definitions)\n";
  return kExitOk;
}

int cmd_run(const std::string& model, const md::InputStateSpec& in,
            bool as_json, ExploreLimits limits) {
  Program prog = md::resolve(model);
  Semantics sem(md::environment_for(in));
  auto graph = explore(inline_program(prog), sem, limits);
  auto dist = terminal_distribution(run_deterministic(inline_program(prog), sem));

  json deadlocks = json::array();
  for (const auto& n : graph.nodes)
    if (n.deadlock) deadlocks.push_back(fnv_hex(n.key));

  if (as_json) {
    json j;
    j["model"] = model;
    j["input"] = in.str();
    json td = json::array();
    for (const auto& [k, p] : dist) td.push_back({{"outputs", k}, {"prob", p}});
    j["terminal_distribution"] = td;
    j["deadlocks"] = deadlocks;
    j["lts_stats"] = {{"nodes", graph.nodes.size()}, {"edges", graph.edges.size()}};
    std::cout << j.dump(2) << "\n";
  } else {
    std::cout << model << " on " << in.str() << "\n";
    std::cout.precision(9);
    for (const auto& [k, p] : dist)
      std::cout << "  " << std::fixed << p << "  " << k << "\n";
    std::cout << "nodes " << graph.nodes.size() << ", edges "
              << graph.edges.size() << ", deadlocks " << deadlocks.size()
              << "\n";
  }
  return kExitOk;
}

int cmd_state(const std::string& model, const md::InputStateSpec& in,
              const std::string& at, bool as_json) {
  if (at != "cnot-output") throw Error("unknown probe point: " + at);
  Program prog = md::resolve(model);
  JointState st = md::cnot_output_state(prog, in);
  if (as_json) {
    json j;
    j["model"] = model;
    j["input"] = in.str();
    j["probe"] = at;
    json names = json::array();
    for (const auto& s : st.layout.slots) names.push_back(s.name);
    j["names"] = names;
    json amps = json::array();
    for (const auto& [bv, a] : st.amplitudes) {
      json b = json::array();
      for (int v : bv.values) b.push_back(v);
      amps.push_back({{"basis", b}, {"re", a.real()}, {"im", a.imag()}});
    }
    j["amplitudes"] = amps;
    std::cout << j.dump(2) << "\n";
  } else {
    for (const auto& [bv, a] : st.amplitudes) {
      std::string rails, dumps;
      for (int i = 0; i < 4; ++i) rails += std::to_string(bv.values[i]);
      for (int i = 4; i < 6; ++i) dumps += std::to_string(bv.values[i]);
      std::cout << format_amp(a) << "  |" << rails << ">|" << dumps << ">\n";
    }
  }
  return kExitOk;
}

int cmd_equiv(const std::string& a, const std::string& b,
              const std::string& inputs, double tol, bool as_json,
              ExploreLimits limits) {
  auto ta = inline_program(md::resolve(a));
  auto tb = inline_program(md::resolve(b));
  EquivalenceChecker chk(EquivOptions{tol, limits});
  bool all = true;
  json per_input = json::array();
  for (const auto& in : input_family(inputs)) {
    Verdict v = chk.check(ta, tb, md::environment_for(in));
    all = all && v.equivalent;
    if (as_json) {
      json cx = json::array();
      for (const auto& step : v.trace) cx.push_back(step);
      per_input.push_back({{"input", in.str()},
                           {"equivalent", v.equivalent},
                           {"reason", v.reason},
                           {"counterexample", cx},
                           {"nodes", {v.nodes_left, v.nodes_right}}});
    } else {
      std::cout << in.str() << ": "
                << (v.equivalent ? "equivalent" : "not equivalent") << "\n";
      if (!v.equivalent) {
        for (const auto& step : v.trace) std::cout << "  after " << step << "\n";
        std::cout << "  " << v.reason << "\n";
      }
    }
  }
  if (as_json) {
    json j;
    j["left"] = a;
    j["right"] = b;
    j["tolerance"] = tol;
    j["equivalent"] = all;
    j["inputs"] = per_input;
    std::cout << j.dump(2) << "\n";
  } else {
    std::cout << (all ? "equivalent" : "not equivalent") << "\n";
  }
  return all ? kExitOk : kExitNotEquivalent;
}

int cmd_lts(const std::string& model, const md::InputStateSpec& in,
            const std::string& out_file, ExploreLimits limits) {
  Program prog = md::resolve(model);
  Semantics sem(md::environment_for(in));
  auto g = explore(inline_program(prog), sem, limits);
  json nodes = json::array();
  for (const auto& n : g.nodes) {
    json jn;
    jn["id"] = fnv_hex(n.key);
    if (n.probabilistic) {
      jn["kind"] = "prob";
    } else {
      const auto& mc = std::get<MixedConfig>(n.config);
      jn["kind"] = mc.components.size() > 1 ? "mixed" : "pure";
      jn["term"] = print_process(mc.term);
      json ws = json::array();
      for (const auto& c : mc.components) ws.push_back(c.weight);
      jn["weights"] = ws;
      jn["omega"] = mc.omega;
      if (n.deadlock) jn["deadlock"] = true;
    }
    nodes.push_back(std::move(jn));
  }
  json edges = json::array();
  for (const auto& e : g.edges)
    edges.push_back({{"src", fnv_hex(g.nodes[e.from].key)},
                     {"label", label_json(e.label)},
                     {"dst", fnv_hex(g.nodes[e.to].key)}});
  json j;
  j["model"] = model;
  j["input"] = in.str();
  j["initial"] = fnv_hex(g.nodes[g.initial].key);
  j["nodes"] = nodes;
  j["edges"] = edges;
  std::ofstream out(out_file);
  if (!out) throw Error("cannot write " + out_file);
  out << j.dump(2) << "\n";
  std::cout << "wrote " << g.nodes.size() << " nodes, " << g.edges.size()
            << " edges to " << out_file << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"CQP linear-optics model verifier"};
  app.require_subcommand(1);

  ExploreLimits limits;
  app.add_option("--max-nodes", limits.max_nodes, "exploration node limit")
      ->capture_default_str();
  app.add_option("--max-photons", limits.max_photons, "photon budget limit")
      ->capture_default_str();

  std::string file, model, other, input_str = "1,0,0,0", at = "cnot-output";
  std::string inputs = "family", out_file;
  bool as_json = false;
  double tol = -1;

  auto* p = app.add_subcommand("parse", "check syntax and name ownership");
  p->add_option("file", file, "program file")->required();

  auto* r = app.add_subcommand("run", "explore and report terminal outputs");
  r->add_option("model", model, "model name or file")->required();
  r->add_option("--input", input_str, "input amplitudes a,b,c,d");
  r->add_flag("--json", as_json, "JSON report");

  auto* s = app.add_subcommand("state", "dump the state at a probe point");
  s->add_option("model", model, "model name or file")->required();
  s->add_option("--input", input_str, "input amplitudes a,b,c,d");
  s->add_option("--at", at, "probe point (cnot-output)");
  s->add_flag("--json", as_json, "JSON report");

  auto* e = app.add_subcommand("equiv", "decide probabilistic branching bisimilarity");
  e->add_option("left", model, "first model")->required();
  e->add_option("right", other, "second model")->required();
  e->add_option("--inputs", inputs, "basis | family | file of amplitude rows");
  e->add_option("--tol", tol, "comparison tolerance");
  e->add_flag("--json", as_json, "JSON report");

  auto* l = app.add_subcommand("lts", "export the transition graph as JSON");
  l->add_option("model", model, "model name or file")->required();
  l->add_option("--input", input_str, "input amplitudes a,b,c,d");
  l->add_option("-o,--output", out_file, "output file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    int code = app.exit(err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (tol < 0) tol = default_tol();
    if (p->parsed()) return cmd_parse(file);
    if (r->parsed()) return cmd_run(model, parse_input(input_str), as_json, limits);
    if (s->parsed())
      return cmd_state(model, parse_input(input_str), at, as_json);
    if (e->parsed()) return cmd_equiv(model, other, inputs, tol, as_json, limits);
    if (l->parsed()) return cmd_lts(model, parse_input(input_str), out_file, limits);
  } catch (const SyntaxError& err) {
    std::cerr << err.what() << "\n";
    return kExitParse;
  } catch (const LimitExceeded& err) {
    std::cerr << "limit exceeded: " << err.what() << "\n";
    return kExitLimit;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
