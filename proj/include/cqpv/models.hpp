#pragma once

// Shipped process corpus: the two CNOT gate models, their specifications,
// and the individual component processes, plus the environment schedules
// and probes used to drive them.

#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "cqpv/inline_defs.hpp"
#include "cqpv/parser.hpp"
#include "cqpv/semantics.hpp"

namespace cqpv::models {

enum class ModelId {
  PolSe, BS, Det, PDet, Counter, PolSeCT, CNOT, MMT,
  PSM, OP, OPCNOT, Output, Model1, Specification1, Model2, Specification2,
};

inline const std::vector<std::pair<ModelId, std::string>>& model_names() {
  static const std::vector<std::pair<ModelId, std::string>> v = {
      {ModelId::PolSe, "PolSe"},
      {ModelId::BS, "BS"},
      {ModelId::Det, "Det"},
      {ModelId::PDet, "PDet"},
      {ModelId::Counter, "Counter"},
      {ModelId::PolSeCT, "PolSeCT"},
      {ModelId::CNOT, "CNOT"},
      {ModelId::MMT, "MMT"},
      {ModelId::PSM, "PSM"},
      {ModelId::OP, "OP"},
      {ModelId::OPCNOT, "OPCNOT"},
      {ModelId::Output, "Output"},
      {ModelId::Model1, "Model1"},
      {ModelId::Specification1, "Specification1"},
      {ModelId::Model2, "Model2"},
      {ModelId::Specification2, "Specification2"},
  };
  return v;
}

inline std::string name_of(ModelId id) {
  for (const auto& [m, n] : model_names())
    if (m == id) return n;
  throw Error("unknown model id");
}

inline std::optional<ModelId> id_of(const std::string& name) {
  for (const auto& [m, n] : model_names())
    if (n == name) return m;
  return std::nullopt;
}

// Shared definition texts.  Each corpus file is self-contained, so the
// common processes are repeated in every file that uses them.
namespace detail {

inline constexpr const char* kPolSe =
    "PolSe(a:^[Qbit], c:^[NS], d:^[NS]) = "
    "a?[q0:Qbit].{s0:NS, s1:NS *= PS(q0)}.c![s0].d![s1].0\n";

inline constexpr const char* kPolSeCT =
    "PolSeCT(a:^[Qbit], b:^[Qbit], c:^[NS], d:^[NS], e:^[NS], f:^[NS]) = "
    "PolSe(a, c, d) | PolSe(b, e, f)\n";

inline constexpr const char* kBSHalf =
    "BSHalf(e:^[NS], f:^[NS], h:^[NS], i:^[NS]) = "
    "e?[s2:NS].f?[s3:NS].{s2, s3 *= B[1/2]}.h![s2].i![s3].0\n";

inline constexpr const char* kBSThird =
    "BSThird(e:^[NS], f:^[NS], h:^[NS], i:^[NS]) = "
    "e?[s2:NS].f?[s3:NS].{s2, s3 *= B[1/3]}.h![s2].i![s3].0\n";

inline constexpr const char* kDet =
    "Det(l:^[NS], m:^[NS], u:^[Int, Int]) = "
    "l?[s0:NS].m?[s1:NS].u![measure s0, s1].0\n";

inline constexpr const char* kPDet =
    "PDet(l:^[NS], m:^[NS], u:^[Bit]) = "
    "l?[s0:NS].m?[s1:NS].u![psmeasure s0, s1].0\n";

inline constexpr const char* kCounter =
    "Counter(u:^[Int, Int], v:^[Int, Int], out1:^[Int], cnt:^[Int], out2:^[Int]) = "
    "u?[c0:Int, c1:Int].v?[t0:Int, t1:Int]."
    "out1![if c0 + c1 = 1 and t0 + t1 = 1 then c1 else 0]."
    "out2![if c0 + c1 = 1 and t0 + t1 = 1 then t1 else 0]."
    "cnt![if c0 + c1 = 1 and t0 + t1 = 1 then 1 else 0].0\n";

inline constexpr const char* kCNOT =
    "CNOT(c:^[NS], d:^[NS], e:^[NS], f:^[NS], k:^[NS], l:^[NS], q:^[NS], r:^[NS]) = "
    "(new g, h, m, o, i, j, n, p:^[NS])(ns y, z)"
    "(BSHalf(e, f, g, h) | i![y].0 | BSThird(c, i, k, j) | j?[y1:NS].0 | "
    "BSThird(g, d, m, l) | n![z].0 | BSThird(h, n, o, p) | p?[z1:NS].0 | "
    "BSHalf(m, o, q, r))\n";

inline constexpr const char* kMMT =
    "MMT(k:^[NS], l:^[NS], q:^[NS], r:^[NS], out1:^[Int], cnt:^[Int], out2:^[Int]) = "
    "(new u, v:^[Int, Int])(Det(k, l, u) | Det(q, r, v) | "
    "Counter(u, v, out1, cnt, out2))\n";

inline constexpr const char* kPSM =
    "PSM(k:^[NS], l:^[NS], q:^[NS], r:^[NS], out1:^[Int], out2:^[Int]) = "
    "(new w1, w2:^[Bit])(PDet(k, l, w1) | PDet(q, r, w2) | "
    "w1?[x1:Bit].w2?[x2:Bit].out1![x1].out2![x2].0)\n";

inline constexpr const char* kOP =
    "OP(c:^[NS], d:^[NS], e:^[NS], f:^[NS], g:^[Int], h:^[NS], i:^[NS], j:^[NS], k:^[NS]) = "
    "(qbit q3)c?[s0:NS].d?[s1:NS].e?[s2:NS].f?[s3:NS]."
    "{s2, s3 *= H}.{q3 *= U19}.{(s0, s1), (s2, s3) *= CZ}.{s2, s3 *= H}."
    "h![s0].i![s1].j![s2].k![s3].g![measure q3].0\n";

inline constexpr const char* kOPCNOT =
    "OPCNOT(c:^[NS], d:^[NS], e:^[NS], f:^[NS], h:^[NS], i:^[NS], j:^[NS], k:^[NS]) = "
    "c?[s0:NS].d?[s1:NS].e?[s2:NS].f?[s3:NS]."
    "{s2, s3 *= H}.{(s0, s1), (s2, s3) *= CZ}.{s2, s3 *= H}."
    "h![s0].i![s1].j![s2].k![s3].0\n";

inline constexpr const char* kOutput1 =
    "Output(g:^[Int], h:^[NS], i:^[NS], j:^[NS], k:^[NS], out1:^[Int], cnt:^[Int], out2:^[Int]) = "
    "h?[s0:NS].i?[s1:NS].j?[s2:NS].k?[s3:NS].g?[x:Int]."
    "out1![if x = 1 then measure s1 else 0]."
    "out2![if x = 1 then measure s3 else 0].cnt![x].0\n";

inline constexpr const char* kOutput2 =
    "Output(h:^[NS], i:^[NS], j:^[NS], k:^[NS], out1:^[Int], out2:^[Int]) = "
    "h?[s0:NS].i?[s1:NS].j?[s2:NS].k?[s3:NS]."
    "out1![measure s1].out2![measure s3].0\n";

inline constexpr const char* kModel1 =
    "Model1(a:^[Qbit], b:^[Qbit], out1:^[Int], cnt:^[Int], out2:^[Int]) = "
    "(new c, d, e, f, k, l, q, r:^[NS])(PolSeCT(a, b, c, d, e, f) | "
    "CNOT(c, d, e, f, k, l, q, r) | MMT(k, l, q, r, out1, cnt, out2))\n";

inline constexpr const char* kSpecification1 =
    "Specification1(a:^[Qbit], b:^[Qbit], out1:^[Int], cnt:^[Int], out2:^[Int]) = "
    "(new c, d, e, f, h, i, j, k:^[NS])(new g:^[Int])"
    "(PolSeCT(a, b, c, d, e, f) | OP(c, d, e, f, g, h, i, j, k) | "
    "Output(g, h, i, j, k, out1, cnt, out2))\n";

inline constexpr const char* kModel2 =
    "Model2(a:^[Qbit], b:^[Qbit], out1:^[Int], out2:^[Int]) = "
    "(new c, d, e, f, k, l, q, r:^[NS])(PolSeCT(a, b, c, d, e, f) | "
    "CNOT(c, d, e, f, k, l, q, r) | PSM(k, l, q, r, out1, out2))\n";

inline constexpr const char* kSpecification2 =
    "Specification2(a:^[Qbit], b:^[Qbit], out1:^[Int], out2:^[Int]) = "
    "(new c, d, e, f, h, i, j, k:^[NS])(PolSeCT(a, b, c, d, e, f) | "
    "OPCNOT(c, d, e, f, h, i, j, k) | Output(h, i, j, k, out1, out2))\n";

}  // namespace detail

inline std::string source(ModelId id) {
  using namespace detail;
  std::string s;
  switch (id) {
    case ModelId::PolSe:
      s = std::string(kPolSe) + "Main = PolSe(a, c, d)\n";
      break;
    case ModelId::BS:
      s = std::string(kBSHalf) + kBSThird + "Main = BSHalf(e, f, h, i)\n";
      break;
    case ModelId::Det:
      s = std::string(kDet) + "Main = Det(l, m, u)\n";
      break;
    case ModelId::PDet:
      s = std::string(kPDet) + "Main = PDet(l, m, u)\n";
      break;
    case ModelId::Counter:
      s = std::string(kCounter) + "Main = Counter(u, v, out1, cnt, out2)\n";
      break;
    case ModelId::PolSeCT:
      s = std::string(kPolSe) + kPolSeCT + "Main = PolSeCT(a, b, c, d, e, f)\n";
      break;
    case ModelId::CNOT:
      s = std::string(kBSHalf) + kBSThird + kCNOT +
          "Main = CNOT(c, d, e, f, k, l, q, r)\n";
      break;
    case ModelId::MMT:
      s = std::string(kCounter) + kDet + kMMT +
          "Main = MMT(k, l, q, r, out1, cnt, out2)\n";
      break;
    case ModelId::PSM:
      s = std::string(kPDet) + kPSM + "Main = PSM(k, l, q, r, out1, out2)\n";
      break;
    case ModelId::OP:
      s = std::string(kOP) + "Main = OP(c, d, e, f, g, h, i, j, k)\n";
      break;
    case ModelId::OPCNOT:
      s = std::string(kOPCNOT) + "Main = OPCNOT(c, d, e, f, h, i, j, k)\n";
      break;
    case ModelId::Output:
      s = std::string(kOutput1) + "Main = Output(g, h, i, j, k, out1, cnt, out2)\n";
      break;
    case ModelId::Model1:
      s = std::string(kBSHalf) + kBSThird + kCNOT + kCounter + kDet + kMMT +
          kModel1 + kPolSe + kPolSeCT + "Main = Model1(a, b, out1, cnt, out2)\n";
      break;
    case ModelId::Specification1:
      s = std::string(kOP) + kOutput1 + kPolSe + kPolSeCT + kSpecification1 +
          "Main = Specification1(a, b, out1, cnt, out2)\n";
      break;
    case ModelId::Model2:
      s = std::string(kBSHalf) + kBSThird + kCNOT + kModel2 + kPDet + kPSM +
          kPolSe + kPolSeCT + "Main = Model2(a, b, out1, out2)\n";
      break;
    case ModelId::Specification2:
      s = std::string(kOPCNOT) + kOutput2 + kPolSe + kPolSeCT + kSpecification2 +
          "Main = Specification2(a, b, out1, out2)\n";
      break;
  }
  return s;
}

inline std::string file_name(ModelId id) { return name_of(id) + ".cqp"; }

inline Program build(ModelId id) { return parse(source(id)); }

// ---------------------------------------------------------------------------
// Mutants (fault-injection variants of Model1, used for sensitivity checks)

enum class MutantId {
  BS2Half,          // second beam splitter at reflectivity 1/2 instead of 1/3
  BS5SignFlip,      // fifth beam splitter applied with swapped orientation
  CounterInverted,  // coincidence flag inverted
};

inline std::string mutant_name(MutantId id) {
  switch (id) {
    case MutantId::BS2Half: return "MutantBS2Half";
    case MutantId::BS5SignFlip: return "MutantBS5SignFlip";
    case MutantId::CounterInverted: return "MutantCounterInverted";
  }
  throw Error("unknown mutant id");
}

inline std::optional<MutantId> mutant_of(const std::string& name) {
  for (auto id : {MutantId::BS2Half, MutantId::BS5SignFlip, MutantId::CounterInverted})
    if (mutant_name(id) == name) return id;
  return std::nullopt;
}

inline std::string mutant_source(MutantId id) {
  std::string s = source(ModelId::Model1);
  auto replace_once = [&](const std::string& from, const std::string& to) {
    auto pos = s.find(from);
    if (pos == std::string::npos) throw Error("mutant anchor not found: " + from);
    s.replace(pos, from.size(), to);
  };
  switch (id) {
    case MutantId::BS2Half:
      replace_once("BSThird(c, i, k, j)", "BSHalf(c, i, k, j)");
      break;
    case MutantId::BS5SignFlip:
      replace_once("BSHalf(m, o, q, r)", "BSHalf(o, m, r, q)");
      break;
    case MutantId::CounterInverted:
      replace_once("then 1 else 0", "then 0 else 1");
      break;
  }
  return s;
}

inline Program build_mutant(MutantId id) { return parse(mutant_source(id)); }

// Resolve a CLI-style model name: a model id, a mutant id, or a file path.
inline Program resolve(const std::string& name) {
  if (auto id = id_of(name)) return build(*id);
  if (auto mid = mutant_of(name)) return build_mutant(*mid);
  std::ifstream in(name);
  if (!in) throw Error("unknown model and unreadable file: " + name);
  std::ostringstream text;
  text << in.rdbuf();
  return parse(text.str());
}

// ---------------------------------------------------------------------------
// Input states and environment schedules

struct InputStateSpec {
  Amp alpha{0}, beta{0}, gamma{0}, delta{0};

  double norm2() const {
    return std::norm(alpha) + std::norm(beta) + std::norm(gamma) + std::norm(delta);
  }
  void validate() const {
    double n2 = norm2();
    if (std::abs(n2 - 1.0) > 1e-9) throw NotNormalized(n2);
  }
  std::string str() const {
    std::ostringstream os;
    auto c = [&](Amp a) {
      os << a.real();
      if (a.imag() != 0) os << (a.imag() > 0 ? "+" : "") << a.imag() << "i";
    };
    c(alpha); os << ","; c(beta); os << ","; c(gamma); os << ","; c(delta);
    return os.str();
  }
};

// Injects the control qubit q1 on channel a and the target qubit q2 on
// channel b; the joint two-qubit fragment is tensored in once.
inline EnvironmentSchedule environment_for(const InputStateSpec& in) {
  in.validate();
  SystemLayout lay;
  lay.slots.push_back(Slot{"q1", SlotKind::Qubit});
  lay.slots.push_back(Slot{"q2", SlotKind::Qubit});
  AmpMap amps;
  auto set = [&](int c, int t, Amp v) {
    if (std::abs(v) > kPruneTol) amps[BasisVector{{c, t}}] = v;
  };
  set(0, 0, in.alpha);
  set(0, 1, in.beta);
  set(1, 0, in.gamma);
  set(1, 1, in.delta);
  JointState fragment = inject_photon_pair_state(lay, amps);

  EnvironmentSchedule env;
  Injection ia;
  ia.qnames = {"q1"};
  ia.fragment = fragment;
  ia.fragment_tag = "cnot-input";
  Injection ib;
  ib.qnames = {"q2"};
  ib.fragment = fragment;
  ib.fragment_tag = "cnot-input";
  env.inputs["a"].push_back(std::move(ia));
  env.inputs["b"].push_back(std::move(ib));
  return env;
}

// The default six-state input family: the four basis states, the
// maximally entangling superposition, and one fixed generic state.
inline std::vector<InputStateSpec> default_family() {
  const double r = 1.0 / std::sqrt(2.0);
  std::vector<InputStateSpec> fam = {
      {1, 0, 0, 0},
      {0, 1, 0, 0},
      {0, 0, 1, 0},
      {0, 0, 0, 1},
      {r, 0, 0, r},
  };
  InputStateSpec g{Amp(0.21, 0.33), Amp(-0.40, 0.12), Amp(0.52, -0.18),
                   Amp(0.35, 0.47)};
  double n = std::sqrt(g.norm2());
  g.alpha /= n; g.beta /= n; g.gamma /= n; g.delta /= n;
  fam.push_back(g);
  return fam;
}

// ---------------------------------------------------------------------------
// Probes and runs

inline ProcessPtr entry_term(const Program& prog) { return inline_program(prog); }

// State right after the fifth beam splitter action fires and before any
// measurement: the gate's output state over (c1, c2, t1, t2, x1, x2).
inline JointState cnot_output_state(const Program& prog, const InputStateSpec& in) {
  Semantics sem(environment_for(in));
  ProcessPtr term = entry_term(prog);

  bool captured = false;
  int bs_count = 0;
  JointState result;

  auto is_bs_action = [](const cqpv::detail::Offer& o) {
    if (o.kind != cqpv::detail::Offer::Kind::Tau || !o.node) return false;
    if (o.node->kind != Process::Kind::Action) return false;
    const auto& a = o.node->action;
    return a->kind == Expr::Kind::ApplyUnitary && !a->args.empty() &&
           a->args[0]->kind == Expr::Kind::UnitaryName && a->args[0]->name == "B";
  };
  auto payload_measures = [](const Process* n) {
    if (!n || n->kind != Process::Kind::Output) return false;
    for (const auto& e : n->payload) {
      std::function<bool(const ExprPtr&)> scan = [&](const ExprPtr& x) {
        if (x->kind == Expr::Kind::Measure || x->kind == Expr::Kind::PsMeasure)
          return true;
        for (const auto& s : x->args)
          if (scan(s)) return true;
        return false;
      };
      if (scan(e)) return true;
    }
    return false;
  };

  RunHooks hooks;
  // before the probe fires, keep measurement-bearing communications back so
  // the captured state is the pure gate output
  hooks.choose = [&](const std::vector<cqpv::detail::Offer>& enabled) -> size_t {
    if (captured) return 0;
    for (size_t i = 0; i < enabled.size(); ++i)
      if (enabled[i].kind != cqpv::detail::Offer::Kind::Com ||
          !payload_measures(enabled[i].node))
        return i;
    return 0;
  };
  hooks.on_step = [&](const cqpv::detail::Offer& offer, const MixedConfig& mc) {
    if (captured || !is_bs_action(offer)) return;
    if (++bs_count < 5) return;
    if (mc.components.size() != 1) throw Error("probe reached a mixed state");
    result = mc.components.front().sigma;
    captured = true;
  };
  run_deterministic(term, sem, hooks);
  if (!captured) throw Error("probe never reached the gate output");
  return reorder_to(result, {"q1a", "q1b", "q2a", "q2b", "y", "z"});
}

inline std::map<std::string, double> terminal_distribution_for(
    const Program& prog, const InputStateSpec& in) {
  Semantics sem(environment_for(in));
  auto outcomes = run_deterministic(entry_term(prog), sem);
  return terminal_distribution(outcomes);
}

// ---------------------------------------------------------------------------
// Congruence contexts: hole not under input or qubit/number-state declaration

inline ProcessPtr congruence_context(int which, ProcessPtr hole) {
  auto lit = [](int v) { return Expr::lit(v); };
  auto out0 = [&](const std::string& c, int v, ProcessPtr cont) {
    return Process::output(c, {lit(v)}, std::move(cont));
  };
  auto in0 = [&](const std::string& c, const std::string& x, ProcessPtr cont) {
    return Process::input(c, {Binder{x, TypeExpr::simple(TypeExpr::Kind::Int)}},
                          std::move(cont));
  };
  auto chan_int = [] {
    return TypeExpr::channel({TypeExpr::simple(TypeExpr::Kind::Int)});
  };
  switch (which) {
    case 0: return hole;
    case 1: return Process::par(std::move(hole), Process::nil());
    case 2: return Process::par(std::move(hole), out0("t", 0, Process::nil()));
    case 3: return out0("t", 1, std::move(hole));
    case 4:
      return Process::action_step(Expr::binary(Expr::Kind::Plus, lit(1), lit(2)),
                                  std::move(hole));
    case 5:
      return Process::make_new(
          "t", chan_int(),
          Process::par(std::move(hole),
                       Process::par(out0("t", 0, Process::nil()),
                                    in0("t", "x", Process::nil()))));
    case 6:
      return Process::sum(out0("t", 0, std::move(hole)),
                          out0("tu", 1, Process::nil()));
    case 7:
      return Process::action_step(Expr::binary(Expr::Kind::Eq, lit(0), lit(0)),
                                  std::move(hole));
    case 8:
      return out0("t", 0, Process::action_step(lit(7), std::move(hole)));
    case 9:
      return Process::make_new(
          "t", chan_int(),
          Process::par(out0("t", 3, std::move(hole)), in0("t", "x", Process::nil())));
    default:
      throw Error("context index out of range");
  }
}

inline constexpr int kContextCount = 10;

}  // namespace cqpv::models
