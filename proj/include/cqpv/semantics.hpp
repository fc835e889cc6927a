#pragma once

// Operational semantics: mixed configurations with weighted components,
// probabilistic output distributions, expression evaluation with
// measurement branching, and breadth-first construction of the reachable
// labelled transition system.

#include <functional>
#include <optional>
#include <sstream>
#include <variant>

#include "cqpv/inline_defs.hpp"
#include "cqpv/optics.hpp"
#include "cqpv/printer.hpp"

namespace cqpv {

// ---------------------------------------------------------------------------
// Classical values

struct Value {
  enum class Kind { Int, Bool, Tuple };
  Kind kind = Kind::Int;
  long i = 0;
  bool b = false;
  std::vector<Value> items;

  static Value integer(long v) {
    Value x;
    x.kind = Kind::Int;
    x.i = v;
    return x;
  }
  static Value boolean(bool v) {
    Value x;
    x.kind = Kind::Bool;
    x.b = v;
    return x;
  }
  static Value tuple(std::vector<Value> xs) {
    Value x;
    x.kind = Kind::Tuple;
    x.items = std::move(xs);
    return x;
  }

  std::string str() const {
    switch (kind) {
      case Kind::Int: return std::to_string(i);
      case Kind::Bool: return b ? "true" : "false";
      case Kind::Tuple: {
        std::string s = "(";
        for (size_t k = 0; k < items.size(); ++k) {
          if (k) s += ",";
          s += items[k].str();
        }
        return s + ")";
      }
    }
    return "?";
  }

  friend bool operator==(const Value& a, const Value& b) {
    return a.str() == b.str();
  }
  friend bool operator<(const Value& a, const Value& b) {
    return a.str() < b.str();
  }
};

inline void flatten_value(const Value& v, std::vector<Value>& out) {
  if (v.kind == Value::Kind::Tuple)
    for (const auto& x : v.items) flatten_value(x, out);
  else
    out.push_back(v);
}

// ---------------------------------------------------------------------------
// Configurations

struct Component {
  double weight = 1.0;
  JointState sigma;
  std::vector<Value> values;  // aligned with MixedConfig::bound_vars
};

struct MixedConfig {
  std::vector<Component> components;
  std::vector<std::string> bound_vars;
  ProcessPtr term;
  std::vector<std::string> omega;  // quantum names owned by the term
  std::map<std::string, int> env_pos;
  std::set<std::string> injected_tags;

  double total_weight() const {
    double t = 0;
    for (const auto& c : components) t += c.weight;
    return t;
  }
};

struct ProbBranch {
  double prob;
  std::vector<Value> values;  // the resolved output tuple of this branch
  MixedConfig config;
};

struct ProbConfig {
  std::string chan;  // channel of the output that produced the distribution
  std::vector<ProbBranch> branches;
};

using Config = std::variant<MixedConfig, ProbConfig>;

struct Label {
  enum class Kind { Tau, Prob, In, Out };
  Kind kind = Kind::Tau;
  double prob = 1.0;                         // Prob
  std::string chan;                          // In/Out
  std::vector<Value> values;                 // In: received classical values
  std::vector<std::string> qnames;           // transmitted quantum names
  std::vector<std::vector<Value>> value_set;  // Out: sorted set of tuples

  std::string str() const {
    switch (kind) {
      case Kind::Tau: return "tau";
      case Kind::Prob: {
        std::ostringstream os;
        os << "p=" << prob;
        return os.str();
      }
      case Kind::In: {
        std::string s = chan + "?(";
        for (size_t i = 0; i < values.size(); ++i) s += (i ? "," : "") + values[i].str();
        for (size_t i = 0; i < qnames.size(); ++i)
          s += (values.empty() && i == 0 ? "" : ",") + qnames[i];
        return s + ")";
      }
      case Kind::Out: {
        std::string s = chan + "!<{";
        for (size_t j = 0; j < value_set.size(); ++j) {
          if (j) s += "|";
          for (size_t i = 0; i < value_set[j].size(); ++i)
            s += (i ? "," : "") + value_set[j][i].str();
        }
        s += "}";
        for (const auto& q : qnames) s += "," + q;
        return s + ">";
      }
    }
    return "?";
  }
};

// ---------------------------------------------------------------------------
// Environment

struct Injection {
  std::vector<Value> values;        // classical payload entries
  std::vector<std::string> qnames;  // quantum payload entries
  JointState fragment;              // prepared state over new quantum names
  std::string fragment_tag;         // tensored into sigma once per tag
};

struct EnvironmentSchedule {
  std::map<std::string, std::vector<Injection>> inputs;
};

// ---------------------------------------------------------------------------
// Expression evaluation (big-step, with measurement branching)

namespace detail {

struct EvalBranch {
  double rel_weight = 1.0;
  JointState sigma;
  Value val;
};

inline bool is_quantum_name(const JointState& sigma, const std::string& n) {
  return sigma.layout.has(n);
}

inline std::vector<EvalBranch> eval_expr(const ExprPtr& e, const JointState& sigma,
                                         const std::map<std::string, Value>& vars) {
  using K = Expr::Kind;
  switch (e->kind) {
    case K::IntLit: return {{1.0, sigma, Value::integer(e->value)}};
    case K::BoolLit: return {{1.0, sigma, Value::boolean(e->bvalue)}};
    case K::Var: {
      auto it = vars.find(e->name);
      if (it == vars.end())
        throw StuckExpression("unbound variable " + e->name);
      return {{1.0, sigma, it->second}};
    }
    case K::Plus:
    case K::Eq:
    case K::And:
    case K::Pair: {
      std::vector<EvalBranch> out;
      for (const auto& l : eval_expr(e->args[0], sigma, vars)) {
        for (const auto& r : eval_expr(e->args[1], l.sigma, vars)) {
          Value v;
          if (e->kind == K::Plus) {
            if (l.val.kind != Value::Kind::Int || r.val.kind != Value::Kind::Int)
              throw StuckExpression("+ on non-integers");
            v = Value::integer(l.val.i + r.val.i);
          } else if (e->kind == K::Eq) {
            if (l.val.kind != Value::Kind::Int || r.val.kind != Value::Kind::Int)
              throw StuckExpression("= on non-integers");
            v = Value::boolean(l.val.i == r.val.i);
          } else if (e->kind == K::And) {
            if (l.val.kind != Value::Kind::Bool || r.val.kind != Value::Kind::Bool)
              throw StuckExpression("and on non-booleans");
            v = Value::boolean(l.val.b && r.val.b);
          } else {
            v = Value::tuple({l.val, r.val});
          }
          out.push_back({l.rel_weight * r.rel_weight, r.sigma, v});
        }
      }
      return out;
    }
    case K::IfThenElse: {
      std::vector<EvalBranch> out;
      for (const auto& c : eval_expr(e->args[0], sigma, vars)) {
        if (c.val.kind != Value::Kind::Bool)
          throw StuckExpression("if condition is not a boolean");
        for (const auto& r : eval_expr(e->args[c.val.b ? 1 : 2], c.sigma, vars))
          out.push_back({c.rel_weight * r.rel_weight, r.sigma, r.val});
      }
      return out;
    }
    case K::Measure: {
      std::vector<std::string> names;
      for (const auto& a : e->args) {
        if (a->kind != K::Var || !is_quantum_name(sigma, a->name))
          throw StuckExpression("measure operand is not a quantum name");
        names.push_back(a->name);
      }
      bool modes = sigma.layout.slots[sigma.layout.index_of(names[0])].kind ==
                   SlotKind::Mode;
      std::vector<EvalBranch> out;
      if (modes) {
        for (const auto& o : measure_modes_list(sigma, names)) {
          Value v;
          if (o.values.size() == 1) {
            v = Value::integer(o.values[0]);
          } else {
            std::vector<Value> items;
            for (int x : o.values) items.push_back(Value::integer(x));
            v = Value::tuple(std::move(items));
          }
          out.push_back({o.weight, o.post_state, v});
        }
      } else {
        for (const auto& o : measure_qubits(sigma, names))
          out.push_back({o.weight, o.post_state, Value::integer(o.values[0])});
      }
      return out;
    }
    case K::PsMeasure: {
      if (e->args.size() != 2)
        throw StuckExpression("psmeasure takes a mode pair");
      std::vector<std::string> names;
      for (const auto& a : e->args) {
        if (a->kind != K::Var || !is_quantum_name(sigma, a->name))
          throw StuckExpression("psmeasure operand is not a quantum name");
        names.push_back(a->name);
      }
      // raw retained weights; the caller renormalizes across the mixture
      std::vector<EvalBranch> out;
      for (const auto& o : measure_modes_list(sigma, names)) {
        if (o.values[0] + o.values[1] != 1) continue;
        out.push_back({o.weight, o.post_state, Value::integer(o.values[1])});
      }
      return out;
    }
    default:
      throw StuckExpression("expression is not evaluable here");
  }
}

// ---------------------------------------------------------------------------
// Offers: enabled redex positions in the term tree

struct Offer {
  enum class Kind { Tau, In, Out, Com };
  Kind kind;
  std::string chan;  // In/Out/Com
  const Process* node = nullptr;
  std::vector<int> path;
  const Process* in_node = nullptr;  // Com receiver
  std::vector<int> in_path;
};

inline void collect_offers(const ProcessPtr& p, std::vector<int>& path,
                           std::vector<Offer>& out) {
  auto with = [&](int step, auto&& fn) {
    path.push_back(step);
    fn();
    path.pop_back();
  };
  switch (p->kind) {
    case Process::Kind::Nil:
      return;
    case Process::Kind::Par: {
      size_t first = out.size();
      with(0, [&] { collect_offers(p->left, path, out); });
      size_t mid = out.size();
      with(1, [&] { collect_offers(p->right, path, out); });
      size_t last = out.size();
      // cross-side communication
      std::vector<Offer> coms;
      for (size_t i = first; i < mid; ++i)
        for (size_t j = mid; j < last; ++j) {
          const Offer *a = &out[i], *b = &out[j];
          if (a->kind == Offer::Kind::In && b->kind == Offer::Kind::Out)
            std::swap(a, b);
          if (a->kind == Offer::Kind::Out && b->kind == Offer::Kind::In &&
              a->chan == b->chan) {
            Offer c;
            c.kind = Offer::Kind::Com;
            c.chan = a->chan;
            c.node = a->node;
            c.path = a->path;
            c.in_node = b->node;
            c.in_path = b->path;
            coms.push_back(std::move(c));
          }
        }
      out.insert(out.end(), coms.begin(), coms.end());
      return;
    }
    case Process::Kind::Sum:
      with(0, [&] { collect_offers(p->left, path, out); });
      with(1, [&] { collect_offers(p->right, path, out); });
      return;
    case Process::Kind::New: {
      size_t first = out.size();
      with(2, [&] { collect_offers(p->cont, path, out); });
      out.erase(std::remove_if(out.begin() + first, out.end(),
                               [&](const Offer& o) {
                                 return (o.kind == Offer::Kind::In ||
                                         o.kind == Offer::Kind::Out) &&
                                        o.chan == p->name;
                               }),
                out.end());
      return;
    }
    case Process::Kind::Input: {
      Offer o;
      o.kind = Offer::Kind::In;
      o.chan = p->chan;
      o.node = p.get();
      o.path = path;
      out.push_back(std::move(o));
      return;
    }
    case Process::Kind::Output: {
      Offer o;
      o.kind = Offer::Kind::Out;
      o.chan = p->chan;
      o.node = p.get();
      o.path = path;
      out.push_back(std::move(o));
      return;
    }
    case Process::Kind::Action:
    case Process::Kind::QbitDecl:
    case Process::Kind::NsDecl: {
      Offer o;
      o.kind = Offer::Kind::Tau;
      o.node = p.get();
      o.path = path;
      out.push_back(std::move(o));
      return;
    }
    case Process::Kind::Call:
      throw Error("unexpanded call " + p->name + " during execution");
  }
}

// Rebuild the term with the subterm at `path` replaced. A choice on the path
// is resolved: the whole Sum collapses to the rebuilt branch.
inline ProcessPtr replace_at(const ProcessPtr& p, const std::vector<int>& path,
                             size_t at, const ProcessPtr& sub) {
  if (at == path.size()) return sub;
  int step = path[at];
  switch (p->kind) {
    case Process::Kind::Par:
      if (step == 0)
        return Process::par(replace_at(p->left, path, at + 1, sub), p->right);
      return Process::par(p->left, replace_at(p->right, path, at + 1, sub));
    case Process::Kind::Sum:
      return replace_at(step == 0 ? p->left : p->right, path, at + 1, sub);
    default: {
      auto out = std::make_shared<Process>(*p);
      out->cont = replace_at(p->cont, path, at + 1, sub);
      return out;
    }
  }
}

// Replace at two positions at once (communication); the paths share a prefix
// and then split at a parallel composition.
inline ProcessPtr replace_two(const ProcessPtr& p, const std::vector<int>& p1,
                              size_t at1, const ProcessPtr& s1,
                              const std::vector<int>& p2, size_t at2,
                              const ProcessPtr& s2) {
  if (at1 < p1.size() && at2 < p2.size() && p1[at1] == p2[at2]) {
    int step = p1[at1];
    switch (p->kind) {
      case Process::Kind::Par:
        if (step == 0)
          return Process::par(
              replace_two(p->left, p1, at1 + 1, s1, p2, at2 + 1, s2), p->right);
        return Process::par(p->left,
                            replace_two(p->right, p1, at1 + 1, s1, p2, at2 + 1, s2));
      case Process::Kind::Sum:
        return replace_two(step == 0 ? p->left : p->right, p1, at1 + 1, s1, p2,
                           at2 + 1, s2);
      default: {
        auto out = std::make_shared<Process>(*p);
        out->cont = replace_two(p->cont, p1, at1 + 1, s1, p2, at2 + 1, s2);
        return out;
      }
    }
  }
  // paths split here: must be a Par with one side each
  if (p->kind != Process::Kind::Par)
    throw Error("communication paths do not split at a parallel composition");
  ProcessPtr l = p->left, r = p->right;
  if (p1[at1] == 0)
    l = replace_at(l, p1, at1 + 1, s1);
  else
    r = replace_at(r, p1, at1 + 1, s1);
  if (p2[at2] == 0)
    l = replace_at(l, p2, at2 + 1, s2);
  else
    r = replace_at(r, p2, at2 + 1, s2);
  return Process::par(l, r);
}

inline void collect_names(const ExprPtr& e, std::set<std::string>& out) {
  if (!e) return;
  if (!e->name.empty()) out.insert(e->name);
  for (const auto& t : e->targets) out.insert(t);
  for (const auto& a : e->args) collect_names(a, out);
}

inline void collect_names(const ProcessPtr& p, std::set<std::string>& out) {
  if (!p) return;
  if (!p->chan.empty()) out.insert(p->chan);
  if (!p->name.empty()) out.insert(p->name);
  for (const auto& b : p->binders) out.insert(b.name);
  for (const auto& e : p->payload) collect_names(e, out);
  collect_names(p->action, out);
  for (const auto& a : p->args) out.insert(a);
  collect_names(p->left, out);
  collect_names(p->right, out);
  collect_names(p->cont, out);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Stepping

class Semantics {
 public:
  explicit Semantics(EnvironmentSchedule env = {}) : env_(std::move(env)) {}

  const EnvironmentSchedule& environment() const { return env_; }

  static MixedConfig initial(const ProcessPtr& term) {
    MixedConfig c;
    c.term = term;
    Component comp;
    comp.weight = 1.0;
    comp.sigma = JointState::empty();
    c.components = {comp};
    return c;
  }

  // All enabled transitions of a configuration.
  std::vector<std::pair<Label, Config>> step(const Config& config) const {
    if (std::holds_alternative<ProbConfig>(config)) {
      const auto& pc = std::get<ProbConfig>(config);
      std::vector<std::pair<Label, Config>> out;
      for (const auto& br : pc.branches) {
        Label l;
        l.kind = Label::Kind::Prob;
        l.prob = br.prob;
        out.emplace_back(l, br.config);
      }
      return out;
    }
    const auto& mc = std::get<MixedConfig>(config);
    std::vector<std::pair<Label, Config>> out;
    for (const auto& offer : offers(mc)) {
      auto r = apply(mc, offer);
      if (r) out.push_back(std::move(*r));
    }
    return out;
  }

  std::vector<detail::Offer> offers(const MixedConfig& mc) const {
    std::vector<detail::Offer> out;
    std::vector<int> path;
    detail::collect_offers(mc.term, path, out);
    return out;
  }

  // Apply one offer. Returns nothing when the offer is not enabled (an input
  // with no scheduled injection left).
  std::optional<std::pair<Label, Config>> apply(const MixedConfig& mc,
                                                const detail::Offer& offer) const {
    switch (offer.kind) {
      case detail::Offer::Kind::Tau:
        return apply_tau(mc, offer);
      case detail::Offer::Kind::Com:
        return apply_com(mc, offer);
      case detail::Offer::Kind::Out:
        return apply_out(mc, offer);
      case detail::Offer::Kind::In:
        return apply_env_in(mc, offer);
    }
    throw Error("unreachable offer kind");
  }

  // True when the configuration has at least one tau (or internal) move.
  bool has_tau(const MixedConfig& mc) const {
    for (const auto& o : offers(mc))
      if (o.kind == detail::Offer::Kind::Tau || o.kind == detail::Offer::Kind::Com)
        return true;
    return false;
  }

 private:
  EnvironmentSchedule env_;

  // `binder` is the declaring occurrence whose own name may be reused
  std::string fresh(const MixedConfig& mc, const std::string& base,
                    const std::string& binder = "") const {
    std::set<std::string> taken;
    detail::collect_names(mc.term, taken);
    if (!binder.empty() && base == binder) taken.erase(binder);
    for (const auto& s : mc.components.front().sigma.layout.slots)
      taken.insert(s.name);
    for (const auto& v : mc.bound_vars) taken.insert(v);
    return detail::avoid(base, taken);
  }

  static std::map<std::string, Value> var_map(const MixedConfig& mc,
                                              const Component& comp) {
    std::map<std::string, Value> vars;
    for (size_t i = 0; i < mc.bound_vars.size(); ++i)
      vars[mc.bound_vars[i]] = comp.values[i];
    return vars;
  }

  // Drop bound variables no longer referenced by the term.
  static void prune_vars(MixedConfig& mc) {
    std::set<std::string> used;
    detail::collect_names(mc.term, used);
    std::vector<size_t> keep;
    for (size_t i = 0; i < mc.bound_vars.size(); ++i)
      if (used.count(mc.bound_vars[i])) keep.push_back(i);
    if (keep.size() == mc.bound_vars.size()) return;
    std::vector<std::string> vars;
    for (size_t i : keep) vars.push_back(mc.bound_vars[i]);
    mc.bound_vars = std::move(vars);
    for (auto& c : mc.components) {
      std::vector<Value> vals;
      for (size_t i : keep) vals.push_back(c.values[i]);
      c.values = std::move(vals);
    }
  }

  static std::string component_key(const Component& c) {
    std::ostringstream os;
    JointState s = c.sigma.phase_canonical();
    for (const auto& [bv, a] : s.amplitudes) {
      for (int v : bv.values) os << v << ".";
      os << ":" << std::llround(a.real() * 1e9) << "," << std::llround(a.imag() * 1e9)
         << ";";
    }
    os << "|";
    for (const auto& v : c.values) os << v.str() << ",";
    return os.str();
  }

  // Renormalize (post-selection may shed weight), merge equal components,
  // drop negligible ones, prune dead variables.
  static void tidy(MixedConfig& mc) {
    prune_vars(mc);
    double total = mc.total_weight();
    if (total < kPruneTol) throw PostSelectionEmpty();
    std::map<std::string, size_t> index;
    std::vector<Component> merged;
    for (auto& c : mc.components) {
      c.weight /= total;
      if (c.weight < kPruneTol) continue;
      std::string key = component_key(c);
      auto it = index.find(key);
      if (it == index.end()) {
        index[key] = merged.size();
        merged.push_back(std::move(c));
      } else {
        merged[it->second].weight += c.weight;
      }
    }
    mc.components = std::move(merged);
  }

  std::optional<std::pair<Label, Config>> apply_tau(const MixedConfig& mc,
                                                    const detail::Offer& o) const {
    const Process* node = o.node;
    MixedConfig next = mc;
    Label l;
    l.kind = Label::Kind::Tau;
    if (node->kind == Process::Kind::QbitDecl ||
        node->kind == Process::Kind::NsDecl) {
      bool qubit = node->kind == Process::Kind::QbitDecl;
      std::string f = fresh(mc, node->name, node->name);
      for (auto& c : next.components)
        c.sigma = qubit ? allocate_qubit(c.sigma, f) : allocate_mode(c.sigma, f);
      ProcessPtr cont = node->cont;
      if (f != node->name)
        cont = detail::substitute_process(cont, {{node->name, f}});
      next.term = detail::replace_at(mc.term, o.path, 0, cont);
      next.omega.push_back(f);
      tidy(next);
      return std::make_pair(l, Config(std::move(next)));
    }
    // Action
    const ExprPtr& a = node->action;
    if (a->kind == Expr::Kind::PsApply) {
      const std::string& q = a->name;
      std::string fa = fresh(mc, q + "a");
      std::string fb;
      {
        // both fresh names chosen together
        MixedConfig probe = mc;
        probe.bound_vars.push_back(fa);
        for (auto& c : probe.components) c.values.push_back(Value::integer(0));
        fb = fresh(probe, q + "b");
      }
      for (auto& c : next.components) c.sigma = ps_convert(c.sigma, q, fa, fb);
      ProcessPtr cont = detail::substitute_process(
          node->cont, {{a->targets[0], fa}, {a->targets[1], fb}});
      next.term = detail::replace_at(mc.term, o.path, 0, cont);
      auto& w = next.omega;
      w.erase(std::remove(w.begin(), w.end(), q), w.end());
      w.push_back(fa);
      w.push_back(fb);
      tidy(next);
      return std::make_pair(l, Config(std::move(next)));
    }
    if (a->kind == Expr::Kind::ApplyUnitary) {
      for (auto& c : next.components) c.sigma = apply_named_unitary(c.sigma, a);
      next.term = detail::replace_at(mc.term, o.path, 0, node->cont);
      tidy(next);
      return std::make_pair(l, Config(std::move(next)));
    }
    // general expression action: evaluate and discard the value
    std::vector<Component> comps;
    for (const auto& c : next.components)
      for (const auto& br : detail::eval_expr(a, c.sigma, var_map(mc, c)))
        comps.push_back({c.weight * br.rel_weight, br.sigma, c.values});
    next.components = std::move(comps);
    next.term = detail::replace_at(mc.term, o.path, 0, node->cont);
    tidy(next);
    return std::make_pair(l, Config(std::move(next)));
  }

  static JointState apply_named_unitary(const JointState& sigma, const ExprPtr& a) {
    const ExprPtr& u = a->args[0];
    const auto& t = a->targets;
    if (u->kind != Expr::Kind::UnitaryName)
      throw StuckExpression("operator position is not a unitary");
    if (u->name == "B") {
      if (t.size() != 2) throw StuckExpression("B acts on a mode pair");
      return beam_splitter(sigma, t[0], t[1],
                           static_cast<double>(u->bs_num) / u->bs_den);
    }
    if (u->name == "CZ") {
      if (t.size() != 4) throw StuckExpression("CZ acts on two mode pairs");
      return dual_rail_cz(sigma, {t[0], t[1]}, {t[2], t[3]});
    }
    if (u->name == "U19") {
      if (t.size() != 1) throw StuckExpression("U19 acts on one qubit");
      return biased_coin_unitary(sigma, t[0]);
    }
    if (u->name == "H") {
      if (t.size() == 2) return dual_rail_hadamard(sigma, t[0], t[1]);
      if (t.size() == 1) {
        Eigen::MatrixXcd h(2, 2);
        double r = 1 / std::sqrt(2.0);
        h << r, r, r, -r;
        return apply_unitary(sigma, {t[0]}, h);
      }
      throw StuckExpression("H acts on one qubit or one mode pair");
    }
    throw StuckExpression("unknown unitary " + u->name);
  }

  // One payload position: either a quantum name or classical branches.
  struct PayloadItem {
    bool quantum = false;
    std::string qname;
    ExprPtr expr;
  };

  static std::vector<PayloadItem> classify_payload(const MixedConfig& mc,
                                                   const Process* out_node) {
    const SystemLayout& lay = mc.components.front().sigma.layout;
    std::vector<PayloadItem> items;
    for (const auto& e : out_node->payload) {
      PayloadItem it;
      if (e->kind == Expr::Kind::Var && lay.has(e->name)) {
        it.quantum = true;
        it.qname = e->name;
      } else {
        it.expr = e;
      }
      items.push_back(std::move(it));
    }
    return items;
  }

  // Evaluate the classical payload items of one component, threading sigma.
  struct PayloadBranch {
    double rel_weight = 1.0;
    JointState sigma;
    std::vector<Value> values;  // flattened classical values in order
  };

  static std::vector<PayloadBranch> eval_payload(
      const MixedConfig& mc, const Component& c,
      const std::vector<PayloadItem>& items) {
    std::vector<PayloadBranch> branches = {{1.0, c.sigma, {}}};
    auto vars = var_map(mc, c);
    for (const auto& item : items) {
      if (item.quantum) continue;
      std::vector<PayloadBranch> next;
      for (const auto& b : branches) {
        for (const auto& r : detail::eval_expr(item.expr, b.sigma, vars)) {
          PayloadBranch nb = b;
          nb.rel_weight *= r.rel_weight;
          nb.sigma = r.sigma;
          flatten_value(r.val, nb.values);
          next.push_back(std::move(nb));
        }
      }
      branches = std::move(next);
    }
    return branches;
  }

  std::optional<std::pair<Label, Config>> apply_com(const MixedConfig& mc,
                                                    const detail::Offer& o) const {
    const Process* snd = o.node;
    const Process* rcv = o.in_node;
    auto items = classify_payload(mc, snd);

    std::vector<std::string> qnames;
    for (const auto& it : items)
      if (it.quantum) qnames.push_back(it.qname);

    // evaluate classical payloads per component
    MixedConfig next = mc;
    std::vector<Component> comps;
    std::vector<std::vector<Value>> tuples;  // classical tuple per new component
    for (const auto& c : mc.components) {
      for (const auto& b : eval_payload(mc, c, items)) {
        comps.push_back({c.weight * b.rel_weight, b.sigma, c.values});
        tuples.push_back(b.values);
      }
    }

    // receiver binders: quantum ones are substituted by the sent names,
    // classical ones become fresh bound variables
    size_t n_classical = tuples.empty() ? 0 : tuples[0].size();
    std::vector<const Binder*> classical_binders, quantum_binders;
    for (const auto& b : rcv->binders) {
      if (is_quantum(b.type))
        quantum_binders.push_back(&b);
      else
        classical_binders.push_back(&b);
    }
    if (quantum_binders.size() != qnames.size() ||
        classical_binders.size() != n_classical)
      throw StuckExpression("payload arity does not match input binders on " +
                            snd->chan);

    detail::NameMap subst;
    for (size_t i = 0; i < qnames.size(); ++i)
      subst[quantum_binders[i]->name] = qnames[i];
    std::vector<std::string> new_vars;
    for (const auto* b : classical_binders) {
      std::string f = fresh_var(mc, new_vars, b->name);
      new_vars.push_back(f);
      if (f != b->name) subst[b->name] = f;
    }

    next.components = std::move(comps);
    for (size_t i = 0; i < next.components.size(); ++i)
      for (const auto& v : tuples[i]) next.components[i].values.push_back(v);
    for (const auto& f : new_vars) next.bound_vars.push_back(f);

    ProcessPtr rcv_cont =
        subst.empty() ? rcv->cont : detail::substitute_process(rcv->cont, subst);
    next.term = detail::replace_two(mc.term, o.path, 0, snd->cont, o.in_path, 0,
                                    rcv_cont);
    tidy(next);
    Label l;
    l.kind = Label::Kind::Tau;
    return std::make_pair(l, Config(std::move(next)));
  }

  std::string fresh_var(const MixedConfig& mc,
                        const std::vector<std::string>& pending,
                        const std::string& base) const {
    std::set<std::string> taken;
    detail::collect_names(mc.term, taken);
    for (const auto& s : mc.components.front().sigma.layout.slots)
      taken.insert(s.name);
    for (const auto& v : mc.bound_vars) taken.insert(v);
    for (const auto& v : pending) taken.insert(v);
    return detail::avoid(base, taken);
  }

  std::optional<std::pair<Label, Config>> apply_out(const MixedConfig& mc,
                                                    const detail::Offer& o) const {
    const Process* snd = o.node;
    auto items = classify_payload(mc, snd);
    std::vector<std::string> qnames;
    for (const auto& it : items)
      if (it.quantum) qnames.push_back(it.qname);

    MixedConfig base = mc;
    base.term = detail::replace_at(mc.term, o.path, 0, snd->cont);
    auto& w = base.omega;
    for (const auto& q : qnames)
      w.erase(std::remove(w.begin(), w.end(), q), w.end());

    std::vector<Component> comps;
    std::vector<std::vector<Value>> tuples;
    for (const auto& c : mc.components) {
      for (const auto& b : eval_payload(mc, c, items)) {
        comps.push_back({c.weight * b.rel_weight, b.sigma, c.values});
        tuples.push_back(b.values);
      }
    }
    double total = 0;
    for (const auto& c : comps) total += c.weight;
    if (total < kPruneTol) throw PostSelectionEmpty();

    // group components by their concrete value tuple
    std::map<std::vector<Value>, std::vector<size_t>> groups;
    for (size_t i = 0; i < comps.size(); ++i) groups[tuples[i]].push_back(i);

    ProbConfig pc;
    pc.chan = snd->chan;
    Label l;
    l.kind = Label::Kind::Out;
    l.chan = snd->chan;
    l.qnames = qnames;
    for (const auto& [tuple, idxs] : groups) {
      double p = 0;
      for (size_t i : idxs) p += comps[i].weight;
      MixedConfig branch = base;
      branch.components.clear();
      for (size_t i : idxs) branch.components.push_back(comps[i]);
      for (auto& c : branch.components) c.weight /= p;
      tidy(branch);
      l.value_set.push_back(tuple);
      pc.branches.push_back(ProbBranch{p / total, tuple, std::move(branch)});
    }
    return std::make_pair(l, Config(std::move(pc)));
  }

  std::optional<std::pair<Label, Config>> apply_env_in(
      const MixedConfig& mc, const detail::Offer& o) const {
    const Process* rcv = o.node;
    auto it = env_.inputs.find(rcv->chan);
    if (it == env_.inputs.end()) return std::nullopt;
    int pos = 0;
    if (auto pit = mc.env_pos.find(rcv->chan); pit != mc.env_pos.end())
      pos = pit->second;
    if (pos >= static_cast<int>(it->second.size())) return std::nullopt;
    const Injection& inj = it->second[pos];

    MixedConfig next = mc;
    next.env_pos[rcv->chan] = pos + 1;

    if (!inj.fragment_tag.empty() && !mc.injected_tags.count(inj.fragment_tag)) {
      next.injected_tags.insert(inj.fragment_tag);
      for (auto& c : next.components) c.sigma = tensor(c.sigma, inj.fragment);
    }

    std::vector<const Binder*> classical_binders, quantum_binders;
    for (const auto& b : rcv->binders) {
      if (is_quantum(b.type))
        quantum_binders.push_back(&b);
      else
        classical_binders.push_back(&b);
    }
    if (quantum_binders.size() != inj.qnames.size() ||
        classical_binders.size() != inj.values.size())
      throw Error("environment injection arity mismatch on " + rcv->chan);

    detail::NameMap subst;
    for (size_t i = 0; i < inj.qnames.size(); ++i)
      subst[quantum_binders[i]->name] = inj.qnames[i];
    std::vector<std::string> new_vars;
    for (size_t i = 0; i < classical_binders.size(); ++i) {
      std::string f = fresh_var(next, new_vars, classical_binders[i]->name);
      new_vars.push_back(f);
      if (f != classical_binders[i]->name)
        subst[classical_binders[i]->name] = f;
      for (auto& c : next.components) c.values.push_back(inj.values[i]);
    }
    for (const auto& f : new_vars) next.bound_vars.push_back(f);

    ProcessPtr cont =
        subst.empty() ? rcv->cont : detail::substitute_process(rcv->cont, subst);
    next.term = detail::replace_at(mc.term, o.path, 0, cont);
    for (const auto& q : inj.qnames) next.omega.push_back(q);
    tidy(next);

    Label l;
    l.kind = Label::Kind::In;
    l.chan = rcv->chan;
    l.values = inj.values;
    l.qnames = inj.qnames;
    return std::make_pair(l, Config(std::move(next)));
  }

  static JointState tensor(const JointState& a, const JointState& b) {
    JointState out;
    out.layout = a.layout;
    for (const auto& s : b.layout.slots) {
      if (out.layout.has(s.name)) throw DuplicateName(s.name);
      out.layout.slots.push_back(s);
    }
    out.layout.photon_budget = a.layout.photon_budget + b.layout.photon_budget;
    for (const auto& [av, aa] : a.amplitudes)
      for (const auto& [bv, ba] : b.amplitudes) {
        BasisVector nb = av;
        nb.values.insert(nb.values.end(), bv.values.begin(), bv.values.end());
        out.amplitudes[nb] = aa * ba;
      }
    return out;
  }
};

// ---------------------------------------------------------------------------
// Canonical node keys and LTS exploration

inline std::string canonical_key(const MixedConfig& mc) {
  std::ostringstream os;
  os << print_process(mc.term) << "#";
  const SystemLayout& lay = mc.components.empty()
                                ? SystemLayout{}
                                : mc.components.front().sigma.layout;
  for (const auto& s : lay.slots)
    os << s.name << (s.kind == SlotKind::Qubit ? "q" : "m") << ",";
  os << "#w:";
  for (const auto& n : mc.omega) os << n << ",";
  os << "#v:";
  for (const auto& v : mc.bound_vars) os << v << ",";
  os << "#e:";
  for (const auto& [c, p] : mc.env_pos) os << c << "=" << p << ",";
  os << "#c:";
  std::vector<std::string> comps;
  for (const auto& c : mc.components) {
    std::ostringstream cs;
    cs << std::llround(c.weight * 1e9) << "*";
    JointState s = c.sigma.phase_canonical();
    for (const auto& [bv, a] : s.amplitudes) {
      for (int v : bv.values) cs << v << ".";
      cs << ":" << std::llround(a.real() * 1e9) << ","
         << std::llround(a.imag() * 1e9) << ";";
    }
    cs << "[";
    for (const auto& v : c.values) cs << v.str() << ",";
    cs << "]";
    comps.push_back(cs.str());
  }
  std::sort(comps.begin(), comps.end());
  for (const auto& c : comps) os << c << "&";
  return os.str();
}

inline std::string canonical_key(const Config& config) {
  if (std::holds_alternative<MixedConfig>(config))
    return canonical_key(std::get<MixedConfig>(config));
  const auto& pc = std::get<ProbConfig>(config);
  std::vector<std::string> parts;
  for (const auto& br : pc.branches) {
    std::ostringstream os;
    os << std::llround(br.prob * 1e9) << "@";
    for (const auto& v : br.values) os << v.str() << ",";
    os << "@" << canonical_key(br.config);
    parts.push_back(os.str());
  }
  std::sort(parts.begin(), parts.end());
  std::string s = "PROB:" + pc.chan + ":";
  for (const auto& p : parts) s += p + "||";
  return s;
}

// True when the residual term still contains an executable prefix.
inline bool has_residual_work(const ProcessPtr& p) {
  switch (p->kind) {
    case Process::Kind::Nil: return false;
    case Process::Kind::Par:
    case Process::Kind::Sum:
      return has_residual_work(p->left) || has_residual_work(p->right);
    case Process::Kind::New:
      return has_residual_work(p->cont);
    default:
      return true;
  }
}

struct ExploreLimits {
  int max_nodes = 100000;
  int max_photons = 4;
};

struct LTSGraph {
  struct Node {
    Config config;
    std::string key;
    bool probabilistic = false;
    bool terminal_n = false;  // no tau available
    bool deadlock = false;    // no edges but residual work
  };
  struct Edge {
    int from;
    Label label;
    int to;
  };
  std::vector<Node> nodes;
  std::vector<Edge> edges;
  std::map<std::string, int> index;
  std::vector<std::vector<int>> out_edges;  // node -> edge ids
  int initial = 0;
};

inline LTSGraph explore(const ProcessPtr& term, const Semantics& sem,
                        ExploreLimits limits = {}) {
  LTSGraph g;
  auto add_node = [&](Config cfg) {
    std::string key = canonical_key(cfg);
    auto it = g.index.find(key);
    if (it != g.index.end()) return std::make_pair(it->second, false);
    if (static_cast<int>(g.nodes.size()) >= limits.max_nodes)
      throw LimitExceeded("node limit " + std::to_string(limits.max_nodes) +
                          " reached");
    if (std::holds_alternative<MixedConfig>(cfg)) {
      const auto& mc = std::get<MixedConfig>(cfg);
      if (!mc.components.empty() &&
          mc.components.front().sigma.layout.photon_budget > limits.max_photons)
        throw LimitExceeded("photon budget exceeds " +
                            std::to_string(limits.max_photons));
    }
    int id = static_cast<int>(g.nodes.size());
    LTSGraph::Node n;
    n.key = key;
    n.probabilistic = std::holds_alternative<ProbConfig>(cfg);
    n.config = std::move(cfg);
    g.nodes.push_back(std::move(n));
    g.out_edges.emplace_back();
    g.index[key] = id;
    return std::make_pair(id, true);
  };

  auto [root, fresh0] = add_node(Config(Semantics::initial(term)));
  g.initial = root;
  std::vector<int> frontier = {root};
  while (!frontier.empty()) {
    int id = frontier.front();
    frontier.erase(frontier.begin());
    auto steps = sem.step(g.nodes[id].config);
    bool any_tau = false;
    for (auto& [label, next] : steps) {
      if (label.kind == Label::Kind::Tau) any_tau = true;
      auto [to, added] = add_node(std::move(next));
      int eid = static_cast<int>(g.edges.size());
      g.edges.push_back({id, label, to});
      g.out_edges[id].push_back(eid);
      if (added) frontier.push_back(to);
    }
    auto& node = g.nodes[id];
    node.terminal_n = !node.probabilistic && !any_tau;
    if (steps.empty() && std::holds_alternative<MixedConfig>(node.config))
      node.deadlock = has_residual_work(std::get<MixedConfig>(node.config).term);
  }
  return g;
}

// ---------------------------------------------------------------------------
// Deterministic scheduler: drives the process to termination along one
// interleaving order, branching only at probabilistic outputs.

struct TerminalOutcome {
  double prob = 1.0;
  std::vector<std::pair<std::string, std::vector<Value>>> outputs;
  MixedConfig final_config;
};

struct RunHooks {
  // called after every applied step with the offer's source node
  std::function<void(const detail::Offer&, const MixedConfig&)> on_step;
  // pick which enabled offer to fire; default picks the first
  std::function<size_t(const std::vector<detail::Offer>&)> choose;
};

inline void run_deterministic_rec(const MixedConfig& mc, const Semantics& sem,
                                  const RunHooks& hooks, double prob,
                                  std::vector<std::pair<std::string, std::vector<Value>>> outputs,
                                  std::vector<TerminalOutcome>& out, int fuel) {
  if (fuel <= 0) throw LimitExceeded("step limit reached in deterministic run");
  auto offers = sem.offers(mc);
  // order: internal moves, then environment inputs, then outputs
  std::vector<detail::Offer> enabled;
  for (auto kind : {detail::Offer::Kind::Tau, detail::Offer::Kind::Com,
                    detail::Offer::Kind::In, detail::Offer::Kind::Out}) {
    for (const auto& o : offers) {
      if (o.kind != kind) continue;
      if (o.kind == detail::Offer::Kind::In) {
        auto r = sem.apply(mc, o);
        if (!r) continue;  // no scheduled injection
      }
      enabled.push_back(o);
    }
    if (!enabled.empty() && kind != detail::Offer::Kind::Out) break;
    if (!enabled.empty()) break;
  }
  if (enabled.empty()) {
    out.push_back(TerminalOutcome{prob, std::move(outputs), mc});
    return;
  }
  size_t pick = hooks.choose ? hooks.choose(enabled) : 0;
  const auto& offer = enabled[pick % enabled.size()];
  auto r = sem.apply(mc, offer);
  if (!r) throw Error("chosen offer was not enabled");
  auto& [label, next] = *r;
  if (std::holds_alternative<MixedConfig>(next)) {
    const auto& nm = std::get<MixedConfig>(next);
    if (hooks.on_step) hooks.on_step(offer, nm);
    run_deterministic_rec(nm, sem, hooks, prob, std::move(outputs), out, fuel - 1);
    return;
  }
  const auto& pc = std::get<ProbConfig>(next);
  for (const auto& br : pc.branches) {
    auto outs = outputs;
    outs.emplace_back(pc.chan, br.values);
    if (hooks.on_step) hooks.on_step(offer, br.config);
    run_deterministic_rec(br.config, sem, hooks, prob * br.prob, std::move(outs),
                          out, fuel - 1);
  }
}

inline std::vector<TerminalOutcome> run_deterministic(const ProcessPtr& term,
                                                      const Semantics& sem,
                                                      RunHooks hooks = {},
                                                      int fuel = 10000) {
  std::vector<TerminalOutcome> out;
  run_deterministic_rec(Semantics::initial(term), sem, hooks, 1.0, {}, out, fuel);
  return out;
}

// Aggregate terminal outcomes into a distribution over output traces.
inline std::map<std::string, double> terminal_distribution(
    const std::vector<TerminalOutcome>& outcomes) {
  std::map<std::string, double> dist;
  for (const auto& o : outcomes) {
    std::string key;
    for (const auto& [chan, vals] : o.outputs) {
      key += chan + "=";
      for (size_t i = 0; i < vals.size(); ++i) key += (i ? "," : "") + vals[i].str();
      key += ";";
    }
    dist[key] += o.prob;
  }
  return dist;
}

}  // namespace cqpv
