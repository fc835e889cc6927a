#pragma once

// Linear ownership check for quantum names: each qubit or number state has a
// unique owner, is never shared across parallel components, and is not used
// after being sent away or converted.

#include <set>

#include "cqpv/inline_defs.hpp"
#include "cqpv/printer.hpp"

namespace cqpv {

struct Diagnostic {
  std::string message;
};

namespace detail {

struct OwnershipScan {
  std::vector<Diagnostic>* diags;
  std::set<std::string> seen;  // dedup across entry and definitions

  void report(const std::string& msg) {
    if (seen.insert(msg).second) diags->push_back(Diagnostic{msg});
  }

  using Env = std::set<std::string>;
  using Consumed = std::map<std::string, std::string>;  // name -> how

  void use(const std::string& n, const Env& env, const Consumed& consumed,
           std::set<std::string>& uses) {
    if (env.count(n)) {
      uses.insert(n);
    } else if (auto it = consumed.find(n); it != consumed.end()) {
      report("use after " + it->second + ": " + n);
    } else {
      report("unbound quantum variable: " + n);
    }
  }

  // Collect quantum-name uses inside an expression (measurement operands,
  // unitary targets, PS sources).
  void expr_uses(const ExprPtr& e, const Env& env, const Consumed& consumed,
                 std::set<std::string>& uses) {
    switch (e->kind) {
      case Expr::Kind::Measure:
      case Expr::Kind::PsMeasure:
        for (const auto& a : e->args) {
          if (a->kind == Expr::Kind::Var)
            use(a->name, env, consumed, uses);
          else
            report("measurement operand is not a name");
        }
        return;
      case Expr::Kind::ApplyUnitary:
        for (const auto& t : e->targets) use(t, env, consumed, uses);
        return;
      case Expr::Kind::PsApply:
        use(e->name, env, consumed, uses);
        return;
      default:
        for (const auto& a : e->args) expr_uses(a, env, consumed, uses);
        return;
    }
  }

  std::set<std::string> scan(const ProcessPtr& p, Env env, Consumed consumed) {
    switch (p->kind) {
      case Process::Kind::Nil:
        return {};
      case Process::Kind::Par: {
        auto l = scan(p->left, env, consumed);
        auto r = scan(p->right, env, consumed);
        for (const auto& n : l)
          if (r.count(n)) report("shared ownership: " + n);
        l.insert(r.begin(), r.end());
        return l;
      }
      case Process::Kind::Sum: {
        auto l = scan(p->left, env, consumed);
        auto r = scan(p->right, env, consumed);
        l.insert(r.begin(), r.end());
        return l;
      }
      case Process::Kind::Input: {
        Env inner = env;
        for (const auto& b : p->binders)
          if (is_quantum(b.type)) inner.insert(b.name);
        auto uses = scan(p->cont, inner, consumed);
        for (const auto& b : p->binders) uses.erase(b.name);
        return uses;
      }
      case Process::Kind::Output: {
        std::set<std::string> uses;
        Consumed after = consumed;
        Env remaining = env;
        for (const auto& e : p->payload) {
          if (e->kind == Expr::Kind::Var &&
              (env.count(e->name) || consumed.count(e->name))) {
            use(e->name, env, consumed, uses);
            remaining.erase(e->name);
            after[e->name] = "send";
          } else {
            expr_uses(e, env, consumed, uses);
          }
        }
        auto rest = scan(p->cont, remaining, after);
        uses.insert(rest.begin(), rest.end());
        return uses;
      }
      case Process::Kind::Action: {
        std::set<std::string> uses;
        if (p->action->kind == Expr::Kind::PsApply) {
          use(p->action->name, env, consumed, uses);
          Env inner = env;
          inner.erase(p->action->name);
          Consumed after = consumed;
          after[p->action->name] = "conversion";
          inner.insert(p->action->targets[0]);
          inner.insert(p->action->targets[1]);
          auto rest = scan(p->cont, inner, after);
          rest.erase(p->action->targets[0]);
          rest.erase(p->action->targets[1]);
          uses.insert(rest.begin(), rest.end());
          return uses;
        }
        expr_uses(p->action, env, consumed, uses);
        auto rest = scan(p->cont, env, consumed);
        uses.insert(rest.begin(), rest.end());
        return uses;
      }
      case Process::Kind::QbitDecl:
      case Process::Kind::NsDecl: {
        Env inner = env;
        inner.insert(p->name);
        auto uses = scan(p->cont, inner, consumed);
        uses.erase(p->name);
        return uses;
      }
      case Process::Kind::New:
        return scan(p->cont, env, consumed);
      case Process::Kind::Call:
        // calls are expanded before scanning; a leftover one is unresolved
        report("unresolved call: " + p->name);
        return {};
    }
    throw Error("unreachable process kind");
  }
};

}  // namespace detail

inline std::vector<Diagnostic> check_ownership(const Program& prog) {
  std::vector<Diagnostic> diags;
  detail::OwnershipScan scan{&diags, {}};
  try {
    scan.scan(inline_program(prog), {}, {});
  } catch (const Error& e) {
    diags.push_back(Diagnostic{e.what()});
  }
  for (const auto& [name, def] : prog.definitions) {
    detail::OwnershipScan::Env env;
    for (const auto& b : def.params)
      if (is_quantum(b.type)) env.insert(b.name);
    std::set<std::string> calls_ok;
    try {
      std::set<std::string> stack;
      scan.scan(detail::inline_calls(def.body, prog, stack), env, {});
    } catch (const Error& e) {
      diags.push_back(Diagnostic{e.what()});
    }
  }
  return diags;
}

}  // namespace cqpv
