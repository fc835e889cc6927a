#pragma once

// Call expansion: parameterised definitions are instantiated by
// capture-avoiding name substitution. No recursion is supported; a call
// cycle is reported as an error.

#include <set>

#include "cqpv/ast.hpp"

namespace cqpv {

namespace detail {

using NameMap = std::map<std::string, std::string>;

inline std::string mapped(const NameMap& m, const std::string& n) {
  auto it = m.find(n);
  return it == m.end() ? n : it->second;
}

inline ExprPtr substitute_expr(const ExprPtr& e, const NameMap& m) {
  auto out = std::make_shared<Expr>(*e);
  if (e->kind == Expr::Kind::Var || e->kind == Expr::Kind::PsApply)
    out->name = mapped(m, e->name);
  for (auto& t : out->targets) t = mapped(m, t);
  for (auto& a : out->args) a = substitute_expr(a, m);
  return out;
}

// Fresh-name helper for alpha-renaming a binder that would capture a
// substitution result.
inline std::string avoid(const std::string& base, const std::set<std::string>& taken) {
  if (!taken.count(base)) return base;
  for (int k = 1;; ++k) {
    std::string cand = base + "_" + std::to_string(k);
    if (!taken.count(cand)) return cand;
  }
}

inline std::set<std::string> range_of(const NameMap& m) {
  std::set<std::string> r;
  for (const auto& [k, v] : m) r.insert(v);
  return r;
}

inline ProcessPtr substitute_process(const ProcessPtr& p, const NameMap& m) {
  auto bind_one = [&](const std::string& binder, NameMap scoped) {
    // Drop a shadowed substitution; rename the binder if it collides with
    // any substitution result.
    scoped.erase(binder);
    std::string fresh = avoid(binder, range_of(scoped));
    if (fresh != binder) scoped[binder] = fresh;
    return std::pair<std::string, NameMap>(fresh, std::move(scoped));
  };
  switch (p->kind) {
    case Process::Kind::Nil:
      return p;
    case Process::Kind::Par:
      return Process::par(substitute_process(p->left, m),
                          substitute_process(p->right, m));
    case Process::Kind::Sum:
      return Process::sum(substitute_process(p->left, m),
                          substitute_process(p->right, m));
    case Process::Kind::Input: {
      NameMap scoped = m;
      std::vector<Binder> bs;
      for (const auto& b : p->binders) {
        auto [fresh, next] = bind_one(b.name, scoped);
        scoped = std::move(next);
        bs.push_back(Binder{fresh, b.type});
      }
      return Process::input(mapped(m, p->chan), std::move(bs),
                            substitute_process(p->cont, scoped));
    }
    case Process::Kind::Output: {
      std::vector<ExprPtr> payload;
      for (const auto& e : p->payload) payload.push_back(substitute_expr(e, m));
      return Process::output(mapped(m, p->chan), std::move(payload),
                             substitute_process(p->cont, m));
    }
    case Process::Kind::Action: {
      if (p->action->kind == Expr::Kind::PsApply) {
        NameMap scoped = m;
        auto [fx, next1] = bind_one(p->action->targets[0], scoped);
        scoped = std::move(next1);
        auto [fy, next2] = bind_one(p->action->targets[1], scoped);
        scoped = std::move(next2);
        return Process::action_step(
            Expr::ps_apply(fx, fy, mapped(m, p->action->name)),
            substitute_process(p->cont, scoped));
      }
      return Process::action_step(substitute_expr(p->action, m),
                             substitute_process(p->cont, m));
    }
    case Process::Kind::QbitDecl: {
      auto [fresh, scoped] = bind_one(p->name, m);
      return Process::qbit_decl(fresh, substitute_process(p->cont, scoped));
    }
    case Process::Kind::NsDecl: {
      auto [fresh, scoped] = bind_one(p->name, m);
      return Process::ns_decl(fresh, substitute_process(p->cont, scoped));
    }
    case Process::Kind::New: {
      auto [fresh, scoped] = bind_one(p->name, m);
      return Process::make_new(fresh, p->new_type,
                               substitute_process(p->cont, scoped));
    }
    case Process::Kind::Call: {
      std::vector<std::string> args;
      for (const auto& a : p->args) args.push_back(mapped(m, a));
      return Process::call(p->name, std::move(args));
    }
  }
  throw Error("unreachable process kind");
}

inline ProcessPtr inline_calls(const ProcessPtr& p, const Program& prog,
                               std::set<std::string>& stack) {
  switch (p->kind) {
    case Process::Kind::Call: {
      auto it = prog.definitions.find(p->name);
      if (it == prog.definitions.end())
        throw UnknownName("process definition " + p->name);
      const Definition& def = it->second;
      if (def.params.size() != p->args.size())
        throw Error("call to " + p->name + " with " +
                    std::to_string(p->args.size()) + " arguments, expected " +
                    std::to_string(def.params.size()));
      if (stack.count(p->name))
        throw Error("recursive definition " + p->name + " is not supported");
      NameMap m;
      for (size_t i = 0; i < def.params.size(); ++i)
        m[def.params[i].name] = p->args[i];
      stack.insert(p->name);
      ProcessPtr body = inline_calls(substitute_process(def.body, m), prog, stack);
      stack.erase(p->name);
      return body;
    }
    case Process::Kind::Par:
      return Process::par(inline_calls(p->left, prog, stack),
                          inline_calls(p->right, prog, stack));
    case Process::Kind::Sum:
      return Process::sum(inline_calls(p->left, prog, stack),
                          inline_calls(p->right, prog, stack));
    default: {
      if (!p->cont) return p;
      auto out = std::make_shared<Process>(*p);
      out->cont = inline_calls(p->cont, prog, stack);
      return out;
    }
  }
}

}  // namespace detail

// Entry process with every Call expanded.
inline ProcessPtr inline_program(const Program& prog) {
  if (!prog.entry) throw Error("program has no entry process");
  std::set<std::string> stack;
  return detail::inline_calls(prog.entry, prog, stack);
}

}  // namespace cqpv
