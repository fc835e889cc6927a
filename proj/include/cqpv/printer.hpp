#pragma once

// Pretty-printer for the process language. parse(print(p)) == p structurally;
// structural equality itself is defined by comparing printed forms.

#include <sstream>

#include "cqpv/ast.hpp"

namespace cqpv {

inline std::string print_type(const TypePtr& t) {
  switch (t->kind) {
    case TypeExpr::Kind::Int: return "Int";
    case TypeExpr::Kind::Qbit: return "Qbit";
    case TypeExpr::Kind::NS: return "NS";
    case TypeExpr::Kind::Bit: return "Bit";
    case TypeExpr::Kind::Op: return "Op(" + std::to_string(t->arity) + ")";
    case TypeExpr::Kind::Channel: {
      std::string s = "^[";
      for (size_t i = 0; i < t->payload.size(); ++i) {
        if (i) s += ", ";
        s += print_type(t->payload[i]);
      }
      return s + "]";
    }
  }
  throw Error("unreachable type kind");
}

// Expression precedence: 0 if-then-else, 1 and, 2 =, 3 +, 4 atoms.
inline std::string print_expr(const ExprPtr& e, int min_prec = 0) {
  auto wrap = [&](int prec, const std::string& s) {
    return prec < min_prec ? "(" + s + ")" : s;
  };
  switch (e->kind) {
    case Expr::Kind::IntLit: return std::to_string(e->value);
    case Expr::Kind::BoolLit: return e->bvalue ? "true" : "false";
    case Expr::Kind::Var: return e->name;
    case Expr::Kind::UnitaryName:
      if (e->name == "B")
        return "B[" + std::to_string(e->bs_num) + "/" + std::to_string(e->bs_den) + "]";
      return e->name;
    case Expr::Kind::Plus:
      return wrap(3, print_expr(e->args[0], 3) + " + " + print_expr(e->args[1], 4));
    case Expr::Kind::Eq:
      return wrap(2, print_expr(e->args[0], 3) + " = " + print_expr(e->args[1], 3));
    case Expr::Kind::And:
      return wrap(1, print_expr(e->args[0], 2) + " and " + print_expr(e->args[1], 2));
    case Expr::Kind::Pair: {
      // the first element is kept above the comma, so a measure/if inside it
      // cannot swallow the pair separator on reparse
      return "(" + print_expr(e->args[0], 1) + ", " + print_expr(e->args[1]) + ")";
    }
    case Expr::Kind::IfThenElse:
      return wrap(0, "if " + print_expr(e->args[0], 1) + " then " +
                         print_expr(e->args[1], 1) + " else " +
                         print_expr(e->args[2], 1));
    case Expr::Kind::Measure:
    case Expr::Kind::PsMeasure: {
      std::string s = e->kind == Expr::Kind::Measure ? "measure " : "psmeasure ";
      for (size_t i = 0; i < e->args.size(); ++i) {
        if (i) s += ", ";
        s += print_expr(e->args[i], 4);
      }
      return wrap(0, s);
    }
    case Expr::Kind::ApplyUnitary: {
      std::string s;
      if (e->targets.size() == 4 && e->args[0]->kind == Expr::Kind::UnitaryName &&
          e->args[0]->name == "CZ") {
        s = "(" + e->targets[0] + ", " + e->targets[1] + "), (" + e->targets[2] +
            ", " + e->targets[3] + ")";
      } else {
        for (size_t i = 0; i < e->targets.size(); ++i) {
          if (i) s += ", ";
          s += e->targets[i];
        }
      }
      return s + " *= " + print_expr(e->args[0], 4);
    }
    case Expr::Kind::PsApply:
      return e->targets[0] + ":NS, " + e->targets[1] + ":NS *= PS(" + e->name + ")";
  }
  throw Error("unreachable expression kind");
}

// Process precedence: 0 choice, 1 parallel, 2 prefixes.
inline std::string print_process(const ProcessPtr& p, int min_prec = 0) {
  auto wrap = [&](int prec, const std::string& s) {
    return prec < min_prec ? "(" + s + ")" : s;
  };
  switch (p->kind) {
    case Process::Kind::Nil: return "0";
    case Process::Kind::Sum:
      return wrap(0, print_process(p->left, 2) + " + " + print_process(p->right, 0));
    case Process::Kind::Par:
      return wrap(1, print_process(p->left, 2) + " | " + print_process(p->right, 1));
    case Process::Kind::Input: {
      std::string s = p->chan + "?[";
      for (size_t i = 0; i < p->binders.size(); ++i) {
        if (i) s += ", ";
        s += p->binders[i].name + ":" + print_type(p->binders[i].type);
      }
      return s + "]." + print_process(p->cont, 2);
    }
    case Process::Kind::Output: {
      // in a multi-item payload, a measure could swallow the separating
      // comma, so comma-greedy expressions are parenthesized
      int item_prec = p->payload.size() > 1 ? 1 : 0;
      std::string s = p->chan + "![";
      for (size_t i = 0; i < p->payload.size(); ++i) {
        if (i) s += ", ";
        s += print_expr(p->payload[i], item_prec);
      }
      return s + "]." + print_process(p->cont, 2);
    }
    case Process::Kind::Action:
      return "{" + print_expr(p->action) + "}." + print_process(p->cont, 2);
    case Process::Kind::QbitDecl:
      return "(qbit " + p->name + ")" + print_process(p->cont, 2);
    case Process::Kind::NsDecl:
      return "(ns " + p->name + ")" + print_process(p->cont, 2);
    case Process::Kind::New:
      return "(new " + p->name + ":" + print_type(p->new_type) + ")" +
             print_process(p->cont, 2);
    case Process::Kind::Call: {
      std::string s = p->name + "(";
      for (size_t i = 0; i < p->args.size(); ++i) {
        if (i) s += ", ";
        s += p->args[i];
      }
      return s + ")";
    }
  }
  throw Error("unreachable process kind");
}

inline std::string print_program(const Program& prog) {
  std::ostringstream out;
  for (const auto& [name, def] : prog.definitions) {
    out << name << "(";
    for (size_t i = 0; i < def.params.size(); ++i) {
      if (i) out << ", ";
      out << def.params[i].name << ":" << print_type(def.params[i].type);
    }
    out << ") = " << print_process(def.body) << "\n";
  }
  out << "Main = " << print_process(prog.entry) << "\n";
  return out.str();
}

inline bool equal_process(const ProcessPtr& a, const ProcessPtr& b) {
  return print_process(a) == print_process(b);
}

inline bool equal_program(const Program& a, const Program& b) {
  return print_program(a) == print_program(b);
}

}  // namespace cqpv
