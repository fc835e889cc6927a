#pragma once

// AST for the process language: types, expressions, processes, programs.
// All nodes are immutable and shared.

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "cqpv/errors.hpp"

namespace cqpv {

struct TypeExpr;
using TypePtr = std::shared_ptr<const TypeExpr>;

struct TypeExpr {
  enum class Kind { Int, Qbit, NS, Bit, Channel, Op };
  Kind kind;
  std::vector<TypePtr> payload;  // Channel element types
  int arity = 0;                 // Op operand count

  static TypePtr simple(Kind k) {
    auto t = std::make_shared<TypeExpr>();
    t->kind = k;
    return t;
  }
  static TypePtr channel(std::vector<TypePtr> payload) {
    if (payload.empty()) throw Error("channel type needs a payload list");
    auto t = std::make_shared<TypeExpr>();
    t->kind = Kind::Channel;
    t->payload = std::move(payload);
    return t;
  }
  static TypePtr op(int arity) {
    auto t = std::make_shared<TypeExpr>();
    t->kind = Kind::Op;
    t->arity = arity;
    return t;
  }
};

inline bool is_quantum(const TypePtr& t) {
  return t->kind == TypeExpr::Kind::Qbit || t->kind == TypeExpr::Kind::NS;
}

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct Expr {
  enum class Kind {
    IntLit,        // value
    BoolLit,       // bvalue
    Var,           // name
    UnitaryName,   // name in {H, CZ, U19}; B[p/q] uses bs_num/bs_den
    Plus,          // args[0] + args[1]
    Eq,            // args[0] = args[1]
    And,           // args[0] and args[1]
    Pair,          // (args[0], args[1])
    IfThenElse,    // args[0..2]
    Measure,       // args: measured names as Vars
    PsMeasure,     // args: measured names as Vars
    ApplyUnitary,  // targets *= args[0] (a UnitaryName)
    PsApply,       // targets[0]:NS, targets[1]:NS *= PS(name)
  };
  Kind kind;
  long value = 0;
  bool bvalue = false;
  std::string name;
  std::vector<ExprPtr> args;
  std::vector<std::string> targets;
  long bs_num = 0, bs_den = 1;  // beam splitter reflectivity, exact rational

  static ExprPtr lit(long v) {
    auto e = std::make_shared<Expr>();
    e->kind = Kind::IntLit;
    e->value = v;
    return e;
  }
  static ExprPtr boolean(bool b) {
    auto e = std::make_shared<Expr>();
    e->kind = Kind::BoolLit;
    e->bvalue = b;
    return e;
  }
  static ExprPtr var(std::string n) {
    auto e = std::make_shared<Expr>();
    e->kind = Kind::Var;
    e->name = std::move(n);
    return e;
  }
  static ExprPtr unitary(std::string n) {
    auto e = std::make_shared<Expr>();
    e->kind = Kind::UnitaryName;
    e->name = std::move(n);
    return e;
  }
  static ExprPtr beam_splitter(long num, long den) {
    auto e = std::make_shared<Expr>();
    e->kind = Kind::UnitaryName;
    e->name = "B";
    e->bs_num = num;
    e->bs_den = den;
    return e;
  }
  static ExprPtr binary(Kind k, ExprPtr a, ExprPtr b) {
    auto e = std::make_shared<Expr>();
    e->kind = k;
    e->args = {std::move(a), std::move(b)};
    return e;
  }
  static ExprPtr if_then_else(ExprPtr c, ExprPtr t, ExprPtr f) {
    auto e = std::make_shared<Expr>();
    e->kind = Kind::IfThenElse;
    e->args = {std::move(c), std::move(t), std::move(f)};
    return e;
  }
  static ExprPtr measure(std::vector<ExprPtr> names, bool post_selective) {
    if (names.empty()) throw Error("measure needs at least one operand");
    auto e = std::make_shared<Expr>();
    e->kind = post_selective ? Kind::PsMeasure : Kind::Measure;
    e->args = std::move(names);
    return e;
  }
  static ExprPtr apply_unitary(std::vector<std::string> targets, ExprPtr u) {
    auto e = std::make_shared<Expr>();
    e->kind = Kind::ApplyUnitary;
    e->targets = std::move(targets);
    e->args = {std::move(u)};
    return e;
  }
  static ExprPtr ps_apply(std::string x, std::string y, std::string qubit) {
    auto e = std::make_shared<Expr>();
    e->kind = Kind::PsApply;
    e->targets = {std::move(x), std::move(y)};
    e->name = std::move(qubit);
    return e;
  }
};

struct Binder {
  std::string name;
  TypePtr type;
};

struct Process;
using ProcessPtr = std::shared_ptr<const Process>;

struct Process {
  enum class Kind {
    Nil,
    Par,       // left | right
    Sum,       // left + right
    Input,    // chan?[binders].cont
    Output,   // chan![payload].cont
    Action,   // {action}.cont
    QbitDecl,  // (qbit name)cont
    NsDecl,    // (ns name)cont
    New,       // (new name : type)cont
    Call,      // def_name(args)
  };
  Kind kind = Kind::Nil;
  ProcessPtr left, right;  // Par/Sum
  std::string chan;        // Input/Output channel name
  std::vector<Binder> binders;   // Input
  std::vector<ExprPtr> payload;  // Output
  ExprPtr action;                // Action
  std::string name;              // QbitDecl/NsDecl/New/Call
  TypePtr new_type;              // New
  ProcessPtr cont;
  std::vector<std::string> args;  // Call arguments (names)

  static ProcessPtr nil() {
    auto p = std::make_shared<Process>();
    p->kind = Kind::Nil;
    return p;
  }
  static ProcessPtr par(ProcessPtr l, ProcessPtr r) {
    auto p = std::make_shared<Process>();
    p->kind = Kind::Par;
    p->left = std::move(l);
    p->right = std::move(r);
    return p;
  }
  static ProcessPtr sum(ProcessPtr l, ProcessPtr r) {
    auto p = std::make_shared<Process>();
    p->kind = Kind::Sum;
    p->left = std::move(l);
    p->right = std::move(r);
    return p;
  }
  static ProcessPtr input(std::string chan, std::vector<Binder> bs, ProcessPtr k) {
    for (size_t i = 0; i < bs.size(); ++i)
      for (size_t j = i + 1; j < bs.size(); ++j)
        if (bs[i].name == bs[j].name) throw DuplicateName(bs[i].name);
    auto p = std::make_shared<Process>();
    p->kind = Kind::Input;
    p->chan = std::move(chan);
    p->binders = std::move(bs);
    p->cont = std::move(k);
    return p;
  }
  static ProcessPtr output(std::string chan, std::vector<ExprPtr> es, ProcessPtr k) {
    auto p = std::make_shared<Process>();
    p->kind = Kind::Output;
    p->chan = std::move(chan);
    p->payload = std::move(es);
    p->cont = std::move(k);
    return p;
  }
  static ProcessPtr action_step(ExprPtr e, ProcessPtr k) {
    auto p = std::make_shared<Process>();
    p->kind = Kind::Action;
    p->action = std::move(e);
    p->cont = std::move(k);
    return p;
  }
  static ProcessPtr qbit_decl(std::string n, ProcessPtr k) {
    auto p = std::make_shared<Process>();
    p->kind = Kind::QbitDecl;
    p->name = std::move(n);
    p->cont = std::move(k);
    return p;
  }
  static ProcessPtr ns_decl(std::string n, ProcessPtr k) {
    auto p = std::make_shared<Process>();
    p->kind = Kind::NsDecl;
    p->name = std::move(n);
    p->cont = std::move(k);
    return p;
  }
  static ProcessPtr make_new(std::string n, TypePtr t, ProcessPtr k) {
    if (t->kind != TypeExpr::Kind::Channel)
      throw Error("new binds a channel, got a non-channel type");
    auto p = std::make_shared<Process>();
    p->kind = Kind::New;
    p->name = std::move(n);
    p->new_type = std::move(t);
    p->cont = std::move(k);
    return p;
  }
  static ProcessPtr call(std::string def, std::vector<std::string> args) {
    auto p = std::make_shared<Process>();
    p->kind = Kind::Call;
    p->name = std::move(def);
    p->args = std::move(args);
    return p;
  }
};

struct Definition {
  std::vector<Binder> params;
  ProcessPtr body;
};

struct Program {
  std::map<std::string, Definition> definitions;
  ProcessPtr entry;  // body of Main
};

}  // namespace cqpv
