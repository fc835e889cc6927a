#pragma once

// Recursive-descent parser for the process language. Line comments start
// with //. Errors carry line/column positions.

#include <cctype>
#include <optional>

#include "cqpv/ast.hpp"

namespace cqpv {

namespace detail {

struct Token {
  enum class Kind { Ident, Int, Sym, End };
  Kind kind;
  std::string text;
  long value = 0;
  int line = 1, column = 1;
};

class Lexer {
 public:
  explicit Lexer(const std::string& src) : src_(src) { tokenize(); }
  const std::vector<Token>& tokens() const { return toks_; }

 private:
  void tokenize() {
    size_t i = 0;
    int line = 1, col = 1;
    auto advance = [&](size_t n) {
      for (size_t k = 0; k < n; ++k) {
        if (src_[i + k] == '\n') {
          ++line;
          col = 1;
        } else {
          ++col;
        }
      }
      i += n;
    };
    while (i < src_.size()) {
      char c = src_[i];
      if (c == '/' && i + 1 < src_.size() && src_[i + 1] == '/') {
        while (i < src_.size() && src_[i] != '\n') advance(1);
        continue;
      }
      if (std::isspace(static_cast<unsigned char>(c))) {
        advance(1);
        continue;
      }
      Token t;
      t.line = line;
      t.column = col;
      if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        size_t j = i;
        while (j < src_.size() &&
               (std::isalnum(static_cast<unsigned char>(src_[j])) || src_[j] == '_'))
          ++j;
        t.kind = Token::Kind::Ident;
        t.text = src_.substr(i, j - i);
        advance(j - i);
      } else if (std::isdigit(static_cast<unsigned char>(c))) {
        size_t j = i;
        while (j < src_.size() && std::isdigit(static_cast<unsigned char>(src_[j])))
          ++j;
        t.kind = Token::Kind::Int;
        t.text = src_.substr(i, j - i);
        t.value = std::stol(t.text);
        advance(j - i);
      } else if (c == '*' && i + 1 < src_.size() && src_[i + 1] == '=') {
        t.kind = Token::Kind::Sym;
        t.text = "*=";
        advance(2);
      } else if (std::string("?![](){}.,:|+=^/").find(c) != std::string::npos) {
        t.kind = Token::Kind::Sym;
        t.text = std::string(1, c);
        advance(1);
      } else {
        throw SyntaxError(line, col,
                          "unexpected character '" + std::string(1, c) + "'");
      }
      toks_.push_back(std::move(t));
    }
    Token end;
    end.kind = Token::Kind::End;
    end.line = line;
    end.column = col;
    toks_.push_back(end);
  }

  const std::string& src_;
  std::vector<Token> toks_;
};

class Parser {
 public:
  explicit Parser(const std::string& src) : lex_(src) {}

  Program parse_program() {
    Program prog;
    bool saw_main = false;
    if (!at_definition()) {
      prog.entry = parse_process();
      expect_end();
      return prog;
    }
    while (peek().kind != Token::Kind::End) {
      std::string name = expect_ident();
      std::vector<Binder> params;
      if (peek_sym("(")) {
        next();
        if (!peek_sym(")")) {
          params.push_back(parse_binder());
          while (peek_sym(",")) {
            next();
            params.push_back(parse_binder());
          }
        }
        expect_sym(")");
      }
      expect_sym("=");
      ProcessPtr body = parse_process();
      if (name == "Main") {
        if (!params.empty())
          throw SyntaxError(peek().line, peek().column, "Main takes no parameters");
        if (saw_main)
          throw SyntaxError(peek().line, peek().column,
                            "duplicate definition of Main");
        prog.entry = body;
        saw_main = true;
      } else {
        if (prog.definitions.count(name))
          throw SyntaxError(peek().line, peek().column,
                            "duplicate definition of " + name);
        prog.definitions[name] = Definition{std::move(params), body};
      }
    }
    if (!saw_main)
      throw SyntaxError(peek().line, peek().column, "missing Main definition");
    return prog;
  }

  ProcessPtr parse_single_process() {
    ProcessPtr p = parse_process();
    expect_end();
    return p;
  }

 private:
  // A program (as opposed to a bare process) starts with "Name =" or
  // "Name(params) =", where a param list contains ':' before ')'.
  bool at_definition() {
    const auto& t = lex_.tokens();
    if (t[0].kind != Token::Kind::Ident) return false;
    if (t.size() > 1 && t[1].kind == Token::Kind::Sym && t[1].text == "=")
      return true;
    if (t.size() > 1 && t[1].kind == Token::Kind::Sym && t[1].text == "(") {
      size_t i = 2;
      int depth = 1;
      while (i < t.size() && depth > 0) {
        if (t[i].kind == Token::Kind::Sym && t[i].text == "(") ++depth;
        if (t[i].kind == Token::Kind::Sym && t[i].text == ")") --depth;
        ++i;
      }
      return i < t.size() && t[i].kind == Token::Kind::Sym && t[i].text == "=";
    }
    return false;
  }

  const Token& peek(int k = 0) const { return lex_.tokens()[pos_ + k]; }
  const Token& next() { return lex_.tokens()[pos_++]; }

  bool peek_sym(const std::string& s, int k = 0) const {
    return peek(k).kind == Token::Kind::Sym && peek(k).text == s;
  }
  bool peek_ident(const std::string& s, int k = 0) const {
    return peek(k).kind == Token::Kind::Ident && peek(k).text == s;
  }

  [[noreturn]] void fail(const std::string& what) {
    const Token& t = peek();
    std::string got = t.kind == Token::Kind::End ? "end of input" : "'" + t.text + "'";
    throw SyntaxError(t.line, t.column, "expected " + what + ", got " + got);
  }

  void expect_sym(const std::string& s) {
    if (!peek_sym(s)) fail("'" + s + "'");
    next();
  }
  std::string expect_ident() {
    if (peek().kind != Token::Kind::Ident) fail("identifier");
    return next().text;
  }
  long expect_int() {
    if (peek().kind != Token::Kind::Int) fail("integer");
    return next().value;
  }
  void expect_end() {
    if (peek().kind != Token::Kind::End) fail("end of input");
  }

  TypePtr parse_type() {
    if (peek_sym("^")) {
      next();
      expect_sym("[");
      std::vector<TypePtr> payload;
      payload.push_back(parse_type());
      while (peek_sym(",")) {
        next();
        payload.push_back(parse_type());
      }
      expect_sym("]");
      return TypeExpr::channel(std::move(payload));
    }
    std::string n = expect_ident();
    if (n == "Int") return TypeExpr::simple(TypeExpr::Kind::Int);
    if (n == "Qbit") return TypeExpr::simple(TypeExpr::Kind::Qbit);
    if (n == "NS") return TypeExpr::simple(TypeExpr::Kind::NS);
    if (n == "Bit") return TypeExpr::simple(TypeExpr::Kind::Bit);
    if (n == "Op") {
      expect_sym("(");
      long a = expect_int();
      expect_sym(")");
      return TypeExpr::op(static_cast<int>(a));
    }
    fail("type name");
  }

  Binder parse_binder() {
    std::string n = expect_ident();
    expect_sym(":");
    return Binder{std::move(n), parse_type()};
  }

  // process := par { '+' par }, right associated
  ProcessPtr parse_process() {
    ProcessPtr p = parse_par();
    if (peek_sym("+")) {
      next();
      return Process::sum(std::move(p), parse_process());
    }
    return p;
  }

  ProcessPtr parse_par() {
    ProcessPtr p = parse_prefix();
    if (peek_sym("|")) {
      next();
      return Process::par(std::move(p), parse_par());
    }
    return p;
  }

  ProcessPtr parse_prefix() {
    if (peek().kind == Token::Kind::Int && peek().value == 0) {
      next();
      return Process::nil();
    }
    if (peek_sym("(")) {
      next();
      if (peek_ident("qbit")) {
        next();
        std::vector<std::string> names{expect_ident()};
        while (peek_sym(",")) {
          next();
          names.push_back(expect_ident());
        }
        expect_sym(")");
        ProcessPtr k = parse_prefix();
        for (auto it = names.rbegin(); it != names.rend(); ++it)
          k = Process::qbit_decl(*it, std::move(k));
        return k;
      }
      if (peek_ident("ns")) {
        next();
        std::vector<std::string> names{expect_ident()};
        while (peek_sym(",")) {
          next();
          names.push_back(expect_ident());
        }
        expect_sym(")");
        ProcessPtr k = parse_prefix();
        for (auto it = names.rbegin(); it != names.rend(); ++it)
          k = Process::ns_decl(*it, std::move(k));
        return k;
      }
      if (peek_ident("new")) {
        next();
        std::vector<std::string> names{expect_ident()};
        while (peek_sym(",")) {
          next();
          names.push_back(expect_ident());
        }
        expect_sym(":");
        TypePtr t = parse_type();
        expect_sym(")");
        ProcessPtr k = parse_prefix();
        for (auto it = names.rbegin(); it != names.rend(); ++it)
          k = Process::make_new(*it, t, std::move(k));
        return k;
      }
      ProcessPtr p = parse_process();
      expect_sym(")");
      return p;
    }
    if (peek_sym("{")) {
      next();
      ExprPtr a = parse_action();
      expect_sym("}");
      expect_sym(".");
      return Process::action_step(std::move(a), parse_prefix());
    }
    if (peek().kind == Token::Kind::Ident) {
      std::string name = next().text;
      if (peek_sym("?")) {
        next();
        expect_sym("[");
        std::vector<Binder> bs;
        if (!peek_sym("]")) {
          bs.push_back(parse_binder());
          while (peek_sym(",")) {
            next();
            bs.push_back(parse_binder());
          }
        }
        expect_sym("]");
        expect_sym(".");
        return Process::input(std::move(name), std::move(bs), parse_prefix());
      }
      if (peek_sym("!")) {
        next();
        expect_sym("[");
        std::vector<ExprPtr> payload;
        if (!peek_sym("]")) {
          payload.push_back(parse_expr());
          while (peek_sym(",")) {
            next();
            payload.push_back(parse_expr());
          }
        }
        expect_sym("]");
        expect_sym(".");
        return Process::output(std::move(name), std::move(payload), parse_prefix());
      }
      if (peek_sym("(")) {
        next();
        std::vector<std::string> args;
        if (!peek_sym(")")) {
          args.push_back(expect_ident());
          while (peek_sym(",")) {
            next();
            args.push_back(expect_ident());
          }
        }
        expect_sym(")");
        return Process::call(std::move(name), std::move(args));
      }
      fail("'?', '!' or '(' after process name");
    }
    fail("process");
  }

  // Action body: PS form, unitary assignment, or a bare expression.
  ExprPtr parse_action() {
    if (action_is_assignment()) {
      // PS form: x:NS, y:NS *= PS(q)
      if (peek().kind == Token::Kind::Ident && peek_sym(":", 1)) {
        std::string x = expect_ident();
        expect_sym(":");
        if (expect_ident() != "NS") fail("NS in PS binding");
        expect_sym(",");
        std::string y = expect_ident();
        expect_sym(":");
        if (expect_ident() != "NS") fail("NS in PS binding");
        expect_sym("*=");
        if (expect_ident() != "PS") fail("PS");
        expect_sym("(");
        std::string q = expect_ident();
        expect_sym(")");
        return Expr::ps_apply(std::move(x), std::move(y), std::move(q));
      }
      std::vector<std::string> targets;
      if (peek_sym("(")) {
        // grouped pairs: (a, b), (c, d) *= CZ
        while (true) {
          expect_sym("(");
          targets.push_back(expect_ident());
          expect_sym(",");
          targets.push_back(expect_ident());
          expect_sym(")");
          if (!peek_sym(",")) break;
          next();
        }
      } else {
        targets.push_back(expect_ident());
        while (peek_sym(",")) {
          next();
          targets.push_back(expect_ident());
        }
      }
      expect_sym("*=");
      return Expr::apply_unitary(std::move(targets), parse_unitary());
    }
    return parse_expr();
  }

  // The action braces contain no nested braces, so a '*=' before '}' marks
  // an assignment form.
  bool action_is_assignment() const {
    for (size_t i = pos_; i < lex_.tokens().size(); ++i) {
      const Token& t = lex_.tokens()[i];
      if (t.kind == Token::Kind::End) return false;
      if (t.kind == Token::Kind::Sym && t.text == "}") return false;
      if (t.kind == Token::Kind::Sym && t.text == "*=") return true;
    }
    return false;
  }

  ExprPtr parse_unitary() {
    std::string n = expect_ident();
    if (n == "B") {
      expect_sym("[");
      long num = expect_int();
      expect_sym("/");
      long den = expect_int();
      expect_sym("]");
      if (den <= 0 || num < 0 || num > den) fail("reflectivity in [0,1]");
      return Expr::beam_splitter(num, den);
    }
    if (n == "H" || n == "CZ" || n == "U19") return Expr::unitary(n);
    fail("unitary name");
  }

  // expr := if/measure | conjunction
  ExprPtr parse_expr() {
    if (peek_ident("if")) {
      next();
      ExprPtr c = parse_conj();
      if (expect_ident() != "then") fail("'then'");
      ExprPtr t = parse_branch_expr();
      if (expect_ident() != "else") fail("'else'");
      ExprPtr f = parse_branch_expr();
      return Expr::if_then_else(std::move(c), std::move(t), std::move(f));
    }
    if (peek_ident("measure") || peek_ident("psmeasure")) return parse_measure();
    return parse_conj();
  }

  // if-branches admit nested measure/if but stop before 'else'
  ExprPtr parse_branch_expr() { return parse_expr(); }

  ExprPtr parse_measure() {
    bool ps = next().text == "psmeasure";
    std::vector<ExprPtr> names;
    names.push_back(parse_atom());
    while (peek_sym(",")) {
      next();
      names.push_back(parse_atom());
    }
    return Expr::measure(std::move(names), ps);
  }

  ExprPtr parse_conj() {
    ExprPtr e = parse_eq();
    while (peek_ident("and")) {
      next();
      e = Expr::binary(Expr::Kind::And, std::move(e), parse_eq());
    }
    return e;
  }

  ExprPtr parse_eq() {
    ExprPtr e = parse_sum();
    if (peek_sym("=")) {
      next();
      return Expr::binary(Expr::Kind::Eq, std::move(e), parse_sum());
    }
    return e;
  }

  ExprPtr parse_sum() {
    ExprPtr e = parse_atom();
    while (peek_sym("+")) {
      next();
      e = Expr::binary(Expr::Kind::Plus, std::move(e), parse_atom());
    }
    return e;
  }

  ExprPtr parse_atom() {
    if (peek().kind == Token::Kind::Int) return Expr::lit(next().value);
    if (peek_ident("true")) {
      next();
      return Expr::boolean(true);
    }
    if (peek_ident("false")) {
      next();
      return Expr::boolean(false);
    }
    if (peek().kind == Token::Kind::Ident) return Expr::var(next().text);
    if (peek_sym("(")) {
      next();
      ExprPtr e = parse_expr();
      if (peek_sym(",")) {
        next();
        ExprPtr snd = parse_expr();
        expect_sym(")");
        return Expr::binary(Expr::Kind::Pair, std::move(e), std::move(snd));
      }
      expect_sym(")");
      return e;
    }
    fail("expression");
  }

  Lexer lex_;
  size_t pos_ = 0;
};

}  // namespace detail

inline Program parse(const std::string& source) {
  return detail::Parser(source).parse_program();
}

inline ProcessPtr parse_process_text(const std::string& source) {
  return detail::Parser(source).parse_single_process();
}

}  // namespace cqpv
