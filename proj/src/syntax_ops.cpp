#include <set>
#include <sstream>

#include "cardkit/syntax.hpp"
#include "parser.hpp"

namespace cardkit {

using detail::Parser;
using detail::Scope;
using detail::Token;

namespace {

const std::set<std::string> kKeywords = {"op", "fun", "if", "then", "else", "query", "as", "in", "let", "emit", "true", "false"};

class TermParser {
 public:
  explicit TermParser(Parser& p) : p_(p) {}

  Lq term() {
    if (p_.accept("fun")) {
      std::string x = binder();
      p_.expect("=>");
      return lq::lam(x, term());
    }
    if (p_.accept("if")) {
      Lq c = term();
      p_.expect("then");
      Lq t = term();
      p_.expect("else");
      return lq::ite(c, t, term());
    }
    if (p_.accept("query")) {
      std::vector<std::string> guards;
      do {
        std::string g = p_.ident();
        if (g != Card::kTop) guards.push_back(g);
      } while (p_.accept("&&"));
      p_.expect("as");
      std::string x = binder();
      p_.expect("in");
      return lq::query(guards, x, term());
    }
    if (p_.accept("let")) {
      std::string x = binder();
      p_.expect("=");
      Lq v = term();
      p_.expect("in");
      return lq::let(x, v, term());
    }
    return disj();
  }

 private:
  std::string binder() {
    const Token t = p_.peek();
    std::string x = p_.ident();
    if (kKeywords.count(x)) p_.fail_at(t, "'" + x + "' is a keyword");
    return x;
  }

  Lq disj() {
    Lq a = conj();
    while (p_.accept("||")) a = lq::prim("||", {a, conj()});
    return a;
  }
  Lq conj() {
    Lq a = negation();
    while (p_.accept("&&")) a = lq::prim("&&", {a, negation()});
    return a;
  }
  Lq negation() {
    if (p_.accept("!")) return lq::prim("!", {negation()});
    return comparison();
  }
  Lq comparison() {
    Lq a = additive();
    for (;;) {
      std::string op;
      for (const char* r : {"=", "!=", "<=", ">=", "<", ">"})
        if (p_.is(r)) op = r;
      if (op.empty()) return a;
      p_.next();
      a = lq::prim(op, {a, additive()});
    }
  }
  Lq additive() {
    Lq a = multiplicative();
    for (;;) {
      if (p_.accept("+")) a = lq::prim("+", {a, multiplicative()});
      else if (p_.accept("-")) a = lq::prim("-", {a, multiplicative()});
      else return a;
    }
  }
  Lq multiplicative() {
    Lq a = unary();
    while (p_.accept("*")) a = lq::prim("*", {a, unary()});
    return a;
  }
  Lq unary() {
    if (p_.accept("-")) {
      Lq a = unary();
      if (a->kind == LqTerm::Kind::Int) return lq::int_(-a->ival);
      return lq::prim("neg", {a});
    }
    return application();
  }

  bool atom_start() const {
    const Token& t = p_.peek();
    if (t.kind == Token::Kind::Int) return true;
    if (t.kind == Token::Kind::Ident) return !kKeywords.count(t.text) || t.text == "true" || t.text == "false" || t.text == "emit";
    return t.text == "(" && t.kind == Token::Kind::Punct;
  }

  Lq application() {
    Lq f = postfix();
    while (atom_start()) f = lq::app(f, postfix());
    return f;
  }
  Lq postfix() {
    Lq a = atom();
    while (p_.accept(".")) a = lq::field(a, p_.ident());
    return a;
  }
  Lq atom() {
    const Token& t = p_.peek();
    if (t.kind == Token::Kind::Int) return lq::int_(p_.next().ival);
    if (p_.accept("true")) return lq::bool_(true);
    if (p_.accept("false")) return lq::bool_(false);
    if (p_.accept("(")) {
      Lq a = term();
      p_.expect(")");
      return a;
    }
    if (p_.accept("emit")) {
      p_.expect("(");
      std::string e = p_.ident();
      std::vector<Lq> args;
      if (p_.accept("(")) {
        if (!p_.is(")")) {
          do {
            args.push_back(term());
          } while (p_.accept(","));
        }
        p_.expect(")");
      }
      p_.expect(",");
      Lq ret = term();
      p_.expect(")");
      return lq::emit(e, std::move(args), ret);
    }
    if (t.kind == Token::Kind::Ident && !kKeywords.count(t.text)) return lq::var(p_.ident());
    p_.fail_at(t, "expected a term, found '" + t.text + "'");
  }

  Parser& p_;
};

OpParam param(Parser& p) {
  OpParam out;
  out.name = p.ident();
  p.expect(":");
  if (!p.accept("{")) {
    out.sort = p.sort();
    return out;
  }
  const std::string v = p.ident();
  p.expect(":");
  out.sort = p.sort();
  p.expect("|");
  Scope s;
  s.vars.insert_or_assign(v, out.sort);
  const Token at = p.peek();
  Expr r = p.formula(s);
  if (!r.sort().is_bool()) p.fail_at(at, "refinement must be boolean");
  p.expect("}");
  VarMap m;
  m.insert_or_assign(v, var(out.name, out.sort));
  out.refinement = substitute(r, m);
  return out;
}

OpDef op_def(const Card& card, Parser& p) {
  OpDef op;
  p.expect("op");
  op.name = p.ident();
  p.expect("(");
  if (!p.is(")")) {
    do {
      op.params.push_back(param(p));
    } while (p.accept(","));
  }
  p.expect(")");
  p.expect(":");
  p.expect("Op");
  p.expect("(");
  const Token ct = p.peek();
  if (p.ident() != card.name()) p.fail_at(ct, "operation type names card '" + ct.text + "', not '" + card.name() + "'");
  p.expect(",");
  op.ret_sort = p.sort();
  p.expect(",");
  Scope s;
  s.schema = &card.schema();
  s.stores = {{"s", StoreRef::pre()}, {"s'", StoreRef::post()}};
  s.vars.insert_or_assign("a", op.ret_sort);
  const Token st = p.peek();
  op.spec = p.formula(s);
  if (!op.spec.sort().is_bool()) p.fail_at(st, "specification must be boolean");
  p.expect(")");
  p.expect("=");
  TermParser tp(p);
  op.body = tp.term();
  return op;
}

}  // namespace

std::vector<OpDef> parse_ops(const Card& card, std::string_view text) {
  Parser p(text);
  std::vector<OpDef> out;
  std::set<std::string> names;
  while (!p.at_end()) {
    const Token t = p.peek(1);
    OpDef op = op_def(card, p);
    if (!names.insert(op.name).second) p.fail_at(t, "duplicate operation '" + op.name + "'");
    out.push_back(std::move(op));
  }
  return out;
}

Lq parse_term(std::string_view text) {
  Parser p(text);
  TermParser tp(p);
  Lq t = tp.term();
  if (!p.at_end()) p.fail("trailing input after term");
  return t;
}

std::string print_op(const OpDef& op, const Card& card) {
  std::ostringstream os;
  os << "op " << op.name << "(";
  for (std::size_t i = 0; i < op.params.size(); ++i) {
    const auto& prm = op.params[i];
    if (i) os << ", ";
    os << prm.name << ": ";
    if (prm.refinement.is_true()) {
      os << detail::print_sort(prm.sort);
    } else {
      VarMap m;
      m.insert_or_assign(prm.name, var("v", prm.sort));
      os << "{v: " << detail::print_sort(prm.sort) << " | " << to_string(substitute(prm.refinement, m)) << "}";
    }
  }
  os << ") : Op(" << card.name() << ", " << detail::print_sort(op.ret_sort) << ", " << to_string(op.spec) << ") = "
     << to_string(op.body);
  return os.str();
}

std::string print_ops(const Card& card, const std::vector<OpDef>& ops) {
  std::string out;
  for (const auto& op : ops) out += print_op(op, card) + "\n";
  return out;
}

}  // namespace cardkit
