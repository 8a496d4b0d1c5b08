#include <sstream>

#include "cardkit/syntax.hpp"
#include "parser.hpp"

namespace cardkit {

using detail::Parser;
using detail::Scope;
using detail::Token;

namespace {

Scope guard_scope(const StoreSchema& schema) {
  Scope s;
  s.schema = &schema;
  s.stores = {{"g", StoreRef::global()}, {"r", StoreRef::replica()}};
  return s;
}

}  // namespace

Card parse_card(std::string_view text) {
  Parser p(text);
  p.expect("card");
  std::string name = p.ident();
  p.expect("{");

  p.expect("store");
  p.expect("{");
  std::vector<FieldDecl> fields;
  while (!p.is("}")) {
    Token ft = p.peek();
    std::string f = p.ident();
    p.expect(":");
    Sort s = p.sort();
    for (const auto& d : fields)
      if (d.name == f) p.fail_at(ft, "duplicate store field '" + f + "'");
    fields.push_back({f, s});
    if (!p.accept(",")) p.accept(";");
  }
  p.expect("}");
  if (fields.empty()) p.fail("store needs at least one field");
  StoreSchema schema(fields);

  StoreValue init;
  for (const auto& f : fields) init.fields.push_back(Value::zero(f.sort));
  if (p.accept("init")) {
    p.expect("{");
    while (!p.is("}")) {
      Token ft = p.peek();
      std::string f = p.ident();
      auto slot = schema.slot(f);
      if (!slot) p.fail_at(ft, "unknown field '" + f + "'");
      p.expect("=");
      init.fields[*slot] = p.literal(schema.field(*slot).sort);
      if (!p.accept(",")) p.accept(";");
    }
    p.expect("}");
  }

  Card card(name, schema, init);
  while (!p.accept("}")) {
    Token kw = p.peek();
    if (p.accept("effect")) {
      Token nt = p.peek();
      std::string ename = p.ident();
      std::vector<ParamDecl> params;
      Scope ps;
      if (p.accept("(")) {
        if (!p.is(")")) {
          do {
            std::string pn = p.ident();
            p.expect(":");
            Sort so = p.sort();
            ps.vars.insert_or_assign(pn, so);
            Expr c = top();
            if (p.accept("where")) c = p.formula(ps);
            params.push_back({pn, so, c});
          } while (p.accept(","));
        }
        p.expect(")");
      }
      Scope as;
      as.schema = &card.schema();
      as.vars = ps.vars;
      as.bare_fields_pre = true;
      p.expect("{");
      std::map<std::string, Expr> assigns;
      while (!p.is("}")) {
        Token ft = p.peek();
        std::string f = p.ident();
        if (!card.schema().slot(f)) p.fail_at(ft, "unknown field '" + f + "'");
        if (assigns.count(f)) p.fail_at(ft, "field '" + f + "' assigned twice");
        p.expect(":=");
        assigns.emplace(f, p.formula(as));
        p.accept(";");
      }
      p.expect("}");
      try {
        card.add_effect(ename, params, assigns);
      } catch (const Error& e) {
        p.fail_at(nt, e.what());
      }
    } else if (p.accept("guard")) {
      Token nt = p.peek();
      std::string gname = p.ident();
      p.expect(":=");
      Expr body = p.formula(guard_scope(card.schema()));
      p.accept(";");
      try {
        card.add_guard(gname, body);
      } catch (const Error& e) {
        p.fail_at(nt, e.what());
      }
    } else {
      p.fail_at(kw, "expected 'effect', 'guard' or '}'");
    }
  }
  if (!p.at_end()) p.fail("trailing input after card");
  return card;
}

Expr parse_guard_formula(const Card& card, std::string_view text) {
  Parser p(text);
  Expr f = p.formula(guard_scope(card.schema()));
  if (!p.at_end()) p.fail("trailing input after formula");
  return f;
}

Expr parse_spec_formula(const Card& card, std::string_view text, const Sort& a_sort) {
  Parser p(text);
  Scope s;
  s.schema = &card.schema();
  s.stores = {{"s", StoreRef::pre()}, {"s'", StoreRef::post()}};
  s.vars.insert_or_assign("a", a_sort);
  Expr f = p.formula(s);
  if (!p.at_end()) p.fail("trailing input after formula");
  return f;
}

std::string print_card(const Card& card) {
  std::ostringstream os;
  os << "card " << card.name() << " {\n  store {";
  for (const auto& f : card.schema().fields()) os << " " << f.name << ": " << f.sort.to_string();
  os << " }\n  init {";
  for (std::size_t i = 0; i < card.schema().size(); ++i)
    os << " " << card.schema().field(i).name << " = " << detail::print_value(card.init().fields.at(i));
  os << " }\n";
  for (const auto& e : card.effects()) {
    if (e.builtin) continue;
    os << "  effect " << e.name;
    if (!e.params.empty()) {
      os << "(";
      for (std::size_t i = 0; i < e.params.size(); ++i) {
        if (i) os << ", ";
        os << e.params[i].name << ": " << e.params[i].sort.to_string();
        if (!e.params[i].constraint.is_true()) os << " where " << e.params[i].constraint.to_string();
      }
      os << ")";
    }
    os << " {";
    for (std::size_t i = 0; i < e.assignments.size(); ++i) {
      const auto& a = e.assignments[i];
      if (a.op() == Op::Field && a.store().kind == StoreKind::Pre && a.slot() == i) continue;
      os << " " << card.schema().field(i).name << " := " << to_string(a, PrintOptions{true}) << ";";
    }
    os << " }\n";
  }
  for (const auto& g : card.guards()) {
    if (g.builtin) continue;
    os << "  guard " << g.name << " := " << g.body.to_string() << "\n";
  }
  os << "}\n";
  return os.str();
}

}  // namespace cardkit
