#include "parser.hpp"

#include <cctype>

namespace cardkit::detail {

namespace {

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

}  // namespace

std::vector<Token> tokenize(std::string_view src) {
  static const char* multi[] = {"<->", ":=", "->", "=>", "<=", ">=", "!=", "&&", "||"};
  std::vector<Token> out;
  int line = 1, col = 1;
  std::size_t i = 0;
  auto advance = [&](std::size_t n) {
    for (std::size_t k = 0; k < n; ++k) {
      if (src[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
      ++i;
    }
  };
  while (i < src.size()) {
    char c = src[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      advance(1);
      continue;
    }
    if (c == '#' || (c == '/' && i + 1 < src.size() && src[i + 1] == '/')) {
      while (i < src.size() && src[i] != '\n') advance(1);
      continue;
    }
    Token t;
    t.line = line;
    t.col = col;
    if (ident_start(c)) {
      std::size_t j = i;
      while (j < src.size() && ident_char(src[j])) ++j;
      while (j < src.size() && src[j] == '\'') ++j;
      t.kind = Token::Kind::Ident;
      t.text = std::string(src.substr(i, j - i));
      advance(j - i);
    } else if (std::isdigit(static_cast<unsigned char>(c))) {
      std::size_t j = i;
      while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
      t.kind = Token::Kind::Int;
      t.text = std::string(src.substr(i, j - i));
      try {
        t.ival = std::stoll(t.text);
      } catch (const std::exception&) {
        throw ParseError("integer literal out of range", line, col);
      }
      advance(j - i);
    } else if (c == '"') {
      std::size_t j = i + 1;
      while (j < src.size() && src[j] != '"' && src[j] != '\n') ++j;
      if (j >= src.size() || src[j] != '"') throw ParseError("unterminated string", line, col);
      t.kind = Token::Kind::String;
      t.text = std::string(src.substr(i + 1, j - i - 1));
      advance(j + 1 - i);
    } else {
      t.kind = Token::Kind::Punct;
      bool matched = false;
      for (const char* m : multi) {
        std::string_view mv(m);
        if (src.substr(i, mv.size()) == mv) {
          t.text = std::string(mv);
          advance(mv.size());
          matched = true;
          break;
        }
      }
      if (!matched) {
        static const std::string singles = "{}()[];:,.=<>!+-*|";
        if (singles.find(c) == std::string::npos) throw ParseError(std::string("unexpected character '") + c + "'", line, col);
        t.text = std::string(1, c);
        advance(1);
      }
    }
    out.push_back(std::move(t));
  }
  Token end;
  end.line = line;
  end.col = col;
  out.push_back(end);
  return out;
}

const StoreRef* Scope::find_store(const std::string& name) const {
  for (const auto& [n, r] : stores)
    if (n == name) return &r;
  return nullptr;
}

Parser::Parser(std::string_view src) : toks_(tokenize(src)) {}

const Token& Parser::peek(std::size_t k) const {
  std::size_t i = std::min(pos_ + k, toks_.size() - 1);
  return toks_[i];
}

Token Parser::next() {
  Token t = peek();
  if (pos_ < toks_.size() - 1) ++pos_;
  return t;
}

bool Parser::is(std::string_view text, std::size_t k) const {
  const Token& t = peek(k);
  return (t.kind == Token::Kind::Punct || t.kind == Token::Kind::Ident) && t.text == text;
}

bool Parser::accept(std::string_view text) {
  if (!is(text)) return false;
  next();
  return true;
}

void Parser::expect(std::string_view text) {
  if (!accept(text)) fail("expected '" + std::string(text) + "'");
}

std::string Parser::ident() {
  if (peek().kind != Token::Kind::Ident) fail("expected identifier");
  return next().text;
}

std::int64_t Parser::integer() {
  bool neg = accept("-");
  if (peek().kind != Token::Kind::Int) fail("expected integer");
  auto v = next().ival;
  return neg ? -v : v;
}

std::string Parser::string_lit() {
  if (peek().kind != Token::Kind::String) fail("expected string literal");
  return next().text;
}

void Parser::fail(const std::string& msg) const { fail_at(peek(), msg); }

void Parser::fail_at(const Token& t, const std::string& msg) const {
  std::string near = t.kind == Token::Kind::End ? "end of input" : "'" + t.text + "'";
  throw ParseError(msg + " near " + near, t.line, t.col);
}

Sort Parser::sort() {
  if (accept("int")) return Sort::integer();
  if (accept("bool")) return Sort::boolean();
  if (accept("array")) {
    expect("[");
    Sort elem = sort();
    expect(";");
    auto n = integer();
    if (n <= 0) fail("array length must be positive");
    expect("]");
    try {
      return Sort::array(elem, static_cast<std::size_t>(n));
    } catch (const SortError& e) {
      fail(e.what());
    }
  }
  fail("expected a sort (int, bool, array[...])");
}

Value Parser::literal(const Sort& s) {
  switch (s.kind()) {
    case Sort::Kind::Int:
      return Value::integer(integer());
    case Sort::Kind::Bool:
      if (accept("true")) return Value::boolean(true);
      if (accept("false")) return Value::boolean(false);
      fail("expected true or false");
    case Sort::Kind::Array: {
      expect("[");
      Value::Array elems;
      if (!is("]")) {
        do {
          elems.push_back(literal(s.element()));
        } while (accept(","));
      }
      expect("]");
      if (elems.size() != s.length())
        fail("array literal has " + std::to_string(elems.size()) + " elements, expected " + std::to_string(s.length()));
      return Value::array(std::move(elems));
    }
  }
  fail("bad sort");
}

Expr Parser::formula(const Scope& scope) { return lowest(scope); }

Expr Parser::lowest(const Scope& s) {
  Token t = peek();
  Expr a = disj(s);
  if (is("->")) {
    Token op = next();
    Expr b = lowest(s);
    return at_token(*this, op, [&] { return implies(a, b); });
  }
  if (is("<->")) {
    Token op = next();
    Expr b = lowest(s);
    return at_token(*this, op, [&] {
      if (!a.sort().is_bool() || !b.sort().is_bool()) throw SortError("<-> needs boolean operands");
      return eq(a, b);
    });
  }
  (void)t;
  return a;
}

Expr Parser::disj(const Scope& s) {
  Expr a = conj(s);
  while (is("||")) {
    Token op = next();
    Expr b = conj(s);
    a = at_token(*this, op, [&] { return lor(a, b); });
  }
  return a;
}

Expr Parser::conj(const Scope& s) {
  Expr a = negation(s);
  while (is("&&")) {
    Token op = next();
    Expr b = negation(s);
    a = at_token(*this, op, [&] { return land(a, b); });
  }
  return a;
}

Expr Parser::negation(const Scope& s) {
  if (is("!")) {
    Token op = next();
    Expr a = negation(s);
    return at_token(*this, op, [&] { return lnot(a); });
  }
  return comparison(s);
}

Expr Parser::comparison(const Scope& s) {
  Expr a = additive(s);
  for (const char* op : {"=", "!=", "<=", "<", ">=", ">"}) {
    if (is(op)) {
      Token t = next();
      Expr b = additive(s);
      return at_token(*this, t, [&] {
        std::string o = t.text;
        if (o == "=") return eq(a, b);
        if (o == "!=") return lnot(eq(a, b));
        if (o == "<=") return le(a, b);
        if (o == "<") return lt(a, b);
        if (o == ">=") return ge(a, b);
        return gt(a, b);
      });
    }
  }
  return a;
}

Expr Parser::additive(const Scope& s) {
  Expr a = multiplicative(s);
  while (is("+") || is("-")) {
    Token op = next();
    Expr b = multiplicative(s);
    a = at_token(*this, op, [&] { return op.text == "+" ? plus(a, b) : minus(a, b); });
  }
  return a;
}

Expr Parser::multiplicative(const Scope& s) {
  Expr a = unary(s);
  while (is("*")) {
    Token op = next();
    Expr b = unary(s);
    a = at_token(*this, op, [&] { return times(a, b); });
  }
  return a;
}

Expr Parser::unary(const Scope& s) {
  if (is("-")) {
    Token op = next();
    Expr a = unary(s);
    return at_token(*this, op, [&] { return negate(a); });
  }
  return postfix(s);
}

Expr Parser::postfix(const Scope& s) {
  Expr a = primary(s);
  while (is("[")) {
    Token op = next();
    Expr i = lowest(s);
    expect("]");
    a = at_token(*this, op, [&] { return select(a, i); });
  }
  return a;
}

Expr Parser::primary(const Scope& s) {
  const Token& t = peek();
  if (t.kind == Token::Kind::Int) return int_lit(next().ival);
  if (accept("true")) return top();
  if (accept("false")) return bottom();
  if (accept("(")) {
    Expr e = lowest(s);
    expect(")");
    return e;
  }
  if (is("[")) {
    Token open = next();
    std::vector<Expr> elems;
    if (!is("]")) {
      do {
        elems.push_back(lowest(s));
      } while (accept(","));
    }
    expect("]");
    return at_token(*this, open, [&] {
      if (elems.empty()) throw SortError("empty array literal");
      // Literal arrays are only allowed over literal elements.
      Value::Array vals;
      for (const auto& e : elems) {
        if (e.op() == Op::IntLit)
          vals.push_back(Value::integer(e.int_value()));
        else if (e.op() == Op::BoolLit)
          vals.push_back(Value::boolean(e.bool_value()));
        else
          throw SortError("array literal elements must be literals");
      }
      Sort es = elems.front().sort();
      return value_lit(Value::array(std::move(vals)), Sort::array(es, elems.size()));
    });
  }
  if (is("if")) {
    Token kw = next();
    Expr c = lowest(s);
    expect("then");
    Expr a = lowest(s);
    expect("else");
    Expr b = lowest(s);
    return at_token(*this, kw, [&] { return ite(c, a, b); });
  }
  if (is("forall")) {
    Token kw = next();
    expect("(");
    std::vector<Binder> binders;
    Scope inner = s;
    do {
      std::string n = ident();
      expect(":");
      Sort so = sort();
      binders.push_back({n, so});
      inner.vars.insert_or_assign(n, so);
    } while (accept(","));
    expect(")");
    expect(".");
    Expr body = lowest(inner);
    return at_token(*this, kw, [&] { return forall(binders, body); });
  }
  if (is("store") && is("(", 1)) {
    Token kw = next();
    next();
    Expr a = lowest(s);
    expect(",");
    Expr i = lowest(s);
    expect(",");
    Expr v = lowest(s);
    expect(")");
    return at_token(*this, kw, [&] { return store(a, i, v); });
  }
  if (is("sum") && is("(", 1)) {
    Token kw = next();
    next();
    Expr a = lowest(s);
    expect(")");
    return at_token(*this, kw, [&] {
      if (!a.sort().is_array() || !a.sort().element().is_int()) throw SortError("sum() needs an int array");
      Expr total = select(a, int_lit(0));
      for (std::size_t i = 1; i < a.sort().length(); ++i) total = plus(total, select(a, int_lit(static_cast<std::int64_t>(i))));
      return total;
    });
  }
  if (t.kind == Token::Kind::Ident) return name(s);
  fail("expected an expression");
}

Expr Parser::name(const Scope& s) {
  Token t = next();
  const std::string& n = t.text;
  if (const StoreRef* store = s.find_store(n)) {
    if (!s.schema) fail_at(t, "no store in scope");
    if (is(".") && peek(1).kind == Token::Kind::Ident) {
      next();
      Token f = next();
      auto slot = s.schema->slot(f.text);
      if (!slot) fail_at(f, "unknown field '" + f.text + "'");
      return field(*store, f.text, *slot, s.schema->field(*slot).sort);
    }
    if (s.schema->size() == 1) return field(*store, s.schema->field(0).name, 0, s.schema->field(0).sort);
    fail_at(t, "store '" + n + "' has several fields; write " + n + ".<field>");
  }
  if (auto it = s.vars.find(n); it != s.vars.end()) return var(n, it->second);
  if (s.bare_fields_pre && s.schema) {
    if (auto slot = s.schema->slot(n)) return field(StoreRef::pre(), n, *slot, s.schema->field(*slot).sort);
  }
  fail_at(t, "unknown name '" + n + "'");
}

std::string print_sort(const Sort& s) { return s.to_string(); }

std::string print_value(const Value& v) {
  if (!v.is_array()) return v.to_string();
  std::string out = "[";
  const auto& a = v.as_array();
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (i) out += ", ";
    out += print_value(a[i]);
  }
  return out + "]";
}

}  // namespace cardkit::detail
