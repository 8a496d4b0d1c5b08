#pragma once

// Shared lexer and formula parser for the text formats.

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cardkit/error.hpp"
#include "cardkit/expr.hpp"
#include "cardkit/value.hpp"

namespace cardkit::detail {

struct Token {
  enum class Kind { Ident, Int, String, Punct, End };
  Kind kind = Kind::End;
  std::string text;
  std::int64_t ival = 0;
  int line = 1;
  int col = 1;
};

std::vector<Token> tokenize(std::string_view src);

// How names resolve inside a formula.
struct Scope {
  const StoreSchema* schema = nullptr;
  // Store prefixes, e.g. {"g", Global}, {"r", Replica}, {"s", Pre}, {"s'", Post}.
  std::vector<std::pair<std::string, StoreRef>> stores;
  std::map<std::string, Sort> vars;
  // Bare field names read the Pre store (effect assignments).
  bool bare_fields_pre = false;

  const StoreRef* find_store(const std::string& name) const;
};

class Parser {
 public:
  explicit Parser(std::string_view src);

  const Token& peek(std::size_t k = 0) const;
  Token next();
  bool at_end() const { return peek().kind == Token::Kind::End; }
  bool is(std::string_view text, std::size_t k = 0) const;
  bool accept(std::string_view text);
  void expect(std::string_view text);
  std::string ident();
  std::int64_t integer();
  std::string string_lit();
  [[noreturn]] void fail(const std::string& msg) const;
  [[noreturn]] void fail_at(const Token& t, const std::string& msg) const;

  Sort sort();
  Value literal(const Sort& sort);
  Expr formula(const Scope& scope);

 private:
  Expr lowest(const Scope& s);
  Expr disj(const Scope& s);
  Expr conj(const Scope& s);
  Expr negation(const Scope& s);
  Expr comparison(const Scope& s);
  Expr additive(const Scope& s);
  Expr multiplicative(const Scope& s);
  Expr unary(const Scope& s);
  Expr postfix(const Scope& s);
  Expr primary(const Scope& s);
  Expr name(const Scope& s);

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
};

// Wraps sort errors raised while building an expression with the position of
// the token that triggered them.
template <class F>
auto at_token(const Parser& p, const Token& t, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const SortError& e) {
    p.fail_at(t, e.what());
  }
}

std::string print_sort(const Sort& s);
std::string print_value(const Value& v);

}  // namespace cardkit::detail
