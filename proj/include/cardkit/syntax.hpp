#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "cardkit/card.hpp"
#include "cardkit/lambdaq.hpp"

namespace cardkit {

// card Name {
//   store { f: int  b: bool  acc: array[int;10] }
//   init { f = 0  acc = [0, 0, ...] }
//   effect Add(n: int where n >= 0) { f := f + n }
//   guard LE := g.f >= r.f
// }
Card parse_card(std::string_view text);
std::string print_card(const Card& card);

// Formula over g.* / r.* fields of the card (guard syntax).
Expr parse_guard_formula(const Card& card, std::string_view text);

// Event specification over s (pre-store), s' (post-store) and the return
// value a. With a single-field store, s and s' name that field directly.
Expr parse_spec_formula(const Card& card, std::string_view text, const Sort& a_sort = Sort::integer());

// op withdraw(n: {v: int | v >= 0}) : Op(BankAccount, int, s' >= 0 && a = n) =
//   query LE as x in if x >= n then emit (Sub(n), n) else emit (NoOp, 0)
std::vector<OpDef> parse_ops(const Card& card, std::string_view text);
Lq parse_term(std::string_view text);
std::string print_op(const OpDef& op, const Card& card);
std::string print_ops(const Card& card, const std::vector<OpDef>& ops);

}  // namespace cardkit
