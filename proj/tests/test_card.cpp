#include <gtest/gtest.h>

#include <algorithm>

#include "cardkit/card.hpp"
#include "cardkit/error.hpp"
#include "cardkit/syntax.hpp"
#include "support.hpp"

using namespace cardkit;
using test_support::load_card;

namespace {

StoreValue ints(std::initializer_list<std::int64_t> xs) {
  StoreValue s;
  for (auto x : xs) s.fields.push_back(Value::integer(x));
  return s;
}

std::vector<std::string> names(const std::vector<EffectClass>& es) {
  std::vector<std::string> out;
  for (const auto& e : es) out.push_back(e.name);
  return out;
}

}  // namespace

TEST(Card, BuiltinsRegistered) {
  Card c("C", StoreSchema({{"val", Sort::integer()}}), ints({0}));
  EXPECT_EQ(c.effects().size(), 1u);
  EXPECT_TRUE(c.effect(Card::kNoOp).is_identity());
  EXPECT_TRUE(c.guard(Card::kTop).body.is_true());
  EXPECT_EQ(c.guard(Card::kEq).body.to_string(), "g.val = r.val");
}

TEST(Card, CorpusCounts) {
  struct Row {
    const char* file;
    std::size_t guards, effects;
  };
  for (Row r : {Row{"bank_account.card", 4, 3}, Row{"bank_reset.card", 4, 4}, Row{"conspiring_booleans.card", 4, 3},
                Row{"joint_account.card", 6, 8}, Row{"kv_bank.card", 11, 9}, Row{"fsm.card", 3, 3}}) {
    Card c = load_card(r.file);
    EXPECT_EQ(c.guards().size(), r.guards) << r.file;
    EXPECT_EQ(c.effects().size(), r.effects) << r.file;
  }
}

TEST(Card, PrintParseRoundTrip) {
  for (const char* f : {"counter.card", "bank_account.card", "bank_reset.card", "conspiring_booleans.card",
                        "joint_account.card", "kv_bank.card", "fsm.card", "bank_interest.card"}) {
    Card c = load_card(f);
    std::string once = print_card(c);
    Card again = parse_card(once);
    EXPECT_EQ(print_card(again), once) << f;
    EXPECT_EQ(names(again.effects()), names(c.effects())) << f;
    for (std::size_t i = 0; i < c.guards().size(); ++i) EXPECT_EQ(again.guards()[i].body, c.guards()[i].body) << f;
  }
}

TEST(Card, ParseErrorsCarryPosition) {
  try {
    parse_card("card X {\n  store { val: int }\n  effect Add(n: int) { nope := n }\n}");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3);
    EXPECT_NE(std::string(e.what()).find("nope"), std::string::npos);
  }
  EXPECT_THROW(parse_card("card X { store { val: int } guard G := g.val + 1 }"), ParseError);
  EXPECT_THROW(parse_card("card X { store { val: int } effect A { val := true } }"), ParseError);
  EXPECT_THROW(parse_card("card X { store { val: int } guard G := g.val <= n }"), ParseError);
  EXPECT_THROW(parse_card("card X { store { val: int } guard EQ := true }"), ParseError);
  EXPECT_THROW(parse_card("card X { store { val: int } effect A { val := r.val } }"), ParseError);
}

TEST(Card, DenoteAndGuardEval) {
  Card c = load_card("bank_account.card");
  EXPECT_EQ(denote_effect(c, {"Add", {Value::integer(100)}}, ints({5})), ints({105}));
  EXPECT_EQ(denote_effect(c, {"Sub", {Value::integer(7)}}, ints({5})), ints({-2}));
  EXPECT_EQ(denote_effect(c, EffectInstance::noop(), ints({5})), ints({5}));
  EXPECT_TRUE(guard_eval(c, c.guard("LE"), ints({5}), ints({3})));
  EXPECT_FALSE(guard_eval(c, c.guard("LE"), ints({3}), ints({5})));
  EXPECT_TRUE(guard_eval(c, c.guard("GE"), ints({3}), ints({5})));
  EXPECT_EQ(EffectInstance({"Add", {Value::integer(100)}}).to_string(), "Add(100)");
  EXPECT_EQ(EffectInstance::noop().to_string(), "NoOp");
}

TEST(Card, KvEffectsOnArrays) {
  Card c = load_card("kv_bank.card");
  StoreValue s = c.init();
  s = denote_effect(c, {"Add", {Value::integer(3), Value::integer(10)}}, s);
  s = denote_effect(c, {"Transfer", {Value::integer(3), Value::integer(5), Value::integer(4)}}, s);
  s = denote_effect(c, {"Swap", {Value::integer(5), Value::integer(0)}}, s);
  s = denote_effect(c, {"Move", {Value::integer(3), Value::integer(9)}}, s);
  EXPECT_EQ(s.fields[0].to_string(), "[4,0,0,0,0,0,0,0,0,6]");
}

TEST(Card, InstanceChecking) {
  Card c = load_card("kv_bank.card");
  EXPECT_NO_THROW(check_instance(c, {"Fee", {Value::integer(9)}}));
  EXPECT_THROW(check_instance(c, {"Fee", {Value::integer(10)}}), Error);
  EXPECT_THROW(check_instance(c, {"Fee", {}}), Error);
  EXPECT_THROW(check_instance(c, {"Fee", {Value::boolean(true)}}), Error);
  EXPECT_THROW(check_instance(c, {"Transfer", {Value::integer(1), Value::integer(1), Value::integer(0)}}), Error);
  EXPECT_THROW(check_instance(c, {"Nope", {}}), Error);
}

TEST(Card, ValidateFlagsBadCards) {
  EnumerationChecker en;
  for (const char* f : {"counter.card", "joint_account.card", "fsm.card", "conspiring_booleans.card"})
    EXPECT_TRUE(validate_card(load_card(f), en).empty()) << f;

  Card bad = parse_card(
      "card B { store { val: int } init { val = 0 }\n"
      "  effect Never(n: int where n > 0 && n < 0) { val := n }\n"
      "  guard Strict := r.val < g.val }");
  auto issues = validate_card(bad, en);
  ASSERT_EQ(issues.size(), 2u);
  auto mentions = [&](const std::string& w) {
    return std::any_of(issues.begin(), issues.end(), [&](const std::string& s) { return s.find(w) != std::string::npos; });
  };
  EXPECT_TRUE(mentions("Strict"));
  EXPECT_TRUE(mentions("Never"));
}

TEST(Card, ApplyEffectSides) {
  Card c = load_card("bank_account.card");
  const Expr le = c.guard("LE").body;
  EXPECT_EQ(apply_effect(c, le, c.effect("Sub"), Side::Global).to_string(), "r.val <= g.val - n");
  EXPECT_EQ(apply_effect(c, le, c.effect("Sub"), Side::Both).to_string(), "r.val - n <= g.val - n");
  EXPECT_EQ(apply_effect(c, le, EffectInstance{"Add", {Value::integer(2)}}, Side::Replica).to_string(),
            "r.val + 2 <= g.val");
}
