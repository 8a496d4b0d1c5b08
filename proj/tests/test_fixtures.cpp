#include <gtest/gtest.h>

#include "cardkit/error.hpp"
#include "cardkit/fixtures.hpp"
#include "support.hpp"

using namespace cardkit;
using namespace cardkit::test_support;

using Names = std::vector<std::string>;

namespace {

const Names kCards = {"bank_account.card", "bank_reset.card", "conspiring_booleans.card", "joint_account.card",
                      "kv_bank.card",      "fsm.card",        "counter.card",             "bank_interest.card"};

std::string fixture_file(const std::string& card_file) {
  return corpus_path("fixtures/" + card_file.substr(0, card_file.find('.')) + ".fix");
}

bool violates_guard(const Card& c, const DExecution& L) {
  for (const auto& v : check_well_formed(c, L))
    if (v.condition == 2) return true;
  return false;
}

}  // namespace

TEST(Fixtures, CounterLe) {
  Card c = load_card("counter.card");
  auto fx = build_guard_fixture(c, "LE");
  EXPECT_EQ(fx.with(c, Verdict::Safe), (Names{"NoOp", "Add"}));
  EXPECT_EQ(fx.with(c, Verdict::Conflicting), (Names{"Sub", "Set"}));
  ASSERT_TRUE(fx.witnesses.count("Sub"));
  const auto& w = fx.witnesses.at("Sub");
  EXPECT_TRUE(violates_guard(c, w));
  // The Sub event is arbitrated before the guarded event and unseen by it.
  const auto& g = w.guard(1);
  bool hidden_sub = false;
  for (const auto& e : w.events)
    if (e.effect.cls == "Sub" && !g.visible.count(e.id)) hidden_sub = true;
  EXPECT_TRUE(hidden_sub);
}

TEST(Fixtures, TopHasNoWitnesses) {
  for (const auto& f : kCards) {
    if (f == "kv_bank.card") continue;
    Card c = load_card(f);
    auto fx = build_guard_fixture(c, Card::kTop);
    EXPECT_TRUE(fx.witnesses.empty()) << f;
    EXPECT_EQ(fx.with(c, Verdict::Safe).size(), c.effects().size()) << f;
  }
}

TEST(Fixtures, JointRequestNeedsTheChain) {
  Card c = load_card("joint_account.card");
  auto fx = build_guard_fixture(c, "LEApp");
  EXPECT_EQ(fx.with(c, Verdict::Safe), (Names{"NoOp", "Add"}));
  ASSERT_TRUE(fx.witnesses.count("Request"));
  const auto& w = fx.witnesses.at("Request");
  EXPECT_TRUE(violates_guard(c, w));
  // Request unseen, then a seen Approve that copies the flag only globally.
  ASSERT_EQ(w.events.size(), 3u);
  EXPECT_EQ(w.events[0].effect.cls, "Request");
  EXPECT_EQ(w.events[1].effect.cls, "Approve");
  EXPECT_EQ(w.guard(1).visible, (std::set<int>{w.events[1].id}));
  // Request alone does not break the guard.
  DExecution alone = w;
  alone.events.erase(alone.events.begin() + 1);
  alone.guards[1].visible.clear();
  EXPECT_FALSE(violates_guard(c, alone));
}

TEST(Fixtures, SearchIsBounded) {
  Card c = load_card("counter.card");
  FixtureDomain tiny;
  tiny.budget = 10;
  auto fx = build_guard_fixture(c, "LE", tiny);
  EXPECT_FALSE(fx.with(c, Verdict::Undetermined).empty());
  EXPECT_LE(fx.transitions, tiny.budget);
}

TEST(Fixtures, RoundTrip) {
  for (const char* f : {"joint_account.card", "conspiring_booleans.card"}) {
    Card c = load_card(f);
    auto fx = build_fixture(c);
    const auto text = write_fixture(c, fx);
    EXPECT_EQ(write_fixture(c, read_fixture(c, text)), text) << f;
  }
  Card c = load_card("counter.card");
  EXPECT_THROW(read_fixture(c, "card\tCounter\nguard\tNope\n"), ParseError);
  EXPECT_THROW(read_fixture(c, "card\tFSM\n"), ParseError);
  EXPECT_THROW(read_fixture(c, "card\tCounter\nguard\tLE\nverdict\tSub\tmaybe\n"), ParseError);
}

// The checked-in fixtures are what the search produces now, and every stored
// witness replays to a guard violation.
TEST(Fixtures, CorpusFixturesAreCurrent) {
  for (const auto& f : kCards) {
    Card c = load_card(f);
    const auto stored_text = slurp(fixture_file(f));
    ASSERT_FALSE(stored_text.empty()) << "missing " << fixture_file(f);
    const auto stored = read_fixture(c, stored_text);
    EXPECT_EQ(write_fixture(c, build_fixture(c)), stored_text) << f;
    for (const auto& g : stored.guards) {
      EXPECT_TRUE(g.with(c, Verdict::Undetermined).empty()) << f << " " << g.guard;
      for (const auto& cls : g.with(c, Verdict::Conflicting)) {
        ASSERT_TRUE(g.witnesses.count(cls)) << f << " " << g.guard << " " << cls;
        EXPECT_TRUE(violates_guard(c, g.witnesses.at(cls))) << f << " " << g.guard << " " << cls;
      }
    }
  }
}

TEST(Fixtures, AgreeWithInference) {
  CARDKIT_REQUIRE_SOLVER(z3);
  for (const auto& f : kCards) {
    Card c = load_card(f);
    const auto stored = read_fixture(c, slurp(fixture_file(f)));
    for (const auto& rep : conflict_table(c, *z3)) {
      const auto* g = stored.find(rep.guard);
      ASSERT_NE(g, nullptr) << f << " " << rep.guard;
      EXPECT_EQ(compare_fixture(c, *g, rep), Names{}) << f << " " << rep.guard;
    }
  }
}
