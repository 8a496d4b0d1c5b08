#include <gtest/gtest.h>

#include "cardkit/error.hpp"
#include "cardkit/evaluate.hpp"
#include "cardkit/replica_sim.hpp"
#include "support.hpp"

using namespace cardkit;
using namespace cardkit::test_support;

namespace {

Scenario scenario(const std::string& file) { return load_scenario(corpus_path(file)); }

// "charge.ops" is a test-only operation that emits Sub without querying.
Scenario inline_scenario(const std::string& body) {
  return parse_scenario(body, [](const std::string& rel) -> std::string {
    if (rel == "charge.ops") return "op charge(n: {v: int | v >= 0}) : Op(BankAccount, int, a = s - s') = emit (Sub(n), n)";
    return slurp(corpus_path(rel));
  });
}

bool holds_everywhere(const Scenario& sc, const DExecution& L) {
  return !sc.invariant || check_invariant(*sc.card, L, *sc.invariant);
}

bool has_violation(const std::vector<Violation>& vs, int condition, const std::string& needle = "") {
  for (const auto& v : vs)
    if (v.condition == condition && v.detail.find(needle) != std::string::npos) return true;
  return false;
}

int find_action(const Simulator& sim, Action::Kind k, int replica) {
  auto acts = sim.enabled();
  for (std::size_t i = 0; i < acts.size(); ++i)
    if (acts[i].kind == k && acts[i].replica == replica) return static_cast<int>(i);
  return -1;
}

void fire(Simulator& sim, Action::Kind k, int replica) {
  int i = find_action(sim, k, replica);
  ASSERT_GE(i, 0) << to_string(k) << " not enabled for replica " << replica;
  sim.apply(sim.enabled()[static_cast<std::size_t>(i)]);
}

}  // namespace

TEST(Scenario, Parse) {
  Scenario sc = scenario("concurrent_withdraw.scn");
  EXPECT_EQ(sc.name, "concurrent_withdraw");
  EXPECT_EQ(sc.card->name(), "BankAccount");
  ASSERT_EQ(sc.replicas.size(), 2u);
  EXPECT_EQ(sc.replicas[1].ops[0].to_string(), "withdraw(7)");
  EXPECT_EQ(sc.s0, (StoreValue{{Value::integer(10)}}));
  ASSERT_TRUE(sc.invariant.has_value());

  Scenario j = scenario("joint_approval.scn");
  EXPECT_EQ(j.s0.to_string(j.card->schema()), "val=10 req=false app=false");

  const std::string head = "scenario { card BankAccount \"bank_account.card\"; ops \"bank.ops\"; ";
  EXPECT_THROW(inline_scenario(head + "replica a { nope(1); } }"), ParseError);
  EXPECT_THROW(inline_scenario(head + "replica a { withdraw(1, 2); } }"), ParseError);
  EXPECT_THROW(inline_scenario(head + "replica a { } replica a { } }"), ParseError);
  EXPECT_THROW(inline_scenario("scenario { card Other \"bank_account.card\"; }"), ParseError);
  EXPECT_THROW(inline_scenario(head + "init { nope = 1 } }"), ParseError);
  EXPECT_NO_THROW(inline_scenario(head + "}"));
}

TEST(Scenario, CorpusScenariosTypecheck) {
  CARDKIT_REQUIRE_SOLVER(z3);
  for (const char* f : {"concurrent_withdraw.scn", "deposit_only.scn", "deposit_withdraw.scn", "bank_sequence.scn", "joint_approval.scn",
                        "interest.scn"}) {
    auto errs = check_scenario(scenario(f), *z3);
    EXPECT_TRUE(errs.empty()) << f << ": " << (errs.empty() ? "" : errs[0]);
  }
}

TEST(ReplicaRules, LockWaitsForNonAccordEvents) {
  CARDKIT_REQUIRE_SOLVER(z3);
  Scenario sc = inline_scenario(
      "scenario { card BankAccount \"bank_account.card\"; ops \"bank.ops\"; ops \"charge.ops\"; init { val = 50 }"
      " replica a { withdraw(5); } replica b { charge(1); } replica c { deposit(3); } }");
  AccordTable tas(sc.card, *z3, LockMode::Tas);
  tas.prepare(sc);
  EXPECT_EQ(tas.accord({"LE"}), (std::set<std::string>{"NoOp", "Add"}));

  Simulator sim(sc, &tas, LockMode::Tas);
  // Empty network: any lock is enabled.
  EXPECT_GE(find_action(sim, Action::Kind::Lock, 0), 0);
  // An undelivered Add does not block LE.
  fire(sim, Action::Kind::Emit, 2);
  EXPECT_GE(find_action(sim, Action::Kind::Lock, 0), 0);
  // An undelivered Sub does, until it is pulled in.
  fire(sim, Action::Kind::Emit, 1);
  EXPECT_EQ(find_action(sim, Action::Kind::Lock, 0), -1);
  sim.apply({Action::Kind::Deliver, 0, 2});
  EXPECT_GE(find_action(sim, Action::Kind::Lock, 0), 0);
  fire(sim, Action::Kind::Lock, 0);
  fire(sim, Action::Kind::Query, 0);
  EXPECT_EQ(sim.trace().back(), "STEP 4 QUERY a LE x={val=49}");
}

TEST(ReplicaRules, EmitRespectsOtherLocks) {
  CARDKIT_REQUIRE_SOLVER(z3);
  Scenario sc = inline_scenario(
      "scenario { card BankAccount \"bank_account.card\"; ops \"bank.ops\"; init { val = 50 }"
      " replica a { withdraw(5); } replica b { withdraw(1); } replica c { deposit(3); } }");
  AccordTable tas(sc.card, *z3, LockMode::Tas);
  Simulator sim(sc, &tas, LockMode::Tas);
  fire(sim, Action::Kind::Lock, 0);
  fire(sim, Action::Kind::Lock, 1);
  fire(sim, Action::Kind::Query, 0);
  fire(sim, Action::Kind::Query, 1);
  // Both hold LE and want to emit Sub: each blocks the other.
  EXPECT_EQ(find_action(sim, Action::Kind::Emit, 0), -1);
  EXPECT_EQ(find_action(sim, Action::Kind::Emit, 1), -1);
  EXPECT_EQ(sim.blocked_emitters(), (std::vector<int>{0, 1}));
  // Add is permitted under LE.
  EXPECT_GE(find_action(sim, Action::Kind::Emit, 2), 0);
  fire(sim, Action::Kind::Emit, 2);
  // Deliver everything; then the larger replica aborts.
  while (find_action(sim, Action::Kind::Deliver, 0) >= 0) fire(sim, Action::Kind::Deliver, 0);
  while (find_action(sim, Action::Kind::Deliver, 1) >= 0) fire(sim, Action::Kind::Deliver, 1);
  ASSERT_TRUE(sim.enabled().empty());
  auto brk = sim.deadlock_breaker();
  ASSERT_TRUE(brk.has_value());
  EXPECT_EQ(brk->replica, 1);
  sim.apply(*brk);
  EXPECT_GE(find_action(sim, Action::Kind::Emit, 0), 0);

  // NoOp is always permitted.
  Scenario sc2 = inline_scenario(
      "scenario { card BankAccount \"bank_account.card\"; ops \"bank.ops\";"
      " replica a { withdraw(5); } replica b { withdraw(5); } }");
  Simulator s2(sc2, &tas, LockMode::Tas);
  fire(s2, Action::Kind::Lock, 0);
  fire(s2, Action::Kind::Lock, 1);
  fire(s2, Action::Kind::Query, 0);
  fire(s2, Action::Kind::Query, 1);
  EXPECT_GE(find_action(s2, Action::Kind::Emit, 0), 0);
  EXPECT_GE(find_action(s2, Action::Kind::Emit, 1), 0);
}

TEST(ReplicaRules, QueryAndDelivery) {
  Scenario sc = inline_scenario(
      "scenario { card BankAccount \"bank_account.card\"; ops \"bank.ops\";"
      " replica a { deposit(100); deposit(1); } replica b { balance(); } }");
  Simulator sim(sc, nullptr, LockMode::None);
  fire(sim, Action::Kind::Emit, 0);
  fire(sim, Action::Kind::Emit, 0);
  // Causal delivery: the second deposit depends on the first.
  EXPECT_GE(find_action(sim, Action::Kind::Deliver, 1), 0);
  EXPECT_EQ(sim.enabled()[static_cast<std::size_t>(find_action(sim, Action::Kind::Deliver, 1))].event, 1);
  for (auto a : sim.enabled()) EXPECT_FALSE(a.kind == Action::Kind::Deliver && a.event == 2);
  fire(sim, Action::Kind::Deliver, 1);
  fire(sim, Action::Kind::Query, 1);
  EXPECT_EQ(sim.trace().back(), "STEP 3 QUERY b LE x={val=100}");
  fire(sim, Action::Kind::Emit, 1);
  EXPECT_EQ(sim.history().back().rval, Value::integer(100));
  fire(sim, Action::Kind::Deliver, 1);
  EXPECT_TRUE(sim.quiescent() == false);
  while (!sim.enabled().empty()) sim.apply(sim.enabled().front());
  EXPECT_TRUE(sim.quiescent());
  EXPECT_EQ(sim.eval_global(), (StoreValue{{Value::integer(101)}}));
}

TEST(Simulation, ConcurrentWithdrawIsSafeWithLocks) {
  CARDKIT_REQUIRE_SOLVER(z3);
  Scenario sc = scenario("concurrent_withdraw.scn");
  AccordTable tas(sc.card, *z3, LockMode::Tas);
  tas.prepare(sc);
  std::size_t aborts = 0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    RunResult r = run(sc, &tas, {seed, LockMode::Tas, 10'000});
    ASSERT_TRUE(r.quiescent) << seed << ": " << r.failure;
    EXPECT_TRUE(r.convergent) << seed;
    EXPECT_TRUE(holds_everywhere(sc, r.extracted)) << seed;
    EXPECT_TRUE(check_well_formed(*sc.card, r.extracted).empty()) << seed;
    EXPECT_TRUE(check_careful(*sc.card, r.extracted, tas.accord_map()).empty()) << seed;
    EXPECT_GE(r.global.fields[0].as_int(), 0);
    aborts += r.metrics.aborts;
  }
  EXPECT_GT(aborts, 0u);
}

TEST(Simulation, ConcurrentWithdrawOverdraftsWithoutLocks) {
  Scenario sc = scenario("concurrent_withdraw.scn");
  bool overdraft = false;
  for (std::uint64_t seed = 0; seed < 1000 && !overdraft; ++seed) {
    RunResult r = run(sc, nullptr, {seed, LockMode::None, 10'000});
    ASSERT_TRUE(r.quiescent);
    EXPECT_TRUE(r.convergent);
    if (r.global.fields[0].as_int() == -4) {
      overdraft = true;
      // The later withdraw's LE guard fails against the earlier Sub.
      EXPECT_FALSE(check_well_formed(*sc.card, r.extracted).empty());
    }
  }
  EXPECT_TRUE(overdraft);
}

TEST(Simulation, AvailabilityScenariosNeverBlock) {
  CARDKIT_REQUIRE_SOLVER(z3);
  for (const char* f : {"deposit_only.scn", "deposit_withdraw.scn"}) {
    Scenario sc = scenario(f);
    AccordTable tas(sc.card, *z3, LockMode::Tas);
    tas.prepare(sc);
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      RunResult r = run(sc, &tas, {seed, LockMode::Tas, 10'000});
      ASSERT_TRUE(r.quiescent) << f;
      EXPECT_EQ(r.metrics.blocked_emit_steps, 0u) << f << " seed " << seed;
      EXPECT_EQ(r.metrics.aborts, 0u);
      EXPECT_TRUE(r.convergent);
      EXPECT_TRUE(check_well_formed(*sc.card, r.extracted).empty());
    }
  }
}

TEST(Simulation, SequentialPrefixEvaluations) {
  CARDKIT_REQUIRE_SOLVER(z3);
  Scenario sc = scenario("bank_sequence.scn");
  AccordTable tas(sc.card, *z3, LockMode::Tas);
  tas.prepare(sc);
  bool found = false;
  for (std::uint64_t seed = 0; seed < 2000 && !found; ++seed) {
    RunResult r = run(sc, &tas, {seed, LockMode::Tas, 10'000});
    ASSERT_TRUE(r.quiescent);
    EXPECT_TRUE(check_well_formed(*sc.card, r.extracted).empty());
    EXPECT_TRUE(check_careful(*sc.card, r.extracted, tas.accord_map()).empty());
    std::vector<std::int64_t> prefixes;
    for (const auto& s : prefix_evaluations(*sc.card, r.extracted)) prefixes.push_back(s.fields[0].as_int());
    if (prefixes == std::vector<std::int64_t>{0, 100, 90, 80}) {
      found = true;
      EXPECT_EQ(r.global, (StoreValue{{Value::integer(80)}}));
    }
  }
  EXPECT_TRUE(found);
}

TEST(Simulation, InterestConvergesWithoutLockingDepositOrInterest) {
  CARDKIT_REQUIRE_SOLVER(z3);
  Scenario sc = scenario("interest.scn");
  AccordTable tas(sc.card, *z3, LockMode::Tas);
  tas.prepare(sc);
  std::set<StoreValue> finals;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    RunResult r = run(sc, &tas, {seed, LockMode::Tas, 10'000});
    ASSERT_TRUE(r.quiescent);
    EXPECT_TRUE(r.convergent);
    EXPECT_EQ(r.metrics.lock_acquisitions.count("deposit"), 0u);
    EXPECT_EQ(r.metrics.lock_acquisitions.count("interest"), 0u);
    EXPECT_TRUE(check_well_formed(*sc.card, r.extracted).empty());
    finals.insert(r.global);
  }
  // Different interleavings of non-commuting effects, each convergent.
  EXPECT_GT(finals.size(), 1u);
}

TEST(Simulation, ArbitrationProperties) {
  CARDKIT_REQUIRE_SOLVER(z3);
  Scenario sc = scenario("interest.scn");
  AccordTable tas(sc.card, *z3, LockMode::Tas);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Simulator sim(sc, &tas, LockMode::Tas);
    std::mt19937_64 rng(seed);
    while (!sim.quiescent()) {
      auto acts = sim.enabled();
      if (acts.empty()) {
        auto b = sim.deadlock_breaker();
        if (!b) {
          sim.skip_to(sim.step() + 512);
          continue;
        }
        sim.apply(*b);
        continue;
      }
      sim.apply(acts[std::uniform_int_distribution<std::size_t>(0, acts.size() - 1)(rng)]);
    }
    std::set<std::pair<int, int>> keys;
    std::map<int, int> last_lamport;
    for (const auto& e : sim.history()) {
      EXPECT_TRUE(keys.insert({e.lamport, e.replica}).second);
      for (int d : e.deps) EXPECT_LT(sim.history()[static_cast<std::size_t>(d - 1)].lamport, e.lamport);
      // Emission order on one replica is program order.
      EXPECT_LT(last_lamport[e.replica], e.lamport);
      last_lamport[e.replica] = e.lamport;
    }
  }
}

TEST(Simulation, ChainedConflictNeedsTransitiveAccord) {
  CARDKIT_REQUIRE_SOLVER(z3);
  Scenario sc = scenario("joint_approval.scn");
  auto app_violation = [&](const DExecution& L) {
    return has_violation(check_well_formed(*sc.card, L), 2, "App");
  };
  AccordTable ia(sc.card, *z3, LockMode::ImmediateAccord);
  ia.prepare(sc);
  EXPECT_TRUE(ia.accord({"LE", "App"}).count("Request"));
  ExploreResult bad = explore(sc, &ia, LockMode::ImmediateAccord, 12, app_violation);
  EXPECT_TRUE(bad.found);

  AccordTable tas(sc.card, *z3, LockMode::Tas);
  tas.prepare(sc);
  EXPECT_EQ(tas.accord({"LE", "App"}), (std::set<std::string>{"NoOp", "Add"}));
  ExploreResult good = explore(sc, &tas, LockMode::Tas, 12, app_violation);
  EXPECT_FALSE(good.found);
  EXPECT_GT(good.nodes, 10u);
}
