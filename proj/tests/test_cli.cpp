#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cardkit/cli.hpp"
#include "cardkit/replica_sim.hpp"
#include "support.hpp"

using namespace cardkit;
using namespace cardkit::test_support;

namespace fs = std::filesystem;

namespace {

struct Out {
  int code;
  std::string out;
  std::string err;
};

Out cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name, const std::string& text) {
  fs::path dir = fs::temp_directory_path() / "cardkit_cli_test";
  fs::create_directories(dir);
  fs::path p = dir / name;
  std::ofstream(p) << text;
  return p;
}

bool contains(const std::string& hay, const std::string& needle) { return hay.find(needle) != std::string::npos; }

}  // namespace

TEST(Cli, InferBankAccount) {
  CARDKIT_REQUIRE_SOLVER(z3);
  auto r = cli({"infer", corpus_path("bank_account.card"), "--machine"});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(contains(r.out, "guard\tLE\naccord\tNoOp Add\nconflict\tSub\n")) << r.out;
  auto joint = cli({"infer", corpus_path("joint_account.card"), "--machine"});
  EXPECT_TRUE(contains(joint.out, "guard\tLEApp\naccord\tNoOp Add\n")) << joint.out;
  // Human output carries timings; the machine form does not.
  auto human = cli({"infer", corpus_path("bank_account.card")});
  EXPECT_TRUE(contains(human.out, " ms\n"));
  EXPECT_FALSE(contains(r.out, " ms"));
}

TEST(Cli, NoOpOnlyCardHasNoConflicts) {
  CARDKIT_REQUIRE_SOLVER(z3);
  auto card = scratch("noop.card", "card Idle { store { x: int } init { x = 0 } guard Pos := r.x <= g.x }");
  auto r = cli({"infer", card.string(), "--machine"});
  EXPECT_EQ(r.code, 0) << r.err;
  std::istringstream lines(r.out);
  std::string line;
  int conflicts = 0;
  while (std::getline(lines, line))
    if (line.rfind("conflict\t", 0) == 0) {
      ++conflicts;
      EXPECT_EQ(line, "conflict\t");
    }
  EXPECT_EQ(conflicts, 3);
}

TEST(Cli, ExitCodes) {
  auto bad = scratch("bad.card", "card Broken { store { x: int }");
  EXPECT_EQ(cli({"infer", bad.string(), "--enumerate"}).code, exit_code::kParse);
  auto missing = cli({"infer", corpus_path("bank_account.card"), "--solver", "/nonexistent/z3"});
  EXPECT_EQ(missing.code, exit_code::kSolver) << missing.out << missing.err;
  EXPECT_EQ(cli({"frobnicate"}).code, exit_code::kUsage);
  EXPECT_EQ(cli({"--help"}).code, exit_code::kOk);
}

TEST(Cli, InferWithEnumeration) {
  auto r = cli({"infer", corpus_path("bank_account.card"), "--machine", "--enumerate"});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(contains(r.out, "guard\tLE\naccord\tNoOp Add\nconflict\tSub\n")) << r.out;
}

TEST(Cli, Typecheck) {
  CARDKIT_REQUIRE_SOLVER(z3);
  auto ok = cli({"typecheck", corpus_path("bank_account.card"), corpus_path("bank.ops"), "--machine"});
  EXPECT_EQ(ok.code, 0) << ok.out << ok.err;
  EXPECT_TRUE(contains(ok.out, "op\twithdraw\n"));
  EXPECT_TRUE(contains(ok.out, "vc\t"));
  auto mutant = scratch("mutant.ops",
                        "op withdraw(n: {v: int | v >= 0}) : Op(BankAccount, int, (s >= 0 -> s' >= 0) && a = s - s') =\n"
                        "  query Top as x in if x >= n then emit (Sub(n), n) else emit (NoOp, 0)\n"
                        "op noop() : Op(BankAccount, int, s' = s) = emit (NoOp, 0)\n");
  auto r = cli({"typecheck", corpus_path("bank_account.card"), mutant.string()});
  EXPECT_EQ(r.code, exit_code::kInvalid);
  EXPECT_TRUE(contains(r.out, "withdraw: Invalid"));
  EXPECT_TRUE(contains(r.out, "counterexample:"));
  EXPECT_TRUE(contains(r.out, "noop: Valid"));
}

TEST(Cli, SimulateWithAndWithoutLocks) {
  CARDKIT_REQUIRE_SOLVER(z3);
  const auto scn = corpus_path("concurrent_withdraw.scn");
  auto locked = cli({"simulate", scn, "--seeds", "50"});
  EXPECT_EQ(locked.code, 0) << locked.out;
  EXPECT_TRUE(contains(locked.out, "passed\t50\n"));
  auto unlocked = cli({"simulate", scn, "--seeds", "200", "--no-locks"});
  EXPECT_EQ(unlocked.code, exit_code::kCheck);
  EXPECT_TRUE(contains(unlocked.out, "val=-4")) << unlocked.out;

  auto one = cli({"simulate", scn, "--seed", "3"});
  EXPECT_EQ(one.code, 0);
  EXPECT_TRUE(contains(one.out, "STEP 1 "));
  EXPECT_TRUE(contains(one.out, "EXEC BankAccount"));
  EXPECT_TRUE(contains(one.out, "result\tpass\n"));
}

TEST(Cli, EmptyScenarioPasses) {
  CARDKIT_REQUIRE_SOLVER(z3);
  auto scn = scratch("empty.scn", "scenario empty { card BankAccount \"" + corpus_path("bank_account.card") +
                                      "\"; ops \"" + corpus_path("bank.ops") + "\"; invariant s >= 0; }");
  auto r = cli({"simulate", scn.string()});
  EXPECT_EQ(r.code, 0) << r.out << r.err;
  EXPECT_TRUE(contains(r.out, "result\tpass\n"));
}

TEST(Cli, ExploreFindsChainedConflictUnderImmediateAccord) {
  CARDKIT_REQUIRE_SOLVER(z3);
  const auto scn = corpus_path("joint_approval.scn");
  auto ia = cli({"simulate", scn, "--ia-only", "--explore-depth", "12"});
  EXPECT_EQ(ia.code, exit_code::kCheck) << ia.out;
  EXPECT_TRUE(contains(ia.out, "violation\tcondition 2"));
  auto tas = cli({"simulate", scn, "--explore-depth", "12"});
  EXPECT_EQ(tas.code, 0) << tas.out;
}

TEST(Cli, OutputsAreDeterministic) {
  CARDKIT_REQUIRE_SOLVER(z3);
  for (int i = 0; i < 3; ++i) {
    std::vector<std::string> args = {"simulate", corpus_path("interest.scn"), "--seed", std::to_string(11 * i)};
    EXPECT_EQ(cli(args).out, cli(args).out);
  }
  std::vector<std::string> inf = {"infer", corpus_path("joint_account.card"), "--machine"};
  EXPECT_EQ(cli(inf).out, cli(inf).out);
  std::vector<std::string> tc = {"typecheck", corpus_path("bank_account.card"), corpus_path("bank.ops"), "--machine"};
  EXPECT_EQ(cli(tc).out, cli(tc).out);
}

TEST(Cli, ScenarioRoundTrip) {
  for (const char* f : {"concurrent_withdraw.scn", "deposit_only.scn", "deposit_withdraw.scn", "bank_sequence.scn", "joint_approval.scn",
                        "interest.scn"}) {
    Scenario sc = load_scenario(corpus_path(f));
    const std::string once = print_scenario(sc);
    Scenario again = parse_scenario(once, [](const std::string& rel) { return slurp(corpus_path(rel)); });
    EXPECT_EQ(print_scenario(again), once) << f;
    EXPECT_EQ(again.s0, sc.s0) << f;
    ASSERT_EQ(again.replicas.size(), sc.replicas.size()) << f;
    for (std::size_t i = 0; i < sc.replicas.size(); ++i) {
      ASSERT_EQ(again.replicas[i].ops.size(), sc.replicas[i].ops.size()) << f;
      for (std::size_t j = 0; j < sc.replicas[i].ops.size(); ++j)
        EXPECT_EQ(again.replicas[i].ops[j].to_string(), sc.replicas[i].ops[j].to_string()) << f;
    }
  }
}

TEST(Cli, CheckExecution) {
  CARDKIT_REQUIRE_SOLVER(z3);
  auto good = scratch("good.exec",
                      "EXEC BankAccount S0 val=0 EVENT 1 Add(5) 5 EVENT 2 Sub(3) 3 1 GUARD 1 LE 1 END\n");
  auto r = cli({"check", corpus_path("bank_account.card"), good.string()});
  EXPECT_EQ(r.code, 0) << r.out;
  auto bad = scratch("bad.exec",
                     "EXEC BankAccount S0 val=5 EVENT 1 Sub(5) 5 EVENT 2 Sub(3) 3 1 GUARD 1 LE END\n");
  auto b = cli({"check", corpus_path("bank_account.card"), bad.string()});
  EXPECT_EQ(b.code, exit_code::kCheck) << b.out;
  EXPECT_TRUE(contains(b.out, "violation\tcareful"));
}
