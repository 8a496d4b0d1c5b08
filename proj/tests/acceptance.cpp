// One PASS/FAIL line per acceptance criterion.

#include <chrono>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "cardkit/cli.hpp"
#include "cardkit/error.hpp"
#include "cardkit/execution.hpp"
#include "cardkit/fixtures.hpp"
#include "cardkit/inference.hpp"
#include "cardkit/lambdaq.hpp"
#include "cardkit/replica_sim.hpp"
#include "cardkit/syntax.hpp"
#include "exec_oracle.hpp"
#include "support.hpp"

using namespace cardkit;
using namespace cardkit::test_support;

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass = false;
  std::string detail;
};

// Extracted executions of protocol runs (locking on), for criterion 9.
struct Extracted {
  std::shared_ptr<const Card> card;
  DExecution L;
  std::string origin;
};
std::vector<Extracted> g_extracted;

std::string fmt(double x, int prec = 2) {
  std::ostringstream o;
  o.setf(std::ios::fixed);
  o.precision(prec);
  o << x;
  return o.str();
}

std::string names(const std::vector<std::string>& xs) {
  std::string out = "{";
  for (std::size_t i = 0; i < xs.size(); ++i) out += (i ? ", " : "") + xs[i];
  return out + "}";
}

bool equivalent(const Expr& a, const Expr& b, const Checker& c) {
  return check_valid(implies(a, b), c).valid() && check_valid(implies(b, a), c).valid();
}

const OpDef& find_op(const std::vector<OpDef>& ops, const std::string& name) {
  for (const auto& o : ops)
    if (o.name == name) return o;
  throw Error("no operation " + name);
}

StoreValue bank(std::int64_t v) { return StoreValue{{Value::integer(v)}}; }

// ---------------------------------------------------------------------------

Outcome criterion1(const Checker& z3) {
  const std::map<std::string, std::pair<std::size_t, std::size_t>> expected = {
      {"Bank account", {4, 3}},           {"Bank account with reset", {4, 4}}, {"Conspiring booleans (2)", {4, 3}},
      {"Joint bank account", {6, 8}},     {"KV bank accounts (10)", {11, 9}}, {"State machine (3 states)", {3, 3}},
  };
  const auto t0 = Clock::now();
  auto rows = run_bench(default_corpus_dir(), z3);
  const double total = since(t0);
  bool ok = rows.size() == expected.size();
  double slowest = 0;
  std::vector<std::string> problems;
  for (const auto& r : rows) {
    auto want = expected.at(r.application);
    if (r.guards != want.first || r.effects != want.second) {
      ok = false;
      problems.push_back(r.application + " counts " + std::to_string(r.guards) + "/" + std::to_string(r.effects));
    }
    if (!r.fixture_match) {
      ok = false;
      for (const auto& m : r.mismatches) problems.push_back(r.application + ": " + m);
    }
    slowest = std::max(slowest, r.max_guard_millis);
    // Stored witnesses still replay to guard violations.
    Card card = parse_card(slurp(corpus_path(r.file)));
    const std::string fix = corpus_path("fixtures/" + r.file.substr(0, r.file.find('.')) + ".fix");
    Fixture fx = read_fixture(card, slurp(fix));
    for (const auto& g : fx.guards) {
      if (!g.with(card, Verdict::Undetermined).empty()) problems.push_back(r.application + " " + g.guard + " undetermined");
      for (const auto& [cls, w] : g.witnesses) {
        bool violated = false;
        for (const auto& v : check_well_formed(card, w)) violated |= v.condition == 2;
        if (!violated) {
          ok = false;
          problems.push_back(r.application + " " + g.guard + " witness for " + cls + " does not replay");
        }
      }
    }
  }
  if (slowest >= 2000) ok = false;
  if (total >= 30) ok = false;
  std::string detail = "6 applications, counts as in the table, all fixtures match; slowest guard " + fmt(slowest, 1) +
                       " ms (< 2000), total " + fmt(total) + " s (< 30)";
  if (!problems.empty()) {
    detail = "";
    for (const auto& p : problems) detail += p + "; ";
  }
  return {ok, detail};
}

Outcome criterion2(const Checker& z3) {
  Card c = parse_card(slurp(corpus_path("joint_account.card")));
  auto rep = tas_fixed_point(c, c.guard("LEApp"), z3);
  auto ias = immediate_accord_set(c, "LEApp", c.guard("LEApp").body, z3);
  const bool exact = rep.accord == std::vector<std::string>{"NoOp", "Add"};
  const bool chained = ias.in_accord("Request") && !rep.in_accord("Request");
  const bool ok = exact && rep.iterations >= 1 && chained && rep.status == AccordStatus::Converged;
  return {ok, "accord(LE && App) = " + names(rep.accord) + ", iterations " + std::to_string(rep.iterations) +
                  ", Request in immediate accord: " + (ias.in_accord("Request") ? "yes" : "no") +
                  ", in transitive accord: " + (rep.in_accord("Request") ? "yes" : "no")};
}

// Random linear guards over g.val/r.val and random parametric effects on the
// Counter schema.
class PairGen {
 public:
  explicit PairGen(std::uint32_t seed) : rng_(seed) {}

  int pick(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }

  Expr term(const std::vector<Expr>& atoms) {
    Expr t = int_lit(pick(-3, 3));
    const int k = pick(1, 2);
    for (int i = 0; i < k; ++i)
      t = plus(t, times(int_lit(pick(-3, 3)), atoms[static_cast<std::size_t>(pick(0, static_cast<int>(atoms.size()) - 1))]));
    return t;
  }

  Expr atom(const std::vector<Expr>& atoms) {
    Expr a = term(atoms), b = term(atoms);
    switch (pick(0, 3)) {
      case 0: return le(a, b);
      case 1: return lt(a, b);
      case 2: return eq(a, b);
      default: return ge(a, b);
    }
  }

  Expr formula(const std::vector<Expr>& atoms, int depth) {
    if (depth == 0) return atom(atoms);
    switch (pick(0, 3)) {
      case 0: return land(formula(atoms, depth - 1), formula(atoms, depth - 1));
      case 1: return lor(formula(atoms, depth - 1), formula(atoms, depth - 1));
      case 2: return implies(formula(atoms, depth - 1), formula(atoms, depth - 1));
      default: return atom(atoms);
    }
  }

 private:
  std::mt19937 rng_;
};

Outcome criterion3(const Checker& z3) {
  const auto t0 = Clock::now();
  Card base = parse_card(slurp(corpus_path("counter.card")));
  EnumerationChecker en;
  PairGen gen(31337);
  const Expr g = base.field_ref(StoreRef::global(), "val");
  const Expr r = base.field_ref(StoreRef::replica(), "val");
  const Expr s = base.field_ref(StoreRef::pre(), "val");
  const Expr n = var("n", Sort::integer());
  int contradictions = 0, valid = 0, invalid = 0, unknown = 0;
  std::string first;
  const int kPairs = 200;
  for (int i = 0; i < kPairs; ++i) {
    Card c = base;
    const Expr guard = gen.formula({g, r}, 2);
    std::string effect;
    if (i % 2 == 0) {
      effect = c.effects()[static_cast<std::size_t>(gen.pick(0, static_cast<int>(c.effects().size()) - 1))].name;
    } else {
      effect = "Rand";
      Expr constraint = gen.pick(0, 1) ? ge(n, int_lit(gen.pick(-2, 2))) : le(n, int_lit(gen.pick(-2, 4)));
      Expr rhs = plus(plus(times(int_lit(gen.pick(-1, 2)), s), times(int_lit(gen.pick(-1, 1)), n)), int_lit(gen.pick(-2, 2)));
      c.add_effect(effect, {ParamDecl{"n", Sort::integer(), constraint}}, {{"val", rhs}});
    }
    auto sol = immediate_accord(c, guard, c.effect(effect), z3);
    auto enu = immediate_accord(c, guard, c.effect(effect), en);
    if (!sol) ++unknown;
    else if (*sol) ++valid;
    else ++invalid;
    if (sol == std::optional<bool>(true) && enu == std::optional<bool>(false)) {
      ++contradictions;
      if (first.empty()) first = guard.to_string() + " / " + effect;
    }
  }
  const double secs = since(t0);
  const bool ok = contradictions == 0 && secs < 60 && valid > 0 && invalid > 0;
  std::string detail = std::to_string(kPairs) + " pairs: solver valid " + std::to_string(valid) + ", invalid " +
                       std::to_string(invalid) + ", unknown " + std::to_string(unknown) + "; contradictions " +
                       std::to_string(contradictions) + "; " + fmt(secs) + " s (< 60)";
  if (!first.empty()) detail += "; first: " + first;
  return {ok, detail};
}

Outcome criterion4(const Checker& z3) {
  Card card = parse_card(slurp(corpus_path("bank_account.card")));
  const auto ops = parse_ops(card, slurp(corpus_path("bank.ops")));
  const Expr phi = parse_spec_formula(card, "(s >= 0 -> s' >= 0) && a = s - s'");
  auto verdict = [&](OpDef op) {
    bool all = true;
    for (const auto& r : discharge(typecheck(card, op), z3)) all &= r.result.valid();
    return all;
  };
  OpDef w = find_op(ops, "withdraw");
  w.spec = phi;
  const bool withdraw_ok = verdict(w);
  OpDef d_literal = find_op(ops, "deposit");
  d_literal.spec = phi;
  const bool deposit_literal = verdict(d_literal);
  const bool deposit_own = verdict(find_op(ops, "deposit"));

  // Then-branch VC against the hand-written formula.
  const VC* then_vc = nullptr;
  auto vcs = typecheck(card, w);
  for (const auto& vc : vcs)
    if (vc.label.find("then") != std::string::npos && vc.label.find("specification") != std::string::npos) then_vc = &vc;
  bool vc_equiv = false;
  if (then_vc) {
    const Expr n = var("n", Sort::integer());
    const Expr s = card.field_ref(StoreRef::pre(), "val");
    const Expr s2 = card.field_ref(StoreRef::post(), "val");
    const Expr x = card.field_ref(StoreRef::snap("x"), "val");
    const Expr hand = implies(land({ge(n, int_lit(0)), le(x, s), ge(x, n), eq(s2, s - n)}),
                              land(implies(ge(s, int_lit(0)), ge(s2, int_lit(0))), eq(n, s - s2)));
    vc_equiv = equivalent(then_vc->formula, hand, z3);
  }

  int mutants_caught = 0;
  for (const char* body : {"query Top as x in if x >= n then emit (Sub(n), n) else emit (NoOp, 0)",
                           "query LE as x in if x <= n then emit (Sub(n), n) else emit (NoOp, 0)"}) {
    OpDef m = w;
    m.body = parse_term(body);
    for (const auto& r : discharge(typecheck(card, m), z3))
      if (r.result.invalid() && !r.result.witness.empty()) {
        ++mutants_caught;
        break;
      }
  }
  const bool ok = withdraw_ok && deposit_literal && vc_equiv && mutants_caught == 2;
  std::string detail = std::string("withdraw under phi: ") + (withdraw_ok ? "Valid" : "Invalid") +
                       "; then-branch VC equivalent to the hand formula: " + (vc_equiv ? "yes" : "no") +
                       "; mutants with witness: " + std::to_string(mutants_caught) + "/2; deposit (returns n) under "
                       "literal phi: " + (deposit_literal ? "Valid" : "Invalid") +
                       ", under a = s' - s: " + (deposit_own ? "Valid" : "Invalid");
  if (!deposit_literal) detail += " [deposit returns n, so a = s - s' cannot hold; see README]";
  return {ok, detail};
}

Outcome criterion5(const Checker& z3) {
  Card card = parse_card(slurp(corpus_path("bank_account.card")));
  const auto ops = parse_ops(card, slurp(corpus_path("bank.ops")));
  auto fx = [](const char* cls, std::int64_t n) { return EffectInstance{cls, {Value::integer(n)}}; };
  std::vector<std::string> problems;

  auto dep = op_execute(card, find_op(ops, "deposit"), {Value::integer(100)}, bank(0), {});
  if (!(dep.s == bank(0) && dep.psi.is_true() && dep.effect && *dep.effect == fx("Add", 100) && dep.ret &&
        *dep.ret == Value::integer(100)))
    problems.push_back("deposit replay");
  auto wd = op_execute(card, find_op(ops, "withdraw"), {Value::integer(10)}, bank(0),
                       {OpStep::drift(fx("Add", 100)), OpStep::query(bank(100))});
  if (!(wd.s == bank(100) && equivalent(wd.psi, parse_guard_formula(card, "g.val >= 100"), z3) && wd.effect &&
        *wd.effect == fx("Sub", 10) && wd.ret && *wd.ret == Value::integer(10)))
    problems.push_back("withdraw replay");
  auto sw = op_execute(card, find_op(ops, "swithdraw"), {Value::integer(10)}, bank(0),
                       {OpStep::query(bank(0)), OpStep::drift(fx("Add", 100)), OpStep::drift(fx("Sub", 10)),
                        OpStep::query(bank(90))});
  if (!(sw.s == bank(90) && equivalent(sw.psi, parse_guard_formula(card, "g.val >= 0 && g.val = 90"), z3) &&
        sw.effect && *sw.effect == fx("Sub", 10) && sw.ret && *sw.ret == Value::integer(10)))
    problems.push_back("swithdraw replay");

  Scenario sc = load_scenario(corpus_path("bank_sequence.scn"));
  AccordTable tas(sc.card, z3, LockMode::Tas);
  tas.prepare(sc);
  std::optional<std::uint64_t> seed;
  for (std::uint64_t s = 0; s < 2000 && !seed; ++s) {
    RunResult r = run(sc, &tas, {s, LockMode::Tas, 10'000});
    g_extracted.push_back({sc.card, r.extracted, "bank_sequence seed " + std::to_string(s)});
    std::vector<std::int64_t> prefixes;
    for (const auto& st : prefix_evaluations(*sc.card, r.extracted)) prefixes.push_back(st.fields[0].as_int());
    if (prefixes == std::vector<std::int64_t>{0, 100, 90, 80}) seed = s;
  }
  if (!seed) problems.push_back("no bank_sequence seed in 2000 gives 0 -> 100 -> 90 -> 80");
  std::string detail = "deposit (0, Top, R.(Add 100, 100)); withdraw (100, g >= 100, R.(Sub 10, 10)); swithdraw (90, "
                       "g >= 0 && g = 90, R.(Sub 10, 10))";
  if (seed) detail += "; bank_sequence seed " + std::to_string(*seed) + " extracts 0 -> 100 -> 90 -> 80";
  if (!problems.empty()) {
    detail.clear();
    for (const auto& p : problems) detail += p + "; ";
  }
  return {problems.empty(), detail};
}

Outcome criterion6(const Checker& z3) {
  Scenario sc = load_scenario(corpus_path("concurrent_withdraw.scn"));
  AccordTable tas(sc.card, z3, LockMode::Tas);
  tas.prepare(sc);
  const AccordMap accords = tas.accord_map();
  int failures = 0;
  std::size_t aborts = 0;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    RunResult r = run(sc, &tas, {seed, LockMode::Tas, 10'000});
    if (!check_run(sc, accords, r).passed()) ++failures;
    aborts += r.metrics.aborts;
    g_extracted.push_back({sc.card, r.extracted, "concurrent_withdraw seed " + std::to_string(seed)});
  }
  std::optional<std::uint64_t> minus4;
  for (std::uint64_t seed = 0; seed < 1000 && !minus4; ++seed) {
    RunResult r = run(sc, nullptr, {seed, LockMode::None, 10'000});
    if (r.global == bank(-4) && !check_invariant(*sc.card, r.extracted, *sc.invariant)) minus4 = seed;
  }
  std::size_t blocked = 0;
  int avail_runs = 0;
  for (const char* f : {"deposit_only.scn", "deposit_withdraw.scn"}) {
    Scenario a = load_scenario(corpus_path(f));
    AccordTable at(a.card, z3, LockMode::Tas);
    at.prepare(a);
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
      RunResult r = run(a, &at, {seed, LockMode::Tas, 10'000});
      blocked += r.metrics.blocked_emit_steps;
      if (!check_run(a, at.accord_map(), r).passed()) ++failures;
      g_extracted.push_back({a.card, r.extracted, std::string(f) + " seed " + std::to_string(seed)});
      ++avail_runs;
    }
  }
  const bool ok = failures == 0 && minus4 && blocked == 0;
  return {ok, "1000 locked runs: " + std::to_string(failures) + " failing (invariant, well-formed, careful, convergent), " +
                  std::to_string(aborts) + " aborts; --no-locks reaches -4 at seed " +
                  (minus4 ? std::to_string(*minus4) : std::string("none")) + "; " + std::to_string(avail_runs) +
                  " deposit-only/deposit+withdraw runs with " + std::to_string(blocked) + " blocked emit steps"};
}

Outcome criterion7(const Checker& z3) {
  Scenario sc = load_scenario(corpus_path("interest.scn"));
  AccordTable tas(sc.card, z3, LockMode::Tas);
  tas.prepare(sc);
  int divergent = 0;
  std::size_t locks = 0;
  std::set<StoreValue> finals;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    RunResult r = run(sc, &tas, {seed, LockMode::Tas, 10'000});
    bool same = r.quiescent;
    for (const auto& v : r.replica_values) same &= v == r.global;
    if (!same) ++divergent;
    for (const char* op : {"deposit", "interest"}) {
      auto it = r.metrics.lock_acquisitions.find(op);
      if (it != r.metrics.lock_acquisitions.end()) locks += it->second;
    }
    finals.insert(r.global);
    g_extracted.push_back({sc.card, r.extracted, "interest seed " + std::to_string(seed)});
  }
  const bool ok = divergent == 0 && locks == 0;
  return {ok, "200 runs: " + std::to_string(divergent) + " divergent, " + std::to_string(finals.size()) +
                  " distinct converged values, " + std::to_string(locks) + " locks taken by deposit/interest"};
}

Outcome criterion8(const Checker& z3) {
  const auto t0 = Clock::now();
  Scenario sc = load_scenario(corpus_path("joint_approval.scn"));
  auto app_violation = [&](const DExecution& L) {
    for (const auto& v : check_well_formed(*sc.card, L))
      if (v.condition == 2 && v.detail.find("App") != std::string::npos) return true;
    return false;
  };
  AccordTable ia(sc.card, z3, LockMode::ImmediateAccord);
  ia.prepare(sc);
  ExploreResult bad = explore(sc, &ia, LockMode::ImmediateAccord, 12, app_violation);
  AccordTable tas(sc.card, z3, LockMode::Tas);
  tas.prepare(sc);
  ExploreResult good = explore(sc, &tas, LockMode::Tas, 12, app_violation);
  const double secs = since(t0);
  const bool ok = bad.found && !good.found && secs < 300;
  return {ok, std::string("depth 12: immediate accord ") + (bad.found ? "reaches" : "does not reach") +
                  " an App violation (" + std::to_string(bad.nodes) + " states); transitive accord " +
                  (good.found ? "reaches one" : "reaches none") + " (" + std::to_string(good.nodes) + " states); " +
                  fmt(secs) + " s (< 300)"};
}

Outcome criterion9() {
  using namespace exec_oracle;
  Card bank_card = parse_card(slurp(corpus_path("bank_account.card")));
  std::mt19937 rng(9);
  std::map<int, int> hits;
  int disagreements = 0, clean = 0;
  for (int i = 0; i < 1000; ++i) {
    DExecution L = random_execution(rng);
    auto got = conditions(check_well_formed(bank_card, L));
    if (got != Oracle{L}.violated()) ++disagreements;
    for (int k : got) ++hits[k];
    if (got.empty()) ++clean;
  }
  int ill = 0;
  std::string first;
  for (const auto& x : g_extracted)
    if (!check_well_formed(*x.card, x.L).empty()) {
      ++ill;
      if (first.empty()) first = x.origin;
    }
  const bool ok = disagreements == 0 && hits[1] > 0 && hits[2] > 0 && hits[3] > 0 && clean > 0 && ill == 0 &&
                  !g_extracted.empty();
  std::string detail = "1000 random executions: " + std::to_string(disagreements) +
                       " disagreements with the oracle; condition hits ar/vis " + std::to_string(hits[1]) +
                       ", compliance " + std::to_string(hits[2]) + ", transitivity " + std::to_string(hits[3]) +
                       ", well-formed " + std::to_string(clean) + "; " + std::to_string(g_extracted.size()) +
                       " extracted executions, " + std::to_string(ill) + " ill-formed";
  if (!first.empty()) detail += " (first: " + first + ")";
  return {ok, detail};
}

}  // namespace

int main() {
  auto z3 = solver();
  int failed = 0;
  auto report = [&](int n, const std::function<Outcome()>& f) {
    Outcome o;
    const auto t0 = Clock::now();
    try {
      o = f();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::cout << "criterion " << n << ": " << (o.pass ? "PASS" : "FAIL") << "  (" << fmt(since(t0)) << " s) "
              << o.detail << std::endl;
  };
  if (!z3) {
    for (int n = 1; n <= 8; ++n) report(n, [] { return Outcome{false, "no SMT solver (set CARDKIT_SOLVER)"}; });
  } else {
    const Checker& c = *z3;
    report(1, [&] { return criterion1(c); });
    report(2, [&] { return criterion2(c); });
    report(3, [&] { return criterion3(c); });
    report(4, [&] { return criterion4(c); });
    report(5, [&] { return criterion5(c); });
    report(6, [&] { return criterion6(c); });
    report(7, [&] { return criterion7(c); });
    report(8, [&] { return criterion8(c); });
  }
  report(9, [] { return criterion9(); });
  std::cout << (failed ? std::to_string(failed) + " criteria failed" : std::string("all criteria passed")) << std::endl;
  return failed ? 1 : 0;
}
