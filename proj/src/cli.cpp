#include "cardkit/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include <unistd.h>

#include "cardkit/error.hpp"
#include "cardkit/fixtures.hpp"
#include "cardkit/inference.hpp"
#include "cardkit/replica_sim.hpp"
#include "cardkit/syntax.hpp"

#ifndef CARDKIT_CORPUS_DIR
#define CARDKIT_CORPUS_DIR "corpus"
#endif

namespace cardkit {

namespace fs = std::filesystem;

std::unique_ptr<Checker> Config::checker() const {
  if (enumerate) return std::make_unique<EnumerationChecker>(domain);
  auto path = find_solver(solver);
  if (!path) throw SolverError("no SMT solver found (use --solver, CARDKIT_SOLVER or --enumerate)");
  if (::access(path->c_str(), X_OK) != 0) throw SolverError("solver " + *path + " is not executable");
  return std::make_unique<SolverChecker>(SolverConfig{*path, std::chrono::milliseconds(timeout_ms)});
}

std::string default_corpus_dir() { return CARDKIT_CORPUS_DIR; }

const std::vector<std::pair<std::string, std::string>>& bench_applications() {
  static const std::vector<std::pair<std::string, std::string>> apps = {
      {"Bank account", "bank_account.card"},
      {"Bank account with reset", "bank_reset.card"},
      {"Conspiring booleans (2)", "conspiring_booleans.card"},
      {"Joint bank account", "joint_account.card"},
      {"KV bank accounts (10)", "kv_bank.card"},
      {"State machine (3 states)", "fsm.card"},
  };
  return apps;
}

namespace {

std::string read_text(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Parse errors carry the file name.
template <class F>
auto parsing(const std::string& file, F f) -> decltype(f()) {
  try {
    return f();
  } catch (const ParseError& e) {
    throw ParseError(file + ":" + e.what(), e.line(), e.column());
  }
}

Card load_card_file(const std::string& path) {
  return parsing(path, [&] { return parse_card(read_text(path)); });
}

std::string fixture_path(const std::string& dir, const std::string& card_file) {
  return (fs::path(dir) / (fs::path(card_file).stem().string() + ".fix")).string();
}

std::string join(const std::vector<std::string>& xs, const std::string& sep = " ") {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) out += (i ? sep : "") + xs[i];
  return out;
}

std::string fmt_ms(double ms) {
  std::ostringstream o;
  o << std::fixed << std::setprecision(1) << ms;
  return o.str();
}

// ---------------------------------------------------------------------------

int cmd_infer(const Config& cfg, const std::string& file, bool ia_only, bool machine, std::ostream& out) {
  Card card = load_card_file(file);
  auto checker = cfg.checker();
  for (const auto& problem : validate_card(card, *checker)) throw Error(file + ": " + problem);
  bool unknown = false;
  if (machine) out << "card\t" << card.name() << "\n";
  for (const auto& g : card.guards()) {
    AccordReport rep = ia_only ? immediate_accord_set(card, g.name, g.body, *checker)
                               : tas_fixed_point(card, g, *checker, InferenceOptions{cfg.max_iter});
    if (rep.status == AccordStatus::Unknown || !rep.unknown_effects.empty()) unknown = true;
    if (machine) {
      out << "guard\t" << rep.guard << "\n"
          << "accord\t" << join(rep.accord) << "\n"
          << "conflict\t" << join(rep.conflict) << "\n"
          << "invariant\t" << rep.invariant_used.to_string() << "\n"
          << "iterations\t" << rep.iterations << "\n"
          << "status\t" << to_string(rep.status) << "\n";
      if (!rep.unknown_effects.empty()) out << "unknown\t" << join(rep.unknown_effects) << "\n";
      out << "end\n";
    } else {
      out << "guard " << rep.guard << "\n"
          << "  accord     {" << join(rep.accord, ", ") << "}\n"
          << "  conflict   {" << join(rep.conflict, ", ") << "}\n"
          << "  invariant  " << rep.invariant_used.to_string() << "\n"
          << "  iterations " << rep.iterations << ", " << to_string(rep.status) << ", " << fmt_ms(rep.millis)
          << " ms\n";
      if (!rep.unknown_effects.empty()) out << "  unknown    {" << join(rep.unknown_effects, ", ") << "}\n";
    }
  }
  return unknown ? exit_code::kSolver : exit_code::kOk;
}

int cmd_typecheck(const Config& cfg, const std::string& card_file, const std::string& ops_file, bool machine,
                  std::ostream& out) {
  Card card = load_card_file(card_file);
  auto ops = parsing(ops_file, [&] { return parse_ops(card, read_text(ops_file)); });
  auto checker = cfg.checker();
  bool invalid = false, unknown = false;
  for (const auto& op : ops) {
    std::string verdict = "Valid";
    std::vector<VCResult> results;
    std::string type_error;
    try {
      results = discharge(typecheck(card, op), *checker);
    } catch (const TypeError& e) {
      type_error = e.what();
      verdict = "Invalid";
    }
    for (const auto& r : results) {
      if (r.result.invalid()) verdict = "Invalid";
      else if (r.result.unknown() && verdict == "Valid") verdict = "Unknown";
    }
    invalid |= verdict == "Invalid";
    unknown |= verdict == "Unknown";
    if (machine) {
      out << "op\t" << op.name << "\n";
      for (const auto& r : results) {
        out << "vc\t" << r.vc.label << "\t" << to_string(r.result.status) << "\t" << r.vc.formula.to_string() << "\n";
        if (r.result.invalid()) out << "witness\t" << r.vc.label << "\t" << r.result.witness_string() << "\n";
      }
      if (!type_error.empty()) out << "type_error\t" << type_error << "\n";
      out << "verdict\t" << verdict << "\nend\n";
    } else {
      out << op.name << ": " << verdict << "\n";
      if (!type_error.empty()) out << "  type error: " << type_error << "\n";
      for (const auto& r : results) {
        out << "  [" << to_string(r.result.status) << "] " << r.vc.label << "\n"
            << "    " << r.vc.formula.to_string() << "\n";
        if (r.result.invalid()) out << "    counterexample: " << r.result.witness_string() << "\n";
        if (r.result.unknown() && !r.result.reason.empty()) out << "    reason: " << r.result.reason << "\n";
      }
    }
  }
  if (invalid) return exit_code::kInvalid;
  return unknown ? exit_code::kSolver : exit_code::kOk;
}

struct SimulateArgs {
  std::string file;
  std::uint64_t seed = 0;
  int seeds = 1;
  bool no_locks = false;
  bool ia_only = false;
  std::size_t max_steps = 10'000;
  std::size_t explore_depth = 0;
  bool quiet = false;
};

std::string check_summary(const RunCheck& c) {
  std::vector<std::string> bad;
  if (!c.quiescent) bad.push_back("not quiescent");
  if (!c.well_formed.empty()) bad.push_back("ill-formed");
  if (!c.careful.empty()) bad.push_back("not careful");
  if (!c.invariant_holds) bad.push_back("invariant violated");
  if (c.quiescent && !c.convergent) bad.push_back("divergent");
  return bad.empty() ? "pass" : join(bad, ", ");
}

int cmd_simulate(const Config& cfg, const SimulateArgs& a, std::ostream& out) {
  Scenario sc = load_scenario(a.file);
  auto checker = cfg.checker();
  auto problems = check_scenario(sc, *checker);
  if (!problems.empty()) {
    for (const auto& p : problems) out << "error\t" << p << "\n";
    return exit_code::kInvalid;
  }
  const LockMode mode = a.no_locks ? LockMode::None : a.ia_only ? LockMode::ImmediateAccord : LockMode::Tas;
  AccordTable tas(sc.card, *checker, LockMode::Tas);
  tas.prepare(sc);
  std::optional<AccordTable> ia;
  const AccordTable* table = &tas;
  if (mode == LockMode::ImmediateAccord) {
    ia.emplace(sc.card, *checker, LockMode::ImmediateAccord);
    ia->prepare(sc);
    table = &*ia;
  } else if (mode == LockMode::None) {
    table = nullptr;
  }
  const AccordMap accords = tas.accord_map();
  const Card& card = *sc.card;

  if (a.explore_depth > 0) {
    auto bad = [&](const DExecution& L) {
      return !check_well_formed(card, L).empty() || !check_careful(card, L, accords).empty() ||
             (sc.invariant && !check_invariant(card, L, *sc.invariant));
    };
    ExploreResult r = explore(sc, table, mode, a.explore_depth, bad);
    out << "explored\t" << r.nodes << "\n";
    if (!r.found) {
      out << "result\tno failing execution within depth " << a.explore_depth << "\n";
      return exit_code::kOk;
    }
    for (const auto& line : r.trace) out << line << "\n";
    out << write_execution(card, r.witness);
    for (const auto& v : check_well_formed(card, r.witness))
      out << "violation\tcondition " << v.condition << "\t" << v.detail << "\n";
    for (const auto& v : check_careful(card, r.witness, accords)) out << "violation\tcareful\t" << v.detail << "\n";
    if (sc.invariant && !check_invariant(card, r.witness, *sc.invariant)) out << "violation\tinvariant\n";
    out << "result\tfail\n";
    return exit_code::kCheck;
  }

  bool any_fail = false, any_stuck = false;
  std::map<std::string, std::size_t> finals;
  std::size_t passed = 0;
  std::optional<std::uint64_t> first_fail;
  for (int i = 0; i < a.seeds; ++i) {
    const std::uint64_t seed = a.seed + static_cast<std::uint64_t>(i);
    RunResult r = run(sc, table, SimOptions{seed, mode, a.max_steps});
    RunCheck c = check_run(sc, accords, r);
    const std::string summary = check_summary(c);
    if (!r.quiescent) any_stuck = true;
    if (!c.passed()) {
      any_fail = true;
      if (!first_fail) first_fail = seed;
    } else {
      ++passed;
    }
    ++finals[r.global.to_string(card.schema())];
    if (a.seeds == 1) {
      if (!a.quiet)
        for (const auto& line : r.trace) out << line << "\n";
      out << write_execution(card, r.extracted);
      out << "seed\t" << seed << "\n"
          << "steps\t" << r.metrics.steps << "\n"
          << "quiescent\t" << (c.quiescent ? "true" : "false") << "\n"
          << "well_formed\t" << (c.well_formed.empty() ? "ok" : std::to_string(c.well_formed.size()) + " violations")
          << "\n"
          << "careful\t" << (c.careful.empty() ? "ok" : std::to_string(c.careful.size()) + " violations") << "\n"
          << "invariant\t" << (!sc.invariant ? "none" : c.invariant_holds ? "ok" : "violated") << "\n"
          << "convergent\t" << (c.convergent ? "true" : "false") << "\n"
          << "aborts\t" << r.metrics.aborts << "\n"
          << "blocked_emit_steps\t" << r.metrics.blocked_emit_steps << "\n";
      for (const auto& [op, n] : r.metrics.lock_acquisitions) out << "locks\t" << op << "\t" << n << "\n";
      for (const auto& v : c.well_formed) out << "violation\tcondition " << v.condition << "\t" << v.detail << "\n";
      for (const auto& v : c.careful) out << "violation\tcareful\t" << v.detail << "\n";
      if (!r.failure.empty()) out << "failure\t" << r.failure << "\n";
      out << "final\t" << r.global.to_string(card.schema()) << "\n";
      out << "result\t" << summary << "\n";
    } else if (!c.passed()) {
      out << "seed\t" << seed << "\t" << summary << "\t" << r.global.to_string(card.schema()) << "\n";
    }
  }
  if (a.seeds != 1) {
    out << "runs\t" << a.seeds << "\n" << "passed\t" << passed << "\n";
    for (const auto& [s, n] : finals) out << "final\t" << s << "\t" << n << "\n";
    if (first_fail) out << "first_failure\t" << *first_fail << "\n";
    out << "result\t" << (any_fail ? "fail" : "pass") << "\n";
  }
  if (any_stuck) return exit_code::kNotQuiescent;
  return any_fail ? exit_code::kCheck : exit_code::kOk;
}

int cmd_bench(const Config& cfg, const std::string& corpus, bool machine, std::ostream& out) {
  auto checker = cfg.checker();
  auto rows = run_bench(corpus, *checker, cfg.max_iter);
  bool ok = true;
  if (machine) {
    for (const auto& r : rows) {
      out << "application\t" << r.application << "\n"
          << "guards\t" << r.guards << "\n"
          << "effects\t" << r.effects << "\n"
          << "fixture_match\t" << (r.fixture_match ? "true" : "false") << "\n";
      for (const auto& m : r.mismatches) out << "mismatch\t" << m << "\n";
      out << "end\n";
      ok &= r.fixture_match;
    }
    return ok ? exit_code::kOk : exit_code::kMismatch;
  }
  out << std::left << std::setw(26) << "Application" << std::right << std::setw(7) << "Guards" << std::setw(9)
      << "Effects" << std::setw(11) << "Time (ms)" << std::setw(15) << "Slowest guard" << std::setw(10) << "Minimal?"
      << "\n";
  for (const auto& r : rows) {
    out << std::left << std::setw(26) << r.application << std::right << std::setw(7) << r.guards << std::setw(9)
        << r.effects << std::setw(11) << fmt_ms(r.millis) << std::setw(15) << fmt_ms(r.max_guard_millis)
        << std::setw(10) << (r.fixture_match ? "Yes" : "No") << "\n";
    for (const auto& m : r.mismatches) out << "  mismatch: " << m << "\n";
    ok &= r.fixture_match;
  }
  return ok ? exit_code::kOk : exit_code::kMismatch;
}

int cmd_fixtures(const std::string& corpus, const std::string& out_dir, bool check, std::ostream& out) {
  std::vector<fs::path> cards;
  for (const auto& e : fs::directory_iterator(corpus))
    if (e.path().extension() == ".card") cards.push_back(e.path());
  std::sort(cards.begin(), cards.end());
  bool stale = false;
  if (!check) fs::create_directories(out_dir);
  for (const auto& p : cards) {
    Card card = load_card_file(p.string());
    const auto t0 = std::chrono::steady_clock::now();
    Fixture fx = build_fixture(card);
    const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    const std::string text = write_fixture(card, fx);
    const std::string target = fixture_path(out_dir, p.filename().string());
    std::size_t undetermined = 0;
    for (const auto& g : fx.guards) undetermined += g.with(card, Verdict::Undetermined).size();
    std::string status;
    if (check) {
      std::ifstream in(target);
      std::stringstream ss;
      if (in) ss << in.rdbuf();
      status = ss.str() == text ? "current" : "stale";
      stale |= status == "stale";
    } else {
      std::ofstream(target) << text;
      status = "written";
    }
    out << p.filename().string() << "\t" << status << "\t" << target << "\tundetermined=" << undetermined << "\t"
        << fmt_ms(ms) << " ms\n";
  }
  return stale ? exit_code::kMismatch : exit_code::kOk;
}

int cmd_check(const Config& cfg, const std::string& card_file, const std::string& exec_file, std::ostream& out) {
  auto card = std::make_shared<const Card>(load_card_file(card_file));
  DExecution L = parsing(exec_file, [&] { return read_execution(*card, read_text(exec_file)); });
  auto checker = cfg.checker();
  AccordTable tas(card, *checker, LockMode::Tas);
  for (const auto& [id, g] : L.guards) tas.accord(g.guards);
  int n = 0;
  for (const auto& v : check_well_formed(*card, L)) {
    out << "violation\tcondition " << v.condition << "\t" << v.detail << "\n";
    ++n;
  }
  for (const auto& v : check_careful(*card, L, tas.accord_map())) {
    out << "violation\tcareful\t" << v.detail << "\n";
    ++n;
  }
  out << "result\t" << (n ? "fail" : "pass") << "\n";
  return n ? exit_code::kCheck : exit_code::kOk;
}

}  // namespace

std::vector<BenchRow> run_bench(const std::string& corpus_dir, const Checker& checker, int max_iter) {
  std::vector<BenchRow> rows;
  for (const auto& [name, file] : bench_applications()) {
    BenchRow row;
    row.application = name;
    row.file = file;
    Card card = load_card_file((fs::path(corpus_dir) / file).string());
    row.guards = card.guards().size();
    row.effects = card.effects().size();
    const auto t0 = std::chrono::steady_clock::now();
    auto reps = conflict_table(card, checker, InferenceOptions{max_iter});
    row.millis = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    const std::string fix = fixture_path((fs::path(corpus_dir) / "fixtures").string(), file);
    Fixture fx;
    try {
      fx = read_fixture(card, read_text(fix));
    } catch (const Error& e) {
      row.mismatches.push_back(std::string("fixture: ") + e.what());
    }
    for (const auto& rep : reps) {
      row.max_guard_millis = std::max(row.max_guard_millis, rep.millis);
      if (rep.status != AccordStatus::Converged)
        row.mismatches.push_back(rep.guard + ": inference status " + to_string(rep.status));
      const GuardFixture* g = fx.find(rep.guard);
      if (!g) {
        if (!fx.card.empty()) row.mismatches.push_back(rep.guard + ": no fixture");
        continue;
      }
      for (auto& m : compare_fixture(card, *g, rep)) row.mismatches.push_back(std::move(m));
    }
    row.fixture_match = row.mismatches.empty();
    rows.push_back(std::move(row));
  }
  return rows;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Conflict-aware replicated data types: inference, type checking and simulation", "cardkit"};
  app.require_subcommand(1);
  Config cfg;
  if (const char* env = std::getenv("CARDKIT_SOLVER"); env && *env) cfg.solver = env;
  auto add_solver_opts = [&](CLI::App* sub) {
    sub->add_option("--solver", cfg.solver, "SMT solver binary (default: $CARDKIT_SOLVER, then z3/cvc5 on PATH)");
    sub->add_option("--timeout-ms", cfg.timeout_ms, "Solver timeout per query")->check(CLI::PositiveNumber);
    sub->add_flag("--enumerate", cfg.enumerate, "Use bounded enumeration instead of the solver");
    sub->add_option("--int-min", cfg.domain.int_min, "Enumeration: smallest integer");
    sub->add_option("--int-max", cfg.domain.int_max, "Enumeration: largest integer");
    sub->add_option("--param-max", cfg.domain.param_max, "Enumeration: largest parameter value")
        ->check(CLI::NonNegativeNumber);
    sub->add_option("--max-iter", cfg.max_iter, "Fixed-point iteration cap")->check(CLI::PositiveNumber);
  };

  bool machine = false;
  bool ia_only = false;
  std::string card_file, ops_file, exec_file;
  auto* infer = app.add_subcommand("infer", "Accord and conflict sets of every guard of a CARD");
  infer->add_option("card", card_file, "CARD file")->required();
  infer->add_flag("--ia-only", ia_only, "Immediate accord only, no fixed point");
  infer->add_flag("--machine", machine, "key<TAB>value output");
  add_solver_opts(infer);

  auto* tc = app.add_subcommand("typecheck", "Type check operations and dump their verification conditions");
  tc->add_option("card", card_file, "CARD file")->required();
  tc->add_option("ops", ops_file, "Operations file")->required();
  tc->add_flag("--machine", machine, "key<TAB>value output");
  add_solver_opts(tc);

  SimulateArgs sim;
  auto* simc = app.add_subcommand("simulate", "Run a scenario on simulated replicas");
  simc->add_option("scenario", sim.file, "Scenario file")->required();
  simc->add_option("--seed", sim.seed, "Scheduler seed (first seed with --seeds)");
  simc->add_option("--seeds", sim.seeds, "Number of consecutive seeds to run")->check(CLI::PositiveNumber);
  simc->add_flag("--no-locks", sim.no_locks, "Disable locking");
  simc->add_flag("--ia-only", sim.ia_only, "Lock with immediate accord sets");
  simc->add_option("--max-steps", sim.max_steps, "Rule firings before giving up")->check(CLI::PositiveNumber);
  simc->add_option("--explore-depth", sim.explore_depth, "Search all schedules up to this depth for a failure");
  simc->add_flag("--quiet", sim.quiet, "Omit the trace");
  add_solver_opts(simc);

  std::string corpus = default_corpus_dir();
  auto* bench = app.add_subcommand("bench", "Conflict tables of the six corpus applications");
  bench->add_option("--corpus", corpus, "Corpus directory");
  bench->add_flag("--machine", machine, "key<TAB>value output without timings");
  add_solver_opts(bench);

  std::string out_dir;
  bool check = false;
  auto* fix = app.add_subcommand("fixtures", "Rebuild the oracle fixtures of every corpus card");
  fix->add_option("--corpus", corpus, "Corpus directory");
  fix->add_option("--out", out_dir, "Output directory (default: <corpus>/fixtures)");
  fix->add_flag("--check", check, "Compare with the files on disk instead of writing");

  auto* chk = app.add_subcommand("check", "Check an execution file for well-formedness and carefulness");
  chk->add_option("card", card_file, "CARD file")->required();
  chk->add_option("execution", exec_file, "Execution file")->required();
  add_solver_opts(chk);

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? exit_code::kOk : exit_code::kUsage;
  }

  try {
    if (infer->parsed()) return cmd_infer(cfg, card_file, ia_only, machine, out);
    if (tc->parsed()) return cmd_typecheck(cfg, card_file, ops_file, machine, out);
    if (simc->parsed()) {
      if (sim.no_locks && sim.ia_only) {
        err << "error: --no-locks and --ia-only exclude each other\n";
        return exit_code::kUsage;
      }
      return cmd_simulate(cfg, sim, out);
    }
    if (bench->parsed()) return cmd_bench(cfg, corpus, machine, out);
    if (fix->parsed()) return cmd_fixtures(corpus, out_dir.empty() ? corpus + "/fixtures" : out_dir, check, out);
    if (chk->parsed()) return cmd_check(cfg, card_file, exec_file, out);
  } catch (const ParseError& e) {
    err << "parse error: " << e.what() << "\n";
    return exit_code::kParse;
  } catch (const SolverError& e) {
    err << "solver error: " << e.what() << "\n";
    return exit_code::kSolver;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code::kParse;
  }
  return exit_code::kUsage;
}

}  // namespace cardkit
