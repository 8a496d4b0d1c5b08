#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "cardkit/card.hpp"
#include "cardkit/execution.hpp"
#include "cardkit/inference.hpp"
#include "cardkit/lambdaq.hpp"

namespace cardkit {

struct Invocation {
  std::string op;
  std::vector<Value> args;
  std::string to_string() const;
};

struct ReplicaScript {
  std::string name;
  std::vector<Invocation> ops;
};

struct Scenario {
  std::string name;
  std::shared_ptr<const Card> card;
  std::string card_file;  // as written in the scenario
  std::vector<std::string> ops_files;
  std::vector<OpDef> ops;
  StoreValue s0;
  std::optional<Expr> invariant;  // over s (Pre)
  std::vector<ReplicaScript> replicas;

  const OpDef& op(const std::string& name) const;
};

// scenario name {
//   card BankAccount "bank_account.card";
//   ops "bank.ops";
//   init { val = 10 }
//   invariant s >= 0;
//   replica r1 { withdraw(7); }
//   replica r2 { withdraw(7); }
// }
// `read_file` resolves the quoted paths.
Scenario parse_scenario(std::string_view text, const std::function<std::string(const std::string&)>& read_file);
// Canonical text; parse_scenario of it gives back the same scenario.
std::string print_scenario(const Scenario& sc);
// Paths are resolved relative to the scenario file.
Scenario load_scenario(const std::string& path);

// Type errors and failed VCs of the operations the scenario invokes, plus
// unknown operations and arity errors. Empty when the scenario is valid.
std::vector<std::string> check_scenario(const Scenario& sc, const Checker& checker);

enum class LockMode { Tas, ImmediateAccord, None };

// Accord sets used by the lock and emit rules, keyed by query guard list.
class AccordTable {
 public:
  AccordTable(std::shared_ptr<const Card> card, const Checker& checker, LockMode mode);

  // Computes the sets for every query guard list the scenario's operations use.
  void prepare(const Scenario& sc);
  // Effect classes in accord with the conjunction; only NoOp for Unknown status.
  const std::set<std::string>& accord(const std::vector<std::string>& guards) const;
  const AccordReport& report(const std::vector<std::string>& guards) const;
  AccordMap accord_map() const;
  LockMode mode() const { return mode_; }

 private:
  struct Entry {
    AccordReport report;
    std::set<std::string> accord;
  };
  const Entry& entry(const std::vector<std::string>& guards) const;

  std::shared_ptr<const Card> card_;
  const Checker& checker_;
  LockMode mode_;
  mutable std::map<std::vector<std::string>, Entry> cache_;
  mutable std::map<std::string, std::vector<std::string>> labels_;  // as queried -> cache key
};

struct QueryRecord {
  std::vector<std::string> guards;
  std::set<int> visible;
  StoreValue snapshot;
};

struct EventRecord {
  int id = 0;
  int lamport = 0;
  int replica = 0;
  EffectInstance effect;
  Value rval;
  std::set<int> deps;
  std::string op;
  std::vector<QueryRecord> queries;  // of the invocation that emitted it
};

struct ReplicaState {
  int id = 0;
  std::string name;
  std::set<int> local;
  std::vector<Invocation> pending;  // front is next
  std::optional<OpCursor> cursor;
  std::optional<Invocation> current;
  std::vector<QueryRecord> queries;
  std::vector<std::vector<std::string>> lock;  // one entry per locked query guard
  std::size_t backoff_until = 0;
  int aborts = 0;
};

struct Action {
  enum class Kind { Lock, Query, Emit, Deliver, Abort } kind;
  int replica = 0;
  int event = 0;  // Deliver
};

std::string to_string(Action::Kind k);

struct SimMetrics {
  std::size_t steps = 0;
  std::size_t blocked_emit_steps = 0;
  std::size_t aborts = 0;
  std::map<std::string, std::size_t> lock_acquisitions;  // by operation name
};

// One network of replicas running the scenario's scripts.
class Simulator {
 public:
  // `table` may be null when mode is None.
  Simulator(const Scenario& sc, const AccordTable* table, LockMode mode);

  std::vector<Action> enabled() const;
  void apply(const Action& a);
  bool quiescent() const;
  // Replicas whose emitted effect is currently not permitted.
  std::vector<int> blocked_emitters() const;
  // When nothing can move: abort the largest-id lock holder that is blocked on
  // its own emit, else the largest-id lock holder.
  std::optional<Action> deadlock_breaker() const;

  const std::vector<EventRecord>& history() const { return history_; }
  const std::vector<ReplicaState>& replicas() const { return replicas_; }
  const std::vector<std::string>& trace() const { return trace_; }
  const SimMetrics& metrics() const { return metrics_; }
  SimMetrics& metrics() { return metrics_; }
  std::size_t step() const { return step_; }
  void skip_to(std::size_t step) { step_ = step; }
  // Exhaustive exploration retries aborted operations immediately.
  void set_backoff(bool on) { backoff_ = on; }

  // Events ordered by (lamport, replica); events in `among` only, or all.
  std::vector<const EventRecord*> arbitrated(const std::set<int>* among = nullptr) const;
  StoreValue eval_local(int replica) const;
  StoreValue eval_global() const;
  DExecution extract() const;
  // Canonical description of the state, for exploration.
  std::string key() const;

 private:
  bool permits(int replica, const EffectInstance& e) const;
  void normalize();
  void log(const std::string& rule, int replica, const std::string& detail);

  const Scenario* sc_;
  const AccordTable* table_;
  LockMode mode_;
  std::vector<EventRecord> history_;
  std::vector<ReplicaState> replicas_;
  std::vector<std::string> trace_;
  SimMetrics metrics_;
  std::size_t step_ = 0;
  bool backoff_ = true;
};

struct SimOptions {
  std::uint64_t seed = 0;
  LockMode mode = LockMode::Tas;
  std::size_t max_steps = 10'000;
};

struct RunResult {
  bool quiescent = false;
  std::string failure;
  std::vector<std::string> trace;
  DExecution extracted;
  SimMetrics metrics;
  StoreValue global;
  std::vector<StoreValue> replica_values;
  bool convergent = false;
};

RunResult run(const Scenario& sc, const AccordTable* table, const SimOptions& opts);

// Checks on the extracted execution of a run. Carefulness is judged against
// `accords` (normally the transitive accord sets, whatever the run's mode).
struct RunCheck {
  bool quiescent = false;
  std::vector<Violation> well_formed;
  std::vector<Violation> careful;
  bool invariant_holds = true;
  bool convergent = false;

  bool passed() const { return quiescent && well_formed.empty() && careful.empty() && invariant_holds && convergent; }
};

RunCheck check_run(const Scenario& sc, const AccordMap& accords, const RunResult& r);

struct ExploreResult {
  std::size_t nodes = 0;
  bool found = false;
  std::vector<std::string> trace;
  DExecution witness;
};

// Depth-first search over every enabled rule instance, up to `depth` rule
// firings, stopping at the first extracted execution satisfying `target`.
ExploreResult explore(const Scenario& sc, const AccordTable* table, LockMode mode, std::size_t depth,
                      const std::function<bool(const DExecution&)>& target);

}  // namespace cardkit
