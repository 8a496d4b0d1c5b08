#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "cardkit/card.hpp"
#include "cardkit/execution.hpp"
#include "cardkit/inference.hpp"

namespace cardkit {

// Bounds of the concrete search behind the golden fixtures.
struct FixtureDomain {
  int value_lo = -2;  // initial int fields and focus cells
  int value_hi = 2;
  int param_lo = -1;  // non-index int parameters, filtered by constraints
  int param_hi = 2;
  int value_box = 4;    // states with an int outside [-box, box] are pruned
  int extra_cells = 2;  // array cells searched beyond those the guard names
  int max_cells = 2;
  int depth = 4;        // events before the guarded one
  std::size_t budget = 4'000'000;  // transitions per search
};

enum class Verdict { Safe, Conflicting, Undetermined };
std::string to_string(Verdict v);

struct GuardFixture {
  std::string guard;
  std::map<std::string, Verdict> verdicts;  // every effect class
  // One execution per conflicting class. The class occurs only in events the
  // guard does not see, and the guard fails at the last event.
  std::map<std::string, DExecution> witnesses;
  std::size_t transitions = 0;

  std::vector<std::string> with(const Card& card, Verdict v) const;  // declaration order
};

struct Fixture {
  std::string card;
  std::vector<GuardFixture> guards;

  const GuardFixture* find(const std::string& guard) const;
};

// Searches pairs (global, visible) reachable from equal stores by events the
// guard sees (applied to both) and events it does not see (global only,
// restricted to classes still presumed safe). A shortest violation whose
// unseen events share one class marks that class conflicting; the search then
// restarts without it. Violations mixing classes, and budget exhaustion, mark
// the involved classes undetermined.
GuardFixture build_guard_fixture(const Card& card, const std::string& guard, const FixtureDomain& dom = {});
Fixture build_fixture(const Card& card, const FixtureDomain& dom = {});

// key<TAB>value lines:
//   card      <name>
//   guard     <name>
//   verdict   <effect> safe|conflicting|undetermined
//   witness   <effect> <write_execution text on one line>
//   end
std::string write_fixture(const Card& card, const Fixture& f);
Fixture read_fixture(const Card& card, const std::string& text);

// Differences between a fixture and inference reports, ignoring undetermined
// classes. Empty when they agree.
std::vector<std::string> compare_fixture(const Card& card, const GuardFixture& f, const AccordReport& rep);

}  // namespace cardkit
