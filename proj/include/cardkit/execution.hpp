#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "cardkit/card.hpp"

namespace cardkit {

struct ActiveGuard {
  int id = 0;
  // Conjunction of named guards; {"LE", "App"} is LE && App.
  std::vector<std::string> guards;
  std::set<int> visible;  // event ids
};

struct Event {
  int id = 0;
  EffectInstance effect;
  Value rval;
  std::vector<int> guards;  // active guard ids, in query order
};

// Events are stored in arbitration order.
struct DExecution {
  StoreValue s0;
  std::vector<Event> events;
  std::map<int, ActiveGuard> guards;

  // Position of an event in arbitration order; throws Error for unknown ids.
  std::size_t position(int event_id) const;
  const Event& event(int event_id) const;
  const ActiveGuard& guard(int guard_id) const;
  // Event owning the guard; throws Error if none.
  const Event& owner(int guard_id) const;
};

// "LE && App"
std::string guard_label(const std::vector<std::string>& names);
Expr active_guard_body(const Card& card, const ActiveGuard& g);

StoreValue eval_execution(const Card& card, const DExecution& L);
// Events strictly before `event_id` with all their active guards.
DExecution pre_execution(const DExecution& L, int event_id);
// Events witnessed by the guard, in arbitration order, with their guards.
DExecution vis_execution(const DExecution& L, int guard_id);

struct Violation {
  // 0: structure, 1: ar respects vis, 2: guard compliance, 3: vis transitivity,
  // 4: carefulness.
  int condition = 0;
  std::string detail;
};

std::vector<Violation> check_well_formed(const Card& card, const DExecution& L);

// Accord sets keyed by guard_label of the active guard. A guard whose label is
// missing is treated as having only NoOp in accord.
using AccordMap = std::map<std::string, std::set<std::string>>;
std::vector<Violation> check_careful(const Card& card, const DExecution& L, const AccordMap& accords);

// Formula over s (Pre), s' (Post) and the variable `a`.
struct EventSpec {
  Expr phi;
};

bool event_satisfies(const Card& card, const DExecution& L, int event_id, const EventSpec& spec);
// I over s (Pre) holds at every prefix evaluation, s0 included.
bool check_invariant(const Card& card, const DExecution& L, const Expr& I);
// Prefix evaluations s0, after event 1, ..., after the last event.
std::vector<StoreValue> prefix_evaluations(const Card& card, const DExecution& L);

// Line format:
//   EXEC <card>
//   S0 <field>=<value> ...
//   EVENT <id> <Effect(args)> <rval> [<guard id> ...]
//   GUARD <id> <G1&&G2> [<event id> ...]
//   END
std::string write_execution(const Card& card, const DExecution& L);
DExecution read_execution(const Card& card, const std::string& text);

}  // namespace cardkit
