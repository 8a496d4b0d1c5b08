#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cardkit/card.hpp"
#include "cardkit/validity.hpp"

namespace cardkit {

enum class AccordStatus { Converged, FallbackUsed, Unknown };
std::string to_string(AccordStatus s);

struct AccordReport {
  std::string guard;
  std::vector<std::string> accord;    // declaration order
  std::vector<std::string> conflict;  // declaration order
  Expr invariant_used = top();
  int iterations = 0;
  AccordStatus status = AccordStatus::Converged;
  double millis = 0;
  // Effects forced into conflict because a validity check was Unknown.
  std::vector<std::string> unknown_effects;

  bool in_accord(const std::string& effect) const;
};

struct InferenceOptions {
  int max_iter = 10;
};

// c(g, r) => forall params. constraints => c(e(g), r)
Expr immediate_accord_formula(const Card& card, const Expr& c, const EffectClass& e);
// nullopt when the checker answers Unknown.
std::optional<bool> immediate_accord(const Card& card, const Expr& c, const EffectClass& e, const Checker& checker);

// forall params. constraints => c[e(g)/g, e(r)/r]
Expr wcp(const Card& card, const EffectClass& e, const Expr& c);

// Immediate accord set of `c`; effects whose check is Unknown go to conflict.
AccordReport immediate_accord_set(const Card& card, const std::string& label, const Expr& c, const Checker& checker);

AccordReport tas_fixed_point(const Card& card, const std::string& label, const Expr& c, const Checker& checker,
                             const InferenceOptions& opts = {});
AccordReport tas_fixed_point(const Card& card, const GuardDef& c, const Checker& checker, const InferenceOptions& opts = {});

// One report per guard, in guard declaration order.
std::vector<AccordReport> conflict_table(const Card& card, const Checker& checker, const InferenceOptions& opts = {});

}  // namespace cardkit
