#include "cardkit/inference.hpp"

#include <algorithm>
#include <chrono>

namespace cardkit {

std::string to_string(AccordStatus s) {
  switch (s) {
    case AccordStatus::Converged: return "Converged";
    case AccordStatus::FallbackUsed: return "FallbackUsed";
    case AccordStatus::Unknown: return "Unknown";
  }
  return "?";
}

bool AccordReport::in_accord(const std::string& effect) const {
  return std::find(accord.begin(), accord.end(), effect) != accord.end();
}

Expr immediate_accord_formula(const Card& card, const Expr& c, const EffectClass& e) {
  return implies(c, forall(e.binders(), implies(e.constraints(), apply_effect(card, c, e, Side::Global))));
}

std::optional<bool> immediate_accord(const Card& card, const Expr& c, const EffectClass& e, const Checker& checker) {
  if (e.is_identity()) return true;
  auto res = check_valid(immediate_accord_formula(card, c, e), checker);
  if (res.unknown()) return std::nullopt;
  return res.valid();
}

Expr wcp(const Card& card, const EffectClass& e, const Expr& c) {
  if (e.is_identity()) return c;
  return forall(e.binders(), implies(e.constraints(), apply_effect(card, c, e, Side::Both)));
}

namespace {

using Clock = std::chrono::steady_clock;

double millis_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

void classify(const Card& card, const Expr& inv, const Checker& checker, AccordReport& rep) {
  for (const auto& e : card.effects()) {
    auto ia = immediate_accord(card, inv, e, checker);
    if (!ia) {
      rep.unknown_effects.push_back(e.name);
      rep.conflict.push_back(e.name);
      rep.status = AccordStatus::Unknown;
    } else if (*ia) {
      rep.accord.push_back(e.name);
    } else {
      rep.conflict.push_back(e.name);
    }
  }
}

}  // namespace

AccordReport immediate_accord_set(const Card& card, const std::string& label, const Expr& c, const Checker& checker) {
  auto t0 = Clock::now();
  AccordReport rep;
  rep.guard = label;
  rep.invariant_used = c;
  classify(card, c, checker, rep);
  rep.millis = millis_since(t0);
  return rep;
}

AccordReport tas_fixed_point(const Card& card, const std::string& label, const Expr& c, const Checker& checker,
                             const InferenceOptions& opts) {
  auto t0 = Clock::now();
  AccordReport rep;
  rep.guard = label;

  Expr ci = c;
  bool converged = false;
  bool unknown = false;
  int i = 0;
  for (; i < std::max(1, opts.max_iter) && !unknown; ++i) {
    // c' = AND_e wcp(e, c_i), split per conjunct of c_i; keep only the parts
    // c_i does not already imply. c_i => c' holds iff nothing is kept.
    std::vector<Expr> fresh;
    for (const auto& e : card.effects()) {
      if (e.is_identity()) continue;
      for (const auto& k : conjuncts(ci)) {
        Expr w = wcp(card, e, k);
        if (std::find(fresh.begin(), fresh.end(), w) != fresh.end()) continue;
        auto res = check_valid(implies(ci, w), checker);
        if (res.unknown()) unknown = true;
        if (!res.valid()) fresh.push_back(w);
      }
    }
    if (fresh.empty()) {
      converged = true;
      break;
    }
    // An undecided step cannot be trusted to converge; fall back to EQ.
    if (unknown) break;
    fresh.insert(fresh.begin(), ci);
    ci = land(std::move(fresh));
  }

  if (converged) {
    rep.iterations = i;
    rep.invariant_used = ci;
    rep.status = AccordStatus::Converged;
  } else {
    rep.iterations = i;
    rep.invariant_used = land(c, card.guard(Card::kEq).body);
    rep.status = unknown ? AccordStatus::Unknown : AccordStatus::FallbackUsed;
  }
  classify(card, rep.invariant_used, checker, rep);
  rep.millis = millis_since(t0);
  return rep;
}

AccordReport tas_fixed_point(const Card& card, const GuardDef& c, const Checker& checker, const InferenceOptions& opts) {
  return tas_fixed_point(card, c.name, c.body, checker, opts);
}

std::vector<AccordReport> conflict_table(const Card& card, const Checker& checker, const InferenceOptions& opts) {
  std::vector<AccordReport> out;
  for (const auto& g : card.guards()) out.push_back(tas_fixed_point(card, g, checker, opts));
  return out;
}

}  // namespace cardkit
