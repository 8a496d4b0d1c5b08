#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cardkit/expr.hpp"
#include "cardkit/validity.hpp"
#include "cardkit/value.hpp"

namespace cardkit {

struct ParamDecl {
  std::string name;
  Sort sort;
  Expr constraint = top();  // over parameters only
};

// A parametric effect class. Assignments are indexed by schema slot and are
// terms over the Pre store (the old value) and the parameters as variables.
struct EffectClass {
  std::string name;
  std::vector<ParamDecl> params;
  std::vector<Expr> assignments;
  bool builtin = false;

  Expr constraints() const;
  std::vector<Binder> binders() const;
  bool is_identity() const;
};

struct GuardDef {
  std::string name;
  Expr body;  // over Global and Replica fields
  bool builtin = false;
};

class Card {
 public:
  static constexpr const char* kNoOp = "NoOp";
  static constexpr const char* kTop = "Top";
  static constexpr const char* kEq = "EQ";

  // Registers the builtin NoOp effect and the Top and EQ guards.
  Card(std::string name, StoreSchema schema, StoreValue init);

  // Fields without an assignment keep their value.
  void add_effect(std::string name, std::vector<ParamDecl> params, const std::map<std::string, Expr>& assignments);
  void add_guard(std::string name, Expr body);

  const std::string& name() const { return name_; }
  const StoreSchema& schema() const { return schema_; }
  const StoreValue& init() const { return init_; }
  void set_init(StoreValue v);
  const std::vector<EffectClass>& effects() const { return effects_; }
  const std::vector<GuardDef>& guards() const { return guards_; }

  const EffectClass* find_effect(const std::string& name) const;
  const GuardDef* find_guard(const std::string& name) const;
  const EffectClass& effect(const std::string& name) const;
  const GuardDef& guard(const std::string& name) const;

  // Field access on a given store, e.g. field_ref(StoreRef::global(), "val").
  Expr field_ref(const StoreRef& store, const std::string& name) const;
  // Conjunction of named guards ("LE && App"); empty list is Top.
  Expr guard_conjunction(const std::vector<std::string>& names) const;

 private:
  void check_fresh_name(const std::string& name) const;

  std::string name_;
  StoreSchema schema_;
  StoreValue init_;
  std::vector<EffectClass> effects_;
  std::vector<GuardDef> guards_;
};

struct EffectInstance {
  std::string cls;
  std::vector<Value> args;

  static EffectInstance noop() { return {Card::kNoOp, {}}; }
  // "Add(100)", "NoOp"
  std::string to_string() const;
  friend bool operator==(const EffectInstance&, const EffectInstance&) = default;
};

// Throws Error if the instance names an unknown class, has the wrong arity or
// sorts, or violates the parameter constraints.
void check_instance(const Card& card, const EffectInstance& e);

StoreValue denote_effect(const Card& card, const EffectInstance& e, const StoreValue& s);
bool guard_eval(const Card& card, const GuardDef& c, const StoreValue& s_g, const StoreValue& s_r);
bool guard_eval(const Card& card, const Expr& body, const StoreValue& s_g, const StoreValue& s_r);

// All violations: non-reflexive guards, unsatisfiable parameter constraints,
// non-conforming init.
std::vector<std::string> validate_card(const Card& card, const Checker& checker);

enum class Side { Global, Replica, Both };

// Replaces field accesses on the chosen side(s) by the effect's assignment
// terms. Parameters stay symbolic (as variables named after the parameters).
Expr apply_effect(const Card& card, const Expr& f, const EffectClass& e, Side side);
Expr apply_effect(const Card& card, const Expr& f, const EffectInstance& e, Side side);

// The effect's assignment terms retargeted to read from `store`, one per slot.
std::vector<Expr> effect_terms(const EffectClass& e, const StoreRef& store);

}  // namespace cardkit
