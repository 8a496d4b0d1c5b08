#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "cardkit/card.hpp"
#include "cardkit/validity.hpp"

namespace cardkit {

class LqTerm;
using Lq = std::shared_ptr<const LqTerm>;

// Operation terms. Query and Emit may only appear in operation position.
class LqTerm {
 public:
  enum class Kind { Var, Int, Bool, Lam, App, Ite, Prim, Query, Emit, Field };

  Kind kind;
  std::string name;                 // Var, Lam param, Prim operator, Query binder, Emit effect, Field name
  std::int64_t ival = 0;            // Int
  bool bval = false;                // Bool
  std::vector<std::string> guards;  // Query: conjunction of guard names
  // Lam: body. App: fn, arg. Ite: cond, then, else. Prim: operands.
  // Query: body. Emit: effect args..., return value. Field: base.
  std::vector<Lq> kids;
};

namespace lq {
Lq var(std::string name);
Lq int_(std::int64_t v);
Lq bool_(bool v);
Lq lam(std::string param, Lq body);
Lq app(Lq fn, Lq arg);
Lq ite(Lq c, Lq t, Lq e);
// Operators: + - * neg = != < <= > >= && || !
Lq prim(std::string op, std::vector<Lq> args);
Lq query(std::vector<std::string> guards, std::string binder, Lq body);
Lq emit(std::string effect, std::vector<Lq> args, Lq ret);
Lq field(Lq base, std::string name);
// let x = v in body, as (fun x => body) v
Lq let(std::string x, Lq v, Lq body);
}  // namespace lq

std::string to_string(const Lq& t);

struct OpParam {
  std::string name;
  Sort sort = Sort::integer();
  Expr refinement = top();  // over the parameter as a variable
};

// op name(params) : Op(Card, A, phi) = body
struct OpDef {
  std::string name;
  std::vector<OpParam> params;
  Sort ret_sort = Sort::integer();
  Expr spec = top();  // over s (Pre), s' (Post) and variable a
  Lq body;
};

struct VC {
  std::string label;  // e.g. "emit Sub(n) / spec"
  Expr formula;
};

// Generates the verification conditions of `op` against its declared type.
// Throws TypeError for unbound names, sort mismatches, misplaced Query/Emit
// and branches that do not end in an emit.
std::vector<VC> typecheck(const Card& card, const OpDef& op);

struct VCResult {
  VC vc;
  CheckResult result;
};

std::vector<VCResult> discharge(const std::vector<VC>& vcs, const Checker& checker);

// Values of pure evaluation.
struct LqClosure;
using LqValue = std::variant<std::int64_t, bool, StoreValue, std::shared_ptr<const LqClosure>>;
using LqEnv = std::map<std::string, LqValue>;
struct LqClosure {
  std::string param;
  Lq body;
  LqEnv env;
};

std::string to_string(const LqValue& v);
// Scalar view: ints and bools as Values, single-field stores as their field.
Value to_value(const LqValue& v);

// Call-by-value evaluation of a pure term. Throws EvalError on stuck terms
// (including Query/Emit).
LqValue eval_pure(const Lq& t, const LqEnv& env = {}, const StoreSchema* schema = nullptr);

// Resumable operation evaluation: either waiting on a query or emitted.
struct OpCursor {
  struct Pending {
    std::vector<std::string> guards;
    std::string binder;
    Lq body;
    LqEnv env;
  };
  struct Emitted {
    EffectInstance effect;
    Value ret;
  };
  std::variant<Pending, Emitted> state;

  bool emitted() const { return std::holds_alternative<Emitted>(state); }
  const Pending& pending() const { return std::get<Pending>(state); }
  const Emitted& result() const { return std::get<Emitted>(state); }
};

OpCursor start_op(const Card& card, const OpDef& op, const std::vector<Value>& args);
// Answers the pending query with the store snapshot bound to its binder.
OpCursor resume_op(const Card& card, const OpCursor& cur, const StoreValue& snapshot);

// One step of a query/drift schedule.
struct OpStep {
  enum class Kind { Drift, Query } kind;
  EffectInstance effect;  // Drift
  StoreValue snapshot;    // Query

  static OpStep drift(EffectInstance e) { return {Kind::Drift, std::move(e), {}}; }
  static OpStep query(StoreValue s) { return {Kind::Query, {}, std::move(s)}; }
};

struct QueryClause {
  std::vector<std::string> guards;
  StoreValue snapshot;
};

struct OpExecState {
  StoreValue s;     // global store
  Expr psi;         // over Global fields
  std::optional<EffectInstance> effect;
  std::optional<Value> ret;
  std::vector<QueryClause> clauses;
};

// Replays `op args` from global store s0 under the schedule. Drift steps
// require psi to hold on the drifted store; query steps require the guard to
// relate the current store and the snapshot. Leftover drift steps after the
// emit are applied; leftover query steps are an error.
OpExecState op_execute(const Card& card, const OpDef& op, const std::vector<Value>& args, const StoreValue& s0,
                       const std::vector<OpStep>& steps);

// Checks the postcondition at a final state: psi holds at s and the spec
// holds for (s, effect(s), ret).
bool spec_holds_at(const Card& card, const OpDef& op, const OpExecState& st);

}  // namespace cardkit
