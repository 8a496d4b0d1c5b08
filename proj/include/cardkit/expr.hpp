#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "cardkit/value.hpp"

namespace cardkit {

// Which store state a field access reads. Global/Replica are the two sides of
// a guard (s_g, s_r); Pre/Post are the pre- and post-store of an event
// specification (s, s'), and also the "old value" inside effect assignments;
// Snapshot names a queried store bound in an operation.
enum class StoreKind { Global, Replica, Pre, Post, Snapshot };

struct StoreRef {
  StoreKind kind = StoreKind::Pre;
  std::string snapshot;  // only for Snapshot

  static StoreRef global() { return {StoreKind::Global, {}}; }
  static StoreRef replica() { return {StoreKind::Replica, {}}; }
  static StoreRef pre() { return {StoreKind::Pre, {}}; }
  static StoreRef post() { return {StoreKind::Post, {}}; }
  static StoreRef snap(std::string name) { return {StoreKind::Snapshot, std::move(name)}; }

  friend auto operator<=>(const StoreRef&, const StoreRef&) = default;
  friend bool operator==(const StoreRef&, const StoreRef&) = default;
};

enum class Op {
  IntLit,
  BoolLit,
  Field,
  Var,
  ArrayLit,
  Add,
  Sub,
  Mul,
  Neg,
  Select,
  Store,
  Ite,
  Eq,
  Le,
  Lt,
  Ge,
  Gt,
  Not,
  And,
  Or,
  Implies,
  Forall,
};

struct Binder {
  std::string name;
  Sort sort;
};

class Expr;
using Formula = Expr;
using Term = Expr;

// Immutable, shareable expression tree. Every node carries exactly one sort;
// the factory functions below reject ill-sorted construction with SortError.
class Expr {
 public:
  Op op() const { return n_->op; }
  const Sort& sort() const { return n_->sort; }

  std::int64_t int_value() const { return n_->ival; }
  bool bool_value() const { return n_->bval; }
  const std::string& name() const { return n_->name; }
  const StoreRef& store() const { return n_->store; }
  std::size_t slot() const { return n_->slot; }
  const std::vector<Expr>& kids() const { return n_->kids; }
  const Expr& kid(std::size_t i) const { return n_->kids.at(i); }
  const std::vector<Binder>& binders() const { return n_->binders; }

  bool is_true() const { return op() == Op::BoolLit && bool_value(); }
  bool is_false() const { return op() == Op::BoolLit && !bool_value(); }
  bool is_literal() const { return op() == Op::IntLit || op() == Op::BoolLit; }

  std::string to_string() const;

  // Structural equality.
  friend bool operator==(const Expr& a, const Expr& b);
  friend bool operator!=(const Expr& a, const Expr& b) { return !(a == b); }

 private:
  struct Node {
    Op op;
    Sort sort;
    std::int64_t ival = 0;
    bool bval = false;
    std::string name{};
    StoreRef store{};
    std::size_t slot = 0;
    std::vector<Expr> kids{};
    std::vector<Binder> binders{};
  };

  explicit Expr(std::shared_ptr<const Node> n) : n_(std::move(n)) {}
  static Expr make(Node n) { return Expr(std::make_shared<const Node>(std::move(n))); }

  friend struct ExprFactory;

  std::shared_ptr<const Node> n_;
};

Expr int_lit(std::int64_t v);
Expr bool_lit(bool v);
inline Expr top() { return bool_lit(true); }
inline Expr bottom() { return bool_lit(false); }
Expr field(StoreRef store, std::string name, std::size_t slot, Sort sort);
Expr var(std::string name, Sort sort);
// Literal for a concrete value; arrays become ArrayLit nodes.
Expr value_lit(const Value& v, const Sort& sort);

Expr plus(Expr a, Expr b);
Expr minus(Expr a, Expr b);
// At least one operand must be an integer literal (keeps the language linear).
Expr times(Expr a, Expr b);
Expr negate(Expr a);
Expr select(Expr array, Expr index);
Expr store(Expr array, Expr index, Expr value);
Expr ite(Expr c, Expr t, Expr e);
Expr eq(Expr a, Expr b);
Expr le(Expr a, Expr b);
Expr lt(Expr a, Expr b);
Expr ge(Expr a, Expr b);
Expr gt(Expr a, Expr b);
Expr lnot(Expr a);
Expr land(std::vector<Expr> parts);
Expr land(Expr a, Expr b);
Expr lor(std::vector<Expr> parts);
Expr lor(Expr a, Expr b);
Expr implies(Expr a, Expr b);
Expr forall(std::vector<Binder> binders, Expr body);

inline Expr operator+(Expr a, Expr b) { return plus(std::move(a), std::move(b)); }
inline Expr operator-(Expr a, Expr b) { return minus(std::move(a), std::move(b)); }
inline Expr operator*(Expr a, Expr b) { return times(std::move(a), std::move(b)); }

// Conjuncts of a (possibly nested) And; a single non-And formula yields itself.
std::vector<Expr> conjuncts(const Expr& f);

struct FieldKey {
  StoreRef store;
  std::string name;
  friend auto operator<=>(const FieldKey&, const FieldKey&) = default;
  friend bool operator==(const FieldKey&, const FieldKey&) = default;
};

struct FieldLeaf {
  StoreRef store;
  std::string name;
  std::size_t slot;
  Sort sort;
};

// Free variables with their sorts (bound quantifier variables excluded).
std::map<std::string, Sort> free_vars(const Expr& f);
// Distinct store-field accesses, ordered by (store, slot).
std::vector<FieldLeaf> field_leaves(const Expr& f);
bool mentions_store(const Expr& f, StoreKind kind);
// Integer literals used directly as array indices.
std::set<std::int64_t> literal_indices(const Expr& f);

using VarMap = std::map<std::string, Expr>;
using FieldMap = std::map<FieldKey, Expr>;

// Simultaneous, capture-avoiding substitution of free variables and of store
// field accesses. Bound variables that would capture a free variable of a
// replacement are renamed.
Expr substitute(const Expr& f, const VarMap& vars, const FieldMap& fields = {});

// Re-points every field access on `from` to `to`.
Expr retarget(const Expr& f, const StoreRef& from, const StoreRef& to);

// Replaces each forall whose integer binders all carry literal bounds in the
// antecedent (lo <= i && i <= hi -> ...) by the conjunction of its instances,
// when there are at most max_instances of them. The result is equivalent.
Expr expand_bounded_foralls(const Expr& f, std::size_t max_instances = 4096);

struct PrintOptions {
  // Print Pre-store accesses as bare field names (effect assignment syntax).
  bool bare_pre = false;
};

std::string to_string(const Expr& f, const PrintOptions& opts = {});

}  // namespace cardkit
