#include "cardkit/expr.hpp"

#include <algorithm>
#include <functional>
#include <optional>
#include <sstream>

#include "cardkit/error.hpp"

namespace cardkit {

struct ExprFactory {
  using Node = Expr::Node;

  static Expr make(Node n) { return Expr(std::make_shared<const Node>(std::move(n))); }

  static Expr node(Op op, Sort sort, std::vector<Expr> kids) {
    return make(Node{.op = op, .sort = std::move(sort), .kids = std::move(kids)});
  }

  static Expr leaf_int(std::int64_t v) { return make(Node{.op = Op::IntLit, .sort = Sort::integer(), .ival = v}); }
  static Expr leaf_bool(bool v) { return make(Node{.op = Op::BoolLit, .sort = Sort::boolean(), .bval = v}); }

  static Expr leaf_field(StoreRef store, std::string name, std::size_t slot, Sort sort) {
    return make(Node{.op = Op::Field, .sort = std::move(sort), .name = std::move(name), .store = std::move(store), .slot = slot});
  }

  static Expr leaf_var(std::string name, Sort sort) {
    return make(Node{.op = Op::Var, .sort = std::move(sort), .name = std::move(name)});
  }

  static Expr quantifier(std::vector<Binder> binders, Expr body) {
    return make(Node{.op = Op::Forall, .sort = Sort::boolean(), .kids = {std::move(body)}, .binders = std::move(binders)});
  }

  // Rebuild a node with new children, keeping every other attribute.
  static Expr with_kids(const Expr& e, std::vector<Expr> kids) {
    Node n = *e.n_;
    n.kids = std::move(kids);
    return make(std::move(n));
  }

  static Expr with_store(const Expr& e, StoreRef store) {
    Node n = *e.n_;
    n.store = std::move(store);
    return make(std::move(n));
  }

  static bool same_node(const Expr& a, const Expr& b) { return a.n_ == b.n_; }
};

namespace {

std::string op_name(Op op) {
  switch (op) {
    case Op::Add: return "+";
    case Op::Sub: return "-";
    case Op::Mul: return "*";
    case Op::Eq: return "=";
    case Op::Le: return "<=";
    case Op::Lt: return "<";
    case Op::Ge: return ">=";
    case Op::Gt: return ">";
    default: return "?";
  }
}

void require_int(const Expr& e, const char* where) {
  if (!e.sort().is_int()) throw SortError(std::string(where) + ": expected int operand, got " + e.sort().to_string() + " in '" + e.to_string() + "'");
}

void require_bool(const Expr& e, const char* where) {
  if (!e.sort().is_bool()) throw SortError(std::string(where) + ": expected bool operand, got " + e.sort().to_string() + " in '" + e.to_string() + "'");
}

bool is_int_lit(const Expr& e) { return e.op() == Op::IntLit; }

Expr compare(Op op, Expr a, Expr b) {
  require_int(a, op_name(op).c_str());
  require_int(b, op_name(op).c_str());
  if (is_int_lit(a) && is_int_lit(b)) {
    auto x = a.int_value(), y = b.int_value();
    switch (op) {
      case Op::Le: return bool_lit(x <= y);
      case Op::Lt: return bool_lit(x < y);
      case Op::Ge: return bool_lit(x >= y);
      case Op::Gt: return bool_lit(x > y);
      default: break;
    }
  }
  if (a == b) return bool_lit(op == Op::Le || op == Op::Ge);
  return ExprFactory::node(op, Sort::boolean(), {std::move(a), std::move(b)});
}

}  // namespace

bool operator==(const Expr& a, const Expr& b) {
  if (ExprFactory::same_node(a, b)) return true;
  if (a.op() != b.op() || a.sort() != b.sort()) return false;
  switch (a.op()) {
    case Op::IntLit:
      return a.int_value() == b.int_value();
    case Op::BoolLit:
      return a.bool_value() == b.bool_value();
    case Op::Field:
      return a.store() == b.store() && a.name() == b.name();
    case Op::Var:
      return a.name() == b.name();
    case Op::Forall:
      if (a.binders().size() != b.binders().size()) return false;
      for (std::size_t i = 0; i < a.binders().size(); ++i)
        if (a.binders()[i].name != b.binders()[i].name || a.binders()[i].sort != b.binders()[i].sort) return false;
      break;
    default:
      break;
  }
  if (a.kids().size() != b.kids().size()) return false;
  for (std::size_t i = 0; i < a.kids().size(); ++i)
    if (!(a.kid(i) == b.kid(i))) return false;
  return true;
}

Expr int_lit(std::int64_t v) { return ExprFactory::leaf_int(v); }
Expr bool_lit(bool v) { return ExprFactory::leaf_bool(v); }

Expr field(StoreRef store, std::string name, std::size_t slot, Sort sort) {
  if (store.kind == StoreKind::Snapshot && store.snapshot.empty()) throw SortError("snapshot store reference needs a name");
  return ExprFactory::leaf_field(std::move(store), std::move(name), slot, std::move(sort));
}

Expr var(std::string name, Sort sort) {
  if (name.empty()) throw SortError("variable needs a name");
  return ExprFactory::leaf_var(std::move(name), std::move(sort));
}

Expr value_lit(const Value& v, const Sort& sort) {
  if (!v.conforms(sort)) throw SortError("value " + v.to_string() + " does not conform to " + sort.to_string());
  switch (sort.kind()) {
    case Sort::Kind::Int:
      return int_lit(v.as_int());
    case Sort::Kind::Bool:
      return bool_lit(v.as_bool());
    case Sort::Kind::Array: {
      std::vector<Expr> elems;
      for (const auto& e : v.as_array()) elems.push_back(value_lit(e, sort.element()));
      return ExprFactory::node(Op::ArrayLit, sort, std::move(elems));
    }
  }
  throw SortError("unreachable sort");
}

Expr plus(Expr a, Expr b) {
  require_int(a, "+");
  require_int(b, "+");
  if (is_int_lit(a) && is_int_lit(b)) return int_lit(a.int_value() + b.int_value());
  if (is_int_lit(b) && b.int_value() == 0) return a;
  if (is_int_lit(a) && a.int_value() == 0) return b;
  return ExprFactory::node(Op::Add, Sort::integer(), {std::move(a), std::move(b)});
}

Expr minus(Expr a, Expr b) {
  require_int(a, "-");
  require_int(b, "-");
  if (is_int_lit(a) && is_int_lit(b)) return int_lit(a.int_value() - b.int_value());
  if (is_int_lit(b) && b.int_value() == 0) return a;
  return ExprFactory::node(Op::Sub, Sort::integer(), {std::move(a), std::move(b)});
}

Expr times(Expr a, Expr b) {
  require_int(a, "*");
  require_int(b, "*");
  if (!is_int_lit(a) && !is_int_lit(b))
    throw SortError("non-linear product '" + a.to_string() + " * " + b.to_string() + "': one operand must be a literal");
  if (is_int_lit(a) && is_int_lit(b)) return int_lit(a.int_value() * b.int_value());
  if (is_int_lit(a) && a.int_value() == 1) return b;
  if (is_int_lit(b) && b.int_value() == 1) return a;
  if ((is_int_lit(a) && a.int_value() == 0) || (is_int_lit(b) && b.int_value() == 0)) return int_lit(0);
  return ExprFactory::node(Op::Mul, Sort::integer(), {std::move(a), std::move(b)});
}

Expr negate(Expr a) {
  require_int(a, "unary -");
  if (is_int_lit(a)) return int_lit(-a.int_value());
  if (a.op() == Op::Neg) return a.kid(0);
  return ExprFactory::node(Op::Neg, Sort::integer(), {std::move(a)});
}

Expr select(Expr array, Expr index) {
  if (!array.sort().is_array()) throw SortError("select on non-array '" + array.to_string() + "'");
  require_int(index, "select index");
  if (is_int_lit(index)) {
    auto i = index.int_value();
    if (array.op() == Op::ArrayLit && i >= 0 && static_cast<std::size_t>(i) < array.kids().size())
      return array.kid(static_cast<std::size_t>(i));
    if (array.op() == Op::Store && is_int_lit(array.kid(1))) {
      if (array.kid(1).int_value() == i) return array.kid(2);
      return select(array.kid(0), std::move(index));
    }
  }
  Sort elem = array.sort().element();
  return ExprFactory::node(Op::Select, std::move(elem), {std::move(array), std::move(index)});
}

Expr store(Expr array, Expr index, Expr value) {
  if (!array.sort().is_array()) throw SortError("store on non-array '" + array.to_string() + "'");
  require_int(index, "store index");
  if (value.sort() != array.sort().element())
    throw SortError("store value sort " + value.sort().to_string() + " does not match element sort " + array.sort().element().to_string());
  Sort s = array.sort();
  return ExprFactory::node(Op::Store, std::move(s), {std::move(array), std::move(index), std::move(value)});
}

Expr ite(Expr c, Expr t, Expr e) {
  require_bool(c, "if condition");
  if (t.sort() != e.sort())
    throw SortError("if branches have different sorts: " + t.sort().to_string() + " vs " + e.sort().to_string());
  if (c.is_true()) return t;
  if (c.is_false()) return e;
  if (t == e) return t;
  if (t.sort().is_bool() && t.is_true() && e.is_false()) return c;
  Sort s = t.sort();
  return ExprFactory::node(Op::Ite, std::move(s), {std::move(c), std::move(t), std::move(e)});
}

Expr eq(Expr a, Expr b) {
  if (a.sort() != b.sort())
    throw SortError("= between " + a.sort().to_string() + " and " + b.sort().to_string() + " in '" + a.to_string() + " = " + b.to_string() + "'");
  if (a.is_literal() && b.is_literal()) return bool_lit(a == b);
  if (a == b) return top();
  return ExprFactory::node(Op::Eq, Sort::boolean(), {std::move(a), std::move(b)});
}

Expr le(Expr a, Expr b) { return compare(Op::Le, std::move(a), std::move(b)); }
Expr lt(Expr a, Expr b) { return compare(Op::Lt, std::move(a), std::move(b)); }
Expr ge(Expr a, Expr b) { return compare(Op::Ge, std::move(a), std::move(b)); }
Expr gt(Expr a, Expr b) { return compare(Op::Gt, std::move(a), std::move(b)); }

Expr lnot(Expr a) {
  require_bool(a, "!");
  if (a.op() == Op::BoolLit) return bool_lit(!a.bool_value());
  if (a.op() == Op::Not) return a.kid(0);
  return ExprFactory::node(Op::Not, Sort::boolean(), {std::move(a)});
}

namespace {

Expr junction(Op op, std::vector<Expr> parts) {
  const bool is_and = op == Op::And;
  std::vector<Expr> flat;
  std::function<void(const Expr&)> add = [&](const Expr& p) {
    require_bool(p, is_and ? "&&" : "||");
    if (p.op() == op) {
      for (const auto& k : p.kids()) add(k);
      return;
    }
    flat.push_back(p);
  };
  for (const auto& p : parts) add(p);
  std::vector<Expr> kept;
  for (auto& p : flat) {
    if (p.op() == Op::BoolLit) {
      if (p.bool_value() != is_and) return bool_lit(!is_and);
      continue;
    }
    if (std::find(kept.begin(), kept.end(), p) == kept.end()) kept.push_back(std::move(p));
  }
  if (kept.empty()) return bool_lit(is_and);
  if (kept.size() == 1) return kept.front();
  return ExprFactory::node(op, Sort::boolean(), std::move(kept));
}

}  // namespace

Expr land(std::vector<Expr> parts) { return junction(Op::And, std::move(parts)); }
Expr land(Expr a, Expr b) { return land(std::vector<Expr>{std::move(a), std::move(b)}); }
Expr lor(std::vector<Expr> parts) { return junction(Op::Or, std::move(parts)); }
Expr lor(Expr a, Expr b) { return lor(std::vector<Expr>{std::move(a), std::move(b)}); }

Expr implies(Expr a, Expr b) {
  require_bool(a, "->");
  require_bool(b, "->");
  if (a.is_true()) return b;
  if (a.is_false() || b.is_true()) return top();
  if (a == b) return top();
  return ExprFactory::node(Op::Implies, Sort::boolean(), {std::move(a), std::move(b)});
}

Expr forall(std::vector<Binder> binders, Expr body) {
  require_bool(body, "forall body");
  for (const auto& b : binders)
    if (b.sort.is_array()) throw SortError("quantifier over array variable '" + b.name + "'");
  // Drop binders that do not occur free in the body.
  auto fv = free_vars(body);
  std::vector<Binder> used;
  for (auto& b : binders)
    if (fv.count(b.name)) used.push_back(std::move(b));
  if (used.empty() || body.op() == Op::BoolLit) return body;
  return ExprFactory::quantifier(std::move(used), std::move(body));
}

std::vector<Expr> conjuncts(const Expr& f) {
  if (f.op() == Op::And) return f.kids();
  if (f.is_true()) return {};
  return {f};
}

namespace {

void collect_free(const Expr& e, std::set<std::string>& bound, std::map<std::string, Sort>& out) {
  switch (e.op()) {
    case Op::Var:
      if (!bound.count(e.name())) out.emplace(e.name(), e.sort());
      return;
    case Op::Forall: {
      std::vector<std::string> added;
      for (const auto& b : e.binders())
        if (bound.insert(b.name).second) added.push_back(b.name);
      collect_free(e.kid(0), bound, out);
      for (const auto& n : added) bound.erase(n);
      return;
    }
    default:
      for (const auto& k : e.kids()) collect_free(k, bound, out);
  }
}

template <class F>
void walk(const Expr& e, F&& fn) {
  fn(e);
  for (const auto& k : e.kids()) walk(k, fn);
}

}  // namespace

std::map<std::string, Sort> free_vars(const Expr& f) {
  std::set<std::string> bound;
  std::map<std::string, Sort> out;
  collect_free(f, bound, out);
  return out;
}

std::vector<FieldLeaf> field_leaves(const Expr& f) {
  std::map<std::tuple<StoreRef, std::size_t, std::string>, FieldLeaf> seen;
  walk(f, [&](const Expr& e) {
    if (e.op() == Op::Field) seen.emplace(std::make_tuple(e.store(), e.slot(), e.name()), FieldLeaf{e.store(), e.name(), e.slot(), e.sort()});
  });
  std::vector<FieldLeaf> out;
  for (auto& [k, v] : seen) out.push_back(v);
  return out;
}

bool mentions_store(const Expr& f, StoreKind kind) {
  bool found = false;
  walk(f, [&](const Expr& e) {
    if (e.op() == Op::Field && e.store().kind == kind) found = true;
  });
  return found;
}

std::set<std::int64_t> literal_indices(const Expr& f) {
  std::set<std::int64_t> out;
  walk(f, [&](const Expr& e) {
    if ((e.op() == Op::Select || e.op() == Op::Store) && e.kid(1).op() == Op::IntLit) out.insert(e.kid(1).int_value());
  });
  return out;
}

namespace {

Expr rebuild(const Expr& e, std::vector<Expr> kids) {
  switch (e.op()) {
    case Op::Add: return plus(kids[0], kids[1]);
    case Op::Sub: return minus(kids[0], kids[1]);
    case Op::Mul: return times(kids[0], kids[1]);
    case Op::Neg: return negate(kids[0]);
    case Op::Select: return select(kids[0], kids[1]);
    case Op::Store: return store(kids[0], kids[1], kids[2]);
    case Op::Ite: return ite(kids[0], kids[1], kids[2]);
    case Op::Eq: return eq(kids[0], kids[1]);
    case Op::Le: return le(kids[0], kids[1]);
    case Op::Lt: return lt(kids[0], kids[1]);
    case Op::Ge: return ge(kids[0], kids[1]);
    case Op::Gt: return gt(kids[0], kids[1]);
    case Op::Not: return lnot(kids[0]);
    case Op::And: return land(std::move(kids));
    case Op::Or: return lor(std::move(kids));
    case Op::Implies: return implies(kids[0], kids[1]);
    case Op::ArrayLit: return ExprFactory::with_kids(e, std::move(kids));
    default: throw SortError("rebuild of leaf/binder node");
  }
}

struct Substituter {
  const FieldMap& fields;
  std::set<std::string> avoid;  // free variables of all replacement terms

  Expr run(const Expr& e, const VarMap& vars) const {
    switch (e.op()) {
      case Op::IntLit:
      case Op::BoolLit:
        return e;
      case Op::Var: {
        auto it = vars.find(e.name());
        if (it == vars.end()) return e;
        if (it->second.sort() != e.sort())
          throw SortError("substitution for parameter '" + e.name() + "' has sort " + it->second.sort().to_string() + ", expected " + e.sort().to_string());
        return it->second;
      }
      case Op::Field: {
        auto it = fields.find(FieldKey{e.store(), e.name()});
        if (it == fields.end()) return e;
        if (it->second.sort() != e.sort())
          throw SortError("substitution for field '" + e.name() + "' has sort " + it->second.sort().to_string() + ", expected " + e.sort().to_string());
        return it->second;
      }
      case Op::Forall: {
        VarMap inner = vars;
        std::vector<Binder> binders;
        auto body_fv = free_vars(e.kid(0));
        std::set<std::string> taken = avoid;
        for (const auto& [n, s] : body_fv) taken.insert(n);
        for (const auto& b : e.binders()) taken.insert(b.name);
        for (const auto& b : e.binders()) {
          inner.erase(b.name);
          if (avoid.count(b.name)) {
            std::string fresh;
            for (int k = 1;; ++k) {
              fresh = b.name + "_" + std::to_string(k);
              if (!taken.count(fresh)) break;
            }
            taken.insert(fresh);
            inner.insert_or_assign(b.name, var(fresh, b.sort));
            binders.push_back(Binder{fresh, b.sort});
          } else {
            binders.push_back(b);
          }
        }
        return forall(std::move(binders), run(e.kid(0), inner));
      }
      default: {
        std::vector<Expr> kids;
        kids.reserve(e.kids().size());
        for (const auto& k : e.kids()) kids.push_back(run(k, vars));
        return rebuild(e, std::move(kids));
      }
    }
  }
};

}  // namespace

Expr substitute(const Expr& f, const VarMap& vars, const FieldMap& fields) {
  if (vars.empty() && fields.empty()) return f;
  Substituter s{fields, {}};
  for (const auto& [n, r] : vars)
    for (const auto& [v, _] : free_vars(r)) s.avoid.insert(v);
  for (const auto& [k, r] : fields)
    for (const auto& [v, _] : free_vars(r)) s.avoid.insert(v);
  return s.run(f, vars);
}

Expr retarget(const Expr& f, const StoreRef& from, const StoreRef& to) {
  if (from == to) return f;
  switch (f.op()) {
    case Op::Field:
      return f.store() == from ? ExprFactory::with_store(f, to) : f;
    case Op::IntLit:
    case Op::BoolLit:
    case Op::Var:
      return f;
    case Op::Forall:
      return forall(f.binders(), retarget(f.kid(0), from, to));
    default: {
      std::vector<Expr> kids;
      for (const auto& k : f.kids()) kids.push_back(retarget(k, from, to));
      return rebuild(f, std::move(kids));
    }
  }
}

namespace {

struct Bounds {
  std::optional<std::int64_t> lo, hi;
};

void tighten(Bounds& b, const Expr& c, const std::string& name) {
  auto is_var = [&](const Expr& e) { return e.op() == Op::Var && e.name() == name; };
  auto lit = [](const Expr& e) { return e.op() == Op::IntLit; };
  auto lower = [&](std::int64_t v) { b.lo = b.lo ? std::max(*b.lo, v) : v; };
  auto upper = [&](std::int64_t v) { b.hi = b.hi ? std::min(*b.hi, v) : v; };
  if (c.kids().size() != 2) return;
  const Expr& x = c.kid(0);
  const Expr& y = c.kid(1);
  switch (c.op()) {
    case Op::Le:
      if (lit(x) && is_var(y)) lower(x.int_value());
      if (is_var(x) && lit(y)) upper(y.int_value());
      break;
    case Op::Lt:
      if (lit(x) && is_var(y)) lower(x.int_value() + 1);
      if (is_var(x) && lit(y)) upper(y.int_value() - 1);
      break;
    case Op::Ge:
      if (is_var(x) && lit(y)) lower(y.int_value());
      if (lit(x) && is_var(y)) upper(x.int_value());
      break;
    case Op::Gt:
      if (is_var(x) && lit(y)) lower(y.int_value() + 1);
      if (lit(x) && is_var(y)) upper(x.int_value() - 1);
      break;
    case Op::Eq:
      if (is_var(x) && lit(y)) lower(y.int_value()), upper(y.int_value());
      if (lit(x) && is_var(y)) lower(x.int_value()), upper(x.int_value());
      break;
    default:
      break;
  }
}

std::optional<Expr> expand_one(const Expr& q, std::size_t max_instances) {
  const Expr& body = q.kid(0);
  std::vector<std::vector<Expr>> ranges;
  std::size_t total = 1;
  for (const auto& b : q.binders()) {
    std::vector<Expr> vals;
    if (b.sort.is_bool()) {
      vals = {bool_lit(false), bool_lit(true)};
    } else {
      if (body.op() != Op::Implies) return std::nullopt;
      Bounds bd;
      for (const auto& c : conjuncts(body.kid(0))) tighten(bd, c, b.name);
      if (!bd.lo || !bd.hi) return std::nullopt;
      if (*bd.hi < *bd.lo) return top();
      if (static_cast<std::uint64_t>(*bd.hi - *bd.lo) >= max_instances) return std::nullopt;
      for (auto v = *bd.lo; v <= *bd.hi; ++v) vals.push_back(int_lit(v));
    }
    total *= vals.size();
    if (total > max_instances) return std::nullopt;
    ranges.push_back(std::move(vals));
  }
  std::vector<Expr> parts;
  std::vector<std::size_t> pos(ranges.size(), 0);
  for (std::size_t n = 0; n < total; ++n) {
    VarMap m;
    for (std::size_t k = 0; k < ranges.size(); ++k) m.insert_or_assign(q.binders()[k].name, ranges[k][pos[k]]);
    Expr inst = substitute(body, m);
    if (inst.is_false()) return bottom();
    parts.push_back(std::move(inst));
    for (std::size_t k = ranges.size(); k-- > 0;) {
      if (++pos[k] < ranges[k].size()) break;
      pos[k] = 0;
    }
  }
  return land(std::move(parts));
}

}  // namespace

Expr expand_bounded_foralls(const Expr& f, std::size_t max_instances) {
  switch (f.op()) {
    case Op::IntLit:
    case Op::BoolLit:
    case Op::Var:
    case Op::Field:
      return f;
    case Op::Forall: {
      if (auto e = expand_one(f, max_instances)) return expand_bounded_foralls(*e, max_instances);
      return forall(f.binders(), expand_bounded_foralls(f.kid(0), max_instances));
    }
    default: {
      std::vector<Expr> kids;
      for (const auto& k : f.kids()) kids.push_back(expand_bounded_foralls(k, max_instances));
      return rebuild(f, std::move(kids));
    }
  }
}

// ---------------------------------------------------------------------------
// Printing

namespace {

int precedence(const Expr& e) {
  switch (e.op()) {
    case Op::Ite:
    case Op::Forall:
      return 0;
    case Op::Implies:
      return 1;
    case Op::Or:
      return 2;
    case Op::And:
      return 3;
    case Op::Not:
      return e.kid(0).op() == Op::Eq ? 5 : 4;
    case Op::Eq:
    case Op::Le:
    case Op::Lt:
    case Op::Ge:
    case Op::Gt:
      return 5;
    case Op::Add:
    case Op::Sub:
      return 6;
    case Op::Mul:
      return 7;
    case Op::Neg:
      return 8;
    case Op::IntLit:
      return e.int_value() < 0 ? 8 : 9;
    default:
      return 9;
  }
}

class Printer {
 public:
  explicit Printer(const PrintOptions& o) : opts_(o) {}

  void print(std::ostream& os, const Expr& e, int ctx) const {
    const int p = precedence(e);
    const bool parens = p < ctx;
    if (parens) os << "(";
    body(os, e);
    if (parens) os << ")";
  }

 private:
  void body(std::ostream& os, const Expr& e) const {
    switch (e.op()) {
      case Op::IntLit:
        os << e.int_value();
        return;
      case Op::BoolLit:
        os << (e.bool_value() ? "true" : "false");
        return;
      case Op::Var:
        os << e.name();
        return;
      case Op::Field:
        switch (e.store().kind) {
          case StoreKind::Global: os << "g."; break;
          case StoreKind::Replica: os << "r."; break;
          case StoreKind::Pre:
            if (!opts_.bare_pre) os << "s.";
            break;
          case StoreKind::Post: os << "s'."; break;
          case StoreKind::Snapshot: os << e.store().snapshot << "."; break;
        }
        os << e.name();
        return;
      case Op::ArrayLit: {
        os << "[";
        for (std::size_t i = 0; i < e.kids().size(); ++i) {
          if (i) os << ", ";
          print(os, e.kid(i), 0);
        }
        os << "]";
        return;
      }
      case Op::Add:
      case Op::Sub:
        print(os, e.kid(0), 6);
        os << " " << op_name(e.op()) << " ";
        print(os, e.kid(1), 7);
        return;
      case Op::Mul:
        print(os, e.kid(0), 7);
        os << " * ";
        print(os, e.kid(1), 8);
        return;
      case Op::Neg:
        os << "-";
        print(os, e.kid(0), 9);
        return;
      case Op::Select:
        print(os, e.kid(0), 9);
        os << "[";
        print(os, e.kid(1), 0);
        os << "]";
        return;
      case Op::Store:
        os << "store(";
        print(os, e.kid(0), 0);
        os << ", ";
        print(os, e.kid(1), 0);
        os << ", ";
        print(os, e.kid(2), 0);
        os << ")";
        return;
      case Op::Ite:
        os << "if ";
        print(os, e.kid(0), 0);
        os << " then ";
        print(os, e.kid(1), 0);
        os << " else ";
        print(os, e.kid(2), 0);
        return;
      case Op::Eq:
      case Op::Le:
      case Op::Lt:
      case Op::Ge:
      case Op::Gt:
        print(os, e.kid(0), 6);
        os << " " << op_name(e.op()) << " ";
        print(os, e.kid(1), 6);
        return;
      case Op::Not:
        if (e.kid(0).op() == Op::Eq) {
          print(os, e.kid(0).kid(0), 6);
          os << " != ";
          print(os, e.kid(0).kid(1), 6);
          return;
        }
        os << "!";
        print(os, e.kid(0), 5);
        return;
      case Op::And:
      case Op::Or:
        for (std::size_t i = 0; i < e.kids().size(); ++i) {
          if (i) os << (e.op() == Op::And ? " && " : " || ");
          print(os, e.kid(i), precedence(e) + 1);
        }
        return;
      case Op::Implies:
        print(os, e.kid(0), 2);
        os << " -> ";
        print(os, e.kid(1), 1);
        return;
      case Op::Forall:
        os << "forall (";
        for (std::size_t i = 0; i < e.binders().size(); ++i) {
          if (i) os << ", ";
          os << e.binders()[i].name << ": " << e.binders()[i].sort.to_string();
        }
        os << "). ";
        print(os, e.kid(0), 0);
        return;
    }
  }

  const PrintOptions& opts_;
};

}  // namespace

std::string to_string(const Expr& f, const PrintOptions& opts) {
  std::ostringstream os;
  Printer(opts).print(os, f, 0);
  return os.str();
}

std::string Expr::to_string() const { return cardkit::to_string(*this); }

}  // namespace cardkit
