#include "cardkit/lambdaq.hpp"

#include <set>
#include <sstream>

#include "cardkit/error.hpp"
#include "cardkit/evaluate.hpp"
#include "cardkit/execution.hpp"

namespace cardkit {

namespace lq {

namespace {
Lq make(LqTerm t) { return std::make_shared<const LqTerm>(std::move(t)); }
}  // namespace

Lq var(std::string name) { return make({LqTerm::Kind::Var, std::move(name), 0, false, {}, {}}); }
Lq int_(std::int64_t v) { return make({LqTerm::Kind::Int, {}, v, false, {}, {}}); }
Lq bool_(bool v) { return make({LqTerm::Kind::Bool, {}, 0, v, {}, {}}); }
Lq lam(std::string param, Lq body) { return make({LqTerm::Kind::Lam, std::move(param), 0, false, {}, {std::move(body)}}); }
Lq app(Lq fn, Lq arg) { return make({LqTerm::Kind::App, {}, 0, false, {}, {std::move(fn), std::move(arg)}}); }
Lq ite(Lq c, Lq t, Lq e) { return make({LqTerm::Kind::Ite, {}, 0, false, {}, {std::move(c), std::move(t), std::move(e)}}); }
Lq prim(std::string op, std::vector<Lq> args) { return make({LqTerm::Kind::Prim, std::move(op), 0, false, {}, std::move(args)}); }
Lq query(std::vector<std::string> guards, std::string binder, Lq body) {
  return make({LqTerm::Kind::Query, std::move(binder), 0, false, std::move(guards), {std::move(body)}});
}
Lq emit(std::string effect, std::vector<Lq> args, Lq ret) {
  args.push_back(std::move(ret));
  return make({LqTerm::Kind::Emit, std::move(effect), 0, false, {}, std::move(args)});
}
Lq field(Lq base, std::string name) { return make({LqTerm::Kind::Field, std::move(name), 0, false, {}, {std::move(base)}}); }
Lq let(std::string x, Lq v, Lq body) { return app(lam(std::move(x), std::move(body)), std::move(v)); }

}  // namespace lq

// ---------------------------------------------------------------------------
// Printing

namespace {

int binary_prec(const std::string& op) {
  if (op == "||") return 1;
  if (op == "&&") return 2;
  if (op == "=" || op == "!=" || op == "<" || op == "<=" || op == ">" || op == ">=") return 4;
  if (op == "+" || op == "-") return 5;
  if (op == "*") return 6;
  return 9;
}

int prec(const Lq& t) {
  switch (t->kind) {
    case LqTerm::Kind::Lam:
    case LqTerm::Kind::Ite:
    case LqTerm::Kind::Query:
      return 0;
    case LqTerm::Kind::App:
      return t->kids[0]->kind == LqTerm::Kind::Lam ? 0 : 8;
    case LqTerm::Kind::Prim:
      if (t->name == "!") return 3;
      if (t->name == "neg") return 7;
      return binary_prec(t->name);
    case LqTerm::Kind::Int:
      return t->ival < 0 ? 7 : 9;
    default:
      return 9;
  }
}

void print(std::ostream& os, const Lq& t, int ctx) {
  const bool paren = prec(t) < ctx;
  if (paren) os << "(";
  switch (t->kind) {
    case LqTerm::Kind::Var:
      os << t->name;
      break;
    case LqTerm::Kind::Int:
      os << t->ival;
      break;
    case LqTerm::Kind::Bool:
      os << (t->bval ? "true" : "false");
      break;
    case LqTerm::Kind::Lam:
      os << "fun " << t->name << " => ";
      print(os, t->kids[0], 0);
      break;
    case LqTerm::Kind::App:
      if (t->kids[0]->kind == LqTerm::Kind::Lam) {
        os << "let " << t->kids[0]->name << " = ";
        print(os, t->kids[1], 1);
        os << " in ";
        print(os, t->kids[0]->kids[0], 0);
      } else {
        print(os, t->kids[0], 8);
        os << " ";
        print(os, t->kids[1], 9);
      }
      break;
    case LqTerm::Kind::Ite:
      os << "if ";
      print(os, t->kids[0], 1);
      os << " then ";
      print(os, t->kids[1], 1);
      os << " else ";
      print(os, t->kids[2], 0);
      break;
    case LqTerm::Kind::Prim:
      if (t->name == "!") {
        os << "!";
        print(os, t->kids[0], 4);
      } else if (t->name == "neg") {
        os << "-";
        print(os, t->kids[0], 8);
      } else {
        const int p = binary_prec(t->name);
        print(os, t->kids[0], p);
        os << " " << t->name << " ";
        print(os, t->kids[1], p + 1);
      }
      break;
    case LqTerm::Kind::Query:
      os << "query ";
      for (std::size_t i = 0; i < t->guards.size(); ++i) os << (i ? " && " : "") << t->guards[i];
      if (t->guards.empty()) os << Card::kTop;
      os << " as " << t->name << " in ";
      print(os, t->kids[0], 0);
      break;
    case LqTerm::Kind::Emit: {
      os << "emit (" << t->name;
      const std::size_t n = t->kids.size() - 1;
      if (n) {
        os << "(";
        for (std::size_t i = 0; i < n; ++i) {
          if (i) os << ", ";
          print(os, t->kids[i], 1);
        }
        os << ")";
      }
      os << ", ";
      print(os, t->kids.back(), 1);
      os << ")";
      break;
    }
    case LqTerm::Kind::Field:
      print(os, t->kids[0], 9);
      os << "." << t->name;
      break;
  }
  if (paren) os << ")";
}

}  // namespace

std::string to_string(const Lq& t) {
  std::ostringstream os;
  print(os, t, 0);
  return os.str();
}

// ---------------------------------------------------------------------------
// Symbolic translation and VC generation

namespace {

struct Sym;
using SymEnv = std::map<std::string, std::shared_ptr<const Sym>>;

struct Sym {
  enum class Kind { Term, Store, Closure } kind;
  Expr term = top();
  StoreRef store{};
  std::string param;
  Lq body;
  SymEnv env;
};

using SymPtr = std::shared_ptr<const Sym>;

SymPtr sym_term(Expr e) { return std::make_shared<const Sym>(Sym{Sym::Kind::Term, std::move(e), {}, {}, {}, {}}); }

class VcGen {
 public:
  VcGen(const Card& card, const OpDef& op) : card_(card), op_(op) {}

  std::vector<VC> run() {
    SymEnv env;
    std::vector<Expr> gamma;
    for (const auto& p : op_.params) {
      if (env.count(p.name)) throw TypeError("duplicate parameter '" + p.name + "'");
      if (p.sort.is_array()) throw TypeError("parameter '" + p.name + "' must be int or bool");
      env[p.name] = sym_term(var(p.name, p.sort));
      if (!p.refinement.is_true()) gamma.push_back(p.refinement);
    }
    for (const auto& [n, s] : free_vars(op_.spec))
      if (n != "a") throw TypeError("specification of '" + op_.name + "' mentions '" + n + "'");
    gen(op_.body, env, gamma, "");
    return std::move(vcs_);
  }

 private:
  Expr as_expr(const SymPtr& s, const std::string& what) const {
    switch (s->kind) {
      case Sym::Kind::Term:
        return s->term;
      case Sym::Kind::Store:
        if (card_.schema().size() == 1) return card_.field_ref(s->store, card_.schema().field(0).name);
        throw TypeError(what + ": a store snapshot is not a value here; use a field access");
      case Sym::Kind::Closure:
        throw TypeError(what + ": unapplied function");
    }
    return top();
  }

  template <class F>
  Expr sorted(const std::string& what, F&& f) const {
    try {
      return f();
    } catch (const SortError& e) {
      throw TypeError(what + ": " + e.what());
    }
  }

  SymPtr translate(const Lq& t, const SymEnv& env) const {
    const std::string what = "in '" + to_string(t) + "'";
    switch (t->kind) {
      case LqTerm::Kind::Int:
        return sym_term(int_lit(t->ival));
      case LqTerm::Kind::Bool:
        return sym_term(bool_lit(t->bval));
      case LqTerm::Kind::Var: {
        auto it = env.find(t->name);
        if (it == env.end()) throw TypeError("unbound variable '" + t->name + "'");
        return it->second;
      }
      case LqTerm::Kind::Field: {
        auto base = translate(t->kids[0], env);
        if (base->kind != Sym::Kind::Store) throw TypeError(what + ": field access on a non-store value");
        if (!card_.schema().slot(t->name)) throw TypeError(what + ": unknown field '" + t->name + "'");
        return sym_term(card_.field_ref(base->store, t->name));
      }
      case LqTerm::Kind::Prim: {
        std::vector<Expr> a;
        for (const auto& k : t->kids) a.push_back(as_expr(translate(k, env), what));
        const std::string& op = t->name;
        return sym_term(sorted(what, [&]() -> Expr {
          if (op == "+") return plus(a[0], a[1]);
          if (op == "-") return minus(a[0], a[1]);
          if (op == "*") return times(a[0], a[1]);
          if (op == "neg") return negate(a[0]);
          if (op == "=") return eq(a[0], a[1]);
          if (op == "!=") return lnot(eq(a[0], a[1]));
          if (op == "<") return lt(a[0], a[1]);
          if (op == "<=") return le(a[0], a[1]);
          if (op == ">") return gt(a[0], a[1]);
          if (op == ">=") return ge(a[0], a[1]);
          if (op == "&&") return land(a[0], a[1]);
          if (op == "||") return lor(a[0], a[1]);
          if (op == "!") return lnot(a[0]);
          throw TypeError("unknown operator '" + op + "'");
        }));
      }
      case LqTerm::Kind::Ite: {
        Expr c = as_expr(translate(t->kids[0], env), what);
        Expr a = as_expr(translate(t->kids[1], env), what);
        Expr b = as_expr(translate(t->kids[2], env), what);
        return sym_term(sorted(what, [&] { return ite(c, a, b); }));
      }
      case LqTerm::Kind::Lam:
        return std::make_shared<const Sym>(Sym{Sym::Kind::Closure, top(), {}, t->name, t->kids[0], env});
      case LqTerm::Kind::App: {
        auto fn = translate(t->kids[0], env);
        if (fn->kind != Sym::Kind::Closure) throw TypeError(what + ": application of a non-function");
        SymEnv inner = fn->env;
        inner[fn->param] = translate(t->kids[1], env);
        return translate(fn->body, inner);
      }
      case LqTerm::Kind::Query:
        throw TypeError(what + ": query outside operation position");
      case LqTerm::Kind::Emit:
        throw TypeError(what + ": emit outside operation position");
    }
    return sym_term(top());
  }

  std::string fresh_snapshot(const std::string& x) {
    std::string name = x;
    for (int k = 1; used_.count(name); ++k) name = x + "_" + std::to_string(k);
    used_.insert(name);
    return name;
  }

  void gen(const Lq& t, const SymEnv& env, const std::vector<Expr>& gamma, const std::string& path) {
    switch (t->kind) {
      case LqTerm::Kind::Query: {
        for (const auto& g : t->guards)
          if (!card_.find_guard(g)) throw TypeError("unknown guard '" + g + "' in query");
        const std::string snap = fresh_snapshot(t->name);
        Expr c = card_.guard_conjunction(t->guards);
        c = retarget(retarget(c, StoreRef::global(), StoreRef::pre()), StoreRef::replica(), StoreRef::snap(snap));
        auto g2 = gamma;
        g2.push_back(c);
        SymEnv e2 = env;
        e2[t->name] = std::make_shared<const Sym>(Sym{Sym::Kind::Store, top(), StoreRef::snap(snap), {}, {}, {}});
        gen(t->kids[0], e2, g2, path + "query " + guard_label(t->guards) + " / ");
        return;
      }
      case LqTerm::Kind::Ite: {
        const std::string what = "in '" + to_string(t->kids[0]) + "'";
        Expr c = as_expr(translate(t->kids[0], env), what);
        if (!c.sort().is_bool()) throw TypeError(what + ": condition is not boolean");
        auto gt = gamma;
        gt.push_back(c);
        gen(t->kids[1], env, gt, path + "then / ");
        auto ge = gamma;
        ge.push_back(lnot(c));
        gen(t->kids[2], env, ge, path + "else / ");
        return;
      }
      case LqTerm::Kind::App: {
        auto fn = translate(t->kids[0], env);
        if (fn->kind != Sym::Kind::Closure) throw TypeError("in '" + to_string(t) + "': application of a non-function");
        SymEnv inner = fn->env;
        inner[fn->param] = translate(t->kids[1], env);
        gen(fn->body, inner, gamma, path);
        return;
      }
      case LqTerm::Kind::Emit:
        emit(t, env, gamma, path);
        return;
      default:
        throw TypeError("'" + to_string(t) + "' does not end in an emit");
    }
  }

  void emit(const Lq& t, const SymEnv& env, const std::vector<Expr>& gamma, const std::string& path) {
    const EffectClass* cls = card_.find_effect(t->name);
    if (!cls) throw TypeError("unknown effect '" + t->name + "'");
    const std::size_t n = t->kids.size() - 1;
    if (n != cls->params.size())
      throw TypeError("effect " + cls->name + " takes " + std::to_string(cls->params.size()) + " arguments, got " +
                      std::to_string(n));
    VarMap args;
    std::string shown = cls->name;
    for (std::size_t i = 0; i < n; ++i) {
      const std::string what = "argument " + std::to_string(i + 1) + " of " + cls->name;
      Expr a = as_expr(translate(t->kids[i], env), what);
      if (a.sort() != cls->params[i].sort)
        throw TypeError(what + " has sort " + a.sort().to_string() + ", expected " + cls->params[i].sort.to_string());
      args.insert_or_assign(cls->params[i].name, a);
      shown += (i ? ", " : "(") + a.to_string();
    }
    if (n) shown += ")";
    Expr ret = as_expr(translate(t->kids.back(), env), "return value of emit " + shown);
    if (ret.sort() != op_.ret_sort)
      throw TypeError("return value of emit " + shown + " has sort " + ret.sort().to_string() + ", expected " +
                      op_.ret_sort.to_string());

    const std::string label = path + "emit " + shown;
    Expr hyp = land(gamma);
    Expr constraints = substitute(cls->constraints(), args);
    if (!constraints.is_true()) vcs_.push_back({label + " / effect arguments", implies(hyp, constraints)});

    std::vector<Expr> post = gamma;
    for (std::size_t i = 0; i < card_.schema().size(); ++i) {
      const auto& f = card_.schema().field(i);
      Expr term = substitute(cls->assignments[i], args);
      post.push_back(eq(card_.field_ref(StoreRef::post(), f.name), term));
    }
    VarMap a;
    a.insert_or_assign("a", ret);
    Expr goal = sorted("specification", [&] { return substitute(op_.spec, a); });
    vcs_.push_back({label + " / specification", implies(land(post), goal)});
  }

  const Card& card_;
  const OpDef& op_;
  std::set<std::string> used_;
  std::vector<VC> vcs_;
};

}  // namespace

std::vector<VC> typecheck(const Card& card, const OpDef& op) {
  if (!op.body) throw TypeError("operation '" + op.name + "' has no body");
  if (op.ret_sort.is_array()) throw TypeError("operation '" + op.name + "' must return int or bool");
  return VcGen(card, op).run();
}

std::vector<VCResult> discharge(const std::vector<VC>& vcs, const Checker& checker) {
  std::vector<VCResult> out;
  for (const auto& vc : vcs) out.push_back({vc, check_valid(vc.formula, checker)});
  return out;
}

// ---------------------------------------------------------------------------
// Concrete evaluation

std::string to_string(const LqValue& v) {
  if (auto* i = std::get_if<std::int64_t>(&v)) return std::to_string(*i);
  if (auto* b = std::get_if<bool>(&v)) return *b ? "true" : "false";
  if (auto* s = std::get_if<StoreValue>(&v)) return s->to_string();
  return "<fun " + std::get<std::shared_ptr<const LqClosure>>(v)->param + ">";
}

Value to_value(const LqValue& v) {
  if (auto* i = std::get_if<std::int64_t>(&v)) return Value::integer(*i);
  if (auto* b = std::get_if<bool>(&v)) return Value::boolean(*b);
  if (auto* s = std::get_if<StoreValue>(&v)) {
    if (s->fields.size() == 1 && !s->fields[0].is_array()) return s->fields[0];
    throw EvalError("store snapshot " + s->to_string() + " used as a scalar");
  }
  throw EvalError("function used as a value");
}

namespace {

LqValue from_value(const Value& v) {
  if (v.is_int()) return v.as_int();
  if (v.is_bool()) return v.as_bool();
  throw EvalError("array values are not first-class in operations");
}

std::int64_t want_int(const LqValue& v, const std::string& what) {
  Value x = to_value(v);
  if (!x.is_int()) throw EvalError(what + ": expected an integer, got " + x.to_string());
  return x.as_int();
}

bool want_bool(const LqValue& v, const std::string& what) {
  Value x = to_value(v);
  if (!x.is_bool()) throw EvalError(what + ": expected a boolean, got " + x.to_string());
  return x.as_bool();
}

}  // namespace

LqValue eval_pure(const Lq& t, const LqEnv& env, const StoreSchema* schema) {
  switch (t->kind) {
    case LqTerm::Kind::Int:
      return t->ival;
    case LqTerm::Kind::Bool:
      return t->bval;
    case LqTerm::Kind::Var: {
      auto it = env.find(t->name);
      if (it == env.end()) throw EvalError("unbound variable '" + t->name + "'");
      return it->second;
    }
    case LqTerm::Kind::Field: {
      LqValue base = eval_pure(t->kids[0], env, schema);
      auto* s = std::get_if<StoreValue>(&base);
      if (!s) throw EvalError("field access ." + t->name + " on a non-store value");
      if (!schema) throw EvalError("field access ." + t->name + " without a store schema");
      auto slot = schema->slot(t->name);
      if (!slot) throw EvalError("unknown field '" + t->name + "'");
      return from_value(s->fields.at(*slot));
    }
    case LqTerm::Kind::Prim: {
      const std::string& op = t->name;
      const std::string what = "'" + to_string(t) + "'";
      auto arg = [&](std::size_t i) { return eval_pure(t->kids[i], env, schema); };
      if (op == "&&") return want_bool(arg(0), what) ? LqValue(want_bool(arg(1), what)) : LqValue(false);
      if (op == "||") return want_bool(arg(0), what) ? LqValue(true) : LqValue(want_bool(arg(1), what));
      if (op == "!") return !want_bool(arg(0), what);
      if (op == "neg") return -want_int(arg(0), what);
      if (op == "=" || op == "!=") {
        Value a = to_value(arg(0)), b = to_value(arg(1));
        return (a == b) == (op == "=");
      }
      const std::int64_t a = want_int(arg(0), what), b = want_int(arg(1), what);
      if (op == "+") return a + b;
      if (op == "-") return a - b;
      if (op == "*") return a * b;
      if (op == "<") return a < b;
      if (op == "<=") return a <= b;
      if (op == ">") return a > b;
      if (op == ">=") return a >= b;
      throw EvalError("unknown operator '" + op + "'");
    }
    case LqTerm::Kind::Ite:
      return eval_pure(want_bool(eval_pure(t->kids[0], env, schema), "if condition") ? t->kids[1] : t->kids[2], env,
                       schema);
    case LqTerm::Kind::Lam:
      return std::make_shared<const LqClosure>(LqClosure{t->name, t->kids[0], env});
    case LqTerm::Kind::App: {
      LqValue fn = eval_pure(t->kids[0], env, schema);
      auto* c = std::get_if<std::shared_ptr<const LqClosure>>(&fn);
      if (!c) throw EvalError("application of a non-function in '" + to_string(t) + "'");
      LqEnv inner = (*c)->env;
      inner.insert_or_assign((*c)->param, eval_pure(t->kids[1], env, schema));
      return eval_pure((*c)->body, inner, schema);
    }
    case LqTerm::Kind::Query:
    case LqTerm::Kind::Emit:
      throw EvalError("stuck: '" + to_string(t) + "' is not a pure term");
  }
  throw EvalError("stuck term");
}

namespace {

OpCursor advance(const Card& card, const Lq& t, const LqEnv& env) {
  switch (t->kind) {
    case LqTerm::Kind::Query:
      return {OpCursor::Pending{t->guards, t->name, t->kids[0], env}};
    case LqTerm::Kind::Ite: {
      bool c = want_bool(eval_pure(t->kids[0], env, &card.schema()), "if condition");
      return advance(card, c ? t->kids[1] : t->kids[2], env);
    }
    case LqTerm::Kind::App: {
      LqValue fn = eval_pure(t->kids[0], env, &card.schema());
      auto* c = std::get_if<std::shared_ptr<const LqClosure>>(&fn);
      if (!c) throw EvalError("application of a non-function in '" + to_string(t) + "'");
      LqEnv inner = (*c)->env;
      inner.insert_or_assign((*c)->param, eval_pure(t->kids[1], env, &card.schema()));
      return advance(card, (*c)->body, inner);
    }
    case LqTerm::Kind::Emit: {
      EffectInstance e{t->name, {}};
      for (std::size_t i = 0; i + 1 < t->kids.size(); ++i)
        e.args.push_back(to_value(eval_pure(t->kids[i], env, &card.schema())));
      check_instance(card, e);
      Value ret = to_value(eval_pure(t->kids.back(), env, &card.schema()));
      return {OpCursor::Emitted{std::move(e), std::move(ret)}};
    }
    default:
      throw EvalError("'" + to_string(t) + "' is not an operation");
  }
}

}  // namespace

OpCursor start_op(const Card& card, const OpDef& op, const std::vector<Value>& args) {
  if (args.size() != op.params.size())
    throw Error("operation " + op.name + " takes " + std::to_string(op.params.size()) + " arguments, got " +
                std::to_string(args.size()));
  LqEnv env;
  Env check;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (!args[i].conforms(op.params[i].sort))
      throw Error("argument " + args[i].to_string() + " of " + op.name + " is not " + op.params[i].sort.to_string());
    env.insert_or_assign(op.params[i].name, from_value(args[i]));
    check.bind_var(op.params[i].name, args[i]);
  }
  for (const auto& p : op.params)
    if (!holds(p.refinement, check))
      throw Error("argument " + check.find_var(p.name)->to_string() + " of " + op.name + " violates " +
                  p.refinement.to_string());
  return advance(card, op.body, env);
}

OpCursor resume_op(const Card& card, const OpCursor& cur, const StoreValue& snapshot) {
  if (cur.emitted()) throw Error("resume_op on an operation that already emitted");
  const auto& p = cur.pending();
  LqEnv env = p.env;
  env.insert_or_assign(p.binder, snapshot);
  return advance(card, p.body, env);
}

namespace {

bool psi_holds(const Expr& psi, const StoreValue& s) {
  Env env;
  env.bind_store(StoreRef::global(), s);
  return holds(psi, env);
}

Expr instantiate_replica(const Card& card, const Expr& c, const StoreValue& snap) {
  FieldMap m;
  for (std::size_t i = 0; i < card.schema().size(); ++i) {
    const auto& f = card.schema().field(i);
    m.emplace(FieldKey{StoreRef::replica(), f.name}, value_lit(snap.fields.at(i), f.sort));
  }
  return substitute(c, {}, m);
}

void drift(const Card& card, OpExecState& st, const EffectInstance& e) {
  check_instance(card, e);
  StoreValue next = denote_effect(card, e, st.s);
  if (!psi_holds(st.psi, next))
    throw ScheduleError("DRIFT premise violated: " + st.psi.to_string() + " fails after " + e.to_string() + " at " +
                        next.to_string(card.schema()));
  st.s = std::move(next);
}

}  // namespace

OpExecState op_execute(const Card& card, const OpDef& op, const std::vector<Value>& args, const StoreValue& s0,
                       const std::vector<OpStep>& steps) {
  OpExecState st{s0, top(), std::nullopt, std::nullopt, {}};
  OpCursor cur = start_op(card, op, args);
  std::size_t i = 0;
  while (!cur.emitted()) {
    const auto& p = cur.pending();
    if (i >= steps.size())
      throw ScheduleError("schedule exhausted at query " + guard_label(p.guards) + " as " + p.binder);
    const OpStep& step = steps[i++];
    if (step.kind == OpStep::Kind::Drift) {
      drift(card, st, step.effect);
      continue;
    }
    if (!step.snapshot.conforms(card.schema()))
      throw ScheduleError("QUERY snapshot " + step.snapshot.to_string() + " does not conform to the store schema");
    Expr c = card.guard_conjunction(p.guards);
    if (!guard_eval(card, c, st.s, step.snapshot))
      throw ScheduleError("QUERY premise violated: " + guard_label(p.guards) + " does not relate global " +
                          st.s.to_string(card.schema()) + " and snapshot " + step.snapshot.to_string(card.schema()));
    st.psi = land(st.psi, instantiate_replica(card, c, step.snapshot));
    st.clauses.push_back({p.guards, step.snapshot});
    cur = resume_op(card, cur, step.snapshot);
  }
  for (; i < steps.size(); ++i) {
    if (steps[i].kind == OpStep::Kind::Query) throw ScheduleError("leftover QUERY step after the emit");
    drift(card, st, steps[i].effect);
  }
  st.effect = cur.result().effect;
  st.ret = cur.result().ret;
  return st;
}

bool spec_holds_at(const Card& card, const OpDef& op, const OpExecState& st) {
  if (!st.effect || !st.ret) return false;
  if (!psi_holds(st.psi, st.s)) return false;
  Env env;
  env.bind_store(StoreRef::pre(), st.s);
  env.bind_store(StoreRef::post(), denote_effect(card, *st.effect, st.s));
  env.bind_var("a", *st.ret);
  return holds(op.spec, env);
}

}  // namespace cardkit
