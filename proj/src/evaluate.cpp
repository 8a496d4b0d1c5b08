#include "cardkit/evaluate.hpp"

#include "cardkit/error.hpp"

namespace cardkit {

std::vector<std::int64_t> EnumDomain::ordered(std::int64_t lo, std::int64_t hi) {
  std::vector<std::int64_t> out;
  if (lo > hi) return out;
  const std::int64_t bound = std::max(hi < 0 ? -hi : hi, lo < 0 ? -lo : lo);
  for (std::int64_t m = 0; m <= bound; ++m) {
    if (m >= lo && m <= hi) out.push_back(m);
    if (m != 0 && -m >= lo && -m <= hi) out.push_back(-m);
  }
  return out;
}

void Env::bind_store(const StoreRef& ref, StoreValue value) {
  for (auto& [r, v] : stores_)
    if (r == ref) {
      v = std::move(value);
      return;
    }
  stores_.emplace_back(ref, std::move(value));
}

void Env::bind_var(const std::string& name, Value value) { vars_.insert_or_assign(name, std::move(value)); }

const StoreValue& Env::store(const StoreRef& ref) const {
  for (const auto& [r, v] : stores_)
    if (r == ref) return v;
  throw EvalError("unbound store '" + (ref.kind == StoreKind::Snapshot ? ref.snapshot : std::to_string(static_cast<int>(ref.kind))) + "'");
}

StoreValue& Env::store(const StoreRef& ref) {
  return const_cast<StoreValue&>(static_cast<const Env&>(*this).store(ref));
}

bool Env::has_store(const StoreRef& ref) const {
  for (const auto& [r, v] : stores_)
    if (r == ref) return true;
  return false;
}

const Value* Env::find_var(const std::string& name) const {
  auto it = vars_.find(name);
  return it == vars_.end() ? nullptr : &it->second;
}

namespace {

class Evaluator {
 public:
  explicit Evaluator(const Env& env) : env_(env) {}

  Value eval(const Expr& e) {
    switch (e.op()) {
      case Op::IntLit:
        return Value::integer(e.int_value());
      case Op::BoolLit:
        return Value::boolean(e.bool_value());
      case Op::Field: {
        const auto& s = env_.store(e.store());
        if (e.slot() >= s.fields.size()) throw EvalError("field '" + e.name() + "' missing from store");
        return s.fields[e.slot()];
      }
      case Op::Var: {
        for (auto it = scope_.rbegin(); it != scope_.rend(); ++it)
          if (it->first == e.name()) return it->second;
        if (const Value* v = env_.find_var(e.name())) return *v;
        throw EvalError("unbound variable '" + e.name() + "'");
      }
      case Op::ArrayLit: {
        Value::Array a;
        for (const auto& k : e.kids()) a.push_back(eval(k));
        return Value::array(std::move(a));
      }
      case Op::Add:
        return Value::integer(eval(e.kid(0)).as_int() + eval(e.kid(1)).as_int());
      case Op::Sub:
        return Value::integer(eval(e.kid(0)).as_int() - eval(e.kid(1)).as_int());
      case Op::Mul:
        return Value::integer(eval(e.kid(0)).as_int() * eval(e.kid(1)).as_int());
      case Op::Neg:
        return Value::integer(-eval(e.kid(0)).as_int());
      case Op::Select: {
        Value a = eval(e.kid(0));
        auto i = eval(e.kid(1)).as_int();
        const auto& arr = a.as_array();
        if (i < 0 || static_cast<std::size_t>(i) >= arr.size()) {
          if (env_.lenient_arrays) return Value::zero(e.sort());
          throw EvalError("array index " + std::to_string(i) + " out of bounds [0," + std::to_string(arr.size()) + ")");
        }
        return arr[static_cast<std::size_t>(i)];
      }
      case Op::Store: {
        Value a = eval(e.kid(0));
        auto i = eval(e.kid(1)).as_int();
        Value v = eval(e.kid(2));
        auto& arr = a.as_array();
        if (i < 0 || static_cast<std::size_t>(i) >= arr.size()) {
          if (env_.lenient_arrays) return a;
          throw EvalError("array index " + std::to_string(i) + " out of bounds [0," + std::to_string(arr.size()) + ")");
        }
        arr[static_cast<std::size_t>(i)] = std::move(v);
        return a;
      }
      case Op::Ite:
        return eval(e.kid(0)).as_bool() ? eval(e.kid(1)) : eval(e.kid(2));
      case Op::Eq:
        return Value::boolean(eval(e.kid(0)) == eval(e.kid(1)));
      case Op::Le:
        return Value::boolean(eval(e.kid(0)).as_int() <= eval(e.kid(1)).as_int());
      case Op::Lt:
        return Value::boolean(eval(e.kid(0)).as_int() < eval(e.kid(1)).as_int());
      case Op::Ge:
        return Value::boolean(eval(e.kid(0)).as_int() >= eval(e.kid(1)).as_int());
      case Op::Gt:
        return Value::boolean(eval(e.kid(0)).as_int() > eval(e.kid(1)).as_int());
      case Op::Not:
        return Value::boolean(!eval(e.kid(0)).as_bool());
      case Op::And:
        for (const auto& k : e.kids())
          if (!eval(k).as_bool()) return Value::boolean(false);
        return Value::boolean(true);
      case Op::Or:
        for (const auto& k : e.kids())
          if (eval(k).as_bool()) return Value::boolean(true);
        return Value::boolean(false);
      case Op::Implies:
        return Value::boolean(!eval(e.kid(0)).as_bool() || eval(e.kid(1)).as_bool());
      case Op::Forall:
        return Value::boolean(forall(e, 0));
    }
    throw EvalError("unknown node");
  }

 private:
  bool forall(const Expr& e, std::size_t b) {
    if (b == e.binders().size()) return eval(e.kid(0)).as_bool();
    const auto& binder = e.binders()[b];
    std::vector<Value> values;
    if (binder.sort.is_bool()) {
      values = {Value::boolean(false), Value::boolean(true)};
    } else {
      for (auto v : EnumDomain::ordered(env_.domain.param_min, env_.domain.param_max)) values.push_back(Value::integer(v));
    }
    for (auto& v : values) {
      scope_.emplace_back(binder.name, std::move(v));
      bool ok = forall(e, b + 1);
      scope_.pop_back();
      if (!ok) return false;
    }
    return true;
  }

  const Env& env_;
  std::vector<std::pair<std::string, Value>> scope_;
};

}  // namespace

Value evaluate(const Expr& e, const Env& env) { return Evaluator(env).eval(e); }

bool holds(const Expr& f, const Env& env) {
  if (!f.sort().is_bool()) throw SortError("holds() on non-boolean '" + f.to_string() + "'");
  return evaluate(f, env).as_bool();
}

}  // namespace cardkit
