#include "cardkit/card.hpp"

#include "cardkit/error.hpp"
#include "cardkit/evaluate.hpp"

namespace cardkit {

Expr EffectClass::constraints() const {
  std::vector<Expr> parts;
  for (const auto& p : params) parts.push_back(p.constraint);
  return land(std::move(parts));
}

std::vector<Binder> EffectClass::binders() const {
  std::vector<Binder> out;
  for (const auto& p : params) out.push_back({p.name, p.sort});
  return out;
}

bool EffectClass::is_identity() const {
  for (const auto& a : assignments)
    if (a.op() != Op::Field || a.store().kind != StoreKind::Pre) return false;
  for (std::size_t i = 0; i < assignments.size(); ++i)
    if (assignments[i].slot() != i) return false;
  return true;
}

Card::Card(std::string name, StoreSchema schema, StoreValue init)
    : name_(std::move(name)), schema_(std::move(schema)), init_(std::move(init)) {
  EffectClass noop{kNoOp, {}, {}, true};
  for (std::size_t i = 0; i < schema_.size(); ++i) noop.assignments.push_back(field_ref(StoreRef::pre(), schema_.field(i).name));
  effects_.push_back(std::move(noop));
  guards_.push_back({kTop, top(), true});
  std::vector<Expr> eqs;
  for (const auto& f : schema_.fields()) eqs.push_back(eq(field_ref(StoreRef::global(), f.name), field_ref(StoreRef::replica(), f.name)));
  guards_.push_back({kEq, land(std::move(eqs)), true});
}

void Card::set_init(StoreValue v) { init_ = std::move(v); }

void Card::check_fresh_name(const std::string& name) const {
  if (name.empty()) throw Error("empty effect or guard name");
  if (find_effect(name) || find_guard(name)) throw Error("duplicate name '" + name + "' in card " + name_);
}

void Card::add_effect(std::string name, std::vector<ParamDecl> params, const std::map<std::string, Expr>& assignments) {
  check_fresh_name(name);
  std::map<std::string, Sort> declared;
  for (const auto& p : params) {
    if (p.sort.is_array()) throw SortError("effect " + name + ": array parameter '" + p.name + "' not supported");
    if (!declared.emplace(p.name, p.sort).second) throw Error("effect " + name + ": duplicate parameter '" + p.name + "'");
    if (!p.constraint.sort().is_bool()) throw SortError("effect " + name + ": constraint of '" + p.name + "' is not a formula");
  }
  for (const auto& p : params) {
    for (const auto& [v, s] : free_vars(p.constraint)) {
      auto it = declared.find(v);
      if (it == declared.end()) throw Error("effect " + name + ": constraint mentions unknown parameter '" + v + "'");
      if (it->second != s) throw SortError("effect " + name + ": parameter '" + v + "' used at sort " + s.to_string());
    }
    if (!field_leaves(p.constraint).empty()) throw Error("effect " + name + ": parameter constraint mentions the store");
  }
  EffectClass e{std::move(name), std::move(params), {}, false};
  for (const auto& [fname, term] : assignments)
    if (!schema_.slot(fname)) throw Error("effect " + e.name + ": unknown field '" + fname + "'");
  for (std::size_t i = 0; i < schema_.size(); ++i) {
    const auto& fd = schema_.field(i);
    auto it = assignments.find(fd.name);
    if (it == assignments.end()) {
      e.assignments.push_back(field_ref(StoreRef::pre(), fd.name));
      continue;
    }
    const Expr& t = it->second;
    if (t.sort() != fd.sort)
      throw SortError("effect " + e.name + ": assignment to '" + fd.name + "' has sort " + t.sort().to_string() + ", expected " + fd.sort.to_string());
    for (const auto& leaf : field_leaves(t))
      if (leaf.store.kind != StoreKind::Pre) throw Error("effect " + e.name + ": assignment may only read the old store");
    for (const auto& [v, s] : free_vars(t)) {
      auto p = declared.find(v);
      if (p == declared.end()) throw Error("effect " + e.name + ": unknown parameter '" + v + "'");
      if (p->second != s) throw SortError("effect " + e.name + ": parameter '" + v + "' used at sort " + s.to_string());
    }
    e.assignments.push_back(t);
  }
  effects_.push_back(std::move(e));
}

void Card::add_guard(std::string name, Expr body) {
  check_fresh_name(name);
  if (!body.sort().is_bool()) throw SortError("guard " + name + " is not a formula");
  for (const auto& leaf : field_leaves(body))
    if (leaf.store.kind != StoreKind::Global && leaf.store.kind != StoreKind::Replica)
      throw Error("guard " + name + " may only mention g.* and r.* fields");
  if (!free_vars(body).empty()) throw Error("guard " + name + " has free variable '" + free_vars(body).begin()->first + "'");
  guards_.push_back({std::move(name), std::move(body), false});
}

const EffectClass* Card::find_effect(const std::string& name) const {
  for (const auto& e : effects_)
    if (e.name == name) return &e;
  return nullptr;
}

const GuardDef* Card::find_guard(const std::string& name) const {
  for (const auto& g : guards_)
    if (g.name == name) return &g;
  return nullptr;
}

const EffectClass& Card::effect(const std::string& name) const {
  if (auto* e = find_effect(name)) return *e;
  throw Error("card " + name_ + " has no effect class '" + name + "'");
}

const GuardDef& Card::guard(const std::string& name) const {
  if (auto* g = find_guard(name)) return *g;
  throw Error("card " + name_ + " has no guard '" + name + "'");
}

Expr Card::field_ref(const StoreRef& store, const std::string& name) const {
  auto slot = schema_.slot(name);
  if (!slot) throw Error("card " + name_ + " has no field '" + name + "'");
  return field(store, name, *slot, schema_.field(*slot).sort);
}

Expr Card::guard_conjunction(const std::vector<std::string>& names) const {
  std::vector<Expr> parts;
  for (const auto& n : names) parts.push_back(guard(n).body);
  return land(std::move(parts));
}

std::string EffectInstance::to_string() const {
  if (args.empty()) return cls;
  std::string out = cls + "(";
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (i) out += ", ";
    out += args[i].to_string();
  }
  return out + ")";
}

namespace {

Env param_env(const EffectClass& cls, const EffectInstance& e) {
  Env env;
  for (std::size_t i = 0; i < cls.params.size(); ++i) env.bind_var(cls.params[i].name, e.args[i]);
  return env;
}

}  // namespace

void check_instance(const Card& card, const EffectInstance& e) {
  const auto& cls = card.effect(e.cls);
  if (e.args.size() != cls.params.size())
    throw Error(e.cls + " expects " + std::to_string(cls.params.size()) + " argument(s), got " + std::to_string(e.args.size()));
  for (std::size_t i = 0; i < e.args.size(); ++i)
    if (!e.args[i].conforms(cls.params[i].sort)) throw SortError(e.to_string() + ": argument '" + cls.params[i].name + "' has wrong sort");
  if (!holds(cls.constraints(), param_env(cls, e))) throw Error(e.to_string() + " violates the parameter constraints of " + e.cls);
}

StoreValue denote_effect(const Card& card, const EffectInstance& e, const StoreValue& s) {
  check_instance(card, e);
  const auto& cls = card.effect(e.cls);
  Env env = param_env(cls, e);
  env.bind_store(StoreRef::pre(), s);
  StoreValue out;
  for (std::size_t i = 0; i < cls.assignments.size(); ++i) out.fields.push_back(evaluate(cls.assignments[i], env));
  return out;
}

bool guard_eval(const Card& card, const Expr& body, const StoreValue& s_g, const StoreValue& s_r) {
  (void)card;
  Env env;
  env.bind_store(StoreRef::global(), s_g);
  env.bind_store(StoreRef::replica(), s_r);
  return holds(body, env);
}

bool guard_eval(const Card& card, const GuardDef& c, const StoreValue& s_g, const StoreValue& s_r) {
  return guard_eval(card, c.body, s_g, s_r);
}

std::vector<std::string> validate_card(const Card& card, const Checker& checker) {
  std::vector<std::string> out;
  if (!card.init().conforms(card.schema())) out.push_back("init does not conform to the store schema");
  for (const auto& g : card.guards()) {
    auto refl = retarget(g.body, StoreRef::replica(), StoreRef::global());
    auto res = check_valid(refl, checker);
    if (res.invalid())
      out.push_back("guard " + g.name + " is not reflexive (counterexample: " + res.witness_string() + ")");
    else if (res.unknown())
      out.push_back("guard " + g.name + ": reflexivity could not be established (" + res.reason + ")");
  }
  for (const auto& e : card.effects()) {
    if (e.params.empty()) continue;
    auto res = check_valid(lnot(e.constraints()), checker);
    if (res.valid())
      out.push_back("effect " + e.name + " has an unsatisfiable parameter constraint");
    else if (res.unknown())
      out.push_back("effect " + e.name + ": satisfiability of the parameter constraint is unknown (" + res.reason + ")");
  }
  return out;
}

std::vector<Expr> effect_terms(const EffectClass& e, const StoreRef& store) {
  std::vector<Expr> out;
  for (const auto& a : e.assignments) out.push_back(retarget(a, StoreRef::pre(), store));
  return out;
}

namespace {

Expr apply_terms(const Card& card, const Expr& f, const EffectClass& e, Side side, const VarMap& args) {
  if (e.assignments.size() != card.schema().size()) throw Error("effect " + e.name + " does not match the schema of card " + card.name());
  FieldMap fields;
  auto add_side = [&](const StoreRef& store) {
    auto terms = effect_terms(e, store);
    for (std::size_t i = 0; i < terms.size(); ++i)
      fields.insert_or_assign(FieldKey{store, card.schema().field(i).name}, substitute(terms[i], args));
  };
  if (side == Side::Global || side == Side::Both) add_side(StoreRef::global());
  if (side == Side::Replica || side == Side::Both) add_side(StoreRef::replica());
  return substitute(f, {}, fields);
}

}  // namespace

Expr apply_effect(const Card& card, const Expr& f, const EffectClass& e, Side side) { return apply_terms(card, f, e, side, {}); }

Expr apply_effect(const Card& card, const Expr& f, const EffectInstance& e, Side side) {
  check_instance(card, e);
  const auto& cls = card.effect(e.cls);
  VarMap args;
  for (std::size_t i = 0; i < cls.params.size(); ++i) args.insert_or_assign(cls.params[i].name, value_lit(e.args[i], cls.params[i].sort));
  return apply_terms(card, f, cls, side, args);
}

}  // namespace cardkit
