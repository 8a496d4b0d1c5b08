#include "cardkit/execution.hpp"

#include <algorithm>
#include <optional>
#include <sstream>

#include "cardkit/error.hpp"
#include "cardkit/evaluate.hpp"
#include "parser.hpp"

namespace cardkit {

std::size_t DExecution::position(int event_id) const {
  for (std::size_t i = 0; i < events.size(); ++i)
    if (events[i].id == event_id) return i;
  throw Error("unknown event id " + std::to_string(event_id));
}

const Event& DExecution::event(int event_id) const { return events[position(event_id)]; }

const ActiveGuard& DExecution::guard(int guard_id) const {
  auto it = guards.find(guard_id);
  if (it == guards.end()) throw Error("unknown active guard id " + std::to_string(guard_id));
  return it->second;
}

const Event& DExecution::owner(int guard_id) const {
  for (const auto& e : events)
    if (std::find(e.guards.begin(), e.guards.end(), guard_id) != e.guards.end()) return e;
  throw Error("active guard " + std::to_string(guard_id) + " has no owning event");
}

std::string guard_label(const std::vector<std::string>& names) {
  if (names.empty()) return Card::kTop;
  std::string out;
  for (const auto& n : names) out += (out.empty() ? "" : " && ") + n;
  return out;
}

Expr active_guard_body(const Card& card, const ActiveGuard& g) { return card.guard_conjunction(g.guards); }

StoreValue eval_execution(const Card& card, const DExecution& L) {
  StoreValue s = L.s0;
  for (const auto& e : L.events) s = denote_effect(card, e.effect, s);
  return s;
}

std::vector<StoreValue> prefix_evaluations(const Card& card, const DExecution& L) {
  std::vector<StoreValue> out{L.s0};
  for (const auto& e : L.events) out.push_back(denote_effect(card, e.effect, out.back()));
  return out;
}

namespace {

DExecution restrict_to(const DExecution& L, const std::set<int>& keep) {
  DExecution out;
  out.s0 = L.s0;
  for (const auto& e : L.events) {
    if (!keep.count(e.id)) continue;
    out.events.push_back(e);
    for (int gid : e.guards) {
      auto it = L.guards.find(gid);
      if (it == L.guards.end()) continue;
      ActiveGuard g = it->second;
      std::erase_if(g.visible, [&](int v) { return !keep.count(v); });
      out.guards.emplace(gid, std::move(g));
    }
  }
  return out;
}

}  // namespace

DExecution pre_execution(const DExecution& L, int event_id) {
  const std::size_t pos = L.position(event_id);
  std::set<int> keep;
  for (std::size_t i = 0; i < pos; ++i) keep.insert(L.events[i].id);
  return restrict_to(L, keep);
}

DExecution vis_execution(const DExecution& L, int guard_id) { return restrict_to(L, L.guard(guard_id).visible); }

std::vector<Violation> check_well_formed(const Card& card, const DExecution& L) {
  std::vector<Violation> out;
  auto add = [&](int c, std::string d) { out.push_back({c, std::move(d)}); };

  // Structure: unique ids, every guard owned exactly once, known guard names.
  std::set<int> ids;
  for (const auto& e : L.events)
    if (!ids.insert(e.id).second) add(0, "duplicate event id " + std::to_string(e.id));
  std::map<int, int> owners;
  for (const auto& e : L.events)
    for (int gid : e.guards) {
      if (!L.guards.count(gid)) add(0, "event " + std::to_string(e.id) + " lists unknown guard " + std::to_string(gid));
      if (!owners.emplace(gid, e.id).second) add(0, "guard " + std::to_string(gid) + " owned by more than one event");
    }
  for (const auto& [gid, g] : L.guards) {
    if (!owners.count(gid)) add(0, "guard " + std::to_string(gid) + " has no owning event");
    for (const auto& n : g.guards)
      if (!card.find_guard(n)) add(0, "guard " + std::to_string(gid) + " names unknown guard '" + n + "'");
    for (int v : g.visible)
      if (!ids.count(v)) add(0, "guard " + std::to_string(gid) + " sees unknown event " + std::to_string(v));
  }
  if (!out.empty()) return out;

  for (const auto& e : L.events) {
    const std::size_t pos = L.position(e.id);
    std::optional<StoreValue> pre;
    for (int gid : e.guards) {
      const ActiveGuard& g = L.guards.at(gid);
      const std::string where = "guard " + std::to_string(gid) + " of event " + std::to_string(e.id);
      // (1) only earlier events are visible.
      bool ordered = true;
      for (int v : g.visible)
        if (L.position(v) >= pos) {
          add(1, where + " sees event " + std::to_string(v) + ", which is not arbitrated before it");
          ordered = false;
        }
      // (3) what a visible event's guards saw is visible too.
      for (int v : g.visible)
        for (int gid2 : L.event(v).guards)
          for (int w : L.guards.at(gid2).visible)
            if (!g.visible.count(w))
              add(3, where + " sees event " + std::to_string(v) + " but not event " + std::to_string(w) +
                         " seen by its guard " + std::to_string(gid2));
      if (!ordered) continue;
      // (2) guard compliance.
      if (!pre) pre = eval_execution(card, pre_execution(L, e.id));
      const StoreValue vis = eval_execution(card, vis_execution(L, gid));
      if (!guard_eval(card, active_guard_body(card, g), *pre, vis))
        add(2, where + " (" + guard_label(g.guards) + ") fails: global " + pre->to_string(card.schema()) + ", visible " +
                   vis.to_string(card.schema()));
    }
  }
  return out;
}

std::vector<Violation> check_careful(const Card& card, const DExecution& L, const AccordMap& accords) {
  std::vector<Violation> out;
  for (const auto& e : L.events) {
    const std::size_t pos = L.position(e.id);
    for (int gid : e.guards) {
      const ActiveGuard& g = L.guard(gid);
      const std::string label = guard_label(g.guards);
      auto it = accords.find(label);
      for (std::size_t i = 0; i < pos; ++i) {
        const Event& prior = L.events[i];
        bool accord = it != accords.end() ? it->second.count(prior.effect.cls) > 0 : prior.effect.cls == Card::kNoOp;
        if (!accord && !g.visible.count(prior.id))
          out.push_back({4, "guard " + std::to_string(gid) + " (" + label + ") of event " + std::to_string(e.id) +
                                " does not see event " + std::to_string(prior.id) + " (" + prior.effect.to_string() + ")"});
      }
    }
  }
  (void)card;
  return out;
}

bool event_satisfies(const Card& card, const DExecution& L, int event_id, const EventSpec& spec) {
  const Event& e = L.event(event_id);
  const StoreValue pre = eval_execution(card, pre_execution(L, event_id));
  const StoreValue post = denote_effect(card, e.effect, pre);
  auto fv = free_vars(spec.phi);
  if (auto it = fv.find("a"); it != fv.end() && !e.rval.conforms(it->second))
    throw SortError("return value " + e.rval.to_string() + " does not have sort " + it->second.to_string());
  Env env;
  env.bind_store(StoreRef::pre(), pre);
  env.bind_store(StoreRef::post(), post);
  env.bind_var("a", e.rval);
  return holds(spec.phi, env);
}

bool check_invariant(const Card& card, const DExecution& L, const Expr& I) {
  for (const auto& s : prefix_evaluations(card, L)) {
    Env env;
    env.bind_store(StoreRef::pre(), s);
    if (!holds(I, env)) return false;
  }
  return true;
}

std::string write_execution(const Card& card, const DExecution& L) {
  std::ostringstream os;
  os << "EXEC " << card.name() << "\nS0";
  for (std::size_t i = 0; i < card.schema().size(); ++i)
    os << " " << card.schema().field(i).name << "=" << detail::print_value(L.s0.fields.at(i));
  os << "\n";
  for (const auto& e : L.events) {
    os << "EVENT " << e.id << " " << e.effect.to_string() << " " << detail::print_value(e.rval);
    for (int g : e.guards) os << " " << g;
    os << "\n";
  }
  for (const auto& [gid, g] : L.guards) {
    os << "GUARD " << gid << " ";
    for (std::size_t i = 0; i < g.guards.size(); ++i) os << (i ? "&&" : "") << g.guards[i];
    if (g.guards.empty()) os << Card::kTop;
    for (int v : g.visible) os << " " << v;
    os << "\n";
  }
  os << "END\n";
  return os.str();
}

namespace {

int small_int(detail::Parser& p) {
  auto v = p.integer();
  if (v < 0 || v > 1'000'000'000) p.fail("id out of range");
  return static_cast<int>(v);
}

Value any_value(detail::Parser& p) {
  if (p.accept("true")) return Value::boolean(true);
  if (p.accept("false")) return Value::boolean(false);
  if (p.accept("[")) {
    Value::Array elems;
    if (!p.is("]")) {
      do {
        elems.push_back(any_value(p));
      } while (p.accept(","));
    }
    p.expect("]");
    return Value::array(std::move(elems));
  }
  return Value::integer(p.integer());
}

}  // namespace

DExecution read_execution(const Card& card, const std::string& text) {
  detail::Parser p(text);
  DExecution L;
  p.expect("EXEC");
  const detail::Token name_tok = p.peek();
  if (p.ident() != card.name()) p.fail_at(name_tok, "execution is for card '" + name_tok.text + "', not '" + card.name() + "'");
  p.expect("S0");
  L.s0 = card.init();
  while (!p.is("EVENT") && !p.is("GUARD") && !p.is("END")) {
    const detail::Token ft = p.peek();
    auto slot = card.schema().slot(p.ident());
    if (!slot) p.fail_at(ft, "unknown field '" + ft.text + "'");
    p.expect("=");
    L.s0.fields[*slot] = p.literal(card.schema().field(*slot).sort);
  }
  while (p.accept("EVENT")) {
    Event e;
    e.id = small_int(p);
    const detail::Token et = p.peek();
    e.effect.cls = p.ident();
    const EffectClass* cls = card.find_effect(e.effect.cls);
    if (!cls) p.fail_at(et, "unknown effect '" + e.effect.cls + "'");
    if (!cls->params.empty()) {
      p.expect("(");
      for (std::size_t i = 0; i < cls->params.size(); ++i) {
        if (i) p.expect(",");
        e.effect.args.push_back(p.literal(cls->params[i].sort));
      }
      p.expect(")");
    }
    try {
      check_instance(card, e.effect);
    } catch (const Error& err) {
      p.fail_at(et, err.what());
    }
    e.rval = any_value(p);
    while (p.peek().kind == detail::Token::Kind::Int) e.guards.push_back(small_int(p));
    L.events.push_back(std::move(e));
  }
  while (p.accept("GUARD")) {
    ActiveGuard g;
    g.id = small_int(p);
    do {
      const detail::Token gt = p.peek();
      std::string n = p.ident();
      if (!card.find_guard(n)) p.fail_at(gt, "unknown guard '" + n + "'");
      if (n != Card::kTop) g.guards.push_back(n);
    } while (p.accept("&&"));
    while (p.peek().kind == detail::Token::Kind::Int) g.visible.insert(small_int(p));
    if (!L.guards.emplace(g.id, g).second) p.fail("duplicate guard id " + std::to_string(g.id));
  }
  p.expect("END");
  if (!p.at_end()) p.fail("trailing input after END");
  return L;
}

}  // namespace cardkit
