#include "cardkit/replica_sim.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <unordered_set>

#include "cardkit/error.hpp"
#include "cardkit/evaluate.hpp"
#include "cardkit/syntax.hpp"
#include "parser.hpp"

namespace cardkit {

using detail::Parser;
using detail::Token;

std::string Invocation::to_string() const {
  std::string out = op + "(";
  for (std::size_t i = 0; i < args.size(); ++i) out += (i ? ", " : "") + args[i].to_string();
  return out + ")";
}

const OpDef& Scenario::op(const std::string& name) const {
  for (const auto& o : ops)
    if (o.name == name) return o;
  throw Error("scenario has no operation '" + name + "'");
}

// ---------------------------------------------------------------------------
// Scenario files

namespace {

template <class F>
auto nested(const std::string& file, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const ParseError& e) {
    throw ParseError(file + ": " + e.what(), e.line(), e.column());
  }
}

}  // namespace

Scenario parse_scenario(std::string_view text, const std::function<std::string(const std::string&)>& read_file) {
  Parser p(text);
  Scenario sc;
  p.expect("scenario");
  if (p.peek().kind == Token::Kind::Ident) sc.name = p.ident();
  p.expect("{");
  p.expect("card");
  const Token ct = p.peek();
  const std::string card_name = p.ident();
  const std::string card_file = p.string_lit();
  p.expect(";");
  auto card = nested(card_file, [&] { return std::make_shared<const Card>(parse_card(read_file(card_file))); });
  if (card->name() != card_name) p.fail_at(ct, "file " + card_file + " defines card '" + card->name() + "'");
  sc.card = card;
  sc.card_file = card_file;
  sc.s0 = card->init();

  while (p.accept("ops")) {
    const std::string f = p.string_lit();
    p.expect(";");
    sc.ops_files.push_back(f);
    for (auto& op : nested(f, [&] { return parse_ops(*card, read_file(f)); })) {
      for (const auto& o : sc.ops)
        if (o.name == op.name) p.fail("operation '" + op.name + "' defined twice");
      sc.ops.push_back(std::move(op));
    }
  }
  if (p.accept("init")) {
    p.expect("{");
    while (!p.accept("}")) {
      const Token ft = p.peek();
      auto slot = card->schema().slot(p.ident());
      if (!slot) p.fail_at(ft, "unknown field '" + ft.text + "'");
      p.expect("=");
      sc.s0.fields[*slot] = p.literal(card->schema().field(*slot).sort);
      p.accept(";");
    }
  }
  if (p.accept("invariant")) {
    detail::Scope s;
    s.schema = &card->schema();
    s.stores = {{"s", StoreRef::pre()}};
    const Token it = p.peek();
    Expr inv = p.formula(s);
    if (!inv.sort().is_bool()) p.fail_at(it, "invariant must be boolean");
    sc.invariant = inv;
    p.expect(";");
  }
  while (p.accept("replica")) {
    ReplicaScript r;
    const Token rt = p.peek();
    r.name = p.ident();
    for (const auto& o : sc.replicas)
      if (o.name == r.name) p.fail_at(rt, "duplicate replica '" + r.name + "'");
    p.expect("{");
    while (!p.accept("}")) {
      const Token ot = p.peek();
      Invocation inv;
      inv.op = p.ident();
      const OpDef* def = nullptr;
      for (const auto& o : sc.ops)
        if (o.name == inv.op) def = &o;
      if (!def) p.fail_at(ot, "unknown operation '" + inv.op + "'");
      p.expect("(");
      for (std::size_t i = 0; i < def->params.size(); ++i) {
        if (i) p.expect(",");
        inv.args.push_back(p.literal(def->params[i].sort));
      }
      if (!p.is(")")) p.fail_at(ot, inv.op + " takes " + std::to_string(def->params.size()) + " arguments");
      p.expect(")");
      p.expect(";");
      r.ops.push_back(std::move(inv));
    }
    sc.replicas.push_back(std::move(r));
  }
  p.expect("}");
  if (!p.at_end()) p.fail("trailing input after scenario");
  return sc;
}

std::string print_scenario(const Scenario& sc) {
  const auto& schema = sc.card->schema();
  std::ostringstream out;
  out << "scenario " << sc.name << " {\n";
  out << "  card " << sc.card->name() << " \"" << sc.card_file << "\";\n";
  for (const auto& f : sc.ops_files) out << "  ops \"" << f << "\";\n";
  out << "  init {";
  for (std::size_t i = 0; i < schema.size(); ++i) out << " " << schema.field(i).name << " = " << sc.s0.fields[i].to_string();
  out << " }\n";
  if (sc.invariant) out << "  invariant " << sc.invariant->to_string() << ";\n";
  for (const auto& r : sc.replicas) {
    out << "  replica " << r.name << " {";
    for (const auto& inv : r.ops) out << " " << inv.to_string() << ";";
    out << " }\n";
  }
  out << "}\n";
  return out.str();
}

Scenario load_scenario(const std::string& path) {
  namespace fs = std::filesystem;
  auto read = [](const fs::path& f) {
    std::ifstream in(f);
    if (!in) throw Error("cannot read " + f.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  const fs::path dir = fs::path(path).parent_path();
  const std::string text = read(path);
  return nested(path, [&] { return parse_scenario(text, [&](const std::string& rel) { return read(dir / rel); }); });
}

std::vector<std::string> check_scenario(const Scenario& sc, const Checker& checker) {
  std::vector<std::string> errors;
  std::set<std::string> used;
  for (const auto& r : sc.replicas)
    for (const auto& inv : r.ops) used.insert(inv.op);
  for (const auto& name : used) {
    try {
      const OpDef& op = sc.op(name);
      for (const auto& res : discharge(typecheck(*sc.card, op), checker))
        if (!res.result.valid())
          errors.push_back(name + ": " + res.vc.label + " is " + to_string(res.result.status) +
                           (res.result.invalid() ? " (" + res.result.witness_string() + ")" : ""));
    } catch (const Error& e) {
      errors.push_back(name + ": " + e.what());
    }
  }
  if (!sc.s0.conforms(sc.card->schema())) errors.push_back("initial store does not conform to the schema");
  return errors;
}

// ---------------------------------------------------------------------------
// Accord tables

namespace {

void collect_queries(const Lq& t, std::vector<std::vector<std::string>>& out) {
  if (t->kind == LqTerm::Kind::Query) out.push_back(t->guards);
  for (const auto& k : t->kids) collect_queries(k, out);
}

std::vector<std::string> sorted_key(const std::vector<std::string>& guards) {
  std::vector<std::string> k = guards;
  std::sort(k.begin(), k.end());
  k.erase(std::unique(k.begin(), k.end()), k.end());
  return k;
}

}  // namespace

AccordTable::AccordTable(std::shared_ptr<const Card> card, const Checker& checker, LockMode mode)
    : card_(std::move(card)), checker_(checker), mode_(mode) {}

void AccordTable::prepare(const Scenario& sc) {
  std::vector<std::vector<std::string>> qs;
  for (const auto& op : sc.ops) collect_queries(op.body, qs);
  for (const auto& q : qs) entry(q);
}

const AccordTable::Entry& AccordTable::entry(const std::vector<std::string>& guards) const {
  auto key = sorted_key(guards);
  labels_.insert_or_assign(guard_label(guards), key);
  auto it = cache_.find(key);
  if (it != cache_.end()) return it->second;
  const std::string label = guard_label(key);
  const Expr c = card_->guard_conjunction(key);
  Entry e;
  e.report = mode_ == LockMode::ImmediateAccord ? immediate_accord_set(*card_, label, c, checker_)
                                                : tas_fixed_point(*card_, label, c, checker_);
  if (e.report.status == AccordStatus::Unknown)
    e.accord = {Card::kNoOp};
  else
    e.accord.insert(e.report.accord.begin(), e.report.accord.end());
  return cache_.emplace(key, std::move(e)).first->second;
}

const std::set<std::string>& AccordTable::accord(const std::vector<std::string>& guards) const {
  return entry(guards).accord;
}

const AccordReport& AccordTable::report(const std::vector<std::string>& guards) const { return entry(guards).report; }

AccordMap AccordTable::accord_map() const {
  AccordMap m;
  for (const auto& [label, key] : labels_) m.emplace(label, cache_.at(key).accord);
  return m;
}

}  // namespace cardkit

// ---------------------------------------------------------------------------
// Simulation

namespace cardkit {

std::string to_string(Action::Kind k) {
  switch (k) {
    case Action::Kind::Lock: return "LOCK";
    case Action::Kind::Query: return "QUERY";
    case Action::Kind::Emit: return "EMIT";
    case Action::Kind::Deliver: return "DELIVER";
    case Action::Kind::Abort: return "ABORT";
  }
  return "?";
}

Simulator::Simulator(const Scenario& sc, const AccordTable* table, LockMode mode) : sc_(&sc), table_(table), mode_(mode) {
  if (mode_ != LockMode::None && !table_) throw Error("locking simulation needs an accord table");
  for (std::size_t i = 0; i < sc.replicas.size(); ++i) {
    ReplicaState r;
    r.id = static_cast<int>(i);
    r.name = sc.replicas[i].name;
    r.pending = sc.replicas[i].ops;
    replicas_.push_back(std::move(r));
  }
  normalize();
}

void Simulator::normalize() {
  for (auto& r : replicas_) {
    if (r.cursor || r.pending.empty()) continue;
    r.current = r.pending.front();
    r.pending.erase(r.pending.begin());
    r.cursor = start_op(*sc_->card, sc_->op(r.current->op), r.current->args);
  }
}

void Simulator::log(const std::string& rule, int replica, const std::string& detail) {
  trace_.push_back("STEP " + std::to_string(step_) + " " + rule + " " + replicas_[static_cast<std::size_t>(replica)].name +
                   (detail.empty() ? "" : " " + detail));
}

std::vector<const EventRecord*> Simulator::arbitrated(const std::set<int>* among) const {
  std::vector<const EventRecord*> out;
  for (const auto& e : history_)
    if (!among || among->count(e.id)) out.push_back(&e);
  std::sort(out.begin(), out.end(), [](const EventRecord* a, const EventRecord* b) {
    return std::tie(a->lamport, a->replica) < std::tie(b->lamport, b->replica);
  });
  return out;
}

StoreValue Simulator::eval_local(int replica) const {
  StoreValue s = sc_->s0;
  for (const auto* e : arbitrated(&replicas_.at(static_cast<std::size_t>(replica)).local))
    s = denote_effect(*sc_->card, e->effect, s);
  return s;
}

StoreValue Simulator::eval_global() const {
  StoreValue s = sc_->s0;
  for (const auto* e : arbitrated()) s = denote_effect(*sc_->card, e->effect, s);
  return s;
}

bool Simulator::permits(int replica, const EffectInstance& e) const {
  if (mode_ == LockMode::None || e.cls == Card::kNoOp) return true;
  for (const auto& other : replicas_) {
    if (other.id == replica || other.lock.empty()) continue;
    std::vector<std::string> all;
    for (const auto& g : other.lock) {
      if (!table_->accord(g).count(e.cls)) return false;
      all.insert(all.end(), g.begin(), g.end());
    }
    if (other.lock.size() > 1 && !table_->accord(all).count(e.cls)) return false;
  }
  return true;
}

std::vector<Action> Simulator::enabled() const {
  std::vector<Action> out;
  for (const auto& r : replicas_) {
    if (r.cursor && !r.cursor->emitted()) {
      const auto& guards = r.cursor->pending().guards;
      if (mode_ == LockMode::None || std::find(r.lock.begin(), r.lock.end(), guards) != r.lock.end()) {
        out.push_back({Action::Kind::Query, r.id, 0});
      } else if (!backoff_ || step_ >= r.backoff_until) {
        const auto& acc = table_->accord(guards);
        bool ok = true;
        for (const auto& e : history_)
          if (!r.local.count(e.id) && !acc.count(e.effect.cls)) ok = false;
        if (ok) out.push_back({Action::Kind::Lock, r.id, 0});
      }
    } else if (r.cursor && permits(r.id, r.cursor->result().effect)) {
      out.push_back({Action::Kind::Emit, r.id, 0});
    }
    for (const auto& e : history_) {
      if (r.local.count(e.id)) continue;
      if (std::includes(r.local.begin(), r.local.end(), e.deps.begin(), e.deps.end()))
        out.push_back({Action::Kind::Deliver, r.id, e.id});
    }
  }
  return out;
}

std::vector<int> Simulator::blocked_emitters() const {
  std::vector<int> out;
  for (const auto& r : replicas_)
    if (r.cursor && r.cursor->emitted() && !permits(r.id, r.cursor->result().effect)) out.push_back(r.id);
  return out;
}

bool Simulator::quiescent() const {
  for (const auto& r : replicas_)
    if (r.cursor || !r.pending.empty() || r.local.size() != history_.size()) return false;
  return true;
}

std::optional<Action> Simulator::deadlock_breaker() const {
  if (quiescent() || !enabled().empty()) return std::nullopt;
  // Prefer a lock holder that is itself waiting to emit: aborting a bystander
  // would leave the cycle in place.
  auto blocked = blocked_emitters();
  for (auto it = blocked.rbegin(); it != blocked.rend(); ++it)
    if (!replicas_[static_cast<std::size_t>(*it)].lock.empty()) return Action{Action::Kind::Abort, *it, 0};
  for (auto it = replicas_.rbegin(); it != replicas_.rend(); ++it)
    if (!it->lock.empty()) return Action{Action::Kind::Abort, it->id, 0};
  return std::nullopt;
}

void Simulator::apply(const Action& a) {
  auto& r = replicas_.at(static_cast<std::size_t>(a.replica));
  const Card& card = *sc_->card;
  switch (a.kind) {
    case Action::Kind::Deliver: {
      r.local.insert(a.event);
      log("DELIVER", r.id, "ev=" + std::to_string(a.event));
      break;
    }
    case Action::Kind::Lock: {
      const auto& guards = r.cursor->pending().guards;
      r.lock.push_back(guards);
      ++metrics_.lock_acquisitions[r.current->op];
      log("LOCK", r.id, guard_label(guards));
      break;
    }
    case Action::Kind::Query: {
      const auto& p = r.cursor->pending();
      QueryRecord q{p.guards, r.local, eval_local(r.id)};
      log("QUERY", r.id, guard_label(p.guards) + " " + p.binder + "={" + q.snapshot.to_string(card.schema()) + "}");
      r.cursor = resume_op(card, *r.cursor, q.snapshot);
      r.queries.push_back(std::move(q));
      break;
    }
    case Action::Kind::Emit: {
      EventRecord e;
      e.id = static_cast<int>(history_.size()) + 1;
      e.replica = r.id;
      e.effect = r.cursor->result().effect;
      e.rval = r.cursor->result().ret;
      e.deps = r.local;
      for (int d : r.local) e.lamport = std::max(e.lamport, history_[static_cast<std::size_t>(d - 1)].lamport);
      ++e.lamport;
      e.op = r.current->op;
      e.queries = std::move(r.queries);
      log("EMIT", r.id,
          e.effect.to_string() + " ret=" + e.rval.to_string() + " ev=" + std::to_string(e.id) +
              " lamport=" + std::to_string(e.lamport) + " op=" + r.current->to_string());
      r.local.insert(e.id);
      // Releasing a lock hands the new event and its causal past to everyone,
      // so no later emission can arbitrate before it.
      if (mode_ != LockMode::None && !r.lock.empty())
        for (auto& o : replicas_)
          if (o.id != r.id) o.local.insert(r.local.begin(), r.local.end());
      history_.push_back(std::move(e));
      r.lock.clear();
      r.queries.clear();
      r.cursor.reset();
      r.current.reset();
      break;
    }
    case Action::Kind::Abort: {
      log("ABORT", r.id, r.current ? r.current->to_string() : "");
      r.lock.clear();
      r.queries.clear();
      if (r.current) r.pending.insert(r.pending.begin(), *r.current);
      r.cursor.reset();
      r.current.reset();
      ++r.aborts;
      ++metrics_.aborts;
      r.backoff_until = step_ + (std::size_t{1} << std::min(r.aborts, 8));
      break;
    }
  }
  ++step_;
  ++metrics_.steps;
  normalize();
}

DExecution Simulator::extract() const {
  DExecution L;
  L.s0 = sc_->s0;
  int gid = 0;
  for (const auto* e : arbitrated()) {
    Event ev{e->id, e->effect, e->rval, {}};
    for (const auto& q : e->queries) {
      ++gid;
      L.guards.emplace(gid, ActiveGuard{gid, q.guards, q.visible});
      ev.guards.push_back(gid);
    }
    L.events.push_back(std::move(ev));
  }
  return L;
}

std::string Simulator::key() const {
  std::ostringstream os;
  for (const auto& e : history_) {
    os << e.id << ":" << e.lamport << "," << e.replica << "," << e.effect.to_string() << "," << e.rval.to_string() << "{";
    for (int d : e.deps) os << d << ",";
    os << "}";
    for (const auto& q : e.queries) {
      os << "q";
      for (int v : q.visible) os << v << ",";
    }
    os << ";";
  }
  for (const auto& r : replicas_) {
    os << "|" << r.pending.size() << (r.cursor ? (r.cursor->emitted() ? "E" : "P") : "-") << "[";
    for (int v : r.local) os << v << ",";
    os << "]L" << r.lock.size() << "Q";
    for (const auto& q : r.queries) {
      os << q.snapshot.to_string() << "(";
      for (int v : q.visible) os << v << ",";
      os << ")";
    }
  }
  return os.str();
}

RunResult run(const Scenario& sc, const AccordTable* table, const SimOptions& opts) {
  Simulator sim(sc, table, opts.mode);
  std::mt19937_64 rng(opts.seed);
  RunResult res;
  while (!sim.quiescent()) {
    if (sim.step() >= opts.max_steps) {
      res.failure = "not quiescent after " + std::to_string(opts.max_steps) + " steps";
      break;
    }
    sim.metrics().blocked_emit_steps += sim.blocked_emitters().size();
    auto acts = sim.enabled();
    if (acts.empty()) {
      if (auto brk = sim.deadlock_breaker()) {
        sim.apply(*brk);
        continue;
      }
      std::size_t wake = 0;
      for (const auto& r : sim.replicas())
        if (r.backoff_until > sim.step() && (wake == 0 || r.backoff_until < wake)) wake = r.backoff_until;
      if (!wake) {
        res.failure = "stuck: no rule applies";
        break;
      }
      sim.skip_to(wake);
      continue;
    }
    std::uniform_int_distribution<std::size_t> pick(0, acts.size() - 1);
    sim.apply(acts[pick(rng)]);
  }
  res.quiescent = sim.quiescent();
  res.trace = sim.trace();
  res.extracted = sim.extract();
  res.metrics = sim.metrics();
  res.global = sim.eval_global();
  res.convergent = res.quiescent;
  for (const auto& r : sim.replicas()) {
    res.replica_values.push_back(sim.eval_local(r.id));
    if (res.replica_values.back() != res.global) res.convergent = false;
  }
  return res;
}

RunCheck check_run(const Scenario& sc, const AccordMap& accords, const RunResult& r) {
  RunCheck c;
  c.quiescent = r.quiescent;
  c.well_formed = check_well_formed(*sc.card, r.extracted);
  c.careful = check_careful(*sc.card, r.extracted, accords);
  if (sc.invariant) c.invariant_holds = check_invariant(*sc.card, r.extracted, *sc.invariant);
  c.convergent = r.convergent;
  return c;
}

namespace {

struct Explorer {
  std::size_t depth;
  const std::function<bool(const DExecution&)>& target;
  std::unordered_set<std::string> seen;
  ExploreResult result;

  void visit(const Simulator& sim, std::size_t d) {
    if (result.found || !seen.insert(sim.key()).second) return;
    ++result.nodes;
    DExecution L = sim.extract();
    if (target(L)) {
      result.found = true;
      result.trace = sim.trace();
      result.witness = std::move(L);
      return;
    }
    if (d >= depth || sim.quiescent()) return;
    auto acts = sim.enabled();
    if (acts.empty()) {
      if (auto brk = sim.deadlock_breaker()) acts.push_back(*brk);
    }
    for (const auto& a : acts) {
      Simulator next = sim;
      next.apply(a);
      visit(next, d + 1);
      if (result.found) return;
    }
  }
};

}  // namespace

ExploreResult explore(const Scenario& sc, const AccordTable* table, LockMode mode, std::size_t depth,
                      const std::function<bool(const DExecution&)>& target) {
  Explorer ex{depth, target, {}, {}};
  Simulator sim(sc, table, mode);
  sim.set_backoff(false);
  ex.visit(sim, 0);
  return ex.result;
}

}  // namespace cardkit
