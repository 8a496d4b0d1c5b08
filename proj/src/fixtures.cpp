#include "cardkit/fixtures.hpp"

#include <algorithm>
#include <functional>
#include <set>
#include <sstream>
#include <unordered_map>

#include "cardkit/error.hpp"

namespace cardkit {

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::Safe: return "safe";
    case Verdict::Conflicting: return "conflicting";
    case Verdict::Undetermined: return "undetermined";
  }
  return "?";
}

std::vector<std::string> GuardFixture::with(const Card& card, Verdict v) const {
  std::vector<std::string> out;
  for (const auto& e : card.effects()) {
    auto it = verdicts.find(e.name);
    if (it != verdicts.end() && it->second == v) out.push_back(e.name);
  }
  return out;
}

const GuardFixture* Fixture::find(const std::string& guard) const {
  for (const auto& g : guards)
    if (g.guard == guard) return &g;
  return nullptr;
}

namespace {

void walk(const Expr& e, const std::function<void(const Expr&)>& f) {
  f(e);
  for (const auto& k : e.kids()) walk(k, f);
}

// Literal indices the guard reads, then the first `extra` others. A guard
// reading more than `max_cells` cells (a sum) gets the first `max_cells`.
std::vector<std::int64_t> focus_cells(const Card& card, const GuardDef& g, int extra, int max_cells) {
  std::set<std::int64_t> lits;
  walk(g.body, [&](const Expr& e) {
    if (e.op() == Op::Select && e.kid(1).op() == Op::IntLit) lits.insert(e.kid(1).int_value());
  });
  std::size_t len = 0;
  for (const auto& f : card.schema().fields())
    if (f.sort.is_array()) len = std::max(len, f.sort.length());
  if (static_cast<int>(lits.size()) > max_cells) {
    lits.clear();
    extra = max_cells;
  }
  std::vector<std::int64_t> out(lits.begin(), lits.end());
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(len) && extra > 0; ++i) {
    if (lits.count(i)) continue;
    out.push_back(i);
    --extra;
  }
  return out;
}

bool used_as_index(const EffectClass& cls, const std::string& param) {
  bool found = false;
  for (const auto& a : cls.assignments)
    walk(a, [&](const Expr& e) {
      if ((e.op() == Op::Select || e.op() == Op::Store) && e.kid(1).op() == Op::Var && e.kid(1).name() == param)
        found = true;
    });
  return found;
}

std::vector<EffectInstance> instances(const Card& card, const EffectClass& cls, const FixtureDomain& dom,
                                      const std::vector<std::int64_t>& cells) {
  std::vector<std::vector<Value>> choices;
  for (const auto& p : cls.params) {
    std::vector<Value> vs;
    if (p.sort.is_bool()) {
      vs = {Value::boolean(false), Value::boolean(true)};
    } else if (p.sort.is_int() && used_as_index(cls, p.name)) {
      for (auto c : cells) vs.push_back(Value::integer(c));
    } else if (p.sort.is_int()) {
      for (int v = dom.param_lo; v <= dom.param_hi; ++v) vs.push_back(Value::integer(v));
    } else {
      throw Error("effect " + cls.name + ": array parameters are outside the fixture domain");
    }
    choices.push_back(std::move(vs));
  }
  std::vector<EffectInstance> out;
  std::vector<Value> args;
  std::function<void(std::size_t)> rec = [&](std::size_t i) {
    if (i == choices.size()) {
      EffectInstance inst{cls.name, args};
      try {
        check_instance(card, inst);
        out.push_back(std::move(inst));
      } catch (const Error&) {
      }
      return;
    }
    for (const auto& v : choices[i]) {
      args.push_back(v);
      rec(i + 1);
      args.pop_back();
    }
  };
  rec(0);
  return out;
}

std::vector<StoreValue> initial_stores(const Card& card, const FixtureDomain& dom, const std::vector<std::int64_t>& cells) {
  std::vector<StoreValue> out{StoreValue{}};
  for (const auto& f : card.schema().fields()) {
    std::vector<Value> vs;
    if (f.sort.is_bool()) {
      vs = {Value::boolean(false), Value::boolean(true)};
    } else if (f.sort.is_int()) {
      for (int v = dom.value_lo; v <= dom.value_hi; ++v) vs.push_back(Value::integer(v));
    } else {
      Value::Array base(f.sort.length(), Value::zero(f.sort.element()));
      std::vector<Value::Array> arrays{base};
      for (auto c : cells) {
        if (c < 0 || c >= static_cast<std::int64_t>(base.size())) continue;
        std::vector<Value::Array> next;
        for (const auto& a : arrays)
          for (int v = dom.value_lo; v <= dom.value_hi; ++v) {
            auto b = a;
            b[static_cast<std::size_t>(c)] = Value::integer(v);
            next.push_back(std::move(b));
          }
        arrays = std::move(next);
      }
      for (auto& a : arrays) vs.push_back(Value::array(std::move(a)));
    }
    std::vector<StoreValue> next;
    for (const auto& s : out)
      for (const auto& v : vs) {
        auto t = s;
        t.fields.push_back(v);
        next.push_back(std::move(t));
      }
    out = std::move(next);
  }
  return out;
}

// Pairs are keyed compactly: every int, bool and array cell as 16 bits.
void encode(const Value& v, std::string& out) {
  if (v.is_array()) {
    for (const auto& x : v.as_array()) encode(x, out);
    return;
  }
  const auto x = static_cast<std::uint16_t>(v.is_bool() ? (v.as_bool() ? 1 : 0) : v.as_int());
  out.push_back(static_cast<char>(x & 0xff));
  out.push_back(static_cast<char>(x >> 8));
}

std::string encode(const StoreValue& g, const StoreValue& r) {
  std::string out;
  for (const auto& v : g.fields) encode(v, out);
  for (const auto& v : r.fields) encode(v, out);
  return out;
}

bool in_box(const Value& v, int box) {
  if (v.is_array()) return std::all_of(v.as_array().begin(), v.as_array().end(), [&](const Value& x) { return in_box(x, box); });
  return !v.is_int() || (v.as_int() >= -box && v.as_int() <= box);
}

bool in_box(const StoreValue& s, int box) {
  return std::all_of(s.fields.begin(), s.fields.end(), [&](const Value& v) { return in_box(v, box); });
}

// Effect application memoized per (instance, store); the search revisits the
// same single stores in many pairs.
class Denoter {
 public:
  Denoter(const Card& card, const std::vector<EffectInstance>& insts) : card_(card), insts_(insts) {}

  const StoreValue& operator()(std::size_t m, const StoreValue& s) {
    std::string key(reinterpret_cast<const char*>(&m), sizeof m);
    for (const auto& v : s.fields) encode(v, key);
    auto it = cache_.find(key);
    if (it == cache_.end()) it = cache_.emplace(std::move(key), denote_effect(card_, insts_[m], s)).first;
    return it->second;
  }

 private:
  const Card& card_;
  const std::vector<EffectInstance>& insts_;
  std::unordered_map<std::string, StoreValue> cache_;
};

struct Node {
  int parent = -1;
  int move = -1;  // index into the instances; -1 at a root
  int root = 0;   // initial store of the path
  bool visible = false;
};

struct Found {
  int node;
  std::set<std::string> unseen;
};

DExecution witness_of(const GuardDef& guard, const std::vector<Node>& nodes, const std::vector<EffectInstance>& insts,
                      const std::vector<StoreValue>& starts, int leaf) {
  std::vector<const Node*> path;
  for (int i = leaf; nodes[i].parent >= 0; i = nodes[i].parent) path.push_back(&nodes[i]);
  std::reverse(path.begin(), path.end());
  DExecution L;
  L.s0 = starts[static_cast<std::size_t>(nodes[leaf].root)];
  ActiveGuard ag;
  ag.id = 1;
  ag.guards = {guard.name};
  int id = 0;
  for (const Node* n : path) {
    Event e;
    e.id = ++id;
    e.effect = insts[static_cast<std::size_t>(n->move)];
    e.rval = Value::integer(0);
    if (n->visible) ag.visible.insert(e.id);
    L.events.push_back(std::move(e));
  }
  Event owner;
  owner.id = ++id;
  owner.effect = EffectInstance::noop();
  owner.rval = Value::integer(0);
  owner.guards = {1};
  L.events.push_back(std::move(owner));
  L.guards[1] = std::move(ag);
  return L;
}

}  // namespace

GuardFixture build_guard_fixture(const Card& card, const std::string& guard_name, const FixtureDomain& dom) {
  const GuardDef& guard = card.guard(guard_name);
  GuardFixture out;
  out.guard = guard_name;
  const auto cells = focus_cells(card, guard, dom.extra_cells, dom.max_cells);

  std::vector<EffectInstance> insts;
  for (const auto& cls : card.effects()) {
    if (cls.is_identity()) {
      out.verdicts[cls.name] = Verdict::Safe;
      continue;
    }
    auto more = instances(card, cls, dom, cells);
    insts.insert(insts.end(), more.begin(), more.end());
  }
  std::set<std::string> presumed;
  for (const auto& e : insts) presumed.insert(e.cls);
  const auto starts = initial_stores(card, dom, cells);
  Denoter denote(card, insts);

  while (true) {
    std::vector<Node> nodes;
    std::unordered_map<std::string, int> seen;
    std::vector<std::pair<StoreValue, StoreValue>> layer;  // stores of the newest nodes
    for (std::size_t k = 0; k < starts.size(); ++k) {
      if (!seen.emplace(encode(starts[k], starts[k]), static_cast<int>(nodes.size())).second) continue;
      nodes.push_back(Node{-1, -1, static_cast<int>(k), false});
      layer.emplace_back(starts[k], starts[k]);
    }
    std::vector<Found> found;
    bool exhausted = false;
    std::size_t layer_begin = 0;
    for (int d = 0; d < dom.depth && found.empty() && !exhausted; ++d) {
      const std::size_t layer_end = nodes.size();
      std::vector<std::pair<StoreValue, StoreValue>> next;
      for (std::size_t i = layer_begin; i < layer_end && !exhausted; ++i) {
        const auto& [cg, cr] = layer[i - layer_begin];
        for (std::size_t m = 0; m < insts.size() && !exhausted; ++m) {
          const bool may_hide = presumed.count(insts[m].cls) > 0;
          const StoreValue& g = denote(m, cg);
          if (!in_box(g, dom.value_box)) continue;
          const StoreValue& rv = denote(m, cr);
          for (int vis = may_hide ? 0 : 1; vis <= 1; ++vis) {
            if (out.transitions >= dom.budget) {
              exhausted = true;
              break;
            }
            ++out.transitions;
            const StoreValue& r = vis ? rv : cr;
            if (!in_box(r, dom.value_box)) continue;
            const int idx = static_cast<int>(nodes.size());
            if (!seen.emplace(encode(g, r), idx).second) continue;
            nodes.push_back(Node{static_cast<int>(i), static_cast<int>(m), nodes[i].root, vis == 1});
            next.emplace_back(g, r);
            if (!guard_eval(card, guard, g, r)) {
              Found f{idx, {}};
              for (int k = idx; nodes[k].parent >= 0; k = nodes[k].parent)
                if (!nodes[k].visible) f.unseen.insert(insts[static_cast<std::size_t>(nodes[k].move)].cls);
              found.push_back(std::move(f));
            }
          }
        }
      }
      layer = std::move(next);
      layer_begin = layer_end;
    }

    if (found.empty()) {
      for (const auto& c : presumed) out.verdicts[c] = exhausted ? Verdict::Undetermined : Verdict::Safe;
      break;
    }
    bool progress = false;
    for (const auto& f : found) {
      if (f.unseen.size() != 1) continue;
      const std::string& cls = *f.unseen.begin();
      if (!presumed.count(cls)) continue;
      presumed.erase(cls);
      out.verdicts[cls] = Verdict::Conflicting;
      out.witnesses[cls] = witness_of(guard, nodes, insts, starts, f.node);
      progress = true;
    }
    if (!progress) {
      for (const auto& f : found)
        for (const auto& c : f.unseen)
          if (presumed.erase(c)) out.verdicts[c] = Verdict::Undetermined;
    }
  }
  return out;
}

Fixture build_fixture(const Card& card, const FixtureDomain& dom) {
  Fixture f;
  f.card = card.name();
  for (const auto& g : card.guards()) f.guards.push_back(build_guard_fixture(card, g.name, dom));
  return f;
}

std::string write_fixture(const Card& card, const Fixture& f) {
  std::ostringstream out;
  out << "card\t" << f.card << "\n";
  for (const auto& g : f.guards) {
    out << "guard\t" << g.guard << "\n";
    for (const auto& e : card.effects()) {
      auto it = g.verdicts.find(e.name);
      if (it != g.verdicts.end()) out << "verdict\t" << e.name << "\t" << to_string(it->second) << "\n";
    }
    for (const auto& e : card.effects()) {
      auto it = g.witnesses.find(e.name);
      if (it == g.witnesses.end()) continue;
      std::string text = write_execution(card, it->second);
      std::replace(text.begin(), text.end(), '\n', ' ');
      while (!text.empty() && text.back() == ' ') text.pop_back();
      out << "witness\t" << e.name << "\t" << text << "\n";
    }
    out << "end\n";
  }
  return out.str();
}

Fixture read_fixture(const Card& card, const std::string& text) {
  Fixture f;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  GuardFixture* cur = nullptr;
  auto fail = [&](const std::string& msg) { throw ParseError(msg, lineno, 1); };
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> cols;
    std::size_t pos = 0;
    while (true) {
      auto tab = line.find('\t', pos);
      cols.push_back(line.substr(pos, tab == std::string::npos ? std::string::npos : tab - pos));
      if (tab == std::string::npos) break;
      pos = tab + 1;
    }
    const std::string& key = cols[0];
    if (key == "card") {
      if (cols.size() != 2) fail("card expects one value");
      if (cols[1] != card.name()) fail("fixture is for card '" + cols[1] + "', not '" + card.name() + "'");
      f.card = cols[1];
    } else if (key == "guard") {
      if (cols.size() != 2 || !card.find_guard(cols[1])) fail("unknown guard");
      f.guards.emplace_back();
      f.guards.back().guard = cols[1];
      cur = &f.guards.back();
    } else if (key == "verdict" || key == "witness") {
      if (!cur) fail(key + " outside a guard");
      if (cols.size() != 3 || !card.find_effect(cols[1])) fail("malformed " + key);
      if (key == "verdict") {
        if (cols[2] == "safe") cur->verdicts[cols[1]] = Verdict::Safe;
        else if (cols[2] == "conflicting") cur->verdicts[cols[1]] = Verdict::Conflicting;
        else if (cols[2] == "undetermined") cur->verdicts[cols[1]] = Verdict::Undetermined;
        else fail("unknown verdict '" + cols[2] + "'");
      } else {
        try {
          cur->witnesses[cols[1]] = read_execution(card, cols[2]);
        } catch (const ParseError& e) {
          fail(std::string("witness: ") + e.what());
        }
      }
    } else if (key == "end") {
      cur = nullptr;
    } else {
      fail("unknown key '" + key + "'");
    }
  }
  if (f.card.empty()) throw ParseError("missing card line", lineno, 1);
  return f;
}

std::vector<std::string> compare_fixture(const Card& card, const GuardFixture& f, const AccordReport& rep) {
  std::vector<std::string> out;
  for (const auto& e : card.effects()) {
    auto it = f.verdicts.find(e.name);
    if (it == f.verdicts.end()) {
      out.push_back(f.guard + ": no verdict for " + e.name);
      continue;
    }
    if (it->second == Verdict::Undetermined) continue;
    const bool safe = it->second == Verdict::Safe;
    if (safe != rep.in_accord(e.name))
      out.push_back(f.guard + ": " + e.name + " is " + to_string(it->second) + " in the fixture but " +
                    (rep.in_accord(e.name) ? "in accord" : "in conflict") + " by inference");
  }
  return out;
}

}  // namespace cardkit
