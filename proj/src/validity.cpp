#include "cardkit/validity.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstdlib>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <map>
#include <mutex>
#include <set>
#include <sstream>

#include "cardkit/error.hpp"

namespace cardkit {

std::string to_string(CheckResult::Status s) {
  switch (s) {
    case CheckResult::Status::Valid: return "Valid";
    case CheckResult::Status::Invalid: return "Invalid";
    case CheckResult::Status::Unknown: return "Unknown";
  }
  return "?";
}

std::string CheckResult::witness_string() const {
  std::string out;
  for (const auto& [k, v] : witness) {
    if (!out.empty()) out += ", ";
    out += k + "=" + v;
  }
  return out;
}

namespace {

std::string display_name(const StoreRef& store, const std::string& field) {
  switch (store.kind) {
    case StoreKind::Global: return "g." + field;
    case StoreKind::Replica: return "r." + field;
    case StoreKind::Pre: return "s." + field;
    case StoreKind::Post: return "s'." + field;
    case StoreKind::Snapshot: return store.snapshot + "." + field;
  }
  return field;
}

// Removes universal quantifiers in positive positions (root, conjuncts,
// consequents), renaming their binders apart. Validity is unchanged.
struct Stripped {
  Expr body;
  std::map<std::string, Sort> params;
};

Stripped strip_positive_foralls(const Expr& f) {
  // Names free in f must never be reused for a stripped binder.
  std::set<std::string> free;
  for (const auto& [n, s] : free_vars(f)) free.insert(n);
  std::map<std::string, Sort> params;
  struct Walker {
    std::set<std::string>& free;
    std::map<std::string, Sort>& params;
    Expr run(const Expr& g) {
      switch (g.op()) {
        case Op::Forall: {
          VarMap ren;
          for (const auto& b : g.binders()) {
            std::string fresh = b.name;
            for (int k = 1; free.count(fresh) || params.count(fresh); ++k) fresh = b.name + "_" + std::to_string(k);
            params.emplace(fresh, b.sort);
            if (fresh != b.name) ren.insert_or_assign(b.name, var(fresh, b.sort));
          }
          return run(substitute(g.kid(0), ren));
        }
        case Op::And: {
          std::vector<Expr> kids;
          for (const auto& k : g.kids()) kids.push_back(run(k));
          return land(std::move(kids));
        }
        case Op::Implies:
          return implies(g.kid(0), run(g.kid(1)));
        default:
          return g;
      }
    }
  };
  Walker w{free, params};
  Expr body = w.run(f);
  return {body, params};
}

// ---------------------------------------------------------------------------
// Enumeration

struct Slot {
  enum class Kind { Field, Cell, Var } kind;
  StoreRef store;
  std::size_t field_slot = 0;
  std::size_t cell = 0;
  std::string var;
  std::vector<Value> values;
};

bool has_symbolic_index(const Expr& e) {
  if ((e.op() == Op::Select || e.op() == Op::Store) && e.kid(1).op() != Op::IntLit) return true;
  for (const auto& k : e.kids())
    if (has_symbolic_index(k)) return true;
  return false;
}

std::vector<Value> int_values(std::int64_t lo, std::int64_t hi) {
  std::vector<Value> out;
  for (auto v : EnumDomain::ordered(lo, hi)) out.push_back(Value::integer(v));
  return out;
}

std::vector<Value> bool_values() { return {Value::boolean(false), Value::boolean(true)}; }

}  // namespace

CheckResult EnumerationChecker::check(const Expr& f) const {
  if (!f.sort().is_bool()) throw SortError("check_valid on non-boolean '" + f.to_string() + "'");
  if (f.is_true()) return CheckResult::make_valid();
  auto [body, params] = strip_positive_foralls(f);

  Env env;
  env.lenient_arrays = true;
  env.domain = domain_;

  std::vector<Slot> slots;
  const auto leaves = field_leaves(body);
  std::set<std::int64_t> indices = literal_indices(body);
  if (has_symbolic_index(body))
    for (auto i = std::max<std::int64_t>(0, domain_.param_min); i <= domain_.param_max; ++i) indices.insert(i);

  // Skeleton stores: every referenced slot gets a zero value of its sort.
  std::map<StoreRef, StoreValue> skel;
  for (const auto& leaf : leaves) {
    auto& sv = skel[leaf.store];
    if (sv.fields.size() <= leaf.slot) sv.fields.resize(leaf.slot + 1);
    Value z = Value::zero(leaf.sort);
    if (leaf.sort.is_array() && leaf.sort.length() == 0) {
      std::size_t len = indices.empty() ? 1 : static_cast<std::size_t>(*indices.rbegin() + 1);
      z = Value::zero(Sort::array(leaf.sort.element(), len));
    }
    sv.fields[leaf.slot] = z;
  }
  for (const auto& leaf : leaves) {
    if (leaf.sort.is_array()) {
      if (!leaf.sort.element().is_int() && !leaf.sort.element().is_bool())
        return CheckResult::make_unknown("enumeration does not support nested arrays");
      const auto len = skel[leaf.store].fields[leaf.slot].as_array().size();
      for (auto i : indices) {
        if (i < 0 || static_cast<std::size_t>(i) >= len) continue;
        Slot s{Slot::Kind::Cell, leaf.store, leaf.slot, static_cast<std::size_t>(i), {}, {}};
        s.values = leaf.sort.element().is_int() ? int_values(domain_.int_min, domain_.int_max) : bool_values();
        slots.push_back(std::move(s));
      }
    } else {
      Slot s{Slot::Kind::Field, leaf.store, leaf.slot, 0, {}, {}};
      s.values = leaf.sort.is_int() ? int_values(domain_.int_min, domain_.int_max) : bool_values();
      slots.push_back(std::move(s));
    }
  }
  for (const auto& [name, sort] : free_vars(body)) {
    if (sort.is_array()) return CheckResult::make_unknown("enumeration does not support array variable '" + name + "'");
    Slot s{Slot::Kind::Var, {}, 0, 0, name, {}};
    if (sort.is_bool())
      s.values = bool_values();
    else if (params.count(name))
      s.values = int_values(domain_.param_min, domain_.param_max);
    else
      s.values = int_values(domain_.int_min, domain_.int_max);
    slots.push_back(std::move(s));
  }

  std::uint64_t total = 1;
  for (const auto& s : slots) {
    if (s.values.empty()) return CheckResult::make_valid();  // empty domain: vacuous
    total *= s.values.size();
    if (total > domain_.budget)
      return CheckResult::make_unknown("enumeration budget of " + std::to_string(domain_.budget) + " assignments exceeded");
  }

  std::vector<std::size_t> pos(slots.size(), 0);
  auto assign = [&](std::size_t k) {
    const Slot& s = slots[k];
    const Value& v = s.values[pos[k]];
    switch (s.kind) {
      case Slot::Kind::Field:
        skel[s.store].fields[s.field_slot] = v;
        break;
      case Slot::Kind::Cell:
        skel[s.store].fields[s.field_slot].as_array()[s.cell] = v;
        break;
      case Slot::Kind::Var:
        env.bind_var(s.var, v);
        break;
    }
  };
  for (std::size_t k = 0; k < slots.size(); ++k) assign(k);

  for (std::uint64_t n = 0; n < total; ++n) {
    for (const auto& [ref, sv] : skel) env.bind_store(ref, sv);
    if (!holds(body, env)) {
      CheckResult r;
      r.status = CheckResult::Status::Invalid;
      for (const auto& leaf : leaves) r.witness.emplace_back(display_name(leaf.store, leaf.name), skel[leaf.store].fields[leaf.slot].to_string());
      for (const auto& s : slots)
        if (s.kind == Slot::Kind::Var) r.witness.emplace_back(s.var, s.values[pos[&s - slots.data()]].to_string());
      return r;
    }
    // Odometer, last slot fastest.
    for (std::size_t k = slots.size(); k-- > 0;) {
      if (++pos[k] < slots[k].values.size()) {
        assign(k);
        break;
      }
      pos[k] = 0;
      assign(k);
    }
  }
  return CheckResult::make_valid();
}

// ---------------------------------------------------------------------------
// SMT-LIB2

std::string smt_symbol(const StoreRef& store, const std::string& field) {
  switch (store.kind) {
    case StoreKind::Global: return field + "_g";
    case StoreKind::Replica: return field + "_r";
    case StoreKind::Pre: return field + "_pre";
    case StoreKind::Post: return field + "_post";
    case StoreKind::Snapshot: return store.snapshot + "_" + field;
  }
  return field;
}

namespace {

std::string var_symbol(const std::string& name) {
  std::string out;
  for (char c : name) out += (c == '\'') ? std::string("_p") : std::string(1, c);
  return out;
}

std::string smt_int(std::int64_t v) { return v < 0 ? "(- " + std::to_string(-v) + ")" : std::to_string(v); }

std::string smt_zero(const Sort& s) {
  switch (s.kind()) {
    case Sort::Kind::Int: return "0";
    case Sort::Kind::Bool: return "false";
    case Sort::Kind::Array: return "((as const " + s.to_smtlib() + ") " + smt_zero(s.element()) + ")";
  }
  return "0";
}

void emit(std::ostream& os, const Expr& e) {
  auto nary = [&](const char* op) {
    os << "(" << op;
    for (const auto& k : e.kids()) {
      os << " ";
      emit(os, k);
    }
    os << ")";
  };
  switch (e.op()) {
    case Op::IntLit: os << smt_int(e.int_value()); return;
    case Op::BoolLit: os << (e.bool_value() ? "true" : "false"); return;
    case Op::Field: os << smt_symbol(e.store(), e.name()); return;
    case Op::Var: os << var_symbol(e.name()); return;
    case Op::ArrayLit: {
      std::string acc = smt_zero(e.sort());
      for (std::size_t i = 0; i < e.kids().size(); ++i) {
        std::ostringstream v;
        emit(v, e.kid(i));
        acc = "(store " + acc + " " + std::to_string(i) + " " + v.str() + ")";
      }
      os << acc;
      return;
    }
    case Op::Add: nary("+"); return;
    case Op::Sub: nary("-"); return;
    case Op::Mul: nary("*"); return;
    case Op::Neg: nary("-"); return;
    case Op::Select: nary("select"); return;
    case Op::Store: nary("store"); return;
    case Op::Ite: nary("ite"); return;
    case Op::Eq: nary("="); return;
    case Op::Le: nary("<="); return;
    case Op::Lt: nary("<"); return;
    case Op::Ge: nary(">="); return;
    case Op::Gt: nary(">"); return;
    case Op::Not: nary("not"); return;
    case Op::And: nary("and"); return;
    case Op::Or: nary("or"); return;
    case Op::Implies: nary("=>"); return;
    case Op::Forall:
      os << "(forall (";
      for (std::size_t i = 0; i < e.binders().size(); ++i) {
        if (i) os << " ";
        os << "(" << var_symbol(e.binders()[i].name) << " " << e.binders()[i].sort.to_smtlib() << ")";
      }
      os << ") ";
      emit(os, e.kid(0));
      os << ")";
      return;
  }
}

struct Decl {
  std::string symbol;
  std::string display;
  Sort sort;
};

std::vector<Decl> declarations(const Expr& body) {
  std::vector<Decl> out;
  for (const auto& leaf : field_leaves(body))
    out.push_back({smt_symbol(leaf.store, leaf.name), display_name(leaf.store, leaf.name), leaf.sort});
  for (const auto& [name, sort] : free_vars(body)) out.push_back({var_symbol(name), name, sort});
  return out;
}

std::string script_for(const Expr& body, const std::vector<Decl>& decls) {
  std::ostringstream os;
  os << "(set-option :produce-models true)\n(set-logic AUFLIA)\n";
  for (const auto& d : decls) os << "(declare-const " << d.symbol << " " << d.sort.to_smtlib() << ")\n";
  os << "(assert (not ";
  emit(os, body);
  os << "))\n(check-sat)\n";
  return os.str();
}

// Minimal s-expression reader for (get-value ...) responses.
struct SExpr {
  std::string atom;
  std::vector<SExpr> list;
  bool is_list = false;

  std::string render() const {
    if (!is_list) return atom;
    std::string out = "(";
    for (std::size_t i = 0; i < list.size(); ++i) {
      if (i) out += " ";
      out += list[i].render();
    }
    return out + ")";
  }
};

bool read_sexpr(const std::string& s, std::size_t& i, SExpr& out) {
  while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
  if (i >= s.size()) return false;
  if (s[i] == '(') {
    ++i;
    out.is_list = true;
    for (;;) {
      while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
      if (i >= s.size()) return false;
      if (s[i] == ')') {
        ++i;
        return true;
      }
      SExpr kid;
      if (!read_sexpr(s, i, kid)) return false;
      out.list.push_back(std::move(kid));
    }
  }
  if (s[i] == ')') return false;
  std::size_t start = i;
  if (s[i] == '"') {
    for (++i; i < s.size() && s[i] != '"'; ++i) {
    }
    ++i;
  } else {
    while (i < s.size() && !std::isspace(static_cast<unsigned char>(s[i])) && s[i] != '(' && s[i] != ')') ++i;
  }
  out.atom = s.substr(start, i - start);
  return true;
}

std::string render_value(const SExpr& v) {
  if (v.is_list && v.list.size() == 2 && !v.list[0].is_list && v.list[0].atom == "-" && !v.list[1].is_list)
    return "-" + v.list[1].atom;
  return v.render();
}

struct ProcessResult {
  bool timed_out = false;
  bool launched = false;
  std::string out;
  std::string error;
};

ProcessResult run_process(const std::string& path, const std::vector<std::string>& args, const std::string& input,
                          std::chrono::milliseconds timeout) {
  static std::once_flag sigpipe_once;
  std::call_once(sigpipe_once, [] { ::signal(SIGPIPE, SIG_IGN); });

  ProcessResult res;
  int in_pipe[2], out_pipe[2];
  if (::pipe2(in_pipe, O_CLOEXEC) != 0) {
    res.error = std::strerror(errno);
    return res;
  }
  if (::pipe2(out_pipe, O_CLOEXEC) != 0) {
    res.error = std::strerror(errno);
    ::close(in_pipe[0]);
    ::close(in_pipe[1]);
    return res;
  }
  std::vector<char*> argv;
  argv.push_back(const_cast<char*>(path.c_str()));
  for (const auto& a : args) argv.push_back(const_cast<char*>(a.c_str()));
  argv.push_back(nullptr);

  pid_t pid = ::fork();
  if (pid < 0) {
    res.error = std::strerror(errno);
    for (int fd : {in_pipe[0], in_pipe[1], out_pipe[0], out_pipe[1]}) ::close(fd);
    return res;
  }
  if (pid == 0) {
    ::dup2(in_pipe[0], STDIN_FILENO);
    ::dup2(out_pipe[1], STDOUT_FILENO);
    int devnull = ::open("/dev/null", O_WRONLY);
    if (devnull >= 0) ::dup2(devnull, STDERR_FILENO);
    ::execv(path.c_str(), argv.data());
    ::_exit(127);
  }
  ::close(in_pipe[0]);
  ::close(out_pipe[1]);
  res.launched = true;

  const auto deadline = std::chrono::steady_clock::now() + timeout;
  std::size_t written = 0;
  int wfd = in_pipe[1];
  ::fcntl(wfd, F_SETFL, O_NONBLOCK);
  bool eof = false;
  char buf[4096];
  while (!eof) {
    auto now = std::chrono::steady_clock::now();
    if (now >= deadline) {
      res.timed_out = true;
      break;
    }
    pollfd fds[2];
    int nfds = 0;
    fds[nfds++] = {out_pipe[0], POLLIN, 0};
    if (wfd >= 0) fds[nfds++] = {wfd, POLLOUT, 0};
    auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now).count();
    int rc = ::poll(fds, static_cast<nfds_t>(nfds), static_cast<int>(std::max<long long>(1, left)));
    if (rc < 0) {
      if (errno == EINTR) continue;
      res.error = std::strerror(errno);
      break;
    }
    if (wfd >= 0 && nfds > 1 && (fds[1].revents & (POLLOUT | POLLERR | POLLHUP))) {
      ssize_t n = ::write(wfd, input.data() + written, input.size() - written);
      if (n > 0) written += static_cast<std::size_t>(n);
      if (n < 0 && errno != EAGAIN) written = input.size();
      if (written >= input.size()) {
        ::close(wfd);
        wfd = -1;
      }
    }
    if (fds[0].revents & (POLLIN | POLLHUP | POLLERR)) {
      ssize_t n = ::read(out_pipe[0], buf, sizeof buf);
      if (n > 0)
        res.out.append(buf, static_cast<std::size_t>(n));
      else if (n == 0 || errno != EINTR)
        eof = true;
    }
  }
  if (wfd >= 0) ::close(wfd);
  ::close(out_pipe[0]);
  if (res.timed_out) ::kill(pid, SIGKILL);
  int status = 0;
  ::waitpid(pid, &status, 0);
  if (!res.timed_out && WIFEXITED(status) && WEXITSTATUS(status) == 127 && res.out.empty())
    res.error = "could not execute " + path;
  return res;
}

std::vector<std::string> solver_args(const std::string& path) {
  const std::string base = std::filesystem::path(path).filename().string();
  if (base.find("cvc5") != std::string::npos || base.find("cvc4") != std::string::npos) return {"--lang=smt2"};
  if (base.find("z3") != std::string::npos) return {"-in", "-smt2"};
  return {"-in"};
}

std::mutex cache_mutex;
std::map<std::string, CheckResult>& cache() {
  static std::map<std::string, CheckResult> c;
  return c;
}

}  // namespace

std::string to_smtlib(const Expr& f) {
  auto stripped = strip_positive_foralls(f);
  stripped.body = expand_bounded_foralls(stripped.body);
  return script_for(stripped.body, declarations(stripped.body));
}

CheckResult SolverChecker::check(const Expr& f) const {
  if (!f.sort().is_bool()) throw SortError("check_valid on non-boolean '" + f.to_string() + "'");
  if (f.is_true()) return CheckResult::make_valid();
  auto stripped = strip_positive_foralls(f);
  stripped.body = expand_bounded_foralls(stripped.body);
  const auto decls = declarations(stripped.body);
  std::string script = script_for(stripped.body, decls);
  if (!decls.empty()) {
    script += "(get-value (";
    for (std::size_t i = 0; i < decls.size(); ++i) script += (i ? " " : "") + decls[i].symbol;
    script += "))\n";
  }
  const std::string key = config_.path + "\n" + script;
  {
    std::lock_guard<std::mutex> lock(cache_mutex);
    auto it = cache().find(key);
    if (it != cache().end()) return it->second;
  }

  static const bool trace = std::getenv("CARDKIT_TRACE_SMT") != nullptr;
  if (trace) std::fprintf(stderr, "; query\n%s", script.c_str());
  auto proc = run_process(config_.path, solver_args(config_.path), script, config_.timeout);
  CheckResult r;
  if (!proc.error.empty()) return CheckResult::make_unknown("solver failure: " + proc.error);
  if (proc.timed_out) return CheckResult::make_unknown("solver timeout after " + std::to_string(config_.timeout.count()) + " ms");

  std::size_t i = 0;
  SExpr first;
  if (!read_sexpr(proc.out, i, first) || first.is_list) {
    return CheckResult::make_unknown("unexpected solver output: " + proc.out.substr(0, 200));
  }
  if (first.atom == "unsat") {
    r = CheckResult::make_valid();
  } else if (first.atom == "sat") {
    r.status = CheckResult::Status::Invalid;
    SExpr values;
    if (read_sexpr(proc.out, i, values) && values.is_list) {
      std::map<std::string, std::string> by_symbol;
      for (const auto& pair : values.list)
        if (pair.is_list && pair.list.size() == 2) by_symbol[pair.list[0].render()] = render_value(pair.list[1]);
      for (const auto& d : decls) {
        auto it = by_symbol.find(d.symbol);
        if (it != by_symbol.end()) r.witness.emplace_back(d.display, it->second);
      }
    }
  } else {
    return CheckResult::make_unknown("solver answered " + first.atom);
  }
  std::lock_guard<std::mutex> lock(cache_mutex);
  cache().emplace(key, r);
  return r;
}

std::optional<std::string> find_solver(const std::optional<std::string>& explicit_path) {
  if (explicit_path && !explicit_path->empty()) return explicit_path;
  if (const char* env = std::getenv("CARDKIT_SOLVER"); env && *env) return std::string(env);
  const char* path = std::getenv("PATH");
  if (!path) return std::nullopt;
  for (const char* name : {"z3", "cvc5"}) {
    std::stringstream ss(path);
    std::string dir;
    while (std::getline(ss, dir, ':')) {
      if (dir.empty()) continue;
      auto candidate = std::filesystem::path(dir) / name;
      if (::access(candidate.c_str(), X_OK) == 0) return candidate.string();
    }
  }
  return std::nullopt;
}

CheckResult check_valid(const Expr& f, const Checker& checker) { return checker.check(f); }

}  // namespace cardkit
