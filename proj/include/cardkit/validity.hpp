#pragma once

#include <chrono>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cardkit/evaluate.hpp"
#include "cardkit/expr.hpp"

namespace cardkit {

struct CheckResult {
  enum class Status { Valid, Invalid, Unknown };

  Status status = Status::Unknown;
  // Falsifying assignment for Invalid, as (name, value) pairs. Store fields
  // are named "g.f", "r.f", "s.f", "s'.f" or "x.f".
  std::vector<std::pair<std::string, std::string>> witness;
  std::string reason;

  bool valid() const { return status == Status::Valid; }
  bool invalid() const { return status == Status::Invalid; }
  bool unknown() const { return status == Status::Unknown; }
  std::string witness_string() const;

  static CheckResult make_valid() { return {Status::Valid, {}, {}}; }
  static CheckResult make_unknown(std::string why) { return {Status::Unknown, {}, std::move(why)}; }
};

std::string to_string(CheckResult::Status s);

class Checker {
 public:
  virtual ~Checker() = default;
  virtual CheckResult check(const Expr& f) const = 0;
  virtual std::string name() const = 0;
};

// Exhaustive evaluation over an EnumDomain. Top-level universal quantifiers
// are treated as free variables ranging over the parameter domain; other
// free integer variables range over the integer domain. Array cells outside
// the indices a formula can touch are fixed at 0.
class EnumerationChecker : public Checker {
 public:
  explicit EnumerationChecker(EnumDomain domain = {}) : domain_(domain) {}
  CheckResult check(const Expr& f) const override;
  std::string name() const override { return "enumeration"; }
  const EnumDomain& domain() const { return domain_; }

 private:
  EnumDomain domain_;
};

struct SolverConfig {
  std::string path;
  std::chrono::milliseconds timeout{10'000};
};

// One solver process per (uncached) query, SMT-LIB2 over stdin/stdout.
class SolverChecker : public Checker {
 public:
  explicit SolverChecker(SolverConfig config) : config_(std::move(config)) {}
  CheckResult check(const Expr& f) const override;
  std::string name() const override { return "solver:" + config_.path; }
  const SolverConfig& config() const { return config_; }

 private:
  SolverConfig config_;
};

// Explicit path, else $CARDKIT_SOLVER, else z3 or cvc5 on PATH.
std::optional<std::string> find_solver(const std::optional<std::string>& explicit_path = std::nullopt);

// SMT-LIB2 symbol used for a field access or variable.
std::string smt_symbol(const StoreRef& store, const std::string& field);

// Deterministic validity script: declarations, (assert (not f)), (check-sat).
std::string to_smtlib(const Expr& f);

CheckResult check_valid(const Expr& f, const Checker& checker);

}  // namespace cardkit
