#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "cardkit/expr.hpp"
#include "cardkit/value.hpp"

namespace cardkit {

// Finite domain used by the enumeration oracle and for evaluating nested
// quantifiers concretely.
struct EnumDomain {
  std::int64_t int_min = -8;
  std::int64_t int_max = 8;
  // Range for quantified (effect-parameter) variables.
  std::int64_t param_min = 0;
  std::int64_t param_max = 4;
  // Assignments tried before giving up with Unknown.
  std::uint64_t budget = 4'000'000;

  // Integers of [lo, hi] ordered by magnitude: 0, 1, -1, 2, -2, ...
  static std::vector<std::int64_t> ordered(std::int64_t lo, std::int64_t hi);
};

// Concrete bindings for store states and variables.
class Env {
 public:
  void bind_store(const StoreRef& ref, StoreValue value);
  void bind_var(const std::string& name, Value value);

  const StoreValue& store(const StoreRef& ref) const;
  StoreValue& store(const StoreRef& ref);
  bool has_store(const StoreRef& ref) const;
  const Value* find_var(const std::string& name) const;

  // Array reads/writes past the extent yield 0 / are dropped instead of
  // raising EvalError. Used by the enumeration oracle, where arrays model
  // total maps.
  bool lenient_arrays = false;
  // Domain for nested quantifiers.
  EnumDomain domain{};

 private:
  std::vector<std::pair<StoreRef, StoreValue>> stores_;
  std::map<std::string, Value> vars_;
};

Value evaluate(const Expr& e, const Env& env);
bool holds(const Expr& f, const Env& env);

}  // namespace cardkit
