#pragma once

#include <fstream>
#include <memory>
#include <random>
#include <sstream>
#include <string>

#include "cardkit/syntax.hpp"
#include "cardkit/validity.hpp"

namespace cardkit::test_support {

inline std::unique_ptr<SolverChecker> solver() {
  auto path = find_solver();
  if (!path) return nullptr;
  return std::make_unique<SolverChecker>(SolverConfig{*path, std::chrono::milliseconds(10'000)});
}

inline std::string corpus_path(const std::string& rel) { return std::string(CARDKIT_SOURCE_DIR) + "/corpus/" + rel; }

inline std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline Card load_card(const std::string& file) { return parse_card(slurp(corpus_path(file))); }

// Random linear formulas over int fields of two stores and one parameter,
// coefficients in [-3, 3].
class FormulaGen {
 public:
  explicit FormulaGen(std::uint32_t seed) : rng_(seed) {}

  Expr term() {
    std::vector<Expr> atoms = {field(StoreRef::global(), "val", 0, Sort::integer()),
                               field(StoreRef::replica(), "val", 0, Sort::integer()), var("n", Sort::integer())};
    Expr t = int_lit(pick(-3, 3));
    int k = pick(1, 2);
    for (int i = 0; i < k; ++i) t = plus(t, times(int_lit(pick(-3, 3)), atoms[static_cast<std::size_t>(pick(0, 2))]));
    return t;
  }

  Expr atom() {
    Expr a = term(), b = term();
    switch (pick(0, 3)) {
      case 0: return le(a, b);
      case 1: return lt(a, b);
      case 2: return eq(a, b);
      default: return ge(a, b);
    }
  }

  Expr formula(int depth = 2) {
    if (depth == 0) return atom();
    switch (pick(0, 4)) {
      case 0: return land(formula(depth - 1), formula(depth - 1));
      case 1: return lor(formula(depth - 1), formula(depth - 1));
      case 2: return implies(formula(depth - 1), formula(depth - 1));
      case 3: return lnot(formula(depth - 1));
      default: return atom();
    }
  }

  int pick(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  std::mt19937& rng() { return rng_; }

 private:
  std::mt19937 rng_;
};

}  // namespace cardkit::test_support

#define CARDKIT_REQUIRE_SOLVER(var)                                   \
  auto var = ::cardkit::test_support::solver();                            \
  if (!var) GTEST_SKIP() << "no SMT solver (set CARDKIT_SOLVER)"
