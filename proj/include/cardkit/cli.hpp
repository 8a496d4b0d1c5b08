#pragma once

#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "cardkit/evaluate.hpp"
#include "cardkit/validity.hpp"

namespace cardkit {

namespace exit_code {
constexpr int kOk = 0;
constexpr int kUsage = 1;
constexpr int kParse = 2;
constexpr int kSolver = 3;
constexpr int kInvalid = 4;
constexpr int kCheck = 5;
constexpr int kNotQuiescent = 6;
constexpr int kMismatch = 7;
}  // namespace exit_code

struct Config {
  std::optional<std::string> solver;  // else $CARDKIT_SOLVER, else PATH
  int timeout_ms = 10'000;
  bool enumerate = false;  // bounded enumeration instead of the solver
  EnumDomain domain;
  int max_iter = 10;
  int seeds = 1;

  // Throws SolverError when no solver is found and enumeration is off.
  std::unique_ptr<Checker> checker() const;
};

// One row of the benchmark table.
struct BenchRow {
  std::string application;
  std::string file;
  std::size_t guards = 0;
  std::size_t effects = 0;
  double millis = 0;            // whole conflict table
  double max_guard_millis = 0;  // slowest single guard
  bool fixture_match = false;
  std::vector<std::string> mismatches;
};

// The six applications, in table order, as (name, card file).
const std::vector<std::pair<std::string, std::string>>& bench_applications();
std::vector<BenchRow> run_bench(const std::string& corpus_dir, const Checker& checker, int max_iter = 10);

// Default corpus directory (the source tree's corpus/).
std::string default_corpus_dir();

// `args` excludes the program name. Returns the exit status.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace cardkit
