#pragma once

// Deterministic corpus of propositional formulas over at most 12 variables,
// plus truth-table reference semantics.

#include <optional>
#include <random>
#include <vector>

#include "isolde/prop.hpp"

namespace corpus {

using namespace isolde::prop;

struct Entry {
  PropFormula formula;
  Var num_vars;
};

class PropGen {
 public:
  explicit PropGen(std::uint64_t seed) : rng_(seed) {}

  PropFormula gen(Var vars, int depth) {
    std::uniform_int_distribution<int> pick(0, depth <= 0 ? 1 : 7);
    switch (pick(rng_)) {
      case 0:
      case 1: {
        if (std::uniform_int_distribution<int>(0, 15)(rng_) == 0) {
          return std::uniform_int_distribution<int>(0, 1)(rng_) ? PropFormula::top() : PropFormula::bottom();
        }
        return PropFormula::variable(std::uniform_int_distribution<Var>(1, vars)(rng_));
      }
      case 2: return PropFormula::negation(gen(vars, depth - 1));
      case 3: return PropFormula::implication(gen(vars, depth - 1), gen(vars, depth - 1));
      default: {
        const int n = std::uniform_int_distribution<int>(2, 4)(rng_);
        std::vector<PropFormula> cs;
        for (int i = 0; i < n; ++i) cs.push_back(gen(vars, depth - 1));
        return std::uniform_int_distribution<int>(0, 1)(rng_) ? PropFormula::conjunction(std::move(cs))
                                                              : PropFormula::disjunction(std::move(cs));
      }
    }
  }

  /// Random k-CNF as a formula; dense enough to be UNSAT fairly often.
  PropFormula kcnf(Var vars, std::size_t clauses, int k) {
    std::vector<PropFormula> cs;
    for (std::size_t i = 0; i < clauses; ++i) {
      std::vector<PropFormula> lits;
      for (int j = 0; j < k; ++j) {
        PropFormula v = PropFormula::variable(std::uniform_int_distribution<Var>(1, vars)(rng_));
        lits.push_back(std::uniform_int_distribution<int>(0, 1)(rng_) ? v : PropFormula::negation(v));
      }
      cs.push_back(PropFormula::disjunction(std::move(lits)));
    }
    return PropFormula::conjunction(std::move(cs));
  }

 private:
  std::mt19937_64 rng_;
};

/// Fixed corpus: nested formulas of varying depth plus random 3-CNF near the
/// satisfiability threshold, all over 1..12 variables.
inline std::vector<Entry> build(std::size_t nested = 600, std::size_t cnfs = 200) {
  PropGen gen(2024);
  std::vector<Entry> out;
  for (std::size_t i = 0; i < nested; ++i) {
    const Var vars = static_cast<Var>(1 + i % 12);
    out.push_back({gen.gen(vars, 2 + static_cast<int>(i % 4)), vars});
  }
  for (std::size_t i = 0; i < cnfs; ++i) {
    const Var vars = static_cast<Var>(3 + i % 10);
    out.push_back({gen.kcnf(vars, static_cast<std::size_t>(vars * 43 / 10), 3), vars});
  }
  return out;
}

/// Truth-table satisfiability over variables 1..num_vars.
inline std::optional<Instance> truth_table(const PropFormula& f, Var num_vars) {
  for (std::uint64_t bits = 0; bits < (std::uint64_t{1} << num_vars); ++bits) {
    Instance inst(num_vars);
    for (Var v = 1; v <= num_vars; ++v) inst.set(v, (bits >> (v - 1)) & 1);
    if (evaluate(f, inst)) return inst;
  }
  return std::nullopt;
}

inline bool satisfies(const Cnf& cnf, const Instance& inst) {
  for (const auto& c : cnf.clauses) {
    bool ok = false;
    for (Lit l : c) ok = ok || inst.value(static_cast<Var>(l > 0 ? l : -l)) == (l > 0);
    if (!ok) return false;
  }
  return true;
}

}  // namespace corpus
