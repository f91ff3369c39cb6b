#pragma once

// Random closed formulas and random structures for property tests.

#include <random>
#include <string>
#include <utility>
#include <vector>

#include "isolde/bounds.hpp"
#include "isolde/fol.hpp"

namespace randgen {

using namespace isolde::fol;

/// Base symbols plus one aux order; enough to hit every translation rule.
inline Signature test_signature() {
  return Signature::base().extended({RelationSymbol{"co", {Sort::Txn, Sort::Txn}}});
}

class FormulaGen {
 public:
  FormulaGen(std::uint64_t seed, std::array<std::size_t, 3> domains) : rng_(seed), domains_(domains) {}

  /// Closed formula of quantifier/connective depth at most `depth`.
  Formula closed(int depth) {
    env_.clear();
    fresh_ = 0;
    return gen(depth);
  }

  RelExpr rel(int depth) {
    const int pick = uniform(depth <= 0 ? 2 : 5);
    switch (pick) {
      case 0: return RelExpr::symbol(coin() ? "so" : "co");
      case 1: return RelExpr::read_from();
      case 2: return RelExpr::union_of(rel(depth - 1), rel(depth - 1));
      case 3: return RelExpr::compose(rel(depth - 1), rel(depth - 1));
      default: return RelExpr::closure(rel(depth - 1));
    }
  }

 private:
  int uniform(int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng_); }
  bool coin() { return uniform(2) == 0; }

  Term term(Sort s) {
    std::vector<const std::pair<std::string, Sort>*> vars;
    for (const auto& v : env_) {
      if (v.second == s) vars.push_back(&v);
    }
    if (!vars.empty() && uniform(4) != 0) {
      const auto* v = vars[static_cast<std::size_t>(uniform(static_cast<int>(vars.size())))];
      return Term::variable(v->first, s);
    }
    const auto n = static_cast<int>(domains_[static_cast<int>(s)]);
    return Term::constant(static_cast<std::size_t>(uniform(n)), s);
  }

  Formula atom() {
    switch (uniform(6)) {
      case 0: return Formula::atom("writes", {term(Sort::Txn), term(Sort::Obj), term(Sort::Val)});
      case 1: return Formula::atom("reads", {term(Sort::Txn), term(Sort::Obj), term(Sort::Val)});
      case 2: return Formula::atom(coin() ? "so" : "co", {term(Sort::Txn), term(Sort::Txn)});
      case 3:
      case 4: return Formula::rel_atom(rel(2), term(Sort::Txn), term(Sort::Txn));
      default: {
        const Sort s = kAllSorts[static_cast<std::size_t>(uniform(3))];
        return Formula::equal(term(s), term(s));
      }
    }
  }

  Formula gen(int depth) {
    if (depth <= 0 || uniform(5) == 0) return atom();
    switch (uniform(6)) {
      case 0: return Formula::negate(gen(depth - 1));
      case 1: return Formula::conj(gen(depth - 1), gen(depth - 1));
      case 2: return Formula::disj(gen(depth - 1), gen(depth - 1));
      case 3: return Formula::implies(gen(depth - 1), gen(depth - 1));
      default: {
        const Sort s = kAllSorts[static_cast<std::size_t>(uniform(3))];
        std::string name = "v" + std::to_string(fresh_++);
        env_.emplace_back(name, s);
        Formula body = gen(depth - 1);
        env_.pop_back();
        return uniform(2) == 0 ? Formula::forall(name, s, body) : Formula::exists(name, s, body);
      }
    }
  }

  std::mt19937_64 rng_;
  std::array<std::size_t, 3> domains_;
  std::vector<std::pair<std::string, Sort>> env_;
  int fresh_ = 0;
};

/// Each tuple of each symbol present with probability `density`.
inline FiniteStructure random_structure(std::mt19937_64& rng, std::array<std::size_t, 3> domains,
                                        const Signature& sig, double density = 0.3) {
  FiniteStructure m(domains, sig);
  std::bernoulli_distribution bit(density);
  for (const auto& sym : sig.symbols()) {
    std::vector<std::size_t> tuple(sym.arity(), 0);
    while (true) {
      if (bit(rng)) m.insert(sym.name, tuple);
      std::size_t i = 0;
      for (; i < tuple.size(); ++i) {
        if (++tuple[i] < domains[static_cast<int>(sym.signature[i])]) break;
        tuple[i] = 0;
      }
      if (i == tuple.size()) break;
    }
  }
  return m;
}

/// Instance over the table agreeing with the structure on every symbol.
inline isolde::prop::Instance to_instance(const isolde::VarTable& table, const FiniteStructure& m) {
  isolde::prop::Instance inst(table.size());
  for (const auto& sym : table.signature().symbols()) {
    for (const auto& t : table.tuples_of(sym.name)) inst.set(table.var(sym.name, t), m.contains(sym.name, t));
  }
  return inst;
}

}  // namespace randgen
