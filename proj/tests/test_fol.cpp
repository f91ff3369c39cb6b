#include <random>

#include "doctest.h"
#include "isolde/fol.hpp"
#include "isolde/levels.hpp"
#include "random_formulas.hpp"

using namespace isolde;
using namespace isolde::fol;

namespace {

Term T(std::size_t i) { return Term::constant(i, Sort::Txn); }
Term X(std::size_t i) { return Term::constant(i, Sort::Obj); }
Term N(std::size_t i) { return Term::constant(i, Sort::Val); }
Term var(const char* name, Sort s = Sort::Txn) { return Term::variable(name, s); }

bool has_reason(const std::vector<Diagnostic>& d, const std::string& text) {
  for (const auto& x : d) {
    if (x.reason.find(text) != std::string::npos) return true;
  }
  return false;
}

using Pairs = std::set<TuplePair>;

// Independent relation semantics: naive fixpoint closure, direct wr.
Pairs naive_rel(const RelExpr& e, const FiniteStructure& m) {
  switch (e.kind()) {
    case RelExpr::Kind::Symbol: {
      Pairs out;
      for (const auto& t : m.tuples(e.name())) out.insert({t[0], t[1]});
      return out;
    }
    case RelExpr::Kind::ReadFrom: {
      Pairs out;
      for (const auto& w : m.tuples("writes")) {
        for (const auto& r : m.tuples("reads")) {
          if (w[1] == r[1] && w[2] == r[2]) out.insert({w[0], r[0]});
        }
      }
      return out;
    }
    case RelExpr::Kind::Union: {
      Pairs a = naive_rel(e.lhs(), m);
      Pairs b = naive_rel(e.rhs(), m);
      a.insert(b.begin(), b.end());
      return a;
    }
    case RelExpr::Kind::Compose: {
      Pairs a = naive_rel(e.lhs(), m), b = naive_rel(e.rhs(), m), out;
      for (auto [p, q] : a) {
        for (auto [r, s] : b) {
          if (q == r) out.insert({p, s});
        }
      }
      return out;
    }
    case RelExpr::Kind::Closure: {
      Pairs acc = naive_rel(e.inner(), m);
      const Pairs step = acc;
      while (true) {
        Pairs next = acc;
        for (auto [p, q] : acc) {
          for (auto [r, s] : step) {
            if (q == r) next.insert({p, s});
          }
        }
        if (next == acc) return acc;
        acc = std::move(next);
      }
    }
  }
  return {};
}

// Environment-based evaluator, sharing no code with fol::evaluate.
bool env_eval(const Formula& f, const FiniteStructure& m, std::map<std::string, std::size_t>& env) {
  auto val = [&](const Term& t) { return t.is_constant() ? t.index() : env.at(t.name()); };
  switch (f.kind()) {
    case Formula::Kind::Atom: {
      Tuple t;
      for (const auto& a : f.args()) t.push_back(val(a));
      return m.contains(f.relation(), t);
    }
    case Formula::Kind::RelAtom: return naive_rel(f.expr(), m).count({val(f.args()[0]), val(f.args()[1])}) > 0;
    case Formula::Kind::Equal: return val(f.args()[0]) == val(f.args()[1]);
    case Formula::Kind::Not: return !env_eval(f.child(0), m, env);
    case Formula::Kind::And: return env_eval(f.child(0), m, env) && env_eval(f.child(1), m, env);
    case Formula::Kind::Or: return env_eval(f.child(0), m, env) || env_eval(f.child(1), m, env);
    case Formula::Kind::Implies: return !env_eval(f.child(0), m, env) || env_eval(f.child(1), m, env);
    case Formula::Kind::Forall:
    case Formula::Kind::Exists: {
      const bool universal = f.kind() == Formula::Kind::Forall;
      for (std::size_t d = 0; d < m.domain_size(f.var_sort()); ++d) {
        env[f.var()] = d;
        const bool r = env_eval(f.body(), m, env);
        env.erase(f.var());
        if (r != universal) return !universal;
      }
      return universal;
    }
  }
  return false;
}

}  // namespace

TEST_CASE("check_well_formed examples") {
  const Signature base = Signature::base();
  auto irreflexive = Formula::forall("t", Sort::Txn, Formula::negate(Formula::atom("so", {var("t"), var("t")})));
  CHECK(check_well_formed(irreflexive, base).empty());

  auto d = check_well_formed(Formula::atom("so", {T(0), X(0)}), base);
  REQUIRE(d.size() == 1);
  CHECK(d[0].reason.find("sort mismatch at argument 2 of so") != std::string::npos);

  auto unbound = check_well_formed(Formula::atom("writes", {var("t"), X(0), N(0)}), base);
  CHECK(has_reason(unbound, "unbound variable t"));
  CHECK(unbound[0].subterm.find("writes") != std::string::npos);
}

TEST_CASE("check_well_formed: arity, symbols, shadowing, relation expressions") {
  const Signature base = Signature::base();
  CHECK(has_reason(check_well_formed(Formula::atom("so", {T(0)}), base), "arity mismatch"));
  CHECK(has_reason(check_well_formed(Formula::atom("co", {T(0), T(1)}), base), "unknown relation co"));
  auto shadow = Formula::forall("t", Sort::Txn,
                                Formula::exists("t", Sort::Txn, Formula::atom("so", {var("t"), var("t")})));
  CHECK(has_reason(check_well_formed(shadow, base), "shadows"));
  CHECK(has_reason(check_well_formed(Formula::equal(T(0), X(0)), base), "sort mismatch in equality"));
  auto bad_expr = Formula::rel_atom(RelExpr::closure(RelExpr::symbol("writes")), T(0), T(1));
  CHECK(has_reason(check_well_formed(bad_expr, base), "not Txn x Txn"));
  // The derived read-from relation needs no declaration.
  CHECK(check_well_formed(Formula::rel_atom(RelExpr::read_from(), T(0), T(1)), base).empty());
  // A variable reused at the wrong sort.
  auto mixed = Formula::forall("t", Sort::Txn, Formula::atom("writes", {var("t"), var("t", Sort::Obj), N(0)}));
  CHECK_FALSE(check_well_formed(mixed, base).empty());
}

TEST_CASE("substitute examples") {
  auto w = Formula::atom("writes", {var("t"), X(0), N(0)});
  CHECK(substitute(w, "t", Sort::Txn, T(1)) == Formula::atom("writes", {T(1), X(0), N(0)}));

  auto f = Formula::forall("t", Sort::Txn, Formula::atom("so", {var("t"), var("u")}));
  CHECK(substitute(f, "u", Sort::Txn, T(0)) ==
        Formula::forall("t", Sort::Txn, Formula::atom("so", {var("t"), T(0)})));

  auto g = Formula::forall("t", Sort::Txn, Formula::atom("so", {var("t"), var("t")}));
  CHECK(substitute(g, "t", Sort::Txn, T(0)) == g);

  CHECK_THROWS_AS(substitute(w, "t", Sort::Txn, X(0)), SortError);
  CHECK_THROWS_AS(substitute(w, "t", Sort::Txn, var("u")), SortError);
}

TEST_CASE("evaluate and rel_evaluate examples") {
  const Signature base = Signature::base();
  FiniteStructure m({3, 1, 1}, base);
  auto irreflexive = Formula::forall("t", Sort::Txn, Formula::negate(Formula::atom("so", {var("t"), var("t")})));
  CHECK(evaluate(irreflexive, m));

  m.insert("writes", {0, 0, 0});
  CHECK(evaluate(Formula::exists("t", Sort::Txn, Formula::atom("writes", {var("t"), X(0), N(0)})), m));

  m.insert("so", {0, 1});
  m.insert("so", {1, 2});
  CHECK(evaluate(Formula::rel_atom(RelExpr::closure(RelExpr::symbol("so")), T(0), T(2)), m));
  CHECK_FALSE(evaluate(Formula::rel_atom(RelExpr::symbol("so"), T(0), T(2)), m));

  // Union, composition, closure of a cycle.
  Signature sig = base.extended({{"co", {Sort::Txn, Sort::Txn}}});
  FiniteStructure r({3, 1, 1}, sig);
  r.insert("so", {0, 1});
  r.insert("co", {1, 2});
  CHECK(rel_evaluate(RelExpr::union_of(RelExpr::symbol("so"), RelExpr::symbol("co")), r).pairs() ==
        Pairs{{0, 1}, {1, 2}});
  CHECK(rel_evaluate(RelExpr::compose(RelExpr::symbol("so"), RelExpr::symbol("co")), r).pairs() == Pairs{{0, 2}});
  FiniteStructure cyc({2, 1, 1}, sig);
  cyc.insert("co", {0, 1});
  cyc.insert("co", {1, 0});
  CHECK(rel_evaluate(RelExpr::closure(RelExpr::symbol("co")), cyc).pairs() ==
        Pairs{{0, 0}, {0, 1}, {1, 0}, {1, 1}});
}

TEST_CASE("evaluate errors") {
  FiniteStructure m({2, 1, 1}, Signature::base());
  CHECK_THROWS_AS(evaluate(Formula::atom("co", {T(0), T(1)}), m), UnknownSymbolError);
  CHECK_THROWS_AS(evaluate(Formula::atom("so", {var("t"), T(1)}), m), std::invalid_argument);
  CHECK_THROWS_AS(FiniteStructure({0, 1, 1}, Signature::base()), std::invalid_argument);
  CHECK_THROWS(m.insert("so", {0, 5}));
}

TEST_CASE("evaluate matches environment semantics, negation and quantifier expansion") {
  const Signature sig = randgen::test_signature();
  std::mt19937_64 rng(42);
  std::size_t checked = 0;
  for (std::size_t t = 1; t <= 3; ++t) {
    for (std::size_t o = 1; o <= 2; ++o) {
      const std::array<std::size_t, 3> dom{t, o, 2};
      randgen::FormulaGen gen(t * 100 + o, dom);
      for (int i = 0; i < 150; ++i) {
        Formula f = gen.closed(5);
        REQUIRE(check_well_formed(f, sig).empty());
        auto m = randgen::random_structure(rng, dom, sig);
        std::map<std::string, std::size_t> env;
        const bool v = evaluate(f, m);
        INFO(f.to_string());
        REQUIRE(v == env_eval(f, m, env));
        CHECK(evaluate(Formula::negate(f), m) == !v);
        // De Morgan.
        Formula g = gen.closed(3);
        CHECK(evaluate(Formula::negate(Formula::conj(f, g)), m) ==
              evaluate(Formula::disj(Formula::negate(f), Formula::negate(g)), m));
        CHECK(evaluate(Formula::negate(Formula::disj(f, g)), m) ==
              evaluate(Formula::conj(Formula::negate(f), Formula::negate(g)), m));
        // A quantifier equals the fold over per-element substitutions.
        if (f.is_quantifier()) {
          std::vector<Formula> inst;
          for (std::size_t d = 0; d < m.domain_size(f.var_sort()); ++d) {
            inst.push_back(substitute(f.body(), f.var(), f.var_sort(), Term::constant(d, f.var_sort())));
          }
          const bool folded = f.kind() == Formula::Kind::Forall ? evaluate(all_of(inst), m)
                                                                : evaluate(any_of(inst), m);
          CHECK(folded == v);
        }
        ++checked;
      }
    }
  }
  CHECK(checked == 900);
}

TEST_CASE("closure equals the naive fixpoint and ceil(log2 n) squaring rounds") {
  const Signature sig = randgen::test_signature();
  std::mt19937_64 rng(7);
  for (std::size_t n = 1; n <= 5; ++n) {
    for (int trial = 0; trial < 60; ++trial) {
      auto m = randgen::random_structure(rng, {n, 2, 2}, sig, 0.25);
      auto co = RelExpr::symbol("co");
      Pairs closure = rel_evaluate(RelExpr::closure(co), m).pairs();
      CHECK(closure == naive_rel(RelExpr::closure(co), m));
      // Iterative squaring R <- R u R;R, ceil(log2 n) times.
      Pairs acc = rel_evaluate(co, m).pairs();
      std::size_t rounds = 0;
      for (std::size_t reach = 1; reach < n; reach *= 2) ++rounds;
      for (std::size_t r = 0; r < rounds; ++r) {
        Pairs next = acc;
        for (auto [a, b] : acc) {
          for (auto [c, d] : acc) {
            if (b == c) next.insert({a, d});
          }
        }
        acc = std::move(next);
      }
      CHECK(acc == closure);
    }
  }
}

TEST_CASE("alpha equality, free variables, renaming") {
  auto a = Formula::forall("p", Sort::Txn, Formula::atom("so", {var("p"), var("p")}));
  auto b = Formula::forall("q", Sort::Txn, Formula::atom("so", {var("q"), var("q")}));
  CHECK(alpha_equal(a, b));
  CHECK_FALSE(a == b);
  auto c = Formula::forall("q", Sort::Txn, Formula::atom("so", {var("q"), T(0)}));
  CHECK_FALSE(alpha_equal(a, c));

  auto open = Formula::conj(Formula::atom("so", {var("u"), var("w")}),
                            Formula::exists("u", Sort::Txn, Formula::atom("so", {var("u"), var("u")})));
  auto fv = free_variables(open);
  REQUIRE(fv.size() == 2);
  CHECK(fv[0].first == "u");
  CHECK(fv[1].first == "w");

  auto r = rename_relations(Formula::rel_atom(RelExpr::closure(RelExpr::symbol("co")), T(0), T(1)),
                            {{"co", "co_N"}});
  CHECK(used_relations(r) == std::set<std::string>{"co_N"});
  CHECK_FALSE(contains_constants(a));
  CHECK(contains_constants(c));
}

TEST_CASE("substitute_terms avoids capture") {
  // forall t. so(t, u) with u := t must not capture the replacement.
  auto f = Formula::forall("t", Sort::Txn, Formula::atom("so", {var("t"), var("u")}));
  auto g = substitute_terms(f, {{"u", var("t")}});
  auto fv = free_variables(g);
  REQUIRE(fv.size() == 1);
  CHECK(fv[0].first == "t");
  // Close it again and compare with the intended meaning on a structure.
  FiniteStructure m({2, 1, 1}, Signature::base());
  m.insert("so", {0, 1});
  auto closed = Formula::exists("t", Sort::Txn, g);  // exists t. forall t'. so(t', t)
  CHECK_FALSE(evaluate(closed, m));
  m.insert("so", {1, 1});
  CHECK(evaluate(closed, m));
}

TEST_CASE("textual syntax round-trips through to_string") {
  // so(a,b) prints the same as an atom and as a relation-expression atom, so
  // compare printed forms and meaning rather than trees.
  const Signature sig = randgen::test_signature();
  std::mt19937_64 rng(3);
  randgen::FormulaGen gen(11, {3, 2, 2});
  for (int i = 0; i < 200; ++i) {
    Formula f = gen.closed(4);
    INFO(f.to_string());
    Formula g = parse_formula(f.to_string());
    CHECK(g.to_string() == f.to_string());
    for (int k = 0; k < 5; ++k) {
      auto m = randgen::random_structure(rng, {3, 2, 2}, sig);
      CHECK(evaluate(g, m) == evaluate(f, m));
    }
  }
}
