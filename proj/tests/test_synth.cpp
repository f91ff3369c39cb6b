#include <filesystem>

#include "doctest.h"
#include "fixtures.hpp"
#include "isolde/oracle.hpp"
#include "isolde/synth.hpp"

using namespace isolde;

namespace {

const LevelSpec& level(const char* name) {
  const LevelSpec* l = find_builtin(name);
  REQUIRE(l != nullptr);
  return *l;
}

SynthOutcome run(const char* p, const char* n, Scope s, SynthOptions o = {}) {
  return synth({level(p), level(n), s, o});
}

std::vector<SynthOptions> all_option_sets() {
  std::vector<SynthOptions> out;
  for (int bits = 0; bits < 8; ++bits) {
    SynthOptions o;
    o.learning = bits & 1;
    o.smart_search = bits & 2;
    o.fixed_order = bits & 4;
    if (!o.fixed_order) {
      out.push_back(o);
      continue;
    }
    for (PinTarget pin : {PinTarget::Guess, PinTarget::Witness, PinTarget::Both}) {
      o.pin = pin;
      out.push_back(o);
    }
  }
  return out;
}

// Soundness of a SAT outcome, checked independently of the engine.
void check_sound(const SynthOutcome& o, const LevelSpec& p, const LevelSpec& n) {
  REQUIRE(o.history);
  const History& h = *o.history;
  CHECK(is_well_formed(h));
  CHECK(fits_scope(h, o.history_scope));
  // No empty transactions survive stripping, and ids are dense.
  CHECK(h.active_transactions().size() == o.history_scope.txn);
  fol::FiniteStructure m = to_structure(h, o.history_scope, p.framework.signature());
  for (const auto& [name, pairs] : o.witness) {
    for (const auto& [a, b] : pairs) m.insert(name, {a, b});
  }
  CHECK(fol::evaluate(membership_formula(p), m));
  CHECK(oracle::allowed(p, h, o.history_scope));
  CHECK_FALSE(oracle::allowed(n, h, o.history_scope));
}

}  // namespace

TEST_CASE("write skew separates SI from serializability") {
  auto o = run("SI_B", "SER_B", {3, 2, 2});
  REQUIRE(o.sat());
  check_sound(o, level("SI_B"), level("SER_B"));
  // Equivalent up to renaming to the fixture: three transactions, two of
  // which read a value the third wrote and overwrite each other's object.
  CHECK(o.history->active_transactions().size() == 3);
  CHECK(o.history->reads.size() == 2);
}

TEST_CASE("smart search: stronger-allowed pairs are refuted without candidates") {
  auto o = run("SER_A", "CC_A", {3, 2, 2});
  CHECK(o.result == SynthOutcome::Result::Unsat);
  CHECK(o.stats.candidates == 0);
  CHECK(o.stats.solver_calls == 1);
  CHECK(o.stats.initial_clauses > 0);
}

TEST_CASE("the two causal definitions agree at (2,1,2)") {
  CHECK(run("CC_A", "CC_B", {2, 1, 2}).result == SynthOutcome::Result::Unsat);
  CHECK(run("CC_B", "CC_A", {2, 1, 2}).result == SynthOutcome::Result::Unsat);
}

TEST_CASE("P = N is unsatisfiable immediately under smart search") {
  for (const auto& l : builtin_catalog()) {
    auto o = synth({l, l, {2, 1, 2}, {}});
    CHECK(o.result == SynthOutcome::Result::Unsat);
    CHECK(o.stats.candidates == 0);
    CHECK(o.stats.solver_calls == 1);
  }
}

TEST_CASE("engine agrees with the oracle at small scopes under every option set") {
  oracle::Cache cache;
  const auto& cat = builtin_catalog();
  for (Scope s : {Scope{2, 1, 2}, Scope{2, 2, 2}}) {
    for (const auto& p : cat) {
      for (const auto& n : cat) {
        if (p.name == n.name) continue;
        const bool expected = oracle::synth(p, n, s, &cache).sat;
        for (const auto& opt : all_option_sets()) {
          INFO(p.name << " vs " << n.name << " at " << s.to_string() << " learning=" << opt.learning
                      << " smart=" << opt.smart_search << " fixed=" << opt.fixed_order
                      << " pin=" << static_cast<int>(opt.pin));
          auto o = synth({p, n, s, opt});
          REQUIRE(o.result != SynthOutcome::Result::Timeout);
          CHECK(o.sat() == expected);
          CHECK(o.stats.solver_calls == 2 * o.stats.candidates + 1 - (o.sat() ? 1 : 0));
          if (o.sat()) check_sound(o, p, n);
        }
      }
    }
  }
}

TEST_CASE("learned constraints hold for the final history") {
  // WS-style problems need several rounds; every lesson must admit the
  // eventual solution (in its unstripped, in-scope form).
  for (auto [p, n] : std::vector<std::pair<const char*, const char*>>{
           {"SI_B", "SER_B"}, {"PC_A", "SER_A"}, {"RA_A", "CC_A"}, {"CC_B", "PC_A"}, {"SER_B", "SER_A"}}) {
    SynthOptions opt;
    opt.smart_search = false;
    auto o = run(p, n, {3, 2, 2}, opt);
    INFO(p << " vs " << n);
    if (!o.sat()) continue;
    REQUIRE(o.raw_history);
    prop::Instance inst = encode_history(*o.table, *o.raw_history);
    for (const auto& lesson : o.learned) {
      // Lessons only mention base variables, all assigned by the history.
      CHECK(prop::evaluate(lesson, inst));
    }
  }
}

TEST_CASE("no-learning baseline never needs fewer candidates") {
  bool strictly = false;
  for (const auto& p : builtin_catalog()) {
    for (const auto& n : builtin_catalog()) {
      if (p.name == n.name) continue;
      SynthOptions full, base;
      base.learning = false;
      auto a = synth({p, n, {3, 2, 2}, full});
      if (!a.sat()) continue;
      auto b = synth({p, n, {3, 2, 2}, base});
      INFO(p.name << " vs " << n.name);
      CHECK(b.sat());
      CHECK(b.stats.candidates >= a.stats.candidates);
      strictly = strictly || b.stats.candidates > a.stats.candidates;
    }
  }
  CHECK(strictly);
}

TEST_CASE("equal problems with equal seeds give equal outcomes") {
  SynthOptions opt;
  opt.seed = 7;
  opt.smart_search = false;
  auto a = run("SI_B", "SER_B", {3, 2, 2}, opt);
  auto b = run("SI_B", "SER_B", {3, 2, 2}, opt);
  CHECK(a.result == b.result);
  CHECK(a.history == b.history);
  CHECK(a.witness == b.witness);
  CHECK(a.stats.candidates == b.stats.candidates);
  CHECK(a.stats.solver_calls == b.stats.solver_calls);
  CHECK(a.stats.initial_clauses == b.stats.initial_clauses);
}

TEST_CASE("timeouts are reported, not mistaken for verdicts") {
  SynthOptions opt;
  opt.timeout = std::chrono::milliseconds(0);
  auto o = run("SI_B", "SER_B", {3, 2, 2}, opt);
  CHECK(o.result == SynthOutcome::Result::Timeout);
  CHECK(o.stats.solver_calls == 0);
}

TEST_CASE("invalid problems are rejected") {
  CHECK_THROWS_AS(run("SER_A", "CC_A", {0, 1, 1}), SynthError);
  LevelSpec bad = level("SER_A");
  bad.formula = fol::Formula::atom("nope", {});
  CHECK_THROWS_AS(synth({bad, level("CC_A"), {2, 1, 1}, {}}), SynthError);
}

TEST_CASE("dimacs dump writes one file per solver call") {
  auto dir = std::filesystem::temp_directory_path() / "isolde_dimacs_test";
  std::filesystem::remove_all(dir);
  SynthOptions opt;
  opt.dimacs_dir = dir;
  auto o = run("SI_B", "SER_B", {3, 2, 2}, opt);
  std::size_t files = 0;
  for ([[maybe_unused]] const auto& e : std::filesystem::directory_iterator(dir)) ++files;
  CHECK(files == o.stats.solver_calls);
  std::filesystem::remove_all(dir);
}

TEST_CASE("refinement and equivalence") {
  auto r = refines(level("SER_A"), level("SI_B"), {3, 2, 2});
  CHECK(r.verdict == Refinement::Verdict::Holds);

  auto c = refines(level("SI_B"), level("SER_B"), {3, 2, 2});
  REQUIRE(c.verdict == Refinement::Verdict::Counterexample);
  REQUIRE(c.counterexample);
  CHECK(oracle::allowed(level("SI_B"), *c.counterexample));
  CHECK_FALSE(oracle::allowed(level("SER_B"), *c.counterexample));

  for (const auto& l : builtin_catalog()) {
    CHECK(refines(l, l, {3, 2, 2}).verdict == Refinement::Verdict::Holds);
    CHECK(equivalent(l, l, {2, 1, 2}).equivalent());
  }

  auto same = equivalent(level("SER_A"), level("SER_B"), {3, 2, 2});
  CHECK(same.equivalent());
  auto diff = equivalent(level("SI_B"), level("SER_B"), {3, 2, 2});
  CHECK_FALSE(diff.equivalent());
  CHECK(diff.a_in_b.verdict == Refinement::Verdict::Counterexample);
  CHECK(diff.b_in_a.verdict == Refinement::Verdict::Holds);

  SynthOptions expired;
  expired.timeout = std::chrono::milliseconds(0);
  auto unknown = equivalent(level("SI_B"), level("SER_B"), {3, 2, 2}, expired);
  CHECK(unknown.indeterminate());
  CHECK_FALSE(unknown.equivalent());
}

TEST_CASE("check_membership matches the oracle on every history at (2,2,2)") {
  const Scope s{2, 2, 2};
  std::vector<MembershipChecker> checkers;
  for (const auto& l : builtin_catalog()) checkers.emplace_back(l, s);
  for (const History& h : oracle::enum_histories(s)) {
    for (std::size_t i = 0; i < checkers.size(); ++i) {
      REQUIRE(checkers[i].check(h).allowed == oracle::allowed(builtin_catalog()[i], h, s));
    }
  }
}
