#include "doctest.h"
#include "fixtures.hpp"
#include "isolde/oracle.hpp"

using namespace isolde;

namespace {

const LevelSpec& level(const char* name) {
  const LevelSpec* l = find_builtin(name);
  REQUIRE(l != nullptr);
  return *l;
}

// Independent enumeration: every base tuple subset, filtered by WF and by the
// canonical form (non-empty transactions form an id prefix).
std::set<History> brute_force_histories(const Scope& s) {
  VarTable table = encode(s, fol::Signature::base());
  std::set<History> out;
  for (std::uint64_t bits = 0; bits < (std::uint64_t{1} << table.size()); ++bits) {
    prop::Instance inst(table.size());
    for (prop::Var v = 1; v <= table.size(); ++v) inst.set(v, (bits >> (v - 1)) & 1);
    History h = decode_history(table, inst);
    if (!is_well_formed(h)) continue;
    auto active = h.active_transactions();
    if (!active.empty() && *active.rbegin() + 1 != active.size()) continue;
    out.insert(h);
  }
  return out;
}

}  // namespace

TEST_CASE("enumeration counts at (1,1,1)") {
  auto hs = oracle::enum_histories({1, 1, 1});
  CHECK(hs.size() == 2);
  for (const auto& h : hs) CHECK(h.reads.empty());
}

TEST_CASE("enumeration matches an independent brute force") {
  for (Scope s : {Scope{1, 1, 1}, Scope{2, 1, 2}, Scope{2, 2, 1}, Scope{3, 1, 1}}) {
    INFO(s.to_string());
    auto hs = oracle::enum_histories(s);
    std::set<History> unique(hs.begin(), hs.end());
    CHECK(unique.size() == hs.size());
    CHECK(unique == brute_force_histories(s));
  }
}

TEST_CASE("enumeration is well-formed, in scope and deterministic at (2,2,2)") {
  auto hs = oracle::enum_histories({2, 2, 2});
  CHECK(hs == oracle::enum_histories({2, 2, 2}));
  for (const auto& h : hs) {
    CHECK(is_well_formed(h));
    CHECK(fits_scope(h, {2, 2, 2}));
  }
  std::size_t streamed = 0;
  oracle::for_each_history({2, 2, 2}, [&](const History& h) {
    CHECK(h == hs[streamed]);
    return ++streamed < 10;
  });
  CHECK(streamed == 10);
}

TEST_CASE("allowed_oracle examples") {
  CHECK_FALSE(oracle::allowed(level("SER_A"), fixtures::write_skew()));
  CHECK(oracle::allowed(level("RA_A"), fixtures::causality_violation()));
  for (const auto& l : builtin_catalog()) CHECK(oracle::allowed(l, History{}));
  CHECK(oracle::minimal_scope(fixtures::long_fork()) == Scope{5, 2, 2});
  CHECK(oracle::minimal_scope(History{}) == Scope{1, 1, 1});
}

TEST_CASE("synth_oracle examples") {
  auto ws = oracle::synth(level("SI_B"), level("SER_B"), {3, 2, 2});
  REQUIRE(ws.sat);
  REQUIRE(ws.history);
  CHECK(oracle::allowed(level("SI_B"), *ws.history, {3, 2, 2}));
  CHECK_FALSE(oracle::allowed(level("SER_B"), *ws.history, {3, 2, 2}));

  CHECK_FALSE(oracle::synth(level("SER_A"), level("CC_A"), {3, 2, 2}).sat);
  for (const auto& l : builtin_catalog()) CHECK_FALSE(oracle::synth(l, l, {2, 1, 2}).sat);

  CHECK_THROWS_AS(oracle::synth(level("SER_A"), level("CC_A"), {4, 1, 1}), oracle::ScopeTooLarge);
  CHECK_THROWS_AS(oracle::synth(level("SER_A"), level("CC_A"), {3, 3, 2}), oracle::ScopeTooLarge);
  CHECK_THROWS_AS(oracle::synth(level("SER_A"), level("CC_A"), {3, 2, 3}), oracle::ScopeTooLarge);
}

TEST_CASE("cache returns what the oracle computes") {
  oracle::Cache cache;
  for (const auto& h : oracle::enum_histories({2, 1, 2})) {
    for (const auto& l : builtin_catalog()) {
      CHECK(cache.allowed(l, h, {2, 1, 2}) == oracle::allowed(l, h, {2, 1, 2}));
      CHECK(cache.allowed(l, h, {2, 1, 2}) == oracle::allowed(l, h, {2, 1, 2}));
    }
  }
  CHECK(cache.size() == oracle::enum_histories({2, 1, 2}).size() * builtin_catalog().size());
}

TEST_CASE("oracle and solver membership agree on every history at (3,2,2)") {
  const Scope s{3, 2, 2};
  std::vector<MembershipChecker> checkers;
  for (const auto& l : builtin_catalog()) checkers.emplace_back(l, s);
  std::size_t n = 0;
  oracle::for_each_history(s, [&](const History& h) {
    for (std::size_t i = 0; i < checkers.size(); ++i) {
      const bool expected = oracle::allowed(builtin_catalog()[i], h, s);
      if (checkers[i].check(h).allowed != expected) {
        FAIL_CHECK(builtin_catalog()[i].name << " disagrees on " << history_to_json(h).dump());
      }
    }
    ++n;
    return true;
  });
  MESSAGE(n << " histories checked");
}
