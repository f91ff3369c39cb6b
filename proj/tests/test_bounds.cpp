#include <random>

#include "doctest.h"
#include "fixtures.hpp"
#include "isolde/bounds.hpp"
#include "isolde/oracle.hpp"

using namespace isolde;
using nlohmann::json;

namespace {

fol::Signature with_co() { return fol::Signature::base().extended({{"co", {fol::Sort::Txn, fol::Sort::Txn}}}); }

prop::Instance all_false(const VarTable& t) { return prop::Instance(t.size()); }

bool has(const std::vector<std::string>& v, const std::string& s) { return std::find(v.begin(), v.end(), s) != v.end(); }

}  // namespace

TEST_CASE("encode variable counts") {
  CHECK(encode({2, 1, 2}, with_co()).size() == 16);
  CHECK(encode({1, 1, 1}, with_co()).size() == 4);
  CHECK(encode({3, 2, 2}, with_co()).size() == 42);
  CHECK_THROWS_AS(encode({0, 1, 1}, with_co()), std::invalid_argument);
  CHECK_THROWS_AS(encode({1, 1, 0}, with_co()), std::invalid_argument);
  CHECK_THROWS_AS(encode({1, 1, 1}, fol::Signature({{"co", {fol::Sort::Txn, fol::Sort::Txn}}})),
                  std::invalid_argument);
}

TEST_CASE("variable ids are dense, injective, ordered and deterministic") {
  VarTable t = encode({3, 2, 2}, with_co());
  std::set<prop::Var> seen;
  prop::Var expected = 1;
  for (const auto& sym : t.signature().symbols()) {
    auto tuples = t.tuples_of(sym.name);
    CHECK(std::is_sorted(tuples.begin(), tuples.end()));
    for (const auto& tuple : tuples) {
      const prop::Var v = t.var(sym.name, tuple);
      CHECK(v == expected++);
      CHECK(seen.insert(v).second);
      CHECK(t.tuple_of(v) == std::make_pair(sym.name, tuple));
    }
  }
  CHECK(seen.size() == t.size());
  CHECK(encode({3, 2, 2}, with_co()) == t);
  CHECK_THROWS_AS(t.var("co", {0, 3}), std::out_of_range);
  CHECK_THROWS_AS(t.var("vis", {0, 1}), std::out_of_range);
  CHECK_THROWS_AS(t.tuple_of(0), std::out_of_range);
  CHECK_THROWS_AS(t.tuple_of(43), std::out_of_range);
}

TEST_CASE("decode_history examples") {
  VarTable t = encode({2, 1, 2}, with_co());
  prop::Instance a = all_false(t);
  a.set(t.var("writes", {0, 0, 0}), true);
  CHECK(decode_history(t, a) == History{{{0, 0, 0}}, {}, {}});

  CHECK(decode_history(t, all_false(t)).empty());

  prop::Instance b = all_false(t);
  b.set(t.var("so", {0, 1}), true);
  b.set(t.var("writes", {1, 0, 1}), true);
  b.set(t.var("co", {1, 0}), true);  // aux symbols are ignored
  CHECK(decode_history(t, b) == History{{{1, 0, 1}}, {}, {{0, 1}}});

  CHECK_THROWS_AS(decode_history(t, prop::Instance(3)), DecodeError);
}

TEST_CASE("decode_relation examples") {
  VarTable t = encode({2, 1, 2}, with_co());
  prop::Instance a = all_false(t);
  a.set(t.var("co", {0, 1}), true);
  CHECK(decode_relation(t, a, "co") == std::set<fol::Tuple>{{0, 1}});

  prop::Instance b = all_false(t);
  for (prop::Var v : t.vars_of("co")) b.set(v, true);
  CHECK(decode_relation(t, b, "co") == std::set<fol::Tuple>{{0, 0}, {0, 1}, {1, 0}, {1, 1}});

  CHECK(decode_relation(t, all_false(t), "co").empty());
  CHECK_THROWS_AS(decode_relation(t, a, "vis"), DecodeError);
}

TEST_CASE("encode/decode is a bijection on base tuple sets") {
  std::mt19937_64 rng(1);
  VarTable t = encode({3, 2, 2}, with_co());
  for (int trial = 0; trial < 500; ++trial) {
    History h;
    std::bernoulli_distribution bit(0.2);
    for (const auto& tup : t.tuples_of("writes")) {
      if (bit(rng)) h.writes.insert({tup[0], tup[1], tup[2]});
    }
    for (const auto& tup : t.tuples_of("reads")) {
      if (bit(rng)) h.reads.insert({tup[0], tup[1], tup[2]});
    }
    for (const auto& tup : t.tuples_of("so")) {
      if (bit(rng)) h.so.insert({tup[0], tup[1]});
    }
    prop::Instance inst = encode_history(t, h);
    CHECK(decode_history(t, inst) == h);
    for (prop::Var v : t.vars_of("co")) CHECK_FALSE(inst.value(v));
  }
}

TEST_CASE("well-formedness rules, one violation at a time") {
  CHECK(is_well_formed(History{}));
  for (const auto& fx : fixtures::all()) CHECK(is_well_formed(fx.history));

  History w;
  w.writes = {{0, 0, 0}, {0, 0, 1}};
  CHECK(has(well_formedness_violations(w), "writes not functional"));

  History r;
  r.writes = {{0, 0, 0}, {1, 0, 1}};
  r.reads = {{2, 0, 0}, {2, 0, 1}};
  CHECK(has(well_formedness_violations(r), "reads not functional"));

  History u;
  u.writes = {{0, 0, 0}, {1, 0, 0}};
  CHECK(has(well_formedness_violations(u), "value written by more than one transaction"));

  History self;
  self.writes = {{0, 0, 0}, {1, 0, 1}};
  self.reads = {{1, 0, 0}};
  CHECK(has(well_formedness_violations(self), "transaction reads and writes the same object"));

  History unjust;
  unjust.writes = {{0, 0, 0}};
  unjust.reads = {{0, 1, 0}, {1, 0, 1}};
  CHECK(has(well_formedness_violations(unjust), "read without a writer"));

  History refl;
  refl.so = {{0, 0}};
  CHECK_FALSE(is_well_formed(refl));
  History intrans;
  intrans.so = {{0, 1}, {1, 2}};
  CHECK_FALSE(is_well_formed(intrans));
  History fork;
  fork.so = {{0, 1}, {0, 2}};  // two successors, incomparable
  CHECK_FALSE(is_well_formed(fork));
  History join;
  join.so = {{0, 2}, {1, 2}};
  CHECK_FALSE(is_well_formed(join));
  History sessions;
  sessions.so = {{0, 1}, {1, 2}, {0, 2}, {3, 4}};
  CHECK(is_well_formed(sessions));
}

TEST_CASE("strip_empty_transactions renumbers densely") {
  History h;
  h.writes = {{1, 0, 0}, {3, 0, 1}};
  h.reads = {{3, 1, 0}};
  h.writes.insert({1, 1, 0});
  h.so = {{0, 1}, {1, 3}, {0, 3}};
  std::vector<std::optional<std::size_t>> map;
  History s = strip_empty_transactions(h, 4, &map);
  CHECK(s.writes == std::set<Triple>{{0, 0, 0}, {0, 1, 0}, {1, 0, 1}});
  CHECK(s.reads == std::set<Triple>{{1, 1, 0}});
  CHECK(s.so == std::set<fol::TuplePair>{{0, 1}});
  REQUIRE(map.size() == 4);
  CHECK_FALSE(map[0]);
  CHECK(map[1] == 0u);
  CHECK_FALSE(map[2]);
  CHECK(map[3] == 1u);
  CHECK(strip_empty_transactions(History{}, 3).empty());
}

TEST_CASE("stripping preserves well-formedness on every history at (3,2,2)") {
  std::size_t n = 0;
  oracle::for_each_history({3, 2, 2}, [&](const History& h) {
    History s = strip_empty_transactions(h, 3);
    REQUIRE(is_well_formed(s));
    CHECK(s.active_transactions().size() == h.active_transactions().size());
    ++n;
    return true;
  });
  CHECK(n > 1000);
}

TEST_CASE("history JSON round-trips") {
  for (const auto& fx : fixtures::all()) {
    json doc = history_to_json(fx.history);
    ParsedHistory p = history_from_json(doc);
    CHECK(p.history == fx.history);
    CHECK(history_from_json(json{{"history", doc}}).history == fx.history);
    CHECK(history_from_json(json::parse(doc.dump()), fx.scope).history == fx.history);
  }
  std::size_t n = 0;
  oracle::for_each_history({3, 2, 2}, [&](const History& h) {
    ParsedHistory p = history_from_json(history_to_json(h));
    REQUIRE(p.history == h);
    ++n;
    return n < 3000;
  });
}

TEST_CASE("history JSON examples and errors") {
  json doc = json::parse(R"({"transactions":[
    {"id":"t0","session":0,"seq":0,"writes":{"x0":"n0"},"reads":{}},
    {"id":"t1","session":0,"seq":1,"writes":{},"reads":{"x0":"n0"}},
    {"id":"t2","session":1,"seq":0,"writes":{"x1":"n2"}}]})");
  ParsedHistory p = history_from_json(doc);
  CHECK(p.history.writes == std::set<Triple>{{0, 0, 0}, {2, 1, 2}});
  CHECK(p.history.reads == std::set<Triple>{{1, 0, 0}});
  CHECK(p.history.so == std::set<fol::TuplePair>{{0, 1}});
  CHECK(p.minimal_scope == Scope{3, 2, 3});

  CHECK_THROWS_AS(history_from_json(doc, Scope{3, 2, 2}), HistoryFormatError);
  CHECK_THROWS_AS(history_from_json(json::parse(R"({"txns":[]})")), HistoryFormatError);
  CHECK_THROWS_AS(history_from_json(json::parse(R"({"transactions":[{"id":"tx"}]})")), HistoryFormatError);
  CHECK_THROWS_AS(history_from_json(json::parse(R"({"transactions":[{"id":"t0","writes":{"y0":"n0"}}]})")),
                  HistoryFormatError);
  CHECK_THROWS_AS(history_from_json(json::parse(R"({"transactions":[{"id":"t0","writes":{"x0":"v0"}}]})")),
                  HistoryFormatError);
  CHECK_THROWS_AS(history_from_json(json::parse(R"({"transactions":[{"id":"t0"},{"id":"t0"}]})")),
                  HistoryFormatError);
  CHECK_THROWS_AS(history_from_json(json::parse(R"({"transactions":[{"id":"t0","color":1}]})")),
                  HistoryFormatError);
  CHECK_THROWS_AS(
      history_from_json(json::parse(R"({"transactions":[{"id":"t0","session":0,"seq":0},{"id":"t1","session":0,"seq":0}]})")),
      HistoryFormatError);
  CHECK_THROWS_AS(history_from_json(json::parse(R"({"transactions":[{"id":"t0","session":"a"}]})")),
                  HistoryFormatError);
}

TEST_CASE("to_structure mirrors the history") {
  const auto ws = fixtures::write_skew();
  auto m = to_structure(ws, {3, 2, 2}, with_co());
  CHECK(m.tuples("writes").size() == ws.writes.size());
  CHECK(m.tuples("reads").size() == ws.reads.size());
  CHECK(m.tuples("co").empty());
  CHECK(fits_scope(ws, {3, 2, 2}));
  CHECK_FALSE(fits_scope(ws, {2, 2, 2}));
  CHECK_FALSE(fits_scope(ws, {3, 1, 2}));
}
