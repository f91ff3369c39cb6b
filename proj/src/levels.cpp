#include "isolde/levels.hpp"

#include <atomic>
#include <functional>

namespace isolde {

using fol::Formula;
using fol::RelExpr;
using fol::Sort;
using fol::Term;

namespace {

Term txn(const char* name) { return Term::variable(name, Sort::Txn); }
Term obj(const char* name) { return Term::variable(name, Sort::Obj); }
Term val(const char* name) { return Term::variable(name, Sort::Val); }

Formula rel(const char* name, std::vector<Term> args) { return Formula::atom(name, std::move(args)); }

Formula forall(std::vector<std::pair<const char*, Sort>> vars, Formula body) {
  for (auto it = vars.rbegin(); it != vars.rend(); ++it) body = Formula::forall(it->first, it->second, body);
  return body;
}

Formula exists(const char* var, Sort sort, Formula body) { return Formula::exists(var, sort, std::move(body)); }

Formula implies(Formula a, Formula b) { return Formula::implies(std::move(a), std::move(b)); }

std::string fresh_value_var() {
  static std::atomic<std::size_t> counter{0};
  return "v'" + std::to_string(++counter);
}

RelExpr so_or_wr() { return RelExpr::union_of(RelExpr::symbol("so"), RelExpr::read_from()); }

Formula strict_total_order(const char* r) {
  return fol::all_of({
      forall({{"a", Sort::Txn}}, Formula::negate(rel(r, {txn("a"), txn("a")}))),
      forall({{"a", Sort::Txn}, {"b", Sort::Txn}, {"c", Sort::Txn}},
             implies(Formula::conj(rel(r, {txn("a"), txn("b")}), rel(r, {txn("b"), txn("c")})),
                     rel(r, {txn("a"), txn("c")}))),
      forall({{"a", Sort::Txn}, {"b", Sort::Txn}},
             implies(fol::not_equal(txn("a"), txn("b")),
                     Formula::disj(rel(r, {txn("a"), txn("b")}), rel(r, {txn("b"), txn("a")})))),
  });
}

Framework make_commit_order() {
  Framework f;
  f.name = "commit_order";
  f.aux = {AuxRelation{{"co", {Sort::Txn, Sort::Txn}}, AuxRelation::Shape::StrictTotalOrder, ""}};
  f.axioms = Formula::conj(
      strict_total_order("co"),
      forall({{"a", Sort::Txn}, {"b", Sort::Txn}},
             implies(Formula::rel_atom(so_or_wr(), txn("a"), txn("b")), rel("co", {txn("a"), txn("b")}))));
  return f;
}

Framework make_visibility() {
  Framework f;
  f.name = "visibility";
  f.aux = {
      AuxRelation{{"vis", {Sort::Txn, Sort::Txn}}, AuxRelation::Shape::SubsetOf, "ar"},
      AuxRelation{{"ar", {Sort::Txn, Sort::Txn}}, AuxRelation::Shape::StrictTotalOrder, ""},
  };
  f.axioms = fol::all_of({
      strict_total_order("ar"),
      forall({{"a", Sort::Txn}}, Formula::negate(rel("vis", {txn("a"), txn("a")}))),
      forall({{"a", Sort::Txn}, {"b", Sort::Txn}},
             implies(rel("vis", {txn("a"), txn("b")}), rel("ar", {txn("a"), txn("b")}))),
  });
  return f;
}

// forall x, t1, t2, t3. wr_x(t1,t2) && writes(t3,x) && t3 != t1 && R(t3,t2) => co(t3,t1)
Formula commit_order_axiom(const std::function<Formula(const Term&, const Term&)>& premise) {
  return forall({{"x", Sort::Obj}, {"t1", Sort::Txn}, {"t2", Sort::Txn}, {"t3", Sort::Txn}},
                implies(fol::all_of({macros::read_from_on(obj("x"), txn("t1"), txn("t2")),
                                     macros::writes_object(txn("t3"), obj("x")),
                                     fol::not_equal(txn("t3"), txn("t1")), premise(txn("t3"), txn("t2"))}),
                        rel("co", {txn("t3"), txn("t1")})));
}

Formula ext_axiom() {
  Formula newest_visible = forall(
      {{"t3", Sort::Txn}},
      implies(fol::all_of({fol::not_equal(txn("t3"), txn("t1")), rel("vis", {txn("t3"), txn("t2")}),
                           macros::writes_object(txn("t3"), obj("x"))}),
              rel("ar", {txn("t3"), txn("t1")})));
  return forall({{"t2", Sort::Txn}, {"x", Sort::Obj}, {"v", Sort::Val}},
                implies(rel("reads", {txn("t2"), obj("x"), val("v")}),
                        exists("t1", Sort::Txn,
                               fol::all_of({fol::not_equal(txn("t1"), txn("t2")),
                                            rel("vis", {txn("t1"), txn("t2")}),
                                            rel("writes", {txn("t1"), obj("x"), val("v")}), newest_visible}))));
}

Formula session_axiom() {
  return forall({{"a", Sort::Txn}, {"b", Sort::Txn}},
                implies(rel("so", {txn("a"), txn("b")}), rel("vis", {txn("a"), txn("b")})));
}

Formula prefix_axiom() {
  return forall({{"a", Sort::Txn}, {"b", Sort::Txn}, {"c", Sort::Txn}},
                implies(Formula::conj(rel("ar", {txn("a"), txn("b")}), rel("vis", {txn("b"), txn("c")})),
                        rel("vis", {txn("a"), txn("c")})));
}

Formula total_visibility_axiom() {
  return forall({{"a", Sort::Txn}, {"b", Sort::Txn}},
                implies(fol::not_equal(txn("a"), txn("b")),
                        Formula::disj(rel("vis", {txn("a"), txn("b")}), rel("vis", {txn("b"), txn("a")}))));
}

Formula no_conflict_axiom() {
  return forall({{"a", Sort::Txn}, {"b", Sort::Txn}, {"x", Sort::Obj}},
                implies(fol::all_of({fol::not_equal(txn("a"), txn("b")), macros::writes_object(txn("a"), obj("x")),
                                     macros::writes_object(txn("b"), obj("x"))}),
                        Formula::disj(rel("vis", {txn("a"), txn("b")}), rel("vis", {txn("b"), txn("a")}))));
}

Formula transitive_visibility_axiom() {
  return forall({{"a", Sort::Txn}, {"b", Sort::Txn}, {"c", Sort::Txn}},
                implies(Formula::conj(rel("vis", {txn("a"), txn("b")}), rel("vis", {txn("b"), txn("c")})),
                        rel("vis", {txn("a"), txn("c")})));
}

std::vector<LevelSpec> make_catalog() {
  const Framework& a = commit_order_framework();
  const Framework& b = visibility_framework();
  const RelExpr hb = RelExpr::closure(so_or_wr());

  std::vector<LevelSpec> out;
  out.push_back({"SER_A", a, commit_order_axiom([](const Term& t3, const Term& t2) {
                   return Formula::atom("co", {t3, t2});
                 })});
  // t3 co* t4 and t4 (so|wr)+ t2: t2 observed something committed after t3.
  out.push_back({"PC_A", a, commit_order_axiom([&](const Term& t3, const Term& t2) {
                   Term t4 = Term::variable("t4", Sort::Txn);
                   return Formula::exists(
                       "t4", Sort::Txn,
                       Formula::conj(Formula::disj(Formula::equal(t3, t4), Formula::atom("co", {t3, t4})),
                                     Formula::rel_atom(hb, t4, t2)));
                 })});
  out.push_back({"CC_A", a, commit_order_axiom([&](const Term& t3, const Term& t2) {
                   return Formula::rel_atom(hb, t3, t2);
                 })});
  out.push_back({"RA_A", a, commit_order_axiom([](const Term& t3, const Term& t2) {
                   return Formula::rel_atom(so_or_wr(), t3, t2);
                 })});

  out.push_back({"SER_B", b, fol::all_of({ext_axiom(), session_axiom(), total_visibility_axiom()})});
  out.push_back({"SI_B", b, fol::all_of({ext_axiom(), session_axiom(), prefix_axiom(), no_conflict_axiom()})});
  out.push_back({"PC_B", b, fol::all_of({ext_axiom(), session_axiom(), prefix_axiom()})});
  out.push_back({"CC_B", b, fol::all_of({ext_axiom(), session_axiom(), transitive_visibility_axiom()})});
  return out;
}

}  // namespace

namespace macros {

Formula read_from_on(const Term& object, const Term& writer, const Term& reader) {
  std::string v = fresh_value_var();
  Term value = Term::variable(v, Sort::Val);
  return Formula::exists(v, Sort::Val,
                         Formula::conj(Formula::atom("writes", {writer, object, value}),
                                       Formula::atom("reads", {reader, object, value})));
}

Formula writes_object(const Term& t, const Term& object) {
  std::string v = fresh_value_var();
  return Formula::exists(v, Sort::Val, Formula::atom("writes", {t, object, Term::variable(v, Sort::Val)}));
}

}  // namespace macros

std::vector<fol::RelationSymbol> Framework::aux_symbols() const {
  std::vector<fol::RelationSymbol> out;
  for (const auto& a : aux) out.push_back(a.symbol);
  return out;
}

std::vector<std::string> Framework::aux_names() const {
  std::vector<std::string> out;
  for (const auto& a : aux) out.push_back(a.symbol.name);
  return out;
}

std::vector<std::string> Framework::total_orders() const {
  std::vector<std::string> out;
  for (const auto& a : aux) {
    if (a.shape == AuxRelation::Shape::StrictTotalOrder) out.push_back(a.symbol.name);
  }
  return out;
}

fol::Signature Framework::signature() const { return fol::Signature::base().extended(aux_symbols()); }

const Framework& commit_order_framework() {
  static const Framework f = make_commit_order();
  return f;
}

const Framework& visibility_framework() {
  static const Framework f = make_visibility();
  return f;
}

const Framework* find_framework(std::string_view name) {
  if (name == commit_order_framework().name) return &commit_order_framework();
  if (name == visibility_framework().name) return &visibility_framework();
  return nullptr;
}

Formula well_formedness() {
  static const Formula wf = [] {
    auto ts = [](std::initializer_list<const char*> names) {
      std::vector<std::pair<const char*, Sort>> out;
      for (const char* n : names) out.emplace_back(n, Sort::Txn);
      return out;
    };
    std::vector<Formula> parts;
    for (const char* r : {"writes", "reads"}) {
      parts.push_back(forall({{"t", Sort::Txn}, {"x", Sort::Obj}, {"v", Sort::Val}, {"w", Sort::Val}},
                             implies(Formula::conj(rel(r, {txn("t"), obj("x"), val("v")}),
                                                   rel(r, {txn("t"), obj("x"), val("w")})),
                                     Formula::equal(val("v"), val("w")))));
    }
    parts.push_back(forall({{"x", Sort::Obj}, {"v", Sort::Val}, {"t", Sort::Txn}, {"u", Sort::Txn}},
                           implies(Formula::conj(rel("writes", {txn("t"), obj("x"), val("v")}),
                                                 rel("writes", {txn("u"), obj("x"), val("v")})),
                                   Formula::equal(txn("t"), txn("u")))));
    parts.push_back(forall({{"t", Sort::Txn}, {"x", Sort::Obj}, {"v", Sort::Val}, {"w", Sort::Val}},
                           Formula::negate(Formula::conj(rel("reads", {txn("t"), obj("x"), val("v")}),
                                                         rel("writes", {txn("t"), obj("x"), val("w")})))));
    parts.push_back(forall({{"t", Sort::Txn}, {"x", Sort::Obj}, {"v", Sort::Val}},
                           implies(rel("reads", {txn("t"), obj("x"), val("v")}),
                                   exists("u", Sort::Txn,
                                          Formula::conj(fol::not_equal(txn("u"), txn("t")),
                                                        rel("writes", {txn("u"), obj("x"), val("v")}))))));
    parts.push_back(forall(ts({"a"}), Formula::negate(rel("so", {txn("a"), txn("a")}))));
    parts.push_back(forall(ts({"a", "b", "c"}),
                           implies(Formula::conj(rel("so", {txn("a"), txn("b")}), rel("so", {txn("b"), txn("c")})),
                                   rel("so", {txn("a"), txn("c")}))));
    // Predecessors of any transaction are ordered, and so are successors.
    parts.push_back(forall(ts({"a", "b", "c"}),
                           implies(fol::all_of({rel("so", {txn("a"), txn("c")}), rel("so", {txn("b"), txn("c")}),
                                                fol::not_equal(txn("a"), txn("b"))}),
                                   Formula::disj(rel("so", {txn("a"), txn("b")}), rel("so", {txn("b"), txn("a")})))));
    parts.push_back(forall(ts({"a", "b", "c"}),
                           implies(fol::all_of({rel("so", {txn("a"), txn("b")}), rel("so", {txn("a"), txn("c")}),
                                                fol::not_equal(txn("b"), txn("c"))}),
                                   Formula::disj(rel("so", {txn("b"), txn("c")}), rel("so", {txn("c"), txn("b")})))));
    return fol::all_of(parts);
  }();
  return wf;
}

const std::vector<LevelSpec>& builtin_catalog() {
  static const std::vector<LevelSpec> catalog = make_catalog();
  return catalog;
}

const LevelSpec* find_builtin(std::string_view name) {
  for (const auto& l : builtin_catalog()) {
    if (l.name == name) return &l;
  }
  return nullptr;
}

Formula membership_formula(const LevelSpec& level) {
  return fol::all_of({well_formedness(), level.framework.axioms, level.formula});
}

}  // namespace isolde
