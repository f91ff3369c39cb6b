#include "isolde/fol.hpp"

#include <algorithm>
#include <functional>
#include <sstream>
#include <unordered_map>

namespace isolde::fol {

std::string_view to_string(Sort sort) {
  switch (sort) {
    case Sort::Txn: return "Txn";
    case Sort::Obj: return "Obj";
    case Sort::Val: return "Val";
  }
  return "?";
}

std::optional<Sort> parse_sort(std::string_view text) {
  if (text == "Txn") return Sort::Txn;
  if (text == "Obj") return Sort::Obj;
  if (text == "Val") return Sort::Val;
  return std::nullopt;
}

char constant_prefix(Sort sort) {
  switch (sort) {
    case Sort::Txn: return 't';
    case Sort::Obj: return 'x';
    case Sort::Val: return 'n';
  }
  return '?';
}

Term Term::variable(std::string name, Sort sort) {
  Term t;
  t.is_var_ = true;
  t.name_ = std::move(name);
  t.sort_ = sort;
  return t;
}

Term Term::constant(std::size_t index, Sort sort) {
  Term t;
  t.is_var_ = false;
  t.index_ = index;
  t.sort_ = sort;
  return t;
}

std::string Term::to_string() const {
  if (is_var_) return name_;
  return constant_prefix(sort_) + std::to_string(index_);
}

// ---------------------------------------------------------------------------

Signature::Signature(std::vector<RelationSymbol> symbols) {
  for (auto& s : symbols) add(std::move(s));
}

Signature Signature::base() {
  return Signature({
      {std::string(kWrites), {Sort::Txn, Sort::Obj, Sort::Val}},
      {std::string(kReads), {Sort::Txn, Sort::Obj, Sort::Val}},
      {std::string(kSo), {Sort::Txn, Sort::Txn}},
  });
}

void Signature::add(RelationSymbol symbol) {
  if (symbol.name == kWr) throw std::invalid_argument("`wr` is a reserved derived relation");
  if (find(symbol.name) != nullptr) {
    throw std::invalid_argument("duplicate relation symbol " + symbol.name);
  }
  symbols_.push_back(std::move(symbol));
}

const RelationSymbol* Signature::find(std::string_view name) const {
  for (const auto& s : symbols_) {
    if (s.name == name) return &s;
  }
  return nullptr;
}

Signature Signature::extended(const std::vector<RelationSymbol>& more) const {
  Signature out = *this;
  for (const auto& s : more) out.add(s);
  return out;
}

// ---------------------------------------------------------------------------

namespace {
std::shared_ptr<const RelExprNode> make_rel(RelExpr::Kind kind, std::string name,
                                            std::vector<RelExpr> operands) {
  return std::make_shared<const RelExprNode>(RelExprNode{kind, std::move(name), std::move(operands)});
}
}  // namespace

RelExpr RelExpr::symbol(std::string name) {
  if (name == kWr) return read_from();
  return RelExpr(make_rel(Kind::Symbol, std::move(name), {}));
}
RelExpr RelExpr::read_from() { return RelExpr(make_rel(Kind::ReadFrom, std::string(kWr), {})); }
RelExpr RelExpr::union_of(RelExpr lhs, RelExpr rhs) {
  return RelExpr(make_rel(Kind::Union, "", {std::move(lhs), std::move(rhs)}));
}
RelExpr RelExpr::compose(RelExpr lhs, RelExpr rhs) {
  return RelExpr(make_rel(Kind::Compose, "", {std::move(lhs), std::move(rhs)}));
}
RelExpr RelExpr::closure(RelExpr inner) {
  return RelExpr(make_rel(Kind::Closure, "", {std::move(inner)}));
}

RelExpr::Kind RelExpr::kind() const { return node_->kind; }
const std::string& RelExpr::name() const { return node_->name; }
const RelExpr& RelExpr::lhs() const { return node_->operands.at(0); }
const RelExpr& RelExpr::rhs() const { return node_->operands.at(1); }

std::string RelExpr::to_string() const {
  switch (kind()) {
    case Kind::Symbol:
    case Kind::ReadFrom: return name();
    case Kind::Union: return "(" + lhs().to_string() + " | " + rhs().to_string() + ")";
    case Kind::Compose: return "(" + lhs().to_string() + " ; " + rhs().to_string() + ")";
    case Kind::Closure: {
      std::string in = inner().to_string();
      return in + "+";
    }
  }
  return "?";
}

bool operator==(const RelExpr& a, const RelExpr& b) {
  if (a.node_ == b.node_) return true;
  if (a.kind() != b.kind() || a.name() != b.name()) return false;
  return a.node_->operands == b.node_->operands;
}

// ---------------------------------------------------------------------------

Formula Formula::atom(std::string relation, std::vector<Term> args) {
  auto n = std::make_shared<FormulaNode>();
  n->kind = Kind::Atom;
  n->name = std::move(relation);
  n->args = std::move(args);
  return Formula(std::move(n));
}

Formula Formula::rel_atom(RelExpr expr, Term lhs, Term rhs) {
  auto n = std::make_shared<FormulaNode>();
  n->kind = Kind::RelAtom;
  n->expr = std::move(expr);
  n->args = {std::move(lhs), std::move(rhs)};
  return Formula(std::move(n));
}

Formula Formula::equal(Term lhs, Term rhs) {
  auto n = std::make_shared<FormulaNode>();
  n->kind = Kind::Equal;
  n->args = {std::move(lhs), std::move(rhs)};
  return Formula(std::move(n));
}

Formula Formula::negate(Formula f) {
  auto n = std::make_shared<FormulaNode>();
  n->kind = Kind::Not;
  n->children = {std::move(f)};
  return Formula(std::move(n));
}

namespace {
std::shared_ptr<FormulaNode> binary_node(Formula::Kind kind, Formula lhs, Formula rhs) {
  auto n = std::make_shared<FormulaNode>();
  n->kind = kind;
  n->children = {std::move(lhs), std::move(rhs)};
  return n;
}
std::shared_ptr<FormulaNode> quant_node(Formula::Kind kind, std::string var, Sort sort, Formula body) {
  auto n = std::make_shared<FormulaNode>();
  n->kind = kind;
  n->name = std::move(var);
  n->sort = sort;
  n->children = {std::move(body)};
  return n;
}
}  // namespace

Formula Formula::conj(Formula lhs, Formula rhs) {
  return Formula(binary_node(Kind::And, std::move(lhs), std::move(rhs)));
}
Formula Formula::disj(Formula lhs, Formula rhs) {
  return Formula(binary_node(Kind::Or, std::move(lhs), std::move(rhs)));
}
Formula Formula::implies(Formula lhs, Formula rhs) {
  return Formula(binary_node(Kind::Implies, std::move(lhs), std::move(rhs)));
}
Formula Formula::forall(std::string var, Sort sort, Formula body) {
  return Formula(quant_node(Kind::Forall, std::move(var), sort, std::move(body)));
}
Formula Formula::exists(std::string var, Sort sort, Formula body) {
  return Formula(quant_node(Kind::Exists, std::move(var), sort, std::move(body)));
}

Formula::Kind Formula::kind() const { return node_->kind; }
const std::string& Formula::relation() const { return node_->name; }
const std::vector<Term>& Formula::args() const { return node_->args; }
const RelExpr& Formula::expr() const { return *node_->expr; }
const Formula& Formula::child(std::size_t i) const { return node_->children.at(i); }
const std::string& Formula::var() const { return node_->name; }
Sort Formula::var_sort() const { return node_->sort; }

namespace {
std::string join_terms(const std::vector<Term>& args) {
  std::string out;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (i) out += ", ";
    out += args[i].to_string();
  }
  return out;
}
}  // namespace

std::string Formula::to_string() const {
  switch (kind()) {
    case Kind::Atom: return relation() + "(" + join_terms(args()) + ")";
    case Kind::RelAtom: {
      const RelExpr& e = expr();
      std::string head = e.kind() == RelExpr::Kind::Symbol || e.kind() == RelExpr::Kind::ReadFrom
                             ? e.to_string()
                             : "(" + e.to_string() + ")";
      return head + "(" + join_terms(args()) + ")";
    }
    case Kind::Equal: return args()[0].to_string() + " = " + args()[1].to_string();
    case Kind::Not: {
      const Formula& c = child(0);
      if (c.kind() == Kind::Equal) return c.args()[0].to_string() + " != " + c.args()[1].to_string();
      return "!(" + c.to_string() + ")";
    }
    case Kind::And: return "(" + child(0).to_string() + " && " + child(1).to_string() + ")";
    case Kind::Or: return "(" + child(0).to_string() + " || " + child(1).to_string() + ")";
    case Kind::Implies: return "(" + child(0).to_string() + " => " + child(1).to_string() + ")";
    case Kind::Forall:
    case Kind::Exists:
      return std::string(kind() == Kind::Forall ? "(forall " : "(exists ") + var() + ":" +
             std::string(fol::to_string(var_sort())) + " . " + body().to_string() + ")";
  }
  return "?";
}

bool operator==(const Formula& a, const Formula& b) {
  if (a.node_ == b.node_) return true;
  const FormulaNode& x = *a.node_;
  const FormulaNode& y = *b.node_;
  if (x.kind != y.kind || x.name != y.name || x.args != y.args) return false;
  if (x.kind == Formula::Kind::Forall || x.kind == Formula::Kind::Exists) {
    if (x.sort != y.sort) return false;
  }
  if (x.expr.has_value() != y.expr.has_value()) return false;
  if (x.expr && !(*x.expr == *y.expr)) return false;
  return x.children == y.children;
}

Formula all_of(const std::vector<Formula>& parts) {
  if (parts.empty()) {
    return Formula::equal(Term::constant(0, Sort::Txn), Term::constant(0, Sort::Txn));
  }
  Formula acc = parts.front();
  for (std::size_t i = 1; i < parts.size(); ++i) acc = Formula::conj(acc, parts[i]);
  return acc;
}

Formula any_of(const std::vector<Formula>& parts) {
  if (parts.empty()) {
    return Formula::negate(
        Formula::equal(Term::constant(0, Sort::Txn), Term::constant(0, Sort::Txn)));
  }
  Formula acc = parts.front();
  for (std::size_t i = 1; i < parts.size(); ++i) acc = Formula::disj(acc, parts[i]);
  return acc;
}

Formula not_equal(Term lhs, Term rhs) {
  return Formula::negate(Formula::equal(std::move(lhs), std::move(rhs)));
}

namespace {

using Renaming = std::vector<std::pair<std::string, std::string>>;

bool alpha_term(const Term& a, const Term& b, const Renaming& env) {
  if (a.sort() != b.sort() || a.is_variable() != b.is_variable()) return false;
  if (a.is_constant()) return a.index() == b.index();
  for (auto it = env.rbegin(); it != env.rend(); ++it) {
    bool left = it->first == a.name();
    bool right = it->second == b.name();
    if (left || right) return left && right;
  }
  return a.name() == b.name();
}

bool alpha_rec(const Formula& a, const Formula& b, Renaming& env) {
  if (a.kind() != b.kind()) return false;
  switch (a.kind()) {
    case Formula::Kind::Atom:
      if (a.relation() != b.relation()) return false;
      [[fallthrough]];
    case Formula::Kind::RelAtom:
    case Formula::Kind::Equal: {
      if (a.kind() == Formula::Kind::RelAtom && !(a.expr() == b.expr())) return false;
      if (a.args().size() != b.args().size()) return false;
      for (std::size_t i = 0; i < a.args().size(); ++i) {
        if (!alpha_term(a.args()[i], b.args()[i], env)) return false;
      }
      return true;
    }
    case Formula::Kind::Not: return alpha_rec(a.child(0), b.child(0), env);
    case Formula::Kind::And:
    case Formula::Kind::Or:
    case Formula::Kind::Implies:
      return alpha_rec(a.child(0), b.child(0), env) && alpha_rec(a.child(1), b.child(1), env);
    case Formula::Kind::Forall:
    case Formula::Kind::Exists: {
      if (a.var_sort() != b.var_sort()) return false;
      env.emplace_back(a.var(), b.var());
      bool ok = alpha_rec(a.body(), b.body(), env);
      env.pop_back();
      return ok;
    }
  }
  return false;
}

}  // namespace

bool alpha_equal(const Formula& a, const Formula& b) {
  Renaming env;
  return alpha_rec(a, b, env);
}

// ---------------------------------------------------------------------------
// Well-formedness

namespace {

struct WfChecker {
  const Signature& signature;
  std::vector<Diagnostic> diags;
  std::vector<std::pair<std::string, Sort>> scope;

  const std::pair<std::string, Sort>* lookup(const std::string& name) const {
    for (auto it = scope.rbegin(); it != scope.rend(); ++it) {
      if (it->first == name) return &*it;
    }
    return nullptr;
  }

  // Sort of a term, or nullopt after reporting an unbound variable.
  std::optional<Sort> term_sort(const Term& t, const Formula& where) {
    if (t.is_constant()) return t.sort();
    const auto* bound = lookup(t.name());
    if (!bound) {
      diags.push_back({where.to_string(), "unbound variable " + t.name()});
      return std::nullopt;
    }
    if (bound->second != t.sort()) {
      diags.push_back({where.to_string(), "variable " + t.name() + " used as " +
                                              std::string(to_string(t.sort())) + " but bound as " +
                                              std::string(to_string(bound->second))});
      return std::nullopt;
    }
    return t.sort();
  }

  void check_expr(const RelExpr& e, const Formula& where) {
    switch (e.kind()) {
      case RelExpr::Kind::ReadFrom: return;
      case RelExpr::Kind::Symbol: {
        const RelationSymbol* s = signature.find(e.name());
        if (!s) {
          diags.push_back({where.to_string(), "unknown relation " + e.name()});
        } else if (!s->is_binary_txn()) {
          diags.push_back({where.to_string(),
                           "relation " + e.name() + " used in a relation expression is not Txn x Txn"});
        }
        return;
      }
      case RelExpr::Kind::Union:
      case RelExpr::Kind::Compose:
        check_expr(e.lhs(), where);
        check_expr(e.rhs(), where);
        return;
      case RelExpr::Kind::Closure: check_expr(e.inner(), where); return;
    }
  }

  void check_args(const std::string& rel, const std::vector<Sort>& sig, const Formula& f) {
    if (sig.size() != f.args().size()) {
      diags.push_back({f.to_string(), "arity mismatch for " + rel + ": expected " +
                                          std::to_string(sig.size()) + " arguments, got " +
                                          std::to_string(f.args().size())});
      return;
    }
    for (std::size_t i = 0; i < sig.size(); ++i) {
      auto s = term_sort(f.args()[i], f);
      if (s && *s != sig[i]) {
        diags.push_back({f.to_string(), "sort mismatch at argument " + std::to_string(i + 1) +
                                            " of " + rel});
      }
    }
  }

  void check(const Formula& f) {
    switch (f.kind()) {
      case Formula::Kind::Atom: {
        if (f.relation() == kWr) {
          check_args(std::string(kWr), {Sort::Txn, Sort::Txn}, f);
          return;
        }
        const RelationSymbol* s = signature.find(f.relation());
        if (!s) {
          diags.push_back({f.to_string(), "unknown relation " + f.relation()});
          for (const auto& t : f.args()) term_sort(t, f);
          return;
        }
        check_args(s->name, s->signature, f);
        return;
      }
      case Formula::Kind::RelAtom:
        check_expr(f.expr(), f);
        check_args(f.expr().to_string(), {Sort::Txn, Sort::Txn}, f);
        return;
      case Formula::Kind::Equal: {
        auto a = term_sort(f.args()[0], f);
        auto b = term_sort(f.args()[1], f);
        if (a && b && *a != *b) diags.push_back({f.to_string(), "sort mismatch in equality"});
        return;
      }
      case Formula::Kind::Not: check(f.child(0)); return;
      case Formula::Kind::And:
      case Formula::Kind::Or:
      case Formula::Kind::Implies:
        check(f.child(0));
        check(f.child(1));
        return;
      case Formula::Kind::Forall:
      case Formula::Kind::Exists:
        if (lookup(f.var())) {
          diags.push_back({f.to_string(), "variable " + f.var() + " shadows an outer binding"});
        }
        scope.emplace_back(f.var(), f.var_sort());
        check(f.body());
        scope.pop_back();
        return;
    }
  }
};

void collect_free(const Formula& f, std::vector<std::string>& bound,
                  std::vector<std::pair<std::string, Sort>>& out) {
  auto visit_term = [&](const Term& t) {
    if (!t.is_variable()) return;
    if (std::find(bound.begin(), bound.end(), t.name()) != bound.end()) return;
    for (const auto& [n, s] : out) {
      if (n == t.name()) return;
    }
    out.emplace_back(t.name(), t.sort());
  };
  switch (f.kind()) {
    case Formula::Kind::Atom:
    case Formula::Kind::RelAtom:
    case Formula::Kind::Equal:
      for (const auto& t : f.args()) visit_term(t);
      return;
    case Formula::Kind::Not: collect_free(f.child(0), bound, out); return;
    case Formula::Kind::And:
    case Formula::Kind::Or:
    case Formula::Kind::Implies:
      collect_free(f.child(0), bound, out);
      collect_free(f.child(1), bound, out);
      return;
    case Formula::Kind::Forall:
    case Formula::Kind::Exists:
      bound.push_back(f.var());
      collect_free(f.body(), bound, out);
      bound.pop_back();
      return;
  }
}

void collect_relations(const RelExpr& e, std::set<std::string>& out) {
  switch (e.kind()) {
    case RelExpr::Kind::Symbol: out.insert(e.name()); return;
    case RelExpr::Kind::ReadFrom: return;
    case RelExpr::Kind::Union:
    case RelExpr::Kind::Compose:
      collect_relations(e.lhs(), out);
      collect_relations(e.rhs(), out);
      return;
    case RelExpr::Kind::Closure: collect_relations(e.inner(), out); return;
  }
}

template <typename Fn>
void for_each_node(const Formula& f, Fn&& fn) {
  fn(f);
  if (f.kind() == Formula::Kind::Not || f.is_quantifier()) {
    for_each_node(f.child(0), fn);
  } else if (f.is_binary()) {
    for_each_node(f.child(0), fn);
    for_each_node(f.child(1), fn);
  }
}

}  // namespace

std::vector<Diagnostic> check_well_formed(const Formula& formula, const Signature& signature) {
  WfChecker checker{signature, {}, {}};
  checker.check(formula);
  return checker.diags;
}

std::vector<std::pair<std::string, Sort>> free_variables(const Formula& formula) {
  std::vector<std::string> bound;
  std::vector<std::pair<std::string, Sort>> out;
  collect_free(formula, bound, out);
  return out;
}

bool contains_constants(const Formula& formula) {
  bool found = false;
  for_each_node(formula, [&](const Formula& f) {
    if (f.kind() == Formula::Kind::Atom || f.kind() == Formula::Kind::RelAtom ||
        f.kind() == Formula::Kind::Equal) {
      for (const auto& t : f.args()) found = found || t.is_constant();
    }
  });
  return found;
}

std::set<std::string> used_relations(const Formula& formula) {
  std::set<std::string> out;
  for_each_node(formula, [&](const Formula& f) {
    if (f.kind() == Formula::Kind::Atom && f.relation() != kWr) out.insert(f.relation());
    if (f.kind() == Formula::Kind::RelAtom) collect_relations(f.expr(), out);
  });
  return out;
}

// ---------------------------------------------------------------------------
// Substitution

namespace {

struct Substituter {
  std::map<std::string, Term> replacement;
  std::size_t fresh_counter = 0;

  bool term_mentions(const std::string& name) const {
    for (const auto& [k, t] : replacement) {
      if (t.is_variable() && t.name() == name) return true;
    }
    return false;
  }

  std::string fresh(const std::string& base, const Formula& body) {
    auto in_body = free_variables(body);
    while (true) {
      std::string candidate = base + "'" + std::to_string(++fresh_counter);
      bool clash = term_mentions(candidate) || replacement.count(candidate);
      for (const auto& [n, s] : in_body) clash = clash || n == candidate;
      if (!clash) return candidate;
    }
  }

  std::vector<Term> map_terms(const std::vector<Term>& args, bool& changed) const {
    std::vector<Term> out;
    out.reserve(args.size());
    for (const auto& t : args) {
      if (t.is_variable()) {
        auto it = replacement.find(t.name());
        if (it != replacement.end()) {
          out.push_back(it->second);
          changed = true;
          continue;
        }
      }
      out.push_back(t);
    }
    return out;
  }

  Formula apply(const Formula& f) {
    if (replacement.empty()) return f;
    switch (f.kind()) {
      case Formula::Kind::Atom: {
        bool changed = false;
        auto args = map_terms(f.args(), changed);
        return changed ? Formula::atom(f.relation(), std::move(args)) : f;
      }
      case Formula::Kind::RelAtom: {
        bool changed = false;
        auto args = map_terms(f.args(), changed);
        return changed ? Formula::rel_atom(f.expr(), args[0], args[1]) : f;
      }
      case Formula::Kind::Equal: {
        bool changed = false;
        auto args = map_terms(f.args(), changed);
        return changed ? Formula::equal(args[0], args[1]) : f;
      }
      case Formula::Kind::Not: {
        Formula c = apply(f.child(0));
        return c.id() == f.child(0).id() ? f : Formula::negate(c);
      }
      case Formula::Kind::And:
      case Formula::Kind::Or:
      case Formula::Kind::Implies: {
        Formula l = apply(f.child(0));
        Formula r = apply(f.child(1));
        if (l.id() == f.child(0).id() && r.id() == f.child(1).id()) return f;
        if (f.kind() == Formula::Kind::And) return Formula::conj(l, r);
        if (f.kind() == Formula::Kind::Or) return Formula::disj(l, r);
        return Formula::implies(l, r);
      }
      case Formula::Kind::Forall:
      case Formula::Kind::Exists: {
        auto saved = replacement;
        replacement.erase(f.var());
        std::string var = f.var();
        Formula body = f.body();
        if (term_mentions(var)) {
          // Rename the binder so an incoming variable is not captured.
          std::string renamed = fresh(var, body);
          Substituter inner{{{var, Term::variable(renamed, f.var_sort())}}, 0};
          body = inner.apply(body);
          var = renamed;
        }
        Formula new_body = apply(body);
        replacement = std::move(saved);
        if (var == f.var() && new_body.id() == f.body().id()) return f;
        return f.kind() == Formula::Kind::Forall ? Formula::forall(var, f.var_sort(), new_body)
                                                 : Formula::exists(var, f.var_sort(), new_body);
      }
    }
    return f;
  }
};

}  // namespace

Formula substitute(const Formula& formula, const std::string& var, Sort sort, const Term& constant) {
  if (!constant.is_constant()) throw SortError("substitute expects a constant term");
  if (constant.sort() != sort) {
    throw SortError("cannot substitute " + constant.to_string() + " of sort " +
                    std::string(to_string(constant.sort())) + " for variable " + var + " of sort " +
                    std::string(to_string(sort)));
  }
  Substituter s{{{var, constant}}, 0};
  return s.apply(formula);
}

Formula substitute_terms(const Formula& formula, const std::map<std::string, Term>& replacement) {
  Substituter s{replacement, 0};
  return s.apply(formula);
}

RelExpr rename_relations(const RelExpr& expr, const std::map<std::string, std::string>& renaming) {
  switch (expr.kind()) {
    case RelExpr::Kind::Symbol: {
      auto it = renaming.find(expr.name());
      return it == renaming.end() ? expr : RelExpr::symbol(it->second);
    }
    case RelExpr::Kind::ReadFrom: return expr;
    case RelExpr::Kind::Union:
      return RelExpr::union_of(rename_relations(expr.lhs(), renaming),
                               rename_relations(expr.rhs(), renaming));
    case RelExpr::Kind::Compose:
      return RelExpr::compose(rename_relations(expr.lhs(), renaming),
                              rename_relations(expr.rhs(), renaming));
    case RelExpr::Kind::Closure: return RelExpr::closure(rename_relations(expr.inner(), renaming));
  }
  return expr;
}

Formula rename_relations(const Formula& f, const std::map<std::string, std::string>& renaming) {
  switch (f.kind()) {
    case Formula::Kind::Atom: {
      auto it = renaming.find(f.relation());
      return it == renaming.end() ? f : Formula::atom(it->second, f.args());
    }
    case Formula::Kind::RelAtom:
      return Formula::rel_atom(rename_relations(f.expr(), renaming), f.args()[0], f.args()[1]);
    case Formula::Kind::Equal: return f;
    case Formula::Kind::Not: return Formula::negate(rename_relations(f.child(0), renaming));
    case Formula::Kind::And:
      return Formula::conj(rename_relations(f.child(0), renaming), rename_relations(f.child(1), renaming));
    case Formula::Kind::Or:
      return Formula::disj(rename_relations(f.child(0), renaming), rename_relations(f.child(1), renaming));
    case Formula::Kind::Implies:
      return Formula::implies(rename_relations(f.child(0), renaming),
                              rename_relations(f.child(1), renaming));
    case Formula::Kind::Forall:
      return Formula::forall(f.var(), f.var_sort(), rename_relations(f.body(), renaming));
    case Formula::Kind::Exists:
      return Formula::exists(f.var(), f.var_sort(), rename_relations(f.body(), renaming));
  }
  return f;
}

// ---------------------------------------------------------------------------
// Finite structures

std::set<TuplePair> TxnRelation::pairs() const {
  std::set<TuplePair> out;
  for (std::size_t a = 0; a < n_; ++a) {
    for (std::size_t b = 0; b < n_; ++b) {
      if (test(a, b)) out.emplace(a, b);
    }
  }
  return out;
}

FiniteStructure::FiniteStructure(std::array<std::size_t, 3> domains, Signature signature)
    : domains_(domains), signature_(std::move(signature)) {
  for (std::size_t d : domains_) {
    if (d == 0) throw std::invalid_argument("finite structure domains must be non-empty");
  }
  slots_.reserve(signature_.symbols().size());
  for (const auto& sym : signature_.symbols()) {
    Slot s{&sym, {}, {}};
    std::size_t total = 1;
    s.strides.assign(sym.arity(), 0);
    for (std::size_t i = sym.arity(); i-- > 0;) {
      s.strides[i] = total;
      total *= domain_size(sym.signature[i]);
    }
    s.bits.assign(total, 0);
    slots_.push_back(std::move(s));
  }
}

FiniteStructure::Slot& FiniteStructure::slot(std::string_view relation) {
  for (auto& s : slots_) {
    if (s.symbol->name == relation) return s;
  }
  throw UnknownSymbolError("structure does not interpret relation " + std::string(relation));
}

const FiniteStructure::Slot& FiniteStructure::slot(std::string_view relation) const {
  for (const auto& s : slots_) {
    if (s.symbol->name == relation) return s;
  }
  throw UnknownSymbolError("structure does not interpret relation " + std::string(relation));
}

std::size_t FiniteStructure::offset(const Slot& s, const Tuple& tuple) const {
  if (tuple.size() != s.symbol->arity()) {
    throw std::invalid_argument("tuple arity does not match relation " + s.symbol->name);
  }
  std::size_t off = 0;
  for (std::size_t i = 0; i < tuple.size(); ++i) {
    if (tuple[i] >= domain_size(s.symbol->signature[i])) {
      throw std::out_of_range("tuple element out of domain for relation " + s.symbol->name);
    }
    off += tuple[i] * s.strides[i];
  }
  return off;
}

void FiniteStructure::insert(std::string_view relation, const Tuple& tuple) {
  Slot& s = slot(relation);
  s.bits[offset(s, tuple)] = 1;
}

void FiniteStructure::erase(std::string_view relation, const Tuple& tuple) {
  Slot& s = slot(relation);
  s.bits[offset(s, tuple)] = 0;
}

bool FiniteStructure::contains(std::string_view relation, const Tuple& tuple) const {
  const Slot& s = slot(relation);
  return s.bits[offset(s, tuple)] != 0;
}

std::set<Tuple> FiniteStructure::tuples(std::string_view relation) const {
  const Slot& s = slot(relation);
  std::set<Tuple> out;
  const auto& sig = s.symbol->signature;
  for (std::size_t off = 0; off < s.bits.size(); ++off) {
    if (!s.bits[off]) continue;
    Tuple t(sig.size());
    std::size_t rest = off;
    for (std::size_t i = 0; i < sig.size(); ++i) {
      t[i] = rest / s.strides[i];
      rest %= s.strides[i];
    }
    out.insert(std::move(t));
  }
  return out;
}

void FiniteStructure::assign(std::string_view relation, const TxnRelation& value) {
  Slot& s = slot(relation);
  if (!s.symbol->is_binary_txn() || value.size() != domain_size(Sort::Txn)) {
    throw std::invalid_argument("assign expects a Txn x Txn relation of matching size");
  }
  const std::size_t n = value.size();
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) s.bits[a * n + b] = value.test(a, b) ? 1 : 0;
  }
}

TxnRelation FiniteStructure::binary(std::string_view relation) const {
  const Slot& s = slot(relation);
  if (!s.symbol->is_binary_txn()) {
    throw std::invalid_argument("relation " + std::string(relation) + " is not Txn x Txn");
  }
  const std::size_t n = domain_size(Sort::Txn);
  TxnRelation out(n);
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) out.set(a, b, s.bits[a * n + b] != 0);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Evaluation

namespace {

TxnRelation compose(const TxnRelation& l, const TxnRelation& r) {
  const std::size_t n = l.size();
  TxnRelation out(n);
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) {
      if (!l.test(a, b)) continue;
      for (std::size_t c = 0; c < n; ++c) {
        if (r.test(b, c)) out.set(a, c);
      }
    }
  }
  return out;
}

TxnRelation unite(const TxnRelation& l, const TxnRelation& r) {
  const std::size_t n = l.size();
  TxnRelation out(n);
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) out.set(a, b, l.test(a, b) || r.test(a, b));
  }
  return out;
}

TxnRelation read_from_relation(const FiniteStructure& m) {
  const std::size_t n = m.domain_size(Sort::Txn);
  const std::size_t objs = m.domain_size(Sort::Obj);
  const std::size_t vals = m.domain_size(Sort::Val);
  TxnRelation out(n);
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t x = 0; x < objs; ++x) {
      for (std::size_t v = 0; v < vals; ++v) {
        if (!m.contains(kWrites, {a, x, v})) continue;
        for (std::size_t b = 0; b < n; ++b) {
          if (m.contains(kReads, {b, x, v})) out.set(a, b);
        }
      }
    }
  }
  return out;
}

}  // namespace

class Evaluator {
 public:
  explicit Evaluator(const FiniteStructure& m) : m_(m) {}

  bool eval(const Formula& f) {
    switch (f.kind()) {
      case Formula::Kind::Atom: {
        if (f.relation() == kWr) {
          return relation(RelExpr::read_from()).test(value(f.args()[0]), value(f.args()[1]));
        }
        const FiniteStructure::Slot& s = m_.slot(f.relation());
        const auto& args = f.args();
        if (args.size() != s.strides.size()) {
          throw std::invalid_argument("arity mismatch for relation " + f.relation());
        }
        std::size_t off = 0;
        for (std::size_t i = 0; i < args.size(); ++i) off += value(args[i]) * s.strides[i];
        return s.bits[off] != 0;
      }
      case Formula::Kind::RelAtom:
        return relation(f.expr()).test(value(f.args()[0]), value(f.args()[1]));
      case Formula::Kind::Equal: return value(f.args()[0]) == value(f.args()[1]);
      case Formula::Kind::Not: return !eval(f.child(0));
      case Formula::Kind::And: return eval(f.child(0)) && eval(f.child(1));
      case Formula::Kind::Or: return eval(f.child(0)) || eval(f.child(1));
      case Formula::Kind::Implies: return !eval(f.child(0)) || eval(f.child(1));
      case Formula::Kind::Forall:
      case Formula::Kind::Exists: {
        const bool universal = f.kind() == Formula::Kind::Forall;
        const std::size_t n = m_.domain_size(f.var_sort());
        env_.emplace_back(&f.var(), 0);
        bool result = universal;
        for (std::size_t d = 0; d < n; ++d) {
          env_.back().second = d;
          if (eval(f.body()) != universal) {
            result = !universal;
            break;
          }
        }
        env_.pop_back();
        return result;
      }
    }
    return false;
  }

  const TxnRelation& relation(const RelExpr& e) {
    if (e.kind() == RelExpr::Kind::ReadFrom) {
      if (!wr_) wr_ = read_from_relation(m_);
      return *wr_;
    }
    auto it = memo_.find(e.id());
    if (it != memo_.end()) return it->second.second;
    TxnRelation value = compute(e);
    // Keep the expression alive alongside its memo entry.
    return memo_.emplace(e.id(), std::make_pair(e, std::move(value))).first->second.second;
  }

 private:
  std::size_t value(const Term& t) const {
    if (t.is_constant()) {
      if (t.index() >= m_.domain_size(t.sort())) {
        throw std::out_of_range("constant " + t.to_string() + " outside the structure's domain");
      }
      return t.index();
    }
    for (auto it = env_.rbegin(); it != env_.rend(); ++it) {
      if (*it->first == t.name()) return it->second;
    }
    throw std::invalid_argument("unbound variable " + t.name());
  }

  TxnRelation compute(const RelExpr& e) {
    switch (e.kind()) {
      case RelExpr::Kind::Symbol: return m_.binary(e.name());
      case RelExpr::Kind::ReadFrom: return relation(e);
      case RelExpr::Kind::Union: {
        TxnRelation l = relation(e.lhs());
        return unite(l, relation(e.rhs()));
      }
      case RelExpr::Kind::Compose: {
        TxnRelation l = relation(e.lhs());
        return compose(l, relation(e.rhs()));
      }
      case RelExpr::Kind::Closure: {
        // Least fixpoint of R := R | R;base.
        TxnRelation base = relation(e.inner());
        TxnRelation acc = base;
        while (true) {
          TxnRelation next = unite(acc, compose(acc, base));
          if (next == acc) return acc;
          acc = std::move(next);
        }
      }
    }
    return TxnRelation(m_.domain_size(Sort::Txn));
  }

  const FiniteStructure& m_;
  std::vector<std::pair<const std::string*, std::size_t>> env_;
  std::unordered_map<const RelExprNode*, std::pair<RelExpr, TxnRelation>> memo_;
  std::optional<TxnRelation> wr_;
};

bool evaluate(const Formula& formula, const FiniteStructure& structure) {
  Evaluator ev(structure);
  return ev.eval(formula);
}

TxnRelation rel_evaluate(const RelExpr& expr, const FiniteStructure& structure) {
  Evaluator ev(structure);
  return ev.relation(expr);
}

}  // namespace isolde::fol
