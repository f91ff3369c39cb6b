#include "isolde/translate.hpp"

namespace isolde {

using fol::Formula;
using fol::RelExpr;
using prop::PropFormula;

std::size_t closure_rounds(std::size_t n) {
  std::size_t rounds = 0;
  std::size_t reach = 1;
  while (reach < n) {
    reach *= 2;
    ++rounds;
  }
  return rounds;
}

Translator::Translator(const VarTable& table) : table_(table), n_(table.scope().txn) {}

PropFormula Translator::translate(const Formula& formula) {
  env_.clear();
  return rec(formula);
}

std::size_t Translator::resolve(const fol::Term& t) const {
  std::size_t index = 0;
  if (t.is_constant()) {
    index = t.index();
  } else {
    bool found = false;
    for (auto it = env_.rbegin(); it != env_.rend(); ++it) {
      if (*it->first == t.name()) {
        index = it->second;
        found = true;
        break;
      }
    }
    if (!found) throw TranslateError("free variable " + t.name());
  }
  if (index >= table_.scope().size_of(t.sort())) {
    throw TranslateError("constant " + t.to_string() + " outside scope " + table_.scope().to_string());
  }
  return index;
}

PropFormula Translator::rec(const Formula& f) {
  switch (f.kind()) {
    case Formula::Kind::Atom: {
      if (f.relation() == fol::kWr) {
        const auto& m = ground(RelExpr::read_from());
        return m[resolve(f.args()[0]) * n_ + resolve(f.args()[1])];
      }
      if (!table_.has_symbol(f.relation())) throw TranslateError("unknown relation " + f.relation());
      fol::Tuple tuple;
      tuple.reserve(f.args().size());
      for (const auto& t : f.args()) tuple.push_back(resolve(t));
      try {
        return table_.atom(f.relation(), tuple);
      } catch (const std::out_of_range& e) {
        throw TranslateError(e.what());
      }
    }
    case Formula::Kind::RelAtom: {
      std::size_t a = resolve(f.args()[0]);
      std::size_t b = resolve(f.args()[1]);
      return ground(f.expr())[a * n_ + b];
    }
    case Formula::Kind::Equal: {
      std::size_t a = resolve(f.args()[0]);
      std::size_t b = resolve(f.args()[1]);
      return a == b ? PropFormula::top() : PropFormula::bottom();
    }
    case Formula::Kind::Not: return prop::make_not(rec(f.child(0)));
    case Formula::Kind::And: {
      PropFormula l = rec(f.child(0));
      if (l.is_false()) return l;
      return prop::make_and(l, rec(f.child(1)));
    }
    case Formula::Kind::Or: {
      PropFormula l = rec(f.child(0));
      if (l.is_true()) return l;
      return prop::make_or(l, rec(f.child(1)));
    }
    case Formula::Kind::Implies: {
      PropFormula l = rec(f.child(0));
      if (l.is_false()) return PropFormula::top();
      return prop::make_implies(l, rec(f.child(1)));
    }
    case Formula::Kind::Forall:
    case Formula::Kind::Exists: {
      const bool universal = f.kind() == Formula::Kind::Forall;
      const std::size_t size = table_.scope().size_of(f.var_sort());
      std::vector<PropFormula> parts;
      parts.reserve(size);
      env_.emplace_back(&f.var(), 0);
      bool decided = false;
      for (std::size_t d = 0; d < size; ++d) {
        env_.back().second = d;
        PropFormula p = rec(f.body());
        // A false conjunct (true disjunct) decides the whole quantifier.
        if (universal ? p.is_false() : p.is_true()) {
          decided = true;
          break;
        }
        parts.push_back(std::move(p));
      }
      env_.pop_back();
      if (decided) return universal ? PropFormula::bottom() : PropFormula::top();
      return universal ? prop::make_and(std::move(parts)) : prop::make_or(std::move(parts));
    }
  }
  return PropFormula::bottom();
}

const std::vector<PropFormula>& Translator::ground(const RelExpr& expr) {
  if (expr.kind() == RelExpr::Kind::ReadFrom) {
    if (wr_.empty()) {
      const Scope& s = table_.scope();
      wr_.reserve(n_ * n_);
      for (std::size_t a = 0; a < n_; ++a) {
        for (std::size_t b = 0; b < n_; ++b) {
          std::vector<PropFormula> cases;
          for (std::size_t x = 0; x < s.obj; ++x) {
            for (std::size_t v = 0; v < s.val; ++v) {
              cases.push_back(prop::make_and(table_.atom(fol::kWrites, {a, x, v}),
                                             table_.atom(fol::kReads, {b, x, v})));
            }
          }
          wr_.push_back(prop::make_or(std::move(cases)));
        }
      }
    }
    return wr_;
  }
  auto it = memo_.find(expr.id());
  if (it != memo_.end()) return it->second.second;
  auto value = compute(expr);
  return memo_.emplace(expr.id(), std::make_pair(expr, std::move(value))).first->second.second;
}

namespace {

std::vector<PropFormula> compose_matrices(const std::vector<PropFormula>& l,
                                          const std::vector<PropFormula>& r, std::size_t n) {
  std::vector<PropFormula> out;
  out.reserve(n * n);
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t c = 0; c < n; ++c) {
      std::vector<PropFormula> paths;
      for (std::size_t b = 0; b < n; ++b) {
        PropFormula step = prop::make_and(l[a * n + b], r[b * n + c]);
        if (step.is_true()) {
          paths.assign(1, step);
          break;
        }
        if (!step.is_false()) paths.push_back(std::move(step));
      }
      out.push_back(prop::make_or(std::move(paths)));
    }
  }
  return out;
}

std::vector<PropFormula> union_matrices(const std::vector<PropFormula>& l, const std::vector<PropFormula>& r) {
  std::vector<PropFormula> out;
  out.reserve(l.size());
  for (std::size_t i = 0; i < l.size(); ++i) out.push_back(prop::make_or(l[i], r[i]));
  return out;
}

}  // namespace

std::vector<PropFormula> Translator::compute(const RelExpr& expr) {
  switch (expr.kind()) {
    case RelExpr::Kind::Symbol: {
      const fol::RelationSymbol* sym = table_.signature().find(expr.name());
      if (!sym) throw TranslateError("unknown relation " + expr.name());
      if (!sym->is_binary_txn()) throw TranslateError("relation " + expr.name() + " is not Txn x Txn");
      std::vector<PropFormula> out;
      out.reserve(n_ * n_);
      for (std::size_t a = 0; a < n_; ++a) {
        for (std::size_t b = 0; b < n_; ++b) out.push_back(table_.atom(expr.name(), {a, b}));
      }
      return out;
    }
    case RelExpr::Kind::ReadFrom: return ground(expr);
    case RelExpr::Kind::Union: {
      auto l = ground(expr.lhs());
      return union_matrices(l, ground(expr.rhs()));
    }
    case RelExpr::Kind::Compose: {
      auto l = ground(expr.lhs());
      return compose_matrices(l, ground(expr.rhs()), n_);
    }
    case RelExpr::Kind::Closure: {
      // Iterative squaring: R := R | R;R, ceil(log2 n) times.
      std::vector<PropFormula> acc = ground(expr.inner());
      const std::size_t rounds = closure_rounds(n_);
      for (std::size_t i = 0; i < rounds; ++i) {
        acc = union_matrices(acc, compose_matrices(acc, acc, n_));
      }
      return acc;
    }
  }
  return {};
}

PropFormula translate(const VarTable& table, const Formula& formula) {
  Translator t(table);
  return t.translate(formula);
}

// ---------------------------------------------------------------------------

PropFormula restrict(const PropFormula& f, const VarTable& table, const std::set<std::string>& symbols,
                     const prop::Instance& instance) {
  // Per-variable replacement: 0 keep, 1 true, 2 false.
  std::vector<std::uint8_t> fixed(table.size() + 1, 0);
  for (const auto& sym : symbols) {
    if (!table.has_symbol(sym)) throw DecodeError("unknown symbol " + sym);
    for (prop::Var v : table.vars_of(sym)) {
      if (!instance.covers(v)) {
        throw DecodeError("instance does not assign variable " + std::to_string(v) + " of " + sym);
      }
      fixed[v] = instance.value(v) ? 1 : 2;
    }
  }
  std::unordered_map<const prop::PropNode*, std::pair<PropFormula, PropFormula>> memo;
  auto rec = [&](auto&& self, const PropFormula& g) -> PropFormula {
    switch (g.kind()) {
      case PropFormula::Kind::Var: {
        std::uint8_t s = g.var() < fixed.size() ? fixed[g.var()] : 0;
        if (s == 1) return PropFormula::top();
        if (s == 2) return PropFormula::bottom();
        return g;
      }
      case PropFormula::Kind::True:
      case PropFormula::Kind::False: return g;
      default: break;
    }
    auto it = memo.find(g.id());
    if (it != memo.end()) return it->second.second;
    PropFormula out = PropFormula::bottom();
    switch (g.kind()) {
      case PropFormula::Kind::Not: out = prop::make_not(self(self, g.child(0))); break;
      case PropFormula::Kind::And:
      case PropFormula::Kind::Or: {
        const bool is_and = g.kind() == PropFormula::Kind::And;
        std::vector<PropFormula> cs;
        cs.reserve(g.children().size());
        bool changed = false;
        bool decided = false;
        for (const auto& c : g.children()) {
          PropFormula r = self(self, c);
          if (is_and ? r.is_false() : r.is_true()) {
            decided = true;
            out = r;
            break;
          }
          changed = changed || r.id() != c.id();
          cs.push_back(std::move(r));
        }
        if (decided) break;
        if (!changed) {
          out = g;
        } else {
          out = is_and ? prop::make_and(std::move(cs)) : prop::make_or(std::move(cs));
        }
        break;
      }
      case PropFormula::Kind::Implies: {
        PropFormula a = self(self, g.child(0));
        PropFormula b = a.is_false() ? PropFormula::top() : self(self, g.child(1));
        if (a.id() == g.child(0).id() && b.id() == g.child(1).id()) {
          out = g;
        } else {
          out = prop::make_implies(a, b);
        }
        break;
      }
      default: break;
    }
    memo.emplace(g.id(), std::make_pair(g, out));
    return out;
  };
  return rec(rec, f);
}

}  // namespace isolde
