#pragma once

// Grounding of closed first-order formulas into propositional formulas, and
// substitution of solver instances for selected relation symbols.

#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "isolde/bounds.hpp"
#include "isolde/fol.hpp"
#include "isolde/prop.hpp"

namespace isolde {

class TranslateError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Reusable grounder over one variable table. Relation expressions are
/// grounded once per translator and shared between atoms, so repeated
/// closures cost nothing after the first use.
class Translator {
 public:
  explicit Translator(const VarTable& table);

  /// Throws TranslateError for free variables, unknown symbols or constants
  /// outside the scope.
  prop::PropFormula translate(const fol::Formula& formula);

  /// n x n matrix of formulas, entry [a * n + b] holding E(a, b).
  const std::vector<prop::PropFormula>& ground(const fol::RelExpr& expr);

 private:
  prop::PropFormula rec(const fol::Formula& f);
  std::size_t resolve(const fol::Term& t) const;
  std::vector<prop::PropFormula> compute(const fol::RelExpr& expr);

  const VarTable& table_;
  std::size_t n_;
  std::vector<std::pair<const std::string*, std::size_t>> env_;
  std::unordered_map<const fol::RelExprNode*, std::pair<fol::RelExpr, std::vector<prop::PropFormula>>> memo_;
  std::vector<prop::PropFormula> wr_;
};

prop::PropFormula translate(const VarTable& table, const fol::Formula& formula);

/// Replaces every variable of the named symbols by its value in the instance
/// and folds constants. Other variables are untouched. Throws DecodeError
/// when the instance lacks a needed assignment.
prop::PropFormula restrict(const prop::PropFormula& f, const VarTable& table,
                           const std::set<std::string>& symbols, const prop::Instance& instance);

/// Rounds of iterative squaring needed to close a relation over n elements.
std::size_t closure_rounds(std::size_t n);

}  // namespace isolde
