#pragma once

// Sorted first-order constraint language: abstract syntax, well-formedness,
// substitution and reference (Tarskian) semantics over finite structures.

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace isolde::fol {

enum class Sort : std::uint8_t { Txn = 0, Obj = 1, Val = 2 };

inline constexpr std::array<Sort, 3> kAllSorts = {Sort::Txn, Sort::Obj, Sort::Val};

std::string_view to_string(Sort sort);
std::optional<Sort> parse_sort(std::string_view text);
/// Prefix used when printing constants of a sort: t, x or n.
char constant_prefix(Sort sort);

/// A variable (name + sort) or a constant (domain index + sort).
class Term {
 public:
  static Term variable(std::string name, Sort sort);
  static Term constant(std::size_t index, Sort sort);

  bool is_variable() const { return is_var_; }
  bool is_constant() const { return !is_var_; }
  Sort sort() const { return sort_; }
  const std::string& name() const { return name_; }
  std::size_t index() const { return index_; }

  std::string to_string() const;

  friend bool operator==(const Term&, const Term&) = default;

 private:
  Term() = default;
  bool is_var_ = true;
  std::string name_;
  std::size_t index_ = 0;
  Sort sort_ = Sort::Txn;
};

struct RelationSymbol {
  std::string name;
  std::vector<Sort> signature;

  std::size_t arity() const { return signature.size(); }
  bool is_binary_txn() const {
    return signature.size() == 2 && signature[0] == Sort::Txn &&
           signature[1] == Sort::Txn;
  }
  friend bool operator==(const RelationSymbol&, const RelationSymbol&) = default;
};

inline constexpr std::string_view kWrites = "writes";
inline constexpr std::string_view kReads = "reads";
inline constexpr std::string_view kSo = "so";
/// Derived read-from relation; never declared in a signature.
inline constexpr std::string_view kWr = "wr";

/// Ordered set of relation symbols with unique names.
class Signature {
 public:
  Signature() = default;
  explicit Signature(std::vector<RelationSymbol> symbols);

  /// writes(Txn,Obj,Val), reads(Txn,Obj,Val), so(Txn,Txn).
  static Signature base();

  void add(RelationSymbol symbol);
  const RelationSymbol* find(std::string_view name) const;
  bool contains(std::string_view name) const { return find(name) != nullptr; }
  const std::vector<RelationSymbol>& symbols() const { return symbols_; }
  Signature extended(const std::vector<RelationSymbol>& more) const;

 private:
  std::vector<RelationSymbol> symbols_;
};

// ---------------------------------------------------------------------------
// Relation expressions over Txn x Txn.

struct RelExprNode;

class RelExpr {
 public:
  enum class Kind : std::uint8_t { Symbol, ReadFrom, Union, Compose, Closure };

  static RelExpr symbol(std::string name);
  static RelExpr read_from();
  static RelExpr union_of(RelExpr lhs, RelExpr rhs);
  static RelExpr compose(RelExpr lhs, RelExpr rhs);
  static RelExpr closure(RelExpr inner);

  Kind kind() const;
  const std::string& name() const;
  const RelExpr& lhs() const;
  const RelExpr& rhs() const;
  const RelExpr& inner() const { return lhs(); }
  const RelExprNode* id() const { return node_.get(); }

  std::string to_string() const;
  friend bool operator==(const RelExpr& a, const RelExpr& b);

 private:
  explicit RelExpr(std::shared_ptr<const RelExprNode> node) : node_(std::move(node)) {}
  std::shared_ptr<const RelExprNode> node_;
};

struct RelExprNode {
  RelExpr::Kind kind;
  std::string name;
  std::vector<RelExpr> operands;
};

// ---------------------------------------------------------------------------
// Formulas.

struct FormulaNode;

class Formula {
 public:
  enum class Kind : std::uint8_t {
    Atom,      // R(t1..tn)
    RelAtom,   // E(t1,t2)
    Equal,     // t1 = t2
    Not,
    And,
    Or,
    Implies,
    Forall,
    Exists,
  };

  static Formula atom(std::string relation, std::vector<Term> args);
  static Formula rel_atom(RelExpr expr, Term lhs, Term rhs);
  static Formula equal(Term lhs, Term rhs);
  static Formula negate(Formula f);
  static Formula conj(Formula lhs, Formula rhs);
  static Formula disj(Formula lhs, Formula rhs);
  static Formula implies(Formula lhs, Formula rhs);
  static Formula forall(std::string var, Sort sort, Formula body);
  static Formula exists(std::string var, Sort sort, Formula body);

  Kind kind() const;
  /// Relation name of an Atom.
  const std::string& relation() const;
  /// Arguments of Atom / RelAtom / Equal.
  const std::vector<Term>& args() const;
  const RelExpr& expr() const;
  const Formula& child(std::size_t i) const;
  const Formula& body() const { return child(0); }
  /// Bound variable of a quantifier.
  const std::string& var() const;
  Sort var_sort() const;
  const FormulaNode* id() const { return node_.get(); }

  bool is_quantifier() const { return kind() == Kind::Forall || kind() == Kind::Exists; }
  bool is_binary() const {
    return kind() == Kind::And || kind() == Kind::Or || kind() == Kind::Implies;
  }

  std::string to_string() const;

  /// Structural equality (bound variable names must match).
  friend bool operator==(const Formula& a, const Formula& b);

 private:
  explicit Formula(std::shared_ptr<const FormulaNode> node) : node_(std::move(node)) {}
  std::shared_ptr<const FormulaNode> node_;
};

struct FormulaNode {
  Formula::Kind kind;
  std::string name;  // relation name or bound variable
  Sort sort = Sort::Txn;
  std::vector<Term> args;
  std::optional<RelExpr> expr;
  std::vector<Formula> children;
};

/// Left-folded conjunction/disjunction; empty lists give t0 = t0 / its negation.
Formula all_of(const std::vector<Formula>& parts);
Formula any_of(const std::vector<Formula>& parts);
Formula not_equal(Term lhs, Term rhs);

/// Structural equality modulo consistent renaming of bound variables.
bool alpha_equal(const Formula& a, const Formula& b);

// ---------------------------------------------------------------------------
// Well-formedness.

struct Diagnostic {
  std::string subterm;
  std::string reason;
  std::string to_string() const { return reason + " in `" + subterm + "`"; }
};

/// Empty result means the formula is well-formed: sort-correct, arity-correct,
/// closed, free of shadowing and using only symbols of `signature` (plus `wr`).
std::vector<Diagnostic> check_well_formed(const Formula& formula, const Signature& signature);

/// Free variables, in order of first occurrence.
std::vector<std::pair<std::string, Sort>> free_variables(const Formula& formula);
bool contains_constants(const Formula& formula);
/// Relation names used by atoms and relation expressions (excluding `wr`).
std::set<std::string> used_relations(const Formula& formula);

// ---------------------------------------------------------------------------
// Substitution and renaming.

class SortError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Replaces every free occurrence of `var` (of sort `sort`) by `constant`.
/// Throws SortError when the constant's sort differs from `sort` or when the
/// replacement is not a constant.
Formula substitute(const Formula& formula, const std::string& var, Sort sort, const Term& constant);

/// Capture-avoiding replacement of free variables by arbitrary terms.
Formula substitute_terms(const Formula& formula, const std::map<std::string, Term>& replacement);

/// Renames relation symbols in atoms and relation expressions.
Formula rename_relations(const Formula& formula, const std::map<std::string, std::string>& renaming);
RelExpr rename_relations(const RelExpr& expr, const std::map<std::string, std::string>& renaming);

// ---------------------------------------------------------------------------
// Finite structures and reference semantics.

using Tuple = std::vector<std::size_t>;
using TuplePair = std::pair<std::size_t, std::size_t>;

class UnknownSymbolError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// Dense square boolean matrix over Txn.
class TxnRelation {
 public:
  TxnRelation() = default;
  explicit TxnRelation(std::size_t n) : n_(n), bits_(n * n, 0) {}

  std::size_t size() const { return n_; }
  bool test(std::size_t a, std::size_t b) const { return bits_[a * n_ + b] != 0; }
  void set(std::size_t a, std::size_t b, bool value = true) { bits_[a * n_ + b] = value ? 1 : 0; }
  std::set<TuplePair> pairs() const;

  friend bool operator==(const TxnRelation&, const TxnRelation&) = default;

 private:
  std::size_t n_ = 0;
  std::vector<std::uint8_t> bits_;
};

class FiniteStructure {
 public:
  /// Domain sizes per sort (Txn, Obj, Val); every size must be >= 1.
  FiniteStructure(std::array<std::size_t, 3> domains, Signature signature);

  std::size_t domain_size(Sort sort) const { return domains_[static_cast<int>(sort)]; }
  const std::array<std::size_t, 3>& domains() const { return domains_; }
  const Signature& signature() const { return signature_; }

  void insert(std::string_view relation, const Tuple& tuple);
  void erase(std::string_view relation, const Tuple& tuple);
  bool contains(std::string_view relation, const Tuple& tuple) const;
  std::set<Tuple> tuples(std::string_view relation) const;
  /// Replaces the whole interpretation of a binary Txn relation.
  void assign(std::string_view relation, const TxnRelation& value);
  TxnRelation binary(std::string_view relation) const;

 private:
  struct Slot {
    const RelationSymbol* symbol;
    std::vector<std::size_t> strides;
    std::vector<std::uint8_t> bits;
  };
  Slot& slot(std::string_view relation);
  const Slot& slot(std::string_view relation) const;
  std::size_t offset(const Slot& s, const Tuple& tuple) const;

  friend class Evaluator;

  std::array<std::size_t, 3> domains_;
  Signature signature_;
  std::vector<Slot> slots_;
};

/// Truth value of a closed formula. Throws UnknownSymbolError for symbols
/// the structure does not interpret and std::invalid_argument for free
/// variables.
bool evaluate(const Formula& formula, const FiniteStructure& structure);

/// Interpretation of a relation expression as a Txn x Txn relation.
TxnRelation rel_evaluate(const RelExpr& expr, const FiniteStructure& structure);

}  // namespace isolde::fol
