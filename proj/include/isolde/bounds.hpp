#pragma once

// Finite scopes, the tuple -> boolean variable table, and histories.

#include <array>
#include <compare>
#include <cstddef>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "isolde/fol.hpp"
#include "isolde/prop.hpp"
#include "json.hpp"

namespace isolde {

struct Scope {
  std::size_t txn = 1;
  std::size_t obj = 1;
  std::size_t val = 1;

  /// Throws std::invalid_argument if any component is zero.
  void validate() const;
  std::size_t size_of(fol::Sort sort) const;
  std::array<std::size_t, 3> domains() const { return {txn, obj, val}; }
  std::string to_string() const;

  friend bool operator==(const Scope&, const Scope&) = default;
};

/// Injective map from (relation symbol, tuple) to a propositional variable.
/// Ids are dense from 1; symbols are laid out in declaration order and tuples
/// in lexicographic order.
class VarTable {
 public:
  VarTable(Scope scope, fol::Signature signature);

  const Scope& scope() const { return scope_; }
  const fol::Signature& signature() const { return signature_; }
  /// Total number of variables.
  prop::Var size() const { return total_; }

  bool has_symbol(std::string_view symbol) const;
  /// Throws std::out_of_range for unknown symbols or out-of-scope tuples.
  prop::Var var(std::string_view symbol, const fol::Tuple& tuple) const;
  prop::PropFormula atom(std::string_view symbol, const fol::Tuple& tuple) const {
    return prop::PropFormula::variable(var(symbol, tuple));
  }
  /// All variables of a symbol, in tuple order.
  std::vector<prop::Var> vars_of(std::string_view symbol) const;
  /// Every tuple over the symbol's domains, in variable order.
  std::vector<fol::Tuple> tuples_of(std::string_view symbol) const;
  /// Inverse lookup.
  std::pair<std::string, fol::Tuple> tuple_of(prop::Var v) const;

  friend bool operator==(const VarTable& a, const VarTable& b) {
    return a.scope_ == b.scope_ && a.signature_.symbols() == b.signature_.symbols() &&
           a.total_ == b.total_;
  }

 private:
  struct Block {
    std::string name;
    std::vector<fol::Sort> sorts;
    std::vector<std::size_t> strides;
    prop::Var first = 1;
    std::size_t count = 0;
  };
  const Block& block(std::string_view symbol) const;

  Scope scope_;
  fol::Signature signature_;
  std::vector<Block> blocks_;
  prop::Var total_ = 0;
};

/// Allocates variables for every potential tuple of every symbol.
VarTable encode(const Scope& scope, const fol::Signature& signature);

using Triple = std::array<std::size_t, 3>;

struct History {
  std::set<Triple> writes;  // (txn, obj, val)
  std::set<Triple> reads;   // (txn, obj, val)
  std::set<fol::TuplePair> so;

  bool empty() const { return writes.empty() && reads.empty() && so.empty(); }
  /// Transactions with at least one read or write.
  std::set<std::size_t> active_transactions() const;
  friend bool operator==(const History&, const History&) = default;
  friend auto operator<=>(const History&, const History&) = default;
};

/// Names of violated well-formedness rules; empty iff the history is WF.
std::vector<std::string> well_formedness_violations(const History& history);
inline bool is_well_formed(const History& history) {
  return well_formedness_violations(history).empty();
}
bool fits_scope(const History& history, const Scope& scope);

class DecodeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Tuples whose variables are true. Throws DecodeError when the instance
/// does not assign a variable of the symbol or the symbol is unknown.
std::set<fol::Tuple> decode_relation(const VarTable& table, const prop::Instance& instance,
                                     std::string_view symbol);
/// History made of the base-symbol tuples that are true in the instance.
History decode_history(const VarTable& table, const prop::Instance& instance);

/// Instance over the table with exactly the history's base tuples set.
prop::Instance encode_history(const VarTable& table, const History& history);

/// Base-symbol structure for the history with additional aux symbols empty.
fol::FiniteStructure to_structure(const History& history, const Scope& scope,
                                  const fol::Signature& signature);

/// Drops transactions without reads and writes and renumbers the remaining
/// ones densely in increasing order. `mapping[old]` receives the new id or
/// nullopt for dropped transactions.
History strip_empty_transactions(const History& history, std::size_t txn_count,
                                 std::vector<std::optional<std::size_t>>* mapping = nullptr);

// ---------------------------------------------------------------------------
// History documents:
// {"transactions":[{"id":"t0","session":0,"seq":0,"writes":{"x0":"n0"},"reads":{}}, ...]}

class HistoryFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

nlohmann::json history_to_json(const History& history);

struct ParsedHistory {
  History history;
  /// Smallest scope containing every named transaction, object and value.
  Scope minimal_scope;
};

/// Accepts either a history document or an object with a "history" member
/// holding one. Names outside `scope` (when given) are rejected.
ParsedHistory history_from_json(const nlohmann::json& doc, const std::optional<Scope>& scope = std::nullopt);

}  // namespace isolde
