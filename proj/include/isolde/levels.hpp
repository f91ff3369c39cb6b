#pragma once

// Axiomatic frameworks, the built-in isolation level catalog, history
// well-formedness as a formula, and the level specification language.

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "isolde/fol.hpp"

namespace isolde {

struct AuxRelation {
  enum class Shape : std::uint8_t {
    StrictTotalOrder,  // enumerated as permutations
    SubsetOf,          // enumerated as subsets of `within`
  };
  fol::RelationSymbol symbol;
  Shape shape = Shape::StrictTotalOrder;
  std::string within;
};

/// Auxiliary relations plus the structural axioms constraining them.
struct Framework {
  std::string name;
  std::vector<AuxRelation> aux;
  fol::Formula axioms = fol::all_of({});

  std::vector<fol::RelationSymbol> aux_symbols() const;
  std::vector<std::string> aux_names() const;
  /// Aux symbols denoting strict total orders.
  std::vector<std::string> total_orders() const;
  /// Base signature extended with this framework's aux symbols.
  fol::Signature signature() const;
};

/// Framework with a commit order co: strict total order containing so and wr.
const Framework& commit_order_framework();
/// Framework with visibility vis and arbitration ar: ar a strict total order,
/// vis irreflexive and contained in ar.
const Framework& visibility_framework();
const Framework* find_framework(std::string_view name);

struct LevelSpec {
  std::string name;
  Framework framework;
  /// Closed, constant-free formula over base + framework aux symbols.
  fol::Formula formula = fol::all_of({});
};

/// Symbolic form of history well-formedness (functional reads/writes, unique
/// writers, no read of a written object, justified reads, so a union of
/// chains).
fol::Formula well_formedness();

/// Eight levels: SER_A, PC_A, CC_A, RA_A over the commit-order framework and
/// SER_B, SI_B, PC_B, CC_B over the visibility framework.
const std::vector<LevelSpec>& builtin_catalog();
const LevelSpec* find_builtin(std::string_view name);

/// well_formedness() && framework axioms && level formula.
fol::Formula membership_formula(const LevelSpec& level);

// Macros shared by the catalog and the language.
namespace macros {
/// exists v:Val. writes(writer, obj, v) && reads(reader, obj, v)
fol::Formula read_from_on(const fol::Term& obj, const fol::Term& writer, const fol::Term& reader);
/// exists v:Val. writes(txn, obj, v)
fol::Formula writes_object(const fol::Term& txn, const fol::Term& obj);
}  // namespace macros

// ---------------------------------------------------------------------------
// Level specification language
//
//   level <Name> { framework <commit_order|visibility>;
//                  [let <id>(<params>) = <formula>;]  // formula macro
//                  [let <id> = <rexpr>;]               // relation alias
//                  axiom <formula>; [axiom <formula>;]* }

struct SourceDiagnostic {
  std::size_t line = 0;
  std::size_t column = 0;
  std::string message;
  std::string to_string() const {
    return std::to_string(line) + ":" + std::to_string(column) + ": " + message;
  }
};

struct ParseResult {
  std::vector<LevelSpec> levels;
  std::vector<SourceDiagnostic> diagnostics;
  bool ok() const { return diagnostics.empty(); }
};

/// On any error returns diagnostics and no levels.
ParseResult parse_level_file(std::string_view text);

class ParseError : public std::runtime_error {
 public:
  ParseError(SourceDiagnostic diag) : std::runtime_error(diag.to_string()), diagnostic(std::move(diag)) {}
  SourceDiagnostic diagnostic;
};

/// Parses one formula (constants such as t0, x1, n2 are allowed). Throws
/// ParseError. No well-formedness check is applied.
fol::Formula parse_formula(std::string_view text);

}  // namespace isolde
