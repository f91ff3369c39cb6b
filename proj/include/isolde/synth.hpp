#pragma once

// CEGIS synthesis of histories allowed by one level and disallowed by
// another, plus membership, refinement and equivalence checks built on it.

#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "isolde/bounds.hpp"
#include "isolde/levels.hpp"
#include "isolde/prop.hpp"

namespace isolde {

/// Which total orders fixed_order pins to t_i < t_j iff i < j.
enum class PinTarget : std::uint8_t {
  Guess,    // the disallowed side's guessed violation
  Witness,  // the allowed side's witness (sound by renaming equivariance)
  Both,
};

struct SynthOptions {
  bool learning = true;
  bool smart_search = true;
  bool fixed_order = true;
  PinTarget pin = PinTarget::Both;
  std::optional<std::chrono::milliseconds> timeout;
  std::uint64_t seed = 0;
  /// When set, every solver query is written there as DIMACS.
  std::optional<std::filesystem::path> dimacs_dir;
  /// Empty: embedded solver. Callers usually take this from ISOLDE_SAT_CMD.
  std::string external_solver;
};

struct SynthProblem {
  LevelSpec allowed;
  LevelSpec disallowed;
  Scope scope;
  SynthOptions options;
};

struct SynthStats {
  std::size_t candidates = 0;
  std::size_t initial_clauses = 0;
  std::size_t solver_calls = 0;
  std::chrono::microseconds wall_time{0};
  friend bool operator==(const SynthStats&, const SynthStats&) = default;
};

/// Aux relation name -> pairs of transactions.
using Witness = std::map<std::string, std::set<fol::TuplePair>>;

struct SynthOutcome {
  enum class Result : std::uint8_t { Sat, Unsat, Timeout };
  Result result = Result::Unsat;
  /// Set when SAT: stripped of empty transactions and densely renumbered.
  std::optional<History> history;
  /// Scope of the reported history (txn = its transaction count).
  Scope history_scope;
  /// Aux assignment under which `history` satisfies the allowed level.
  Witness witness;
  SynthStats stats;

  // Internals exposed for property tests: the unstripped candidate, the
  // variable table it lives in, and every learned constraint.
  std::optional<History> raw_history;
  std::shared_ptr<const VarTable> table;
  std::vector<prop::PropFormula> learned;

  bool sat() const { return result == Result::Sat; }
};

std::string to_string(SynthOutcome::Result r);

class SynthError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Throws SynthError for ill-formed levels or scopes and prop::SolverError
/// for backend failures. Never reports UNSAT for a backend failure.
SynthOutcome synth(const SynthProblem& problem);

struct Membership {
  bool allowed = false;
  Witness witness;
};

/// Grounds a level's membership formula once for a scope; each check then
/// only substitutes the history and solves for the aux relations.
class MembershipChecker {
 public:
  MembershipChecker(const LevelSpec& level, const Scope& scope, const SynthOptions& options = {});
  /// Throws SynthError when the history does not fit the scope or violates
  /// well-formedness.
  Membership check(const History& history) const;

 private:
  LevelSpec level_;
  Scope scope_;
  SynthOptions options_;
  std::shared_ptr<const VarTable> table_;
  prop::PropFormula formula_;
};

/// Throws SynthError when the history does not fit the scope or violates
/// well-formedness.
Membership check_membership(const LevelSpec& level, const History& history, const Scope& scope,
                            const SynthOptions& options = {});

struct Refinement {
  enum class Verdict : std::uint8_t { Holds, Counterexample, Indeterminate };
  Verdict verdict = Verdict::Indeterminate;
  /// Present for Counterexample: allowed by a, disallowed by b.
  std::optional<History> counterexample;
  Witness witness;
  SynthStats stats;
};

/// Every a-allowed history within scope is b-allowed?
Refinement refines(const LevelSpec& a, const LevelSpec& b, const Scope& scope, const SynthOptions& options = {});

struct Equivalence {
  Refinement a_in_b;
  Refinement b_in_a;
  bool equivalent() const {
    return a_in_b.verdict == Refinement::Verdict::Holds && b_in_a.verdict == Refinement::Verdict::Holds;
  }
  bool indeterminate() const {
    return a_in_b.verdict == Refinement::Verdict::Indeterminate ||
           b_in_a.verdict == Refinement::Verdict::Indeterminate;
  }
};

Equivalence equivalent(const LevelSpec& a, const LevelSpec& b, const Scope& scope, const SynthOptions& options = {});

}  // namespace isolde
