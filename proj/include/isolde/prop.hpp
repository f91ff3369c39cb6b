#pragma once

// Propositional formulas, Tseitin CNF conversion, DIMACS I/O and solving.

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace isolde::prop {

/// Positive propositional variable id.
using Var = std::uint32_t;

struct PropNode;

class PropFormula {
 public:
  enum class Kind : std::uint8_t { Var, True, False, Not, And, Or, Implies };

  Kind kind() const;
  Var var() const;
  const std::vector<PropFormula>& children() const;
  const PropFormula& child(std::size_t i) const { return children().at(i); }
  const PropNode* id() const { return node_.get(); }

  bool is_true() const { return kind() == Kind::True; }
  bool is_false() const { return kind() == Kind::False; }
  bool is_constant() const { return is_true() || is_false(); }

  /// Number of nodes counted as a tree (shared subterms counted per use).
  std::size_t tree_size() const;
  std::string to_string() const;

  friend bool operator==(const PropFormula& a, const PropFormula& b);

  // Raw constructors: build exactly the node requested.
  static PropFormula variable(Var v);
  static PropFormula top();
  static PropFormula bottom();
  static PropFormula negation(PropFormula f);
  static PropFormula conjunction(std::vector<PropFormula> children);
  static PropFormula disjunction(std::vector<PropFormula> children);
  static PropFormula implication(PropFormula lhs, PropFormula rhs);

 private:
  explicit PropFormula(std::shared_ptr<const PropNode> node) : node_(std::move(node)) {}
  std::shared_ptr<const PropNode> node_;
};

struct PropNode {
  PropFormula::Kind kind;
  Var var = 0;
  std::vector<PropFormula> children;
};

// Folding constructors: apply constant folding as they build.
PropFormula make_not(const PropFormula& f);
PropFormula make_and(std::vector<PropFormula> children);
PropFormula make_or(std::vector<PropFormula> children);
PropFormula make_and(const PropFormula& a, const PropFormula& b);
PropFormula make_or(const PropFormula& a, const PropFormula& b);
PropFormula make_implies(const PropFormula& a, const PropFormula& b);

/// Constant folding (T & p -> p, F => p -> T, !!p -> p, ...). Never grows the
/// formula and leaves no reducible constants behind.
PropFormula simplify(const PropFormula& f);

/// Largest variable id occurring in f (0 if none).
Var max_var(const PropFormula& f);

/// Assignment to variables 1..size().
class Instance {
 public:
  Instance() = default;
  explicit Instance(std::size_t num_vars) : values_(num_vars + 1, 0) {}

  std::size_t size() const { return values_.empty() ? 0 : values_.size() - 1; }
  bool covers(Var v) const { return v >= 1 && v < values_.size(); }
  /// Throws std::out_of_range if v is not covered.
  bool value(Var v) const;
  void set(Var v, bool value);

  friend bool operator==(const Instance&, const Instance&) = default;

 private:
  std::vector<std::uint8_t> values_;
};

/// Truth value of f under the instance. Throws std::out_of_range when a
/// variable of f is not covered.
bool evaluate(const PropFormula& f, const Instance& instance);

/// Either UNSAT (no instance) or a satisfying Instance.
struct Solution {
  std::optional<Instance> instance;
  bool sat() const { return instance.has_value(); }
};

// ---------------------------------------------------------------------------
// CNF

/// DIMACS-style literal: +v or -v.
using Lit = std::int32_t;
using Clause = std::vector<Lit>;

struct Cnf {
  Var num_vars = 0;
  std::vector<Clause> clauses;
};

/// Tseitin transformation. Original variable ids are preserved; fresh
/// definition variables start above max(max_var(f), reserved_vars). Shared
/// subformulas (same node) receive one definition.
Cnf to_cnf(const PropFormula& f, Var reserved_vars = 0);

/// Appends the Tseitin clauses of f to an existing CNF, allocating fresh
/// variables above cnf.num_vars.
void append_cnf(Cnf& cnf, const PropFormula& f);

std::string to_dimacs(const Cnf& cnf);
/// Throws std::runtime_error on I/O failure.
void export_dimacs(const Cnf& cnf, const std::filesystem::path& path);
/// Parses DIMACS CNF text. Throws std::runtime_error on malformed input.
Cnf parse_dimacs(const std::string& text);

// ---------------------------------------------------------------------------
// Solving

/// Raised for backend failures; never used to signal UNSAT.
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using Clock = std::chrono::steady_clock;

struct SolverConfig {
  std::uint64_t seed = 0;
  std::optional<Clock::time_point> deadline;
  /// External solver command; empty selects the embedded CDCL solver.
  std::string external_command;

  /// Default config with external_command taken from ISOLDE_SAT_CMD.
  static SolverConfig from_environment();
};

enum class SolveStatus : std::uint8_t { Sat, Unsat, Unknown };

struct CnfResult {
  SolveStatus status = SolveStatus::Unknown;
  /// Covers 1..cnf.num_vars when status is Sat.
  Instance model;
};

/// Unknown is returned only when the deadline passes.
CnfResult solve_cnf(const Cnf& cnf, const SolverConfig& config = {});

class CdclSolver;

/// A growing clause set solved repeatedly. With the embedded backend one
/// solver instance is kept, so learnt clauses survive between calls; an
/// external backend re-reads the whole CNF each time.
class IncrementalSolver {
 public:
  IncrementalSolver(Cnf cnf, SolverConfig config);
  ~IncrementalSolver();
  IncrementalSolver(const IncrementalSolver&) = delete;
  IncrementalSolver& operator=(const IncrementalSolver&) = delete;

  const Cnf& cnf() const { return cnf_; }
  /// Conjoins f (Tseitin-encoded with fresh definition variables).
  void add(const PropFormula& f);
  CnfResult solve();

 private:
  Cnf cnf_;
  SolverConfig config_;
  std::unique_ptr<CdclSolver> embedded_;
  std::size_t fed_ = 0;
  bool root_unsat_ = false;
};

/// Solves f via to_cnf. The instance covers variables 1..max_var(f).
/// Throws SolverError on backend failure and on deadline expiry.
Solution solve(const PropFormula& f, const SolverConfig& config = {});

}  // namespace isolde::prop
