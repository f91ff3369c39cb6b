#pragma once

// Embedded conflict-driven clause-learning SAT solver: two watched literals,
// VSIDS with phase saving, first-UIP learning, Luby restarts and activity
// based learnt-clause reduction.

#include <chrono>
#include <cstdint>
#include <optional>
#include <vector>

namespace isolde::prop {

class CdclSolver {
 public:
  enum class Result : std::uint8_t { Sat, Unsat, Unknown };

  explicit CdclSolver(std::uint32_t num_vars, std::uint64_t seed = 0);

  /// Adds fresh unassigned variables up to num_vars (never shrinks). Must be
  /// called between solves.
  void grow(std::uint32_t num_vars);
  std::uint32_t num_vars() const { return num_vars_; }

  /// DIMACS literals over 1..num_vars. Returns false once the clause set is
  /// known to be unsatisfiable at the root.
  bool add_clause(const std::vector<std::int32_t>& clause);

  Result solve(std::optional<std::chrono::steady_clock::time_point> deadline = std::nullopt);

  /// Model value of variable v (1-based) after a Sat result.
  bool model_value(std::uint32_t v) const { return model_[v - 1] != 0; }

  std::uint64_t conflicts() const { return conflicts_; }
  std::uint64_t decisions() const { return decisions_; }

 private:
  using L = std::uint32_t;  // 2 * var + sign
  static constexpr std::int8_t kTrue = 0, kFalse = 1, kUndef = 2;
  static constexpr std::uint32_t kNoReason = UINT32_MAX;

  struct ClauseData {
    std::vector<L> lits;
    double activity = 0;
    bool learnt = false;
    bool deleted = false;
  };
  struct Watcher {
    std::uint32_t clause;
    L blocker;
  };

  static L make_lit(std::int32_t dimacs) {
    return dimacs > 0 ? 2u * static_cast<L>(dimacs - 1) : 2u * static_cast<L>(-dimacs - 1) + 1u;
  }
  static std::uint32_t var_of(L l) { return l >> 1; }
  static L neg(L l) { return l ^ 1u; }

  std::int8_t lit_value(L l) const {
    std::int8_t v = assigns_[var_of(l)];
    return v == kUndef ? kUndef : static_cast<std::int8_t>(v ^ static_cast<std::int8_t>(l & 1u));
  }
  int decision_level() const { return static_cast<int>(trail_lim_.size()); }

  void enqueue(L l, std::uint32_t reason);
  std::uint32_t propagate();
  void analyze(std::uint32_t confl, std::vector<L>& learnt, int& backtrack_level);
  bool redundant(L l, std::uint32_t abstract_levels);
  void cancel_until(int level);
  std::uint32_t attach(std::vector<L> lits, bool learnt);
  void reduce_db();
  L pick_branch();
  void bump_var(std::uint32_t v);
  void bump_clause(ClauseData& c);

  // Binary max-heap of unassigned variables keyed by activity.
  void heap_insert(std::uint32_t v);
  std::uint32_t heap_pop();
  void heap_up(std::size_t i);
  void heap_down(std::size_t i);
  bool heap_less(std::uint32_t a, std::uint32_t b) const {
    return activity_[a] > activity_[b] || (activity_[a] == activity_[b] && a < b);
  }

  std::uint32_t num_vars_;
  bool ok_ = true;
  std::vector<ClauseData> clauses_;
  std::vector<std::vector<Watcher>> watches_;
  std::vector<std::int8_t> assigns_;
  std::vector<std::int8_t> polarity_;
  std::vector<int> level_;
  std::vector<std::uint32_t> reason_;
  std::vector<L> trail_;
  std::vector<std::size_t> trail_lim_;
  std::size_t qhead_ = 0;

  std::vector<double> activity_;
  double var_inc_ = 1.0;
  double clause_inc_ = 1.0;
  std::vector<std::uint32_t> heap_;
  std::vector<std::int64_t> heap_index_;

  std::vector<std::uint8_t> seen_;
  std::vector<L> analyze_stack_;
  std::vector<L> analyze_toclear_;

  std::size_t num_learnts_ = 0;
  double max_learnts_ = 0;
  std::uint64_t conflicts_ = 0;
  std::uint64_t decisions_ = 0;
  std::vector<std::uint8_t> model_;
};

}  // namespace isolde::prop
