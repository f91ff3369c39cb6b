#include "isolde/cdcl.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace isolde::prop {

namespace {

// Luby sequence element i (0-based) with base 2.
double luby(std::uint64_t i) {
  std::uint64_t size = 1;
  int seq = 0;
  while (size < i + 1) {
    ++seq;
    size = 2 * size + 1;
  }
  while (size - 1 != i) {
    size = (size - 1) >> 1;
    --seq;
    i = i % size;
  }
  return std::pow(2.0, seq);
}

constexpr double kVarDecay = 0.95;
constexpr double kClauseDecay = 0.999;
constexpr std::uint64_t kRestartBase = 100;

}  // namespace

CdclSolver::CdclSolver(std::uint32_t num_vars, std::uint64_t seed)
    : num_vars_(num_vars),
      watches_(2 * static_cast<std::size_t>(num_vars)),
      assigns_(num_vars, kUndef),
      polarity_(num_vars, 1),
      level_(num_vars, 0),
      reason_(num_vars, kNoReason),
      activity_(num_vars, 0.0),
      heap_index_(num_vars, -1),
      seen_(num_vars, 0) {
  if (seed != 0) {
    // Small random initial activities break ties differently per seed.
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(0.0, 1e-5);
    for (auto& a : activity_) a = dist(rng);
  }
  for (std::uint32_t v = 0; v < num_vars_; ++v) heap_insert(v);
}

void CdclSolver::grow(std::uint32_t num_vars) {
  if (num_vars <= num_vars_) return;
  const std::uint32_t old = num_vars_;
  num_vars_ = num_vars;
  watches_.resize(2 * static_cast<std::size_t>(num_vars));
  assigns_.resize(num_vars, kUndef);
  polarity_.resize(num_vars, 1);
  level_.resize(num_vars, 0);
  reason_.resize(num_vars, kNoReason);
  activity_.resize(num_vars, 0.0);
  heap_index_.resize(num_vars, -1);
  seen_.resize(num_vars, 0);
  for (std::uint32_t v = old; v < num_vars; ++v) heap_insert(v);
}

bool CdclSolver::add_clause(const std::vector<std::int32_t>& clause) {
  if (!ok_) return false;
  std::vector<L> lits;
  lits.reserve(clause.size());
  for (std::int32_t d : clause) {
    if (d == 0 || static_cast<std::uint32_t>(std::abs(d)) > num_vars_) {
      throw std::invalid_argument("clause literal out of range");
    }
    lits.push_back(make_lit(d));
  }
  std::sort(lits.begin(), lits.end());
  lits.erase(std::unique(lits.begin(), lits.end()), lits.end());
  std::vector<L> kept;
  for (std::size_t i = 0; i < lits.size(); ++i) {
    if (i + 1 < lits.size() && lits[i + 1] == neg(lits[i])) return true;  // tautology
    std::int8_t val = lit_value(lits[i]);
    if (val == kTrue) return true;
    if (val == kFalse) continue;
    kept.push_back(lits[i]);
  }
  if (kept.empty()) {
    ok_ = false;
    return false;
  }
  if (kept.size() == 1) {
    enqueue(kept[0], kNoReason);
    if (propagate() != kNoReason) ok_ = false;
    return ok_;
  }
  attach(std::move(kept), false);
  return true;
}

std::uint32_t CdclSolver::attach(std::vector<L> lits, bool learnt) {
  auto idx = static_cast<std::uint32_t>(clauses_.size());
  watches_[neg(lits[0])].push_back({idx, lits[1]});
  watches_[neg(lits[1])].push_back({idx, lits[0]});
  clauses_.push_back(ClauseData{std::move(lits), 0.0, learnt, false});
  if (learnt) ++num_learnts_;
  return idx;
}

void CdclSolver::enqueue(L l, std::uint32_t reason) {
  std::uint32_t v = var_of(l);
  assigns_[v] = static_cast<std::int8_t>(l & 1u);
  level_[v] = decision_level();
  reason_[v] = reason;
  trail_.push_back(l);
}

std::uint32_t CdclSolver::propagate() {
  std::uint32_t conflict = kNoReason;
  while (qhead_ < trail_.size()) {
    L p = trail_[qhead_++];  // p became true; visit clauses watching !p
    std::vector<Watcher>& ws = watches_[p];
    std::size_t i = 0, j = 0;
    const std::size_t end = ws.size();
    while (i < end) {
      Watcher w = ws[i];
      ClauseData& c = clauses_[w.clause];
      if (c.deleted) {
        ++i;
        continue;
      }
      if (lit_value(w.blocker) == kTrue) {
        ws[j++] = ws[i++];
        continue;
      }
      const L false_lit = neg(p);
      if (c.lits[0] == false_lit) std::swap(c.lits[0], c.lits[1]);
      ++i;
      const L first = c.lits[0];
      if (first != w.blocker && lit_value(first) == kTrue) {
        ws[j++] = {w.clause, first};
        continue;
      }
      bool moved = false;
      for (std::size_t k = 2; k < c.lits.size(); ++k) {
        if (lit_value(c.lits[k]) != kFalse) {
          std::swap(c.lits[1], c.lits[k]);
          watches_[neg(c.lits[1])].push_back({w.clause, first});
          moved = true;
          break;
        }
      }
      if (moved) continue;
      ws[j++] = {w.clause, first};
      if (lit_value(first) == kFalse) {
        conflict = w.clause;
        qhead_ = trail_.size();
        while (i < end) ws[j++] = ws[i++];
      } else {
        enqueue(first, w.clause);
      }
    }
    ws.resize(j);
    if (conflict != kNoReason) break;
  }
  return conflict;
}

void CdclSolver::bump_var(std::uint32_t v) {
  activity_[v] += var_inc_;
  if (activity_[v] > 1e100) {
    for (auto& a : activity_) a *= 1e-100;
    var_inc_ *= 1e-100;
  }
  if (heap_index_[v] >= 0) heap_up(static_cast<std::size_t>(heap_index_[v]));
}

void CdclSolver::bump_clause(ClauseData& c) {
  c.activity += clause_inc_;
  if (c.activity > 1e20) {
    for (auto& cl : clauses_) {
      if (cl.learnt) cl.activity *= 1e-20;
    }
    clause_inc_ *= 1e-20;
  }
}

void CdclSolver::analyze(std::uint32_t confl, std::vector<L>& learnt, int& backtrack_level) {
  learnt.clear();
  learnt.push_back(0);  // placeholder for the asserting literal
  int path = 0;
  L p = 0;
  bool have_p = false;
  std::size_t index = trail_.size();

  do {
    ClauseData& c = clauses_[confl];
    if (c.learnt) bump_clause(c);
    for (std::size_t k = have_p ? 1 : 0; k < c.lits.size(); ++k) {
      L q = c.lits[k];
      std::uint32_t v = var_of(q);
      if (!seen_[v] && level_[v] > 0) {
        bump_var(v);
        seen_[v] = 1;
        if (level_[v] >= decision_level()) {
          ++path;
        } else {
          learnt.push_back(q);
        }
      }
    }
    while (!seen_[var_of(trail_[--index])]) {
    }
    p = trail_[index];
    have_p = true;
    confl = reason_[var_of(p)];
    seen_[var_of(p)] = 0;
    --path;
    if (path > 0) {
      // The reason clause has p at position 0 by construction.
      ClauseData& r = clauses_[confl];
      if (r.lits[0] != p) {
        auto it = std::find(r.lits.begin(), r.lits.end(), p);
        std::swap(*it, r.lits[0]);
      }
    }
  } while (path > 0);
  learnt[0] = neg(p);

  // Recursive minimization.
  analyze_toclear_.assign(learnt.begin(), learnt.end());
  std::uint32_t abstract_levels = 0;
  for (std::size_t k = 1; k < learnt.size(); ++k) {
    abstract_levels |= 1u << (level_[var_of(learnt[k])] & 31);
  }
  std::size_t keep = 1;
  for (std::size_t k = 1; k < learnt.size(); ++k) {
    std::uint32_t v = var_of(learnt[k]);
    if (reason_[v] == kNoReason || !redundant(learnt[k], abstract_levels)) learnt[keep++] = learnt[k];
  }
  learnt.resize(keep);
  for (L l : analyze_toclear_) seen_[var_of(l)] = 0;

  if (learnt.size() == 1) {
    backtrack_level = 0;
  } else {
    std::size_t max_i = 1;
    for (std::size_t k = 2; k < learnt.size(); ++k) {
      if (level_[var_of(learnt[k])] > level_[var_of(learnt[max_i])]) max_i = k;
    }
    std::swap(learnt[1], learnt[max_i]);
    backtrack_level = level_[var_of(learnt[1])];
  }
}

bool CdclSolver::redundant(L l, std::uint32_t abstract_levels) {
  analyze_stack_.clear();
  analyze_stack_.push_back(l);
  const std::size_t top = analyze_toclear_.size();
  while (!analyze_stack_.empty()) {
    L cur = analyze_stack_.back();
    analyze_stack_.pop_back();
    const ClauseData& c = clauses_[reason_[var_of(cur)]];
    for (std::size_t k = 1; k < c.lits.size(); ++k) {
      L q = c.lits[k];
      std::uint32_t v = var_of(q);
      if (seen_[v] || level_[v] == 0) continue;
      if (reason_[v] != kNoReason && (abstract_levels & (1u << (level_[v] & 31))) != 0) {
        seen_[v] = 1;
        analyze_stack_.push_back(q);
        analyze_toclear_.push_back(q);
      } else {
        for (std::size_t m = top; m < analyze_toclear_.size(); ++m) {
          seen_[var_of(analyze_toclear_[m])] = 0;
        }
        analyze_toclear_.resize(top);
        return false;
      }
    }
  }
  return true;
}

void CdclSolver::cancel_until(int level) {
  if (decision_level() <= level) return;
  for (std::size_t c = trail_.size(); c-- > trail_lim_[static_cast<std::size_t>(level)];) {
    std::uint32_t v = var_of(trail_[c]);
    assigns_[v] = kUndef;
    polarity_[v] = static_cast<std::int8_t>(trail_[c] & 1u);
    reason_[v] = kNoReason;
    if (heap_index_[v] < 0) heap_insert(v);
  }
  trail_.resize(trail_lim_[static_cast<std::size_t>(level)]);
  qhead_ = trail_.size();
  trail_lim_.resize(static_cast<std::size_t>(level));
}

void CdclSolver::reduce_db() {
  std::vector<std::uint32_t> learnts;
  for (std::uint32_t i = 0; i < clauses_.size(); ++i) {
    const ClauseData& c = clauses_[i];
    if (c.learnt && !c.deleted && c.lits.size() > 2) learnts.push_back(i);
  }
  std::sort(learnts.begin(), learnts.end(), [&](std::uint32_t a, std::uint32_t b) {
    if (clauses_[a].activity != clauses_[b].activity) return clauses_[a].activity < clauses_[b].activity;
    return a < b;
  });
  auto locked = [&](std::uint32_t idx) {
    L first = clauses_[idx].lits[0];
    return lit_value(first) == kTrue && reason_[var_of(first)] == idx;
  };
  std::size_t target = learnts.size() / 2;
  for (std::size_t k = 0; k < target; ++k) {
    std::uint32_t idx = learnts[k];
    if (locked(idx)) continue;
    clauses_[idx].deleted = true;
    clauses_[idx].lits.clear();
    clauses_[idx].lits.shrink_to_fit();
    --num_learnts_;
  }
}

CdclSolver::L CdclSolver::pick_branch() {
  while (!heap_.empty()) {
    std::uint32_t v = heap_pop();
    if (assigns_[v] == kUndef) return 2u * v + static_cast<L>(polarity_[v]);
  }
  return UINT32_MAX;
}

void CdclSolver::heap_insert(std::uint32_t v) {
  heap_index_[v] = static_cast<std::int64_t>(heap_.size());
  heap_.push_back(v);
  heap_up(heap_.size() - 1);
}

std::uint32_t CdclSolver::heap_pop() {
  std::uint32_t top = heap_.front();
  heap_index_[top] = -1;
  std::uint32_t last = heap_.back();
  heap_.pop_back();
  if (!heap_.empty()) {
    heap_[0] = last;
    heap_index_[last] = 0;
    heap_down(0);
  }
  return top;
}

void CdclSolver::heap_up(std::size_t i) {
  std::uint32_t v = heap_[i];
  while (i > 0) {
    std::size_t parent = (i - 1) / 2;
    if (!heap_less(v, heap_[parent])) break;
    heap_[i] = heap_[parent];
    heap_index_[heap_[i]] = static_cast<std::int64_t>(i);
    i = parent;
  }
  heap_[i] = v;
  heap_index_[v] = static_cast<std::int64_t>(i);
}

void CdclSolver::heap_down(std::size_t i) {
  std::uint32_t v = heap_[i];
  const std::size_t n = heap_.size();
  while (true) {
    std::size_t child = 2 * i + 1;
    if (child >= n) break;
    if (child + 1 < n && heap_less(heap_[child + 1], heap_[child])) ++child;
    if (!heap_less(heap_[child], v)) break;
    heap_[i] = heap_[child];
    heap_index_[heap_[i]] = static_cast<std::int64_t>(i);
    i = child;
  }
  heap_[i] = v;
  heap_index_[v] = static_cast<std::int64_t>(i);
}

CdclSolver::Result CdclSolver::solve(std::optional<std::chrono::steady_clock::time_point> deadline) {
  if (!ok_) return Result::Unsat;
  if (propagate() != kNoReason) {
    ok_ = false;
    return Result::Unsat;
  }
  max_learnts_ = std::max(1000.0, static_cast<double>(clauses_.size()) / 3.0);
  std::vector<L> learnt;
  std::uint64_t restart = 0;

  while (true) {
    const auto budget = static_cast<std::uint64_t>(luby(restart++) * kRestartBase);
    std::uint64_t local_conflicts = 0;
    while (true) {
      std::uint32_t confl = propagate();
      if (confl != kNoReason) {
        ++conflicts_;
        ++local_conflicts;
        if (decision_level() == 0) {
          ok_ = false;
          return Result::Unsat;
        }
        int bt = 0;
        analyze(confl, learnt, bt);
        cancel_until(bt);
        if (learnt.size() == 1) {
          enqueue(learnt[0], kNoReason);
        } else {
          std::uint32_t idx = attach(learnt, true);
          bump_clause(clauses_[idx]);
          enqueue(learnt[0], idx);
        }
        var_inc_ /= kVarDecay;
        clause_inc_ /= kClauseDecay;
        if (deadline && (conflicts_ & 255u) == 0 && std::chrono::steady_clock::now() >= *deadline) {
          cancel_until(0);
          return Result::Unknown;
        }
        continue;
      }
      if (local_conflicts >= budget) {
        cancel_until(0);
        break;
      }
      if (static_cast<double>(num_learnts_) - static_cast<double>(trail_.size()) >= max_learnts_) {
        reduce_db();
        max_learnts_ *= 1.1;
      }
      L next = pick_branch();
      if (next == UINT32_MAX) {
        model_.assign(num_vars_, 0);
        for (std::uint32_t v = 0; v < num_vars_; ++v) model_[v] = assigns_[v] == kTrue ? 1 : 0;
        cancel_until(0);
        return Result::Sat;
      }
      ++decisions_;
      if (deadline && (decisions_ & 4095u) == 0 && std::chrono::steady_clock::now() >= *deadline) {
        cancel_until(0);
        return Result::Unknown;
      }
      trail_lim_.push_back(trail_.size());
      enqueue(next, kNoReason);
    }
  }
}

}  // namespace isolde::prop
