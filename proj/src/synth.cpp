#include "isolde/synth.hpp"

#include <cstdio>

#include "isolde/translate.hpp"

namespace isolde {

using prop::PropFormula;
using Clock = std::chrono::steady_clock;

std::string to_string(SynthOutcome::Result r) {
  switch (r) {
    case SynthOutcome::Result::Sat: return "sat";
    case SynthOutcome::Result::Unsat: return "unsat";
    case SynthOutcome::Result::Timeout: return "timeout";
  }
  return "?";
}

namespace {

const std::set<std::string> kBaseSymbols = {std::string(fol::kWrites), std::string(fol::kReads), std::string(fol::kSo)};

void validate_level(const LevelSpec& level) {
  const auto sig = level.framework.signature();
  auto diags = fol::check_well_formed(level.formula, sig);
  if (!diags.empty()) throw SynthError("level " + level.name + ": " + diags.front().to_string());
  if (fol::contains_constants(level.formula)) throw SynthError("level " + level.name + " mentions constants");
}

void validate_scope(const Scope& scope) {
  try {
    scope.validate();
  } catch (const std::exception& e) {
    throw SynthError(e.what());
  }
}

/// Level with every aux symbol `r` renamed to `r_<suffix>`.
LevelSpec rename_aux(const LevelSpec& level, const std::string& suffix, std::map<std::string, std::string>& back) {
  std::map<std::string, std::string> renaming;
  for (const auto& name : level.framework.aux_names()) {
    renaming[name] = name + "_" + suffix;
    back[name + "_" + suffix] = name;
  }
  LevelSpec out = level;
  for (auto& aux : out.framework.aux) {
    aux.symbol.name = renaming.at(aux.symbol.name);
    if (renaming.count(aux.within)) aux.within = renaming.at(aux.within);
  }
  out.framework.axioms = fol::rename_relations(level.framework.axioms, renaming);
  out.formula = fol::rename_relations(level.formula, renaming);
  return out;
}

Witness decode_witness(const VarTable& table, const prop::Instance& model, const std::vector<std::string>& symbols,
                       const std::map<std::string, std::string>& back,
                       const std::vector<std::optional<std::size_t>>* mapping) {
  Witness out;
  for (const auto& sym : symbols) {
    auto& target = out[back.count(sym) ? back.at(sym) : sym];
    for (const auto& t : decode_relation(table, model, sym)) {
      std::size_t a = t[0], b = t[1];
      if (mapping) {
        if (a >= mapping->size() || b >= mapping->size() || !(*mapping)[a] || !(*mapping)[b]) continue;
        a = *(*mapping)[a];
        b = *(*mapping)[b];
      }
      target.emplace(a, b);
    }
  }
  return out;
}

bool holds_with_witness(const LevelSpec& level, const History& history, const Scope& scope, const Witness& witness) {
  fol::FiniteStructure m = to_structure(history, scope, level.framework.signature());
  for (const auto& [name, pairs] : witness) {
    for (const auto& [a, b] : pairs) m.insert(name, {a, b});
  }
  return fol::evaluate(membership_formula(level), m);
}

class QueryRunner {
 public:
  QueryRunner(const SynthOptions& options, SynthStats& stats, std::optional<Clock::time_point> deadline)
      : options_(options), stats_(stats), deadline_(deadline) {
    if (options_.dimacs_dir) std::filesystem::create_directories(*options_.dimacs_dir);
  }

  bool expired() const { return deadline_ && Clock::now() >= *deadline_; }

  prop::SolverConfig config() const {
    prop::SolverConfig c;
    c.seed = options_.seed;
    c.deadline = deadline_;
    c.external_command = options_.external_solver;
    return c;
  }

  prop::CnfResult run(const prop::Cnf& cnf) {
    record(cnf);
    return prop::solve_cnf(cnf, config());
  }

  prop::CnfResult run(prop::IncrementalSolver& solver) {
    record(solver.cnf());
    return solver.solve();
  }

 private:
  void record(const prop::Cnf& cnf) {
    if (options_.dimacs_dir) {
      char name[32];
      std::snprintf(name, sizeof name, "query_%05zu.cnf", stats_.solver_calls);
      prop::export_dimacs(cnf, *options_.dimacs_dir / name);
    }
    ++stats_.solver_calls;
  }


  const SynthOptions& options_;
  SynthStats& stats_;
  std::optional<Clock::time_point> deadline_;
};

}  // namespace

SynthOutcome synth(const SynthProblem& problem) {
  const auto started = Clock::now();
  validate_scope(problem.scope);
  validate_level(problem.allowed);
  validate_level(problem.disallowed);
  const SynthOptions& opt = problem.options;

  SynthOutcome out;
  std::optional<Clock::time_point> deadline;
  if (opt.timeout) deadline = started + *opt.timeout;
  QueryRunner runner(opt, out.stats, deadline);
  auto finish = [&](SynthOutcome::Result r) {
    out.result = r;
    out.stats.wall_time = std::chrono::duration_cast<std::chrono::microseconds>(Clock::now() - started);
    return out;
  };

  // Aux vocabulary: one shared set under smart search, otherwise disjoint
  // copies whenever the two sides would collide.
  const bool same_framework = problem.allowed.framework.name == problem.disallowed.framework.name;
  const bool shared = opt.smart_search && same_framework;
  std::map<std::string, std::string> back;
  LevelSpec p = problem.allowed;
  LevelSpec n = problem.disallowed;
  if (same_framework && !shared) {
    p = rename_aux(problem.allowed, "P", back);
    n = rename_aux(problem.disallowed, "N", back);
  }
  std::vector<fol::RelationSymbol> aux = p.framework.aux_symbols();
  if (!shared) {
    for (const auto& s : n.framework.aux_symbols()) aux.push_back(s);
  }
  auto table = std::make_shared<const VarTable>(problem.scope, fol::Signature::base().extended(aux));
  out.table = table;
  const std::vector<std::string> n_aux = n.framework.aux_names();
  const std::set<std::string> n_aux_set(n_aux.begin(), n_aux.end());

  Translator tr(*table);
  const PropFormula good = tr.translate(fol::all_of({well_formedness(), p.framework.axioms, p.formula}));
  const PropFormula n_holds = tr.translate(fol::Formula::conj(n.framework.axioms, n.formula));
  const PropFormula n_fails = prop::make_not(n_holds);

  std::vector<PropFormula> initial = {good, n_fails};
  if (opt.fixed_order) {
    // Pin total orders to t_i < t_j iff i < j. Under smart search both
    // sides share one set of aux relations.
    std::set<std::string> pinned;
    if (opt.pin != PinTarget::Witness) {
      for (const auto& o : n.framework.total_orders()) pinned.insert(o);
    }
    if (opt.pin != PinTarget::Guess) {
      for (const auto& o : p.framework.total_orders()) pinned.insert(o);
    }
    const std::size_t k = problem.scope.txn;
    for (const auto& order : pinned) {
      for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = 0; j < k; ++j) {
          PropFormula a = table->atom(order, {i, j});
          initial.push_back(i < j ? a : prop::make_not(a));
        }
      }
    }
  }
  prop::IncrementalSolver search(prop::to_cnf(prop::make_and(std::move(initial)), table->size()), runner.config());
  out.stats.initial_clauses = search.cnf().clauses.size();

  while (true) {
    if (runner.expired()) return finish(SynthOutcome::Result::Timeout);
    prop::CnfResult guess = runner.run(search);
    if (guess.status == prop::SolveStatus::Unknown) return finish(SynthOutcome::Result::Timeout);
    if (guess.status == prop::SolveStatus::Unsat) return finish(SynthOutcome::Result::Unsat);

    History candidate = decode_history(*table, guess.model);
    if (!is_well_formed(candidate)) {
      throw std::logic_error("internal: candidate violates well-formedness: " +
                             well_formedness_violations(candidate).front());
    }
    ++out.stats.candidates;

    if (runner.expired()) return finish(SynthOutcome::Result::Timeout);
    const PropFormula check = restrict(n_holds, *table, kBaseSymbols, guess.model);
    prop::CnfResult verdict = runner.run(prop::to_cnf(check, table->size()));
    if (verdict.status == prop::SolveStatus::Unknown) return finish(SynthOutcome::Result::Timeout);

    if (verdict.status == prop::SolveStatus::Unsat) {
      std::vector<std::optional<std::size_t>> mapping;
      History stripped = strip_empty_transactions(candidate, problem.scope.txn, &mapping);
      Scope hs = problem.scope;
      hs.txn = std::max<std::size_t>(1, stripped.active_transactions().size());
      out.witness = decode_witness(*table, guess.model, p.framework.aux_names(), back, &mapping);
      if (!is_well_formed(stripped) || !holds_with_witness(problem.allowed, stripped, hs, out.witness)) {
        throw std::logic_error("internal: synthesized history fails the allowed level");
      }
      out.raw_history = std::move(candidate);
      out.history = std::move(stripped);
      out.history_scope = hs;
      return finish(SynthOutcome::Result::Sat);
    }

    PropFormula lesson = PropFormula::bottom();
    if (opt.learning) {
      // H must also violate N under the counterexample's aux assignment.
      lesson = restrict(n_fails, *table, n_aux_set, verdict.model);
    } else {
      std::vector<PropFormula> differ;
      for (const auto& sym : kBaseSymbols) {
        for (prop::Var v : table->vars_of(sym)) {
          PropFormula lit = PropFormula::variable(v);
          differ.push_back(guess.model.value(v) ? prop::make_not(lit) : lit);
        }
      }
      lesson = prop::make_or(std::move(differ));
    }
    out.learned.push_back(lesson);
    search.add(lesson);
  }
}

// ---------------------------------------------------------------------------

MembershipChecker::MembershipChecker(const LevelSpec& level, const Scope& scope, const SynthOptions& options)
    : level_(level), scope_(scope), options_(options), formula_(PropFormula::bottom()) {
  validate_scope(scope);
  validate_level(level);
  table_ = std::make_shared<const VarTable>(scope, level.framework.signature());
  formula_ = translate(*table_, membership_formula(level));
}

Membership MembershipChecker::check(const History& history) const {
  if (!fits_scope(history, scope_)) throw SynthError("history does not fit scope " + scope_.to_string());
  auto violations = well_formedness_violations(history);
  if (!violations.empty()) throw SynthError("history is not well-formed: " + violations.front());

  const prop::Instance base = encode_history(*table_, history);
  const PropFormula f = restrict(formula_, *table_, kBaseSymbols, base);
  SynthStats stats;
  std::optional<Clock::time_point> deadline;
  if (options_.timeout) deadline = Clock::now() + *options_.timeout;
  QueryRunner runner(options_, stats, deadline);
  prop::CnfResult r = runner.run(prop::to_cnf(f, table_->size()));
  if (r.status == prop::SolveStatus::Unknown) throw prop::SolverError("membership check timed out");
  Membership m;
  m.allowed = r.status == prop::SolveStatus::Sat;
  if (m.allowed) m.witness = decode_witness(*table_, r.model, level_.framework.aux_names(), {}, nullptr);
  return m;
}

Membership check_membership(const LevelSpec& level, const History& history, const Scope& scope,
                            const SynthOptions& options) {
  return MembershipChecker(level, scope, options).check(history);
}

Refinement refines(const LevelSpec& a, const LevelSpec& b, const Scope& scope, const SynthOptions& options) {
  SynthOutcome o = synth({a, b, scope, options});
  Refinement r;
  r.stats = o.stats;
  switch (o.result) {
    case SynthOutcome::Result::Unsat: r.verdict = Refinement::Verdict::Holds; break;
    case SynthOutcome::Result::Timeout: r.verdict = Refinement::Verdict::Indeterminate; break;
    case SynthOutcome::Result::Sat:
      r.verdict = Refinement::Verdict::Counterexample;
      r.counterexample = std::move(o.history);
      r.witness = std::move(o.witness);
      break;
  }
  return r;
}

Equivalence equivalent(const LevelSpec& a, const LevelSpec& b, const Scope& scope, const SynthOptions& options) {
  return {refines(a, b, scope, options), refines(b, a, scope, options)};
}

}  // namespace isolde
