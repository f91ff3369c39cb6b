#include "isolde/prop.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include <unistd.h>

#include "isolde/cdcl.hpp"

namespace isolde::prop {

namespace {
std::shared_ptr<const PropNode> make_node(PropFormula::Kind kind, Var var,
                                          std::vector<PropFormula> children) {
  return std::make_shared<const PropNode>(PropNode{kind, var, std::move(children)});
}
}  // namespace

PropFormula::Kind PropFormula::kind() const { return node_->kind; }
Var PropFormula::var() const { return node_->var; }
const std::vector<PropFormula>& PropFormula::children() const { return node_->children; }

PropFormula PropFormula::variable(Var v) {
  if (v == 0) throw std::invalid_argument("propositional variable ids start at 1");
  return PropFormula(make_node(Kind::Var, v, {}));
}

PropFormula PropFormula::top() {
  static const PropFormula t(make_node(Kind::True, 0, {}));
  return t;
}

PropFormula PropFormula::bottom() {
  static const PropFormula f(make_node(Kind::False, 0, {}));
  return f;
}

PropFormula PropFormula::negation(PropFormula f) {
  return PropFormula(make_node(Kind::Not, 0, {std::move(f)}));
}
PropFormula PropFormula::conjunction(std::vector<PropFormula> children) {
  return PropFormula(make_node(Kind::And, 0, std::move(children)));
}
PropFormula PropFormula::disjunction(std::vector<PropFormula> children) {
  return PropFormula(make_node(Kind::Or, 0, std::move(children)));
}
PropFormula PropFormula::implication(PropFormula lhs, PropFormula rhs) {
  return PropFormula(make_node(Kind::Implies, 0, {std::move(lhs), std::move(rhs)}));
}

std::size_t PropFormula::tree_size() const {
  std::size_t n = 1;
  for (const auto& c : children()) n += c.tree_size();
  return n;
}

std::string PropFormula::to_string() const {
  switch (kind()) {
    case Kind::Var: return "p" + std::to_string(var());
    case Kind::True: return "T";
    case Kind::False: return "F";
    case Kind::Not: return "!" + child(0).to_string();
    case Kind::And:
    case Kind::Or: {
      if (children().empty()) return kind() == Kind::And ? "T" : "F";
      std::string sep = kind() == Kind::And ? " & " : " | ";
      std::string out = "(";
      for (std::size_t i = 0; i < children().size(); ++i) {
        if (i) out += sep;
        out += children()[i].to_string();
      }
      return out + ")";
    }
    case Kind::Implies: return "(" + child(0).to_string() + " => " + child(1).to_string() + ")";
  }
  return "?";
}

bool operator==(const PropFormula& a, const PropFormula& b) {
  if (a.node_ == b.node_) return true;
  if (a.kind() != b.kind() || a.var() != b.var()) return false;
  return a.children() == b.children();
}

// ---------------------------------------------------------------------------

PropFormula make_not(const PropFormula& f) {
  switch (f.kind()) {
    case PropFormula::Kind::True: return PropFormula::bottom();
    case PropFormula::Kind::False: return PropFormula::top();
    case PropFormula::Kind::Not: return f.child(0);
    default: return PropFormula::negation(f);
  }
}

namespace {
PropFormula make_nary(PropFormula::Kind kind, std::vector<PropFormula> children) {
  const bool is_and = kind == PropFormula::Kind::And;
  std::vector<PropFormula> kept;
  kept.reserve(children.size());
  for (auto& c : children) {
    if (c.is_true()) {
      if (is_and) continue;
      return PropFormula::top();
    }
    if (c.is_false()) {
      if (!is_and) continue;
      return PropFormula::bottom();
    }
    kept.push_back(std::move(c));
  }
  if (kept.empty()) return is_and ? PropFormula::top() : PropFormula::bottom();
  if (kept.size() == 1) return std::move(kept.front());
  return is_and ? PropFormula::conjunction(std::move(kept)) : PropFormula::disjunction(std::move(kept));
}
}  // namespace

PropFormula make_and(std::vector<PropFormula> children) {
  return make_nary(PropFormula::Kind::And, std::move(children));
}
PropFormula make_or(std::vector<PropFormula> children) {
  return make_nary(PropFormula::Kind::Or, std::move(children));
}
PropFormula make_and(const PropFormula& a, const PropFormula& b) { return make_and(std::vector{a, b}); }
PropFormula make_or(const PropFormula& a, const PropFormula& b) { return make_or(std::vector{a, b}); }

PropFormula make_implies(const PropFormula& a, const PropFormula& b) {
  if (a.is_false() || b.is_true()) return PropFormula::top();
  if (a.is_true()) return b;
  if (b.is_false()) return make_not(a);
  return PropFormula::implication(a, b);
}

namespace {

class Simplifier {
 public:
  PropFormula run(const PropFormula& f) {
    if (f.kind() == PropFormula::Kind::Var || f.is_constant()) return f;
    auto it = memo_.find(f.id());
    if (it != memo_.end()) return it->second.second;
    PropFormula out = compute(f);
    memo_.emplace(f.id(), std::make_pair(f, out));
    return out;
  }

 private:
  PropFormula compute(const PropFormula& f) {
    switch (f.kind()) {
      case PropFormula::Kind::Not: return make_not(run(f.child(0)));
      case PropFormula::Kind::And:
      case PropFormula::Kind::Or: {
        std::vector<PropFormula> cs;
        cs.reserve(f.children().size());
        bool changed = false;
        for (const auto& c : f.children()) {
          cs.push_back(run(c));
          changed = changed || cs.back().id() != c.id();
        }
        bool reducible = f.children().size() <= 1;
        for (const auto& c : cs) reducible = reducible || c.is_constant();
        if (!changed && !reducible) return f;
        return f.kind() == PropFormula::Kind::And ? make_and(std::move(cs)) : make_or(std::move(cs));
      }
      case PropFormula::Kind::Implies: {
        PropFormula a = run(f.child(0));
        PropFormula b = run(f.child(1));
        if (a.id() == f.child(0).id() && b.id() == f.child(1).id() && !a.is_constant() &&
            !b.is_constant()) {
          return f;
        }
        return make_implies(a, b);
      }
      default: return f;
    }
  }

  std::unordered_map<const PropNode*, std::pair<PropFormula, PropFormula>> memo_;
};

}  // namespace

PropFormula simplify(const PropFormula& f) {
  Simplifier s;
  return s.run(f);
}

Var max_var(const PropFormula& f) {
  std::unordered_map<const PropNode*, Var> memo;
  auto rec = [&](auto&& self, const PropFormula& g) -> Var {
    if (g.kind() == PropFormula::Kind::Var) return g.var();
    if (g.children().empty()) return 0;
    auto it = memo.find(g.id());
    if (it != memo.end()) return it->second;
    Var m = 0;
    for (const auto& c : g.children()) m = std::max(m, self(self, c));
    memo.emplace(g.id(), m);
    return m;
  };
  return rec(rec, f);
}

bool Instance::value(Var v) const {
  if (!covers(v)) throw std::out_of_range("instance does not assign variable " + std::to_string(v));
  return values_[v] != 0;
}

void Instance::set(Var v, bool value) {
  if (!covers(v)) throw std::out_of_range("instance does not cover variable " + std::to_string(v));
  values_[v] = value ? 1 : 0;
}

bool evaluate(const PropFormula& f, const Instance& instance) {
  std::unordered_map<const PropNode*, bool> memo;
  auto rec = [&](auto&& self, const PropFormula& g) -> bool {
    switch (g.kind()) {
      case PropFormula::Kind::Var: return instance.value(g.var());
      case PropFormula::Kind::True: return true;
      case PropFormula::Kind::False: return false;
      default: break;
    }
    auto it = memo.find(g.id());
    if (it != memo.end()) return it->second;
    bool r = false;
    switch (g.kind()) {
      case PropFormula::Kind::Not: r = !self(self, g.child(0)); break;
      case PropFormula::Kind::And:
        r = true;
        for (const auto& c : g.children()) r = self(self, c) && r;
        break;
      case PropFormula::Kind::Or:
        r = false;
        for (const auto& c : g.children()) r = self(self, c) || r;
        break;
      case PropFormula::Kind::Implies: r = !self(self, g.child(0)) || self(self, g.child(1)); break;
      default: break;
    }
    memo.emplace(g.id(), r);
    return r;
  };
  return rec(rec, f);
}

// ---------------------------------------------------------------------------
// Tseitin

namespace {

class Tseitin {
 public:
  explicit Tseitin(Cnf& cnf) : cnf_(cnf) {}

  // Asserts f at the root. Top-level conjunctions are split and top-level
  // disjunctions become a single clause.
  void assert_root(const PropFormula& f) {
    switch (f.kind()) {
      case PropFormula::Kind::True: return;
      case PropFormula::Kind::False: cnf_.clauses.push_back({}); return;
      case PropFormula::Kind::And:
        for (const auto& c : f.children()) assert_root(c);
        return;
      case PropFormula::Kind::Or: {
        Clause cl;
        for (const auto& c : f.children()) cl.push_back(literal(c));
        cnf_.clauses.push_back(std::move(cl));
        return;
      }
      case PropFormula::Kind::Implies:
        cnf_.clauses.push_back({-literal(f.child(0)), literal(f.child(1))});
        return;
      default: cnf_.clauses.push_back({literal(f)}); return;
    }
  }

 private:
  Lit fresh() { return static_cast<Lit>(++cnf_.num_vars); }

  // Constants below the root are rare after folding; they get a pinned
  // definition variable.
  Lit constant_lit(bool value) {
    if (!true_lit_) {
      true_lit_ = fresh();
      cnf_.clauses.push_back({true_lit_});
    }
    return value ? true_lit_ : -true_lit_;
  }

  Lit literal(const PropFormula& f) {
    switch (f.kind()) {
      case PropFormula::Kind::Var: return static_cast<Lit>(f.var());
      case PropFormula::Kind::True: return constant_lit(true);
      case PropFormula::Kind::False: return constant_lit(false);
      case PropFormula::Kind::Not: return -literal(f.child(0));
      default: break;
    }
    auto it = memo_.find(f.id());
    if (it != memo_.end()) return it->second.second;
    Lit out = 0;
    if (f.kind() == PropFormula::Kind::Implies) {
      Lit a = literal(f.child(0));
      Lit b = literal(f.child(1));
      out = fresh();
      // out <-> (!a | b)
      cnf_.clauses.push_back({-out, -a, b});
      cnf_.clauses.push_back({out, a});
      cnf_.clauses.push_back({out, -b});
    } else {
      std::vector<Lit> lits;
      lits.reserve(f.children().size());
      for (const auto& c : f.children()) lits.push_back(literal(c));
      out = fresh();
      const bool is_and = f.kind() == PropFormula::Kind::And;
      if (lits.empty()) {
        cnf_.clauses.push_back({is_and ? out : -out});
      } else if (is_and) {
        Clause big{out};
        for (Lit l : lits) {
          cnf_.clauses.push_back({-out, l});
          big.push_back(-l);
        }
        cnf_.clauses.push_back(std::move(big));
      } else {
        Clause big{-out};
        for (Lit l : lits) {
          cnf_.clauses.push_back({out, -l});
          big.push_back(l);
        }
        cnf_.clauses.push_back(std::move(big));
      }
    }
    memo_.emplace(f.id(), std::make_pair(f, out));
    return out;
  }

  Cnf& cnf_;
  Lit true_lit_ = 0;
  std::unordered_map<const PropNode*, std::pair<PropFormula, Lit>> memo_;
};

}  // namespace

Cnf to_cnf(const PropFormula& f, Var reserved_vars) {
  Cnf cnf;
  cnf.num_vars = std::max(max_var(f), reserved_vars);
  Tseitin t(cnf);
  t.assert_root(f);
  return cnf;
}

void append_cnf(Cnf& cnf, const PropFormula& f) {
  cnf.num_vars = std::max(cnf.num_vars, max_var(f));
  Tseitin t(cnf);
  t.assert_root(f);
}

std::string to_dimacs(const Cnf& cnf) {
  std::ostringstream out;
  out << "p cnf " << cnf.num_vars << ' ' << cnf.clauses.size() << '\n';
  for (const auto& c : cnf.clauses) {
    for (Lit l : c) out << l << ' ';
    out << "0\n";
  }
  return out.str();
}

void export_dimacs(const Cnf& cnf, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << to_dimacs(cnf);
  out.flush();
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

Cnf parse_dimacs(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  Cnf cnf;
  bool header = false;
  std::size_t expected = 0;
  Clause current;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == 'c') continue;
    std::istringstream ls(line);
    if (line[0] == 'p') {
      std::string p, fmt;
      long long vars = 0, clauses = 0;
      if (!(ls >> p >> fmt >> vars >> clauses) || fmt != "cnf" || vars < 0 || clauses < 0) {
        throw std::runtime_error("malformed DIMACS header: " + line);
      }
      cnf.num_vars = static_cast<Var>(vars);
      expected = static_cast<std::size_t>(clauses);
      header = true;
      continue;
    }
    if (!header) throw std::runtime_error("DIMACS clause before header");
    long long lit = 0;
    while (ls >> lit) {
      if (lit == 0) {
        cnf.clauses.push_back(std::move(current));
        current.clear();
      } else {
        if (static_cast<unsigned long long>(std::llabs(lit)) > cnf.num_vars) {
          throw std::runtime_error("DIMACS literal out of range: " + std::to_string(lit));
        }
        current.push_back(static_cast<Lit>(lit));
      }
    }
  }
  if (!header) throw std::runtime_error("missing DIMACS header");
  if (!current.empty()) throw std::runtime_error("unterminated DIMACS clause");
  if (cnf.clauses.size() != expected) throw std::runtime_error("DIMACS clause count mismatch");
  return cnf;
}

// ---------------------------------------------------------------------------
// Solving

SolverConfig SolverConfig::from_environment() {
  SolverConfig config;
  if (const char* cmd = std::getenv("ISOLDE_SAT_CMD"); cmd != nullptr) config.external_command = cmd;
  return config;
}

namespace {

CnfResult solve_embedded(const Cnf& cnf, const SolverConfig& config) {
  CdclSolver solver(cnf.num_vars, config.seed);
  CnfResult result;
  for (const auto& c : cnf.clauses) {
    if (!solver.add_clause(c)) {
      result.status = SolveStatus::Unsat;
      return result;
    }
  }
  switch (solver.solve(config.deadline)) {
    case CdclSolver::Result::Unsat: result.status = SolveStatus::Unsat; break;
    case CdclSolver::Result::Unknown: result.status = SolveStatus::Unknown; break;
    case CdclSolver::Result::Sat: {
      result.status = SolveStatus::Sat;
      result.model = Instance(cnf.num_vars);
      for (Var v = 1; v <= cnf.num_vars; ++v) result.model.set(v, solver.model_value(v));
      break;
    }
  }
  return result;
}

std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') {
      out += "'\\''";
    } else {
      out += c;
    }
  }
  return out + "'";
}

CnfResult solve_external(const Cnf& cnf, const SolverConfig& config) {
  static int counter = 0;
  auto dir = std::filesystem::temp_directory_path();
  auto path = dir / ("isolde-query-" + std::to_string(::getpid()) + "-" + std::to_string(++counter) + ".cnf");
  export_dimacs(cnf, path);
  std::string command = config.external_command + " " + shell_quote(path.string()) + " 2>/dev/null";
  FILE* pipe = ::popen(command.c_str(), "r");
  if (pipe == nullptr) {
    std::filesystem::remove(path);
    throw SolverError("failed to launch external solver: " + config.external_command);
  }
  std::string output;
  std::array<char, 4096> buf{};
  while (std::size_t n = std::fread(buf.data(), 1, buf.size(), pipe)) output.append(buf.data(), n);
  ::pclose(pipe);
  std::filesystem::remove(path);

  CnfResult result;
  bool have_status = false;
  std::vector<Lit> values;
  std::istringstream in(output);
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("s ", 0) == 0) {
      std::string status = line.substr(2);
      while (!status.empty() && (status.back() == '\r' || status.back() == ' ')) status.pop_back();
      if (status == "SATISFIABLE") {
        result.status = SolveStatus::Sat;
      } else if (status == "UNSATISFIABLE") {
        result.status = SolveStatus::Unsat;
      } else {
        throw SolverError("external solver reported status: " + status);
      }
      have_status = true;
    } else if (line.rfind("v ", 0) == 0 || line == "v") {
      std::istringstream ls(line.substr(1));
      long long lit = 0;
      while (ls >> lit) {
        if (lit != 0) values.push_back(static_cast<Lit>(lit));
      }
    }
  }
  if (!have_status) throw SolverError("external solver produced no status line");
  if (result.status == SolveStatus::Sat) {
    result.model = Instance(cnf.num_vars);
    std::vector<std::uint8_t> assigned(cnf.num_vars + 1, 0);
    for (Lit l : values) {
      auto v = static_cast<Var>(std::abs(l));
      if (v == 0 || v > cnf.num_vars) throw SolverError("external solver model out of range");
      result.model.set(v, l > 0);
      assigned[v] = 1;
    }
    for (Var v = 1; v <= cnf.num_vars; ++v) {
      if (!assigned[v]) throw SolverError("external solver model misses variable " + std::to_string(v));
    }
    for (const Clause& c : cnf.clauses) {
      const bool satisfied = std::any_of(c.begin(), c.end(), [&](Lit l) {
        return result.model.value(static_cast<Var>(std::abs(l))) == (l > 0);
      });
      if (!satisfied) throw SolverError("external solver model violates a clause");
    }
  }
  return result;
}

}  // namespace

CnfResult solve_cnf(const Cnf& cnf, const SolverConfig& config) {
  if (config.deadline && Clock::now() >= *config.deadline) return CnfResult{SolveStatus::Unknown, {}};
  if (!config.external_command.empty()) return solve_external(cnf, config);
  return solve_embedded(cnf, config);
}

IncrementalSolver::IncrementalSolver(Cnf cnf, SolverConfig config)
    : cnf_(std::move(cnf)), config_(std::move(config)) {
  if (config_.external_command.empty()) embedded_ = std::make_unique<CdclSolver>(cnf_.num_vars, config_.seed);
}

IncrementalSolver::~IncrementalSolver() = default;

void IncrementalSolver::add(const PropFormula& f) { append_cnf(cnf_, f); }

CnfResult IncrementalSolver::solve() {
  if (config_.deadline && Clock::now() >= *config_.deadline) return CnfResult{SolveStatus::Unknown, {}};
  if (!embedded_) return solve_external(cnf_, config_);
  embedded_->grow(cnf_.num_vars);
  for (; fed_ < cnf_.clauses.size() && !root_unsat_; ++fed_) {
    if (!embedded_->add_clause(cnf_.clauses[fed_])) root_unsat_ = true;
  }
  CnfResult result;
  if (root_unsat_) {
    result.status = SolveStatus::Unsat;
    return result;
  }
  switch (embedded_->solve(config_.deadline)) {
    case CdclSolver::Result::Unsat: result.status = SolveStatus::Unsat; break;
    case CdclSolver::Result::Unknown: result.status = SolveStatus::Unknown; break;
    case CdclSolver::Result::Sat:
      result.status = SolveStatus::Sat;
      result.model = Instance(cnf_.num_vars);
      for (Var v = 1; v <= cnf_.num_vars; ++v) result.model.set(v, embedded_->model_value(v));
      break;
  }
  return result;
}

Solution solve(const PropFormula& f, const SolverConfig& config) {
  const Var queried = max_var(f);
  Cnf cnf = to_cnf(f, queried);
  CnfResult r = solve_cnf(cnf, config);
  switch (r.status) {
    case SolveStatus::Unsat: return Solution{};
    case SolveStatus::Unknown: throw SolverError("solver deadline expired");
    case SolveStatus::Sat: break;
  }
  Instance out(queried);
  for (Var v = 1; v <= queried; ++v) out.set(v, r.model.value(v));
  return Solution{std::move(out)};
}

}  // namespace isolde::prop
