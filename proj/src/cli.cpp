#include "isolde/cli.hpp"

#include <atomic>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include "CLI11.hpp"

namespace isolde::cli {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Levels

LevelRegistry::LevelRegistry() : levels_(builtin_catalog()) {}

void LevelRegistry::load_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read level file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  ParseResult r = parse_level_file(buf.str());
  if (!r.ok()) {
    std::string msg;
    for (const auto& d : r.diagnostics) msg += (msg.empty() ? "" : "\n") + path + ":" + d.to_string();
    throw UsageError(msg);
  }
  for (auto& l : r.levels) add(std::move(l));
}

void LevelRegistry::add(LevelSpec level) {
  for (auto& l : levels_) {
    if (l.name == level.name) {
      l = std::move(level);
      return;
    }
  }
  levels_.push_back(std::move(level));
}

const LevelSpec& LevelRegistry::get(const std::string& name) const {
  for (const auto& l : levels_) {
    if (l.name == name) return l;
  }
  throw UsageError("unknown level " + name);
}

// ---------------------------------------------------------------------------
// Variants and CSV

std::string to_string(Variant v) {
  switch (v) {
    case Variant::Full: return "full";
    case Variant::NoLearning: return "no_learning";
    case Variant::NoSmartSearch: return "no_smart_search";
    case Variant::NoFixedOrder: return "no_fixed_co";
  }
  return "?";
}

std::optional<Variant> parse_variant(std::string_view text) {
  for (Variant v : kAllVariants) {
    if (to_string(v) == text) return v;
  }
  return std::nullopt;
}

SynthOptions options_for(Variant v, SynthOptions base) {
  base.learning = v != Variant::NoLearning;
  base.smart_search = v != Variant::NoSmartSearch;
  base.fixed_order = v != Variant::NoFixedOrder;
  return base;
}

std::string csv_line(const BenchRow& r) {
  std::ostringstream out;
  out << r.problem_id << ',' << r.problem_type << ',' << r.scope.txn << ',' << r.scope.obj << ',' << r.scope.val
      << ',' << to_string(r.variant) << ',' << r.result << ',' << std::fixed << std::setprecision(3) << r.wall_ms
      << ',' << r.candidates << ',' << r.initial_clauses << ',' << r.solver_calls;
  return out.str();
}

std::string problem_type(const LevelSpec& p, const LevelSpec& n, const std::vector<SynthOutcome::Result>& results) {
  const bool single = p.framework.name == n.framework.name;
  const bool sat = std::find(results.begin(), results.end(), SynthOutcome::Result::Sat) != results.end();
  return std::string(single ? "single_" : "multi_") + (sat ? "sat" : "unsat");
}

// ---------------------------------------------------------------------------
// Suites

std::vector<BenchProblem> default_suite(std::size_t min_txns, std::size_t max_txns,
                                        std::chrono::milliseconds timeout) {
  std::vector<BenchProblem> out;
  const auto& cat = builtin_catalog();
  for (const auto& p : cat) {
    for (const auto& n : cat) {
      if (p.name == n.name) continue;
      for (std::size_t t = min_txns; t <= max_txns; ++t) {
        BenchProblem b;
        b.id = p.name + "-vs-" + n.name + "-t" + std::to_string(t);
        b.allowed = p.name;
        b.disallowed = n.name;
        b.scope = {t, 2, 3};
        b.variants.assign(std::begin(kAllVariants), std::end(kAllVariants));
        b.timeout = timeout;
        out.push_back(std::move(b));
      }
    }
  }
  return out;
}

namespace {

std::chrono::milliseconds seconds_field(const json& j, const char* key, std::chrono::milliseconds fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number() || j[key].get<double>() < 0) throw UsageError(std::string("\"") + key + "\" must be a non-negative number");
  return std::chrono::milliseconds(static_cast<std::int64_t>(j[key].get<double>() * 1000));
}

std::size_t positive(const json& j, const std::string& what) {
  if (!j.is_number_unsigned() || j.get<std::size_t>() == 0) throw UsageError(what + " must be a positive integer");
  return j.get<std::size_t>();
}

Scope scope_field(const json& j) {
  if (j.is_array()) {
    if (j.size() != 3) throw UsageError("scope array needs [txns, objs, vals]");
    return {positive(j[0], "txns"), positive(j[1], "objs"), positive(j[2], "vals")};
  }
  if (!j.is_object()) throw UsageError("scope must be an object or array");
  for (const auto& [k, v] : j.items()) {
    if (k != "txns" && k != "objs" && k != "vals") throw UsageError("unknown scope field '" + k + "'");
  }
  for (const char* k : {"txns", "objs", "vals"}) {
    if (!j.contains(k)) throw UsageError(std::string("scope is missing \"") + k + "\"");
  }
  return {positive(j["txns"], "txns"), positive(j["objs"], "objs"), positive(j["vals"], "vals")};
}

}  // namespace

std::vector<BenchProblem> parse_suite(const json& doc, std::chrono::milliseconds default_timeout) {
  const json* list = &doc;
  if (doc.is_object()) {
    for (const auto& [k, v] : doc.items()) {
      if (k != "problems" && k != "timeout") throw UsageError("unknown suite field '" + k + "'");
    }
    default_timeout = seconds_field(doc, "timeout", default_timeout);
    if (!doc.contains("problems")) throw UsageError("suite needs a \"problems\" array");
    list = &doc["problems"];
  }
  if (!list->is_array()) throw UsageError("suite problems must be an array");
  std::vector<BenchProblem> out;
  std::set<std::string> ids;
  for (const auto& p : *list) {
    if (!p.is_object()) throw UsageError("suite problem must be an object");
    for (const auto& [k, v] : p.items()) {
      if (k != "id" && k != "allowed" && k != "disallowed" && k != "scope" && k != "variants" && k != "timeout") {
        throw UsageError("unknown problem field '" + k + "'");
      }
    }
    for (const char* k : {"id", "allowed", "disallowed"}) {
      if (!p.contains(k) || !p[k].is_string()) throw UsageError(std::string("problem needs a string \"") + k + "\"");
    }
    if (!p.contains("scope")) throw UsageError("problem needs a \"scope\"");
    BenchProblem b;
    b.id = p["id"].get<std::string>();
    if (b.id.empty() || b.id.find_first_of(",\"\n") != std::string::npos) {
      throw UsageError("problem id '" + b.id + "' must be non-empty without commas or quotes");
    }
    if (!ids.insert(b.id).second) throw UsageError("duplicate problem id " + b.id);
    b.allowed = p["allowed"].get<std::string>();
    b.disallowed = p["disallowed"].get<std::string>();
    b.scope = scope_field(p["scope"]);
    b.timeout = seconds_field(p, "timeout", default_timeout);
    if (p.contains("variants")) {
      if (!p["variants"].is_array()) throw UsageError("variants must be an array");
      for (const auto& v : p["variants"]) {
        auto parsed = v.is_string() ? parse_variant(v.get<std::string>()) : std::nullopt;
        if (!parsed) throw UsageError("unknown variant " + v.dump());
        b.variants.push_back(*parsed);
      }
    } else {
      b.variants.assign(std::begin(kAllVariants), std::end(kAllVariants));
    }
    out.push_back(std::move(b));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Bench

void bench_run(const std::vector<BenchProblem>& problems, const LevelRegistry& levels, std::ostream& csv,
               std::size_t jobs, const std::function<void(const BenchRow&)>& on_row) {
  // Resolve everything up front so a typo fails before any work is done.
  for (const auto& p : problems) {
    levels.get(p.allowed);
    levels.get(p.disallowed);
  }
  csv << kCsvHeader << '\n' << std::flush;
  std::mutex writer;
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  const SynthOptions base_options = [] {
    SynthOptions o;
    o.external_solver = prop::SolverConfig::from_environment().external_command;
    return o;
  }();

  auto worker = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= problems.size()) return;
      const BenchProblem& bp = problems[i];
      const LevelSpec& p = levels.get(bp.allowed);
      const LevelSpec& n = levels.get(bp.disallowed);
      std::vector<BenchRow> rows;
      std::vector<SynthOutcome::Result> results;
      try {
        for (Variant v : bp.variants) {
          SynthOptions opt = options_for(v, base_options);
          opt.timeout = bp.timeout;
          SynthOutcome o = synth({p, n, bp.scope, opt});
          BenchRow r;
          r.problem_id = bp.id;
          r.scope = bp.scope;
          r.variant = v;
          r.result = to_string(o.result);
          r.wall_ms = static_cast<double>(o.stats.wall_time.count()) / 1000.0;
          r.candidates = o.stats.candidates;
          r.initial_clauses = o.stats.initial_clauses;
          r.solver_calls = o.stats.solver_calls;
          rows.push_back(r);
          results.push_back(o.result);
        }
      } catch (...) {
        std::lock_guard lock(writer);
        if (!failure) failure = std::current_exception();
        next = problems.size();
        return;
      }
      const std::string type = problem_type(p, n, results);
      std::lock_guard lock(writer);
      for (auto& r : rows) {
        r.problem_type = type;
        csv << csv_line(r) << '\n';
      }
      csv << std::flush;
      if (on_row) {
        for (const auto& r : rows) on_row(r);
      }
    }
  };

  jobs = std::max<std::size_t>(1, jobs);
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
}

// ---------------------------------------------------------------------------
// Front end

namespace {

json witness_json(const Witness& w) {
  json out = json::object();
  for (const auto& [name, pairs] : w) {
    json list = json::array();
    for (const auto& [a, b] : pairs) list.push_back({"t" + std::to_string(a), "t" + std::to_string(b)});
    out[name] = list;
  }
  return out;
}

json stats_json(const SynthStats& s) {
  return {{"candidates", s.candidates},
          {"initial_clauses", s.initial_clauses},
          {"solver_calls", s.solver_calls},
          {"wall_ms", static_cast<double>(s.wall_time.count()) / 1000.0}};
}

std::string stats_text(const SynthStats& s) {
  std::ostringstream out;
  out << "candidates: " << s.candidates << "\ninitial_clauses: " << s.initial_clauses
      << "\nsolver_calls: " << s.solver_calls << "\nwall_ms: " << std::fixed << std::setprecision(3)
      << static_cast<double>(s.wall_time.count()) / 1000.0 << '\n';
  return out.str();
}

struct ScopeFlags {
  std::size_t txns = 0, objs = 0, vals = 0;
  void add(CLI::App* app, bool required) {
    auto* t = app->add_option("--txns", txns, "Transactions in scope")->check(CLI::PositiveNumber);
    auto* o = app->add_option("--objs", objs, "Objects in scope")->check(CLI::PositiveNumber);
    auto* v = app->add_option("--vals", vals, "Values in scope")->check(CLI::PositiveNumber);
    if (required) {
      t->required();
      o->required();
      v->required();
    }
  }
  bool any() const { return txns || objs || vals; }
  Scope scope() const { return {txns, objs, vals}; }
};

struct SearchFlags {
  bool no_learning = false, no_smart = false, no_fixed = false;
  std::string pin = "both";
  double timeout = 0;
  std::uint64_t seed = 0;
  std::string dimacs_dir;
  void add(CLI::App* app, bool ablations) {
    if (ablations) {
      app->add_flag("--no-learning", no_learning, "Block each candidate instead of learning from it");
      app->add_flag("--no-smart-search", no_smart, "Keep separate aux relations for both levels");
      app->add_flag("--no-fixed-co", no_fixed, "Do not pin total orders to the canonical order");
      app->add_option("--pin", pin, "Total orders pinned by the fixed-order optimization")
          ->check(CLI::IsMember({"guess", "witness", "both"}));
    }
    app->add_option("--timeout", timeout, "Timeout in seconds (0 = none)")->check(CLI::NonNegativeNumber);
    app->add_option("--seed", seed, "Solver seed");
    app->add_option("--dimacs-dir", dimacs_dir, "Dump every solver query as DIMACS into this directory");
  }
  SynthOptions options() const {
    SynthOptions o;
    o.learning = !no_learning;
    o.smart_search = !no_smart;
    o.fixed_order = !no_fixed;
    o.pin = pin == "witness" ? PinTarget::Witness : pin == "both" ? PinTarget::Both : PinTarget::Guess;
    if (timeout > 0) o.timeout = std::chrono::milliseconds(static_cast<std::int64_t>(timeout * 1000));
    o.seed = seed;
    if (!dimacs_dir.empty()) o.dimacs_dir = dimacs_dir;
    o.external_solver = prop::SolverConfig::from_environment().external_command;
    return o;
  }
};

std::string verdict_text(const Refinement& r, const std::string& a, const std::string& b) {
  switch (r.verdict) {
    case Refinement::Verdict::Holds: return a + " refines " + b + ": holds within scope";
    case Refinement::Verdict::Counterexample: return a + " refines " + b + ": no (counterexample below)";
    case Refinement::Verdict::Indeterminate: return a + " refines " + b + ": indeterminate (timeout)";
  }
  return "";
}

json refinement_json(const Refinement& r) {
  json out;
  switch (r.verdict) {
    case Refinement::Verdict::Holds: out["verdict"] = "holds"; break;
    case Refinement::Verdict::Counterexample:
      out["verdict"] = "counterexample";
      out["history"] = history_to_json(*r.counterexample);
      out["witness"] = witness_json(r.witness);
      break;
    case Refinement::Verdict::Indeterminate: out["verdict"] = "timeout"; break;
  }
  out["stats"] = stats_json(r.stats);
  return out;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Bounded synthesis of isolation-level anomaly histories", "isolde"};
  app.require_subcommand(1);
  std::vector<std::string> spec_files;
  app.add_option("--spec", spec_files, "Level definition file (repeatable)")->check(CLI::ExistingFile);

  // synth
  auto* synth_cmd = app.add_subcommand("synth", "Find a history allowed by one level and disallowed by another");
  std::string allowed_name, disallowed_name, format = "text";
  bool fail_on_unsat = false;
  ScopeFlags synth_scope;
  SearchFlags synth_search;
  synth_cmd->add_option("--allowed", allowed_name, "Level that must allow the history")->required();
  synth_cmd->add_option("--disallowed", disallowed_name, "Level that must reject the history")->required();
  synth_scope.add(synth_cmd, true);
  synth_search.add(synth_cmd, true);
  synth_cmd->add_option("--format", format, "Output format")->check(CLI::IsMember({"text", "json"}));
  synth_cmd->add_flag("--fail-on-unsat", fail_on_unsat, "Exit with 1 when no history exists");
  synth_cmd->add_option("--spec", spec_files, "Level definition file (repeatable)")->check(CLI::ExistingFile);

  // check
  auto* check_cmd = app.add_subcommand("check", "Decide whether a level allows a history");
  std::string check_level, history_path, check_format = "text";
  ScopeFlags check_scope;
  SearchFlags check_search;
  check_cmd->add_option("--level", check_level, "Level name")->required();
  check_cmd->add_option("--history", history_path, "History file (JSON)")->required();
  check_scope.add(check_cmd, false);
  check_search.add(check_cmd, false);
  check_cmd->add_option("--format", check_format, "Output format")->check(CLI::IsMember({"text", "json"}));
  check_cmd->add_option("--spec", spec_files, "Level definition file (repeatable)")->check(CLI::ExistingFile);

  // compare
  auto* compare_cmd = app.add_subcommand("compare", "Check both refinement directions between two levels");
  std::string cmp_a, cmp_b, cmp_format = "text";
  ScopeFlags cmp_scope;
  SearchFlags cmp_search;
  compare_cmd->add_option("--a", cmp_a, "First level")->required();
  compare_cmd->add_option("--b", cmp_b, "Second level")->required();
  cmp_scope.add(compare_cmd, true);
  cmp_search.add(compare_cmd, true);
  compare_cmd->add_option("--format", cmp_format, "Output format")->check(CLI::IsMember({"text", "json"}));
  compare_cmd->add_option("--spec", spec_files, "Level definition file (repeatable)")->check(CLI::ExistingFile);

  // levels list
  auto* levels_cmd = app.add_subcommand("levels", "Inspect the level catalog");
  levels_cmd->require_subcommand(1);
  auto* list_cmd = levels_cmd->add_subcommand("list", "List level names and frameworks");
  list_cmd->add_option("--spec", spec_files, "Level definition file (repeatable)")->check(CLI::ExistingFile);

  // bench
  auto* bench_cmd = app.add_subcommand("bench", "Run a benchmark suite and write CSV");
  std::string suite_path, out_path;
  std::size_t jobs = 1, min_txns = 2, max_txns = 7;
  double bench_timeout = 60;
  bench_cmd->add_option("--suite", suite_path, "Suite file (JSON); default: built-in pairs")->check(CLI::ExistingFile);
  bench_cmd->add_option("--out", out_path, "CSV output path (default: stdout)");
  bench_cmd->add_option("--jobs", jobs, "Parallel workers")->check(CLI::PositiveNumber);
  bench_cmd->add_option("--timeout", bench_timeout, "Default per-run timeout in seconds")->check(CLI::PositiveNumber);
  bench_cmd->add_option("--min-txns", min_txns, "Default suite: smallest transaction count")->check(CLI::PositiveNumber);
  bench_cmd->add_option("--max-txns", max_txns, "Default suite: largest transaction count")->check(CLI::PositiveNumber);
  bench_cmd->add_option("--spec", spec_files, "Level definition file (repeatable)")->check(CLI::ExistingFile);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return kOk;
    }
    err << "error: " << e.what() << '\n';
    return kUsage;
  }

  try {
    LevelRegistry levels;
    for (const auto& f : spec_files) levels.load_file(f);

    if (*synth_cmd) {
      SynthProblem problem{levels.get(allowed_name), levels.get(disallowed_name), synth_scope.scope(),
                           synth_search.options()};
      SynthOutcome o = synth(problem);
      if (format == "json") {
        json doc = {{"result", to_string(o.result)}, {"allowed", allowed_name}, {"disallowed", disallowed_name},
                    {"scope", {{"txns", problem.scope.txn}, {"objs", problem.scope.obj}, {"vals", problem.scope.val}}},
                    {"stats", stats_json(o.stats)}};
        if (o.sat()) {
          doc["history"] = history_to_json(*o.history);
          doc["witness"] = witness_json(o.witness);
        }
        out << doc.dump(2) << '\n';
      } else {
        out << "result: " << to_string(o.result) << '\n';
        if (o.sat()) {
          out << "history:\n" << history_to_json(*o.history).dump(2) << '\n';
          out << "witness (" << allowed_name << "):\n" << witness_json(o.witness).dump(2) << '\n';
        }
        out << stats_text(o.stats);
      }
      if (o.result == SynthOutcome::Result::Timeout) return kTimeout;
      if (fail_on_unsat && o.result == SynthOutcome::Result::Unsat) return kUnsatRequested;
      return kOk;
    }

    if (*check_cmd) {
      const LevelSpec& level = levels.get(check_level);
      std::ifstream in(history_path, std::ios::binary);
      if (!in) throw UsageError("cannot read history file " + history_path);
      json doc;
      try {
        doc = json::parse(in);
      } catch (const json::parse_error& e) {
        throw UsageError(history_path + ": " + e.what());
      }
      std::optional<Scope> scope;
      if (check_scope.any()) {
        if (!check_scope.txns || !check_scope.objs || !check_scope.vals) {
          throw UsageError("--txns, --objs and --vals must be given together");
        }
        scope = check_scope.scope();
      }
      ParsedHistory parsed;
      try {
        parsed = history_from_json(doc, scope);
      } catch (const HistoryFormatError& e) {
        throw UsageError(history_path + ": " + e.what());
      }
      const Scope s = scope ? *scope : parsed.minimal_scope;
      Membership m;
      try {
        m = check_membership(level, parsed.history, s, check_search.options());
      } catch (const SynthError& e) {
        throw UsageError(history_path + ": " + e.what());
      }
      if (check_format == "json") {
        json res = {{"level", check_level}, {"allowed", m.allowed}};
        if (m.allowed) res["witness"] = witness_json(m.witness);
        out << res.dump(2) << '\n';
      } else {
        out << check_level << ": " << (m.allowed ? "allowed" : "disallowed") << '\n';
        if (m.allowed) out << "witness:\n" << witness_json(m.witness).dump(2) << '\n';
      }
      return kOk;
    }

    if (*compare_cmd) {
      const LevelSpec& a = levels.get(cmp_a);
      const LevelSpec& b = levels.get(cmp_b);
      Equivalence e = equivalent(a, b, cmp_scope.scope(), cmp_search.options());
      const std::string summary = e.equivalent()       ? "equivalent within scope"
                                  : e.indeterminate() ? "indeterminate (timeout)"
                                                      : "not equivalent";
      if (cmp_format == "json") {
        json doc = {{"a", cmp_a}, {"b", cmp_b}, {"a_refines_b", refinement_json(e.a_in_b)},
                    {"b_refines_a", refinement_json(e.b_in_a)}, {"verdict", summary}};
        out << doc.dump(2) << '\n';
      } else {
        for (const auto& [r, x, y] : {std::tuple{&e.a_in_b, cmp_a, cmp_b}, std::tuple{&e.b_in_a, cmp_b, cmp_a}}) {
          out << verdict_text(*r, x, y) << '\n';
          if (r->counterexample) {
            out << "history (allowed by " << x << ", disallowed by " << y << "):\n"
                << history_to_json(*r->counterexample).dump(2) << '\n';
          }
        }
        out << summary << '\n';
      }
      return e.indeterminate() && !(e.a_in_b.verdict == Refinement::Verdict::Counterexample ||
                                    e.b_in_a.verdict == Refinement::Verdict::Counterexample)
                 ? kTimeout
                 : kOk;
    }

    if (*list_cmd) {
      for (const auto& l : levels.all()) out << l.name << '\t' << l.framework.name << '\n';
      return kOk;
    }

    if (*bench_cmd) {
      const auto default_timeout = std::chrono::milliseconds(static_cast<std::int64_t>(bench_timeout * 1000));
      std::vector<BenchProblem> problems;
      if (suite_path.empty()) {
        if (min_txns > max_txns) throw UsageError("--min-txns exceeds --max-txns");
        problems = default_suite(min_txns, max_txns, default_timeout);
      } else {
        std::ifstream in(suite_path, std::ios::binary);
        json doc;
        try {
          doc = json::parse(in);
        } catch (const json::parse_error& e) {
          throw UsageError(suite_path + ": " + e.what());
        }
        problems = parse_suite(doc, default_timeout);
      }
      if (out_path.empty()) {
        bench_run(problems, levels, out, jobs);
      } else {
        std::ofstream csv(out_path, std::ios::binary | std::ios::trunc);
        if (!csv) throw UsageError("cannot write " + out_path);
        bench_run(problems, levels, csv, jobs);
      }
      return kOk;
    }
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const SynthError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const prop::SolverError& e) {
    err << "solver failure: " << e.what() << '\n';
    return kSolverFailure;
  }
  return kUsage;
}

}  // namespace isolde::cli
