#pragma once

// Command-line front end and benchmark harness.

#include <chrono>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "isolde/levels.hpp"
#include "isolde/synth.hpp"
#include "json.hpp"

namespace isolde::cli {

/// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kUnsatRequested = 1;  // --fail-on-unsat
inline constexpr int kUsage = 2;
inline constexpr int kTimeout = 3;
inline constexpr int kSolverFailure = 4;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Built-in levels plus any loaded from level files. Later definitions of a
/// name shadow earlier ones.
class LevelRegistry {
 public:
  LevelRegistry();
  /// Throws UsageError carrying the file's diagnostics.
  void load_file(const std::string& path);
  void add(LevelSpec level);
  /// Throws UsageError("unknown level NAME").
  const LevelSpec& get(const std::string& name) const;
  const std::vector<LevelSpec>& all() const { return levels_; }

 private:
  std::vector<LevelSpec> levels_;
};

enum class Variant : std::uint8_t { Full, NoLearning, NoSmartSearch, NoFixedOrder };
inline constexpr Variant kAllVariants[] = {Variant::Full, Variant::NoLearning, Variant::NoSmartSearch,
                                           Variant::NoFixedOrder};
std::string to_string(Variant v);
std::optional<Variant> parse_variant(std::string_view text);
SynthOptions options_for(Variant v, SynthOptions base = {});

struct BenchProblem {
  std::string id;
  std::string allowed;
  std::string disallowed;
  Scope scope;
  std::vector<Variant> variants;
  std::chrono::milliseconds timeout{60'000};
};

struct BenchRow {
  std::string problem_id;
  std::string problem_type;
  Scope scope;
  Variant variant = Variant::Full;
  std::string result;
  double wall_ms = 0;
  std::size_t candidates = 0;
  std::size_t initial_clauses = 0;
  std::size_t solver_calls = 0;
};

inline constexpr const char* kCsvHeader =
    "problem_id,problem_type,txns,objs,vals,variant,result,wall_ms,candidates,initial_clauses,solver_calls";
std::string csv_line(const BenchRow& row);

/// Built-in ordered pairs x txns in [min_txns, max_txns] with objs=2,
/// vals=3 and all four variants.
std::vector<BenchProblem> default_suite(std::size_t min_txns = 2, std::size_t max_txns = 7,
                                        std::chrono::milliseconds timeout = std::chrono::seconds(60));

/// Accepts {"timeout": secs?, "problems": [...]} or a bare problem array.
/// Each problem: {"id", "allowed", "disallowed", "scope": {"txns","objs",
/// "vals"} | [t,o,v], "variants"?: [...], "timeout"?: secs}. Throws
/// UsageError on malformed input.
std::vector<BenchProblem> parse_suite(const nlohmann::json& doc,
                                      std::chrono::milliseconds default_timeout = std::chrono::seconds(60));

/// Runs every problem, writing the header and then one CSV line per
/// (problem, variant) as each problem completes. Rows of one problem are
/// written together; `on_row` sees each row after it is written.
void bench_run(const std::vector<BenchProblem>& problems, const LevelRegistry& levels, std::ostream& csv,
               std::size_t jobs = 1, const std::function<void(const BenchRow&)>& on_row = {});

/// Problem type label: single_/multi_ by framework identity, _sat/_unsat by
/// the verdict of the variants (unsat when none reached a verdict).
std::string problem_type(const LevelSpec& p, const LevelSpec& n, const std::vector<SynthOutcome::Result>& results);

/// Entry point; args excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace isolde::cli
