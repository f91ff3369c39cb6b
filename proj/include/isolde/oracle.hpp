#pragma once

// Brute-force reference semantics for tiny scopes. Everything here goes
// through fol::evaluate and never touches the SAT pipeline.

#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <tuple>
#include <vector>

#include "isolde/bounds.hpp"
#include "isolde/levels.hpp"
#include "isolde/synth.hpp"

namespace isolde::oracle {

/// Every well-formed history within scope, in a fixed order. Non-empty
/// transactions always occupy a prefix of the ids; trailing empty
/// transactions may still belong to sessions.
std::vector<History> enum_histories(const Scope& scope);

/// Streams the same sequence; return false from the visitor to stop.
void for_each_history(const Scope& scope, const std::function<bool(const History&)>& visit);

/// Some aux assignment (all total orders, all vis subsets) satisfies the
/// level's membership formula over the history in `scope`.
bool allowed(const LevelSpec& level, const History& history, const Scope& scope);
/// Uses the smallest scope containing the history.
bool allowed(const LevelSpec& level, const History& history);

/// Scope covering every id in the history (at least 1 per sort).
Scope minimal_scope(const History& history);

/// Memo of allowed() keyed by level name, scope and history.
class Cache {
 public:
  bool allowed(const LevelSpec& level, const History& history, const Scope& scope);
  std::size_t size() const { return memo_.size(); }

 private:
  std::map<std::tuple<std::string, std::size_t, std::size_t, std::size_t, History>, bool> memo_;
};

class ScopeTooLarge : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct Verdict {
  bool sat = false;
  std::optional<History> history;
};

/// First enumerated history allowed by P and disallowed by N. Throws
/// ScopeTooLarge beyond (3,2,2).
Verdict synth(const LevelSpec& allowed_level, const LevelSpec& disallowed_level, const Scope& scope,
              Cache* cache = nullptr);

}  // namespace isolde::oracle
