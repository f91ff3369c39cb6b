#include "isolde/oracle.hpp"

#include <algorithm>
#include <numeric>

namespace isolde::oracle {

namespace {

// Every disjoint union of chains over n transactions, built by inserting
// each transaction into a new chain or at any position of an existing one.
void session_orders(std::size_t n, std::vector<std::vector<std::size_t>>& chains, std::size_t next,
                    const std::function<bool(const std::set<fol::TuplePair>&)>& visit, bool& stop) {
  if (stop) return;
  if (next == n) {
    std::set<fol::TuplePair> so;
    for (const auto& c : chains) {
      for (std::size_t i = 0; i < c.size(); ++i) {
        for (std::size_t j = i + 1; j < c.size(); ++j) so.emplace(c[i], c[j]);
      }
    }
    if (!visit(so)) stop = true;
    return;
  }
  chains.push_back({next});
  session_orders(n, chains, next + 1, visit, stop);
  chains.pop_back();
  for (std::size_t c = 0; c < chains.size() && !stop; ++c) {
    for (std::size_t pos = 0; pos <= chains[c].size() && !stop; ++pos) {
      chains[c].insert(chains[c].begin() + static_cast<std::ptrdiff_t>(pos), next);
      session_orders(n, chains, next + 1, visit, stop);
      chains[c].erase(chains[c].begin() + static_cast<std::ptrdiff_t>(pos));
    }
  }
}

bool assign_aux(const std::vector<AuxRelation>& aux, std::size_t idx, fol::FiniteStructure& m,
                const fol::Formula& body) {
  if (idx == aux.size()) return fol::evaluate(body, m);
  const AuxRelation& r = aux[idx];
  const std::size_t n = m.domain_size(fol::Sort::Txn);
  if (r.shape == AuxRelation::Shape::StrictTotalOrder) {
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    do {
      fol::TxnRelation rel(n);
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) rel.set(perm[i], perm[j]);
      }
      m.assign(r.symbol.name, rel);
      if (assign_aux(aux, idx + 1, m, body)) return true;
    } while (std::next_permutation(perm.begin(), perm.end()));
    return false;
  }
  const auto candidates = m.binary(r.within).pairs();
  const std::vector<fol::TuplePair> pool(candidates.begin(), candidates.end());
  for (std::size_t mask = 0; mask < (std::size_t{1} << pool.size()); ++mask) {
    fol::TxnRelation rel(n);
    for (std::size_t i = 0; i < pool.size(); ++i) {
      if (mask >> i & 1) rel.set(pool[i].first, pool[i].second);
    }
    m.assign(r.symbol.name, rel);
    if (assign_aux(aux, idx + 1, m, body)) return true;
  }
  return false;
}

}  // namespace

void for_each_history(const Scope& scope, const std::function<bool(const History&)>& visit) {
  scope.validate();
  const std::size_t codes = 1 + 2 * scope.val;  // none | write v | read v
  bool stop = false;
  for (std::size_t k = 0; k <= scope.txn && !stop; ++k) {
    const std::size_t digits = k * scope.obj;
    std::vector<std::size_t> d(digits, 0);
    while (!stop) {
      History h;
      for (std::size_t i = 0; i < digits; ++i) {
        const std::size_t t = i / scope.obj, x = i % scope.obj;
        if (d[i] == 0) continue;
        if (d[i] <= scope.val) {
          h.writes.insert({t, x, d[i] - 1});
        } else {
          h.reads.insert({t, x, d[i] - 1 - scope.val});
        }
      }
      if (h.active_transactions().size() == k && is_well_formed(h)) {
        std::vector<std::vector<std::size_t>> chains;
        session_orders(
            scope.txn, chains, 0,
            [&](const std::set<fol::TuplePair>& so) {
              h.so = so;
              return visit(h);
            },
            stop);
      }
      std::size_t i = 0;
      while (i < digits && ++d[i] == codes) d[i++] = 0;
      if (i == digits) break;
    }
  }
}

std::vector<History> enum_histories(const Scope& scope) {
  std::vector<History> out;
  for_each_history(scope, [&](const History& h) {
    out.push_back(h);
    return true;
  });
  return out;
}

Scope minimal_scope(const History& h) {
  Scope s;
  for (const auto& w : {h.writes, h.reads}) {
    for (const auto& [t, x, v] : w) {
      s.txn = std::max(s.txn, t + 1);
      s.obj = std::max(s.obj, x + 1);
      s.val = std::max(s.val, v + 1);
    }
  }
  for (const auto& [a, b] : h.so) s.txn = std::max({s.txn, a + 1, b + 1});
  return s;
}

bool allowed(const LevelSpec& level, const History& history, const Scope& scope) {
  if (!fits_scope(history, scope)) throw std::invalid_argument("history does not fit scope " + scope.to_string());
  // The well-formedness conjunct of the membership formula does not mention
  // aux relations, so it is decided once up front.
  fol::FiniteStructure m = to_structure(history, scope, level.framework.signature());
  if (!fol::evaluate(well_formedness(), m)) return false;
  const fol::Formula body = fol::Formula::conj(level.framework.axioms, level.formula);
  // Subsets are drawn from an already-assigned relation, so orders go first.
  std::vector<AuxRelation> aux = level.framework.aux;
  std::stable_partition(aux.begin(), aux.end(),
                        [](const AuxRelation& r) { return r.shape == AuxRelation::Shape::StrictTotalOrder; });
  return assign_aux(aux, 0, m, body);
}

bool allowed(const LevelSpec& level, const History& history) {
  return allowed(level, history, minimal_scope(history));
}

bool Cache::allowed(const LevelSpec& level, const History& history, const Scope& scope) {
  auto key = std::make_tuple(level.name, scope.txn, scope.obj, scope.val, history);
  auto it = memo_.find(key);
  if (it != memo_.end()) return it->second;
  bool v = oracle::allowed(level, history, scope);
  memo_.emplace(std::move(key), v);
  return v;
}

Verdict synth(const LevelSpec& p, const LevelSpec& n, const Scope& scope, Cache* cache) {
  if (scope.txn > 3 || scope.obj > 2 || scope.val > 2) {
    throw ScopeTooLarge("oracle scope " + scope.to_string() + " exceeds (3,2,2)");
  }
  Cache local;
  Cache& c = cache ? *cache : local;
  Verdict out;
  for_each_history(scope, [&](const History& h) {
    if (c.allowed(p, h, scope) && !c.allowed(n, h, scope)) {
      out.sat = true;
      out.history = h;
      return false;
    }
    return true;
  });
  return out;
}

}  // namespace isolde::oracle
