#include "isolde/bounds.hpp"

#include <algorithm>
#include <charconv>
#include <map>

namespace isolde {

using fol::Sort;
using fol::Tuple;

void Scope::validate() const {
  if (txn == 0 || obj == 0 || val == 0) {
    throw std::invalid_argument("scope components must be >= 1, got " + to_string());
  }
}

std::size_t Scope::size_of(Sort sort) const {
  switch (sort) {
    case Sort::Txn: return txn;
    case Sort::Obj: return obj;
    case Sort::Val: return val;
  }
  return 0;
}

std::string Scope::to_string() const {
  return "(" + std::to_string(txn) + "," + std::to_string(obj) + "," + std::to_string(val) + ")";
}

// ---------------------------------------------------------------------------

VarTable::VarTable(Scope scope, fol::Signature signature)
    : scope_(scope), signature_(std::move(signature)) {
  scope_.validate();
  prop::Var next = 1;
  for (const auto& sym : signature_.symbols()) {
    Block b;
    b.name = sym.name;
    b.sorts = sym.signature;
    b.strides.assign(sym.arity(), 0);
    std::size_t count = 1;
    for (std::size_t i = sym.arity(); i-- > 0;) {
      b.strides[i] = count;
      count *= scope_.size_of(sym.signature[i]);
    }
    b.first = next;
    b.count = count;
    next += static_cast<prop::Var>(count);
    blocks_.push_back(std::move(b));
  }
  total_ = next - 1;
}

const VarTable::Block& VarTable::block(std::string_view symbol) const {
  for (const auto& b : blocks_) {
    if (b.name == symbol) return b;
  }
  throw std::out_of_range("variable table has no symbol " + std::string(symbol));
}

bool VarTable::has_symbol(std::string_view symbol) const {
  return std::any_of(blocks_.begin(), blocks_.end(), [&](const Block& b) { return b.name == symbol; });
}

prop::Var VarTable::var(std::string_view symbol, const Tuple& tuple) const {
  const Block& b = block(symbol);
  if (tuple.size() != b.sorts.size()) {
    throw std::out_of_range("tuple arity mismatch for " + std::string(symbol));
  }
  std::size_t off = 0;
  for (std::size_t i = 0; i < tuple.size(); ++i) {
    if (tuple[i] >= scope_.size_of(b.sorts[i])) {
      throw std::out_of_range("tuple outside scope for " + std::string(symbol));
    }
    off += tuple[i] * b.strides[i];
  }
  return b.first + static_cast<prop::Var>(off);
}

std::vector<prop::Var> VarTable::vars_of(std::string_view symbol) const {
  const Block& b = block(symbol);
  std::vector<prop::Var> out(b.count);
  for (std::size_t i = 0; i < b.count; ++i) out[i] = b.first + static_cast<prop::Var>(i);
  return out;
}

std::vector<Tuple> VarTable::tuples_of(std::string_view symbol) const {
  const Block& b = block(symbol);
  std::vector<Tuple> out;
  out.reserve(b.count);
  for (std::size_t off = 0; off < b.count; ++off) {
    Tuple t(b.sorts.size());
    std::size_t rest = off;
    for (std::size_t i = 0; i < b.sorts.size(); ++i) {
      t[i] = rest / b.strides[i];
      rest %= b.strides[i];
    }
    out.push_back(std::move(t));
  }
  return out;
}

std::pair<std::string, Tuple> VarTable::tuple_of(prop::Var v) const {
  for (const auto& b : blocks_) {
    if (v >= b.first && v < b.first + b.count) {
      std::size_t rest = v - b.first;
      Tuple t(b.sorts.size());
      for (std::size_t i = 0; i < b.sorts.size(); ++i) {
        t[i] = rest / b.strides[i];
        rest %= b.strides[i];
      }
      return {b.name, std::move(t)};
    }
  }
  throw std::out_of_range("variable " + std::to_string(v) + " is not in the table");
}

VarTable encode(const Scope& scope, const fol::Signature& signature) {
  for (auto base : {fol::kWrites, fol::kReads, fol::kSo}) {
    if (!signature.contains(base)) {
      throw std::invalid_argument("signature lacks base symbol " + std::string(base));
    }
  }
  return VarTable(scope, signature);
}

// ---------------------------------------------------------------------------

std::set<std::size_t> History::active_transactions() const {
  std::set<std::size_t> out;
  for (const auto& w : writes) out.insert(w[0]);
  for (const auto& r : reads) out.insert(r[0]);
  return out;
}

std::vector<std::string> well_formedness_violations(const History& h) {
  std::vector<std::string> out;
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> write_count, read_count;
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> writers;
  for (const auto& [t, x, v] : h.writes) {
    ++write_count[{t, x}];
    ++writers[{x, v}];
  }
  for (const auto& [t, x, v] : h.reads) ++read_count[{t, x}];
  auto any_above_one = [](const auto& m) {
    return std::any_of(m.begin(), m.end(), [](const auto& kv) { return kv.second > 1; });
  };
  if (any_above_one(write_count)) out.emplace_back("writes not functional");
  if (any_above_one(read_count)) out.emplace_back("reads not functional");
  if (any_above_one(writers)) out.emplace_back("value written by more than one transaction");
  for (const auto& [t, x, v] : h.reads) {
    if (write_count.count({t, x})) {
      out.emplace_back("transaction reads and writes the same object");
      break;
    }
  }
  for (const auto& [t, x, v] : h.reads) {
    bool justified = false;
    for (const auto& w : h.writes) justified = justified || (w[0] != t && w[1] == x && w[2] == v);
    if (!justified) {
      out.emplace_back("read without a writer");
      break;
    }
  }
  bool irreflexive = true, transitive = true, chains = true;
  for (const auto& [a, b] : h.so) {
    if (a == b) irreflexive = false;
    for (const auto& [c, d] : h.so) {
      if (b == c && !h.so.count({a, d})) transitive = false;
      // Shared successor or shared predecessor must be comparable.
      if (b == d && a != c && !h.so.count({a, c}) && !h.so.count({c, a})) chains = false;
      if (a == c && b != d && !h.so.count({b, d}) && !h.so.count({d, b})) chains = false;
    }
  }
  if (!irreflexive) out.emplace_back("so not irreflexive");
  if (!transitive) out.emplace_back("so not transitive");
  if (!chains) out.emplace_back("so not a union of chains");
  return out;
}

bool fits_scope(const History& h, const Scope& scope) {
  auto triple_ok = [&](const Triple& t) { return t[0] < scope.txn && t[1] < scope.obj && t[2] < scope.val; };
  return std::all_of(h.writes.begin(), h.writes.end(), triple_ok) &&
         std::all_of(h.reads.begin(), h.reads.end(), triple_ok) &&
         std::all_of(h.so.begin(), h.so.end(),
                     [&](const auto& p) { return p.first < scope.txn && p.second < scope.txn; });
}

std::set<Tuple> decode_relation(const VarTable& table, const prop::Instance& instance,
                                std::string_view symbol) {
  if (!table.has_symbol(symbol)) throw DecodeError("unknown symbol " + std::string(symbol));
  std::set<Tuple> out;
  auto vars = table.vars_of(symbol);
  auto tuples = table.tuples_of(symbol);
  for (std::size_t i = 0; i < vars.size(); ++i) {
    if (!instance.covers(vars[i])) {
      throw DecodeError("instance does not assign variable " + std::to_string(vars[i]) + " of " +
                        std::string(symbol));
    }
    if (instance.value(vars[i])) out.insert(tuples[i]);
  }
  return out;
}

History decode_history(const VarTable& table, const prop::Instance& instance) {
  History h;
  for (const auto& t : decode_relation(table, instance, fol::kWrites)) h.writes.insert({t[0], t[1], t[2]});
  for (const auto& t : decode_relation(table, instance, fol::kReads)) h.reads.insert({t[0], t[1], t[2]});
  for (const auto& t : decode_relation(table, instance, fol::kSo)) h.so.emplace(t[0], t[1]);
  return h;
}

prop::Instance encode_history(const VarTable& table, const History& h) {
  prop::Instance inst(table.size());
  for (const auto& [t, x, v] : h.writes) inst.set(table.var(fol::kWrites, {t, x, v}), true);
  for (const auto& [t, x, v] : h.reads) inst.set(table.var(fol::kReads, {t, x, v}), true);
  for (const auto& [a, b] : h.so) inst.set(table.var(fol::kSo, {a, b}), true);
  return inst;
}

fol::FiniteStructure to_structure(const History& h, const Scope& scope, const fol::Signature& signature) {
  fol::FiniteStructure m(scope.domains(), signature);
  for (const auto& [t, x, v] : h.writes) m.insert(fol::kWrites, {t, x, v});
  for (const auto& [t, x, v] : h.reads) m.insert(fol::kReads, {t, x, v});
  for (const auto& [a, b] : h.so) m.insert(fol::kSo, {a, b});
  return m;
}

History strip_empty_transactions(const History& h, std::size_t txn_count,
                                 std::vector<std::optional<std::size_t>>* mapping) {
  auto active = h.active_transactions();
  std::size_t n = txn_count;
  for (std::size_t t : active) n = std::max(n, t + 1);
  for (const auto& [a, b] : h.so) n = std::max({n, a + 1, b + 1});
  std::vector<std::optional<std::size_t>> map(n);
  std::size_t next = 0;
  for (std::size_t t = 0; t < n; ++t) {
    if (active.count(t)) map[t] = next++;
  }
  History out;
  for (const auto& [t, x, v] : h.writes) out.writes.insert({*map[t], x, v});
  for (const auto& [t, x, v] : h.reads) out.reads.insert({*map[t], x, v});
  for (const auto& [a, b] : h.so) {
    if (map[a] && map[b]) out.so.emplace(*map[a], *map[b]);
  }
  if (mapping) *mapping = std::move(map);
  return out;
}

// ---------------------------------------------------------------------------

namespace {

std::string name_of(char prefix, std::size_t i) { return prefix + std::to_string(i); }

std::size_t parse_name(const std::string& text, char prefix, const char* what) {
  if (text.size() < 2 || text[0] != prefix) {
    throw HistoryFormatError(std::string("unknown ") + what + " name '" + text + "'");
  }
  std::size_t value = 0;
  const char* begin = text.data() + 1;
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end || (text.size() > 2 && text[1] == '0')) {
    throw HistoryFormatError(std::string("unknown ") + what + " name '" + text + "'");
  }
  return value;
}

}  // namespace

nlohmann::json history_to_json(const History& h) {
  std::set<std::size_t> txns = h.active_transactions();
  for (const auto& [a, b] : h.so) {
    txns.insert(a);
    txns.insert(b);
  }
  // Sessions: chains of so, numbered by their smallest member.
  std::map<std::size_t, std::size_t> seq, session;
  std::size_t next_session = 0;
  for (std::size_t t : txns) {
    std::size_t preds = 0;
    std::optional<std::size_t> first;
    for (const auto& [a, b] : h.so) {
      if (b == t) {
        ++preds;
        if (!first || *first > a) first = a;
      }
    }
    seq[t] = preds;
    if (preds == 0) {
      session[t] = next_session++;
    }
  }
  for (std::size_t t : txns) {
    if (seq[t] == 0) continue;
    for (const auto& [a, b] : h.so) {
      if (b == t && seq[a] == 0) session[t] = session[a];
    }
  }
  nlohmann::json list = nlohmann::json::array();
  for (std::size_t t : txns) {
    nlohmann::json writes = nlohmann::json::object();
    nlohmann::json reads = nlohmann::json::object();
    for (const auto& [w, x, v] : h.writes) {
      if (w == t) writes[name_of('x', x)] = name_of('n', v);
    }
    for (const auto& [r, x, v] : h.reads) {
      if (r == t) reads[name_of('x', x)] = name_of('n', v);
    }
    list.push_back({{"id", name_of('t', t)},
                    {"session", session[t]},
                    {"seq", seq[t]},
                    {"writes", std::move(writes)},
                    {"reads", std::move(reads)}});
  }
  return nlohmann::json{{"transactions", std::move(list)}};
}

ParsedHistory history_from_json(const nlohmann::json& input, const std::optional<Scope>& scope) {
  const nlohmann::json* doc = &input;
  if (doc->is_object() && !doc->contains("transactions") && doc->contains("history")) doc = &(*doc)["history"];
  if (!doc->is_object() || !doc->contains("transactions") || !(*doc)["transactions"].is_array()) {
    throw HistoryFormatError("history document needs a \"transactions\" array");
  }
  ParsedHistory out;
  Scope minimal{1, 1, 1};
  auto check = [&](std::size_t index, std::size_t limit, const std::string& name) {
    if (scope && index >= limit) throw HistoryFormatError("name '" + name + "' outside scope " + scope->to_string());
  };
  struct Placement {
    std::size_t txn;
    std::int64_t session;
    std::int64_t seq;
  };
  std::vector<Placement> placements;
  std::set<std::size_t> seen;
  for (const auto& entry : (*doc)["transactions"]) {
    if (!entry.is_object() || !entry.contains("id") || !entry["id"].is_string()) {
      throw HistoryFormatError("transaction entry needs a string \"id\"");
    }
    for (const auto& [key, value] : entry.items()) {
      if (key != "id" && key != "session" && key != "seq" && key != "writes" && key != "reads") {
        throw HistoryFormatError("unknown transaction field '" + key + "'");
      }
    }
    const std::string id = entry["id"].get<std::string>();
    std::size_t t = parse_name(id, 't', "transaction");
    check(t, scope ? scope->txn : 0, id);
    if (!seen.insert(t).second) throw HistoryFormatError("duplicate transaction " + id);
    minimal.txn = std::max(minimal.txn, t + 1);
    std::int64_t session = static_cast<std::int64_t>(t) + 1'000'000;
    std::int64_t seq = 0;
    if (entry.contains("session")) {
      if (!entry["session"].is_number_integer()) throw HistoryFormatError("session of " + id + " must be an integer");
      session = entry["session"].get<std::int64_t>();
    }
    if (entry.contains("seq")) {
      if (!entry["seq"].is_number_integer()) throw HistoryFormatError("seq of " + id + " must be an integer");
      seq = entry["seq"].get<std::int64_t>();
    }
    placements.push_back({t, session, seq});
    for (const char* field : {"writes", "reads"}) {
      if (!entry.contains(field)) continue;
      const auto& ops = entry[field];
      if (!ops.is_object()) throw HistoryFormatError(std::string(field) + " of " + id + " must be an object");
      for (const auto& [obj_name, val_json] : ops.items()) {
        if (!val_json.is_string()) throw HistoryFormatError("value names must be strings");
        const std::string val_name = val_json.get<std::string>();
        std::size_t x = parse_name(obj_name, 'x', "object");
        std::size_t v = parse_name(val_name, 'n', "value");
        check(x, scope ? scope->obj : 0, obj_name);
        check(v, scope ? scope->val : 0, val_name);
        minimal.obj = std::max(minimal.obj, x + 1);
        minimal.val = std::max(minimal.val, v + 1);
        auto& target = std::string_view(field) == "writes" ? out.history.writes : out.history.reads;
        target.insert({t, x, v});
      }
    }
  }
  for (const auto& a : placements) {
    for (const auto& b : placements) {
      if (a.txn == b.txn || a.session != b.session) continue;
      if (a.seq == b.seq) {
        throw HistoryFormatError("transactions t" + std::to_string(a.txn) + " and t" + std::to_string(b.txn) +
                                 " share session and seq");
      }
      if (a.seq < b.seq) out.history.so.emplace(a.txn, b.txn);
    }
  }
  out.minimal_scope = minimal;
  return out;
}

}  // namespace isolde
