#include <cctype>
#include <map>
#include <set>

#include "isolde/levels.hpp"

namespace isolde {

using fol::Formula;
using fol::RelExpr;
using fol::Sort;
using fol::Term;

namespace {

enum class Tok : std::uint8_t {
  Ident,
  Number,
  LBrace,
  RBrace,
  LParen,
  RParen,
  LBracket,
  RBracket,
  Comma,
  Semi,
  Colon,
  Dot,
  Eq,
  Neq,
  AndAnd,
  OrOr,
  Bang,
  Arrow,
  Bar,
  Plus,
  End,
};

struct Token {
  Tok kind;
  std::string text;
  std::size_t line;
  std::size_t column;
};

const std::set<std::string, std::less<>> kKeywords = {"level", "framework", "let", "axiom", "forall", "exists"};

std::vector<Token> tokenize(std::string_view src) {
  std::vector<Token> out;
  std::size_t line = 1, col = 1, i = 0;
  auto advance = [&](std::size_t n) {
    for (std::size_t k = 0; k < n; ++k) {
      if (src[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
      ++i;
    }
  };
  while (i < src.size()) {
    char c = src[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      advance(1);
      continue;
    }
    if (c == '/' && i + 1 < src.size() && src[i + 1] == '/') {
      while (i < src.size() && src[i] != '\n') advance(1);
      continue;
    }
    Token t{Tok::End, "", line, col};
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t j = i;
      while (j < src.size() && (std::isalnum(static_cast<unsigned char>(src[j])) || src[j] == '_')) ++j;
      t.kind = Tok::Ident;
      t.text = std::string(src.substr(i, j - i));
      advance(j - i);
      out.push_back(std::move(t));
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      std::size_t j = i;
      while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
      t.kind = Tok::Number;
      t.text = std::string(src.substr(i, j - i));
      advance(j - i);
      out.push_back(std::move(t));
      continue;
    }
    auto two = src.substr(i, 2);
    std::size_t len = 2;
    if (two == "!=") {
      t.kind = Tok::Neq;
    } else if (two == "&&") {
      t.kind = Tok::AndAnd;
    } else if (two == "||") {
      t.kind = Tok::OrOr;
    } else if (two == "=>") {
      t.kind = Tok::Arrow;
    } else {
      len = 1;
      switch (c) {
        case '{': t.kind = Tok::LBrace; break;
        case '}': t.kind = Tok::RBrace; break;
        case '(': t.kind = Tok::LParen; break;
        case ')': t.kind = Tok::RParen; break;
        case '[': t.kind = Tok::LBracket; break;
        case ']': t.kind = Tok::RBracket; break;
        case ',': t.kind = Tok::Comma; break;
        case ';': t.kind = Tok::Semi; break;
        case ':': t.kind = Tok::Colon; break;
        case '.': t.kind = Tok::Dot; break;
        case '=': t.kind = Tok::Eq; break;
        case '!': t.kind = Tok::Bang; break;
        case '|': t.kind = Tok::Bar; break;
        case '+': t.kind = Tok::Plus; break;
        default:
          throw ParseError({line, col, std::string("unexpected character '") + c + "'"});
      }
    }
    t.text = std::string(src.substr(i, len));
    advance(len);
    out.push_back(std::move(t));
  }
  out.push_back({Tok::End, "<end of input>", line, col});
  return out;
}

struct FormulaMacro {
  std::vector<std::pair<std::string, Sort>> params;
  Formula body = fol::all_of({});
};

class Parser {
 public:
  explicit Parser(std::vector<Token> tokens) : toks_(std::move(tokens)) {}

  std::vector<LevelSpec> file(std::vector<SourceDiagnostic>& semantic) {
    std::vector<LevelSpec> out;
    std::set<std::string> names;
    while (peek().kind != Tok::End) {
      const Token& start = peek();
      LevelSpec spec = level(semantic);
      if (!names.insert(spec.name).second) {
        semantic.push_back({start.line, start.column, "duplicate level " + spec.name});
      }
      out.push_back(std::move(spec));
    }
    return out;
  }

  Formula standalone_formula() {
    Formula f = formula();
    expect(Tok::End, "end of input");
    return f;
  }

 private:
  // -- token helpers ---------------------------------------------------------
  const Token& peek(std::size_t ahead = 0) const { return toks_[std::min(pos_ + ahead, toks_.size() - 1)]; }
  const Token& next() {
    const Token& t = peek();
    if (pos_ < toks_.size() - 1) ++pos_;
    return t;
  }
  bool accept(Tok kind) {
    if (peek().kind != kind) return false;
    next();
    return true;
  }
  bool is_keyword(const Token& t, std::string_view kw) const { return t.kind == Tok::Ident && t.text == kw; }
  [[noreturn]] void fail(const Token& at, const std::string& message) const {
    throw ParseError({at.line, at.column, message});
  }
  const Token& expect(Tok kind, const std::string& what) {
    if (peek().kind != kind) fail(peek(), "expected " + what + ", found '" + peek().text + "'");
    return next();
  }
  const Token& expect_keyword(std::string_view kw) {
    if (!is_keyword(peek(), kw)) fail(peek(), "expected '" + std::string(kw) + "', found '" + peek().text + "'");
    return next();
  }
  std::string identifier(const std::string& what) {
    const Token& t = expect(Tok::Ident, what);
    if (kKeywords.count(t.text)) fail(t, "keyword '" + t.text + "' cannot be used as " + what);
    return t.text;
  }

  // -- levels ----------------------------------------------------------------
  LevelSpec level(std::vector<SourceDiagnostic>& semantic) {
    expect_keyword("level");
    LevelSpec spec;
    spec.name = identifier("level name");
    expect(Tok::LBrace, "'{'");
    expect_keyword("framework");
    const Token& fw = expect(Tok::Ident, "framework name");
    const Framework* framework = find_framework(fw.text);
    if (!framework) fail(fw, "unknown framework " + fw.text);
    spec.framework = *framework;
    accept(Tok::Semi);
    formula_macros_.clear();
    rel_aliases_.clear();

    std::vector<Formula> axioms;
    std::vector<const Token*> axiom_starts;
    while (!accept(Tok::RBrace)) {
      if (is_keyword(peek(), "let")) {
        let_binding();
      } else if (is_keyword(peek(), "axiom")) {
        axiom_starts.push_back(&next());
        axioms.push_back(formula());
        if (peek().kind != Tok::RBrace) expect(Tok::Semi, "';'");
      } else {
        fail(peek(), "expected 'let', 'axiom' or '}', found '" + peek().text + "'");
      }
    }
    if (axioms.empty()) fail(peek(), "level " + spec.name + " has no axiom");

    const fol::Signature sig = spec.framework.signature();
    for (std::size_t i = 0; i < axioms.size(); ++i) {
      const Token& at = *axiom_starts[i];
      for (const auto& d : fol::check_well_formed(axioms[i], sig)) {
        semantic.push_back({at.line, at.column, d.to_string()});
      }
      if (fol::contains_constants(axioms[i])) {
        semantic.push_back({at.line, at.column, "level axioms may not mention constants"});
      }
    }
    spec.formula = fol::all_of(axioms);
    return spec;
  }

  void let_binding() {
    expect_keyword("let");
    const Token& name_tok = peek();
    std::string name = identifier("binding name");
    if (formula_macros_.count(name) || rel_aliases_.count(name)) fail(name_tok, "duplicate binding " + name);
    if (accept(Tok::LParen)) {
      FormulaMacro m;
      if (!accept(Tok::RParen)) {
        do {
          std::string p = identifier("parameter name");
          Sort s = Sort::Txn;
          if (accept(Tok::Colon)) s = sort();
          m.params.emplace_back(p, s);
        } while (accept(Tok::Comma));
        expect(Tok::RParen, "')'");
      }
      expect(Tok::Eq, "'='");
      if (m.params.empty()) {
        rel_aliases_.emplace(name, rexpr());
      } else {
        for (const auto& p : m.params) scope_.push_back(p);
        m.body = formula();
        scope_.resize(scope_.size() - m.params.size());
        formula_macros_.emplace(name, std::move(m));
      }
    } else {
      expect(Tok::Eq, "'='");
      rel_aliases_.emplace(name, rexpr());
    }
    expect(Tok::Semi, "';'");
  }

  Sort sort() {
    const Token& t = expect(Tok::Ident, "sort");
    auto s = fol::parse_sort(t.text);
    if (!s) fail(t, "unknown sort " + t.text);
    return *s;
  }

  // -- formulas --------------------------------------------------------------
  Formula formula() {
    if (is_keyword(peek(), "forall") || is_keyword(peek(), "exists")) return quantified();
    Formula lhs = disjunction();
    if (accept(Tok::Arrow)) return Formula::implies(lhs, formula());
    return lhs;
  }

  Formula quantified() {
    const bool universal = next().text == "forall";
    std::vector<std::pair<std::string, Sort>> binders;
    do {
      std::string v = identifier("variable name");
      expect(Tok::Colon, "':'");
      binders.emplace_back(v, sort());
    } while (accept(Tok::Comma));
    expect(Tok::Dot, "'.'");
    for (const auto& b : binders) scope_.push_back(b);
    Formula body = formula();
    scope_.resize(scope_.size() - binders.size());
    for (auto it = binders.rbegin(); it != binders.rend(); ++it) {
      body = universal ? Formula::forall(it->first, it->second, body) : Formula::exists(it->first, it->second, body);
    }
    return body;
  }

  Formula disjunction() {
    Formula acc = conjunction();
    while (accept(Tok::OrOr)) acc = Formula::disj(acc, conjunction());
    return acc;
  }

  Formula conjunction() {
    Formula acc = unary();
    while (accept(Tok::AndAnd)) acc = Formula::conj(acc, unary());
    return acc;
  }

  Formula unary() {
    if (accept(Tok::Bang)) return Formula::negate(unary());
    if (is_keyword(peek(), "forall") || is_keyword(peek(), "exists")) return quantified();
    return primary();
  }

  Formula primary() {
    if (peek().kind == Tok::LParen) {
      // Either a parenthesised relation expression applied to arguments or
      // a parenthesised formula.
      const std::size_t saved = pos_;
      try {
        next();
        RelExpr e = rexpr();
        expect(Tok::RParen, "')'");
        while (accept(Tok::Plus)) e = RelExpr::closure(e);
        if (peek().kind == Tok::LParen) return rel_application(e);
      } catch (const ParseError&) {
      }
      pos_ = saved;
      next();
      Formula f = formula();
      expect(Tok::RParen, "')'");
      return f;
    }
    const Token& head = peek();
    if (head.kind != Tok::Ident) fail(head, "expected a formula, found '" + head.text + "'");
    if (kKeywords.count(head.text)) fail(head, "unexpected keyword '" + head.text + "'");

    const Tok after = peek(1).kind;
    if (after == Tok::Eq || after == Tok::Neq) {
      Term lhs = term();
      const bool eq = next().kind == Tok::Eq;
      Term rhs = term();
      Formula f = Formula::equal(lhs, rhs);
      return eq ? f : Formula::negate(f);
    }
    next();
    const std::string name = head.text;
    if (name == "wr" && after == Tok::LBracket) {
      next();
      Term object = term();
      expect(Tok::RBracket, "']'");
      auto args = arguments();
      if (args.size() != 2) fail(head, "wr[x] expects 2 arguments");
      return macros::read_from_on(object, args[0], args[1]);
    }
    if (after == Tok::Plus) {
      RelExpr e = named_rexpr(head);
      while (accept(Tok::Plus)) e = RelExpr::closure(e);
      return rel_application(e);
    }
    if (after != Tok::LParen) fail(head, "expected '(' after " + name);
    if (name == "writesx") {
      auto args = arguments();
      if (args.size() != 2) fail(head, "writesx expects 2 arguments");
      return macros::writes_object(args[0], args[1]);
    }
    if (auto it = formula_macros_.find(name); it != formula_macros_.end()) {
      auto args = arguments();
      const auto& m = it->second;
      if (args.size() != m.params.size()) {
        fail(head, name + " expects " + std::to_string(m.params.size()) + " arguments");
      }
      std::map<std::string, Term> replacement;
      for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i].sort() != m.params[i].second) {
          fail(head, "sort mismatch at argument " + std::to_string(i + 1) + " of " + name);
        }
        replacement.emplace(m.params[i].first, args[i]);
      }
      return fol::substitute_terms(freshen(m.body), replacement);
    }
    if (rel_aliases_.count(name) || name == "wr") return rel_application(named_rexpr(head));
    return Formula::atom(name, arguments());
  }

  Formula rel_application(const RelExpr& e) {
    const Token& at = peek();
    auto args = arguments();
    if (args.size() != 2) fail(at, "relation expression applied to " + std::to_string(args.size()) + " arguments");
    return Formula::rel_atom(e, args[0], args[1]);
  }

  std::vector<Term> arguments() {
    expect(Tok::LParen, "'('");
    std::vector<Term> out;
    if (accept(Tok::RParen)) return out;
    do {
      out.push_back(term());
    } while (accept(Tok::Comma));
    expect(Tok::RParen, "')'");
    return out;
  }

  Term term() {
    const Token& t = expect(Tok::Ident, "term");
    for (auto it = scope_.rbegin(); it != scope_.rend(); ++it) {
      if (it->first == t.text) return Term::variable(t.text, it->second);
    }
    if (t.text.size() >= 2 && std::all_of(t.text.begin() + 1, t.text.end(), [](char c) {
          return std::isdigit(static_cast<unsigned char>(c));
        })) {
      std::optional<Sort> s;
      if (t.text[0] == 't') s = Sort::Txn;
      if (t.text[0] == 'x') s = Sort::Obj;
      if (t.text[0] == 'n') s = Sort::Val;
      if (s) return Term::constant(std::stoul(t.text.substr(1)), *s);
    }
    fail(t, "unbound variable " + t.text);
  }

  // Renames every bound variable of a macro body so expansion neither
  // captures nor shadows variables at the use site.
  Formula freshen(const Formula& f) {
    switch (f.kind()) {
      case Formula::Kind::Not: return Formula::negate(freshen(f.child(0)));
      case Formula::Kind::And: return Formula::conj(freshen(f.child(0)), freshen(f.child(1)));
      case Formula::Kind::Or: return Formula::disj(freshen(f.child(0)), freshen(f.child(1)));
      case Formula::Kind::Implies: return Formula::implies(freshen(f.child(0)), freshen(f.child(1)));
      case Formula::Kind::Forall:
      case Formula::Kind::Exists: {
        std::string renamed = f.var() + "'m" + std::to_string(++fresh_);
        Formula body = fol::substitute_terms(f.body(), {{f.var(), Term::variable(renamed, f.var_sort())}});
        body = freshen(body);
        return f.kind() == Formula::Kind::Forall ? Formula::forall(renamed, f.var_sort(), body)
                                                 : Formula::exists(renamed, f.var_sort(), body);
      }
      default: return f;
    }
  }

  // -- relation expressions ----------------------------------------------------
  RelExpr rexpr() {
    RelExpr acc = rcompose();
    while (accept(Tok::Bar)) acc = RelExpr::union_of(acc, rcompose());
    return acc;
  }

  bool starts_rexpr(const Token& t) const {
    return t.kind == Tok::LParen || (t.kind == Tok::Ident && !kKeywords.count(t.text));
  }

  RelExpr rcompose() {
    RelExpr acc = rpostfix();
    // ';' doubles as the statement terminator: it composes only when a
    // relation expression follows.
    while (peek().kind == Tok::Semi && starts_rexpr(peek(1))) {
      next();
      acc = RelExpr::compose(acc, rpostfix());
    }
    return acc;
  }

  RelExpr rpostfix() {
    RelExpr e = rprimary();
    while (accept(Tok::Plus)) e = RelExpr::closure(e);
    return e;
  }

  RelExpr rprimary() {
    if (accept(Tok::LParen)) {
      RelExpr e = rexpr();
      expect(Tok::RParen, "')'");
      return e;
    }
    const Token& t = expect(Tok::Ident, "relation");
    if (kKeywords.count(t.text)) fail(t, "unexpected keyword '" + t.text + "'");
    return named_rexpr(t);
  }

  RelExpr named_rexpr(const Token& t) {
    if (auto it = rel_aliases_.find(t.text); it != rel_aliases_.end()) return it->second;
    if (formula_macros_.count(t.text)) fail(t, t.text + " is a formula macro, not a relation");
    return RelExpr::symbol(t.text);
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  std::vector<std::pair<std::string, Sort>> scope_;
  std::map<std::string, FormulaMacro> formula_macros_;
  std::map<std::string, RelExpr> rel_aliases_;
  std::size_t fresh_ = 0;
};

}  // namespace

ParseResult parse_level_file(std::string_view text) {
  ParseResult result;
  try {
    Parser p(tokenize(text));
    std::vector<SourceDiagnostic> semantic;
    auto levels = p.file(semantic);
    if (semantic.empty()) {
      result.levels = std::move(levels);
    } else {
      result.diagnostics = std::move(semantic);
    }
  } catch (const ParseError& e) {
    result.diagnostics.push_back(e.diagnostic);
  }
  return result;
}

Formula parse_formula(std::string_view text) {
  Parser p(tokenize(text));
  return p.standalone_formula();
}

}  // namespace isolde
