#include "folim/logic.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <set>
#include <unordered_map>

namespace folim {

namespace {

constexpr VertexId kUnbound = std::numeric_limits<VertexId>::max();

struct Token {
  enum class Type { Ident, LParen, RParen, Comma, Dot, Eq, Bang, Amp, Bar, End } type;
  std::string text;
  std::size_t pos = 0;
};

std::vector<Token> lex(std::string_view s) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < s.size()) {
    char c = s[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    if (std::isalnum(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t start = i;
      while (i < s.size() && (std::isalnum(static_cast<unsigned char>(s[i])) || s[i] == '_')) ++i;
      out.push_back({Token::Type::Ident, std::string(s.substr(start, i - start)), start});
      continue;
    }
    Token::Type type;
    switch (c) {
      case '(': type = Token::Type::LParen; break;
      case ')': type = Token::Type::RParen; break;
      case ',': type = Token::Type::Comma; break;
      case '.': type = Token::Type::Dot; break;
      case '=': type = Token::Type::Eq; break;
      case '!': type = Token::Type::Bang; break;
      case '&': type = Token::Type::Amp; break;
      case '|': type = Token::Type::Bar; break;
      default: throw FormulaSyntaxError(i, std::string("unexpected character '") + c + "'");
    }
    out.push_back({type, std::string(1, c), i});
    ++i;
  }
  out.push_back({Token::Type::End, "", s.size()});
  return out;
}

bool all_digits(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); });
}

bool is_reserved(std::string_view w) {
  if (w == "forall" || w == "exists" || w == "kept" || w == "fill") return true;
  if ((w.front() == 'E' || w.front() == 'U') && all_digits(w.substr(1))) return true;
  return w.rfind("forall_", 0) == 0 || w.rfind("exists_", 0) == 0;
}

}  // namespace

class FormulaParser {
 public:
  FormulaParser(std::string_view text, std::optional<int> k) : tokens_(lex(text)), k_(k) {}

  Formula parse() {
    Formula root = formula();
    if (peek().type != Token::Type::End) fail("trailing input");
    finish(root);
    root.names_ = names_;
    std::vector<bool> bound(names_.size(), false);
    std::vector<bool> seen(names_.size(), false);
    collect_free(root, bound, seen, root.free_);
    return root;
  }

 private:
  const Token& peek() const { return tokens_[at_]; }
  const Token& take() { return tokens_[at_++]; }
  [[noreturn]] void fail(const std::string& what) const { throw FormulaSyntaxError(peek().pos, what); }
  void expect(Token::Type type, const char* what) {
    if (peek().type != type) fail(std::string("expected ") + what);
    ++at_;
  }

  int slot(const std::string& name) {
    for (std::size_t i = 0; i < names_.size(); ++i) {
      if (names_[i] == name) return static_cast<int>(i);
    }
    names_.push_back(name);
    return static_cast<int>(names_.size()) - 1;
  }

  int variable() {
    if (peek().type != Token::Type::Ident) fail("expected a variable");
    const Token& t = peek();
    if (is_reserved(t.text) || !std::isalpha(static_cast<unsigned char>(t.text.front())) ||
        t.text.find('_') != std::string::npos) {
      fail("'" + t.text + "' is not a variable name");
    }
    ++at_;
    return slot(t.text);
  }

  bool at_quantifier() const {
    if (peek().type != Token::Type::Ident) return false;
    const std::string& w = peek().text;
    return w == "forall" || w == "exists" || w.rfind("forall_", 0) == 0 ||
           w.rfind("exists_", 0) == 0;
  }

  Formula formula() {
    if (at_quantifier()) return quantified();
    return disjunction();
  }

  Formula quantified() {
    const Token word = take();
    Formula f;
    f.kind_ = word.text.rfind("forall", 0) == 0 ? Formula::Kind::Forall : Formula::Kind::Exists;
    if (word.text.size() > 6) {
      std::string anchor = word.text.substr(7);
      if (anchor.empty() || is_reserved(anchor) ||
          !std::isalpha(static_cast<unsigned char>(anchor.front()))) {
        throw FormulaSyntaxError(word.pos, "bad local quantifier anchor in '" + word.text + "'");
      }
      f.anchor_ = slot(anchor);
    }
    f.first_ = variable();
    if (f.first_ == f.anchor_) fail("local quantifier binds its own anchor");
    expect(Token::Type::Dot, "'.' after quantified variable");
    f.operands_.push_back(formula());
    return f;
  }

  Formula disjunction() {
    Formula left = conjunction();
    while (peek().type == Token::Type::Bar) {
      ++at_;
      Formula f;
      f.kind_ = Formula::Kind::Or;
      f.operands_.push_back(std::move(left));
      f.operands_.push_back(conjunction());
      left = std::move(f);
    }
    return left;
  }

  Formula conjunction() {
    Formula left = unary();
    while (peek().type == Token::Type::Amp) {
      ++at_;
      Formula f;
      f.kind_ = Formula::Kind::And;
      f.operands_.push_back(std::move(left));
      f.operands_.push_back(unary());
      left = std::move(f);
    }
    return left;
  }

  Formula unary() {
    if (peek().type == Token::Type::Bang) {
      ++at_;
      Formula f;
      f.kind_ = Formula::Kind::Not;
      f.operands_.push_back(unary());
      return f;
    }
    if (peek().type == Token::Type::LParen) {
      ++at_;
      Formula inner = formula();
      expect(Token::Type::RParen, "')'");
      return inner;
    }
    if (at_quantifier()) return quantified();
    return atom();
  }

  Formula atom() {
    if (peek().type != Token::Type::Ident) fail("expected an atom");
    const Token word = peek();
    const std::string& w = word.text;
    Formula f;
    auto args = [&](int count) {
      expect(Token::Type::LParen, "'('");
      f.first_ = variable();
      if (count == 2) {
        expect(Token::Type::Comma, "','");
        f.second_ = variable();
      }
      expect(Token::Type::RParen, "')'");
    };
    if ((w.front() == 'E' || w.front() == 'U') && w.size() > 1 && all_digits(w.substr(1))) {
      ++at_;
      int index = std::stoi(w.substr(1));
      if (index < 1) throw FormulaSyntaxError(word.pos, "unknown relation " + w);
      if (w.front() == 'E') {
        if (k_ && index > *k_) throw FormulaSyntaxError(word.pos, "unknown relation " + w);
        f.kind_ = Formula::Kind::Edge;
        f.relation_ = index;
        args(2);
      } else {
        f.kind_ = Formula::Kind::Mark;
        f.relation_ = index;
        args(1);
      }
      return f;
    }
    if (w == "kept" || w == "fill") {
      ++at_;
      f.kind_ = w == "kept" ? Formula::Kind::Kept : Formula::Kind::Fill;
      args(2);
      return f;
    }
    f.kind_ = Formula::Kind::Equal;
    f.first_ = variable();
    expect(Token::Type::Eq, "'=' or a relation");
    f.second_ = variable();
    return f;
  }

  static void finish(Formula& f) {
    f.depth_ = 0;
    f.local_ = true;
    f.max_edge_ = f.kind_ == Formula::Kind::Edge ? f.relation_ : 0;
    f.max_mark_ = f.kind_ == Formula::Kind::Mark ? f.relation_ : 0;
    for (auto& g : f.operands_) {
      finish(g);
      f.depth_ = std::max(f.depth_, g.depth_);
      f.local_ = f.local_ && g.local_;
      f.max_edge_ = std::max(f.max_edge_, g.max_edge_);
      f.max_mark_ = std::max(f.max_mark_, g.max_mark_);
    }
    if (f.kind_ == Formula::Kind::Forall || f.kind_ == Formula::Kind::Exists) {
      f.depth_ += 1;
      if (f.anchor_ < 0) f.local_ = false;
    }
  }

  void collect_free(const Formula& f, std::vector<bool>& bound, std::vector<bool>& seen,
                    std::vector<std::string>& out) const {
    auto use = [&](int s) {
      if (s >= 0 && !bound[s] && !seen[s]) {
        seen[s] = true;
        out.push_back(names_[s]);
      }
    };
    use(f.first_ >= 0 && (f.kind_ == Formula::Kind::Forall || f.kind_ == Formula::Kind::Exists)
            ? -1
            : f.first_);
    use(f.second_);
    if (f.kind_ == Formula::Kind::Forall || f.kind_ == Formula::Kind::Exists) {
      use(f.anchor_);
      bool was = bound[f.first_];
      bound[f.first_] = true;
      collect_free(f.operands_[0], bound, seen, out);
      bound[f.first_] = was;
      return;
    }
    for (const auto& g : f.operands_) collect_free(g, bound, seen, out);
  }

  std::vector<Token> tokens_;
  std::size_t at_ = 0;
  std::optional<int> k_;
  std::vector<std::string> names_;
};

Formula parse_formula(std::string_view text, std::optional<int> k) {
  return FormulaParser(text, k).parse();
}

int Formula::slot_of(std::string_view name) const {
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (names_[i] == name) return static_cast<int>(i);
  }
  return -1;
}

std::string Formula::render(const std::vector<std::string>& names) const {
  auto var = [&](int s) { return names.at(static_cast<std::size_t>(s)); };
  switch (kind_) {
    case Kind::Edge: return "E" + std::to_string(relation_) + "(" + var(first_) + "," + var(second_) + ")";
    case Kind::Kept: return "kept(" + var(first_) + "," + var(second_) + ")";
    case Kind::Fill: return "fill(" + var(first_) + "," + var(second_) + ")";
    case Kind::Mark: return "U" + std::to_string(relation_) + "(" + var(first_) + ")";
    case Kind::Equal: return var(first_) + " = " + var(second_);
    case Kind::Not: return "!" + operands_[0].render(names);
    case Kind::And: return "(" + operands_[0].render(names) + " & " + operands_[1].render(names) + ")";
    case Kind::Or: return "(" + operands_[0].render(names) + " | " + operands_[1].render(names) + ")";
    case Kind::Forall:
    case Kind::Exists: {
      std::string q = kind_ == Kind::Forall ? "forall" : "exists";
      if (anchor_ >= 0) q += "_" + var(anchor_);
      return "(" + q + " " + var(first_) + " . " + operands_[0].render(names) + ")";
    }
  }
  return {};
}

std::string Formula::to_string() const { return render(names_); }

namespace {

bool eval(const RootedKTree& t, const Formula& f, std::vector<VertexId>& env,
          const std::vector<std::string>& names) {
  auto get = [&](int s) {
    VertexId v = env[static_cast<std::size_t>(s)];
    if (v == kUnbound) throw InputError("unbound variable '" + names[static_cast<std::size_t>(s)] + "'");
    return v;
  };
  using K = Formula::Kind;
  switch (f.kind()) {
    case K::Edge: {
      if (f.relation() > t.arity()) throw InputError("relation E" + std::to_string(f.relation()) + " exceeds arity");
      auto p = t.i_parent(get(f.first()), f.relation());
      return p && *p == get(f.second());
    }
    case K::Kept:
    case K::Fill: {
      auto c = t.edge_color(get(f.first()), get(f.second()));
      return c && *c == (f.kind() == K::Kept ? EdgeColor::Kept : EdgeColor::Fill);
    }
    case K::Mark: return t.mark_of(get(f.first())) == f.relation();
    case K::Equal: return get(f.first()) == get(f.second());
    case K::Not: return !eval(t, f.operands()[0], env, names);
    case K::And: return eval(t, f.operands()[0], env, names) && eval(t, f.operands()[1], env, names);
    case K::Or: return eval(t, f.operands()[0], env, names) || eval(t, f.operands()[1], env, names);
    case K::Forall:
    case K::Exists: {
      const bool want = f.kind() == K::Exists;
      auto& slot = env[static_cast<std::size_t>(f.first())];
      const VertexId saved = slot;
      bool result = !want;
      auto body = [&](VertexId v) {
        slot = v;
        if (eval(t, f.operands()[0], env, names) == want) {
          result = want;
          return true;
        }
        return false;
      };
      if (f.anchor() >= 0) {
        VertexId z = get(f.anchor());
        for (VertexId v : t.neighbors(z)) {
          if (body(v)) break;
        }
      } else {
        for (VertexId v = 0; v < t.size(); ++v) {
          if (body(v)) break;
        }
      }
      slot = saved;
      return result;
    }
  }
  return false;
}

}  // namespace

bool evaluate_slots(const RootedKTree& t, const Formula& phi, std::vector<VertexId>& env) {
  if (env.size() != phi.variables().size()) throw InputError("environment size mismatch");
  return eval(t, phi, env, phi.variables());
}

bool evaluate(const RootedKTree& t, const Formula& phi, const Assignment& a) {
  std::vector<VertexId> env(phi.variables().size(), kUnbound);
  for (const auto& [name, v] : a) {
    int s = phi.slot_of(name);
    if (s < 0) continue;
    if (v >= t.size()) throw InputError("assignment of '" + name + "' out of range");
    env[static_cast<std::size_t>(s)] = v;
  }
  return eval(t, phi, env, phi.variables());
}

StonePairing stone_pairing(const RootedKTree& t, const Formula& phi, const StoneOptions& options) {
  const auto& free = phi.free_variables();
  std::vector<int> slots;
  for (const auto& name : free) slots.push_back(phi.slot_of(name));
  const std::size_t n = t.size();
  if (n == 0) throw InputError("Stone pairing on an empty structure");

  // n^l, saturating.
  std::uint64_t total = 1;
  bool overflow = false;
  for (std::size_t r = 0; r < slots.size(); ++r) {
    if (total > std::numeric_limits<std::uint64_t>::max() / n) overflow = true;
    else total *= n;
  }
  std::vector<VertexId> env(phi.variables().size(), kUnbound);
  StonePairing out;
  if (!overflow && total <= options.enumeration_budget &&
      total <= static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max())) {
    std::uint64_t hits = 0;
    std::vector<VertexId> tuple(slots.size(), 0);
    for (std::uint64_t r = 0; r < total; ++r) {
      for (std::size_t s = 0; s < slots.size(); ++s) env[static_cast<std::size_t>(slots[s])] = tuple[s];
      if (eval(t, phi, env, phi.variables())) ++hits;
      for (std::size_t s = slots.size(); s-- > 0;) {
        if (++tuple[s] < n) break;
        tuple[s] = 0;
      }
    }
    out.value = Rational(static_cast<std::int64_t>(hits), static_cast<std::int64_t>(total));
    out.tuples = total;
    return out;
  }
  if (!options.allow_sampling) {
    throw BudgetExceeded("Stone pairing needs " + (overflow ? std::string("> 2^64") : std::to_string(total)) +
                         " tuples, over the enumeration budget");
  }
  std::mt19937_64 rng(options.seed);
  std::uniform_int_distribution<VertexId> pick(0, static_cast<VertexId>(n - 1));
  std::uint64_t hits = 0;
  for (std::uint64_t r = 0; r < options.samples; ++r) {
    for (int s : slots) env[static_cast<std::size_t>(s)] = pick(rng);
    if (eval(t, phi, env, phi.variables())) ++hits;
  }
  out.value = Rational(static_cast<std::int64_t>(hits), static_cast<std::int64_t>(options.samples));
  out.estimated = true;
  out.tuples = options.samples;
  const double p = static_cast<double>(hits) / static_cast<double>(options.samples);
  out.standard_error = std::sqrt(p * (1 - p) / static_cast<double>(options.samples));
  return out;
}

namespace {

// Exhaustive pebble game.  A position is a pair of equally long tuples; the
// duplicator survives a position iff the pebbled tuples have the same atomic
// type, and wins from it with r rounds left iff every spoiler move has an
// answer that wins with r-1 rounds left.
class PebbleGame {
 public:
  PebbleGame(const RootedKTree& a, const RootedKTree& b, int d, bool local)
      : a_(a), b_(b), d_(d), local_(local) {}

  bool duplicator_wins(std::vector<VertexId>& x, std::vector<VertexId>& y, int rounds) {
    if (!same_atomic_type(x, y)) return false;
    if (rounds == 0) return true;
    std::string key = encode(x, y, rounds);
    if (auto it = memo_.find(key); it != memo_.end()) return it->second;
    bool wins = answers_all(a_, b_, x, y, rounds, false) && answers_all(b_, a_, y, x, rounds, true);
    memo_.emplace(std::move(key), wins);
    return wins;
  }

 private:
  std::vector<VertexId> moves(const RootedKTree& t, const std::vector<VertexId>& pebbled) const {
    if (!local_ || pebbled.empty()) {
      std::vector<VertexId> all(t.size());
      for (VertexId v = 0; v < t.size(); ++v) all[v] = v;
      return all;
    }
    std::set<VertexId> near;
    for (VertexId p : pebbled) {
      for (VertexId q : t.neighbors(p)) near.insert(q);
    }
    return {near.begin(), near.end()};
  }

  // Spoiler plays in `s` (extending xs); duplicator answers in `o` (extending ys).
  bool answers_all(const RootedKTree& s, const RootedKTree& o, std::vector<VertexId>& xs,
                   std::vector<VertexId>& ys, int rounds, bool swapped) {
    const auto spoiler_moves = moves(s, xs);
    const auto replies = moves(o, ys);
    for (VertexId m : spoiler_moves) {
      xs.push_back(m);
      bool answered = false;
      for (VertexId r : replies) {
        ys.push_back(r);
        answered = swapped ? duplicator_wins(ys, xs, rounds - 1) : duplicator_wins(xs, ys, rounds - 1);
        ys.pop_back();
        if (answered) break;
      }
      xs.pop_back();
      if (!answered) return false;
    }
    return true;
  }

  int visible_mark(const RootedKTree& t, VertexId v) const {
    int m = t.mark_of(v);
    return m <= d_ ? m : 0;
  }

  static int relation(const RootedKTree& t, VertexId p, VertexId q) {
    if (p == q) return -1;
    int code = t.edge_index(p, q);
    code = code * 16 + t.edge_index(q, p);
    auto c = t.edge_color(p, q);
    return code * 3 + (c ? 1 + static_cast<int>(*c) : 0);
  }

  bool same_atomic_type(const std::vector<VertexId>& x, const std::vector<VertexId>& y) const {
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (visible_mark(a_, x[i]) != visible_mark(b_, y[i])) return false;
      for (std::size_t j = i + 1; j < x.size(); ++j) {
        if (relation(a_, x[i], x[j]) != relation(b_, y[i], y[j])) return false;
      }
    }
    return true;
  }

  static std::string encode(const std::vector<VertexId>& x, const std::vector<VertexId>& y, int r) {
    std::string key;
    key.reserve((x.size() + y.size()) * 4 + 1);
    key.push_back(static_cast<char>(r));
    auto put = [&](VertexId v) { key.append(reinterpret_cast<const char*>(&v), sizeof v); };
    for (VertexId v : x) put(v);
    key.push_back('|');
    for (VertexId v : y) put(v);
    return key;
  }

  const RootedKTree& a_;
  const RootedKTree& b_;
  int d_;
  bool local_;
  std::unordered_map<std::string, bool> memo_;
};

}  // namespace

Player local_ef_winner(const RootedKTree& t, VertexId u, const RootedKTree& t2, VertexId u2, int d) {
  if (u >= t.size() || u2 >= t2.size()) throw InputError("start vertex out of range");
  if (d < 0) throw InputError("negative game length");
  PebbleGame game(t, t2, d, true);
  std::vector<VertexId> x{u}, y{u2};
  return game.duplicator_wins(x, y, d) ? Player::Duplicator : Player::Spoiler;
}

bool global_ef_equivalent(const RootedKTree& t, const RootedKTree& t2, int d) {
  if (d < 0) throw InputError("negative game length");
  PebbleGame game(t, t2, d, false);
  std::vector<VertexId> x, y;
  return game.duplicator_wins(x, y, d);
}

}  // namespace folim
