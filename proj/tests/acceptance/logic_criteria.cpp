#include <map>
#include <mutex>
#include <random>
#include <set>
#include <sstream>

#include "criteria.hpp"
#include "folim/encoder.hpp"
#include "folim/families.hpp"
#include "folim/hintikka.hpp"
#include "folim/logic.hpp"

namespace acceptance {

using namespace folim;

namespace {

// ---------------------------------------------------------------------------
// Criterion 1

std::string canon(const std::vector<int>& parent, const std::vector<EdgeColor>& color, int v) {
  std::vector<std::string> parts;
  for (int c = 0; c < static_cast<int>(parent.size()); ++c) {
    if (parent[c] == v) parts.push_back((color[c] == EdgeColor::Fill ? "f" : "k") + canon(parent, color, c));
  }
  std::sort(parts.begin(), parts.end());
  std::string s = "(";
  for (const auto& p : parts) s += p;
  return s + ")";
}

// Every 2-edge-colored rooted 1-tree with at most max_n vertices, one per
// isomorphism class.
std::vector<RootedKTree> all_rooted_1trees(int max_n) {
  std::vector<RootedKTree> out;
  std::set<std::string> seen;
  for (int n = 1; n <= max_n; ++n) {
    std::vector<int> parent(static_cast<std::size_t>(n), -1);
    std::vector<EdgeColor> color(static_cast<std::size_t>(n), EdgeColor::Kept);
    std::function<void(int)> rec = [&](int v) {
      if (v == n) {
        if (!seen.insert(canon(parent, color, 0)).second) return;
        RootedKTree t(static_cast<std::size_t>(n), 1);
        for (int w = 1; w < n; ++w) t.add_parent(static_cast<VertexId>(w), 1, static_cast<VertexId>(parent[w]), color[w]);
        out.push_back(std::move(t));
        return;
      }
      for (int p = 0; p < v; ++p) {
        for (auto c : {EdgeColor::Kept, EdgeColor::Fill}) {
          parent[v] = p;
          color[v] = c;
          rec(v + 1);
        }
      }
    };
    rec(1);
  }
  return out;
}

struct OracleTally {
  std::uint64_t pairs = 0, duplicator = 0, mismatches = 0;
  std::string first;
};

// vertex_type equality against the local game on every ordered pair i <= j.
OracleTally compare_types_and_games(const std::vector<RootedKTree>& trees, int max_d) {
  std::vector<std::pair<std::size_t, VertexId>> verts;
  for (std::size_t g = 0; g < trees.size(); ++g) {
    for (VertexId v = 0; v < trees[g].size(); ++v) verts.push_back({g, v});
  }
  std::vector<std::vector<TypeId>> types(static_cast<std::size_t>(max_d + 1));
  for (int d = 1; d <= max_d; ++d) {
    for (auto [g, v] : verts) types[static_cast<std::size_t>(d)].push_back(vertex_type(trees[g], v, d));
  }
  std::vector<OracleTally> part(workers());
  parallel_blocks(verts.size(), [&](std::size_t b, std::size_t e, unsigned w) {
    auto& acc = part[w];
    for (std::size_t i = b; i < e; ++i) {
      for (std::size_t j = i; j < verts.size(); ++j) {
        for (int d = 1; d <= max_d; ++d) {
          const bool same = types[static_cast<std::size_t>(d)][i] == types[static_cast<std::size_t>(d)][j];
          const bool dup = local_ef_winner(trees[verts[i].first], verts[i].second, trees[verts[j].first],
                                           verts[j].second, d) == Player::Duplicator;
          ++acc.pairs;
          acc.duplicator += dup;
          if (same != dup && acc.mismatches++ == 0) {
            std::ostringstream os;
            os << "tree " << verts[i].first << " vertex " << verts[i].second << " vs tree " << verts[j].first
               << " vertex " << verts[j].second << " at d=" << d << ": types " << (same ? "equal" : "differ")
               << ", game " << (dup ? "duplicator" : "spoiler");
            acc.first = os.str();
          }
        }
      }
    }
  });
  OracleTally t;
  for (const auto& p : part) {
    t.pairs += p.pairs;
    t.duplicator += p.duplicator;
    t.mismatches += p.mismatches;
    if (t.first.empty()) t.first = p.first;
  }
  return t;
}

// ---------------------------------------------------------------------------
// Criterion 2: formulas built and evaluated here, independently of the parser
// and evaluator.

enum class FK { Edge, Kept, Fill, Mark, Eq, Not, And, Or, Exists, Forall };

struct Fm {
  FK kind = FK::Eq;
  int rel = 0;
  int a = 0, b = 0;  // variables; for quantifiers a = anchor, b = bound
  std::vector<Fm> ops;
};

const char* kNames[] = {"x", "y", "u", "v"};

std::string render(const Fm& f) {
  auto n = [](int v) { return std::string(kNames[v]); };
  switch (f.kind) {
    case FK::Edge: return "E" + std::to_string(f.rel) + "(" + n(f.a) + "," + n(f.b) + ")";
    case FK::Kept: return "kept(" + n(f.a) + "," + n(f.b) + ")";
    case FK::Fill: return "fill(" + n(f.a) + "," + n(f.b) + ")";
    case FK::Mark: return "U" + std::to_string(f.rel) + "(" + n(f.a) + ")";
    case FK::Eq: return n(f.a) + " = " + n(f.b);
    case FK::Not: return "!(" + render(f.ops[0]) + ")";
    case FK::And: return "(" + render(f.ops[0]) + " & " + render(f.ops[1]) + ")";
    case FK::Or: return "(" + render(f.ops[0]) + " | " + render(f.ops[1]) + ")";
    case FK::Exists:
    case FK::Forall:
      return std::string("(") + (f.kind == FK::Exists ? "exists_" : "forall_") + n(f.a) + " " + n(f.b) + " . " +
             render(f.ops[0]) + ")";
  }
  return "";
}

struct Gen {
  std::mt19937_64 rng;
  int k = 1;
  int budget = 0;

  int pick(const std::vector<int>& scope) { return scope[rng() % scope.size()]; }

  Fm atom(const std::vector<int>& scope) {
    Fm f;
    switch (rng() % 5) {
      case 0: f.kind = FK::Edge; f.rel = 1 + static_cast<int>(rng() % static_cast<unsigned>(k)); break;
      case 1: f.kind = FK::Kept; break;
      case 2: f.kind = FK::Fill; break;
      case 3: f.kind = FK::Mark; f.rel = 1 + static_cast<int>(rng() % 2); break;
      default: f.kind = FK::Eq; break;
    }
    f.a = pick(scope);
    f.b = pick(scope);
    return f;
  }

  Fm formula(int depth_left, std::vector<int> scope) {
    --budget;
    const unsigned roll = rng() % 100;
    if (budget > 0 && depth_left > 0 && roll < 45) {
      Fm f;
      f.kind = rng() % 2 ? FK::Exists : FK::Forall;
      f.a = pick(scope);
      f.b = std::find(scope.begin(), scope.end(), 2) == scope.end() ? 2 : 3;
      scope.push_back(f.b);
      f.ops.push_back(formula(depth_left - 1, scope));
      return f;
    }
    if (budget > 0 && roll < 75) {
      Fm f;
      const unsigned c = rng() % 3;
      f.kind = c == 0 ? FK::Not : c == 1 ? FK::And : FK::Or;
      f.ops.push_back(formula(depth_left, scope));
      if (f.kind != FK::Not) f.ops.push_back(formula(depth_left, scope));
      return f;
    }
    return atom(scope);
  }
};

void free_vars(const Fm& f, std::set<int> bound, std::set<int>& out) {
  auto use = [&](int v) {
    if (!bound.count(v)) out.insert(v);
  };
  switch (f.kind) {
    case FK::Edge:
    case FK::Kept:
    case FK::Fill:
    case FK::Eq: use(f.a); use(f.b); return;
    case FK::Mark: use(f.a); return;
    case FK::Exists:
    case FK::Forall:
      use(f.a);
      bound.insert(f.b);
      free_vars(f.ops[0], bound, out);
      return;
    default:
      for (const auto& o : f.ops) free_vars(o, bound, out);
  }
}

// The structure read straight from the parent slots.
struct Raw {
  std::size_t n = 0;
  int k = 0;
  std::vector<std::vector<long>> parent;  // -1: none
  std::vector<std::vector<EdgeColor>> color;
  std::vector<std::set<int>> marks;
  std::vector<std::set<VertexId>> adj;

  explicit Raw(const RootedKTree& t) : n(t.size()), k(t.arity()) {
    parent.assign(n, std::vector<long>(static_cast<std::size_t>(k), -1));
    color.assign(n, std::vector<EdgeColor>(static_cast<std::size_t>(k), EdgeColor::Kept));
    marks.resize(n);
    adj.resize(n);
    for (VertexId v = 0; v < n; ++v) {
      for (int i = 1; i <= k; ++i) {
        if (auto p = t.i_parent(v, i)) {
          parent[v][static_cast<std::size_t>(i - 1)] = static_cast<long>(*p);
          color[v][static_cast<std::size_t>(i - 1)] = *t.i_edge_color(v, i);
          adj[v].insert(*p);
          adj[*p].insert(v);
        }
      }
    }
    for (const auto& [j, v] : t.marks()) marks[v].insert(j);
  }

  bool colored(VertexId a, VertexId b, EdgeColor c) const {
    for (int i = 0; i < k; ++i) {
      if (parent[a][static_cast<std::size_t>(i)] == static_cast<long>(b) && color[a][static_cast<std::size_t>(i)] == c)
        return true;
      if (parent[b][static_cast<std::size_t>(i)] == static_cast<long>(a) && color[b][static_cast<std::size_t>(i)] == c)
        return true;
    }
    return false;
  }

  bool eval(const Fm& f, std::vector<VertexId>& env) const {
    switch (f.kind) {
      case FK::Edge: return parent[env[f.a]][static_cast<std::size_t>(f.rel - 1)] == static_cast<long>(env[f.b]);
      case FK::Kept: return colored(env[f.a], env[f.b], EdgeColor::Kept);
      case FK::Fill: return colored(env[f.a], env[f.b], EdgeColor::Fill);
      case FK::Mark: return marks[env[f.a]].count(f.rel) > 0;
      case FK::Eq: return env[f.a] == env[f.b];
      case FK::Not: return !eval(f.ops[0], env);
      case FK::And: return eval(f.ops[0], env) && eval(f.ops[1], env);
      case FK::Or: return eval(f.ops[0], env) || eval(f.ops[1], env);
      case FK::Exists:
      case FK::Forall: {
        const VertexId saved = env[f.b];
        const bool exists = f.kind == FK::Exists;
        bool result = !exists;
        for (VertexId w : adj[env[f.a]]) {
          env[f.b] = w;
          if (eval(f.ops[0], env) == exists) {
            result = exists;
            break;
          }
        }
        env[f.b] = saved;
        return result;
      }
    }
    return false;
  }
};

Rational brute_force_pairing(const RootedKTree& t, const Fm& f, const std::vector<int>& free) {
  Raw raw(t);
  std::vector<VertexId> env(4, 0);
  std::uint64_t hits = 0, total = 0;
  std::function<void(std::size_t)> rec = [&](std::size_t pos) {
    if (pos == free.size()) {
      ++total;
      hits += raw.eval(f, env);
      return;
    }
    for (VertexId v = 0; v < raw.n; ++v) {
      env[static_cast<std::size_t>(free[pos])] = v;
      rec(pos + 1);
    }
  };
  rec(0);
  return Rational(static_cast<std::int64_t>(hits), static_cast<std::int64_t>(total));
}

RootedKTree small_marked_tree(std::mt19937_64& rng, int k) {
  const std::size_t n = static_cast<std::size_t>(k + 1) + rng() % static_cast<std::size_t>(8 - k);
  auto t = generate_random_rooted_ktree(n, k, rng());
  const VertexId a = static_cast<VertexId>(rng() % n);
  t.set_mark(1, a);
  const VertexId b = static_cast<VertexId>((a + 1 + rng() % (n - 1)) % n);
  t.set_mark(2, b);
  return t;
}

// ---------------------------------------------------------------------------
// Criterion 3

struct PoolGraph {
  RootedKTree t;
  TypeHistogram h2, h3;
  std::string label;
};

std::string text_of(const RootedKTree& t) {
  std::ostringstream os;
  write_ktree(os, t);
  return os.str();
}

std::vector<PoolGraph> hanf_pool() {
  std::vector<std::pair<RootedKTree, std::string>> raw;
  for (std::size_t n = 2; n <= 8; ++n) {
    raw.push_back({families::path(n), "P" + std::to_string(n)});
    raw.push_back({families::star(n), "S" + std::to_string(n)});
  }
  for (std::uint64_t s = 0; s < 120; ++s) {
    const int k = 1 + static_cast<int>(s % 2);
    const std::size_t n = static_cast<std::size_t>(k + 1) + s % static_cast<std::size_t>(8 - k);
    raw.push_back({generate_random_rooted_ktree(n, k, 500 + s), "R" + std::to_string(s)});
  }
  // repeated copies of small pieces
  for (std::uint64_t s = 0; s < 40; ++s) {
    const int k = 1 + static_cast<int>(s % 2);
    const std::size_t n = static_cast<std::size_t>(k) + s % 3;
    auto piece = generate_random_rooted_ktree(std::max<std::size_t>(n, static_cast<std::size_t>(k)), k, 900 + s);
    auto acc = piece;
    for (int m = 2; acc.size() + piece.size() <= 8; ++m) {
      acc = acc.disjoint_union(piece);
      raw.push_back({acc, "U" + std::to_string(s) + "x" + std::to_string(m)});
    }
  }
  for (std::size_t a = 2; a <= 4; ++a) {
    for (std::size_t b = 2; a + b <= 8; ++b) {
      raw.push_back({families::path(a).disjoint_union(families::path(b)), "P" + std::to_string(a) + "+P" + std::to_string(b)});
    }
  }
  // c1 copies of one small piece next to c2 copies of another, <= 8 vertices
  std::vector<std::pair<RootedKTree, std::string>> pieces;
  pieces.push_back({RootedKTree(1, 1), "K1"});
  for (auto c : {EdgeColor::Kept, EdgeColor::Fill}) {
    RootedKTree e(2, 1);
    e.add_parent(1, 1, 0, c);
    pieces.push_back({e, c == EdgeColor::Kept ? "Pk" : "Pf"});
  }
  pieces.push_back({families::path(3), "P3"});
  pieces.push_back({families::star(3), "S3"});
  auto copies = [](const RootedKTree& p, int c) {
    auto acc = p;
    for (int m = 1; m < c; ++m) acc = acc.disjoint_union(p);
    return acc;
  };
  for (std::size_t a = 0; a < pieces.size(); ++a) {
    const auto na = pieces[a].first.size();
    for (int c1 = 2; c1 * na <= 8; ++c1) {
      raw.push_back({copies(pieces[a].first, c1), std::to_string(c1) + pieces[a].second});
      for (std::size_t b = a + 1; b < pieces.size(); ++b) {
        for (int c2 = 1; c1 * na + c2 * pieces[b].first.size() <= 8; ++c2) {
          raw.push_back({copies(pieces[a].first, c1).disjoint_union(copies(pieces[b].first, c2)),
                         std::to_string(c1) + pieces[a].second + "+" + std::to_string(c2) + pieces[b].second});
        }
      }
    }
  }
  std::vector<PoolGraph> out;
  std::set<std::string> seen;
  for (auto& [t, label] : raw) {
    if (t.size() > 8 || !seen.insert(text_of(t)).second) continue;
    out.push_back({t, type_histogram(t, 2), type_histogram(t, 3), label});
  }
  return out;
}

}  // namespace

Outcome type_oracle() {
  auto ones = all_rooted_1trees(6);
  std::vector<RootedKTree> twos;
  std::mt19937_64 rng(20241);
  for (int s = 0; s < 200; ++s) {
    const std::size_t n = 3 + rng() % 6;
    auto t = generate_random_rooted_ktree(n, 2, rng());
    if (s % 2 == 0) t.set_mark(1 + static_cast<int>(rng() % 2), static_cast<VertexId>(rng() % n));
    twos.push_back(std::move(t));
  }
  auto a = compare_types_and_games(ones, 3);
  auto b = compare_types_and_games(twos, 3);
  std::ostringstream os;
  os << ones.size() << " rooted 1-trees (all, <= 6 vertices), " << twos.size() << " rooted 2-trees; "
     << a.pairs + b.pairs << " (pair, d) comparisons, " << a.duplicator + b.duplicator << " duplicator wins, "
     << a.mismatches + b.mismatches << " mismatches";
  if (!a.first.empty()) os << "; 1-trees: " << a.first;
  if (!b.first.empty()) os << "; 2-trees: " << b.first;
  return {a.mismatches + b.mismatches == 0 && a.pairs > 0 && b.pairs > 0, os.str()};
}

Outcome stone_pairings() {
  std::mt19937_64 rng(777);
  int formulas = 0, comparisons = 0, mismatches = 0, nontrivial = 0;
  std::string first;
  while (formulas < 100) {
    const int k = 1 + static_cast<int>(rng() % 2);
    Gen gen{std::mt19937_64(rng()), k, 12};
    const int l = 1 + static_cast<int>(rng() % 2);
    std::vector<int> scope = l == 1 ? std::vector<int>{0} : std::vector<int>{0, 1};
    Fm f = gen.formula(2, scope);
    std::set<int> fv;
    free_vars(f, {}, fv);
    for (int v : scope) {
      if (!fv.count(v)) {
        Fm eq;
        eq.kind = FK::Eq;
        eq.a = eq.b = v;
        Fm both;
        both.kind = FK::And;
        both.ops = {f, eq};
        f = both;
      }
    }
    const std::string text = render(f);
    const Formula phi = parse_formula(text);
    if (!phi.is_local() || phi.quantifier_depth() > 2 || static_cast<int>(phi.free_variables().size()) != l) {
      return {false, "generated formula misparsed: " + text};
    }
    ++formulas;
    for (int g = 0; g < 5; ++g) {
      auto t = small_marked_tree(rng, k);
      const Rational want = brute_force_pairing(t, f, scope);
      const Rational got = stone_pairing(t, phi).value;
      ++comparisons;
      nontrivial += want != Rational(0) && want != Rational(1);
      if (got != want && mismatches++ == 0) {
        std::ostringstream os;
        os << text << " on a " << t.size() << "-vertex " << t.arity() << "-tree: " << got << " vs " << want;
        first = os.str();
      }
    }
  }
  std::ostringstream os;
  os << formulas << " formulas, " << comparisons << " exact comparisons (" << nontrivial
     << " strictly between 0 and 1), " << mismatches << " mismatches";
  if (!first.empty()) os << "; first: " << first;
  return {mismatches == 0, os.str()};
}

Outcome hanf() {
  const auto pool = hanf_pool();
  // Pairs certified non-isomorphic by size or depth-3 histogram; even ones
  // search for the threshold, odd ones validate it.
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    for (std::size_t j = i + 1; j < pool.size(); ++j) {
      if (pool[i].t.size() == pool[j].t.size() && pool[i].h3.counts == pool[j].h3.counts) continue;
      pairs.push_back({i, j});
    }
  }
  std::ostringstream os;
  int gamma = 0;
  std::map<int, std::pair<int, int>> searched;  // gamma -> (candidates, failures)
  for (int g = 1; g <= 4 && gamma == 0; ++g) {
    int cand = 0, fail = 0;
    for (std::size_t p = 0; p < pairs.size(); p += 2) {
      const auto& [i, j] = pairs[p];
      if (!hanf_equivalent(pool[i].h2, pool[j].h2, static_cast<std::size_t>(g))) continue;
      ++cand;
      fail += !global_ef_equivalent(pool[i].t, pool[j].t, 2);
    }
    searched[g] = {cand, fail};
    if (cand > 0 && fail == 0) gamma = g;
  }
  os << "pool " << pool.size() << " graphs; search";
  for (const auto& [g, cf] : searched) os << " G=" << g << ":" << cf.first << " pairs/" << cf.second << " failures";
  if (gamma == 0) return {false, os.str() + "; no threshold <= 4 without failures"};

  int validated = 0, failures = 0;
  std::string first;
  for (std::size_t p = 1; p < pairs.size() && validated < 50; p += 2) {
    const auto& [i, j] = pairs[p];
    if (!hanf_equivalent(pool[i].h2, pool[j].h2, static_cast<std::size_t>(gamma))) continue;
    ++validated;
    if (!global_ef_equivalent(pool[i].t, pool[j].t, 2) && failures++ == 0) {
      first = pool[i].label + " vs " + pool[j].label;
    }
  }
  os << "; held-out at D=2, G=" << gamma << ": " << validated << " pairs, " << failures << " not 2-equivalent";
  if (!first.empty()) os << " (first " << first << ")";
  return {validated >= 50 && failures == 0, os.str()};
}

Outcome encoder_round_trip() {
  std::mt19937_64 rng(4242);
  int cases = 0, invalid = 0, differ = 0, not_feasible = 0, fill_edges = 0;
  std::string first;
  for (; cases < 200; ++cases) {
    const std::size_t n = 3 + rng() % 18;
    const auto host = generate_random_rooted_ktree(n, 2, rng());
    PlainGraph g(n);
    std::set<std::pair<VertexId, VertexId>> want;
    for (VertexId v = 0; v < n; ++v) {
      for (int i = 1; i <= 2; ++i) {
        auto p = host.i_parent(v, i);
        if (!p || rng() % 2) continue;
        g.add_edge(v, *p);
        want.insert(std::minmax(v, *p));
      }
    }
    auto dec = exact_tree_decomposition(g, 2);
    if (dec.status != DecompositionStatus::Feasible) {
      ++not_feasible;
      continue;
    }
    const auto t = encode_as_rooted_ktree(g, *dec.decomposition, 2);
    if (!validate_rooted_ktree(t).ok) {
      if (invalid++ == 0 && first.empty()) first = "invalid encoding, case " + std::to_string(cases);
      continue;
    }
    // KEPT edges read from the parent slots
    std::set<std::pair<VertexId, VertexId>> got;
    for (VertexId v = 0; v < t.size(); ++v) {
      for (int i = 1; i <= t.arity(); ++i) {
        auto p = t.i_parent(v, i);
        if (!p) continue;
        if (*t.i_edge_color(v, i) == EdgeColor::Kept) {
          got.insert(std::minmax(v, *p));
        } else {
          ++fill_edges;
        }
      }
    }
    if (t.size() != n || got != want) {
      if (differ++ == 0 && first.empty()) first = "KEPT subgraph differs, case " + std::to_string(cases);
    }
  }
  std::ostringstream os;
  os << cases << " subgraphs of random 2-trees (n <= 20): " << invalid << " invalid, " << differ
     << " with a different KEPT subgraph, " << not_feasible << " not decomposed; " << fill_edges
     << " FILL edges added";
  if (!first.empty()) os << "; " << first;
  return {invalid == 0 && differ == 0 && not_feasible == 0, os.str()};
}

}  // namespace acceptance
