#include "folim/encoder.hpp"

#include <algorithm>
#include <deque>
#include <functional>
#include <istream>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>
#include <unordered_set>

#include "folim/errors.hpp"

namespace folim {

int TreeDecomposition::width() const {
  std::size_t widest = 0;
  for (const auto& bag : bags) widest = std::max(widest, bag.size());
  return static_cast<int>(widest) - 1;
}

std::string decomposition_defect(const PlainGraph& g, const TreeDecomposition& d, int k) {
  const std::size_t n = g.size();
  if (d.bags.size() != d.tree.size()) return "tree adjacency size differs from bag count";
  if (n > 0 && d.bags.empty()) return "no bags";
  if (!d.bags.empty() && d.root >= d.bags.size()) return "root out of range";
  for (std::size_t b = 0; b < d.bags.size(); ++b) {
    if (static_cast<int>(d.bags[b].size()) > k + 1) {
      return "bag " + std::to_string(b) + " exceeds width " + std::to_string(k);
    }
    for (VertexId v : d.bags[b]) {
      if (v >= n) return "bag " + std::to_string(b) + " holds an unknown vertex";
    }
    for (std::size_t c : d.tree[b]) {
      if (c >= d.bags.size()) return "tree edge to unknown bag";
    }
  }
  // Tree shape: connected and |E| = |B| - 1.
  std::size_t edge_ends = 0;
  for (const auto& adj : d.tree) edge_ends += adj.size();
  if (!d.bags.empty() && edge_ends != 2 * (d.bags.size() - 1)) return "bag graph is not a tree";
  std::vector<bool> reached(d.bags.size(), false);
  std::vector<std::size_t> stack;
  if (!d.bags.empty()) {
    stack.push_back(d.root);
    reached[d.root] = true;
  }
  while (!stack.empty()) {
    std::size_t b = stack.back();
    stack.pop_back();
    for (std::size_t c : d.tree[b]) {
      if (!reached[c]) {
        reached[c] = true;
        stack.push_back(c);
      }
    }
  }
  if (std::find(reached.begin(), reached.end(), false) != reached.end()) {
    return "bag graph is not connected";
  }

  std::vector<std::vector<std::size_t>> holders(n);
  for (std::size_t b = 0; b < d.bags.size(); ++b) {
    for (VertexId v : d.bags[b]) holders[v].push_back(b);
  }
  for (VertexId v = 0; v < n; ++v) {
    if (holders[v].empty()) return "vertex " + std::to_string(v) + " in no bag";
    std::set<std::size_t> mine(holders[v].begin(), holders[v].end());
    std::set<std::size_t> seen{holders[v].front()};
    std::vector<std::size_t> todo{holders[v].front()};
    while (!todo.empty()) {
      std::size_t b = todo.back();
      todo.pop_back();
      for (std::size_t c : d.tree[b]) {
        if (mine.count(c) && seen.insert(c).second) todo.push_back(c);
      }
    }
    if (seen.size() != mine.size()) {
      return "bags holding vertex " + std::to_string(v) + " are not connected";
    }
  }
  for (const auto& [u, v] : g.edges()) {
    bool covered = false;
    for (std::size_t b : holders[u]) {
      if (std::binary_search(d.bags[b].begin(), d.bags[b].end(), v)) covered = true;
    }
    if (!covered) {
      return "edge " + std::to_string(u) + "-" + std::to_string(v) + " in no bag";
    }
  }
  return {};
}

namespace {

class Bitset {
 public:
  explicit Bitset(std::size_t n = 0) : words_((n + 63) / 64, 0) {}
  void set(std::size_t i) { words_[i / 64] |= std::uint64_t{1} << (i % 64); }
  void reset(std::size_t i) { words_[i / 64] &= ~(std::uint64_t{1} << (i % 64)); }
  bool test(std::size_t i) const { return (words_[i / 64] >> (i % 64)) & 1U; }
  std::size_t count() const {
    std::size_t c = 0;
    for (auto w : words_) c += static_cast<std::size_t>(__builtin_popcountll(w));
    return c;
  }
  Bitset operator&(const Bitset& o) const {
    Bitset r = *this;
    for (std::size_t i = 0; i < words_.size(); ++i) r.words_[i] &= o.words_[i];
    return r;
  }
  template <typename F>
  void for_each(F&& f) const {
    for (std::size_t w = 0; w < words_.size(); ++w) {
      auto bits = words_[w];
      while (bits) {
        int t = __builtin_ctzll(bits);
        f(w * 64 + static_cast<std::size_t>(t));
        bits &= bits - 1;
      }
    }
  }
  const std::vector<std::uint64_t>& words() const { return words_; }
  friend bool operator==(const Bitset&, const Bitset&) = default;

 private:
  std::vector<std::uint64_t> words_;
};

struct BitsetHash {
  std::size_t operator()(const Bitset& b) const {
    std::size_t h = 0x9e3779b97f4a7c15ULL;
    for (auto w : b.words()) h ^= std::hash<std::uint64_t>{}(w) + 0x9e3779b9 + (h << 6) + (h >> 2);
    return h;
  }
};

// Fill graph restricted to the vertices not yet eliminated.
struct FillGraph {
  std::vector<Bitset> adj;
  Bitset alive;

  explicit FillGraph(const PlainGraph& g) : adj(g.size(), Bitset(g.size())), alive(g.size()) {
    for (VertexId v = 0; v < g.size(); ++v) {
      alive.set(v);
      for (VertexId u : g.neighbors(v)) adj[v].set(u);
    }
  }
  std::size_t degree(std::size_t v) const { return (adj[v] & alive).count(); }
  bool simplicial(std::size_t v) const {
    Bitset nb = adj[v] & alive;
    bool ok = true;
    nb.for_each([&](std::size_t a) {
      nb.for_each([&](std::size_t b) {
        if (a < b && !adj[a].test(b)) ok = false;
      });
    });
    return ok;
  }
  void eliminate(std::size_t v) {
    Bitset nb = adj[v] & alive;
    nb.for_each([&](std::size_t a) {
      nb.for_each([&](std::size_t b) {
        if (a != b) adj[a].set(b);
      });
    });
    alive.reset(v);
  }
};

int degeneracy(const PlainGraph& g) {
  std::vector<std::size_t> deg(g.size());
  for (VertexId v = 0; v < g.size(); ++v) deg[v] = g.neighbors(v).size();
  std::vector<bool> gone(g.size(), false);
  int best = 0;
  for (std::size_t round = 0; round < g.size(); ++round) {
    std::size_t pick = g.size();
    for (VertexId v = 0; v < g.size(); ++v) {
      if (!gone[v] && (pick == g.size() || deg[v] < deg[pick])) pick = v;
    }
    best = std::max(best, static_cast<int>(deg[pick]));
    gone[pick] = true;
    for (VertexId u : g.neighbors(static_cast<VertexId>(pick))) {
      if (!gone[u]) --deg[u];
    }
  }
  return best;
}

std::vector<VertexId> min_degree_order(const PlainGraph& g, int* width) {
  FillGraph f(g);
  std::vector<VertexId> order;
  int w = 0;
  for (std::size_t round = 0; round < g.size(); ++round) {
    std::size_t pick = g.size();
    std::size_t pick_deg = 0;
    f.alive.for_each([&](std::size_t v) {
      std::size_t d = f.degree(v);
      if (pick == g.size() || d < pick_deg) {
        pick = v;
        pick_deg = d;
      }
    });
    w = std::max(w, static_cast<int>(pick_deg));
    order.push_back(static_cast<VertexId>(pick));
    f.eliminate(pick);
  }
  *width = w;
  return order;
}

class Search {
 public:
  Search(const PlainGraph& g, int k, std::uint64_t budget) : g_(g), k_(k), budget_(budget) {}

  // Returns true and fills `order` when an elimination order of width <= k exists.
  bool run(std::vector<VertexId>& order) { return dfs(FillGraph(g_), order); }
  bool out_of_budget() const { return exhausted_; }
  std::uint64_t nodes() const { return nodes_; }

 private:
  bool dfs(FillGraph f, std::vector<VertexId>& order) {
    if (++nodes_ > budget_) {
      exhausted_ = true;
      return false;
    }
    const std::size_t remaining = f.alive.count();
    if (static_cast<int>(remaining) <= k_ + 1) {
      f.alive.for_each([&](std::size_t v) { order.push_back(static_cast<VertexId>(v)); });
      return true;
    }
    if (failed_.count(f.alive)) return false;

    // A simplicial vertex of degree <= k can always be eliminated first.
    std::size_t forced = g_.size();
    std::vector<std::pair<std::size_t, std::size_t>> candidates;
    f.alive.for_each([&](std::size_t v) {
      std::size_t d = f.degree(v);
      if (static_cast<int>(d) > k_) return;
      if (forced == g_.size() && f.simplicial(v)) forced = v;
      candidates.emplace_back(d, v);
    });
    if (forced != g_.size()) {
      candidates.assign(1, {0, forced});
    } else {
      std::sort(candidates.begin(), candidates.end());
    }
    for (const auto& [d, v] : candidates) {
      FillGraph next = f;
      next.eliminate(v);
      order.push_back(static_cast<VertexId>(v));
      if (dfs(std::move(next), order)) return true;
      order.pop_back();
      if (exhausted_) return false;
    }
    failed_.insert(f.alive);
    return false;
  }

  const PlainGraph& g_;
  int k_;
  std::uint64_t budget_;
  std::uint64_t nodes_ = 0;
  bool exhausted_ = false;
  std::unordered_set<Bitset, BitsetHash> failed_;
};

}  // namespace

TreeDecomposition decomposition_from_order(const PlainGraph& g,
                                           const std::vector<VertexId>& order) {
  const std::size_t n = g.size();
  TreeDecomposition d;
  if (n == 0) return d;
  std::vector<std::size_t> position(n);
  for (std::size_t r = 0; r < order.size(); ++r) position[order[r]] = r;

  FillGraph f(g);
  std::vector<std::vector<VertexId>> bags(n);
  std::vector<std::size_t> up(n, n);  // parent bag, indexed by vertex (bag id = vertex)
  for (VertexId v : order) {
    Bitset later = f.adj[v] & f.alive;
    bags[v].push_back(v);
    std::size_t first = n;
    later.for_each([&](std::size_t u) {
      if (u == v) return;
      bags[v].push_back(static_cast<VertexId>(u));
      if (first == n || position[u] < position[first]) first = u;
    });
    std::sort(bags[v].begin(), bags[v].end());
    up[v] = first;
    f.eliminate(v);
  }
  // Bags without a parent are component roots; chain them under the last one.
  std::vector<VertexId> roots;
  for (VertexId v : order) {
    if (up[v] == n) roots.push_back(v);
  }
  for (std::size_t r = 0; r + 1 < roots.size(); ++r) up[roots[r]] = roots.back();
  std::size_t root = roots.back();

  // Contract a bag into its parent (or the parent into it) on containment.
  std::vector<std::set<std::size_t>> adj(n);
  for (std::size_t v = 0; v < n; ++v) {
    if (up[v] != n) {
      adj[v].insert(up[v]);
      adj[up[v]].insert(v);
    }
  }
  std::vector<bool> alive(n, true);
  auto subset = [&](std::size_t a, std::size_t b) {
    return std::includes(bags[b].begin(), bags[b].end(), bags[a].begin(), bags[a].end());
  };
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t a = 0; a < n && !changed; ++a) {
      if (!alive[a]) continue;
      for (std::size_t b : adj[a]) {
        if (!subset(a, b)) continue;
        for (std::size_t c : adj[a]) {
          if (c == b) continue;
          adj[c].erase(a);
          adj[c].insert(b);
          adj[b].insert(c);
        }
        adj[b].erase(a);
        adj[a].clear();
        alive[a] = false;
        if (root == a) root = b;
        changed = true;
        break;
      }
    }
  }
  std::vector<std::size_t> renumber(n, n);
  for (VertexId v : order) {
    if (alive[v]) {
      renumber[v] = d.bags.size();
      d.bags.push_back(bags[v]);
    }
  }
  d.tree.resize(d.bags.size());
  for (std::size_t a = 0; a < n; ++a) {
    if (!alive[a]) continue;
    for (std::size_t b : adj[a]) d.tree[renumber[a]].push_back(renumber[b]);
    std::sort(d.tree[renumber[a]].begin(), d.tree[renumber[a]].end());
  }
  d.root = renumber[root];
  return d;
}

DecompositionResult exact_tree_decomposition(const PlainGraph& g, int k,
                                             std::uint64_t node_budget) {
  if (k < 1) throw InputError("width bound must be positive");
  DecompositionResult result;
  if (g.size() == 0) {
    result.status = DecompositionStatus::Feasible;
    result.decomposition = TreeDecomposition{};
    return result;
  }
  if (degeneracy(g) > k) {
    result.status = DecompositionStatus::Infeasible;
    return result;
  }
  int greedy_width = 0;
  auto greedy = min_degree_order(g, &greedy_width);
  if (greedy_width <= k) {
    result.status = DecompositionStatus::Feasible;
    result.decomposition = decomposition_from_order(g, greedy);
    return result;
  }
  Search search(g, k, node_budget);
  std::vector<VertexId> order;
  bool found = search.run(order);
  result.nodes = search.nodes();
  if (found) {
    result.status = DecompositionStatus::Feasible;
    result.decomposition = decomposition_from_order(g, order);
  } else {
    result.status =
        search.out_of_budget() ? DecompositionStatus::Timeout : DecompositionStatus::Infeasible;
  }
  return result;
}

RootedKTree encode_as_rooted_ktree(const PlainGraph& g, const TreeDecomposition& d, int k) {
  if (auto defect = decomposition_defect(g, d, k); !defect.empty()) {
    throw InputError("width overflow or invalid decomposition: " + defect);
  }
  const std::size_t n = g.size();
  RootedKTree t(n, k);
  if (n == 0) return t;

  std::vector<std::size_t> placed_at(n, n);
  std::vector<VertexId> placement;
  // closed[x] = x together with its parents, most recently placed first.
  std::vector<std::vector<VertexId>> closed(n);

  auto place = [&](VertexId v, std::vector<VertexId> parents) {
    std::sort(parents.begin(), parents.end(),
              [&](VertexId a, VertexId b) { return placed_at[a] > placed_at[b]; });
    std::vector<EdgeColor> colors;
    for (VertexId p : parents) {
      colors.push_back(g.adjacent(v, p) ? EdgeColor::Kept : EdgeColor::Fill);
    }
    attach_to_clique(t, v, parents, colors);
    placed_at[v] = placement.size();
    placement.push_back(v);
    closed[v] = {v};
    closed[v].insert(closed[v].end(), parents.begin(), parents.end());
  };

  std::vector<bool> visited(d.bags.size(), false);
  std::deque<std::size_t> queue{d.root};
  visited[d.root] = true;
  while (!queue.empty()) {
    std::size_t b = queue.front();
    queue.pop_front();
    for (VertexId v : d.bags[b]) {  // bags are sorted by id
      if (placed_at[v] != n) continue;
      if (static_cast<int>(placement.size()) < k) {
        place(v, placement);
        continue;
      }
      std::vector<VertexId> anchor_set;
      for (VertexId u : d.bags[b]) {
        if (placed_at[u] != n) anchor_set.push_back(u);
      }
      // The placed bag members form a clique; it lies in closed[x] for its
      // most recently placed member x.  Pad from closed[x] down to size k.
      VertexId x = placement.back();
      if (!anchor_set.empty()) {
        x = anchor_set.front();
        for (VertexId u : anchor_set) {
          if (placed_at[u] > placed_at[x]) x = u;
        }
      }
      // Initial-tournament members see the whole tournament as their clique.
      if (static_cast<int>(placed_at[x]) < k) x = placement[static_cast<std::size_t>(k) - 1];
      std::vector<VertexId> parents = anchor_set;
      for (VertexId u : closed[x]) {
        if (static_cast<int>(parents.size()) == k) break;
        if (std::find(parents.begin(), parents.end(), u) == parents.end()) parents.push_back(u);
      }
      place(v, parents);
    }
    for (std::size_t c : d.tree[b]) {
      if (!visited[c]) {
        visited[c] = true;
        queue.push_back(c);
      }
    }
  }
  return t;
}

TreeDecomposition read_decomposition(std::istream& in) {
  TreeDecomposition d;
  std::string line;
  bool header = false;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream row(line);
    std::string tag;
    if (!(row >> tag)) continue;
    auto fail = [&](const std::string& what) {
      throw InputError("decomposition line " + std::to_string(number) + ": " + what);
    };
    if (!header) {
      std::size_t count = 0;
      if (tag != "decomp" || !(row >> count >> d.root)) fail("expected 'decomp <bags> <root>'");
      d.bags.resize(count);
      d.tree.resize(count);
      header = true;
    } else if (tag == "b") {
      std::size_t index = 0;
      if (!(row >> index) || index >= d.bags.size()) fail("bad bag index");
      long long v = 0;
      while (row >> v) {
        if (v < 0) fail("negative vertex");
        d.bags[index].push_back(static_cast<VertexId>(v));
      }
      std::sort(d.bags[index].begin(), d.bags[index].end());
    } else if (tag == "t") {
      std::size_t a = 0, b = 0;
      if (!(row >> a >> b) || a >= d.bags.size() || b >= d.bags.size()) fail("bad tree edge");
      d.tree[a].push_back(b);
      d.tree[b].push_back(a);
    } else {
      fail("unknown record '" + tag + "'");
    }
  }
  if (!header) throw InputError("empty decomposition file");
  return d;
}

void write_decomposition(std::ostream& out, const TreeDecomposition& d) {
  out << "decomp " << d.bags.size() << ' ' << d.root << '\n';
  for (std::size_t b = 0; b < d.bags.size(); ++b) {
    out << "b " << b;
    for (VertexId v : d.bags[b]) out << ' ' << v;
    out << '\n';
  }
  for (std::size_t a = 0; a < d.tree.size(); ++a) {
    for (std::size_t b : d.tree[a]) {
      if (a < b) out << "t " << a << ' ' << b << '\n';
    }
  }
}

}  // namespace folim
