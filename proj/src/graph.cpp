#include "folim/graph.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <set>
#include <sstream>

#include "folim/errors.hpp"

namespace folim {

RootedKTree::RootedKTree(std::size_t n, int k)
    : k_(k), parents_(n), children_(n), neighbors_(n), mark_of_(n, 0) {
  if (k < 1) throw InputError("arity k must be at least 1");
}

void RootedKTree::check_vertex(VertexId v) const {
  if (v >= size()) {
    throw InputError("vertex id " + std::to_string(v) + " out of range [0, " +
                     std::to_string(size()) + ")");
  }
}

void RootedKTree::add_parent(VertexId v, int index, VertexId parent, EdgeColor color) {
  check_vertex(v);
  check_vertex(parent);
  if (index < 1 || index > k_) {
    throw InputError("parent index " + std::to_string(index) + " outside [1, " +
                     std::to_string(k_) + "]");
  }
  parents_[v].push_back({index, parent, color});
  std::sort(parents_[v].begin(), parents_[v].end(),
            [](const ParentSlot& a, const ParentSlot& b) { return a.index < b.index; });
  children_[parent].emplace_back(v, index);
  std::sort(children_[parent].begin(), children_[parent].end());
  auto link = [](std::vector<VertexId>& list, VertexId x) {
    auto it = std::lower_bound(list.begin(), list.end(), x);
    if (it == list.end() || *it != x) list.insert(it, x);
  };
  link(neighbors_[v], parent);
  link(neighbors_[parent], v);
}

void RootedKTree::set_mark(int j, VertexId v) {
  check_vertex(v);
  if (j < 1) throw InputError("mark indices are 1-based");
  if (marks_.count(j)) throw InputError("mark U" + std::to_string(j) + " used twice");
  if (mark_of_[v] != 0) {
    throw InputError("vertex " + std::to_string(v) + " carries two marks");
  }
  marks_[j] = v;
  mark_of_[v] = j;
}

void RootedKTree::clear_marks() {
  marks_.clear();
  std::fill(mark_of_.begin(), mark_of_.end(), 0);
}

std::optional<VertexId> RootedKTree::i_parent(VertexId v, int i) const {
  check_vertex(v);
  for (const auto& slot : parents_[v]) {
    if (slot.index == i) return slot.parent;
  }
  return std::nullopt;
}

std::optional<EdgeColor> RootedKTree::i_edge_color(VertexId v, int i) const {
  check_vertex(v);
  for (const auto& slot : parents_[v]) {
    if (slot.index == i) return slot.color;
  }
  return std::nullopt;
}

std::vector<VertexId> RootedKTree::i_children(VertexId v, int i) const {
  check_vertex(v);
  std::vector<VertexId> out;
  for (const auto& [child, index] : children_[v]) {
    if (index == i) out.push_back(child);
  }
  return out;
}

int RootedKTree::edge_index(VertexId from, VertexId to) const {
  for (const auto& slot : parents_[from]) {
    if (slot.parent == to) return slot.index;
  }
  return 0;
}

std::optional<EdgeColor> RootedKTree::edge_color(VertexId a, VertexId b) const {
  for (const auto& slot : parents_[a]) {
    if (slot.parent == b) return slot.color;
  }
  for (const auto& slot : parents_[b]) {
    if (slot.parent == a) return slot.color;
  }
  return std::nullopt;
}

RootedKTree RootedKTree::disjoint_union(const RootedKTree& other) const {
  RootedKTree out(size() + other.size(), std::max(k_, other.k_));
  for (VertexId v = 0; v < size(); ++v) {
    for (const auto& s : parents_[v]) out.add_parent(v, s.index, s.parent, s.color);
  }
  const auto shift = static_cast<VertexId>(size());
  for (VertexId v = 0; v < other.size(); ++v) {
    for (const auto& s : other.parents_[v]) {
      out.add_parent(v + shift, s.index, s.parent + shift, s.color);
    }
  }
  for (const auto& [j, v] : marks_) out.set_mark(j, v);
  return out;
}

RootedKTree RootedKTree::relabeled(std::span<const VertexId> perm) const {
  if (perm.size() != size()) throw InputError("permutation size mismatch");
  RootedKTree out(size(), k_);
  for (VertexId v = 0; v < size(); ++v) {
    for (const auto& s : parents_[v]) out.add_parent(perm[v], s.index, perm[s.parent], s.color);
  }
  for (const auto& [j, v] : marks_) out.set_mark(j, perm[v]);
  return out;
}

bool operator==(const RootedKTree& a, const RootedKTree& b) {
  return a.k_ == b.k_ && a.parents_ == b.parents_ && a.marks_ == b.marks_;
}

bool ValidationReport::has(const std::string& rule) const {
  return std::any_of(violations.begin(), violations.end(),
                     [&](const Violation& v) { return v.rule == rule; });
}

ValidationReport validate_rooted_ktree(const RootedKTree& t) {
  ValidationReport report;
  auto fail = [&](std::string rule, std::vector<VertexId> witnesses) {
    report.ok = false;
    report.violations.push_back({std::move(rule), std::move(witnesses)});
  };
  const std::size_t n = t.size();
  const int k = t.arity();

  for (VertexId v = 0; v < n; ++v) {
    auto ps = t.parents(v);
    for (const auto& s : ps) {
      if (s.parent >= n) throw InputError("parent id out of range");
    }
    if (static_cast<int>(ps.size()) > k) fail("arity", {v});
    std::set<VertexId> distinct;
    bool segment = true;
    for (std::size_t r = 0; r < ps.size(); ++r) {
      if (ps[r].index != static_cast<int>(r) + 1) segment = false;
      distinct.insert(ps[r].parent);
    }
    if (!segment) fail("index-segment", {v});
    if (distinct.size() != ps.size()) fail("index-segment", {v});
  }

  // Kahn's algorithm on child -> parent edges.
  std::vector<std::size_t> pending(n, 0);
  for (VertexId v = 0; v < n; ++v) pending[v] = t.children(v).size();
  std::vector<VertexId> queue;
  for (VertexId v = 0; v < n; ++v) {
    if (pending[v] == 0) queue.push_back(v);
  }
  std::size_t seen = 0;
  while (!queue.empty()) {
    VertexId v = queue.back();
    queue.pop_back();
    ++seen;
    for (const auto& s : t.parents(v)) {
      if (--pending[s.parent] == 0) queue.push_back(s.parent);
    }
  }
  if (seen != n) {
    std::vector<VertexId> cyclic;
    for (VertexId v = 0; v < n; ++v) {
      if (pending[v] != 0) cyclic.push_back(v);
    }
    fail("acyclicity", cyclic);
  }

  for (VertexId v = 0; v < n; ++v) {
    auto ps = t.parents(v);
    for (std::size_t a = 0; a < ps.size(); ++a) {
      for (std::size_t b = a + 1; b < ps.size(); ++b) {
        const auto& lo = ps[a];
        const auto& hi = ps[b];
        int via = t.edge_index(lo.parent, hi.parent);
        if (lo.index < hi.index && (via == 0 || via > hi.index)) {
          fail("parent-tournament", {v, lo.parent, hi.parent});
        }
      }
    }
  }

  std::vector<VertexId> initial;
  for (VertexId v = 0; v < n; ++v) {
    if (static_cast<int>(t.parents(v).size()) < k) initial.push_back(v);
  }
  if (static_cast<int>(initial.size()) > k) {
    fail("initial-tournament", initial);
  } else {
    std::set<VertexId> members(initial.begin(), initial.end());
    for (VertexId v : initial) {
      for (const auto& s : t.parents(v)) {
        if (!members.count(s.parent)) fail("initial-tournament", {v, s.parent});
      }
      for (VertexId u : initial) {
        if (u < v && !t.edge_color(u, v)) fail("initial-tournament", {u, v});
      }
    }
  }
  return report;
}

void attach_to_clique(RootedKTree& t, VertexId v, std::span<const VertexId> clique,
                      std::span<const EdgeColor> colors) {
  for (std::size_t r = 0; r < clique.size(); ++r) {
    t.add_parent(v, static_cast<int>(r) + 1, clique[r], colors[r]);
  }
}

RootedKTree generate_random_rooted_ktree(std::size_t n, int k, std::uint64_t seed) {
  if (n < 1 || k < 1) throw InputError("generator needs n >= 1 and k >= 1");
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution coin(0.5);
  RootedKTree t(n, k);
  auto colors = [&](std::size_t count) {
    std::vector<EdgeColor> out(count);
    for (auto& c : out) c = coin(rng) ? EdgeColor::Fill : EdgeColor::Kept;
    return out;
  };

  // Cliques are kept sorted by descending vertex id, which is placement order.
  std::vector<std::vector<VertexId>> cliques;
  const std::size_t base = std::min<std::size_t>(n, static_cast<std::size_t>(k));
  for (VertexId v = 0; v < base; ++v) {
    std::vector<VertexId> earlier;
    for (VertexId u = v; u-- > 0;) earlier.push_back(u);
    attach_to_clique(t, v, earlier, colors(earlier.size()));
  }
  if (n > base) {
    std::vector<VertexId> all;
    for (VertexId u = static_cast<VertexId>(base); u-- > 0;) all.push_back(u);
    cliques.push_back(all);
  }
  for (auto v = static_cast<VertexId>(base); v < n; ++v) {
    std::uniform_int_distribution<std::size_t> pick(0, cliques.size() - 1);
    const std::vector<VertexId> clique = cliques[pick(rng)];
    attach_to_clique(t, v, clique, colors(clique.size()));
    for (std::size_t drop = 0; drop < clique.size(); ++drop) {
      std::vector<VertexId> next{v};
      for (std::size_t r = 0; r < clique.size(); ++r) {
        if (r != drop) next.push_back(clique[r]);
      }
      cliques.push_back(std::move(next));
    }
  }
  return t;
}

void PlainGraph::add_edge(VertexId u, VertexId v) {
  if (u >= size() || v >= size()) throw InputError("edge endpoint out of range");
  if (u == v) throw InputError("self-loops are not allowed");
  auto link = [](std::vector<VertexId>& list, VertexId x) {
    auto it = std::lower_bound(list.begin(), list.end(), x);
    if (it == list.end() || *it != x) list.insert(it, x);
  };
  link(adj_[u], v);
  link(adj_[v], u);
}

bool PlainGraph::adjacent(VertexId u, VertexId v) const {
  return std::binary_search(adj_.at(u).begin(), adj_.at(u).end(), v);
}

std::vector<std::pair<VertexId, VertexId>> PlainGraph::edges() const {
  std::vector<std::pair<VertexId, VertexId>> out;
  for (VertexId u = 0; u < size(); ++u) {
    for (VertexId v : adj_[u]) {
      if (u < v) out.emplace_back(u, v);
    }
  }
  return out;
}

std::size_t PlainGraph::edge_count() const {
  std::size_t twice = 0;
  for (const auto& list : adj_) twice += list.size();
  return twice / 2;
}

PlainGraph kept_subgraph(const RootedKTree& t) {
  PlainGraph g(t.size());
  for (VertexId v = 0; v < t.size(); ++v) {
    for (const auto& s : t.parents(v)) {
      if (s.color == EdgeColor::Kept) g.add_edge(v, s.parent);
    }
  }
  return g;
}

namespace {

// Yields non-empty, comment-stripped lines with their 1-based line numbers.
std::vector<std::pair<int, std::string>> content_lines(std::istream& in) {
  std::vector<std::pair<int, std::string>> out;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    out.emplace_back(number, line);
  }
  return out;
}

[[noreturn]] void bad_line(int number, const std::string& what) {
  throw InputError("line " + std::to_string(number) + ": " + what);
}

long long read_int(std::istringstream& in, int number) {
  long long value = 0;
  if (!(in >> value)) bad_line(number, "expected an integer");
  return value;
}

VertexId as_vertex(long long value, std::size_t n, int number) {
  if (value < 0 || static_cast<std::size_t>(value) >= n) bad_line(number, "vertex id out of range");
  return static_cast<VertexId>(value);
}

}  // namespace

RootedKTree read_ktree(std::istream& in) {
  auto lines = content_lines(in);
  if (lines.empty()) throw InputError("empty ktree file");
  std::istringstream header(lines.front().second);
  std::string tag;
  header >> tag;
  if (tag != "ktree") bad_line(lines.front().first, "expected 'ktree <n> <k>' header");
  long long n = read_int(header, lines.front().first);
  long long k = read_int(header, lines.front().first);
  if (n < 0 || k < 1) bad_line(lines.front().first, "bad header values");
  RootedKTree t(static_cast<std::size_t>(n), static_cast<int>(k));
  for (std::size_t r = 1; r < lines.size(); ++r) {
    const auto& [number, text] = lines[r];
    std::istringstream row(text);
    row >> tag;
    if (tag == "p") {
      VertexId v = as_vertex(read_int(row, number), t.size(), number);
      long long i = read_int(row, number);
      VertexId w = as_vertex(read_int(row, number), t.size(), number);
      long long c = read_int(row, number);
      if (c != 0 && c != 1) bad_line(number, "color must be 0 or 1");
      if (i < 1 || i > k) bad_line(number, "parent index out of range");
      t.add_parent(v, static_cast<int>(i), w, c == 0 ? EdgeColor::Kept : EdgeColor::Fill);
    } else if (tag == "m") {
      long long j = read_int(row, number);
      VertexId v = as_vertex(read_int(row, number), t.size(), number);
      if (j < 1) bad_line(number, "mark index must be positive");
      t.set_mark(static_cast<int>(j), v);
    } else {
      bad_line(number, "unknown record '" + tag + "'");
    }
  }
  return t;
}

void write_ktree(std::ostream& out, const RootedKTree& t) {
  out << "ktree " << t.size() << ' ' << t.arity() << '\n';
  for (VertexId v = 0; v < t.size(); ++v) {
    for (const auto& s : t.parents(v)) {
      out << "p " << v << ' ' << s.index << ' ' << s.parent << ' '
          << static_cast<int>(s.color) << '\n';
    }
  }
  for (const auto& [j, v] : t.marks()) out << "m " << j << ' ' << v << '\n';
}

PlainGraph read_plain_graph(std::istream& in) {
  auto lines = content_lines(in);
  if (lines.empty()) throw InputError("empty graph file");
  std::istringstream header(lines.front().second);
  std::string tag;
  header >> tag;
  if (tag != "graph") bad_line(lines.front().first, "expected 'graph <n>' header");
  long long n = read_int(header, lines.front().first);
  if (n < 0) bad_line(lines.front().first, "negative vertex count");
  PlainGraph g(static_cast<std::size_t>(n));
  for (std::size_t r = 1; r < lines.size(); ++r) {
    const auto& [number, text] = lines[r];
    std::istringstream row(text);
    row >> tag;
    if (tag != "e") bad_line(number, "unknown record '" + tag + "'");
    VertexId u = as_vertex(read_int(row, number), g.size(), number);
    VertexId v = as_vertex(read_int(row, number), g.size(), number);
    if (u == v) bad_line(number, "self-loop");
    g.add_edge(u, v);
  }
  return g;
}

void write_plain_graph(std::ostream& out, const PlainGraph& g) {
  out << "graph " << g.size() << '\n';
  for (const auto& [u, v] : g.edges()) out << "e " << u << ' ' << v << '\n';
}

RootedKTree load_ktree(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path);
  return read_ktree(in);
}

PlainGraph load_plain_graph(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path);
  return read_plain_graph(in);
}

}  // namespace folim
