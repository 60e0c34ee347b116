#pragma once

#include <compare>
#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "folim/graph.hpp"
#include "folim/resolve.hpp"

namespace folim {

/// Handle of an interned local type.  Equality and order go through
/// (depth, fingerprint), which is stable across runs and machines.
struct TypeId {
  std::uint32_t handle = 0;
  int depth = 0;
  std::uint64_t fingerprint = 0;

  friend bool operator==(const TypeId& a, const TypeId& b) {
    return a.depth == b.depth && a.fingerprint == b.fingerprint;
  }
  friend std::strong_ordering operator<=>(const TypeId& a, const TypeId& b) {
    if (auto c = a.depth <=> b.depth; c != 0) return c;
    return a.fingerprint <=> b.fingerprint;
  }
};

/// 16 lowercase hex digits.
std::string fingerprint_hex(std::uint64_t fingerprint);
inline std::string fingerprint_hex(const TypeId& t) { return fingerprint_hex(t.fingerprint); }

/// Intern table of signature nodes.  A node of level r is the atomic type of
/// a pebbled tuple plus, for r > 0, the set of level r-1 nodes of its
/// one-vertex extensions.  Thread safe; insert-if-absent.
class TypeStore {
 public:
  struct Node {
    int level = 0;
    std::vector<int> atomic;               // [m, marks..., pair relations...]
    std::vector<std::uint32_t> children;   // handles, sorted, unique
    std::uint64_t fingerprint = 0;
  };

  static TypeStore& global();

  TypeId intern(int level, std::vector<int> atomic, std::vector<std::uint32_t> children);
  const Node& node(std::uint32_t handle) const;
  TypeId id(std::uint32_t handle) const;
  std::size_t size() const;

  /// Same tuple, one level less, marks above `mark_cap` hidden.
  TypeId restrict(std::uint32_t handle, int mark_cap);

 private:
  mutable std::mutex mutex_;
  std::deque<Node> nodes_;
  std::unordered_map<std::string, std::uint32_t> index_;
  std::unordered_map<std::uint64_t, std::uint32_t> restrict_memo_;
};

/// d-type of v: marks U_j with j <= d are visible.  Requires d >= 1.
TypeId vertex_type(const RootedKTree& t, VertexId v, int d, TypeStore& store = TypeStore::global());

/// d-types of all vertices, computed on `threads` workers (0 = hardware).
std::vector<TypeId> vertex_types(const RootedKTree& t, int d, unsigned threads = 0,
                                 TypeStore& store = TypeStore::global());

/// The (d-1)-type determined by a d-type, d >= 2.
TypeId restriction(const TypeId& type, TypeStore& store = TypeStore::global());

struct TypeHistogram {
  int depth = 0;
  std::map<TypeId, std::size_t> counts;
};

TypeHistogram type_histogram(const RootedKTree& t, int d, TypeStore& store = TypeStore::global());

/// True iff every type has equal counts or counts >= gamma in both.
bool hanf_equivalent(const TypeHistogram& a, const TypeHistogram& b, std::size_t gamma);

struct Witness {
  std::size_t graph = 0;
  VertexId vertex = 0;
  friend bool operator==(const Witness&, const Witness&) = default;
};

/// (tau_1, ..., tau_D) with tau_{d-1} the restriction of tau_d.
struct ChainPrefix {
  std::vector<TypeId> types;

  int depth() const { return static_cast<int>(types.size()); }
  const TypeId& last() const { return types.back(); }
  friend bool operator==(const ChainPrefix&, const ChainPrefix&) = default;
};

/// Types of every vertex of a sequence of graphs at depths 1..D, organised as
/// a tree along restriction, with witness lists per node.
class TypeTrie {
 public:
  explicit TypeTrie(int depth, TypeStore& store = TypeStore::global());

  std::size_t add_graph(std::shared_ptr<const RootedKTree> t, unsigned threads = 0);

  int depth() const { return depth_; }
  std::size_t graph_count() const { return graphs_.size(); }
  const RootedKTree& graph(std::size_t i) const { return *graphs_.at(i); }
  TypeStore& store() const { return *store_; }

  TypeId type_at(std::size_t graph, VertexId v, int d) const;
  ChainPrefix chain_of(std::size_t graph, VertexId v) const;
  ChainPrefix chain_of(const TypeId& type) const;
  bool contains(const TypeId& type) const { return witnesses_.count(type) != 0; }
  /// Witnesses in (graph, vertex) order; throws InputError for unknown types.
  const std::vector<Witness>& witnesses(const TypeId& type) const;
  /// Restriction to depth-1, nullopt at depth 1.
  std::optional<TypeId> prefix_parent(const TypeId& type) const;
  /// Types at depth d in fingerprint order.
  std::vector<TypeId> types_at(int d) const;

 private:
  int depth_;
  TypeStore* store_;
  std::vector<std::shared_ptr<const RootedKTree>> graphs_;
  std::vector<std::vector<std::vector<TypeId>>> types_;  // [graph][d-1][v]
  std::map<TypeId, std::vector<Witness>> witnesses_;
  std::map<TypeId, TypeId> prefix_parent_;
};

/// Facts about a depth-D type read off its witnesses.
struct ImpliedProfile {
  TypeId type;
  /// index i-1: (D-1)-type of the i-parent, nullopt when there is none.
  std::vector<std::optional<TypeId>> parent_types;
  /// index i-1: D-type of the i-parent by witness majority.
  std::vector<std::optional<TypeId>> parent_full_types;
  /// (i, (D-1)-type of child) -> count of such i-children.
  std::map<std::pair<int, TypeId>, Resolved> child_counts;
  /// (i, D-type of child) -> count of such i-children.
  std::map<std::pair<int, TypeId>, Resolved> child_counts_full;
  /// U_j, j <= D, carried by the type.
  std::vector<int> marks;
  bool initial_tournament = false;
  /// (i, i', A bitmask over [k]) -> an A-edge path of length <= L leads from
  /// the i-parent to the i'-parent.
  std::map<std::tuple<int, int, unsigned>, bool> parent_paths;
  /// (i, i') -> index j with the i'-parent being the j-parent of the i-parent, 0 if none.
  std::map<std::pair<int, int>, int> parent_links;
  /// Names of fields whose witnesses disagree.
  std::vector<std::string> unstable_fields;
  std::size_t witness_count = 0;

  bool stable() const { return unstable_fields.empty(); }
};

/// D is the depth of `tau`, between 2 and the trie depth.
ImpliedProfile implied_profile(const TypeTrie& trie, const ChainPrefix& tau, int path_bound);

/// Directed path from `from` to `to` of length <= bound using only j-edges
/// (child to j-parent) with bit j-1 set in `mask`.
bool has_indexed_path(const RootedKTree& t, VertexId from, VertexId to, unsigned mask, int bound);

}  // namespace folim
