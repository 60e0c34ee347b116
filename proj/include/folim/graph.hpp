#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "folim/errors.hpp"

namespace folim {

using VertexId = std::uint32_t;

enum class EdgeColor : std::uint8_t { Kept = 0, Fill = 1 };

/// One outgoing edge of a rooted k-tree: `parent` is the `index`-parent of the
/// tail.  Indices are 1-based, matching E1..Ek.
struct ParentSlot {
  int index = 0;
  VertexId parent = 0;
  EdgeColor color = EdgeColor::Kept;

  friend bool operator==(const ParentSlot&, const ParentSlot&) = default;
};

/// Marked, 2-edge-colored, directed graph with indexed parents.
///
/// The type stores whatever it is given; conformance with the recursive
/// rooted k-tree definition is established by validate_rooted_ktree().  This
/// lets tests build deliberately broken instances and lets disjoint unions
/// (used by the Hanf machinery) share the representation.
class RootedKTree {
 public:
  RootedKTree() = default;
  RootedKTree(std::size_t n, int k);

  std::size_t size() const { return parents_.size(); }
  int arity() const { return k_; }

  /// Records that `parent` is the `index`-parent of `v`.  Throws InputError on
  /// out-of-range ids or an index outside [1, k].
  void add_parent(VertexId v, int index, VertexId parent, EdgeColor color);

  /// Marks `v` with U_j (j >= 1).  Throws InputError if j is already used or
  /// v already carries a mark.
  void set_mark(int j, VertexId v);

  std::span<const ParentSlot> parents(VertexId v) const { return parents_.at(v); }
  std::optional<VertexId> i_parent(VertexId v, int i) const;
  std::optional<EdgeColor> i_edge_color(VertexId v, int i) const;
  std::vector<VertexId> i_children(VertexId v, int i) const;

  /// Children of v as (child, index) pairs, i.e. v is the index-parent of child.
  std::span<const std::pair<VertexId, int>> children(VertexId v) const {
    return children_.at(v);
  }

  /// Vertices joined to v by an edge in either direction, ascending and
  /// without repetition.
  std::span<const VertexId> neighbors(VertexId v) const { return neighbors_.at(v); }

  /// Parent index i with `to` the i-parent of `from`, or 0.
  int edge_index(VertexId from, VertexId to) const;
  /// Color of the edge between a and b in either direction, if any.
  std::optional<EdgeColor> edge_color(VertexId a, VertexId b) const;

  /// Mark index carried by v, 0 if unmarked.
  int mark_of(VertexId v) const { return mark_of_.at(v); }
  const std::map<int, VertexId>& marks() const { return marks_; }
  void clear_marks();

  /// Disjoint union; vertices of `other` are shifted by size().  Marks of
  /// `other` are dropped.
  RootedKTree disjoint_union(const RootedKTree& other) const;

  /// Copy with vertices renamed by `perm` (old id -> new id).
  RootedKTree relabeled(std::span<const VertexId> perm) const;

  friend bool operator==(const RootedKTree& a, const RootedKTree& b);

 private:
  void check_vertex(VertexId v) const;

  int k_ = 1;
  std::vector<std::vector<ParentSlot>> parents_;
  std::vector<std::vector<std::pair<VertexId, int>>> children_;
  std::vector<std::vector<VertexId>> neighbors_;
  std::vector<int> mark_of_;
  std::map<int, VertexId> marks_;
};

struct Violation {
  std::string rule;
  std::vector<VertexId> witnesses;
};

struct ValidationReport {
  bool ok = true;
  std::vector<Violation> violations;

  bool has(const std::string& rule) const;
};

/// Checks every structural invariant of a rooted k-tree.  Rule identifiers:
/// "arity", "index-segment", "acyclicity", "parent-tournament",
/// "initial-tournament".
ValidationReport validate_rooted_ktree(const RootedKTree& t);

/// Builds a rooted k-tree by the recursive definition, choosing each new
/// vertex's parent clique uniformly among the k-cliques present.  Edge colors
/// are drawn uniformly.  Deterministic per seed.
RootedKTree generate_random_rooted_ktree(std::size_t n, int k, std::uint64_t seed);

/// Attaches `v` to `clique`, which must be listed from most recently placed
/// to least recently placed: the first entry becomes the 1-parent.
void attach_to_clique(RootedKTree& t, VertexId v, std::span<const VertexId> clique,
                      std::span<const EdgeColor> colors);

/// Simple undirected graph, the input of the encoder.
class PlainGraph {
 public:
  PlainGraph() = default;
  explicit PlainGraph(std::size_t n) : adj_(n) {}

  std::size_t size() const { return adj_.size(); }
  /// Adds edge {u, v}; self-loops are rejected, duplicates ignored.
  void add_edge(VertexId u, VertexId v);
  bool adjacent(VertexId u, VertexId v) const;
  std::span<const VertexId> neighbors(VertexId v) const { return adj_.at(v); }
  std::vector<std::pair<VertexId, VertexId>> edges() const;
  std::size_t edge_count() const;

  friend bool operator==(const PlainGraph&, const PlainGraph&) = default;

 private:
  std::vector<std::vector<VertexId>> adj_;  // sorted
};

/// The KEPT-colored subgraph of `t` with orientation forgotten.
PlainGraph kept_subgraph(const RootedKTree& t);

// Text formats.  '#' starts a comment; ids are 0-based.
//   ktree <n> <k> / p <v> <i> <w> <c> / m <j> <v>
//   graph <n> / e <u> <v>
RootedKTree read_ktree(std::istream& in);
void write_ktree(std::ostream& out, const RootedKTree& t);
PlainGraph read_plain_graph(std::istream& in);
void write_plain_graph(std::ostream& out, const PlainGraph& g);

RootedKTree load_ktree(const std::string& path);
PlainGraph load_plain_graph(const std::string& path);

}  // namespace folim
