#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "folim/graph.hpp"

namespace folim {

struct TreeDecomposition {
  std::vector<std::vector<VertexId>> bags;   // each sorted
  std::vector<std::vector<std::size_t>> tree;  // adjacency among bag indices
  std::size_t root = 0;

  int width() const;
};

/// Empty string when `d` is a valid decomposition of `g` of width <= k,
/// otherwise a description of the first defect found.
std::string decomposition_defect(const PlainGraph& g, const TreeDecomposition& d, int k);

enum class DecompositionStatus { Feasible, Infeasible, Timeout };

struct DecompositionResult {
  DecompositionStatus status = DecompositionStatus::Infeasible;
  std::optional<TreeDecomposition> decomposition;
  std::uint64_t nodes = 0;  // search nodes expanded
};

/// Exact tree-width-<=k test by branch-and-bound over elimination orders.
/// `node_budget` bounds the number of search nodes; exhausting it yields
/// Timeout, never a wrong verdict.
DecompositionResult exact_tree_decomposition(const PlainGraph& g, int k,
                                             std::uint64_t node_budget = 2'000'000);

/// Decomposition induced by an elimination order (bags {v} + later neighbours
/// in the fill graph), with bags contained in a neighbouring bag contracted.
TreeDecomposition decomposition_from_order(const PlainGraph& g,
                                           const std::vector<VertexId>& order);

/// Completes `g` to a 2-edge-colored rooted k-tree along `d`.  Edges of `g` are
/// KEPT, completion edges FILL.  Throws InputError("width overflow ...") when
/// `d` is not a valid width-<=k decomposition of `g`.
RootedKTree encode_as_rooted_ktree(const PlainGraph& g, const TreeDecomposition& d, int k);

// Decomposition text format:
//   decomp <bag count> <root>
//   b <index> <v1> <v2> ...
//   t <bag a> <bag b>
TreeDecomposition read_decomposition(std::istream& in);
void write_decomposition(std::ostream& out, const TreeDecomposition& d);

}  // namespace folim
