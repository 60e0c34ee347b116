#pragma once

#include "folim/graph.hpp"

namespace fixtures {

using folim::EdgeColor;
using folim::RootedKTree;
using folim::VertexId;

// a -> b <- c, ids a=0, b=1, c=2.
inline RootedKTree p3() {
  RootedKTree t(3, 1);
  t.add_parent(0, 1, 1, EdgeColor::Kept);
  t.add_parent(2, 1, 1, EdgeColor::Kept);
  return t;
}

// Path 0 <- 1 <- ... <- n-1, every edge KEPT.
inline RootedKTree path(std::size_t n) {
  RootedKTree t(n, 1);
  for (VertexId v = 1; v < n; ++v) t.add_parent(v, 1, v - 1, EdgeColor::Kept);
  return t;
}

// Transitive tournament on 3 vertices: 1 -> 0, 2 -> {1, 0}.
inline RootedKTree k3_tournament() {
  RootedKTree t(3, 2);
  t.add_parent(1, 1, 0, EdgeColor::Kept);
  t.add_parent(2, 1, 1, EdgeColor::Kept);
  t.add_parent(2, 2, 0, EdgeColor::Kept);
  return t;
}

}  // namespace fixtures
