#pragma once

#include <cstddef>

#include "folim/graph.hpp"

namespace folim::families {

/// 0 <- 1 <- ... <- n-1, all KEPT.
RootedKTree path(std::size_t n);
/// Plain path on n vertices.
PlainGraph plain_path(std::size_t n);
/// Star with centre 0 and n-1 leaves pointing at it.
RootedKTree star(std::size_t n);
/// Complete binary in-tree of the given height (2^(h+1)-1 vertices), root 0,
/// children of v are 2v+1 (KEPT edge) and 2v+2 (FILL edge, or KEPT when
/// uncolored).
RootedKTree binary_in_tree(int height, bool colored = true);
/// Comb: spine 0 <- 2 <- 4 ... with a leaf 2j+1 hanging on spine vertex 2j.
/// Spine edges FILL, leaf edges KEPT.
RootedKTree comb(std::size_t teeth);
/// k=2 fan family: tournament r0 <- r1, then `fans` fans.  Fan f has a hub
/// with parents (r1, r0), a spine x_0..x_{len-1} with x_0 -> (hub, r1) and
/// x_j -> (x_{j-1}, hub), and pendants y_j -> (x_j, x_{j-1}) for j >= 1.
RootedKTree fan_family(std::size_t fans, std::size_t len);
/// k=2 strip: two paths a_j, b_j with a_j -> (b_{j-1}, a_{j-1}) and
/// b_j -> (a_j, b_{j-1}); rungs and one rail KEPT, the diagonals FILL.
RootedKTree strip(std::size_t length);

}  // namespace folim::families
