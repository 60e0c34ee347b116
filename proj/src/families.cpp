#include "folim/families.hpp"

namespace folim::families {

RootedKTree path(std::size_t n) {
  RootedKTree t(n, 1);
  for (VertexId v = 1; v < n; ++v) t.add_parent(v, 1, v - 1, EdgeColor::Kept);
  return t;
}

PlainGraph plain_path(std::size_t n) {
  PlainGraph g(n);
  for (VertexId v = 1; v < n; ++v) g.add_edge(v - 1, v);
  return g;
}

RootedKTree star(std::size_t n) {
  RootedKTree t(n, 1);
  for (VertexId v = 1; v < n; ++v) t.add_parent(v, 1, 0, EdgeColor::Kept);
  return t;
}

RootedKTree binary_in_tree(int height, bool colored) {
  if (height < 0 || height > 24) throw InputError("binary in-tree height out of range");
  const std::size_t n = (std::size_t{1} << (height + 1)) - 1;
  RootedKTree t(n, 1);
  for (VertexId v = 1; v < n; ++v) {
    t.add_parent(v, 1, (v - 1) / 2, colored && v % 2 == 0 ? EdgeColor::Fill : EdgeColor::Kept);
  }
  return t;
}

RootedKTree comb(std::size_t teeth) {
  RootedKTree t(2 * teeth, 1);
  for (VertexId j = 0; j < teeth; ++j) {
    if (j > 0) t.add_parent(2 * j, 1, 2 * (j - 1), EdgeColor::Fill);
    t.add_parent(2 * j + 1, 1, 2 * j, EdgeColor::Kept);
  }
  return t;
}

RootedKTree fan_family(std::size_t fans, std::size_t len) {
  if (len < 1) throw InputError("fans need a spine");
  const std::size_t per_fan = 1 + len + (len - 1);
  RootedKTree t(2 + fans * per_fan, 2);
  const VertexId r0 = 0, r1 = 1;
  t.add_parent(r1, 1, r0, EdgeColor::Kept);
  VertexId next = 2;
  for (std::size_t f = 0; f < fans; ++f) {
    const VertexId hub = next++;
    t.add_parent(hub, 1, r1, EdgeColor::Kept);
    t.add_parent(hub, 2, r0, EdgeColor::Fill);
    VertexId prev = next++;
    t.add_parent(prev, 1, hub, EdgeColor::Kept);
    t.add_parent(prev, 2, r1, EdgeColor::Fill);
    for (std::size_t j = 1; j < len; ++j) {
      const VertexId x = next++;
      t.add_parent(x, 1, prev, EdgeColor::Kept);
      t.add_parent(x, 2, hub, EdgeColor::Kept);
      const VertexId y = next++;
      t.add_parent(y, 1, x, EdgeColor::Kept);
      t.add_parent(y, 2, prev, EdgeColor::Fill);
      prev = x;
    }
  }
  return t;
}

RootedKTree strip(std::size_t length) {
  if (length < 1) throw InputError("strip length must be positive");
  RootedKTree t(2 * length, 2);
  // a_j = 2j, b_j = 2j+1.
  t.add_parent(1, 1, 0, EdgeColor::Kept);
  for (VertexId j = 1; j < length; ++j) {
    const VertexId a = 2 * j, b = 2 * j + 1, pa = 2 * (j - 1), pb = 2 * (j - 1) + 1;
    t.add_parent(a, 1, pb, EdgeColor::Fill);
    t.add_parent(a, 2, pa, EdgeColor::Kept);
    t.add_parent(b, 1, a, EdgeColor::Kept);
    t.add_parent(b, 2, pb, EdgeColor::Fill);
  }
  return t;
}

}  // namespace folim::families
