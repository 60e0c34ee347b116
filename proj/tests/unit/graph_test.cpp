#include <sstream>

#include "doctest.h"
#include "folim/graph.hpp"
#include "support/fixtures.hpp"

using namespace folim;

TEST_CASE("rooted k-tree accessors") {
  auto t = fixtures::p3();
  CHECK(t.i_parent(0, 1) == VertexId{1});
  CHECK_FALSE(t.i_parent(1, 1).has_value());
  CHECK(t.i_children(1, 1) == std::vector<VertexId>{0, 2});
  CHECK(t.neighbors(1).size() == 2);
  CHECK(t.edge_index(0, 1) == 1);
  CHECK(t.edge_index(1, 0) == 0);
  CHECK(validate_rooted_ktree(t).ok);
}

TEST_CASE("bad parent index is rejected") {
  RootedKTree t(3, 1);
  CHECK_THROWS_AS(t.add_parent(0, 2, 1, EdgeColor::Kept), InputError);
  CHECK_THROWS_AS(t.add_parent(0, 1, 7, EdgeColor::Kept), InputError);
}

TEST_CASE("validator flags cycles and broken tournaments") {
  RootedKTree cyc(2, 1);
  cyc.add_parent(0, 1, 1, EdgeColor::Kept);
  cyc.add_parent(1, 1, 0, EdgeColor::Kept);
  CHECK(validate_rooted_ktree(cyc).has("acyclicity"));

  // 3's parents 2 and 0 are not adjacent.
  RootedKTree t(4, 2);
  t.add_parent(1, 1, 0, EdgeColor::Kept);
  t.add_parent(2, 1, 1, EdgeColor::Kept);
  t.add_parent(3, 1, 2, EdgeColor::Kept);
  t.add_parent(3, 2, 0, EdgeColor::Kept);
  auto report = validate_rooted_ktree(t);
  CHECK_FALSE(report.ok);
}

TEST_CASE("random rooted k-trees validate") {
  for (int k = 1; k <= 3; ++k) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      auto t = generate_random_rooted_ktree(15, k, seed);
      CHECK(validate_rooted_ktree(t).ok);
      CHECK(t == generate_random_rooted_ktree(15, k, seed));
    }
  }
}

TEST_CASE("text round trip") {
  auto t = generate_random_rooted_ktree(12, 2, 5);
  t.set_mark(1, 3);
  std::stringstream s;
  write_ktree(s, t);
  CHECK(read_ktree(s) == t);

  std::stringstream bad("ktree 2 1\np 0 1 5 0\n");
  CHECK_THROWS_AS(read_ktree(bad), InputError);
}

TEST_CASE("disjoint union and relabeling") {
  auto t = fixtures::p3();
  auto u = t.disjoint_union(t);
  CHECK(u.size() == 6);
  CHECK(u.i_parent(3, 1) == VertexId{4});
  std::vector<VertexId> perm{2, 0, 1};
  auto r = t.relabeled(perm);
  CHECK(validate_rooted_ktree(r).ok);
  CHECK(r.i_children(0, 1).size() == 2);
}

TEST_CASE("kept subgraph drops fill edges") {
  RootedKTree t(3, 2);
  t.add_parent(1, 1, 0, EdgeColor::Kept);
  t.add_parent(2, 1, 1, EdgeColor::Kept);
  t.add_parent(2, 2, 0, EdgeColor::Fill);
  auto g = kept_subgraph(t);
  CHECK(g.edge_count() == 2);
  CHECK_FALSE(g.adjacent(0, 2));
}
