#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "folim/families.hpp"
#include "folim/pipeline.hpp"

using namespace folim;
namespace fs = std::filesystem;

namespace {

std::vector<PlainGraph> plain_paths() {
  return {families::plain_path(8), families::plain_path(16), families::plain_path(32), families::plain_path(64)};
}

PipelineConfig path_config(const std::string& out = "") {
  PipelineConfig c;
  c.k = 1;
  c.depth = 3;
  c.window = 2;
  c.growth = 2.0;
  c.suite.sample.n = 20000;
  c.suite.sample.seed = 3;
  c.out = out;
  return c;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// Relative path -> contents, for every file under root.
std::map<std::string, std::string> tree(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) out[fs::relative(e.path(), root).string()] = slurp(e.path());
  }
  return out;
}

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("folim_pipeline_test_" + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST_CASE("pipeline on paths passes and writes the fixed layout") {
  auto dir = scratch("paths");
  auto rep = run_pipeline(path_config(dir.string()), plain_paths());
  CHECK(rep.exit_code == 0);
  CHECK(rep.halted_stage.empty());
  REQUIRE_FALSE(rep.reports.empty());
  for (const auto& r : rep.reports) CHECK_MESSAGE(r.verdict == Verdict::Pass, r.summary());
  CHECK(fs::exists(dir / "measures.json"));
  CHECK(fs::exists(dir / "machine.json"));
  CHECK(fs::exists(dir / "ktrees" / "g03.ktree"));
  CHECK(fs::exists(dir / "reports" / "summary.txt"));
  auto m = LimitMachine::from_json(nlohmann::json::parse(slurp(dir / "machine.json")));
  CHECK(m.k == 1);
  CHECK(m.depth == 3);
  // the marked graphs on disk are the encoded paths
  auto g = load_ktree((dir / "ktrees" / "g00.ktree").string());
  CHECK(g.size() == 8);
  CHECK_FALSE(g.marks().empty());
  fs::remove_all(dir);
}

TEST_CASE("pipeline reruns are byte identical") {
  auto a = scratch("rerun_a"), b = scratch("rerun_b");
  auto ca = path_config(a.string()), cb = path_config(b.string());
  cb.suite.sample.threads = 3;
  run_pipeline(ca, plain_paths());
  run_pipeline(cb, plain_paths());
  auto ta = tree(a), tb = tree(b);
  CHECK(ta.size() > 10);
  CHECK(ta == tb);
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("pipeline halts at the failing stage") {
  PlainGraph k4(4);
  for (VertexId u = 0; u < 4; ++u) {
    for (VertexId v = u + 1; v < 4; ++v) k4.add_edge(u, v);
  }
  auto c = path_config();
  c.k = 2;
  auto rep = run_pipeline(c, {k4});
  CHECK(rep.halted_stage == "encode");
  CHECK(rep.exit_code == 2);
  CHECK(rep.diagnostic.find("infeasible") != std::string::npos);

  auto tiny = path_config();
  tiny.k = 3;
  tiny.node_budget = 1;
  PlainGraph grid(16);
  for (VertexId v = 0; v < 16; ++v) {
    if (v % 4 != 3) grid.add_edge(v, v + 1);
    if (v < 12) grid.add_edge(v, v + 4);
  }
  auto t = run_pipeline(tiny, {grid});
  CHECK(t.halted_stage == "encode");
  CHECK(t.exit_code == 3);

  auto bad = path_config();
  bad.depth = 0;
  CHECK(run_pipeline(bad, plain_paths()).halted_stage == "config");

  // same sizes: not a sequence of increasing order
  auto same = run_pipeline(path_config(), {families::plain_path(8), families::plain_path(8)});
  CHECK(same.exit_code == 2);
}

TEST_CASE("default instances for semipreservation and transport") {
  GraphSequence seq;
  for (std::size_t pairs : {8u, 16u, 32u}) {
    RootedKTree t(2 * pairs, 1);
    for (VertexId p = 0; p < pairs; ++p) t.add_parent(2 * p + 1, 1, 2 * p, EdgeColor::Kept);
    seq.push_back(std::move(t));
  }
  auto trie = window_trie(seq, 2, 3);
  auto est = estimate_measures(trie, 1.5);
  auto m = build_limit_machine(trie, est);
  auto all = DefinableSet::all();
  auto b = transport_bounds(m, all, all);
  REQUIRE(b.has_value());
  CHECK(b->first == 1);
  CHECK(b->second == 1);
  // dropping the only colour leaves no neighbours
  auto none = transport_bounds(m, all, all, ColorFilter::DropKept);
  REQUIRE(none.has_value());
  CHECK(none->first == 0);

  // each root has exactly one child
  auto inst = default_semipreserving(m, 1);
  REQUIRE(inst.has_value());
  CHECK(inst->count == 1);
  CHECK(inst->mass == Rational(1, 2));
  CHECK(check_measure_semipreserving(m, all, inst->y, 1, inst->count, {20000, 2, 0}).pass());
}
