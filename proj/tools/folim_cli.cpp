// folim: command line front end.
// Exit codes: 0 pass, 1 check failure, 2 input error, 3 instability or timeout.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "folim/encoder.hpp"
#include "folim/errors.hpp"
#include "folim/families.hpp"
#include "folim/hintikka.hpp"
#include "folim/limit.hpp"
#include "folim/logic.hpp"
#include "folim/pipeline.hpp"
#include "folim/sequence.hpp"
#include "folim/verify.hpp"

namespace fs = std::filesystem;
using namespace folim;

namespace {

// Writes to `path`, or stdout when empty.
template <class Fn>
void emit(const std::string& path, Fn fn) {
  if (path.empty()) {
    fn(std::cout);
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path);
  fn(out);
  if (!out) throw InputError("write failed: " + path);
}

nlohmann::json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot read " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(path + ": " + e.what());
  }
}

GraphSequence load_sequence(const std::vector<std::string>& files) {
  std::vector<RootedKTree> trees;
  for (const auto& f : files) trees.push_back(load_ktree(f));
  return GraphSequence(std::move(trees));
}

ColorFilter parse_filter(const std::string& s) {
  if (s == "none") return ColorFilter::None;
  if (s == "drop-fill") return ColorFilter::DropFill;
  if (s == "drop-kept") return ColorFilter::DropKept;
  throw InputError("unknown color filter " + s);
}

int verdict_exit(const std::vector<CheckReport>& reports) {
  bool unstable = false;
  for (const auto& r : reports) {
    if (r.verdict == Verdict::Fail) return 1;
    unstable = unstable || r.verdict == Verdict::Unstable;
  }
  return unstable ? 3 : 0;
}

void print_reports(const std::vector<CheckReport>& reports, bool json) {
  if (json) {
    auto arr = nlohmann::ordered_json::array();
    for (const auto& r : reports) arr.push_back(r.to_json());
    std::cout << arr.dump(2) << "\n";
    return;
  }
  for (const auto& r : reports) {
    std::cout << r.summary() << "\n";
    if (!r.counterexample.empty()) std::cout << "  counterexample: " << r.counterexample << "\n";
  }
}

RootedKTree generate_one(const std::string& family, std::size_t s) {
  if (family == "path") return families::path(s);
  if (family == "star") return families::star(s);
  if (family == "binary") return families::binary_in_tree(static_cast<int>(s));
  if (family == "binary-uncolored") return families::binary_in_tree(static_cast<int>(s), false);
  if (family == "comb") return families::comb(s);
  if (family == "fan2") return families::fan_family(2, s);
  if (family == "strip") return families::strip(s);
  throw InputError("unknown family " + family);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"First-order limits of bounded tree-width graph sequences"};
  app.require_subcommand(1);

  // encode
  auto* enc = app.add_subcommand("encode", "Encode a plain graph as a 2-edge-colored rooted k-tree");
  int enc_k = 1;
  std::string enc_decomp, enc_graph, enc_out;
  std::uint64_t enc_budget = 2'000'000;
  enc->add_option("--k", enc_k, "Width bound")->required();
  enc->add_option("--decomp", enc_decomp, "Decomposition file; skips the exact search");
  enc->add_option("--budget", enc_budget, "Search node budget");
  enc->add_option("--out", enc_out, "Output file (default stdout)");
  enc->add_option("graph", enc_graph, "Plain graph file")->required();

  // types
  auto* typ = app.add_subcommand("types", "Histogram of d-types");
  int typ_depth = 1;
  std::string typ_graph;
  bool typ_json = false;
  typ->add_option("--depth", typ_depth)->required();
  typ->add_flag("--json", typ_json);
  typ->add_option("graph", typ_graph, "ktree file")->required();

  // stone
  auto* stn = app.add_subcommand("stone", "Stone pairing of a formula");
  std::string stn_formula, stn_graph;
  bool stn_sample = false, stn_json = false;
  std::uint64_t stn_samples = 200'000, stn_seed = 1;
  stn->add_option("--formula", stn_formula)->required();
  stn->add_flag("--sample", stn_sample, "Estimate by sampling when enumeration is too large");
  stn->add_option("--n", stn_samples, "Samples");
  stn->add_option("--seed", stn_seed);
  stn->add_flag("--json", stn_json);
  stn->add_option("graph", stn_graph, "ktree file")->required();

  // mark
  auto* mrk = app.add_subcommand("mark", "Greedy null-partition marking of a sequence");
  double mrk_eps = 0.25;
  int mrk_radius = 3;
  std::size_t mrk_cap = 64;
  std::string mrk_out;
  bool mrk_json = false;
  std::vector<std::string> mrk_graphs;
  mrk->add_option("--eps", mrk_eps);
  mrk->add_option("--radius", mrk_radius);
  mrk->add_option("--cap", mrk_cap);
  mrk->add_option("--out", mrk_out, "Directory for the marked ktree files");
  mrk->add_flag("--json", mrk_json);
  mrk->add_option("graphs", mrk_graphs, "ktree files in increasing order")->required();

  // measures
  auto* mes = app.add_subcommand("measures", "Estimate nu and mu per type");
  int mes_depth = 2, mes_window = 2;
  double mes_growth = 4.0;
  bool mes_json = false;
  std::string mes_out;
  std::vector<std::string> mes_graphs;
  mes->add_option("--depth", mes_depth)->required();
  mes->add_option("--window", mes_window);
  mes->add_option("--growth", mes_growth, "Count ratio above which a type counts as growing");
  mes->add_flag("--json", mes_json);
  mes->add_option("--out", mes_out, "JSON file for limit build and verify");
  mes->add_option("graphs", mes_graphs, "ktree files in increasing order")->required();

  // limit build | sample
  auto* lim = app.add_subcommand("limit", "Build or sample the limit machine");
  lim->require_subcommand(1);
  auto* lbuild = lim->add_subcommand("build", "Build a machine file");
  std::string lb_measures, lb_out;
  std::vector<std::string> lb_graphs;
  int lb_depth = 0;
  lbuild->add_option("--measures", lb_measures)->required();
  lbuild->add_option("--graphs", lb_graphs)->required();
  lbuild->add_option("--depth", lb_depth, "Must match the estimate when given");
  lbuild->add_option("--out", lb_out);
  auto* lsample = lim->add_subcommand("sample", "Sample vertices");
  std::string ls_machine;
  std::uint64_t ls_n = 10, ls_seed = 1;
  lsample->add_option("--machine", ls_machine)->required();
  lsample->add_option("--n", ls_n);
  lsample->add_option("--seed", ls_seed);

  // verify
  auto* ver = app.add_subcommand("verify", "Run the check suite on a machine");
  std::string ver_machine, ver_suite = "all", ver_measures, ver_filter = "drop-fill";
  std::vector<std::string> ver_graphs;
  std::uint64_t ver_n = 100000, ver_seed = 1;
  unsigned ver_threads = 0;
  int ver_ball = 2;
  bool ver_json = false;
  ver->add_option("--machine", ver_machine)->required();
  ver->add_option("--suite", ver_suite)->check(CLI::IsMember({"all", "invariants"}));
  ver->add_option("--n", ver_n);
  ver->add_option("--seed", ver_seed);
  ver->add_option("--threads", ver_threads);
  ver->add_option("--measures", ver_measures, "Estimate for the distribution check (needs --graphs)");
  ver->add_option("--graphs", ver_graphs, "Marked ktree files for residuality and the estimate");
  ver->add_option("--filter", ver_filter, "none, drop-fill or drop-kept");
  ver->add_option("--ball", ver_ball, "Residuality radius");
  ver->add_flag("--json", ver_json);

  // pipeline
  auto* pip = app.add_subcommand("pipeline", "encode, mark, measure, build and verify");
  PipelineConfig cfg;
  std::vector<std::string> pip_graphs;
  std::string pip_filter = "drop-fill";
  bool pip_json = false;
  pip->add_option("--k", cfg.k);
  pip->add_option("--depth", cfg.depth);
  pip->add_option("--window", cfg.window);
  pip->add_option("--eps", cfg.epsilon);
  pip->add_option("--radius", cfg.radius);
  pip->add_option("--growth", cfg.growth);
  pip->add_option("--n", cfg.suite.sample.n);
  pip->add_option("--seed", cfg.suite.sample.seed);
  pip->add_option("--threads", cfg.suite.sample.threads);
  pip->add_option("--ball", cfg.suite.ball_radius);
  pip->add_option("--budget", cfg.node_budget);
  pip->add_option("--filter", pip_filter);
  pip->add_option("--out", cfg.out);
  pip->add_flag("--json", pip_json);
  pip->add_option("graphs", pip_graphs, "Plain graph files in increasing order")->required();

  // generate
  auto* gen = app.add_subcommand("generate", "Write family graphs");
  std::string gen_family, gen_out = ".";
  std::vector<std::size_t> gen_sizes;
  bool gen_plain = false;
  gen->add_option("family", gen_family, "path, star, binary, binary-uncolored, comb, fan2, strip")->required();
  gen->add_option("--sizes", gen_sizes)->required()->delimiter(',');
  gen->add_flag("--plain", gen_plain, "Write the KEPT subgraph as a plain graph");
  gen->add_option("--out", gen_out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*enc) {
      auto g = load_plain_graph(enc_graph);
      TreeDecomposition d;
      if (!enc_decomp.empty()) {
        std::ifstream in(enc_decomp);
        if (!in) throw InputError("cannot read " + enc_decomp);
        d = read_decomposition(in);
      } else {
        auto r = exact_tree_decomposition(g, enc_k, enc_budget);
        if (r.status == DecompositionStatus::Infeasible) {
          std::cerr << "infeasible: tree-width exceeds " << enc_k << "\n";
          return 2;
        }
        if (r.status == DecompositionStatus::Timeout) {
          std::cerr << "timeout after " << r.nodes << " search nodes\n";
          return 3;
        }
        d = *r.decomposition;
      }
      auto t = encode_as_rooted_ktree(g, d, enc_k);
      emit(enc_out, [&](std::ostream& o) { write_ktree(o, t); });
      return 0;
    }

    if (*typ) {
      auto t = load_ktree(typ_graph);
      auto h = type_histogram(t, typ_depth);
      if (typ_json) {
        nlohmann::ordered_json j;
        j["depth"] = h.depth;
        auto arr = nlohmann::ordered_json::array();
        for (const auto& [id, c] : h.counts) arr.push_back({{"fingerprint", fingerprint_hex(id)}, {"count", c}});
        j["types"] = std::move(arr);
        std::cout << j.dump(2) << "\n";
      } else {
        for (const auto& [id, c] : h.counts) std::cout << fingerprint_hex(id) << " " << c << "\n";
      }
      return 0;
    }

    if (*stn) {
      auto t = load_ktree(stn_graph);
      auto phi = parse_formula(stn_formula, t.arity());
      StoneOptions so;
      so.allow_sampling = stn_sample;
      so.samples = stn_samples;
      so.seed = stn_seed;
      auto p = stone_pairing(t, phi, so);
      std::ostringstream v;
      v << p.value;
      if (stn_json) {
        nlohmann::ordered_json j{{"value", v.str()},
                                 {"decimal", boost::rational_cast<double>(p.value)},
                                 {"estimated", p.estimated},
                                 {"tuples", p.tuples},
                                 {"standard_error", p.standard_error}};
        std::cout << j.dump(2) << "\n";
      } else {
        std::cout << v.str() << (p.estimated ? " (estimated, se " + std::to_string(p.standard_error) + ")" : "")
                  << "\n";
      }
      return 0;
    }

    if (*mrk) {
      auto seq = load_sequence(mrk_graphs);
      auto plan = mark_null_partition(seq, mrk_eps, mrk_radius, mrk_cap);
      if (mrk_json) {
        nlohmann::ordered_json j{{"epsilon", plan.epsilon}, {"radius", plan.radius}, {"marks", plan.marks},
                                 {"largest_fraction", plan.largest_fraction},
                                 {"mark_types_stable", plan.mark_types_stable}};
        std::cout << j.dump(2) << "\n";
      } else {
        for (std::size_t g = 0; g < seq.size(); ++g) {
          std::cout << mrk_graphs[g] << ": marks";
          for (auto v : plan.marks[g]) std::cout << " " << v;
          std::cout << " largest=" << plan.largest_fraction[g] << "\n";
        }
      }
      if (!mrk_out.empty()) {
        fs::create_directories(mrk_out);
        for (std::size_t g = 0; g < seq.size(); ++g) {
          auto p = fs::path(mrk_out) / fs::path(mrk_graphs[g]).filename();
          emit(p.string(), [&](std::ostream& o) { write_ktree(o, seq[g]); });
        }
      }
      return 0;
    }

    if (*mes) {
      auto seq = load_sequence(mes_graphs);
      auto est = estimate_measures(seq, mes_depth, mes_window, mes_growth);
      emit(mes_out, [&](std::ostream& o) {
        if (mes_json || !mes_out.empty()) {
          o << est.to_json().dump(2) << "\n";
          return;
        }
        o << "depth fingerprint nu mu variation\n";
        for (const auto& tm : est.types) {
          o << tm.prefix.depth() << " " << fingerprint_hex(tm.prefix.last()) << " " << tm.nu.to_string() << " "
            << tm.mu << " " << tm.variation << "\n";
        }
        for (const auto& w : est.warnings) o << "# " << w << "\n";
      });
      return 0;
    }

    if (*lbuild) {
      auto j = load_json(lb_measures);
      const int depth = j.at("depth").get<int>(), window = j.at("window").get<int>();
      if (lb_depth != 0 && lb_depth != depth) throw InputError("--depth differs from the estimate's depth");
      auto seq = load_sequence(lb_graphs);
      auto trie = window_trie(seq, depth, window);
      auto est = MeasureEstimate::from_json(j, trie);
      auto m = build_limit_machine(trie, est);
      emit(lb_out, [&](std::ostream& o) { o << m.to_json().dump(2) << "\n"; });
      return 0;
    }

    if (*lsample) {
      auto m = LimitMachine::from_json(load_json(ls_machine));
      constexpr std::uint64_t chunk = 4096;
      for (std::uint64_t c = 0; c * chunk < ls_n; ++c) {
        auto rng = chunk_rng(ls_seed, c);
        for (std::uint64_t s = c * chunk; s < std::min(ls_n, (c + 1) * chunk); ++s) {
          std::cout << m.sample_vertex(rng).to_string() << "\n";
        }
      }
      return 0;
    }

    if (*ver) {
      auto m = LimitMachine::from_json(load_json(ver_machine));
      SuiteOptions so;
      so.sample = {ver_n, ver_seed, ver_threads};
      so.filter = parse_filter(ver_filter);
      so.ball_radius = ver_ball;
      std::vector<CheckReport> reports;
      if (ver_suite == "invariants") {
        reports = {check_path_independence(m, so.sample), check_edge_consistency(m, so.sample),
                   check_acyclicity(m, so.sample), check_finite_atoms(m)};
      } else {
        std::optional<GraphSequence> seq;
        std::optional<MeasureEstimate> est;
        if (!ver_graphs.empty()) seq = load_sequence(ver_graphs);
        if (!ver_measures.empty()) {
          if (!seq) throw InputError("--measures needs --graphs");
          auto j = load_json(ver_measures);
          auto trie = window_trie(*seq, j.at("depth").get<int>(), j.at("window").get<int>());
          est = MeasureEstimate::from_json(j, trie);
        }
        reports = run_suite(m, so, est ? &*est : nullptr, seq ? &*seq : nullptr);
      }
      print_reports(reports, ver_json);
      return verdict_exit(reports);
    }

    if (*pip) {
      cfg.suite.filter = parse_filter(pip_filter);
      std::vector<PlainGraph> graphs;
      for (const auto& f : pip_graphs) graphs.push_back(load_plain_graph(f));
      auto rep = run_pipeline(cfg, graphs);
      if (pip_json) {
        std::cout << rep.to_json().dump(2) << "\n";
      } else {
        print_reports(rep.reports, false);
      }
      if (!rep.halted_stage.empty()) std::cerr << "halted at " << rep.diagnostic << "\n";
      return rep.exit_code;
    }

    if (*gen) {
      fs::create_directories(gen_out);
      // zero-padded so that a shell glob lists the files in size order
      const auto width = std::to_string(*std::max_element(gen_sizes.begin(), gen_sizes.end())).size();
      for (auto s : gen_sizes) {
        auto t = generate_one(gen_family, s);
        auto digits = std::to_string(s);
        digits.insert(0, width - digits.size(), '0');
        auto p = fs::path(gen_out) / (gen_family + "_" + digits + (gen_plain ? ".graph" : ".ktree"));
        emit(p.string(), [&](std::ostream& o) {
          if (gen_plain) {
            write_plain_graph(o, kept_subgraph(t));
          } else {
            write_ktree(o, t);
          }
        });
        std::cout << p.string() << "\n";
      }
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e);
  }
  return 2;
}
