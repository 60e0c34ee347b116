#include "folim/pipeline.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>

#include "folim/errors.hpp"

namespace folim {

namespace fs = std::filesystem;

namespace {

struct StageError {
  std::string stage;
  std::string message;
  int code;
};

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw InputError("cannot write " + p.string());
  out << text;
  if (!out) throw InputError("write failed: " + p.string());
}

std::string dump(const nlohmann::ordered_json& j) { return j.dump(2) + "\n"; }

CheckReport skipped(std::string name, std::string why) {
  CheckReport r;
  r.name = std::move(name);
  r.notes.push_back("skipped: " + std::move(why));
  return r;
}

std::string filter_label(ColorFilter f) {
  switch (f) {
    case ColorFilter::None: return "unfiltered";
    case ColorFilter::DropFill: return "drop_fill";
    case ColorFilter::DropKept: return "drop_kept";
  }
  return "?";
}

CheckReport transport(const LimitMachine& m, const DefinableSet& a, const DefinableSet& b, const std::string& label,
                      ColorFilter f, const SampleOptions& opt) {
  const std::string name = "sfmtp_" + label + "_" + filter_label(f);
  auto bounds = transport_bounds(m, a, b, f);
  if (!bounds) return skipped(name, "neighbour counts not determined");
  auto [lo, hi] = *bounds;
  if (lo == 0 || lo == std::numeric_limits<std::uint64_t>::max()) return skipped(name, "no lower bound a > 0");
  if (hi == std::numeric_limits<std::uint64_t>::max()) return skipped(name, "no finite upper bound b");
  auto r = check_sfmtp(m, a, b, static_cast<int>(lo), static_cast<int>(hi), opt, f);
  r.name = name;
  r.notes.push_back("a=" + std::to_string(lo) + " b=" + std::to_string(hi));
  return r;
}

}  // namespace

std::vector<CheckReport> run_suite(const LimitMachine& m, const SuiteOptions& opt, const MeasureEstimate* est,
                                   const GraphSequence* seq) {
  std::vector<CheckReport> out;
  out.push_back(check_path_independence(m, opt.sample));
  out.push_back(check_edge_consistency(m, opt.sample));
  out.push_back(check_acyclicity(m, opt.sample));
  out.push_back(check_finite_atoms(m));
  if (est) out.push_back(compare_type_distribution(m, *est, opt.sample));
  if (seq) out.push_back(residuality_trend(*seq, opt.ball_radius));

  std::optional<SemipreservingInstance> first;
  for (int i = 1; i <= m.k; ++i) {
    const std::string name = "measure_semipreserving_" + std::to_string(i);
    auto inst = m.depth >= 2 ? default_semipreserving(m, i) : std::nullopt;
    if (!inst) {
      out.push_back(skipped(name, "no type with a fixed number of " + std::to_string(i) + "-children"));
      continue;
    }
    auto r = check_measure_semipreserving(m, DefinableSet::all(), inst->y, i, inst->count, opt.sample);
    r.name = name;
    out.push_back(std::move(r));
    if (!first) first = inst;
  }

  auto all = DefinableSet::all();
  for (auto f : {ColorFilter::None, opt.filter}) {
    out.push_back(transport(m, all, all, "all_all", f, opt.sample));
    if (first) {
      out.push_back(transport(m, first->y, all, "y_all", f, opt.sample));
      out.push_back(transport(m, all, first->y, "all_y", f, opt.sample));
    }
    if (opt.filter == ColorFilter::None) break;
  }
  return out;
}

void PipelineConfig::validate() const {
  if (k < 1) throw InputError("k must be positive");
  if (depth < 1) throw InputError("depth must be at least 1");
  if (window < 1) throw InputError("window must be positive");
  if (!(epsilon > 0)) throw InputError("epsilon must be positive");
  if (radius < 1) throw InputError("radius must be positive");
  if (!(growth > 1)) throw InputError("growth threshold must exceed 1");
  if (mark_cap < 1 || node_budget < 1) throw InputError("caps must be positive");
  if (suite.sample.n < 1) throw InputError("sample count must be positive");
  if (suite.ball_radius < 1) throw InputError("ball radius must be positive");
}

nlohmann::ordered_json PipelineReport::to_json() const {
  nlohmann::ordered_json j;
  j["exit_code"] = exit_code;
  j["halted_stage"] = halted_stage.empty() ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(halted_stage);
  j["diagnostic"] = diagnostic;
  auto arr = nlohmann::ordered_json::array();
  for (const auto& r : reports) arr.push_back({{"name", r.name}, {"verdict", to_string(r.verdict)}});
  j["checks"] = std::move(arr);
  return j;
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const InstabilityError*>(&e) || dynamic_cast<const BudgetExceeded*>(&e)) return 3;
  return 2;
}

PipelineReport run_pipeline(const PipelineConfig& cfg, const std::vector<PlainGraph>& graphs) {
  PipelineReport rep;
  const bool write = !cfg.out.empty();
  const fs::path root(cfg.out);
  std::string stage = "config";

  try {
    cfg.validate();
    if (graphs.empty()) throw InputError("no graphs given");
    if (write) {
      fs::create_directories(root / "ktrees");
      fs::create_directories(root / "reports");
    }

    stage = "encode";
    std::vector<RootedKTree> trees;
    for (std::size_t g = 0; g < graphs.size(); ++g) {
      auto dec = exact_tree_decomposition(graphs[g], cfg.k, cfg.node_budget);
      if (dec.status == DecompositionStatus::Infeasible) {
        throw InputError("graph " + std::to_string(g) + ": infeasible, tree-width exceeds " + std::to_string(cfg.k));
      }
      if (dec.status == DecompositionStatus::Timeout) {
        throw BudgetExceeded("graph " + std::to_string(g) + ": decomposition search timed out after " +
                             std::to_string(dec.nodes) + " nodes");
      }
      trees.push_back(encode_as_rooted_ktree(graphs[g], *dec.decomposition, cfg.k));
      auto v = validate_rooted_ktree(trees.back());
      if (!v.ok) throw InputError("graph " + std::to_string(g) + ": encoded tree is invalid");
    }
    GraphSequence seq(std::move(trees));

    stage = "mark";
    mark_null_partition(seq, cfg.epsilon, cfg.radius, cfg.mark_cap);
    if (write) {
      for (std::size_t g = 0; g < seq.size(); ++g) {
        char name[32];
        std::snprintf(name, sizeof name, "g%02zu.ktree", g);
        std::ofstream out(root / "ktrees" / name, std::ios::binary);
        if (!out) throw InputError("cannot write " + (root / "ktrees" / name).string());
        write_ktree(out, seq[g]);
      }
    }

    stage = "measure";
    auto trie = window_trie(seq, cfg.depth, cfg.window);
    auto est = estimate_measures(trie, cfg.growth);
    const auto est_json = est.to_json();
    if (MeasureEstimate::from_json(nlohmann::json::parse(est_json.dump()), trie).to_json() != est_json) {
      throw InputError("measure estimate does not survive serialization");
    }
    if (write) write_text(root / "measures.json", dump(est_json));

    stage = "build";
    auto m = build_limit_machine(trie, est);
    const auto m_json = m.to_json();
    if (LimitMachine::from_json(nlohmann::json::parse(m_json.dump())).to_json() != m_json) {
      throw InputError("machine does not survive serialization");
    }
    if (write) write_text(root / "machine.json", dump(m_json));

    stage = "verify";
    rep.reports = run_suite(m, cfg.suite, &est, &seq);
    bool fail = false, unstable = false;
    for (std::size_t c = 0; c < rep.reports.size(); ++c) {
      const auto& r = rep.reports[c];
      fail = fail || r.verdict == Verdict::Fail;
      unstable = unstable || r.verdict == Verdict::Unstable;
      if (write) {
        char name[96];
        std::snprintf(name, sizeof name, "%02zu_%s.json", c, r.name.c_str());
        write_text(root / "reports" / name, dump(r.to_json()));
      }
    }
    rep.exit_code = fail ? 1 : unstable ? 3 : 0;
  } catch (const std::exception& e) {
    rep.halted_stage = stage;
    rep.diagnostic = stage + ": " + e.what();
    rep.exit_code = exit_code_for(e);
  }

  if (write) {
    std::string summary;
    for (const auto& r : rep.reports) summary += r.summary() + "\n";
    if (!rep.halted_stage.empty()) summary += "halted at " + rep.diagnostic + "\n";
    try {
      fs::create_directories(root / "reports");
      write_text(root / "reports" / "summary.txt", summary);
      write_text(root / "reports" / "pipeline.json", dump(rep.to_json()));
    } catch (const std::exception& e) {
      if (rep.halted_stage.empty()) {
        rep.halted_stage = "write";
        rep.diagnostic = std::string("write: ") + e.what();
        rep.exit_code = 2;
      }
    }
  }
  return rep;
}

}  // namespace folim
