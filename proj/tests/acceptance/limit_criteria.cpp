#include <boost/math/tools/roots.hpp>
#include <cmath>
#include <deque>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "criteria.hpp"
#include "folim/dyadic.hpp"
#include "folim/families.hpp"
#include "folim/pipeline.hpp"
#include "folim/verify.hpp"
#include "support/faults.hpp"

namespace acceptance {

using namespace folim;
namespace fs = std::filesystem;

namespace {

struct Built {
  std::string name;
  GraphSequence seq;
  int depth = 3;
  int window = 0;
  MeasureEstimate est;
  LimitMachine m;

  const RootedKTree& last() const { return seq[seq.size() - 1]; }
};

Built build(std::string name, GraphSequence seq, int window, double growth) {
  Built b;
  b.name = std::move(name);
  b.seq = std::move(seq);
  b.window = window;
  mark_null_partition(b.seq, 0.25, 3);
  auto trie = window_trie(b.seq, b.depth, window);
  b.est = estimate_measures(trie, growth);
  b.m = build_limit_machine(trie, b.est);
  return b;
}

const Built& paths() {
  static const Built b = build("path", GraphSequence({families::path(8), families::path(16), families::path(32),
                                                      families::path(64)}),
                               2, 2.0);
  return b;
}

const Built& binary() {
  static const Built b = [] {
    GraphSequence s;
    for (int h = 7; h <= 10; ++h) s.push_back(families::binary_in_tree(h));
    return build("binary", std::move(s), 4, 4.0);
  }();
  return b;
}

const Built& stars() {
  static const Built b = [] {
    GraphSequence s;
    for (std::size_t n : {17u, 33u, 65u, 129u}) s.push_back(families::star(n));
    return build("star", std::move(s), 3, 1.5);
  }();
  return b;
}

const Built& fans() {
  static const Built b = [] {
    GraphSequence s;
    for (std::size_t len : {16u, 32u, 64u, 128u}) s.push_back(families::fan_family(2, len));
    return build("fan2", std::move(s), 4, 4.0);
  }();
  return b;
}

const Built& combs() {
  static const Built b = [] {
    GraphSequence s;
    for (std::size_t t : {16u, 32u, 64u, 128u}) s.push_back(families::comb(t));
    return build("comb", std::move(s), 4, 4.0);
  }();
  return b;
}

SampleOptions samples(std::uint64_t n, std::uint64_t seed) {
  SampleOptions o;
  o.n = n;
  o.seed = seed;
  return o;
}

DefinableSet types_where(const RootedKTree& t, int d, const std::function<bool(VertexId)>& pred) {
  std::set<std::uint64_t> s;
  for (VertexId v = 0; v < t.size(); ++v) {
    if (pred(v)) s.insert(vertex_type(t, v, d).fingerprint);
  }
  return DefinableSet::of({s.begin(), s.end()});
}

std::string counts_of(const CheckReport& r, std::initializer_list<const char*> keys) {
  std::ostringstream os;
  bool first = true;
  for (const char* k : keys) {
    auto it = r.counts.find(k);
    os << (first ? "" : " ") << k << "=" << (it == r.counts.end() ? 0 : it->second);
    first = false;
  }
  return os.str();
}

// Kolmogorov tail P(K > x).
double kolmogorov_tail(double x) {
  double s = 0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * x * x);
    s += (k % 2 ? 2.0 : -2.0) * term;
    if (term < 1e-18) break;
  }
  return s;
}

// sqrt(n) sup |F_n - F| against the uniform law.
double ks_uniform(std::vector<double> xs) {
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    d = std::max({d, (static_cast<double>(i) + 1) / n - xs[i], xs[i] - static_cast<double>(i) / n});
  }
  return std::sqrt(n) * d;
}

}  // namespace

// ---------------------------------------------------------------------------

Outcome divisibility() {
  bool pass = true;
  std::uint64_t all_edges = 0;
  std::ostringstream os;
  for (const Built* b : {&paths(), &stars(), &binary()}) {
    const auto r = check_finite_atoms(b->m);
    // Oracle on the largest graph: type counts and the parent map itself.
    const auto& g = b->last();
    const auto types = vertex_types(g, b->depth);
    std::map<std::uint64_t, std::vector<VertexId>> members;
    for (VertexId v = 0; v < g.size(); ++v) members[types[v].fingerprint].push_back(v);
    std::uint64_t finite = 0, maps = 0, bad = 0;
    std::string first;
    for (const auto& [fp, t] : b->m.types) {
      if (t.depth != b->depth || !t.nu.finite()) continue;
      ++finite;
      const auto& mine = members[fp];
      if (mine.size() != t.nu.count) {
        if (bad++ == 0) first = "type " + fingerprint_hex(fp) + ": " + std::to_string(mine.size()) + " vertices, nu " +
                                t.nu.to_string();
        continue;
      }
      for (int i = 1; i <= b->m.k; ++i) {
        const auto lp = b->m.level_parent_type(fp, i);
        if (!lp || !b->m.type(*lp).nu.finite()) continue;
        const std::uint64_t nu_p = b->m.type(*lp).nu.count;
        ++maps;
        std::map<VertexId, std::uint64_t> received;
        bool ok = t.nu.count % nu_p == 0;
        for (VertexId v : mine) {
          auto p = g.i_parent(v, i);
          ok = ok && p && types[*p].fingerprint == *lp;
          if (p) ++received[*p];
        }
        ok = ok && received.size() == nu_p;
        for (const auto& [p, c] : received) ok = ok && c == t.nu.count / nu_p;
        if (!ok && bad++ == 0) first = "parent map of " + fingerprint_hex(fp) + " in the graph is not D-to-1";
      }
    }
    const bool ok = r.pass() && bad == 0;
    all_edges += r.counts.at("edges");
    pass = pass && ok;
    os << b->name << ": " << counts_of(r, {"edges", "violations", "truncated"}) << ", graph oracle " << finite
       << " finite types/" << maps << " maps/" << bad << " bad" << (first.empty() ? "" : " (" + first + ")") << "; ";
  }
  return {pass && all_edges > 0, os.str()};
}

Outcome torus() {
  std::mt19937_64 rng(606);
  std::uint64_t checked = 0, bad = 0;
  for (int d = 1; d <= 6; ++d) {
    for (int s = 0; s < 100000; ++s) {
      // x with up to 256 random bits; coordinate r holds bits r, r+d, ...
      Dyadic x;
      const std::size_t len = 1 + rng() % 256;
      std::vector<Dyadic> want(static_cast<std::size_t>(d));
      for (std::size_t pos = 1; pos <= len; ++pos) {
        if (!(rng() & 1u)) continue;
        x.set_bit(pos, true);
        want[(pos - 1) % static_cast<std::size_t>(d)].set_bit((pos - 1) / static_cast<std::size_t>(d) + 1, true);
      }
      const auto got = zeta(d, x);
      ++checked;
      if (got != want || zeta_inv(d, got) != x || zeta(d, zeta_inv(d, want)) != want) ++bad;
    }
  }
  // critical value of the Kolmogorov law at the two-sided 3 sigma tail
  const double tail = std::erfc(3.0 / std::sqrt(2.0));
  boost::math::tools::eps_tolerance<double> tol(40);
  const auto bracket =
      boost::math::tools::bisect([&](double x) { return kolmogorov_tail(x) - tail; }, 0.5, 3.0, tol);
  const double crit = (bracket.first + bracket.second) / 2;

  double worst = 0;
  std::string worst_at;
  for (int d = 1; d <= 6; ++d) {
    std::vector<std::vector<double>> coords(static_cast<std::size_t>(d));
    for (auto& c : coords) c.reserve(1000000);
    std::mt19937_64 draw(9000 + static_cast<std::uint64_t>(d));
    for (int s = 0; s < 1000000; ++s) {
      Dyadic x = Dyadic::from_u64(draw());
      const std::uint64_t lo = draw();
      for (int b = 0; b < 64; ++b) {
        if ((lo >> (63 - b)) & 1u) x.set_bit(65 + static_cast<std::size_t>(b), true);
      }
      const auto parts = zeta(d, x);
      for (int r = 0; r < d; ++r) coords[static_cast<std::size_t>(r)].push_back(parts[static_cast<std::size_t>(r)].to_double());
    }
    for (int r = 0; r < d; ++r) {
      const double ks = ks_uniform(std::move(coords[static_cast<std::size_t>(r)]));
      if (ks > worst) {
        worst = ks;
        worst_at = "d=" + std::to_string(d) + " coordinate " + std::to_string(r + 1);
      }
    }
  }
  std::ostringstream os;
  os << checked << " round trips against the bit-position oracle, " << bad << " wrong; KS over 10^6 samples per d: "
     << "largest sqrt(n)D = " << worst << " (" << worst_at << "), critical " << crit;
  return {bad == 0 && worst <= crit, os.str()};
}

Outcome invariants() {
  bool pass = true;
  std::ostringstream os;
  const auto opt = samples(100000, 17);
  for (const Built* b : {&paths(), &binary(), &fans()}) {
    const auto pi = check_path_independence(b->m, opt);
    const auto ec = check_edge_consistency(b->m, opt);
    const auto ac = check_acyclicity(b->m, opt);
    const bool ok = pi.pass() && ec.pass() && ac.pass() && pi.counts.at("mismatches") == 0 &&
                    ec.counts.at("mismatches") == 0 && ac.counts.at("mismatches") == 0;
    pass = pass && ok;
    os << b->name << " (k=" << b->m.k << "): independence " << to_string(pi.verdict) << " ["
       << counts_of(pi, {"comparisons", "mismatches"}) << "], edges " << to_string(ec.verdict) << " ["
       << counts_of(ec, {"comparisons", "mismatches"}) << "], acyclicity " << to_string(ac.verdict) << " ["
       << counts_of(ac, {"steps", "mismatches"}) << "]; ";
  }
  // fault-injected fixtures
  const auto small = samples(20000, 3);
  int faults_failed = 0, faults = 0;
  auto expect_fail = [&](const CheckReport& r) {
    ++faults;
    faults_failed += r.verdict == Verdict::Fail;
  };
  for (const Built* b : {&paths(), &fans()}) {
    auto bad = b->m;
    if (faults::corrupt_templates(bad) > 0) expect_fail(check_path_independence(bad, small));
  }
  {
    auto bad = fans().m;
    if (faults::corrupt_links(bad) > 0) expect_fail(check_edge_consistency(bad, small));
  }
  expect_fail(check_acyclicity(faults::finite_cycle(), samples(100, 3)));
  os << "faults: " << faults_failed << "/" << faults << " FAIL";
  return {pass && faults == 4 && faults_failed == faults, os.str()};
}

Outcome semipreservation() {
  const auto& b = binary();
  const auto& g = b.last();
  const std::size_t n = g.size(), leaves = (n + 1) / 2;
  auto leaf = [&](VertexId v) { return v >= n - leaves; };
  auto parent_of_leaves = [&](VertexId v) { return !leaf(v) && leaf(2 * v + 1); };
  const auto y = types_where(g, 2, parent_of_leaves);
  // graph-level identity: vertices whose parent is in Y number twice |Y|
  std::size_t in_y = 0, into_y = 0;
  for (VertexId v = 0; v < n; ++v) {
    in_y += parent_of_leaves(v);
    if (auto p = g.i_parent(v, 1)) into_y += parent_of_leaves(*p);
  }
  const auto opt = samples(1000000, 23);
  const auto two = check_measure_semipreserving(b.m, DefinableSet::all(), y, 1, 2, opt);
  const auto three = check_measure_semipreserving(b.m, DefinableSet::all(), y, 1, 3, opt);
  std::ostringstream os;
  os << "binary h=7..10, graph " << into_y << " = 2 x " << in_y << "; d=2 " << to_string(two.verdict)
     << " (lhs " << two.values.at("lhs") << ", rhs " << two.values.at("rhs") << ", |stat| " << std::abs(two.statistic)
     << " <= " << two.tolerance << "); d=3 " << to_string(three.verdict) << " (stat " << three.statistic << ", 3 sigma "
     << three.tolerance << ")";
  return {two.pass() && two.counts.at("premise_violations") == 0 && three.verdict == Verdict::Fail &&
              into_y == 2 * in_y,
          os.str()};
}

Outcome mass_transport() {
  const auto opt = samples(1000000, 29);
  std::ostringstream os;
  bool pass = true;
  auto run = [&](const std::string& label, const LimitMachine& m, const DefinableSet& a_set, const DefinableSet& b_set,
                 int a, int b, ColorFilter f) {
    try {
      const auto r = check_sfmtp(m, a_set, b_set, a, b, opt, f);
      pass = pass && r.pass();
      os << label << " " << to_string(r.verdict) << " (" << a << " mu(A) ~ " << a * r.values.at("mu_a") << ", " << b
         << " mu(B) ~ " << b * r.values.at("mu_b") << "); ";
    } catch (const PreconditionError& e) {
      pass = false;
      os << label << " precondition: " << e.what() << "; ";
    }
  };
  // matching: comb leaves against spine vertices, KEPT edges between them
  {
    const auto& c = combs();
    const auto& g = c.last();
    const auto leaves = types_where(g, 1, [](VertexId v) { return v % 2 == 1; });
    const auto spine = types_where(g, 1, [](VertexId v) { return v % 2 == 0; });
    run("matching", c.m, leaves, spine, 1, 1, ColorFilter::None);
    run("matching drop-fill", c.m, leaves, spine, 1, 1, ColorFilter::DropFill);
  }
  // in-tree: leaves against parents of leaves
  {
    const auto& b = binary();
    const auto& g = b.last();
    const std::size_t n = g.size(), leaves = (n + 1) / 2;
    auto leaf = [&](VertexId v) { return v >= n - leaves; };
    const auto a_set = types_where(g, 2, leaf);
    const auto b_set = types_where(g, 2, [&](VertexId v) { return !leaf(v) && leaf(2 * v + 1); });
    run("in-tree", b.m, a_set, b_set, 1, 2, ColorFilter::None);
    // without FILL edges only the KEPT leaves keep their parent
    const auto kept_leaves = types_where(g, 2, [&](VertexId v) { return leaf(v) && v % 2 == 1; });
    run("in-tree drop-fill", b.m, kept_leaves, b_set, 1, 2, ColorFilter::DropFill);
  }
  return {pass, os.str()};
}

Outcome distribution() {
  bool pass = true;
  std::ostringstream os;
  const auto opt = samples(100000, 31);
  for (const Built* b : {&paths(), &binary(), &fans()}) {
    const auto r = compare_type_distribution(b->m, b->est, opt);
    // finite counts straight from the window graphs
    std::uint64_t finite = 0, bad = 0;
    const std::size_t from = b->seq.size() - static_cast<std::size_t>(b->window);
    std::vector<std::map<std::uint64_t, std::uint64_t>> counts;
    for (std::size_t gi = from; gi < b->seq.size(); ++gi) {
      std::map<std::uint64_t, std::uint64_t> c;
      for (const auto& t : vertex_types(b->seq[gi], b->depth)) ++c[t.fingerprint];
      counts.push_back(std::move(c));
    }
    for (const auto& tm : b->est.types) {
      if (!tm.nu.finite()) continue;
      ++finite;
      const auto fp = tm.prefix.last().fingerprint;
      for (auto& c : counts) bad += c[fp] != tm.nu.count;
      std::uint64_t atoms = 0;
      for (std::uint64_t j = 0; j <= tm.nu.count + 1; ++j) atoms += b->m.valid(LimitVertex::finite(fp, j));
      bad += atoms != tm.nu.count;
    }
    const bool ok = r.pass() && bad == 0;
    pass = pass && ok;
    os << b->name << ": " << to_string(r.verdict) << " chi2 " << r.statistic << " <= " << r.tolerance << " over "
       << r.counts.at("support_types") << " support types, " << finite << " finite types, " << bad
       << " count mismatches; ";
  }
  // residuality: largest 1-ball after deleting the marks, by BFS here
  GraphSequence p({families::path(8), families::path(16), families::path(32), families::path(64)});
  mark_null_partition(p, 0.25, 3);
  const auto trend = residuality_trend(p, 1);
  std::vector<double> oracle;
  for (const auto& t : p.graphs()) {
    std::vector<std::vector<VertexId>> adj(t.size());
    for (VertexId v = 0; v < t.size(); ++v) {
      if (auto q = t.i_parent(v, 1)) {
        adj[v].push_back(*q);
        adj[*q].push_back(v);
      }
    }
    std::size_t best = 0;
    for (VertexId s = 0; s < t.size(); ++s) {
      if (t.mark_of(s)) continue;
      std::size_t ball = 1;
      for (VertexId w : adj[s]) ball += t.mark_of(w) == 0;
      best = std::max(best, ball);
    }
    oracle.push_back(static_cast<double>(best) / static_cast<double>(t.size()));
  }
  bool strictly = true, agrees = true;
  os << "residuality r=1:";
  for (std::size_t g = 0; g < oracle.size(); ++g) {
    os << " " << oracle[g];
    if (g > 0) strictly = strictly && oracle[g] < oracle[g - 1];
    agrees = agrees && std::abs(trend.values.at("graph_" + std::to_string(g)) - oracle[g]) < 1e-12;
  }
  os << (strictly ? " (strictly decreasing)" : " (not decreasing)") << (agrees ? "" : ", differs from the check");
  return {pass && strictly && agrees && trend.pass(), os.str()};
}

Outcome determinism() {
  const auto base = fs::temp_directory_path() / "folim_acceptance_determinism";
  fs::remove_all(base);
  std::vector<PlainGraph> graphs;
  for (std::size_t n : {8u, 16u, 32u, 64u}) graphs.push_back(families::plain_path(n));
  PipelineConfig cfg;
  cfg.k = 1;
  cfg.depth = 3;
  cfg.window = 2;
  cfg.growth = 2.0;
  cfg.suite.sample = samples(100000, 41);
  std::vector<int> codes;
  for (const char* run : {"a", "b"}) {
    cfg.out = (base / run).string();
    cfg.suite.sample.threads = run[0] == 'a' ? 1 : 0;
    codes.push_back(run_pipeline(cfg, graphs).exit_code);
  }
  auto read_all = [](const fs::path& root) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(root)) {
      if (!e.is_regular_file()) continue;
      std::ifstream in(e.path(), std::ios::binary);
      std::ostringstream s;
      s << in.rdbuf();
      out[fs::relative(e.path(), root).string()] = s.str();
    }
    return out;
  };
  const auto a = read_all(base / "a"), b = read_all(base / "b");
  std::size_t same = 0;
  for (const auto& [k, v] : a) {
    auto it = b.find(k);
    same += it != b.end() && it->second == v;
  }
  fs::remove_all(base);
  std::ostringstream os;
  os << "pipeline P_8..P_64 twice (1 thread, all threads): exit " << codes[0] << "/" << codes[1] << ", " << same << "/"
     << a.size() << " artifacts byte-identical";
  return {codes[0] == 0 && codes[1] == 0 && a.size() == b.size() && same == a.size() && a.size() >= 10, os.str()};
}

}  // namespace acceptance
