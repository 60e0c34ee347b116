#include "folim/verify.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <deque>
#include <iomanip>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>
#include <thread>

#include <boost/math/distributions/chi_squared.hpp>

#include "folim/errors.hpp"
#include "folim/hintikka.hpp"

namespace folim {

namespace {

constexpr std::uint64_t kChunk = 4096;
// One-sided normal tail beyond 3 sigma.
constexpr double kTail = 0.0013498980316301;

// Runs fn(rng, count, acc) over fixed-size chunks of n samples.  Chunk c is
// seeded from (seed, c), so the per-chunk results do not depend on how many
// threads share the work.
template <class Acc, class Fn>
std::vector<Acc> run_chunks(const SampleOptions& opt, Fn fn) {
  const std::uint64_t chunks = (opt.n + kChunk - 1) / kChunk;
  std::vector<Acc> out(chunks);
  std::atomic<std::uint64_t> next{0};
  auto worker = [&] {
    for (std::uint64_t c = next++; c < chunks; c = next++) {
      auto rng = chunk_rng(opt.seed, c);
      const std::uint64_t count = std::min(kChunk, opt.n - c * kChunk);
      fn(rng, count, out[c]);
    }
  };
  unsigned threads = opt.threads ? opt.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::uint64_t>(threads, std::max<std::uint64_t>(chunks, 1)));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return out;
}

struct ExactAcc {
  std::map<std::string, std::uint64_t> counts;
  std::string counterexample;
  std::string first_unstable;

  void fail(std::string what) {
    ++counts["mismatches"];
    if (counterexample.empty()) counterexample = std::move(what);
  }
  void unstable(const std::exception& e) {
    ++counts["unstable"];
    if (first_unstable.empty()) first_unstable = e.what();
  }
};

ExactAcc merge(const std::vector<ExactAcc>& parts) {
  ExactAcc all;
  for (const auto& p : parts) {
    for (const auto& [k, v] : p.counts) all.counts[k] += v;
    if (all.counterexample.empty()) all.counterexample = p.counterexample;
    if (all.first_unstable.empty()) all.first_unstable = p.first_unstable;
  }
  return all;
}

CheckReport exact_report(std::string name, std::uint64_t samples, ExactAcc acc) {
  CheckReport r;
  r.name = std::move(name);
  r.samples = samples;
  for (const char* key : {"mismatches", "unstable"}) acc.counts.emplace(key, 0);
  r.counts = acc.counts;
  r.statistic = static_cast<double>(acc.counts["mismatches"]);
  r.tolerance = 0;
  r.counterexample = acc.counterexample;
  if (acc.counts["mismatches"] > 0) {
    r.verdict = Verdict::Fail;
  } else if (acc.counts["unstable"] > 0) {
    r.verdict = Verdict::Unstable;
  }
  if (!acc.first_unstable.empty()) r.notes.push_back("first instability: " + acc.first_unstable);
  return r;
}

// Whether parent(v, i) can be evaluated: 0 yes, 1 no parent, 2 truncated.
int step_state(const LimitMachine& m, const LimitVertex& v, int i) {
  if (!m.has_parent(v.type, i)) return 1;
  if (v.is_finite()) {
    auto lp = m.level_parent_type(v.type, i);
    if (!lp || !m.type(*lp).nu.finite() || !m.type(v.type).nu.finite()) return 2;
    return 0;
  }
  if (!m.parent_type(v.type, i)) return 2;
  return 0;
}

struct MomentAcc {
  std::int64_t sum = 0;
  std::int64_t sumsq = 0;
  std::map<std::string, std::uint64_t> counts;
  std::string first_unstable;
};

struct Moments {
  std::uint64_t n = 0;
  double mean = 0;
  double sigma = 0;  // standard error of the mean
  std::map<std::string, std::uint64_t> counts;
  std::string first_unstable;
};

Moments merge(const std::vector<MomentAcc>& parts, std::uint64_t n) {
  Moments m;
  m.n = n;
  std::int64_t sum = 0, sumsq = 0;
  for (const auto& p : parts) {
    sum += p.sum;
    sumsq += p.sumsq;
    for (const auto& [k, v] : p.counts) m.counts[k] += v;
    if (m.first_unstable.empty()) m.first_unstable = p.first_unstable;
  }
  if (n == 0) return m;
  const double dn = static_cast<double>(n);
  m.mean = static_cast<double>(sum) / dn;
  const double var = std::max(0.0, static_cast<double>(sumsq) / dn - m.mean * m.mean);
  m.sigma = std::sqrt(var / dn);
  return m;
}

std::string fmt(double x) {
  std::ostringstream os;
  os << std::setprecision(6) << x;
  return os.str();
}

bool color_kept(ColorFilter f, EdgeColor c) {
  switch (f) {
    case ColorFilter::None: return true;
    case ColorFilter::DropFill: return c == EdgeColor::Kept;
    case ColorFilter::DropKept: return c == EdgeColor::Fill;
  }
  return true;
}

std::string filter_name(ColorFilter f) {
  switch (f) {
    case ColorFilter::None: return "none";
    case ColorFilter::DropFill: return "drop-fill";
    case ColorFilter::DropKept: return "drop-kept";
  }
  return "none";
}

// Neighbours of a tau-vertex lying in s, read off the profile.  nullopt when
// the profile does not decide it; UINT64_MAX for unboundedly many.
std::optional<std::uint64_t> neighbours_in(const LimitMachine& m, const MachineType& t, const DefinableSet& s,
                                           ColorFilter filter) {
  if (t.depth < 2) return std::nullopt;  // no child counts recorded
  std::uint64_t total = 0;
  for (const auto& e : t.parents) {
    if (!e.exists || !color_kept(filter, e.color)) continue;
    auto p = e.level_parent ? e.level_parent : e.parent;
    if (!p) return std::nullopt;
    auto in = s.contains(m, *p);
    if (!in) return std::nullopt;
    total += *in ? 1 : 0;
  }
  for (const auto& c : t.children) {
    const auto& ct = m.type(c.child);
    if (!color_kept(filter, ct.parents[static_cast<std::size_t>(c.index - 1)].color)) continue;
    auto in = s.contains(m, c.child);
    if (!in) return std::nullopt;
    if (!*in) continue;
    if (c.count.infinite()) return std::numeric_limits<std::uint64_t>::max();
    if (!c.count.exact()) return std::nullopt;
    total += static_cast<std::uint64_t>(c.count.value);
  }
  return total;
}

// Depth at which transport premises are first read: that of the sets, at
// least 2 (the first depth with child counts).
int premise_depth(const LimitMachine& m, const DefinableSet& a, const DefinableSet& b) {
  return std::min(m.depth, std::max({2, a.depth(m), b.depth(m)}));
}

// neighbours_in on the restriction of a support type to depth e, or to the
// first deeper restriction that decides it.
std::optional<std::uint64_t> neighbours_from(const LimitMachine& m, std::uint64_t fp, int e, const DefinableSet& s,
                                             ColorFilter filter) {
  for (int d = e; d <= m.depth; ++d) {
    if (auto r = neighbours_in(m, m.type(m.restrict_type(fp, d)), s, filter)) return r;
  }
  return std::nullopt;
}

}  // namespace

// ---------------------------------------------------------------------------

int DefinableSet::depth(const LimitMachine& m) const {
  int d = 0;
  for (auto b : basic) d = std::max(d, m.type(b).depth);
  return d;
}

std::optional<bool> DefinableSet::contains(const LimitMachine& m, std::uint64_t tau) const {
  const auto& t = m.type(tau);
  if (mark && t.mark != *mark) return false;
  if (everything) return true;
  bool undecided = false;
  for (auto b : basic) {
    const int db = m.type(b).depth;
    if (db > t.depth) {
      undecided = true;
      continue;
    }
    if (m.restrict_type(tau, db) == b) return true;
  }
  if (undecided) return std::nullopt;
  return false;
}

nlohmann::ordered_json DefinableSet::to_json() const {
  nlohmann::ordered_json j;
  if (everything) {
    j["basic"] = "all";
  } else {
    auto arr = nlohmann::ordered_json::array();
    for (auto b : basic) arr.push_back(fingerprint_hex(b));
    j["basic"] = arr;
  }
  if (mark) j["mark"] = *mark;
  return j;
}

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::Pass: return "PASS";
    case Verdict::Fail: return "FAIL";
    case Verdict::Unstable: return "UNSTABLE";
  }
  return "?";
}

std::string CheckReport::summary() const {
  std::ostringstream os;
  os << name << ": " << to_string(verdict) << " statistic=" << fmt(statistic) << " tolerance=" << fmt(tolerance)
     << " samples=" << samples;
  for (const auto& n : notes) {
    if (n.rfind("skipped", 0) == 0) os << " (" << n << ")";
  }
  return os.str();
}

nlohmann::ordered_json CheckReport::to_json() const {
  nlohmann::ordered_json j;
  j["name"] = name;
  j["verdict"] = to_string(verdict);
  j["samples"] = samples;
  j["statistic"] = statistic;
  j["tolerance"] = tolerance;
  j["counts"] = counts;
  j["values"] = values;
  j["counterexample"] = counterexample.empty() ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(counterexample);
  j["notes"] = notes;
  return j;
}

// ---------------------------------------------------------------------------

CheckReport check_path_independence(const LimitMachine& m, const SampleOptions& opt, std::size_t cap) {
  auto parts = run_chunks<ExactAcc>(opt, [&](std::mt19937_64& rng, std::uint64_t count, ExactAcc& acc) {
    for (std::uint64_t s = 0; s < count; ++s) {
      const LimitVertex v = m.sample_vertex(rng);
      for (int i = 1; i <= m.k; ++i) {
        const int st = step_state(m, v, i);
        if (st == 1) continue;
        if (st == 2) {
          ++acc.counts["truncated"];
          continue;
        }
        try {
          const auto& tps = m.templates(v.type, i);
          const LimitVertex base = m.parent_via(v, i, tps.front());
          ++acc.counts["parents"];
          const std::size_t use = std::min(cap, tps.size());
          if (use >= 2) ++acc.counts["multi_template"];
          for (std::size_t t = 1; t < use; ++t) {
            ++acc.counts["comparisons"];
            const LimitVertex alt = m.parent_via(v, i, tps[t]);
            auto ag = m.agree(alt, base);
            if (!ag) {
              ++acc.counts["incomparable"];
            } else if (!*ag) {
              acc.fail("vertex " + v.to_string() + " index " + std::to_string(i) + ": template " +
                       tps[t].to_string() + " gives " + alt.to_string() + ", template " + tps.front().to_string() +
                       " gives " + base.to_string());
            }
          }
        } catch (const InstabilityError& e) {
          acc.unstable(e);
        }
      }
    }
  });
  auto r = exact_report("path_independence", opt.n, merge(parts));
  for (const char* key : {"parents", "multi_template", "comparisons", "incomparable", "truncated"}) r.counts.emplace(key, 0);
  if (r.counts["comparisons"] == 0) r.notes.push_back("no sampled vertex had two templates; the check is vacuous");
  return r;
}

CheckReport check_acyclicity(const LimitMachine& m, const SampleOptions& opt, int walk_length) {
  auto parts = run_chunks<ExactAcc>(opt, [&](std::mt19937_64& rng, std::uint64_t count, ExactAcc& acc) {
    for (std::uint64_t s = 0; s < count; ++s) {
      std::vector<LimitVertex> seen{m.sample_vertex(rng)};
      for (int step = 0; step < walk_length; ++step) {
        const LimitVertex& cur = seen.back();
        std::vector<int> ready;
        bool truncated = false;
        for (int i = 1; i <= m.k; ++i) {
          const int st = step_state(m, cur, i);
          if (st == 0) ready.push_back(i);
          truncated = truncated || st == 2;
        }
        if (ready.empty()) {
          ++acc.counts[truncated ? "walks_truncated" : "walks_rooted"];
          break;
        }
        const int i = ready[rng() % ready.size()];
        LimitVertex next;
        try {
          next = m.parent(cur, i);
        } catch (const InstabilityError& e) {
          acc.unstable(e);
          break;
        }
        ++acc.counts["steps"];
        for (const auto& u : seen) {
          const bool same = u == next || (!u.is_finite() && !next.is_finite() && m.agree(u, next) == true);
          if (same) {
            acc.fail("walk returns to " + next.to_string() + " after " + std::to_string(seen.size()) + " steps");
            break;
          }
        }
        seen.push_back(std::move(next));
      }
    }
  });
  ExactAcc acc = merge(parts);

  // FINITE atoms and their parent edges.
  std::map<std::pair<std::uint64_t, std::uint64_t>, std::vector<std::pair<std::uint64_t, std::uint64_t>>> graph;
  for (const auto& [fp, t] : m.types) {
    if (!t.nu.finite()) continue;
    for (std::uint64_t j = 1; j <= t.nu.count; ++j) {
      auto& out = graph[{fp, j}];
      const LimitVertex v = LimitVertex::finite(fp, j);
      for (int i = 1; i <= m.k; ++i) {
        const int st = step_state(m, v, i);
        if (st == 2) ++acc.counts["atom_edges_truncated"];
        if (st != 0) continue;
        auto p = m.parent(v, i);
        out.emplace_back(p.type, p.index);
        ++acc.counts["atom_edges"];
      }
    }
  }
  acc.counts["atoms"] = graph.size();
  // Iterative three-colour search.
  std::map<std::pair<std::uint64_t, std::uint64_t>, int> colour;
  for (const auto& [start, _] : graph) {
    if (colour[start] != 0) continue;
    std::vector<std::pair<std::pair<std::uint64_t, std::uint64_t>, std::size_t>> stack{{start, 0}};
    colour[start] = 1;
    while (!stack.empty() && acc.counterexample.empty()) {
      auto& [node, pos] = stack.back();
      const auto& out = graph[node];
      if (pos == out.size()) {
        colour[node] = 2;
        stack.pop_back();
        continue;
      }
      const auto next = out[pos++];
      const int c = colour[next];
      if (c == 1) {
        std::string cyc;
        bool on = false;
        for (const auto& [n, _p] : stack) {
          on = on || n == next;
          if (on) cyc += LimitVertex::finite(n.first, n.second).to_string() + " -> ";
        }
        acc.fail("finite atoms form a cycle: " + cyc + LimitVertex::finite(next.first, next.second).to_string());
      } else if (c == 0) {
        colour[next] = 1;
        stack.push_back({next, 0});
      }
    }
  }
  auto r = exact_report("acyclicity", opt.n, std::move(acc));
  for (const char* key : {"steps", "walks_rooted", "walks_truncated", "atom_edges", "atom_edges_truncated"}) {
    r.counts.emplace(key, 0);
  }
  return r;
}

CheckReport check_edge_consistency(const LimitMachine& m, const SampleOptions& opt) {
  auto parts = run_chunks<ExactAcc>(opt, [&](std::mt19937_64& rng, std::uint64_t count, ExactAcc& acc) {
    for (std::uint64_t s = 0; s < count; ++s) {
      const LimitVertex w = m.sample_vertex(rng);
      const auto& t = m.type(w.type);
      for (int a = 1; a <= m.k; ++a) {
        for (int b = a + 1; b <= m.k; ++b) {
          auto link = t.parent_links.find({a, b});
          if (link == t.parent_links.end() || link->second <= 0) continue;
          if (step_state(m, w, a) != 0 || step_state(m, w, b) != 0) {
            ++acc.counts["truncated"];
            continue;
          }
          try {
            const LimitVertex w1 = m.parent(w, a);
            const LimitVertex w2 = m.parent(w, b);
            const int j = link->second;
            const int st = step_state(m, w1, j);
            if (st == 1) {
              acc.fail("vertex " + w.to_string() + ": its " + std::to_string(a) + "-parent " + w1.to_string() +
                       " has no " + std::to_string(j) + "-parent");
              continue;
            }
            if (st == 2) {
              ++acc.counts["truncated"];
              continue;
            }
            const LimitVertex w12 = m.parent(w1, j);
            ++acc.counts["comparisons"];
            auto ag = m.agree(w12, w2);
            if (!ag) {
              ++acc.counts["incomparable"];
            } else if (!*ag) {
              acc.fail("vertex " + w.to_string() + ": parent(parent(w," + std::to_string(a) + ")," +
                       std::to_string(j) + ") = " + w12.to_string() + " but parent(w," + std::to_string(b) +
                       ") = " + w2.to_string());
            }
          } catch (const InstabilityError& e) {
            acc.unstable(e);
          }
        }
      }
    }
  });
  auto r = exact_report("edge_consistency", opt.n, merge(parts));
  for (const char* key : {"comparisons", "incomparable", "truncated"}) r.counts.emplace(key, 0);
  if (r.counts["comparisons"] == 0) r.notes.push_back("no sampled vertex has linked parents; the check is vacuous");
  return r;
}

CheckReport check_measure_semipreserving(const LimitMachine& m, const DefinableSet& x, const DefinableSet& y, int i,
                                         int d, const SampleOptions& opt) {
  if (i < 1 || i > m.k) throw InputError("parent index out of range");
  if (d < 0) throw InputError("child count must be nonnegative");
  CheckReport r;
  r.name = "measure_semipreserving";
  r.samples = opt.n;

  // Premise: every Y-type of infinite count, at the depth of the sets (at
  // least 2), has d i-children in X.  Deeper child counts need not settle.
  const int premise_depth = std::min(m.depth, std::max({2, x.depth(m), y.depth(m)}));
  std::uint64_t premise_types = 0, premise_bad = 0;
  for (const auto& [fp, t] : m.types) {
    if (t.depth != premise_depth || !t.nu.infinite()) continue;
    if (y.contains(m, fp) != true) continue;
    ++premise_types;
    std::int64_t children = 0;
    bool decided = true;
    for (const auto& c : t.children) {
      if (c.index != i) continue;
      auto in = x.contains(m, c.child);
      if (!in || (*in && !c.count.exact())) {
        decided = false;
        break;
      }
      if (*in) children += c.count.value;
    }
    if (!decided || children != d) {
      if (premise_bad++ == 0) {
        r.counterexample = "type " + fingerprint_hex(fp) + " has " +
                           (decided ? std::to_string(children) : std::string("undetermined")) + " " +
                           std::to_string(i) + "-children in X, declared " + std::to_string(d);
      }
    }
  }
  r.counts["premise_types"] = premise_types;
  r.counts["premise_violations"] = premise_bad;

  auto parts = run_chunks<MomentAcc>(opt, [&](std::mt19937_64& rng, std::uint64_t count, MomentAcc& acc) {
    for (std::uint64_t s = 0; s < count; ++s) {
      const LimitVertex v = m.sample_vertex(rng);
      auto in_y = y.contains(m, v.type);
      if (!in_y) {
        ++acc.counts["undecided"];
        continue;
      }
      std::int64_t lhs = 0;
      if (x.contains(m, v.type) == true && m.has_parent(v.type, i)) {
        try {
          const LimitVertex p = m.parent(v, i);
          auto in = y.contains(m, p.type);
          if (!in) {
            ++acc.counts["undecided"];
          } else {
            lhs = *in ? 1 : 0;
          }
        } catch (const InstabilityError& e) {
          ++acc.counts["unstable"];
          if (acc.first_unstable.empty()) acc.first_unstable = e.what();
        }
      }
      acc.counts["lhs_hits"] += static_cast<std::uint64_t>(lhs);
      acc.counts["y_hits"] += *in_y ? 1 : 0;
      const std::int64_t z = lhs - (*in_y ? d : 0);
      acc.sum += z;
      acc.sumsq += z * z;
    }
  });
  const Moments mo = merge(parts, opt.n);
  for (const auto& [k, v] : mo.counts) r.counts[k] = v;
  for (const char* key : {"undecided", "unstable", "lhs_hits", "y_hits"}) r.counts.emplace(key, 0);
  const double n = static_cast<double>(opt.n);
  r.values["lhs"] = static_cast<double>(r.counts["lhs_hits"]) / n;
  r.values["rhs"] = d * static_cast<double>(r.counts["y_hits"]) / n;
  r.statistic = mo.mean;
  r.tolerance = 3 * mo.sigma;
  const bool mc_pass = mo.sigma > 0 ? std::abs(mo.mean) <= r.tolerance : mo.mean == 0;
  r.values["monte_carlo_pass"] = mc_pass ? 1 : 0;
  if (!mc_pass) {
    r.verdict = Verdict::Fail;
    if (r.counterexample.empty()) {
      r.counterexample = "mu(g^-1(Y) & X) ~ " + fmt(r.values["lhs"]) + " but d mu(Y) ~ " + fmt(r.values["rhs"]);
    }
  } else if (premise_bad > 0) {
    r.verdict = Verdict::Fail;
  } else if (r.counts["undecided"] > 0 || r.counts["unstable"] > 0) {
    r.verdict = Verdict::Unstable;
  }
  if (!mo.first_unstable.empty()) r.notes.push_back("first instability: " + mo.first_unstable);
  r.notes.push_back("X = " + x.to_json().dump() + ", Y = " + y.to_json().dump() + ", i = " + std::to_string(i) +
                    ", d = " + std::to_string(d));
  return r;
}

std::optional<std::pair<std::uint64_t, std::uint64_t>> transport_bounds(const LimitMachine& m, const DefinableSet& a_set,
                                                                         const DefinableSet& b_set, ColorFilter filter) {
  std::uint64_t lo = std::numeric_limits<std::uint64_t>::max(), hi = 0;
  const int e = premise_depth(m, a_set, b_set);
  for (auto fp : m.support) {
    auto in_a = a_set.contains(m, fp), in_b = b_set.contains(m, fp);
    if (!in_a || !in_b) return std::nullopt;
    if (*in_a) {
      auto nb = neighbours_from(m, fp, e, b_set, filter);
      if (!nb) return std::nullopt;
      lo = std::min(lo, *nb);
    }
    if (*in_b) {
      auto na = neighbours_from(m, fp, e, a_set, filter);
      if (!na) return std::nullopt;
      hi = std::max(hi, *na);
    }
  }
  return std::pair{lo, hi};
}

std::optional<SemipreservingInstance> default_semipreserving(const LimitMachine& m, int i) {
  if (i < 1 || i > m.k) throw InputError("parent index out of range");
  if (m.depth < 2) return std::nullopt;
  // Counts are read at depth e >= 2; a depth-(D-1) type qualifies when all of
  // its infinite depth-e refinements agree.
  const int e = std::max(2, m.depth - 1);
  struct Group {
    std::optional<std::int64_t> count;
    bool consistent = true;
  };
  std::map<std::uint64_t, Group> groups;
  for (const auto& [fp, t] : m.types) {
    if (t.depth != e || !t.nu.infinite()) continue;
    auto& g = groups[m.restrict_type(fp, m.depth - 1)];
    std::int64_t c = 0;
    for (const auto& ch : t.children) {
      if (ch.index != i) continue;
      if (!ch.count.exact()) {
        g.consistent = false;
        break;
      }
      c += ch.count.value;
    }
    if (g.count && *g.count != c) g.consistent = false;
    g.count = c;
  }
  std::optional<SemipreservingInstance> best;
  for (const auto& [y, g] : groups) {
    if (!g.consistent || !g.count || *g.count == 0) continue;
    const auto& t = m.type(y);
    if (!t.nu.infinite()) continue;
    if (best && !(t.mu > best->mass)) continue;
    best = SemipreservingInstance{DefinableSet::of({y}), i, static_cast<int>(*g.count), t.mu};
  }
  return best;
}

CheckReport check_sfmtp(const LimitMachine& m, const DefinableSet& a_set, const DefinableSet& b_set, int a, int b,
                        const SampleOptions& opt, ColorFilter filter) {
  if (a < 0 || b < 0) throw InputError("bounds must be nonnegative");
  CheckReport r;
  r.name = "sfmtp";
  r.samples = opt.n;
  std::uint64_t checked = 0;
  const int e = premise_depth(m, a_set, b_set);
  for (auto fp : m.support) {
    auto in_a = a_set.contains(m, fp), in_b = b_set.contains(m, fp);
    if (!in_a || !in_b) throw PreconditionError("type " + fingerprint_hex(fp) + " is not decided by the sets");
    if (*in_a) {
      auto nb = neighbours_from(m, fp, e, b_set, filter);
      if (!nb) throw PreconditionError("neighbours in B of type " + fingerprint_hex(fp) + " are not determined");
      if (*nb < static_cast<std::uint64_t>(a)) {
        throw PreconditionError("type " + fingerprint_hex(fp) + " in A has " + std::to_string(*nb) +
                                " neighbours in B, fewer than " + std::to_string(a));
      }
      ++checked;
    }
    if (*in_b) {
      auto na = neighbours_from(m, fp, e, a_set, filter);
      if (!na) throw PreconditionError("neighbours in A of type " + fingerprint_hex(fp) + " are not determined");
      if (*na > static_cast<std::uint64_t>(b)) {
        throw PreconditionError("type " + fingerprint_hex(fp) + " in B has " +
                                (*na == std::numeric_limits<std::uint64_t>::max() ? std::string("unboundedly many")
                                                                                   : std::to_string(*na)) +
                                " neighbours in A, more than " + std::to_string(b));
      }
      ++checked;
    }
  }
  r.counts["premise_checks"] = checked;

  auto parts = run_chunks<MomentAcc>(opt, [&](std::mt19937_64& rng, std::uint64_t count, MomentAcc& acc) {
    for (std::uint64_t s = 0; s < count; ++s) {
      const LimitVertex v = m.sample_vertex(rng);
      const bool in_a = a_set.contains(m, v.type) == true;
      const bool in_b = b_set.contains(m, v.type) == true;
      acc.counts["a_hits"] += in_a;
      acc.counts["b_hits"] += in_b;
      const std::int64_t z = (in_a ? a : 0) - (in_b ? b : 0);
      acc.sum += z;
      acc.sumsq += z * z;
    }
  });
  const Moments mo = merge(parts, opt.n);
  for (const auto& [k, v] : mo.counts) r.counts[k] = v;
  for (const char* key : {"a_hits", "b_hits"}) r.counts.emplace(key, 0);
  const double n = static_cast<double>(opt.n);
  r.values["mu_a"] = static_cast<double>(r.counts["a_hits"]) / n;
  r.values["mu_b"] = static_cast<double>(r.counts["b_hits"]) / n;
  r.statistic = mo.mean;
  r.tolerance = 3 * mo.sigma;
  if (mo.mean > r.tolerance) {
    r.verdict = Verdict::Fail;
    r.counterexample = std::to_string(a) + " mu(A) ~ " + fmt(a * r.values["mu_a"]) + " exceeds " + std::to_string(b) +
                       " mu(B) ~ " + fmt(b * r.values["mu_b"]);
  }
  r.notes.push_back("A = " + a_set.to_json().dump() + ", B = " + b_set.to_json().dump() + ", a = " +
                    std::to_string(a) + ", b = " + std::to_string(b) + ", colour filter " + filter_name(filter));
  r.notes.push_back("sets are unions of basic sets; premises read off support types at the shallowest deciding depth");
  return r;
}

CheckReport compare_type_distribution(const LimitMachine& m, const MeasureEstimate& est, const SampleOptions& opt) {
  CheckReport r;
  r.name = "type_distribution";
  r.samples = opt.n;
  if (m.support.empty()) throw InstabilityError("empty support");

  // Weights against the estimate, exactly.
  Rational mass = 0;
  for (auto fp : m.support) {
    const auto* tm = est.find_fingerprint(fp);
    if (!tm) throw InputError("support type " + fingerprint_hex(fp) + " is missing from the estimate");
    mass += tm->mu;
  }
  const std::uint64_t total = std::accumulate(m.support_weights.begin(), m.support_weights.end(), std::uint64_t{0});
  std::uint64_t weight_bad = 0;
  for (std::size_t s = 0; s < m.support.size(); ++s) {
    const Rational want = est.find_fingerprint(m.support[s])->mu / mass;
    const Rational got(static_cast<std::int64_t>(m.support_weights[s]), static_cast<std::int64_t>(total));
    if (want != got && weight_bad++ == 0) {
      r.counterexample = "support weight of " + fingerprint_hex(m.support[s]) + " is " +
                         std::to_string(got.numerator()) + "/" + std::to_string(got.denominator()) + ", estimate " +
                         std::to_string(want.numerator()) + "/" + std::to_string(want.denominator());
    }
  }
  r.counts["weight_mismatches"] = weight_bad;
  r.values["support_mass"] = boost::rational_cast<double>(mass);

  // Finite counts.
  std::uint64_t finite_types = 0, atoms = 0, count_bad = 0;
  for (const auto& tm : est.types) {
    if (!tm.nu.finite()) continue;
    ++finite_types;
    const auto fp = tm.prefix.last().fingerprint;
    auto it = m.types.find(fp);
    if (it == m.types.end() || !it->second.nu.finite() || it->second.nu.count != tm.nu.count) {
      if (count_bad++ == 0 && r.counterexample.empty()) {
        r.counterexample = "finite type " + fingerprint_hex(fp) + " has count " + tm.nu.to_string() +
                           " in the estimate and " + (it == m.types.end() ? "none" : it->second.nu.to_string()) +
                           " in the machine";
      }
      continue;
    }
    std::uint64_t valid = 0;
    for (std::uint64_t j = 0; j <= it->second.nu.count + 1; ++j) valid += m.valid(LimitVertex::finite(fp, j));
    if (valid != tm.nu.count && count_bad++ == 0 && r.counterexample.empty()) {
      r.counterexample = "finite type " + fingerprint_hex(fp) + " has " + std::to_string(valid) + " atoms";
    }
    atoms += valid;
  }
  r.counts["finite_types"] = finite_types;
  r.counts["finite_atoms"] = atoms;
  r.counts["finite_count_mismatches"] = count_bad;

  const std::size_t s_count = m.support.size();
  std::map<std::uint64_t, std::size_t> slot;
  for (std::size_t s = 0; s < s_count; ++s) slot[m.support[s]] = s;
  struct Acc {
    std::vector<std::uint64_t> hits;
  };
  auto parts = run_chunks<Acc>(opt, [&](std::mt19937_64& rng, std::uint64_t count, Acc& acc) {
    acc.hits.assign(s_count, 0);
    for (std::uint64_t s = 0; s < count; ++s) ++acc.hits[slot.at(m.sample_vertex(rng).type)];
  });
  std::vector<std::uint64_t> hits(s_count, 0);
  for (const auto& p : parts) {
    for (std::size_t s = 0; s < p.hits.size(); ++s) hits[s] += p.hits[s];
  }
  double chi2 = 0;
  const double n = static_cast<double>(opt.n);
  for (std::size_t s = 0; s < s_count; ++s) {
    const double e = n * static_cast<double>(m.support_weights[s]) / static_cast<double>(total);
    if (e > 0) chi2 += (static_cast<double>(hits[s]) - e) * (static_cast<double>(hits[s]) - e) / e;
  }
  r.counts["support_types"] = s_count;
  r.statistic = chi2;
  if (s_count == 1) {
    r.tolerance = 0;
    r.values["frequency"] = static_cast<double>(hits[0]) / n;
  } else {
    boost::math::chi_squared dist(static_cast<double>(s_count - 1));
    r.tolerance = boost::math::quantile(boost::math::complement(dist, kTail));
  }
  const bool chi_ok = chi2 <= r.tolerance;
  r.values["chi_square_pass"] = chi_ok ? 1 : 0;
  if (!chi_ok || weight_bad > 0 || count_bad > 0) {
    r.verdict = Verdict::Fail;
    if (r.counterexample.empty()) r.counterexample = "chi-square " + fmt(chi2) + " above " + fmt(r.tolerance);
  }
  return r;
}

CheckReport check_finite_atoms(const LimitMachine& m) {
  CheckReport r;
  r.name = "finite_atoms";
  std::uint64_t edges = 0, truncated = 0, bad = 0;
  for (const auto& [fp, t] : m.types) {
    if (!t.nu.finite()) continue;
    for (int i = 1; i <= m.k; ++i) {
      const LimitVertex first = LimitVertex::finite(fp, 1);
      const int st = step_state(m, first, i);
      if (st == 1) continue;
      if (st == 2) {
        ++truncated;
        continue;
      }
      ++edges;
      const auto pfp = *m.level_parent_type(fp, i);
      const std::uint64_t nu = t.nu.count, nu_p = m.type(pfp).nu.count;
      std::string problem;
      if (nu % nu_p != 0) {
        problem = "count " + std::to_string(nu) + " of " + fingerprint_hex(fp) + " is not a multiple of " +
                  std::to_string(nu_p) + " of its " + std::to_string(i) + "-parent " + fingerprint_hex(pfp);
      } else {
        std::map<std::uint64_t, std::uint64_t> hits;
        for (std::uint64_t j = 1; j <= nu; ++j) ++hits[m.parent(LimitVertex::finite(fp, j), i).index];
        const std::uint64_t want = nu / nu_p;
        bool ok = hits.size() == nu_p;
        for (const auto& [idx, c] : hits) ok = ok && c == want && idx >= 1 && idx <= nu_p;
        if (!ok) problem = "parent map of " + fingerprint_hex(fp) + " index " + std::to_string(i) + " is not " +
                           std::to_string(want) + "-to-1";
      }
      if (!problem.empty() && bad++ == 0) r.counterexample = problem;
    }
  }
  r.counts["edges"] = edges;
  r.counts["truncated"] = truncated;
  r.counts["violations"] = bad;
  r.statistic = static_cast<double>(bad);
  if (bad > 0) r.verdict = Verdict::Fail;
  if (truncated > 0) {
    r.notes.push_back(std::to_string(truncated) + " finite types have a parent type of unresolved or infinite count at "
                      "their depth (depth truncation)");
  }
  return r;
}

CheckReport residuality_trend(const GraphSequence& seq, int r_radius) {
  CheckReport r;
  r.name = "residuality";
  std::vector<double> fractions;
  for (std::size_t g = 0; g < seq.size(); ++g) {
    const auto& t = seq[g];
    std::size_t largest = 0;
    std::vector<int> dist(t.size(), -1);
    std::vector<VertexId> touched;
    std::deque<VertexId> queue;
    for (VertexId s = 0; s < t.size(); ++s) {
      if (t.mark_of(s) != 0) continue;
      for (VertexId v : touched) dist[v] = -1;
      touched.assign({s});
      dist[s] = 0;
      queue.assign({s});
      while (!queue.empty()) {
        const VertexId v = queue.front();
        queue.pop_front();
        if (dist[v] == r_radius) continue;
        for (VertexId w : t.neighbors(v)) {
          if (t.mark_of(w) != 0 || dist[w] >= 0) continue;
          dist[w] = dist[v] + 1;
          touched.push_back(w);
          queue.push_back(w);
        }
      }
      largest = std::max(largest, touched.size());
    }
    fractions.push_back(static_cast<double>(largest) / static_cast<double>(t.size()));
    r.values["graph_" + std::to_string(g)] = fractions.back();
  }
  std::uint64_t rises = 0;
  for (std::size_t g = 1; g < fractions.size(); ++g) {
    if (fractions[g] > fractions[g - 1] && rises++ == 0) {
      r.counterexample = "fraction " + fmt(fractions[g]) + " at graph " + std::to_string(g) + " exceeds " +
                         fmt(fractions[g - 1]);
    }
  }
  if (rises == 0 && fractions.size() >= 2 && !(fractions.back() < fractions.front())) {
    rises = 1;
    r.counterexample = "no decrease from " + fmt(fractions.front()) + " to " + fmt(fractions.back());
  }
  r.samples = seq.size();
  r.counts["rises"] = rises;
  r.statistic = fractions.empty() ? 0 : fractions.back();
  if (rises > 0) r.verdict = Verdict::Fail;
  r.notes.push_back("radius " + std::to_string(r_radius) + "; a diagnostic trend, not a limit");
  return r;
}

}  // namespace folim
