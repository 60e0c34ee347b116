#include "folim/sequence.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <tuple>

namespace folim {

GraphSequence::GraphSequence(std::vector<RootedKTree> graphs) {
  for (auto& g : graphs) push_back(std::move(g));
}

void GraphSequence::push_back(RootedKTree t) {
  if (!graphs_.empty()) {
    if (t.arity() != arity()) throw InputError("sequence graphs must share arity");
    if (t.size() <= graphs_.back().size()) throw InputError("sequence orders must strictly increase");
  }
  graphs_.push_back(std::move(t));
}

std::vector<std::vector<VertexId>> residual_components(const RootedKTree& t,
                                                       const std::vector<bool>& removed) {
  std::vector<std::vector<VertexId>> out;
  std::vector<bool> seen(removed);
  for (VertexId s = 0; s < t.size(); ++s) {
    if (seen[s]) continue;
    std::vector<VertexId> comp{s};
    seen[s] = true;
    for (std::size_t i = 0; i < comp.size(); ++i) {
      for (VertexId w : t.neighbors(comp[i])) {
        if (!seen[w]) {
          seen[w] = true;
          comp.push_back(w);
        }
      }
    }
    out.push_back(std::move(comp));
  }
  return out;
}

namespace {

// Largest piece of `comp` after deleting `cut`; `mark` is scratch space.
std::size_t largest_piece(const RootedKTree& t, const std::vector<VertexId>& comp, VertexId cut,
                          std::vector<std::uint32_t>& mark, std::uint32_t& stamp,
                          const std::vector<bool>& removed) {
  std::size_t best = 0;
  std::vector<VertexId> stack;
  ++stamp;
  mark[cut] = stamp;
  for (VertexId s : comp) {
    if (mark[s] == stamp) continue;
    mark[s] = stamp;
    stack.assign(1, s);
    std::size_t size = 0;
    while (!stack.empty()) {
      VertexId x = stack.back();
      stack.pop_back();
      ++size;
      for (VertexId w : t.neighbors(x)) {
        if (!removed[w] && mark[w] != stamp) {
          mark[w] = stamp;
          stack.push_back(w);
        }
      }
    }
    best = std::max(best, size);
  }
  return best;
}

double largest_fraction(const RootedKTree& t, const std::vector<bool>& removed) {
  std::size_t best = 0;
  for (const auto& c : residual_components(t, removed)) best = std::max(best, c.size());
  return t.size() == 0 ? 0.0 : static_cast<double>(best) / static_cast<double>(t.size());
}

}  // namespace

MarkingPlan mark_null_partition(GraphSequence& seq, double epsilon, int radius, std::size_t cap) {
  if (!(epsilon > 0 && epsilon <= 1)) throw InputError("epsilon must lie in (0, 1]");
  if (radius < 1) throw InputError("radius must be at least 1");
  MarkingPlan plan;
  plan.epsilon = epsilon;
  plan.radius = radius;
  plan.cap = cap;
  for (std::size_t gi = 0; gi < seq.size(); ++gi) {
    RootedKTree& t = seq[gi];
    if (!t.marks().empty()) throw InputError("graph " + std::to_string(gi) + " is already marked");
    const std::size_t n = t.size();
    const double bound = epsilon * static_cast<double>(n);
    std::vector<bool> removed(n, false);
    std::vector<std::uint32_t> scratch(n, 0);
    std::uint32_t stamp = 0;
    std::vector<VertexId> chosen;
    while (true) {
      auto comps = residual_components(t, removed);
      std::vector<std::size_t> sizes;
      for (const auto& c : comps) sizes.push_back(c.size());
      std::vector<std::size_t> sorted = sizes;
      std::sort(sorted.rbegin(), sorted.rend());
      if (sorted.empty() || static_cast<double>(sorted[0]) <= bound) break;
      if (chosen.size() == cap) {
        throw InputError("marking cap " + std::to_string(cap) + " exceeded on graph " + std::to_string(gi) +
                         ": epsilon too small for the family");
      }
      using Key = std::tuple<std::size_t, std::size_t, long, VertexId>;
      std::optional<Key> best;
      for (std::size_t ci = 0; ci < comps.size(); ++ci) {
        // Largest other component: the top size unless this component is it.
        std::size_t other = 0;
        if (sorted.size() > 1) other = sizes[ci] == sorted[0] ? sorted[1] : sorted[0];
        for (VertexId v : comps[ci]) {
          std::size_t piece = largest_piece(t, comps[ci], v, scratch, stamp, removed);
          Key key{std::max(other, piece), piece, -static_cast<long>(t.neighbors(v).size()), v};
          if (!best || key < *best) best = key;
        }
      }
      VertexId v = std::get<3>(*best);
      removed[v] = true;
      chosen.push_back(v);
    }
    for (std::size_t j = 0; j < chosen.size(); ++j) t.set_mark(static_cast<int>(j + 1), chosen[j]);
    plan.marks.push_back(chosen);
    plan.largest_fraction.push_back(largest_fraction(t, removed));
  }
  std::size_t most = 0;
  for (const auto& m : plan.marks) most = std::max(most, m.size());
  for (std::size_t j = 0; j < most; ++j) {
    std::optional<TypeId> seen;
    bool stable = true;
    for (std::size_t gi = 0; gi < seq.size(); ++gi) {
      if (j >= plan.marks[gi].size()) continue;
      TypeId t = vertex_type(seq[gi], plan.marks[gi][j], radius);
      if (seen && !(*seen == t)) stable = false;
      seen = t;
    }
    plan.mark_types_stable.push_back(stable);
  }
  return plan;
}

NullPartitionReport check_null_partitioned(const GraphSequence& seq, double epsilon, int k0) {
  NullPartitionReport r;
  std::optional<std::size_t> first_good;
  for (std::size_t gi = 0; gi < seq.size(); ++gi) {
    const auto& t = seq[gi];
    std::vector<bool> removed(t.size(), false);
    for (int j = 1; j <= k0; ++j) {
      auto it = t.marks().find(j);
      if (it == t.marks().end()) {
        throw InputError("graph " + std::to_string(gi) + " lacks mark U" + std::to_string(j));
      }
      removed[it->second] = true;
    }
    double f = largest_fraction(t, removed);
    r.largest_fraction.push_back(f);
    if (f <= epsilon) {
      if (!first_good) first_good = gi;
    } else {
      first_good.reset();
    }
  }
  r.n0 = first_good;
  return r;
}

std::string NuValue::to_string() const {
  switch (kind) {
    case NuKind::Finite: return std::to_string(count);
    case NuKind::Infinite: return "inf";
    case NuKind::Unstable: return "unstable";
  }
  return {};
}

const TypeMeasure* MeasureEstimate::find(const TypeId& t) const {
  auto it = std::lower_bound(types.begin(), types.end(), t,
                             [](const TypeMeasure& m, const TypeId& x) { return m.prefix.last() < x; });
  if (it == types.end() || !(it->prefix.last() == t)) return nullptr;
  return &*it;
}

const TypeMeasure& MeasureEstimate::at(const TypeId& t) const {
  const TypeMeasure* m = find(t);
  if (!m) throw InputError("type " + fingerprint_hex(t) + " has no measure estimate");
  return *m;
}

const TypeMeasure* MeasureEstimate::find_fingerprint(std::uint64_t fingerprint) const {
  for (const auto& m : types) {
    if (m.prefix.last().fingerprint == fingerprint) return &m;
  }
  return nullptr;
}

nlohmann::ordered_json MeasureEstimate::to_json() const {
  nlohmann::ordered_json j;
  j["depth"] = depth;
  j["window"] = window;
  j["growth_threshold"] = growth_threshold;
  auto& arr = j["types"] = nlohmann::ordered_json::array();
  for (const auto& m : types) {
    nlohmann::ordered_json e;
    e["fingerprint"] = fingerprint_hex(m.prefix.last());
    std::vector<std::string> chain;
    for (const auto& t : m.prefix.types) chain.push_back(fingerprint_hex(t));
    e["chain"] = chain;
    e["nu"] = m.nu.to_string();
    e["mu"] = std::to_string(m.mu.numerator()) + "/" + std::to_string(m.mu.denominator());
    e["variation"] = m.variation;
    e["counts"] = m.window_counts;
    arr.push_back(std::move(e));
  }
  std::vector<std::string> support;
  for (const auto& t : this->support) support.push_back(fingerprint_hex(t));
  j["support"] = support;
  j["warnings"] = warnings;
  return j;
}

namespace {

std::uint64_t parse_hex(const std::string& s) {
  std::size_t used = 0;
  std::uint64_t v = 0;
  try {
    v = std::stoull(s, &used, 16);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size() || s.empty()) throw InputError("bad fingerprint '" + s + "'");
  return v;
}

Rational parse_rational(const std::string& s) {
  auto slash = s.find('/');
  try {
    if (slash == std::string::npos) return Rational(std::stoll(s));
    return Rational(std::stoll(s.substr(0, slash)), std::stoll(s.substr(slash + 1)));
  } catch (const std::exception&) {
    throw InputError("bad rational '" + s + "'");
  }
}

}  // namespace

MeasureEstimate MeasureEstimate::from_json(const nlohmann::json& j, const TypeTrie& trie) {
  try {
    MeasureEstimate m;
    m.depth = j.at("depth").get<int>();
    m.window = j.at("window").get<int>();
    m.growth_threshold = j.at("growth_threshold").get<double>();
    if (m.depth != trie.depth()) throw InputError("measure depth differs from the graphs' trie depth");
    std::map<std::uint64_t, TypeId> by_print;
    for (const auto& t : trie.types_at(m.depth)) by_print.emplace(t.fingerprint, t);
    for (const auto& e : j.at("types")) {
      auto print = parse_hex(e.at("fingerprint").get<std::string>());
      auto it = by_print.find(print);
      if (it == by_print.end()) {
        throw InputError("type " + e.at("fingerprint").get<std::string>() + " does not occur in the graphs");
      }
      TypeMeasure tm;
      tm.prefix = trie.chain_of(it->second);
      const auto nu = e.at("nu").get<std::string>();
      if (nu == "inf") {
        tm.nu.kind = NuKind::Infinite;
      } else if (nu == "unstable") {
        tm.nu.kind = NuKind::Unstable;
      } else {
        tm.nu.kind = NuKind::Finite;
        tm.nu.count = std::stoull(nu);
      }
      tm.mu = parse_rational(e.at("mu").get<std::string>());
      tm.variation = e.at("variation").get<double>();
      tm.window_counts = e.at("counts").get<std::vector<std::uint64_t>>();
      m.types.push_back(std::move(tm));
    }
    std::sort(m.types.begin(), m.types.end(),
              [](const TypeMeasure& a, const TypeMeasure& b) { return a.prefix.last() < b.prefix.last(); });
    for (const auto& s : j.at("support")) {
      const auto* tm = m.find_fingerprint(parse_hex(s.get<std::string>()));
      if (!tm) throw InputError("support type " + s.get<std::string>() + " has no entry");
      m.support.push_back(tm->prefix.last());
    }
    if (j.contains("warnings")) m.warnings = j.at("warnings").get<std::vector<std::string>>();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed measures document: ") + e.what());
  } catch (const std::invalid_argument&) {
    throw InputError("malformed measures document");
  }
}

TypeMeasure measure_type(const TypeTrie& trie, const TypeId& type, double growth_threshold,
                         std::vector<std::string>* warnings) {
  const std::size_t w = trie.graph_count();
  TypeMeasure m;
  m.prefix = trie.chain_of(type);
  m.window_counts.assign(w, 0);
  for (const auto& wit : trie.witnesses(type)) ++m.window_counts[wit.graph];
  const auto& c = m.window_counts;
  bool constant = std::all_of(c.begin(), c.end(), [&](auto x) { return x == c.front(); });
  bool nondecreasing = std::is_sorted(c.begin(), c.end());
  if (constant) {
    m.nu = {NuKind::Finite, c.front()};
  } else if (nondecreasing && static_cast<double>(c.back()) > growth_threshold * static_cast<double>(c.front())) {
    m.nu = {NuKind::Infinite, 0};
  } else {
    m.nu = {NuKind::Unstable, 0};
    if (warnings) warnings->push_back("type " + fingerprint_hex(type) + " has unstable counts");
  }
  const auto last_n = static_cast<std::int64_t>(trie.graph(w - 1).size());
  m.mu = Rational(static_cast<std::int64_t>(c.back()), last_n);
  for (std::size_t i = 0; i + 1 < w; ++i) {
    double a = static_cast<double>(c[i]) / static_cast<double>(trie.graph(i).size());
    double b = static_cast<double>(c[i + 1]) / static_cast<double>(trie.graph(i + 1).size());
    m.variation = std::max(m.variation, std::abs(a - b));
  }
  if (warnings && m.nu.finite() && m.mu.numerator() != 0) {
    warnings->push_back("finite type " + fingerprint_hex(type) + " carries mass " +
                        std::to_string(m.mu.numerator()) + "/" + std::to_string(m.mu.denominator()));
  }
  return m;
}

MeasureEstimate estimate_measures(const TypeTrie& trie, double growth_threshold) {
  const std::size_t w = trie.graph_count();
  if (w < 2) throw InputError("measure estimation needs a window of at least 2 graphs");
  const int D = trie.depth();
  MeasureEstimate est;
  est.depth = D;
  est.window = static_cast<int>(w);
  est.growth_threshold = growth_threshold;
  for (const auto& type : trie.types_at(D)) {
    TypeMeasure m = measure_type(trie, type, growth_threshold, &est.warnings);
    if (m.nu.infinite() && m.mu.numerator() > 0) est.support.push_back(type);
    est.types.push_back(std::move(m));
  }
  return est;
}

TypeTrie window_trie(const GraphSequence& seq, int depth, int window) {
  if (window < 1 || static_cast<std::size_t>(window) > seq.size()) {
    throw InputError("sequence of " + std::to_string(seq.size()) + " graphs is shorter than window " +
                     std::to_string(window));
  }
  TypeTrie trie(depth);
  for (std::size_t i = seq.size() - static_cast<std::size_t>(window); i < seq.size(); ++i) {
    trie.add_graph(std::make_shared<RootedKTree>(seq[i]));
  }
  return trie;
}

MeasureEstimate estimate_measures(const GraphSequence& seq, int depth, int window, double growth_threshold) {
  if (window < 2) throw InputError("window must be at least 2");
  return estimate_measures(window_trie(seq, depth, window), growth_threshold);
}

}  // namespace folim
