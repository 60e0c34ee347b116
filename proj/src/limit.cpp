#include "folim/limit.hpp"

#include <algorithm>
#include <functional>
#include <numeric>
#include <set>
#include <sstream>
#include <variant>

namespace folim {

std::string EdgeClass::to_string() const {
  switch (kind) {
    case Kind::Finitary: return "finitary:" + std::to_string(m);
    case Kind::Infinitary: return "infinitary";
    case Kind::Unstable: return "unstable:" + reason;
  }
  return {};
}

namespace {

EdgeClass parse_class(const std::string& s) {
  if (s == "infinitary") return EdgeClass::of_infinitary();
  if (s.rfind("finitary:", 0) == 0) return EdgeClass::of_finitary(std::stoll(s.substr(9)));
  if (s.rfind("unstable:", 0) == 0) return EdgeClass::of_unstable(s.substr(9));
  throw InputError("bad edge class '" + s + "'");
}

std::string resolved_string(const Resolved& r) {
  if (r.exact()) return std::to_string(r.value);
  if (r.infinite()) return "inf";
  return "unstable";
}

Resolved parse_resolved(const std::string& s) {
  Resolved r;
  if (s == "inf") {
    r.kind = Resolution::Infinite;
  } else if (s == "unstable") {
    r.kind = Resolution::Unstable;
  } else {
    r.kind = Resolution::Exact;
    r.value = std::stoll(s);
  }
  return r;
}

std::uint64_t parse_print(const std::string& s) {
  std::size_t used = 0;
  std::uint64_t v = std::stoull(s, &used, 16);
  if (used != s.size()) throw InputError("bad fingerprint '" + s + "'");
  return v;
}

}  // namespace

std::string PathTemplate::to_string() const {
  std::string s = "[";
  for (std::size_t j = 0; j < steps.size(); ++j) {
    if (j) s += ",";
    s += std::to_string(steps[j].index);
  }
  return s + "]";
}

std::string LimitVertex::to_string() const {
  std::ostringstream o;
  if (kind == Kind::Finite) {
    o << "F " << fingerprint_hex(type) << " " << index;
    return o.str();
  }
  o << "C " << fingerprint_hex(type) << " n0=" << n0.hex();
  for (std::size_t i = 0; i < h.size(); ++i) {
    o << " h" << i + 1 << "=" << h[i].q.hex() << "+" << h[i].c << "r2"
      << " n" << i + 1 << "=" << n[i].hex();
  }
  return o.str();
}

std::mt19937_64 chunk_rng(std::uint64_t seed, std::uint64_t chunk) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(chunk), static_cast<std::uint32_t>(chunk >> 32), 0x5eedu};
  return std::mt19937_64(seq);
}

// ---------------------------------------------------------------------------
// Machine operations

const MachineType& LimitMachine::type(std::uint64_t fingerprint) const {
  auto it = types.find(fingerprint);
  if (it == types.end()) throw InputError("machine has no type " + fingerprint_hex(fingerprint));
  return it->second;
}

namespace {

const ParentEdge& edge_of(const LimitMachine& m, std::uint64_t tau, int i) {
  if (i < 1 || i > m.k) throw InputError("parent index out of range");
  const auto& e = m.type(tau).parents[static_cast<std::size_t>(i - 1)];
  if (!e.exists) throw PreconditionError("type " + fingerprint_hex(tau) + " has no " + std::to_string(i) + "-parent");
  return e;
}

}  // namespace

EdgeClass LimitMachine::classify_edge(std::uint64_t tau, int i) const {
  const auto& e = edge_of(*this, tau, i);
  if (!e.cls.stable()) {
    throw InstabilityError("edge class of " + fingerprint_hex(tau) + " index " + std::to_string(i) +
                           " is unstable: " + e.cls.reason);
  }
  return e.cls;
}

const std::vector<PathTemplate>& LimitMachine::templates(std::uint64_t tau, int i) const {
  const auto& e = edge_of(*this, tau, i);
  if (e.templates.empty()) {
    throw InstabilityError("no important path for " + fingerprint_hex(tau) + " index " + std::to_string(i) + ": " +
                           e.template_error);
  }
  return e.templates;
}

const PathTemplate& LimitMachine::important_path(std::uint64_t tau, int i) const {
  return templates(tau, i).front();
}

std::optional<std::uint64_t> LimitMachine::parent_type(std::uint64_t tau, int i) const {
  if (i < 1 || i > k) throw InputError("parent index out of range");
  return type(tau).parents[static_cast<std::size_t>(i - 1)].parent;
}

std::optional<std::uint64_t> LimitMachine::level_parent_type(std::uint64_t tau, int i) const {
  if (i < 1 || i > k) throw InputError("parent index out of range");
  return type(tau).parents[static_cast<std::size_t>(i - 1)].level_parent;
}

bool LimitMachine::has_parent(std::uint64_t tau, int i) const {
  if (i < 1 || i > k) throw InputError("parent index out of range");
  return type(tau).parents[static_cast<std::size_t>(i - 1)].exists;
}

std::uint64_t LimitMachine::restrict_type(std::uint64_t tau, int d) const {
  const auto& t = type(tau);
  if (d < 1 || d > t.depth) throw InputError("restriction depth out of range");
  return t.chain[static_cast<std::size_t>(d - 1)];
}

std::optional<bool> LimitMachine::agree(const LimitVertex& a, const LimitVertex& b) const {
  const int da = depth_of(a), db = depth_of(b);
  const int d = std::min(da, db);
  if (restrict_type(a.type, d) != restrict_type(b.type, d)) return false;
  if (a.kind != b.kind) return false;
  if (a.is_finite()) {
    // Indices of different depths line up only when the counts agree.
    if (da != db && type(a.type).nu.count != type(b.type).nu.count) return std::nullopt;
    return a.index == b.index;
  }
  return a.n0 == b.n0 && a.h == b.h && a.n == b.n;
}

LimitVertex LimitMachine::parent(const LimitVertex& v, int i) const {
  const auto& e = edge_of(*this, v.type, i);
  if (v.is_finite()) {
    if (!e.level_parent) {
      throw InstabilityError("type " + fingerprint_hex(v.type) + " has no stable " + std::to_string(i) +
                             "-parent type at its depth");
    }
    const auto& t = type(v.type);
    const auto& pt = type(*e.level_parent);
    if (!t.nu.finite() || !pt.nu.finite()) {
      throw InstabilityError("finite vertex of type " + fingerprint_hex(v.type) + " has a parent type " +
                             fingerprint_hex(*e.level_parent) + " with count " + pt.nu.to_string() +
                             " (depth truncation)");
    }
    const std::uint64_t nu = t.nu.count, nu_p = pt.nu.count;
    if (v.index < 1 || v.index > nu) throw InputError("finite vertex index out of range");
    return LimitVertex::finite(*e.level_parent, (v.index * nu_p + nu - 1) / nu);
  }
  if (!e.parent) {
    throw InstabilityError("type " + fingerprint_hex(v.type) + " is at depth 1; its parent types are not determined");
  }
  return parent_via(v, i, important_path(v.type, i));
}

LimitVertex LimitMachine::parent_via(const LimitVertex& v, int i, const PathTemplate& p) const {
  if (v.is_finite()) return parent(v, i);
  if (p.steps.empty()) throw InputError("empty path template");
  Dyadic n0 = v.n0;
  std::vector<TorusCoord> h = v.h;
  std::vector<Dyadic> n = v.n;
  for (int j = 0; j < p.l_inf; ++j) {
    const auto& s = p.steps[static_cast<std::size_t>(j)];
    const std::size_t ip = static_cast<std::size_t>(s.index);
    if (s.cls.infinitary()) {
      auto parts = zeta(2 * s.index, n[ip - 1]);
      n0 = parts[0];
      for (std::size_t t = 1; t < ip; ++t) {
        h[t - 1] = TorusCoord{parts[2 * t - 1], 0};
        n[t - 1] = parts[2 * t];
      }
      h[ip - 1] = h[ip - 1].plus_sqrt2();
      n[ip - 1] = parts[2 * ip - 1];
    } else if (s.cls.finitary()) {
      n0 = n0.times_mod1(static_cast<std::uint64_t>(s.cls.m));
      if (!s.higher_finitary) h[ip - 1] = h[ip - 1].plus_sqrt2();
    } else {
      throw InstabilityError("template step with unstable class: " + s.cls.reason);
    }
  }
  const std::uint64_t head = p.steps.back().head;
  if (p.l_inf == static_cast<int>(p.steps.size())) {
    LimitVertex out;
    out.kind = LimitVertex::Kind::Continuum;
    out.type = head;
    out.n0 = std::move(n0);
    out.h = std::move(h);
    out.n = std::move(n);
    return out;
  }
  const auto& ht = type(head);
  if (!ht.nu.finite()) {
    throw InstabilityError("template for index " + std::to_string(i) + " ends at type " + fingerprint_hex(head) +
                           " with count " + ht.nu.to_string());
  }
  return LimitVertex::finite(head, 1 + n[static_cast<std::size_t>(k - 1)].floor_times(ht.nu.count));
}

bool LimitMachine::valid(const LimitVertex& v) const {
  auto it = types.find(v.type);
  if (it == types.end()) return false;
  const auto& nu = it->second.nu;
  if (v.is_finite()) return nu.finite() && v.index >= 1 && v.index <= nu.count;
  return nu.infinite() && v.h.size() == static_cast<std::size_t>(k) && v.n.size() == static_cast<std::size_t>(k);
}

LimitVertex LimitMachine::sample_vertex(std::mt19937_64& rng) const {
  if (support.empty()) throw InstabilityError("empty support: nothing to sample");
  const std::uint64_t total = std::accumulate(support_weights.begin(), support_weights.end(), std::uint64_t{0});
  // Unbiased draw in [0, total).
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % total;
  std::uint64_t r;
  do {
    r = rng();
  } while (r >= limit);
  r %= total;
  std::size_t pick = 0;
  while (r >= support_weights[pick]) {
    r -= support_weights[pick];
    ++pick;
  }
  LimitVertex v;
  v.kind = LimitVertex::Kind::Continuum;
  v.type = support[pick];
  v.n0 = Dyadic::from_u64(rng());
  for (int i = 0; i < k; ++i) {
    v.h.push_back(TorusCoord{Dyadic::from_u64(rng()), 0});
    v.n.push_back(Dyadic::from_u64(rng()));
  }
  return v;
}

// ---------------------------------------------------------------------------
// Builder

namespace {

using EdgePath = std::vector<std::pair<VertexId, int>>;

// Class codes for witness majorities: m >= 1 finitary, 0 infinitary, -1 unstable.
std::int64_t class_code(const EdgeClass& c) { return c.finitary() ? c.m : c.infinitary() ? 0 : -1; }

class Builder {
 public:
  Builder(const TypeTrie& trie, const MeasureEstimate& est, const LimitOptions& options)
      : trie_(trie), est_(est), options_(options), D_(trie.depth()) {
    L_ = options.path_bound > 0 ? options.path_bound : D_ - 1;
    k_ = trie.graph(0).arity();
  }

  LimitMachine build() {
    if (D_ < 2) throw InputError("limit machines need depth at least 2");
    for (int d = 1; d <= D_; ++d) {
      for (const auto& t : trie_.types_at(d)) {
        nu_.emplace(t.fingerprint, d == D_ ? est_.at(t).nu : measure_type(trie_, t, est_.growth_threshold).nu);
      }
    }
    LimitMachine m;
    m.k = k_;
    m.depth = D_;
    m.path_bound = L_;
    m.template_cap = options_.template_cap;
    for (int d = 1; d <= D_; ++d) {
      for (const auto& t : trie_.types_at(d)) m.types.emplace(t.fingerprint, describe(t));
    }
    for (int d = 2; d <= D_; ++d) {
      for (const auto& t : trie_.types_at(d)) {
        if (!nu_.at(t.fingerprint).infinite()) continue;
        auto& mt = m.types.at(t.fingerprint);
        for (int i = 1; i <= k_; ++i) {
          auto& e = mt.parents[static_cast<std::size_t>(i - 1)];
          if (e.parent) build_templates(t, i, e);
        }
      }
    }
    std::int64_t denom = 1;
    for (const auto& t : est_.support) denom = std::lcm(denom, est_.at(t).mu.denominator());
    for (const auto& t : est_.support) {
      const Rational mu = est_.at(t).mu;
      m.support.push_back(t.fingerprint);
      m.support_weights.push_back(static_cast<std::uint64_t>(mu.numerator() * (denom / mu.denominator())));
    }
    return m;
  }

 private:
  TypeId type_of(std::size_t g, VertexId v, int d) const { return trie_.type_at(g, v, d); }
  TypeId full_type(std::size_t g, VertexId v) const { return trie_.type_at(g, v, D_); }

  template <class F>
  Resolved majority(const TypeId& tau, F value, bool growth) const {
    std::vector<std::vector<std::int64_t>> values(trie_.graph_count());
    for (const auto& w : trie_.witnesses(tau)) {
      if (auto x = value(w)) values[w.graph].push_back(*x);
    }
    return resolve_witness_values(values, growth);
  }

  // Coarse types inherit values from their refinements; the largest graph decides.
  template <class F>
  Resolved last_majority(const TypeId& tau, F value) const {
    std::vector<std::vector<std::int64_t>> values(1);
    for (const auto& w : trie_.witnesses(tau)) {
      if (w.graph + 1 != trie_.graph_count()) continue;
      if (auto x = value(w)) values[0].push_back(*x);
    }
    return resolve_witness_values(values, false);
  }

  MachineType describe(const TypeId& tau) {
    MachineType mt;
    mt.fingerprint = tau.fingerprint;
    mt.depth = tau.depth;
    const ChainPrefix chain = trie_.chain_of(tau);
    for (const auto& c : chain.types) mt.chain.push_back(c.fingerprint);
    const TypeMeasure tm = tau.depth == D_ ? est_.at(tau) : measure_type(trie_, tau, est_.growth_threshold);
    mt.nu = tm.nu;
    mt.mu = tm.mu;
    mt.witnesses = trie_.witnesses(tau).size();
    std::optional<ImpliedProfile> prof;
    if (tau.depth >= 2) prof = implied_profile(trie_, chain, 2 * D_);
    if (prof) {
      mt.mark = prof->marks.empty() ? 0 : prof->marks.front();
      mt.initial = prof->initial_tournament;
      mt.parent_links = prof->parent_links;
      for (const auto& [key, count] : prof->child_counts_full) {
        mt.children.push_back({key.first, key.second.fingerprint, count});
      }
    } else {
      auto mark = majority(tau, [&](const Witness& w) -> std::optional<std::int64_t> {
        const int j = trie_.graph(w.graph).mark_of(w.vertex);
        return j <= tau.depth ? j : 0;
      }, false);
      mt.mark = mark.exact() ? static_cast<int>(mark.value) : 0;
      auto init = majority(tau, [&](const Witness& w) -> std::optional<std::int64_t> {
        return static_cast<int>(trie_.graph(w.graph).parents(w.vertex).size()) < k_ ? 1 : 0;
      }, false);
      mt.initial = init.exact() && init.value == 1;
    }
    mt.parents.resize(static_cast<std::size_t>(k_));
    for (int i = 1; i <= k_; ++i) {
      auto& e = mt.parents[static_cast<std::size_t>(i - 1)];
      auto has = majority(tau, [&](const Witness& w) -> std::optional<std::int64_t> {
        return trie_.graph(w.graph).i_parent(w.vertex, i) ? 1 : 0;
      }, false);
      if (has.exact() && has.value == 0) continue;
      e.exists = true;
      if (!has.exact()) {
        e.cls = EdgeClass::of_unstable("parent existence: " + has.reason);
        continue;
      }
      if (prof && prof->parent_types[static_cast<std::size_t>(i - 1)]) {
        e.parent = prof->parent_types[static_cast<std::size_t>(i - 1)]->fingerprint;
      }
      auto level = majority(tau, [&](const Witness& w) -> std::optional<std::int64_t> {
        auto p = trie_.graph(w.graph).i_parent(w.vertex, i);
        if (!p) return std::nullopt;
        return static_cast<std::int64_t>(type_of(w.graph, *p, tau.depth).fingerprint);
      }, false);
      if (level.exact()) e.level_parent = static_cast<std::uint64_t>(level.value);
      auto color = majority(tau, [&](const Witness& w) -> std::optional<std::int64_t> {
        auto c = trie_.graph(w.graph).i_edge_color(w.vertex, i);
        if (!c) return std::nullopt;
        return static_cast<std::int64_t>(*c);
      }, false);
      e.color = static_cast<EdgeColor>(color.value);
      e.cls = type_class(tau, i);
      if (prof) {
        const std::string field = "parent_type " + std::to_string(i) + ":";
        for (const auto& u : prof->unstable_fields) {
          if (u.rfind(field, 0) == 0) e.cls = EdgeClass::of_unstable("parent type" + u.substr(field.size() - 1));
        }
      }
      e.important = type_importance(tau, i);
    }
    return mt;
  }

  // Class of the i-edge at vertices of D-type tau.
  EdgeClass full_class(const TypeId& tau, int i) {
    auto key = std::make_pair(tau.fingerprint, i);
    if (auto it = classes_.find(key); it != classes_.end()) return it->second;
    Resolved r = majority(tau, [&](const Witness& w) -> std::optional<std::int64_t> {
      const auto& t = trie_.graph(w.graph);
      auto head = t.i_parent(w.vertex, i);
      if (!head) return std::nullopt;
      std::int64_t count = 0;
      for (const auto& [c, idx] : t.children(*head)) {
        if (idx == i && full_type(w.graph, c) == tau) ++count;
      }
      return count;
    }, true);
    EdgeClass out = r.exact()      ? EdgeClass::of_finitary(r.value)
                    : r.infinite() ? EdgeClass::of_infinitary()
                                   : EdgeClass::of_unstable(r.reason);
    classes_.emplace(key, out);
    return out;
  }

  EdgeClass vertex_class(std::size_t g, VertexId x, int i) { return full_class(full_type(g, x), i); }

  // Majority over the witnesses of a type of any depth.
  EdgeClass type_class(const TypeId& tau, int i) {
    if (tau.depth == D_) return full_class(tau, i);
    auto key = std::make_pair(tau.fingerprint, i);
    if (auto it = type_classes_.find(key); it != type_classes_.end()) return it->second;
    return type_classes_.emplace(key, coarse_class(tau, i)).first->second;
  }

  EdgeClass coarse_class(const TypeId& tau, int i) {
    Resolved r = last_majority(tau, [&](const Witness& w) -> std::optional<std::int64_t> {
      if (!trie_.graph(w.graph).i_parent(w.vertex, i)) return std::nullopt;
      return class_code(vertex_class(w.graph, w.vertex, i));
    });
    if (!r.exact()) return EdgeClass::of_unstable(r.reason);
    if (r.value < 0) return EdgeClass::of_unstable("refining types are unstable");
    return r.value == 0 ? EdgeClass::of_infinitary() : EdgeClass::of_finitary(r.value);
  }

  // Detour of the j-edge at x in graph g, as a list of (tail, index) edges.
  std::optional<EdgePath> find_detour(std::size_t g, VertexId x, int j) {
    const auto& t = trie_.graph(g);
    const auto target = t.i_parent(x, j);
    if (!target) return std::nullopt;
    const EdgeClass e = vertex_class(g, x, j);
    if (!e.stable()) return std::nullopt;
    EdgePath path;
    std::function<bool(VertexId)> dfs = [&](VertexId y) -> bool {
      for (const auto& slot : t.parents(y)) {
        if (y == x && slot.index == j) continue;
        const int s = slot.index;
        if (e.finitary()) {
          if (s > j - 1) continue;
        } else {
          EdgeClass c = vertex_class(g, y, s);
          if (!c.stable()) continue;
          if (c.infinitary() && s > j - 1) continue;
        }
        path.emplace_back(y, s);
        if (slot.parent == *target && path.size() >= 2) return true;
        if (static_cast<int>(path.size()) < L_ && slot.parent != *target && dfs(slot.parent)) return true;
        path.pop_back();
      }
      return false;
    };
    if (dfs(x)) return path;
    return std::nullopt;
  }

  // 1 important, 0 has a detour, -1 undetermined; for vertices of D-type tau.
  int full_importance(const TypeId& tau, int j) {
    auto key = std::make_pair(tau.fingerprint, j);
    if (auto it = importance_.find(key); it != importance_.end()) return it->second;
    int out = -1;
    if (full_class(tau, j).stable()) {
      Resolved r = majority(tau, [&](const Witness& w) -> std::optional<std::int64_t> {
        if (!trie_.graph(w.graph).i_parent(w.vertex, j)) return std::nullopt;
        return find_detour(w.graph, w.vertex, j) ? 1 : 0;
      }, false);
      if (r.exact()) out = r.value == 0 ? 1 : 0;
    }
    importance_.emplace(key, out);
    return out;
  }

  int vertex_importance(std::size_t g, VertexId x, int j) { return full_importance(full_type(g, x), j); }

  int type_importance(const TypeId& tau, int j) {
    if (tau.depth == D_) return full_importance(tau, j);
    auto key = std::make_pair(tau.fingerprint, j);
    if (auto it = type_importance_.find(key); it != type_importance_.end()) return it->second;
    Resolved r = last_majority(tau, [&](const Witness& w) -> std::optional<std::int64_t> {
      if (!trie_.graph(w.graph).i_parent(w.vertex, j)) return std::nullopt;
      return vertex_importance(w.graph, w.vertex, j);
    });
    const int out = r.exact() ? static_cast<int>(r.value) : -1;
    type_importance_.emplace(key, out);
    return out;
  }

  // Lifts a witness path starting at a vertex of depth d; error text on failure.
  std::variant<PathTemplate, std::string> lift(std::size_t g, const EdgePath& edges, int d) {
    if (static_cast<int>(edges.size()) > d - 1) {
      return "path of length " + std::to_string(edges.size()) + " exceeds the residual depth " + std::to_string(d - 1);
    }
    const auto& t = trie_.graph(g);
    PathTemplate p;
    for (std::size_t j = 0; j < edges.size(); ++j) {
      const auto [x, s] = edges[j];
      const VertexId y = *t.i_parent(x, s);
      const int tail_depth = d - static_cast<int>(j);
      const TypeId tail = type_of(g, x, tail_depth);
      if (type_importance(tail, s) != 1) {
        return "step " + std::to_string(j + 1) + " is not important at depth " + std::to_string(tail_depth);
      }
      TemplateStep step;
      step.index = s;
      step.cls = type_class(tail, s);
      const TypeId head = type_of(g, y, tail_depth - 1);
      step.head = head.fingerprint;
      for (int s2 = s + 1; s2 <= k_; ++s2) {
        if (!t.i_parent(y, s2)) continue;
        if (type_class(head, s2).finitary() && type_importance(head, s2) == 1) step.higher_finitary = true;
      }
      const NuValue nu = nu_.at(head.fingerprint);
      if (nu.kind == NuKind::Unstable) return "head type " + fingerprint_hex(head) + " has unstable count";
      if (nu.infinite()) p.l_inf = static_cast<int>(j + 1);
      p.steps.push_back(step);
    }
    for (int j = 0; j < p.l_inf; ++j) {
      if (!p.steps[static_cast<std::size_t>(j)].cls.stable()) {
        return "step " + std::to_string(j + 1) + " has unstable class";
      }
    }
    return p;
  }

  void build_templates(const TypeId& tau, int i, ParentEdge& e) {
    std::size_t tried = 0;
    std::string error = "no witness with the majority parent type";
    for (std::size_t g = trie_.graph_count(); g-- > 0 && tried < options_.witness_tries;) {
      for (const auto& w : trie_.witnesses(tau)) {
        if (w.graph != g) continue;
        if (tried == options_.witness_tries) break;
        const auto& t = trie_.graph(g);
        auto p = t.i_parent(w.vertex, i);
        if (!p || type_of(g, *p, tau.depth - 1).fingerprint != *e.parent) continue;
        ++tried;
        EdgePath path{{w.vertex, i}};
        bool ok = true;
        for (int guard = 0; ok && guard < 10000; ++guard) {
          std::size_t bad = path.size();
          for (std::size_t q = 0; q < path.size(); ++q) {
            int imp = vertex_importance(g, path[q].first, path[q].second);
            if (imp == -1) {
              error = "importance undetermined for an edge of index " + std::to_string(path[q].second);
              ok = false;
              break;
            }
            if (imp == 0) {
              bad = q;
              break;
            }
          }
          if (!ok || bad == path.size()) break;
          auto detour = find_detour(g, path[bad].first, path[bad].second);
          if (!detour) {
            error = "no detour found on the witness within length " + std::to_string(L_);
            ok = false;
            break;
          }
          path.erase(path.begin() + static_cast<std::ptrdiff_t>(bad));
          path.insert(path.begin() + static_cast<std::ptrdiff_t>(bad), detour->begin(), detour->end());
        }
        if (!ok) continue;
        auto primary = lift(g, path, tau.depth);
        if (auto* msg = std::get_if<std::string>(&primary)) {
          error = *msg;
          continue;
        }
        e.templates.push_back(std::get<PathTemplate>(primary));
        add_alternates(g, w.vertex, *p, tau.depth, e);
        return;
      }
    }
    e.template_error = error;
  }

  void add_alternates(std::size_t g, VertexId v, VertexId target, int d, ParentEdge& e) {
    const auto& t = trie_.graph(g);
    EdgePath path;
    std::function<void(VertexId)> dfs = [&](VertexId y) {
      if (e.templates.size() >= options_.template_cap) return;
      for (const auto& slot : t.parents(y)) {
        if (vertex_importance(g, y, slot.index) != 1) continue;
        path.emplace_back(y, slot.index);
        if (slot.parent == target) {
          auto lifted = lift(g, path, d);
          if (auto* p = std::get_if<PathTemplate>(&lifted)) {
            if (std::find(e.templates.begin(), e.templates.end(), *p) == e.templates.end() &&
                e.templates.size() < options_.template_cap) {
              e.templates.push_back(*p);
            }
          }
        } else if (static_cast<int>(path.size()) < d - 1) {
          dfs(slot.parent);
        }
        path.pop_back();
      }
    };
    dfs(v);
  }

  const TypeTrie& trie_;
  const MeasureEstimate& est_;
  LimitOptions options_;
  int D_;
  int L_ = 0;
  int k_ = 0;
  std::map<std::uint64_t, NuValue> nu_;
  std::map<std::pair<std::uint64_t, int>, EdgeClass> classes_;
  std::map<std::pair<std::uint64_t, int>, int> importance_;
  std::map<std::pair<std::uint64_t, int>, EdgeClass> type_classes_;
  std::map<std::pair<std::uint64_t, int>, int> type_importance_;
};

}  // namespace

LimitMachine build_limit_machine(const TypeTrie& trie, const MeasureEstimate& est, const LimitOptions& options) {
  if (trie.graph_count() == 0) throw InputError("no graphs to build a machine from");
  if (est.depth != trie.depth()) throw InputError("estimate and trie depths differ");
  return Builder(trie, est, options).build();
}

// ---------------------------------------------------------------------------
// Serialization

nlohmann::ordered_json LimitMachine::to_json() const {
  using J = nlohmann::ordered_json;
  J j;
  j["k"] = k;
  j["depth"] = depth;
  j["path_bound"] = path_bound;
  j["template_cap"] = template_cap;
  J arr = J::array();
  for (const auto& [fp, t] : types) {
    J e;
    e["fingerprint"] = fingerprint_hex(fp);
    e["depth"] = t.depth;
    std::vector<std::string> chain;
    for (auto c : t.chain) chain.push_back(fingerprint_hex(c));
    e["chain"] = chain;
    e["nu"] = t.nu.to_string();
    e["mu"] = std::to_string(t.mu.numerator()) + "/" + std::to_string(t.mu.denominator());
    e["mark"] = t.mark;
    e["initial"] = t.initial;
    e["witnesses"] = t.witnesses;
    J parents = J::array();
    for (std::size_t i = 0; i < t.parents.size(); ++i) {
      const auto& p = t.parents[i];
      J pe;
      pe["index"] = i + 1;
      pe["exists"] = p.exists;
      if (!p.exists) {
        parents.push_back(pe);
        continue;
      }
      pe["parent"] = p.parent ? J(fingerprint_hex(*p.parent)) : J(nullptr);
      pe["level_parent"] = p.level_parent ? J(fingerprint_hex(*p.level_parent)) : J(nullptr);
      pe["color"] = p.color == EdgeColor::Kept ? "kept" : "fill";
      pe["class"] = p.cls.to_string();
      pe["important"] = p.important;
      J temps = J::array();
      for (const auto& tp : p.templates) {
        J tj;
        tj["l_inf"] = tp.l_inf;
        J steps = J::array();
        for (const auto& s : tp.steps) {
          steps.push_back(J{{"index", s.index},
                            {"class", s.cls.to_string()},
                            {"head", fingerprint_hex(s.head)},
                            {"higher_finitary", s.higher_finitary}});
        }
        tj["steps"] = steps;
        temps.push_back(tj);
      }
      pe["templates"] = temps;
      if (!p.template_error.empty()) pe["template_error"] = p.template_error;
      parents.push_back(pe);
    }
    e["parents"] = parents;
    J links = J::array();
    for (const auto& [key, idx] : t.parent_links) links.push_back(J::array({key.first, key.second, idx}));
    e["parent_links"] = links;
    J children = J::array();
    for (const auto& c : t.children) {
      children.push_back(J{{"index", c.index}, {"child", fingerprint_hex(c.child)}, {"count", resolved_string(c.count)}});
    }
    e["children"] = children;
    arr.push_back(e);
  }
  j["types"] = arr;
  J sup = J::array();
  for (std::size_t s = 0; s < support.size(); ++s) {
    sup.push_back(J{{"type", fingerprint_hex(support[s])}, {"weight", support_weights[s]}});
  }
  j["support"] = sup;
  return j;
}

LimitMachine LimitMachine::from_json(const nlohmann::json& j) {
  try {
    LimitMachine m;
    m.k = j.at("k").get<int>();
    m.depth = j.at("depth").get<int>();
    m.path_bound = j.at("path_bound").get<int>();
    m.template_cap = j.at("template_cap").get<std::size_t>();
    if (m.k < 1) throw InputError("machine arity must be positive");
    for (const auto& e : j.at("types")) {
      MachineType t;
      t.fingerprint = parse_print(e.at("fingerprint").get<std::string>());
      t.depth = e.at("depth").get<int>();
      for (const auto& c : e.at("chain")) t.chain.push_back(parse_print(c.get<std::string>()));
      if (t.depth < 1 || t.chain.size() != static_cast<std::size_t>(t.depth)) {
        throw InputError("type chain length differs from its depth");
      }
      const auto nu = e.at("nu").get<std::string>();
      if (nu == "inf") t.nu.kind = NuKind::Infinite;
      else if (nu == "unstable") t.nu.kind = NuKind::Unstable;
      else t.nu = {NuKind::Finite, std::stoull(nu)};
      const auto mu = e.at("mu").get<std::string>();
      const auto slash = mu.find('/');
      t.mu = Rational(std::stoll(mu.substr(0, slash)), std::stoll(mu.substr(slash + 1)));
      t.mark = e.at("mark").get<int>();
      t.initial = e.at("initial").get<bool>();
      t.witnesses = e.at("witnesses").get<std::size_t>();
      for (const auto& pe : e.at("parents")) {
        ParentEdge p;
        p.exists = pe.at("exists").get<bool>();
        if (p.exists) {
          if (!pe.at("parent").is_null()) p.parent = parse_print(pe.at("parent").get<std::string>());
          if (!pe.at("level_parent").is_null()) {
            p.level_parent = parse_print(pe.at("level_parent").get<std::string>());
          }
          p.color = pe.at("color").get<std::string>() == "kept" ? EdgeColor::Kept : EdgeColor::Fill;
          p.cls = parse_class(pe.at("class").get<std::string>());
          p.important = pe.at("important").get<int>();
          for (const auto& tj : pe.at("templates")) {
            PathTemplate tp;
            tp.l_inf = tj.at("l_inf").get<int>();
            for (const auto& s : tj.at("steps")) {
              TemplateStep st;
              st.index = s.at("index").get<int>();
              st.cls = parse_class(s.at("class").get<std::string>());
              st.head = parse_print(s.at("head").get<std::string>());
              st.higher_finitary = s.at("higher_finitary").get<bool>();
              tp.steps.push_back(st);
            }
            p.templates.push_back(tp);
          }
          if (pe.contains("template_error")) p.template_error = pe.at("template_error").get<std::string>();
        }
        t.parents.push_back(p);
      }
      if (t.parents.size() != static_cast<std::size_t>(m.k)) throw InputError("type with wrong parent list length");
      for (const auto& l : e.at("parent_links")) {
        t.parent_links[{l.at(0).get<int>(), l.at(1).get<int>()}] = l.at(2).get<int>();
      }
      for (const auto& c : e.at("children")) {
        t.children.push_back({c.at("index").get<int>(), parse_print(c.at("child").get<std::string>()),
                              parse_resolved(c.at("count").get<std::string>())});
      }
      m.types.emplace(t.fingerprint, std::move(t));
    }
    for (const auto& s : j.at("support")) {
      m.support.push_back(parse_print(s.at("type").get<std::string>()));
      m.support_weights.push_back(s.at("weight").get<std::uint64_t>());
      if (!m.types.count(m.support.back())) throw InputError("support type missing from the machine");
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed machine document: ") + e.what());
  } catch (const std::invalid_argument&) {
    throw InputError("malformed machine document");
  } catch (const std::out_of_range&) {
    throw InputError("malformed machine document");
  }
}

}  // namespace folim
