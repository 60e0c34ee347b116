#include "folim/hintikka.hpp"

#include <algorithm>
#include <cstdio>
#include <queue>
#include <set>
#include <thread>

namespace folim {

namespace {

std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::string node_key(int level, const std::vector<int>& atomic,
                     const std::vector<std::uint32_t>& children) {
  std::string key;
  key.reserve(8 + 4 * (atomic.size() + children.size()));
  auto put = [&](std::uint32_t v) { key.append(reinterpret_cast<const char*>(&v), sizeof v); };
  put(static_cast<std::uint32_t>(level));
  put(static_cast<std::uint32_t>(atomic.size()));
  for (int a : atomic) put(static_cast<std::uint32_t>(a));
  for (auto c : children) put(c);
  return key;
}

int pair_relation(const RootedKTree& t, VertexId p, VertexId q) {
  if (p == q) return -1;
  int code = t.edge_index(p, q) * 16 + t.edge_index(q, p);
  auto c = t.edge_color(p, q);
  return code * 3 + (c ? 1 + static_cast<int>(*c) : 0);
}

std::vector<int> atomic_type(const RootedKTree& t, const std::vector<VertexId>& tuple, int cap) {
  const std::size_t m = tuple.size();
  std::vector<int> a;
  a.reserve(1 + m + m * (m - 1) / 2);
  a.push_back(static_cast<int>(m));
  for (VertexId v : tuple) {
    int mark = t.mark_of(v);
    a.push_back(mark <= cap ? mark : 0);
  }
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i + 1; j < m; ++j) a.push_back(pair_relation(t, tuple[i], tuple[j]));
  }
  return a;
}

// Signature computation for one graph and one mark cap.  Keeps a private
// copy of interned keys so repeated atomic types skip the store's lock.
class SignatureComputer {
 public:
  SignatureComputer(const RootedKTree& t, int cap, TypeStore& store)
      : t_(t), cap_(cap), store_(store) {}

  std::uint32_t signature(std::vector<VertexId>& tuple, int level) {
    std::vector<int> atomic = atomic_type(t_, tuple, cap_);
    std::vector<std::uint32_t> children;
    if (level > 0) {
      std::vector<VertexId> moves;
      for (VertexId p : tuple) {
        auto nb = t_.neighbors(p);
        moves.insert(moves.end(), nb.begin(), nb.end());
      }
      std::sort(moves.begin(), moves.end());
      moves.erase(std::unique(moves.begin(), moves.end()), moves.end());
      children.reserve(moves.size());
      for (VertexId w : moves) {
        tuple.push_back(w);
        children.push_back(signature(tuple, level - 1));
        tuple.pop_back();
      }
      std::sort(children.begin(), children.end());
      children.erase(std::unique(children.begin(), children.end()), children.end());
    }
    std::string key = node_key(level, atomic, children);
    if (auto it = local_.find(key); it != local_.end()) return it->second;
    std::uint32_t h = store_.intern(level, std::move(atomic), std::move(children)).handle;
    local_.emplace(std::move(key), h);
    return h;
  }

 private:
  const RootedKTree& t_;
  int cap_;
  TypeStore& store_;
  std::unordered_map<std::string, std::uint32_t> local_;
};

}  // namespace

std::string fingerprint_hex(std::uint64_t fingerprint) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fingerprint));
  return buf;
}

TypeStore& TypeStore::global() {
  static TypeStore store;
  return store;
}

TypeId TypeStore::intern(int level, std::vector<int> atomic, std::vector<std::uint32_t> children) {
  std::string key = node_key(level, atomic, children);
  std::lock_guard lock(mutex_);
  if (auto it = index_.find(key); it != index_.end()) {
    const Node& n = nodes_[it->second];
    return {it->second, n.level, n.fingerprint};
  }
  std::vector<std::uint64_t> child_prints;
  child_prints.reserve(children.size());
  for (auto c : children) child_prints.push_back(nodes_.at(c).fingerprint);
  std::sort(child_prints.begin(), child_prints.end());
  std::uint64_t h = mix(0x51a7e5ULL + static_cast<std::uint64_t>(level));
  h = mix(h ^ atomic.size());
  for (int a : atomic) h = mix(h ^ static_cast<std::uint64_t>(static_cast<std::int64_t>(a)));
  h = mix(h ^ (child_prints.size() << 1));
  for (auto c : child_prints) h = mix(h + c);
  const auto handle = static_cast<std::uint32_t>(nodes_.size());
  nodes_.push_back(Node{level, std::move(atomic), std::move(children), h});
  index_.emplace(std::move(key), handle);
  return {handle, level, h};
}

const TypeStore::Node& TypeStore::node(std::uint32_t handle) const {
  std::lock_guard lock(mutex_);
  return nodes_.at(handle);
}

TypeId TypeStore::id(std::uint32_t handle) const {
  const Node& n = node(handle);
  return {handle, n.level, n.fingerprint};
}

std::size_t TypeStore::size() const {
  std::lock_guard lock(mutex_);
  return nodes_.size();
}

TypeId TypeStore::restrict(std::uint32_t handle, int mark_cap) {
  const std::uint64_t memo_key = (static_cast<std::uint64_t>(handle) << 16) |
                                 static_cast<std::uint64_t>(mark_cap & 0xffff);
  {
    std::lock_guard lock(mutex_);
    if (auto it = restrict_memo_.find(memo_key); it != restrict_memo_.end()) {
      const Node& n = nodes_[it->second];
      return {it->second, n.level, n.fingerprint};
    }
  }
  const Node& n = node(handle);
  if (n.level < 1) throw InputError("cannot restrict a level-0 signature");
  std::vector<int> atomic = n.atomic;
  const int m = atomic.front();
  for (int i = 1; i <= m; ++i) {
    if (atomic[static_cast<std::size_t>(i)] > mark_cap) atomic[static_cast<std::size_t>(i)] = 0;
  }
  std::vector<std::uint32_t> children;
  if (n.level >= 2) {
    for (auto c : n.children) children.push_back(restrict(c, mark_cap).handle);
    std::sort(children.begin(), children.end());
    children.erase(std::unique(children.begin(), children.end()), children.end());
  }
  TypeId out = intern(n.level - 1, std::move(atomic), std::move(children));
  std::lock_guard lock(mutex_);
  restrict_memo_.emplace(memo_key, out.handle);
  return out;
}

TypeId vertex_type(const RootedKTree& t, VertexId v, int d, TypeStore& store) {
  if (d < 1) throw InputError("type depth must be at least 1");
  if (v >= t.size()) throw InputError("vertex out of range");
  SignatureComputer c(t, d, store);
  std::vector<VertexId> tuple{v};
  return store.id(c.signature(tuple, d));
}

std::vector<TypeId> vertex_types(const RootedKTree& t, int d, unsigned threads, TypeStore& store) {
  if (d < 1) throw InputError("type depth must be at least 1");
  const std::size_t n = t.size();
  std::vector<std::uint32_t> handles(n);
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(n / 16, 1)));
  auto work = [&](unsigned worker) {
    SignatureComputer c(t, d, store);
    std::vector<VertexId> tuple(1);
    for (std::size_t v = worker; v < n; v += threads) {
      tuple[0] = static_cast<VertexId>(v);
      handles[v] = c.signature(tuple, d);
    }
  };
  if (threads == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < threads; ++w) pool.emplace_back(work, w);
    for (auto& th : pool) th.join();
  }
  std::vector<TypeId> out;
  out.reserve(n);
  for (auto h : handles) out.push_back(store.id(h));
  return out;
}

TypeId restriction(const TypeId& type, TypeStore& store) {
  if (type.depth < 2) throw InputError("restriction needs a type of depth at least 2");
  return store.restrict(type.handle, type.depth - 1);
}

TypeHistogram type_histogram(const RootedKTree& t, int d, TypeStore& store) {
  TypeHistogram h;
  h.depth = d;
  for (const auto& id : vertex_types(t, d, 0, store)) ++h.counts[id];
  return h;
}

bool hanf_equivalent(const TypeHistogram& a, const TypeHistogram& b, std::size_t gamma) {
  if (a.depth != b.depth) throw InputError("histograms of different depth");
  auto count = [](const TypeHistogram& h, const TypeId& t) -> std::size_t {
    auto it = h.counts.find(t);
    return it == h.counts.end() ? 0 : it->second;
  };
  auto agree = [&](const TypeId& t) {
    std::size_t x = count(a, t), y = count(b, t);
    return x == y || (x >= gamma && y >= gamma);
  };
  for (const auto& [t, c] : a.counts) {
    if (!agree(t)) return false;
  }
  for (const auto& [t, c] : b.counts) {
    if (!agree(t)) return false;
  }
  return true;
}

TypeTrie::TypeTrie(int depth, TypeStore& store) : depth_(depth), store_(&store) {
  if (depth < 1) throw InputError("trie depth must be at least 1");
}

std::size_t TypeTrie::add_graph(std::shared_ptr<const RootedKTree> t, unsigned threads) {
  const std::size_t g = graphs_.size();
  const std::size_t n = t->size();
  std::vector<std::vector<TypeId>> per_depth(static_cast<std::size_t>(depth_));
  per_depth[static_cast<std::size_t>(depth_ - 1)] = vertex_types(*t, depth_, threads, *store_);
  for (int d = depth_ - 1; d >= 1; --d) {
    auto& below = per_depth[static_cast<std::size_t>(d - 1)];
    const auto& above = per_depth[static_cast<std::size_t>(d)];
    below.reserve(n);
    for (const auto& id : above) {
      TypeId r = store_->restrict(id.handle, d);
      below.push_back(r);
      prefix_parent_.emplace(id, r);
    }
  }
  for (int d = 1; d <= depth_; ++d) {
    const auto& level = per_depth[static_cast<std::size_t>(d - 1)];
    for (VertexId v = 0; v < n; ++v) witnesses_[level[v]].push_back({g, v});
  }
  graphs_.push_back(std::move(t));
  types_.push_back(std::move(per_depth));
  return g;
}

TypeId TypeTrie::type_at(std::size_t graph, VertexId v, int d) const {
  if (d < 1 || d > depth_) throw InputError("depth outside the trie");
  return types_.at(graph).at(static_cast<std::size_t>(d - 1)).at(v);
}

ChainPrefix TypeTrie::chain_of(std::size_t graph, VertexId v) const {
  ChainPrefix c;
  for (int d = 1; d <= depth_; ++d) c.types.push_back(type_at(graph, v, d));
  return c;
}

ChainPrefix TypeTrie::chain_of(const TypeId& type) const {
  ChainPrefix c;
  std::optional<TypeId> cur = type;
  while (cur) {
    if (!contains(*cur)) throw InputError("type " + fingerprint_hex(*cur) + " not in the trie");
    c.types.push_back(*cur);
    cur = prefix_parent(*cur);
  }
  std::reverse(c.types.begin(), c.types.end());
  return c;
}

const std::vector<Witness>& TypeTrie::witnesses(const TypeId& type) const {
  auto it = witnesses_.find(type);
  if (it == witnesses_.end()) throw InputError("type " + fingerprint_hex(type) + " has no witnesses");
  return it->second;
}

std::optional<TypeId> TypeTrie::prefix_parent(const TypeId& type) const {
  if (type.depth <= 1) return std::nullopt;
  auto it = prefix_parent_.find(type);
  if (it == prefix_parent_.end()) throw InputError("type " + fingerprint_hex(type) + " not in the trie");
  return it->second;
}

std::vector<TypeId> TypeTrie::types_at(int d) const {
  std::vector<TypeId> out;
  for (const auto& [t, w] : witnesses_) {
    if (t.depth == d) out.push_back(t);
  }
  return out;
}

bool has_indexed_path(const RootedKTree& t, VertexId from, VertexId to, unsigned mask, int bound) {
  std::vector<int> dist(t.size(), -1);
  std::queue<VertexId> q;
  dist[from] = 0;
  q.push(from);
  while (!q.empty()) {
    VertexId x = q.front();
    q.pop();
    if (dist[x] == bound) continue;
    for (const auto& slot : t.parents(x)) {
      if (!(mask >> (slot.index - 1) & 1u)) continue;
      if (slot.parent == to) return true;
      if (dist[slot.parent] < 0) {
        dist[slot.parent] = dist[x] + 1;
        q.push(slot.parent);
      }
    }
  }
  return false;
}

namespace {

// Collects one value per witness, grouped by graph.
class FieldCollector {
 public:
  explicit FieldCollector(std::size_t graphs) : graphs_(graphs) {}

  void add(const std::string& field, std::size_t graph, std::int64_t value) {
    auto& slot = fields_[field];
    if (slot.empty()) slot.resize(graphs_);
    slot[graph].push_back(value);
  }
  const std::map<std::string, std::vector<std::vector<std::int64_t>>>& fields() const { return fields_; }

 private:
  std::size_t graphs_;
  std::map<std::string, std::vector<std::vector<std::int64_t>>> fields_;
};

// Small integer codes for type ids so they fit the witness resolver.
class TypeCodes {
 public:
  std::int64_t code(const TypeId& t) {
    auto [it, fresh] = codes_.emplace(t, static_cast<std::int64_t>(types_.size()));
    if (fresh) types_.push_back(t);
    return it->second;
  }
  const TypeId& type(std::int64_t code) const { return types_.at(static_cast<std::size_t>(code)); }

 private:
  std::map<TypeId, std::int64_t> codes_;
  std::vector<TypeId> types_;
};

}  // namespace

ImpliedProfile implied_profile(const TypeTrie& trie, const ChainPrefix& tau, int path_bound) {
  const int D = tau.depth();
  if (D < 2) throw InputError("implied profiles need depth at least 2");
  if (D > trie.depth()) throw InputError("chain is deeper than the trie");
  const auto& ws = trie.witnesses(tau.last());
  if (ws.empty()) throw InputError("type has no witnesses");
  const int k = trie.graph(ws.front().graph).arity();

  ImpliedProfile p;
  p.type = tau.last();
  p.witness_count = ws.size();
  TypeCodes codes;
  FieldCollector fields(trie.graph_count());
  std::set<std::pair<int, TypeId>> child_keys, full_child_keys;

  // First pass: the set of child types ever seen, so absent ones count 0.
  for (const auto& w : ws) {
    const auto& t = trie.graph(w.graph);
    for (const auto& [c, i] : t.children(w.vertex)) {
      child_keys.emplace(i, trie.type_at(w.graph, c, D - 1));
      full_child_keys.emplace(i, trie.type_at(w.graph, c, D));
    }
  }

  for (const auto& w : ws) {
    const auto& t = trie.graph(w.graph);
    const VertexId v = w.vertex;
    std::vector<std::optional<VertexId>> par(static_cast<std::size_t>(k));
    for (int i = 1; i <= k; ++i) {
      par[static_cast<std::size_t>(i - 1)] = t.i_parent(v, i);
      const auto& pv = par[static_cast<std::size_t>(i - 1)];
      const std::string idx = std::to_string(i);
      fields.add("parent_type " + idx, w.graph, pv ? codes.code(trie.type_at(w.graph, *pv, D - 1)) : -1);
      fields.add("parent_full_type " + idx, w.graph, pv ? codes.code(trie.type_at(w.graph, *pv, D)) : -1);
    }
    std::map<std::pair<int, TypeId>, std::int64_t> counts, full_counts;
    for (const auto& [c, i] : t.children(v)) {
      ++counts[{i, trie.type_at(w.graph, c, D - 1)}];
      ++full_counts[{i, trie.type_at(w.graph, c, D)}];
    }
    for (const auto& key : child_keys) {
      auto it = counts.find(key);
      fields.add("child_count " + std::to_string(key.first) + " " + fingerprint_hex(key.second), w.graph,
                 it == counts.end() ? 0 : it->second);
    }
    for (const auto& key : full_child_keys) {
      auto it = full_counts.find(key);
      fields.add("child_count_full " + std::to_string(key.first) + " " + fingerprint_hex(key.second),
                 w.graph, it == full_counts.end() ? 0 : it->second);
    }
    const int mark = t.mark_of(v);
    fields.add("mark", w.graph, mark <= D ? mark : 0);
    fields.add("initial_tournament", w.graph, static_cast<std::int64_t>(t.parents(v).size()) < k ? 1 : 0);
    for (int i = 1; i <= k; ++i) {
      for (int j = 1; j <= k; ++j) {
        if (i == j) continue;
        const auto& a = par[static_cast<std::size_t>(i - 1)];
        const auto& b = par[static_cast<std::size_t>(j - 1)];
        const std::string pair = std::to_string(i) + " " + std::to_string(j);
        fields.add("parent_link " + pair, w.graph, a && b ? t.edge_index(*a, *b) : -1);
        for (unsigned mask = 1; mask < (1u << k); ++mask) {
          fields.add("parent_path " + pair + " " + std::to_string(mask), w.graph,
                     a && b ? (has_indexed_path(t, *a, *b, mask, path_bound) ? 1 : 0) : -1);
        }
      }
    }
  }

  p.parent_types.resize(static_cast<std::size_t>(k));
  p.parent_full_types.resize(static_cast<std::size_t>(k));
  auto resolved = [&](const std::string& name, bool growth) {
    Resolved r = resolve_witness_values(fields.fields().at(name), growth);
    if (r.unstable()) p.unstable_fields.push_back(name + ": " + r.reason);
    return r;
  };
  for (int i = 1; i <= k; ++i) {
    const std::string idx = std::to_string(i);
    auto a = resolved("parent_type " + idx, false);
    if (a.value >= 0) p.parent_types[static_cast<std::size_t>(i - 1)] = codes.type(a.value);
    auto b = resolved("parent_full_type " + idx, false);
    if (b.value >= 0) p.parent_full_types[static_cast<std::size_t>(i - 1)] = codes.type(b.value);
  }
  for (const auto& key : child_keys) {
    p.child_counts[key] = resolved("child_count " + std::to_string(key.first) + " " + fingerprint_hex(key.second), true);
  }
  for (const auto& key : full_child_keys) {
    p.child_counts_full[key] =
        resolved("child_count_full " + std::to_string(key.first) + " " + fingerprint_hex(key.second), true);
  }
  if (auto m = resolved("mark", false); m.value > 0) p.marks.push_back(static_cast<int>(m.value));
  p.initial_tournament = resolved("initial_tournament", false).value == 1;
  for (int i = 1; i <= k; ++i) {
    for (int j = 1; j <= k; ++j) {
      if (i == j) continue;
      const std::string pair = std::to_string(i) + " " + std::to_string(j);
      auto link = resolved("parent_link " + pair, false);
      if (link.value >= 0) p.parent_links[{i, j}] = static_cast<int>(link.value);
      for (unsigned mask = 1; mask < (1u << k); ++mask) {
        auto r = resolved("parent_path " + pair + " " + std::to_string(mask), false);
        if (r.value >= 0) p.parent_paths[{i, j, mask}] = r.value == 1;
      }
    }
  }
  return p;
}

}  // namespace folim
