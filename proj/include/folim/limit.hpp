#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "folim/dyadic.hpp"
#include "folim/hintikka.hpp"
#include "folim/sequence.hpp"

#include "json.hpp"

namespace folim {

struct EdgeClass {
  enum class Kind { Finitary, Infinitary, Unstable };
  Kind kind = Kind::Unstable;
  std::int64_t m = 0;   // Finitary only
  std::string reason;   // Unstable only

  static EdgeClass of_finitary(std::int64_t m) { return {Kind::Finitary, m, {}}; }
  static EdgeClass of_infinitary() { return {Kind::Infinitary, 0, {}}; }
  static EdgeClass of_unstable(std::string why) { return {Kind::Unstable, 0, std::move(why)}; }
  bool finitary() const { return kind == Kind::Finitary; }
  bool infinitary() const { return kind == Kind::Infinitary; }
  bool stable() const { return kind != Kind::Unstable; }
  std::string to_string() const;
  friend bool operator==(const EdgeClass& a, const EdgeClass& b) { return a.kind == b.kind && a.m == b.m; }
};

struct TemplateStep {
  int index = 0;          // the step follows an index-edge
  EdgeClass cls;
  std::uint64_t head = 0; // fingerprint of the head's type
  bool higher_finitary = false;
  friend bool operator==(const TemplateStep&, const TemplateStep&) = default;
};

struct PathTemplate {
  std::vector<TemplateStep> steps;
  int l_inf = 0;  // last step whose head has infinite count, 0 if none
  friend bool operator==(const PathTemplate&, const PathTemplate&) = default;
  std::string to_string() const;
};

struct ParentEdge {
  bool exists = false;                 // the type has an i-parent
  std::optional<std::uint64_t> parent; // its (d-1)-type; nullopt at depth 1
  std::optional<std::uint64_t> level_parent;  // its d-type by witness majority
  EdgeColor color = EdgeColor::Kept;
  EdgeClass cls;
  int important = -1;  // 1 yes, 0 no, -1 undetermined
  std::vector<PathTemplate> templates;  // primary first
  std::string template_error;
};

struct ChildCount {
  int index = 0;
  std::uint64_t child = 0;
  Resolved count;
};

struct MachineType {
  std::uint64_t fingerprint = 0;
  int depth = 0;
  std::vector<std::uint64_t> chain;
  NuValue nu;
  Rational mu;
  int mark = 0;
  bool initial = false;
  std::size_t witnesses = 0;
  std::vector<ParentEdge> parents;             // index i-1
  std::map<std::pair<int, int>, int> parent_links;
  std::vector<ChildCount> children;
};

struct LimitVertex {
  enum class Kind { Finite, Continuum };
  Kind kind = Kind::Finite;
  std::uint64_t type = 0;
  std::uint64_t index = 0;  // Finite, 1-based
  Dyadic n0;
  std::vector<TorusCoord> h;  // h_1..h_k
  std::vector<Dyadic> n;      // n_1..n_k

  static LimitVertex finite(std::uint64_t type, std::uint64_t index) {
    LimitVertex v;
    v.type = type;
    v.index = index;
    return v;
  }
  bool is_finite() const { return kind == Kind::Finite; }
  std::string to_string() const;
  friend bool operator==(const LimitVertex&, const LimitVertex&) = default;
  friend auto operator<=>(const LimitVertex&, const LimitVertex&) = default;
};

struct LimitOptions {
  int path_bound = 0;              // longest detour searched; 0: depth - 1
  std::size_t template_cap = 8;    // templates kept per (type, index)
  std::size_t witness_tries = 64;  // witnesses tried for the rewrite process
};

class LimitMachine {
 public:
  int k = 0;
  int depth = 0;
  int path_bound = 0;
  std::size_t template_cap = 0;
  std::map<std::uint64_t, MachineType> types;
  std::vector<std::uint64_t> support;         // fingerprint order
  std::vector<std::uint64_t> support_weights; // integer weights proportional to mu

  const MachineType& type(std::uint64_t fingerprint) const;
  EdgeClass classify_edge(std::uint64_t tau, int i) const;
  /// Primary template; InstabilityError when none could be built.
  const PathTemplate& important_path(std::uint64_t tau, int i) const;
  const std::vector<PathTemplate>& templates(std::uint64_t tau, int i) const;

  LimitVertex parent(const LimitVertex& v, int i) const;
  LimitVertex parent_via(const LimitVertex& v, int i, const PathTemplate& p) const;
  std::optional<std::uint64_t> parent_type(std::uint64_t tau, int i) const;
  /// Type at the same depth of the i-parent; FINITE parents land there.
  std::optional<std::uint64_t> level_parent_type(std::uint64_t tau, int i) const;
  bool has_parent(std::uint64_t tau, int i) const;

  /// Depth of the vertex's type; parents lose one level per step.
  int depth_of(const LimitVertex& v) const { return type(v.type).depth; }
  std::uint64_t restrict_type(std::uint64_t tau, int depth) const;
  /// Equality after restricting both to the smaller depth.  nullopt when two
  /// FINITE vertices of different depths have types of different counts.
  std::optional<bool> agree(const LimitVertex& a, const LimitVertex& b) const;

  /// FINITE: known type of finite count, index in [1, count].  CONTINUUM:
  /// type of infinite count with k torus and k plain coordinates.
  bool valid(const LimitVertex& v) const;

  LimitVertex sample_vertex(std::mt19937_64& rng) const;

  nlohmann::ordered_json to_json() const;
  static LimitMachine from_json(const nlohmann::json& j);
};

/// Builds the machine from a trie over the window graphs and the estimate
/// computed from the same trie.
LimitMachine build_limit_machine(const TypeTrie& trie, const MeasureEstimate& est,
                                 const LimitOptions& options = {});

/// Deterministic per-chunk generator: chunk c of a run seeded with s.
std::mt19937_64 chunk_rng(std::uint64_t seed, std::uint64_t chunk);

}  // namespace folim
