#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "folim/graph.hpp"
#include "folim/hintikka.hpp"
#include "folim/logic.hpp"

#include "json.hpp"

namespace folim {

/// Marked 2-edge-colored rooted k-trees of common arity and strictly
/// increasing order.
class GraphSequence {
 public:
  GraphSequence() = default;
  explicit GraphSequence(std::vector<RootedKTree> graphs);

  void push_back(RootedKTree t);
  std::size_t size() const { return graphs_.size(); }
  const RootedKTree& operator[](std::size_t i) const { return graphs_.at(i); }
  RootedKTree& operator[](std::size_t i) { return graphs_.at(i); }
  const std::vector<RootedKTree>& graphs() const { return graphs_; }
  int arity() const { return graphs_.empty() ? 0 : graphs_.front().arity(); }

 private:
  std::vector<RootedKTree> graphs_;
};

/// Components of the k-tree with every vertex in `removed` deleted.
std::vector<std::vector<VertexId>> residual_components(const RootedKTree& t,
                                                       const std::vector<bool>& removed);

struct MarkingPlan {
  double epsilon = 0;
  int radius = 0;
  std::size_t cap = 0;
  std::vector<std::vector<VertexId>> marks;   // per graph, c_1, c_2, ...
  std::vector<double> largest_fraction;       // per graph, after marking
  /// per mark index j (1-based, position j-1): whether c_j has the same
  /// radius-type in every graph that has a c_j.
  std::vector<bool> mark_types_stable;
};

/// Greedy marking: while the largest component of the residual exceeds
/// epsilon*n, mark the vertex minimising (largest component afterwards,
/// largest piece of the component it splits, -degree, id).  Throws
/// InputError when more than `cap` marks are needed or graphs carry marks.
MarkingPlan mark_null_partition(GraphSequence& seq, double epsilon, int radius, std::size_t cap = 64);

struct NullPartitionReport {
  std::vector<double> largest_fraction;
  std::optional<std::size_t> n0;  // first graph index from which all satisfy the bound
  bool pass() const { return n0.has_value(); }
};

NullPartitionReport check_null_partitioned(const GraphSequence& seq, double epsilon, int k0);

enum class NuKind { Finite, Infinite, Unstable };

struct NuValue {
  NuKind kind = NuKind::Unstable;
  std::uint64_t count = 0;  // Finite only
  bool finite() const { return kind == NuKind::Finite; }
  bool infinite() const { return kind == NuKind::Infinite; }
  std::string to_string() const;
};

struct TypeMeasure {
  ChainPrefix prefix;
  NuValue nu;
  Rational mu;
  double variation = 0;
  std::vector<std::uint64_t> window_counts;
};

struct MeasureEstimate {
  int depth = 0;
  int window = 0;
  double growth_threshold = 4.0;
  std::vector<TypeMeasure> types;       // fingerprint order
  std::vector<TypeId> support;          // nu infinite and mu > 0
  std::vector<std::string> warnings;    // finite types carrying mass, unstable types

  const TypeMeasure* find(const TypeId& t) const;
  const TypeMeasure& at(const TypeId& t) const;
  const TypeMeasure* find_fingerprint(std::uint64_t fingerprint) const;

  nlohmann::ordered_json to_json() const;
  /// Rebinds fingerprints to the types of `trie`; InputError when absent.
  static MeasureEstimate from_json(const nlohmann::json& j, const TypeTrie& trie);
};

/// Count rule and mass for one type of any depth held by `trie`.
TypeMeasure measure_type(const TypeTrie& trie, const TypeId& type, double growth_threshold,
                         std::vector<std::string>* warnings = nullptr);
/// Estimates over every graph held by `trie` (the window).
MeasureEstimate estimate_measures(const TypeTrie& trie, double growth_threshold = 4.0);

/// Builds a depth-D trie over the last `window` graphs and estimates.
MeasureEstimate estimate_measures(const GraphSequence& seq, int depth, int window,
                                  double growth_threshold = 4.0);

/// Trie over the last `window` graphs of `seq`.
TypeTrie window_trie(const GraphSequence& seq, int depth, int window);

}  // namespace folim
