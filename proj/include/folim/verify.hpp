#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "folim/limit.hpp"
#include "folim/sequence.hpp"

#include "json.hpp"

namespace folim {

/// Union of basic sets: a vertex belongs when its type restricted to the depth
/// of some listed type equals that type.  `everything` ignores the list.
struct DefinableSet {
  std::vector<std::uint64_t> basic;
  bool everything = false;
  std::optional<int> mark;  // additionally require this mark (0: unmarked)

  static DefinableSet all() { return {{}, true, std::nullopt}; }
  static DefinableSet of(std::vector<std::uint64_t> types) { return {std::move(types), false, std::nullopt}; }

  /// Deepest listed type, 0 for none.
  int depth(const LimitMachine& m) const;
  /// nullopt when the type is shallower than a listed type it might refine to.
  std::optional<bool> contains(const LimitMachine& m, std::uint64_t type) const;
  nlohmann::ordered_json to_json() const;
};

enum class Verdict { Pass, Fail, Unstable };

std::string to_string(Verdict v);

struct CheckReport {
  std::string name;
  std::uint64_t samples = 0;
  double statistic = 0;
  double tolerance = 0;
  Verdict verdict = Verdict::Pass;
  std::string counterexample;
  std::map<std::string, std::uint64_t> counts;
  std::map<std::string, double> values;
  std::vector<std::string> notes;

  bool pass() const { return verdict == Verdict::Pass; }
  /// One line: name, verdict, statistic, tolerance, samples.
  std::string summary() const;
  nlohmann::ordered_json to_json() const;
};

/// Removes one edge color from neighbour counts.
enum class ColorFilter { None, DropFill, DropKept };

struct SampleOptions {
  std::uint64_t n = 100000;
  std::uint64_t seed = 1;
  unsigned threads = 0;  // 0: hardware concurrency; results do not depend on it
};

/// Every template of every sampled vertex and index leads to the same parent.
CheckReport check_path_independence(const LimitMachine& m, const SampleOptions& opt, std::size_t cap = 8);

/// Parent walks of bounded length never return to a vertex seen before, and
/// the digraph of FINITE atoms has no cycle.
CheckReport check_acyclicity(const LimitMachine& m, const SampleOptions& opt, int walk_length = 16);

/// For i' < i'' with the i''-parent the j-parent of the i'-parent (per the
/// type's links), parent(parent(w, i'), j) = parent(w, i'').
CheckReport check_edge_consistency(const LimitMachine& m, const SampleOptions& opt);

/// Compares mu(g_i^{-1}(Y) and X) with d mu(Y).  The child-count premise is
/// validated against the profiles of the types at the depth of the sets
/// first; a violated premise is reported and the Monte Carlo comparison
/// still runs.
CheckReport check_measure_semipreserving(const LimitMachine& m, const DefinableSet& x, const DefinableSet& y, int i,
                                         int d, const SampleOptions& opt);

/// a mu(A) <= b mu(B) + 3 sigma.  Throws PreconditionError when a support type
/// in A has fewer than a neighbours in B, or one in B more than b in A.
CheckReport check_sfmtp(const LimitMachine& m, const DefinableSet& a_set, const DefinableSet& b_set, int a, int b,
                        const SampleOptions& opt, ColorFilter filter = ColorFilter::None);

/// From the profiles of the support types: the fewest B-neighbours of a type
/// in A and the most A-neighbours of a type in B (UINT64_MAX: unbounded).
/// nullopt when some count is not determined.
std::optional<std::pair<std::uint64_t, std::uint64_t>> transport_bounds(const LimitMachine& m, const DefinableSet& a_set,
                                                                         const DefinableSet& b_set,
                                                                         ColorFilter filter = ColorFilter::None);

struct SemipreservingInstance {
  DefinableSet y;  // one type of depth D-1
  int index = 0;
  int count = 0;   // i-children per Y-vertex, X being everything
  Rational mass;   // of Y
};

/// Depth-(D-1) type of infinite count with a settled, positive number of
/// i-children; the one of largest mass.  nullopt when there is none.
std::optional<SemipreservingInstance> default_semipreserving(const LimitMachine& m, int i);

/// Sampled type frequencies against the estimate (chi-square), support weights
/// against the estimate, and finite counts against the machine.
CheckReport compare_type_distribution(const LimitMachine& m, const MeasureEstimate& est, const SampleOptions& opt);

/// Divisibility of finite counts along parent edges and the exact D-to-1
/// shape of the FINITE parent map, enumerated.
CheckReport check_finite_atoms(const LimitMachine& m);

/// Largest r-ball of G_n with its marked vertices deleted, as a fraction of
/// |G_n|, per graph.  PASS when the fractions never rise and the last lies
/// below the first.
CheckReport residuality_trend(const GraphSequence& seq, int r);

}  // namespace folim
