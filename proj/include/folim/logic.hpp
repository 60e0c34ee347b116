#pragma once

#include <boost/rational.hpp>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "folim/errors.hpp"
#include "folim/graph.hpp"

namespace folim {

using Rational = boost::rational<std::int64_t>;

/// First-order formula over the signature E1..Ek, kept, fill, U1, U2, ...
///
/// Variables are interned per formula tree: every node refers to variables
/// by slot number into the root's variable table, so evaluation works on a
/// flat vector environment.
class Formula {
 public:
  enum class Kind { Edge, Kept, Fill, Mark, Equal, Not, And, Or, Forall, Exists };

  Kind kind() const { return kind_; }
  /// Relation index for Edge (i of Ei) and Mark (j of Uj).
  int relation() const { return relation_; }
  /// Variable slots: atoms use first/second, quantifiers bind `first`.
  int first() const { return first_; }
  int second() const { return second_; }
  /// Anchor slot of a local quantifier, -1 for plain quantifiers.
  int anchor() const { return anchor_; }
  const std::vector<Formula>& operands() const { return operands_; }

  int quantifier_depth() const { return depth_; }
  /// True iff every quantifier in the formula is local.
  bool is_local() const { return local_; }
  /// Highest Ej index used, 0 if none.
  int max_edge_index() const { return max_edge_; }
  int max_mark_index() const { return max_mark_; }

  /// Free variables in order of first occurrence.
  const std::vector<std::string>& free_variables() const { return free_; }
  /// Full variable table (slot -> name); free and bound.
  const std::vector<std::string>& variables() const { return names_; }
  int slot_of(std::string_view name) const;

  std::string to_string() const;

 private:
  friend class FormulaParser;
  friend Formula parse_formula(std::string_view text, std::optional<int> k);

  std::string render(const std::vector<std::string>& names) const;

  Kind kind_ = Kind::Equal;
  int relation_ = 0;
  int first_ = -1;
  int second_ = -1;
  int anchor_ = -1;
  std::vector<Formula> operands_;
  int depth_ = 0;
  bool local_ = true;
  int max_edge_ = 0;
  int max_mark_ = 0;
  std::vector<std::string> free_;
  std::vector<std::string> names_;
};

class FormulaSyntaxError : public InputError {
 public:
  FormulaSyntaxError(std::size_t position, const std::string& what)
      : InputError("formula syntax error at position " + std::to_string(position) + ": " + what),
        position_(position) {}
  std::size_t position() const { return position_; }

 private:
  std::size_t position_;
};

/// Grammar (ASCII):
///   formula := ('forall'|'exists')['_' anchor] var '.' formula | disj
///   disj    := conj ('|' conj)*
///   conj    := unary ('&' unary)*
///   unary   := '!' unary | '(' formula ')' | quantified | atom
///   atom    := E<i>(x,y) | kept(x,y) | fill(x,y) | U<j>(x) | x = y
/// With `k` given, Ei with i > k is rejected as an unknown relation.
Formula parse_formula(std::string_view text, std::optional<int> k = std::nullopt);

using Assignment = std::map<std::string, VertexId>;

/// Truth value of `phi` in `t` under `a`.  Local quantifiers over z range
/// over the neighbours of z (any Ei, either direction).  Throws InputError
/// for unbound free variables or relation indices beyond the tree's arity.
bool evaluate(const RootedKTree& t, const Formula& phi, const Assignment& a);

/// Evaluation on a slot environment; `env` must have one entry per variable
/// slot with every free slot filled.
bool evaluate_slots(const RootedKTree& t, const Formula& phi, std::vector<VertexId>& env);

struct StonePairing {
  Rational value;
  bool estimated = false;      // true when produced by sampling
  std::uint64_t tuples = 0;    // tuples enumerated or sampled
  double standard_error = 0.0;  // sampling only
};

struct StoneOptions {
  std::uint64_t enumeration_budget = 50'000'000;
  bool allow_sampling = false;
  std::uint64_t samples = 200'000;
  std::uint64_t seed = 1;
};

/// Fraction of ordered l-tuples (with repetition) of vertices satisfying
/// `phi`, l = number of free variables, tuples assigned in free-variable order.
StonePairing stone_pairing(const RootedKTree& t, const Formula& phi,
                           const StoneOptions& options = {});

enum class Player { Duplicator, Spoiler };

/// Winner of the d-round local pebble game started from (u) / (u').  Spoiler
/// moves must land next to an already pebbled vertex.  Marks U_j are visible
/// for j <= d only.
Player local_ef_winner(const RootedKTree& t, VertexId u, const RootedKTree& t2, VertexId u2,
                       int d);

/// True iff the duplicator wins the unrestricted d-round game on (t, t2),
/// marks U_j visible for j <= d.
bool global_ef_equivalent(const RootedKTree& t, const RootedKTree& t2, int d);

}  // namespace folim
