#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace folim {

enum class Resolution { Exact, Infinite, Unstable };

/// A quantity read off witnesses in several graphs of a sequence.
struct Resolved {
  Resolution kind = Resolution::Unstable;
  std::int64_t value = 0;     // the stable value (Exact) or the last modal value
  std::size_t boundary = 0;   // witnesses in the last graph disagreeing with the mode
  std::string reason;         // set when Unstable

  bool exact() const { return kind == Resolution::Exact; }
  bool infinite() const { return kind == Resolution::Infinite; }
  bool unstable() const { return kind == Resolution::Unstable; }
};

/// Per graph (in sequence order) the witness values; graphs without
/// witnesses are skipped.  Each graph contributes its modal value (ties go to
/// the smaller value) when it holds a strict majority.  The last graph must
/// have one; earlier graphs without one are skipped.  The share of
/// disagreeing witnesses may not grow from the first counted graph to the last.
/// Equal modes give Exact.  With `allow_growth`, nondecreasing modes whose
/// last exceeds the first give Infinite.  Anything else is Unstable.
Resolved resolve_witness_values(const std::vector<std::vector<std::int64_t>>& per_graph,
                                bool allow_growth);

}  // namespace folim
