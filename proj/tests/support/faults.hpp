#pragma once

// Deliberately broken machines for the FAIL paths of the checks.

#include "folim/limit.hpp"

namespace faults {

using folim::EdgeClass;
using folim::LimitMachine;

// Appends to every template list a copy of its primary template whose first
// applied step is altered, so the two disagree on coordinates.  Returns the
// number of lists touched.
inline int corrupt_templates(LimitMachine& m) {
  int touched = 0;
  for (auto& [fp, t] : m.types) {
    for (auto& e : t.parents) {
      if (e.templates.empty() || e.templates.front().l_inf == 0) continue;
      auto bad = e.templates.front();
      auto& st = bad.steps.front();
      if (st.cls.finitary()) {
        st.higher_finitary = !st.higher_finitary;
      } else {
        st.cls = EdgeClass::of_finitary(1);
      }
      e.templates.push_back(bad);
      ++touched;
    }
  }
  return touched;
}

// Points every recorded parent link at the other index.
inline int corrupt_links(LimitMachine& m) {
  int touched = 0;
  for (auto& [fp, t] : m.types) {
    for (auto& [key, j] : t.parent_links) {
      if (j <= 0) continue;
      j = j == 1 ? 2 : 1;
      ++touched;
    }
  }
  return touched;
}

// k=1 machine: one continuum type without parents, and two single-atom types
// that are each other's parent.
inline LimitMachine finite_cycle() {
  LimitMachine m;
  m.k = 1;
  m.depth = 2;
  auto make = [&](std::uint64_t fp, folim::NuValue nu) {
    folim::MachineType t;
    t.fingerprint = fp;
    t.depth = 2;
    t.chain = {fp + 100, fp};
    t.nu = nu;
    t.parents.resize(1);
    m.types[fp] = t;
  };
  make(1, {folim::NuKind::Infinite, 0});
  make(2, {folim::NuKind::Finite, 1});
  make(3, {folim::NuKind::Finite, 1});
  for (auto [a, b] : {std::pair{2, 3}, std::pair{3, 2}}) {
    auto& e = m.types[a].parents[0];
    e.exists = true;
    e.level_parent = b;
    e.cls = EdgeClass::of_finitary(1);
  }
  m.support = {1};
  m.support_weights = {1};
  return m;
}

}  // namespace faults
