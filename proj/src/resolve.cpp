#include "folim/resolve.hpp"

#include <map>

namespace folim {

Resolved resolve_witness_values(const std::vector<std::vector<std::int64_t>>& per_graph,
                                bool allow_growth) {
  std::vector<std::int64_t> modes;
  std::vector<std::size_t> minorities, sizes;
  Resolved out;
  std::size_t last_nonempty = per_graph.size();
  for (std::size_t g = 0; g < per_graph.size(); ++g) {
    if (!per_graph[g].empty()) last_nonempty = g;
  }
  for (std::size_t g = 0; g < per_graph.size(); ++g) {
    const auto& values = per_graph[g];
    if (values.empty()) continue;
    std::map<std::int64_t, std::size_t> freq;
    for (auto v : values) ++freq[v];
    auto best = freq.begin();
    for (auto it = freq.begin(); it != freq.end(); ++it) {
      if (it->second > best->second) best = it;
    }
    const std::size_t minority = values.size() - best->second;
    if (best->second <= minority) {
      // Small graphs may not have settled yet; only the last one must.
      if (g != last_nonempty) continue;
      out.reason = "no majority value among " + std::to_string(values.size()) + " witnesses";
      out.value = best->first;
      out.boundary = minority;
      return out;
    }
    modes.push_back(best->first);
    minorities.push_back(minority);
    sizes.push_back(values.size());
  }
  if (modes.empty()) {
    out.reason = "no witnesses";
    return out;
  }
  out.value = modes.back();
  out.boundary = minorities.back();
  // Compare minority shares exactly: m_last / n_last > m_first / n_first.
  if (minorities.back() * sizes.front() > minorities.front() * sizes.back()) {
    out.reason = "disagreeing witnesses grow from " + std::to_string(minorities.front()) + "/" +
                 std::to_string(sizes.front()) + " to " + std::to_string(minorities.back()) + "/" +
                 std::to_string(sizes.back());
    return out;
  }
  bool constant = true;
  bool nondecreasing = true;
  for (std::size_t i = 1; i < modes.size(); ++i) {
    constant = constant && modes[i] == modes[0];
    nondecreasing = nondecreasing && modes[i] >= modes[i - 1];
  }
  if (constant) {
    out.kind = Resolution::Exact;
    return out;
  }
  if (allow_growth && nondecreasing && modes.back() > modes.front()) {
    out.kind = Resolution::Infinite;
    return out;
  }
  out.reason = "witness values change across the sequence";
  return out;
}

}  // namespace folim
