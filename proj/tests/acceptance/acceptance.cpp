// Acceptance run: one PASS/FAIL line per criterion.
//   acceptance            all criteria
//   acceptance 3 7        selected ones
// Exit status 0 iff every selected criterion passes.

#include <chrono>
#include <cstdio>
#include <exception>
#include <iostream>
#include <set>
#include <string>

#include "criteria.hpp"

namespace {

struct Entry {
  int id;
  const char* title;
  acceptance::Outcome (*run)();
};

const Entry kCriteria[] = {
    {1, "type/oracle equivalence", acceptance::type_oracle},
    {2, "stone pairings vs enumeration", acceptance::stone_pairings},
    {3, "hanf cross-validation", acceptance::hanf},
    {4, "encoder round trip", acceptance::encoder_round_trip},
    {5, "nu divisibility and D-to-1 maps", acceptance::divisibility},
    {6, "torus arithmetic", acceptance::torus},
    {7, "machine invariants", acceptance::invariants},
    {8, "measure semipreservation", acceptance::semipreservation},
    {9, "finitary mass transport", acceptance::mass_transport},
    {10, "distribution fidelity", acceptance::distribution},
    {11, "end-to-end determinism", acceptance::determinism},
};

}  // namespace

int main(int argc, char** argv) {
  std::set<int> wanted;
  for (int a = 1; a < argc; ++a) {
    try {
      wanted.insert(std::stoi(argv[a]));
    } catch (const std::exception&) {
      std::cerr << "usage: acceptance [criterion ...]\n";
      return 2;
    }
  }
  bool all_pass = true;
  for (const auto& c : kCriteria) {
    if (!wanted.empty() && !wanted.count(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    acceptance::Outcome out;
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    char head[96];
    std::snprintf(head, sizeof head, "[%s] %2d %-32s (%.1fs) ", out.pass ? "PASS" : "FAIL", c.id, c.title, secs);
    std::cout << head << out.detail << std::endl;
    all_pass = all_pass && out.pass;
  }
  return all_pass ? 0 : 1;
}
