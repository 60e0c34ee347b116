#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <functional>
#include <string>
#include <thread>
#include <vector>

namespace acceptance {

struct Outcome {
  bool pass = false;
  std::string detail;
};

Outcome type_oracle();
Outcome stone_pairings();
Outcome hanf();
Outcome encoder_round_trip();
Outcome divisibility();
Outcome torus();
Outcome invariants();
Outcome semipreservation();
Outcome mass_transport();
Outcome distribution();
Outcome determinism();

// fn(begin, end, worker) over [0, n) in blocks; workers own their slot of any
// per-worker accumulator.
inline unsigned workers() { return std::max(1u, std::thread::hardware_concurrency()); }

inline void parallel_blocks(std::size_t n, const std::function<void(std::size_t, std::size_t, unsigned)>& fn) {
  const unsigned w = workers();
  const std::size_t block = 256;
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < w; ++t) {
    pool.emplace_back([&, t] {
      for (;;) {
        const std::size_t b = next.fetch_add(block);
        if (b >= n) return;
        fn(b, std::min(n, b + block), t);
      }
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace acceptance
