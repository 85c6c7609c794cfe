#pragma once

#include <cstdint>
#include <initializer_list>

namespace qgst {

// Counter-based stream: the k-th draw is a pure function of (key, k), so a
// stream keyed by (seed, circuit id) yields the same numbers no matter which
// thread consumes it or in what order circuits are processed.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t key) : key_(key) {}
  CounterRng(std::initializer_list<std::uint64_t> parts);

  std::uint64_t next_u64();
  // Uniform on [0, 1) with 53 random bits.
  double uniform();
  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace qgst
