#include "qgst/random.hpp"

namespace qgst {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

CounterRng::CounterRng(std::initializer_list<std::uint64_t> parts) : key_(0x243f6a8885a308d3ULL) {
  for (auto p : parts) key_ = splitmix64(key_ ^ splitmix64(p));
}

std::uint64_t CounterRng::next_u64() {
  return splitmix64(key_ ^ splitmix64(counter_++ + 0x632be59bd9b4e019ULL));
}

double CounterRng::uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

std::uint64_t CounterRng::below(std::uint64_t n) {
  return static_cast<std::uint64_t>((static_cast<unsigned __int128>(next_u64()) * n) >> 64);
}

}  // namespace qgst
