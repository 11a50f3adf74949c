#include "dcabc/random.hpp"

namespace dcabc {

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

StreamKey StreamKey::child(std::uint64_t index) const noexcept {
  return StreamKey(splitmix64(splitmix64(key_) ^ splitmix64(index + 0x632be59bd9b4e019ULL)));
}

Engine StreamKey::engine() const {
  std::seed_seq seq{static_cast<std::uint32_t>(key_), static_cast<std::uint32_t>(key_ >> 32)};
  return Engine(seq);
}

}  // namespace dcabc
