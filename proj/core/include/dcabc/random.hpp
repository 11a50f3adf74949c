#pragma once

#include <cstdint>
#include <random>

namespace dcabc {

using Engine = std::mt19937_64;

/// Key of an independent random stream. Child keys are derived by hashing
/// (key, index), so stream j of a particle system is the same no matter
/// which worker or call site asks for it.
class StreamKey {
 public:
  explicit constexpr StreamKey(std::uint64_t seed) noexcept : key_(seed) {}

  StreamKey child(std::uint64_t index) const noexcept;
  Engine engine() const;
  std::uint64_t value() const noexcept { return key_; }

  friend bool operator==(StreamKey, StreamKey) = default;

 private:
  std::uint64_t key_;
};

std::uint64_t splitmix64(std::uint64_t x) noexcept;

}  // namespace dcabc
