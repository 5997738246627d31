#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace mksd {

/// SplitMix64 finalizer, used to derive independent seeds from a path.
constexpr std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Seeded random stream. derive() gives a child stream whose seed depends only
/// on (seed, tag), so parallel replicates never share a stream.
class RngStream {
 public:
  using engine_type = std::mt19937_64;

  explicit RngStream(std::uint64_t seed = 0) : seed_(seed), engine_(splitmix64(seed)) {}

  std::uint64_t seed() const { return seed_; }

  RngStream derive(std::uint64_t tag) const { return RngStream(splitmix64(seed_ ^ splitmix64(tag + 0x632be59bd9b4e019ULL))); }

  RngStream derive(std::initializer_list<std::uint64_t> path) const {
    RngStream out = *this;
    for (auto t : path) out = out.derive(t);
    return out;
  }

  engine_type& engine() { return engine_; }

  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }
  double normal() { return std::normal_distribution<double>(0.0, 1.0)(engine_); }
  int rademacher() { return (engine_() >> 63) ? 1 : -1; }

 private:
  std::uint64_t seed_;
  engine_type engine_;
};

}  // namespace mksd
