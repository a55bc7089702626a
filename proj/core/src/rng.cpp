#include "bnnmix/rng.hpp"

namespace bnnmix {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t hash_combine(std::uint64_t seed, std::uint64_t value) {
  return splitmix64(seed ^ splitmix64(value + 0x632be59bd9b4e019ULL));
}

std::uint64_t RngPolicy::derive(std::uint64_t index, StreamTag tag) const {
  std::uint64_t h = splitmix64(master_seed_);
  h = hash_combine(h, static_cast<std::uint64_t>(tag));
  h = hash_combine(h, index);
  return h;
}

std::mt19937_64 RngPolicy::stream(std::uint64_t index, StreamTag tag) const {
  const std::uint64_t key = derive(index, tag);
  // Spread the 64-bit key over the full engine state.
  std::seed_seq seq{static_cast<std::uint32_t>(key), static_cast<std::uint32_t>(key >> 32),
                    static_cast<std::uint32_t>(splitmix64(key)),
                    static_cast<std::uint32_t>(splitmix64(key) >> 32)};
  return std::mt19937_64(seq);
}

}  // namespace bnnmix
