#pragma once

#include <cstdint>
#include <random>

namespace bnnmix {

/// Purpose tags that separate independent random streams.
enum class StreamTag : std::uint64_t {
  kInputs = 1,
  kTargets = 2,
  kTeacher = 3,
  kTargetNoise = 4,
  kTestPoints = 5,
  kCandidates = 6,
  kRotation = 7,
  kPreimage = 8,
  kColumnSpace = 9,
  kPriorDraws = 10,
  kCell = 11,
  kRealization = 12,
  kOracle = 13,
};

/// Keyed random streams: every (master_seed, index, tag) triple maps to its
/// own engine, so draws never depend on evaluation order or thread count.
class RngPolicy {
 public:
  explicit RngPolicy(std::uint64_t master_seed) : master_seed_(master_seed) {}

  std::uint64_t master_seed() const { return master_seed_; }

  /// Engine for one stream.
  std::mt19937_64 stream(std::uint64_t index, StreamTag tag) const;

  /// Seed for a nested policy (e.g. one grid cell of an experiment).
  std::uint64_t derive(std::uint64_t index, StreamTag tag) const;

  RngPolicy child(std::uint64_t index, StreamTag tag) const {
    return RngPolicy(derive(index, tag));
  }

 private:
  std::uint64_t master_seed_;
};

std::uint64_t splitmix64(std::uint64_t x);

/// Combine several integer coordinates into a single stream index.
std::uint64_t hash_combine(std::uint64_t seed, std::uint64_t value);

}  // namespace bnnmix
