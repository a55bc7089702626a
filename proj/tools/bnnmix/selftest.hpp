#pragma once

#include <cstdint>
#include <ostream>

namespace bnnmix::cli {

/// Runs the fast oracle comparisons; prints one line per check and returns
/// the number of failures.
int run_selftest(std::uint64_t seed, std::ostream& out);

}  // namespace bnnmix::cli
