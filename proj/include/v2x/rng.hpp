#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace v2x {

using Rng = std::mt19937_64;

// Derives an independent generator seed from the master seed and a stream
// label ("topology", "channel", "agent-3", ...). FNV-1a over the label, then
// two SplitMix64 finalizer rounds mixed with the master seed.
std::uint64_t stream_seed(std::uint64_t master, std::string_view label);

inline Rng make_stream(std::uint64_t master, std::string_view label) {
  return Rng(stream_seed(master, label));
}

inline double uniform01(Rng& rng) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

}  // namespace v2x
