#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace epialloc {

// Stage seed = hash(master_seed, stage_name). std::seed_seq mixing is fully
// specified by the standard, so the value is portable across toolchains.
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view stage) {
  std::vector<std::uint32_t> words{static_cast<std::uint32_t>(master),
                                   static_cast<std::uint32_t>(master >> 32)};
  for (unsigned char c : stage) words.push_back(c);
  std::seed_seq seq(words.begin(), words.end());
  std::array<std::uint32_t, 2> out{};
  seq.generate(out.begin(), out.end());
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

// 64-bit FNV-1a, used for config fingerprints.
inline std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace epialloc
