#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace slicealloc {

// Derives an independent generator from a base seed and a list of stream tags,
// so slot k or user u always sees the same stream regardless of call order.
inline std::mt19937_64 MakeStream(std::uint64_t base_seed, std::initializer_list<std::uint64_t> tags) {
  std::vector<std::uint32_t> words;
  words.reserve(2 + 2 * tags.size());
  auto push = [&words](std::uint64_t v) {
    words.push_back(static_cast<std::uint32_t>(v & 0xffffffffu));
    words.push_back(static_cast<std::uint32_t>(v >> 32));
  };
  push(base_seed);
  for (auto t : tags) push(t);
  std::seed_seq seq(words.begin(), words.end());
  return std::mt19937_64(seq);
}

}  // namespace slicealloc
