#include "uwdepth/rng.hpp"

namespace uwdepth {

uint64_t derive_seed(uint64_t global_seed, const std::string& id,
                     uint64_t salt) {
  uint64_t h = 14695981039346656037ull;
  auto mix = [&h](uint64_t v) {
    for (int i = 0; i < 8; ++i) {
      h ^= (v >> (8 * i)) & 0xff;
      h *= 1099511628211ull;
    }
  };
  mix(global_seed);
  for (char c : id) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ull;
  }
  mix(salt);
  return h;
}

}  // namespace uwdepth
