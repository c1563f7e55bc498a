#include "gsmsim/rng.hpp"

namespace gsmsim {

namespace {

std::uint64_t mix64(std::uint64_t x) {
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t Rng::derive(std::uint64_t seed, std::uint64_t a, std::uint64_t b,
                          std::uint64_t c) {
  std::uint64_t x = seed;
  x = mix64(x + 0x9e3779b97f4a7c15ULL + a);
  x = mix64(x + 0x9e3779b97f4a7c15ULL + b);
  x = mix64(x + 0x9e3779b97f4a7c15ULL + c);
  return x;
}

}  // namespace gsmsim
