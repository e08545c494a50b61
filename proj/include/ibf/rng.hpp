#pragma once

#include <cstdint>
#include <cmath>
#include <string>
#include <string_view>
#include <vector>

namespace ibf {

// FNV-1a, used to derive run seeds from (domain, condition, seed) labels.
inline std::uint64_t stable_hash64(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : text) {
    h ^= static_cast<std::uint64_t>(c);
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::uint64_t stable_hash64(std::string_view a, std::string_view b,
                                   std::uint64_t n) {
  std::string key;
  key.reserve(a.size() + b.size() + 24);
  key.append(a);
  key.push_back('/');
  key.append(b);
  key.push_back('/');
  key.append(std::to_string(n));
  return stable_hash64(key);
}

inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ull;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// xoshiro256** with splitmix64 seeding. Hand-rolled so that streams are
// bit-stable across platforms and standard-library versions; draw helpers
// below define the complete draw order contract used by the domains:
//   uniform()      one 64-bit draw
//   uniform_int(n) one 64-bit draw
//   normal_pair()  two 64-bit draws (Box-Muller, both values returned)
class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    std::uint64_t sm = seed;
    for (auto& word : state_) word = splitmix64(sm);
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // Uniform in [0, 1) with 53-bit resolution.
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform integer in [0, n). Modulo is acceptable here: n is tiny
  // (action counts, buffer slots) so the bias is ~2^-60.
  std::uint64_t uniform_int(std::uint64_t n) {
    return next_u64() % n;
  }

  // Box-Muller pair of independent standard normals.
  void normal_pair(double& z0, double& z1) {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 6.283185307179586476925286766559 * u2;
    z0 = r * std::cos(theta);
    z1 = r * std::sin(theta);
  }

  // Fills out with standard normals, consuming ceil(n/2) Box-Muller pairs;
  // a spare half-pair is discarded, never cached across calls.
  void fill_normal(std::vector<double>& out, std::size_t n) {
    out.resize(n);
    std::size_t i = 0;
    while (i + 1 < n) {
      normal_pair(out[i], out[i + 1]);
      i += 2;
    }
    if (i < n) {
      double z0 = 0.0, z1 = 0.0;
      normal_pair(z0, z1);
      out[i] = z0;
    }
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  std::uint64_t state_[4] = {};
};

}  // namespace ibf
