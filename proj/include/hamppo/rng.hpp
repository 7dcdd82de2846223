#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace hamppo {

inline std::uint64_t splitmix64_next(std::uint64_t& x) {
  x += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// xoshiro256++ behind a small distribution API. Every source of randomness in
// the project flows through an explicitly passed instance, so identical seeds
// give identical runs. The four-word state is cheap to serialize into
// checkpoints.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) { reseed(seed); }

  // Decorrelated generator for a named sub-stream of a run seed (map
  // generation, observation noise, policy sampling, ...).
  static Rng derive(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t x = seed;
    (void)splitmix64_next(x);
    x ^= 0xd1342543de82ef95ULL * (stream + 1);
    Rng rng;
    rng.reseed(splitmix64_next(x));
    return rng;
  }

  void reseed(std::uint64_t seed) {
    std::uint64_t x = seed;
    for (auto& word : state_) word = splitmix64_next(x);
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // Uniform in [0, 1), 53-bit resolution.
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Box-Muller on (0, 1] uniforms; no cached spare so the state stays a pure
  // function of the draw count.
  double normal(double mean = 0.0, double stddev = 1.0) {
    const double u1 = 1.0 - uniform01();
    const double u2 = uniform01();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    return mean + stddev * radius * std::cos(6.283185307179586476925286766559 * u2);
  }

  bool bernoulli(double p) { return uniform01() < p; }

  // Uniform integer in [0, n). Multiply-high mapping; bias is O(n / 2^64).
  int uniform_int(int n) {
    const unsigned __int128 product =
        static_cast<unsigned __int128>(next_u64()) * static_cast<unsigned __int128>(n);
    return static_cast<int>(product >> 64);
  }

  // Index draw from a probability vector. Entries must be non-negative and
  // sum to ~1; the last positive entry absorbs rounding slack.
  template <typename Container>
  int categorical(const Container& probs) {
    const double u = uniform01();
    double cumulative = 0.0;
    int last_positive = -1;
    int index = 0;
    for (const double p : probs) {
      if (p > 0.0) {
        cumulative += p;
        last_positive = index;
        if (u < cumulative) return index;
      }
      ++index;
    }
    return last_positive;
  }

  std::array<std::uint64_t, 4> state() const { return state_; }
  void set_state(const std::array<std::uint64_t, 4>& s) { state_ = s; }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  std::array<std::uint64_t, 4> state_{};
};

}  // namespace hamppo
