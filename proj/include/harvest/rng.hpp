#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>

namespace harvest {

// splitmix64 step; used to derive independent child seeds from a master seed.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ull;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Deterministic seed derivation: stream k of a master seed. Streams with
// distinct tags are independent for any master, and the mapping is fixed, so
// results never depend on scheduling or worker count.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t tag) {
  std::uint64_t s = master;
  std::uint64_t z = splitmix64(s);
  s = z ^ (tag * 0xd6e8feb86659fd93ull + 0x2545f4914f6cdd1dull);
  (void)splitmix64(s);
  return splitmix64(s);
}

// mt19937_64 wrapped with explicit, implementation-independent samplers.
// std::normal_distribution and friends are deliberately avoided: their output
// sequences differ across standard libraries, and the simulator's determinism
// contract is easier to state when every draw is pinned down here.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t bits() { return eng_(); }

  // uniform in [0, 1)
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  // standard normal, Box-Muller with cached spare
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = 1.0 - uniform();  // (0, 1]
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  // index sampled from an (unnormalized is fine) nonnegative weight vector
  int categorical(std::span<const double> w) {
    double total = 0.0;
    for (double x : w) total += x;
    double u = uniform() * total;
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < w.size(); ++i) {
      acc += w[i];
      if (u < acc) return static_cast<int>(i);
    }
    return static_cast<int>(w.size()) - 1;
  }

  // integer in [0, n)
  int below(int n) { return static_cast<int>(uniform() * n) % n; }

 private:
  std::mt19937_64 eng_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace harvest
