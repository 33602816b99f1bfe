#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace tadkit {

// Deterministic RNG. mt19937_64 is bit-exact across platforms per the
// standard; the distribution transforms are implemented here because the
// std:: distributions are implementation-defined. Sub-streams are derived
// from (seed, label) so init, shuffling and dropout draw independently.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  static std::uint64_t derive(std::uint64_t seed, std::string_view label);
  static Rng stream(std::uint64_t seed, std::string_view label) {
    return Rng(derive(seed, label));
  }

  // Uniform in [0,1) with 53-bit resolution.
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller, one value per call (second is cached).
  double normal();
  double normal(double mean, double sd) { return mean + sd * normal(); }

  // Uniform integer in [0, n).
  std::uint64_t next_below(std::uint64_t n);
  int uniform_int(int lo, int hi);  // inclusive bounds

  bool bernoulli(double p) { return uniform() < p; }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(next_below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 eng_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace tadkit
