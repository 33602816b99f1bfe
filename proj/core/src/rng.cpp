#include "tadkit/rng.hpp"

#include <cmath>

#include "tadkit/errors.hpp"

namespace tadkit {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t Rng::derive(std::uint64_t seed, std::string_view label) {
  std::uint64_t h = splitmix64(seed);
  for (char c : label) h = splitmix64(h ^ static_cast<std::uint64_t>(static_cast<unsigned char>(c)));
  return h;
}

double Rng::normal() {
  if (have_spare_) {
    have_spare_ = false;
    return spare_;
  }
  // Box-Muller; u is kept away from 0 so log stays finite.
  double u = 0.0;
  do {
    u = uniform();
  } while (u <= 0.0);
  double v = uniform();
  double r = std::sqrt(-2.0 * std::log(u));
  double theta = 2.0 * M_PI * v;
  spare_ = r * std::sin(theta);
  have_spare_ = true;
  return r * std::cos(theta);
}

std::uint64_t Rng::next_below(std::uint64_t n) {
  if (n == 0) throw ContractError("next_below(0)");
  // Rejection sampling to remove modulo bias.
  std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
  std::uint64_t x = 0;
  do {
    x = eng_();
  } while (x >= limit);
  return x % n;
}

int Rng::uniform_int(int lo, int hi) {
  if (hi < lo) throw ContractError("uniform_int: hi < lo");
  return lo + static_cast<int>(next_below(static_cast<std::uint64_t>(hi - lo) + 1));
}

}  // namespace tadkit
