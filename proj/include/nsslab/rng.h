#pragma once

// Counter-based random numbers. Every draw is a pure function of a 64-bit key
// and a 128-bit counter, so simulations are reproducible regardless of how
// work is scheduled across threads.

#include <array>
#include <cstdint>
#include <span>

namespace nsslab::rng {

using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

/// Philox4x32 with 10 rounds.
PhiloxCounter Philox4x32(PhiloxCounter counter, PhiloxKey key);

std::uint64_t SplitMix64(std::uint64_t x);

/// Seed of the k-th path of an ensemble with the given master seed.
std::uint64_t DeterministicHash(std::uint64_t master_seed, std::uint64_t k);

/// Uniform double in the open interval (0, 1) from the top 52 of 64 bits.
double ToOpenUnit(std::uint32_t hi, std::uint32_t lo);

/// Quantile function of the standard normal distribution, p in (0, 1).
double InverseNormalCdf(double p);

/// Fills `out` with standard normals keyed by (seed, step). Block b of the
/// step uses counter (step_lo, step_hi, b, 0); each half of the block is one
/// uniform mapped through the normal quantile function.
void FillStandardNormal(std::uint64_t seed, std::uint64_t step,
                        std::span<double> out);

/// Sequential stream over a counter-based generator, for sampling designs
/// (probe states, directions) that need an ordinary draw-by-draw interface.
class CounterStream {
 public:
  CounterStream(std::uint64_t seed, std::uint64_t stream = 0);

  double Uniform();
  double Normal();

 private:
  void Refill();

  PhiloxKey key_;
  std::uint64_t stream_;
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  int used_ = 4;
};

}  // namespace nsslab::rng
