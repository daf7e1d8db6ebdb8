#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>

namespace gsplab {

/// splitmix64 counter generator.
///
/// Every draw is a pure function of (seed, counter), so streams are identical
/// on every platform. Distribution helpers are implemented here rather than
/// taken from <random>, whose distributions are implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) noexcept : seed_(seed), counter_(0) {}

  /// Independent stream for (seed, stream) pairs, e.g. one per trial.
  static Rng derive(std::uint64_t seed, std::uint64_t stream) noexcept;

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t counter() const noexcept { return counter_; }

  std::uint64_t next_u64() noexcept;
  /// Uniform in [0, 1) with 53 bits of resolution.
  double uniform() noexcept;
  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }
  /// Standard normal via Box-Muller.
  double normal() noexcept;
  /// Uniform integer in [0, n). n must be positive.
  std::size_t below(std::size_t n) noexcept;

  /// Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::span<T> items) noexcept {
    for (std::size_t i = items.size(); i > 1; --i) {
      const std::size_t j = below(i);
      using std::swap;
      swap(items[i - 1], items[j]);
    }
  }

 private:
  std::uint64_t seed_;
  std::uint64_t counter_;
};

/// The splitmix64 finalizer; also used for hashing stream ids into seeds.
std::uint64_t mix64(std::uint64_t z) noexcept;

}  // namespace gsplab
