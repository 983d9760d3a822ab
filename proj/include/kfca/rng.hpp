#pragma once

#include <cstdint>
#include <initializer_list>
#include <limits>
#include <span>

namespace kfca {

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Sequential generator over one derived key. Satisfies
// UniformRandomBitGenerator so std distributions accept it.
class Stream {
 public:
  using result_type = std::uint64_t;

  explicit Stream(std::uint64_t key) noexcept : state_(key), gamma_(splitmix64(key) | 1ULL) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept {
    state_ += gamma_;
    return splitmix64(state_);
  }

  // Uniform double in [0, 1) with 53 random bits.
  double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, n); n must be positive. Lemire's nearly divisionless method.
  std::uint64_t below(std::uint64_t n) noexcept {
    unsigned __int128 product = static_cast<unsigned __int128>((*this)()) * n;
    auto low = static_cast<std::uint64_t>(product);
    if (low < n) {
      const std::uint64_t threshold = (0 - n) % n;
      while (low < threshold) {
        product = static_cast<unsigned __int128>((*this)()) * n;
        low = static_cast<std::uint64_t>(product);
      }
    }
    return static_cast<std::uint64_t>(product >> 64);
  }

  bool bernoulli(double p) noexcept { return uniform() < p; }

  // Inverse-CDF draw from a probability vector. The last index with positive
  // mass absorbs floating round-off.
  std::size_t categorical(std::span<const double> probs) noexcept {
    const double u = uniform();
    double acc = 0.0;
    std::size_t last = 0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
      if (probs[i] <= 0.0) continue;
      acc += probs[i];
      last = i;
      if (u < acc) return i;
    }
    return last;
  }

 private:
  std::uint64_t state_;
  std::uint64_t gamma_;
};

// Counter-based key derivation. A key names one independent stream; child()
// extends the path, so (round, client, task) coordinates map to the same
// stream no matter how many siblings exist or in which order they are used.
class StreamKey {
 public:
  constexpr explicit StreamKey(std::uint64_t value = 0) noexcept : value_(value) {}

  constexpr StreamKey child(std::uint64_t tag) const noexcept {
    return StreamKey(splitmix64(value_ ^ splitmix64(tag + 0x632BE59BD9B4E019ULL)));
  }

  constexpr StreamKey child(std::initializer_list<std::uint64_t> tags) const noexcept {
    StreamKey k = *this;
    for (auto t : tags) k = k.child(t);
    return k;
  }

  constexpr std::uint64_t value() const noexcept { return value_; }
  Stream stream() const noexcept { return Stream(value_); }

 private:
  std::uint64_t value_;
};

// Domain tags used for key paths. Values are part of the reproducibility
// contract; never renumber.
namespace stream_tag {
inline constexpr std::uint64_t kTruth = 1;
inline constexpr std::uint64_t kSignal = 2;
inline constexpr std::uint64_t kAttack = 3;
inline constexpr std::uint64_t kPartition = 4;
inline constexpr std::uint64_t kPeers = 5;
inline constexpr std::uint64_t kPayment = 6;
inline constexpr std::uint64_t kPairs = 7;
inline constexpr std::uint64_t kNoiseProfile = 8;
inline constexpr std::uint64_t kTrial = 9;
inline constexpr std::uint64_t kPermutation = 10;
inline constexpr std::uint64_t kUpdate = 11;
inline constexpr std::uint64_t kSparseMask = 12;
inline constexpr std::uint64_t kStrategy = 13;
inline constexpr std::uint64_t kRound = 14;
inline constexpr std::uint64_t kClient = 15;
}  // namespace stream_tag

}  // namespace kfca
