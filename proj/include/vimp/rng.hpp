#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace vimp {

/// Seeded random stream with hash-derived substreams.
///
/// Every stochastic operation in the library takes an explicit RngStream.
/// Substreams are derived from the stream key alone (never from draw
/// history), so `derive` is stable no matter how many values were drawn,
/// and sibling streams are independent of evaluation order.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : key_(mix(seed)), eng_(key_) {}

  /// Child stream for (this stream, tag). Deterministic, draw-independent.
  RngStream derive(std::uint64_t tag) const { return RngStream(mix(key_ ^ mix(tag))); }

  RngStream derive(std::string_view tag) const { return derive(fnv1a(tag)); }

  std::uint64_t key() const { return key_; }

  double uniform() {
    std::uniform_real_distribution<double> d(0.0, 1.0);
    return d(eng_);
  }

  double normal() { return normal_(eng_); }

  /// Uniform integer in [0, bound). bound must be > 0.
  std::uint64_t uniform_int(std::uint64_t bound) {
    std::uniform_int_distribution<std::uint64_t> d(0, bound - 1);
    return d(eng_);
  }

  /// Fisher-Yates permutation of {0, ..., n-1}.
  std::vector<std::size_t> permutation(std::size_t n) {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    shuffle(idx);
    return idx;
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t k = uniform_int(i);
      std::swap(v[i - 1], v[k]);
    }
  }

  std::mt19937_64& engine() { return eng_; }

 private:
  // splitmix64 finalizer
  static std::uint64_t mix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  }

  static std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
    return h;
  }

  std::uint64_t key_;
  std::mt19937_64 eng_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace vimp
