#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>

namespace pr {

// Counter-based random streams. A stream is identified by a seed plus a list
// of labels; equal keys give equal streams regardless of evaluation order, so
// data generation stays reproducible under any parallel schedule.

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t hash_label(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

class RngKey {
 public:
  explicit RngKey(std::uint64_t seed) : state_(splitmix64(seed)) {}

  RngKey derive(std::uint64_t label) const {
    RngKey k = *this;
    k.state_ = splitmix64(k.state_ ^ splitmix64(label));
    return k;
  }
  RngKey derive(std::string_view label) const {
    return derive(hash_label(label));
  }

  std::uint64_t state() const { return state_; }

 private:
  std::uint64_t state_;
};

class RngStream {
 public:
  explicit RngStream(const RngKey& key) : state_(key.state()) {}
  explicit RngStream(std::uint64_t seed) : state_(splitmix64(seed)) {}

  std::uint64_t next_u64() { return splitmix64(state_ ^ splitmix64(ctr_++)); }

  // Uniform in [0, 1).
  double next_unit() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * next_unit(); }

  // Uniform in (lo, hi]: half-open on the left.
  double uniform_open_left(double lo, double hi) {
    return hi - (hi - lo) * next_unit();
  }

  bool bernoulli(double p) { return next_unit() < p; }

  std::uint64_t below(std::uint64_t n) { return next_u64() % n; }

  double normal() {
    double u1 = 1.0 - next_unit();
    double u2 = next_unit();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::uint64_t state_;
  std::uint64_t ctr_ = 0;
};

}  // namespace pr
