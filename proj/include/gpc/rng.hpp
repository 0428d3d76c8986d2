#pragma once

// Counter-based random number generation.
//
// Every random quantity in this library is a pure function of a 64-bit key
// and a counter, built from the splitmix64 finalizer. That buys three things:
//   * byte-identical reruns for the same seed, independent of thread count,
//   * frozen noise realizations addressable by (seed, trajectory, step, lane),
//   * common random numbers across parameter sweeps without bookkeeping.

#include <cstdint>

#include <Eigen/Core>

namespace gpc {

// splitmix64 finalizer: bijective, well-mixed, cheap.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Key derivation: fold words one at a time so (a,b) and (b,a) differ.
constexpr std::uint64_t derive_key(std::uint64_t a, std::uint64_t b) {
  return mix64(mix64(a) ^ (0x9e3779b97f4a7c15ULL + b));
}
constexpr std::uint64_t derive_key(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  return derive_key(derive_key(a, b), c);
}
constexpr std::uint64_t derive_key(std::uint64_t a, std::uint64_t b, std::uint64_t c,
                                   std::uint64_t d) {
  return derive_key(derive_key(a, b, c), d);
}

// Map a u64 to (0, 1]; never 0 so log(u) stays finite.
inline double unit_double(std::uint64_t x) {
  return static_cast<double>((x >> 11) + 1) * 0x1.0p-53;
}

// Stateless standard normal addressed by (key, counter). One normal per
// counter value via Box-Muller on two hashed lanes.
double normal_at(std::uint64_t key, std::uint64_t counter);

// Forward-only stream view over the same generator. Copyable; the entire
// state is (key, position), so workers carry independent streams by key.
class RngStream {
 public:
  explicit RngStream(std::uint64_t key) : key_(key) {}
  static RngStream from(std::uint64_t seed, std::uint64_t stream_id) {
    return RngStream(derive_key(seed, stream_id));
  }

  std::uint64_t raw() { return mix64(key_ ^ mix64(pos_++)); }
  double uniform() { return unit_double(raw()); }  // (0, 1]
  double normal() { return normal_at(key_, pos_++); }
  Eigen::VectorXd normal_vector(Eigen::Index dim);

  std::uint64_t key() const { return key_; }

 private:
  std::uint64_t key_;
  std::uint64_t pos_ = 0;
};

// d-dimensional standard normal at (key, counter); coordinate i consumes
// counter slot counter*dim+i, so distinct counters never overlap.
Eigen::VectorXd normal_vector_at(std::uint64_t key, std::uint64_t counter, Eigen::Index dim);

}  // namespace gpc
