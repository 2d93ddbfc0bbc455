#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <string_view>
#include <utility>

namespace sclab::rng {

// All randomness in the library flows through this one generator so that a
// (seed, config) pair reproduces bit-identically across platforms and thread
// counts. The core is the splitmix64 finalizer; a Stream is just a 64-bit
// counter walked through it. Matrices are always filled in row-major order,
// normals are produced by Box-Muller in pairs (the spare of an odd-length
// fill is discarded, never cached across calls).

inline constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ull;

inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

// Derived seed for a named sub-stream:
//   derive_seed(s, role, i) = mix64(mix64(mix64(s + G) ^ fnv1a64(role)) ^ i)
// with G the 64-bit golden-ratio constant. Every module that needs an
// independent stream (per-step batches, eval batch, sweep cells, bootstrap
// reps, ...) derives it this way from the single user-facing seed.
inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view role,
                                 std::uint64_t index = 0) {
  return mix64(mix64(mix64(seed + kGolden) ^ fnv1a64(role)) ^ index);
}

class Stream {
 public:
  explicit Stream(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    state_ += kGolden;
    return mix64(state_);
  }

  // Uniform in [0, 1), 53-bit resolution.
  double next_unit() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform in (0, 1]; safe as a log argument.
  double next_unit_open() {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  }

  double next_uniform(double lo, double hi) {
    return lo + (hi - lo) * next_unit();
  }

  // Standard normal pair via Box-Muller; consumes exactly two draws.
  std::pair<double, double> next_normal_pair() {
    const double u1 = next_unit_open();
    const double u2 = next_unit();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 6.283185307179586476925286766559 * u2;
    return {r * std::cos(theta), r * std::sin(theta)};
  }

  double next_normal() { return next_normal_pair().first; }

  void fill_normal(Eigen::Ref<Eigen::MatrixXd> m) {
    const Eigen::Index rows = m.rows(), cols = m.cols();
    const Eigen::Index total = rows * cols;
    Eigen::Index k = 0;
    while (k + 1 < total) {
      auto [z0, z1] = next_normal_pair();
      m(k / cols, k % cols) = z0;
      m((k + 1) / cols, (k + 1) % cols) = z1;
      k += 2;
    }
    if (k < total) {
      m(k / cols, k % cols) = next_normal_pair().first;
    }
  }

  void fill_uniform(Eigen::Ref<Eigen::MatrixXd> m, double lo, double hi) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) {
        m(r, c) = next_uniform(lo, hi);
      }
    }
  }

 private:
  std::uint64_t state_;
};

}  // namespace sclab::rng
