#pragma once

#include <cstdint>
#include <vector>

#include "hdinfer/types.hpp"

namespace hdinfer {

/// Deterministic xoshiro256++ generator.  All sampling in the library goes
/// through this class so that results are bit-reproducible across platforms
/// and independent of the standard library's distribution implementations.
///
/// Parallel work items derive independent streams with `stream(counter)`;
/// the derived sequence depends only on (seed, counter), never on thread
/// scheduling.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream_id = 0);

  std::uint64_t next_u64();

  /// Uniform on (0, 1), never exactly 0 or 1.
  double uniform01();

  /// Uniform integer in [0, n), unbiased (rejection sampling).
  std::uint64_t uniform_index(std::uint64_t n);

  double uniform(double lo, double hi);

  /// Standard normal via inverse-CDF transform.
  double normal();

  /// Independent child generator for parallel work item `counter`.
  Rng stream(std::uint64_t counter) const;

  /// In-place Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(uniform_index(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  /// `k` distinct indices drawn from {0, ..., n-1}, in draw order.
  std::vector<int> sample_without_replacement(int n, int k);

  Vector normal_vector(Index n);

 private:
  std::uint64_t state_[4];
  std::uint64_t seed_ = 0;
  std::uint64_t stream_id_ = 0;
};

}  // namespace hdinfer
