#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace covfunc {

/// Identifies one reproducible random stream: a master seed plus a replicate
/// index. Two equal RngSeed values always produce the same draws.
struct RngSeed {
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;

  /// Child seed for an independent sub-purpose of the same replicate
  /// (e.g. the CV splits of replicate r use rs.derive(kCvSalt)).
  [[nodiscard]] RngSeed derive(std::uint64_t salt) const;

  friend bool operator==(const RngSeed&, const RngSeed&) = default;
};

std::uint64_t splitmix64(std::uint64_t x);

/// Portable generator: mt19937_64 keyed by a SplitMix64 hash of (seed, stream),
/// with hand-written uniform/normal/integer transforms so that draws do not
/// depend on the standard library's distribution implementations.
class Rng {
 public:
  explicit Rng(RngSeed s);

  double uniform();  // [0, 1)
  double normal();
  /// Uniform integer in [0, bound).
  std::uint64_t below(std::uint64_t bound);
  /// Uniformly random permutation of {0, ..., n-1}.
  std::vector<int> permutation(int n);
  /// Uniformly random k-subset of {0, ..., n-1}, sorted ascending.
  std::vector<int> subset(int n, int k);

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace covfunc
