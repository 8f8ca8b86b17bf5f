#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <vector>

namespace trojanscan {

/// Derives a child seed from (seed, label, index). Distinct labels give unrelated streams.
[[nodiscard]] std::uint64_t derive_seed(std::uint64_t seed, std::string_view label, std::uint64_t index = 0) noexcept;

/// 64-bit FNV-1a over raw bytes.
[[nodiscard]] std::uint64_t fnv1a64(std::span<const std::byte> bytes) noexcept;

/// The single generator type used by the project. Streams are split by label,
/// e.g. Rng::stream(seed, "init") and Rng::stream(seed, "shuffle").
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  [[nodiscard]] static Rng stream(std::uint64_t seed, std::string_view label, std::uint64_t index = 0) {
    return Rng(derive_seed(seed, label, index));
  }

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [lo, hi).
  double uniform(double lo = 0.0, double hi = 1.0);
  double normal(double mean = 0.0, double stddev = 1.0);
  /// Uniform integer on the closed range [lo, hi].
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);
  bool bernoulli(double p);

  /// Fisher-Yates shuffle of `values`.
  template <typename T>
  void shuffle(std::vector<T>& values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(uniform_int(0, static_cast<std::int64_t>(i - 1)));
      std::swap(values[i - 1], values[j]);
    }
  }

  /// `count` distinct indices from [0, n) via a partial Fisher-Yates pass, in draw order.
  std::vector<std::size_t> choose(std::size_t n, std::size_t count);

 private:
  std::mt19937_64 engine_;
};

}  // namespace trojanscan
