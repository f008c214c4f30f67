#pragma once

#include <cstdint>
#include <limits>
#include <string_view>

namespace kho {

/// Counter-based generator (SplitMix64 finalizer over seed, stream and
/// counter). Cheap to construct, so every trajectory gets its own stream and
/// results do not depend on how work is split across threads.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  CounterRng(std::uint64_t seed, std::uint64_t stream);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()();

  double uniform();  // in (0, 1)
  double normal();   // standard normal

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// Stable 64-bit id for a named sub-stream ("classical-noise", ...).
std::uint64_t stream_id(std::string_view name, std::uint64_t index = 0);

}  // namespace kho
