#ifndef MDRBM_RNG_HPP
#define MDRBM_RNG_HPP

#include <array>
#include <cstdint>
#include <limits>
#include <span>

namespace mdrbm {

/// Philox4x32-10 block function (Salmon et al., SC'11). Pure; exposed for known-answer tests.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

/// 64-bit finalizer used to derive substream ids and hashes.
std::uint64_t splitmix64(std::uint64_t x);

/// Counter-based random stream.
///
/// The seed is the Philox key and the stream id occupies the upper half of the
/// counter, so two streams never share a block. substream() derives child
/// streams, letting per-datum sampling run in any order with identical output.
class RngStream {
 public:
  using result_type = std::uint64_t;

  explicit RngStream(std::uint64_t seed = 0, std::uint64_t stream = 0)
      : seed_(seed), stream_(stream) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() { return next_u64(); }
  std::uint64_t next_u64();

  /// Uniform on [0, 1) with 53 bits of resolution.
  double uniform();
  /// Standard normal (Box-Muller, second variate cached).
  double normal();
  /// Fills `out` with uniforms on (0, 1) at 32-bit resolution, four per Philox block.
  /// Starts at the next unused block; buffered 64-bit output is discarded.
  void fill_uniform32(std::span<double> out);
  /// Uniform integer on [0, n).
  std::uint64_t below(std::uint64_t n);

  RngStream substream(std::uint64_t id) const;

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_; }

 private:
  void refill();

  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t block_ = 0;
  std::array<std::uint64_t, 2> buffer_{};
  int buffered_ = 0;
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace mdrbm

#endif  // MDRBM_RNG_HPP
