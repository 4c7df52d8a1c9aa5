#pragma once

#include <array>
#include <cstdint>

namespace svmrot {

// Philox4x32-10 counter-based generator (Salmon et al., SC'11). Output is a
// pure function of (counter, key), so any draw can be regenerated without
// replaying the stream.
struct Philox4x32 {
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter generate(Counter counter, Key key);
};

// splitmix64-based mix of (master_seed, index) used as a per-trajectory key.
std::uint64_t stream_seed(std::uint64_t master_seed, std::uint64_t index);

// Independent sub-streams sharing a key are separated by tag.
enum class StreamTag : std::uint32_t { forward = 0, backward = 1, initial = 2, generic = 3 };

// A (key, tag) pair plus a running counter; each draw consumes one Philox
// block.
class NoiseStream {
 public:
  NoiseStream(std::uint64_t seed, StreamTag tag = StreamTag::generic, std::uint64_t counter = 0)
      : seed_(seed), tag_(tag), counter_(counter) {}

  // Two independent standard normals (Box-Muller on one block).
  std::array<double, 2> normal_pair();
  // Two independent uniforms in [0, 1) with 53-bit resolution.
  std::array<double, 2> uniform_pair();

  std::uint64_t counter() const { return counter_; }
  void seek(std::uint64_t counter) { counter_ = counter; }

 private:
  Philox4x32::Counter next_block();

  std::uint64_t seed_;
  StreamTag tag_;
  std::uint64_t counter_;
};

struct WienerIncrement {
  double dx = 0.0;
  double dy = 0.0;
};

// dW with independent components of mean 0 and variance |dt|.
WienerIncrement sample_wiener(double dt, NoiseStream& stream);

}  // namespace svmrot
