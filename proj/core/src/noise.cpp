#include "svmrot/noise.hpp"

#include <cmath>
#include <numbers>

#include "svmrot/error.hpp"

namespace svmrot {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

inline Philox4x32::Counter round(const Philox4x32::Counter& c, const Philox4x32::Key& k) {
  std::uint32_t hi0, lo0, hi1, lo1;
  mulhilo(kMul0, c[0], hi0, lo0);
  mulhilo(kMul1, c[2], hi1, lo1);
  return {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
}

inline std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

inline double to_unit(std::uint32_t hi, std::uint32_t lo) {
  const std::uint64_t bits = ((static_cast<std::uint64_t>(hi) << 32) | lo) >> 11;
  return static_cast<double>(bits) * 0x1.0p-53;
}

}  // namespace

Philox4x32::Counter Philox4x32::generate(Counter counter, Key key) {
  for (int r = 0; r < 10; ++r) {
    if (r > 0) {
      key[0] += kWeyl0;
      key[1] += kWeyl1;
    }
    counter = round(counter, key);
  }
  return counter;
}

std::uint64_t stream_seed(std::uint64_t master_seed, std::uint64_t index) {
  return splitmix64(splitmix64(master_seed) ^ (index * 0xD1B54A32D192ED03ull));
}

Philox4x32::Counter NoiseStream::next_block() {
  const Philox4x32::Counter ctr{static_cast<std::uint32_t>(counter_),
                                static_cast<std::uint32_t>(counter_ >> 32),
                                static_cast<std::uint32_t>(tag_), 0u};
  const Philox4x32::Key key{static_cast<std::uint32_t>(seed_),
                            static_cast<std::uint32_t>(seed_ >> 32)};
  ++counter_;
  return Philox4x32::generate(ctr, key);
}

std::array<double, 2> NoiseStream::uniform_pair() {
  const auto b = next_block();
  return {to_unit(b[0], b[1]), to_unit(b[2], b[3])};
}

std::array<double, 2> NoiseStream::normal_pair() {
  const auto b = next_block();
  const double u1 = 1.0 - to_unit(b[0], b[1]);  // (0, 1]
  const double u2 = to_unit(b[2], b[3]);
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  return {r * std::cos(theta), r * std::sin(theta)};
}

WienerIncrement sample_wiener(double dt, NoiseStream& stream) {
  if (dt == 0.0) throw PreconditionError("Wiener increment needs dt != 0");
  const auto z = stream.normal_pair();
  const double s = std::sqrt(std::abs(dt));
  return {s * z[0], s * z[1]};
}

}  // namespace svmrot
