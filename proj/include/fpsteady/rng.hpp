#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace fpsteady {

// Philox 4x32 counter-based generator, 10 rounds.
//
// Counter-based generation gives every (seed, stream) pair an independent,
// reproducible random sequence with O(1) state, so parallel chains can be
// assigned streams without coordination.
struct Philox4x32 {
  static constexpr std::uint32_t kMul0 = 0xD2511F53u;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

  static std::array<std::uint32_t, 4> block(std::array<std::uint32_t, 4> ctr,
                                            std::array<std::uint32_t, 2> key) {
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        key[0] += kWeyl0;
        key[1] += kWeyl1;
      }
      const std::uint64_t p0 = std::uint64_t(kMul0) * ctr[0];
      const std::uint64_t p1 = std::uint64_t(kMul1) * ctr[2];
      ctr = {std::uint32_t(p1 >> 32) ^ ctr[1] ^ key[0], std::uint32_t(p1),
             std::uint32_t(p0 >> 32) ^ ctr[3] ^ key[1], std::uint32_t(p0)};
    }
    return ctr;
  }
};

// Standard normal draws from stream (seed, stream) via Box-Muller over
// Philox blocks. One block yields one pair of normals.
class NormalStream {
 public:
  NormalStream(std::uint64_t seed, std::uint64_t stream)
      : key_{std::uint32_t(seed), std::uint32_t(seed >> 32)},
        stream_hi_{std::uint32_t(stream), std::uint32_t(stream >> 32)} {}

  double next() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const auto w = Philox4x32::block(
        {std::uint32_t(counter_), std::uint32_t(counter_ >> 32),
         stream_hi_[0], stream_hi_[1]},
        key_);
    ++counter_;
    const double u1 = to_unit(w[0], w[1]);
    const double u2 = to_unit(w[2], w[3]);
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * 3.141592653589793238462643383279502884 * u2;
    spare_ = radius * std::sin(angle);
    have_spare_ = true;
    return radius * std::cos(angle);
  }

  void fill(double* out, int n) {
    for (int i = 0; i < n; ++i) out[i] = next();
  }

 private:
  // 53-bit uniform strictly inside (0,1), safe under log().
  static double to_unit(std::uint32_t hi, std::uint32_t lo) {
    const std::uint64_t bits = (std::uint64_t(hi) << 32) | lo;
    return (double(bits >> 11) + 0.5) * 0x1.0p-53;
  }

  std::array<std::uint32_t, 2> key_;
  std::array<std::uint32_t, 2> stream_hi_;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace fpsteady
