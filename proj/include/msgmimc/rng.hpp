#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace msgmimc::rng {

// Philox 4x32-10 counter-based generator (Salmon et al., SC'11).
// A block is a pure function of (counter, key); no state escapes a Stream.
struct Philox4x32 {
  static constexpr std::uint32_t kMul0 = 0xD2511F53u;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kWey0 = 0x9E3779B9u;
  static constexpr std::uint32_t kWey1 = 0xBB67AE85u;

  static std::array<std::uint32_t, 4> block(std::array<std::uint32_t, 4> ctr,
                                            std::array<std::uint32_t, 2> key) {
    for (int round = 0; round < 10; ++round) {
      if (round) {
        key[0] += kWey0;
        key[1] += kWey1;
      }
      const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * ctr[0];
      const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * ctr[2];
      ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0],
             static_cast<std::uint32_t>(p1),
             static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1],
             static_cast<std::uint32_t>(p0)};
    }
    return ctr;
  }
};

// Purpose tags so one (seed, sample) pair owns several independent streams.
enum class Lane : std::uint32_t {
  index = 0,   // multi-index draws
  hyper = 1,   // covariance hyperparameter draws
  field = 2,   // Gaussian field white noise
  generic = 15 // tests and ad-hoc use
};

// Deterministic random stream: every value is a pure function of
// (seed, sample, lane, position). Streams for distinct (sample, lane)
// pairs never overlap, which makes parallel sampling reproducible.
class Stream {
 public:
  Stream(std::uint64_t seed, std::uint64_t sample, Lane lane)
      : key_{static_cast<std::uint32_t>(seed),
             static_cast<std::uint32_t>(seed >> 32)},
        id_{static_cast<std::uint32_t>(lane), static_cast<std::uint32_t>(sample),
            static_cast<std::uint32_t>(sample >> 32)} {}

  std::uint64_t next_u64() {
    if (avail_ == 0) refill();
    const std::uint64_t v = buf_[2 - avail_];
    --avail_;
    return v;
  }

  // Uniform in the open interval (0, 1).
  double uniform01() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Standard normal via Box-Muller; the second value of each pair is cached.
  double normal() {
    if (have_cached_) {
      have_cached_ = false;
      return cached_;
    }
    const double u1 = uniform01();
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * M_PI * u2;
    cached_ = r * std::sin(a);
    have_cached_ = true;
    return r * std::cos(a);
  }

 private:
  void refill() {
    const std::array<std::uint32_t, 4> ctr = {
        static_cast<std::uint32_t>(pos_), static_cast<std::uint32_t>(pos_ >> 32),
        id_[0] ^ id_[2], id_[1]};
    const auto x = Philox4x32::block(ctr, key_);
    buf_[0] = (static_cast<std::uint64_t>(x[0]) << 32) | x[1];
    buf_[1] = (static_cast<std::uint64_t>(x[2]) << 32) | x[3];
    avail_ = 2;
    ++pos_;
  }

  std::array<std::uint32_t, 2> key_;
  std::array<std::uint32_t, 3> id_; // lane, sample lo, sample hi
  std::uint64_t pos_ = 0;
  std::array<std::uint64_t, 2> buf_{};
  int avail_ = 0;
  double cached_ = 0.0;
  bool have_cached_ = false;
};

} // namespace msgmimc::rng
