#include "plnet/rng.hpp"

#include <cmath>
#include <numbers>

namespace plnet {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53;
constexpr std::uint32_t kMul1 = 0xCD9E8D57;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) noexcept
{
    const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(p >> 32);
    lo = static_cast<std::uint32_t>(p);
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> ctr,
                                           std::array<std::uint32_t, 2> key) noexcept
{
    for (int round = 0; round < 10; ++round) {
        if (round > 0) {
            key[0] += kWeyl0;
            key[1] += kWeyl1;
        }
        std::uint32_t hi0, lo0, hi1, lo1;
        mulhilo(kMul0, ctr[0], hi0, lo0);
        mulhilo(kMul1, ctr[2], hi1, lo1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    }
    return ctr;
}

RngEngine::RngEngine(const RngStream& stream) noexcept
    : key_{static_cast<std::uint32_t>(stream.master_seed),
           static_cast<std::uint32_t>(stream.master_seed >> 32)},
      counter_{0, 0, static_cast<std::uint32_t>(stream.stream_id),
               static_cast<std::uint32_t>(stream.stream_id >> 32)}
{
}

RngEngine::result_type RngEngine::operator()() noexcept
{
    if (next_word_ >= 4) {
        block_ = philox4x32_10(counter_, key_);
        if (++counter_[0] == 0) ++counter_[1];
        next_word_ = 0;
    }
    const std::uint64_t lo = block_[next_word_];
    const std::uint64_t hi = block_[next_word_ + 1];
    next_word_ += 2;
    return (hi << 32) | lo;
}

double RngEngine::normal() noexcept
{
    if (has_cached_normal_) {
        has_cached_normal_ = false;
        return cached_normal_;
    }
    const double r = std::sqrt(-2.0 * std::log(uniform()));
    const double phi = 2.0 * std::numbers::pi * uniform();
    cached_normal_ = r * std::sin(phi);
    has_cached_normal_ = true;
    return r * std::cos(phi);
}

double RngEngine::exponential() noexcept { return -std::log(uniform()); }

}  // namespace plnet
