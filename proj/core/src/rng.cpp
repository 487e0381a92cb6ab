#include "taskforge/rng.hpp"

#include <cmath>
#include <numbers>

#include "taskforge/sha256.hpp"

namespace taskforge {

namespace {

constexpr uint32_t kPhiloxW32A = 0x9E3779B9;
constexpr uint32_t kPhiloxW32B = 0xBB67AE85;
constexpr uint32_t kPhiloxM4x32A = 0xD2511F53;
constexpr uint32_t kPhiloxM4x32B = 0xCD9E8D57;

inline void mul_hi_lo(uint32_t a, uint32_t b, uint32_t& lo, uint32_t& hi) {
    uint64_t p = static_cast<uint64_t>(a) * b;
    lo = static_cast<uint32_t>(p);
    hi = static_cast<uint32_t>(p >> 32);
}

inline void round_once(std::array<uint32_t, 4>& ctr, std::array<uint32_t, 2>& key) {
    uint32_t lo0, hi0, lo1, hi1;
    mul_hi_lo(kPhiloxM4x32A, ctr[0], lo0, hi0);
    mul_hi_lo(kPhiloxM4x32B, ctr[2], lo1, hi1);
    std::array<uint32_t, 4> out = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    ctr = out;
    key[0] += kPhiloxW32A;
    key[1] += kPhiloxW32B;
}

}  // namespace

std::array<uint32_t, 4> Philox4x32::block(uint64_t key, const std::array<uint32_t, 4>& counter) {
    std::array<uint32_t, 4> ctr = counter;
    std::array<uint32_t, 2> k = {static_cast<uint32_t>(key),
                                 static_cast<uint32_t>(key >> 32)};
    for (int i = 0; i < 10; ++i) round_once(ctr, k);
    return ctr;
}

double CounterRng::uniform(uint64_t index) const {
    auto b = Philox4x32::block(
        key_, {static_cast<uint32_t>(index), static_cast<uint32_t>(index >> 32), 0, 0});
    uint64_t v = (static_cast<uint64_t>(b[0]) << 32) | b[1];
    // 53-bit mantissa, [0, 1)
    return static_cast<double>(v >> 11) * 0x1.0p-53;
}

double CounterRng::gaussian(uint64_t index) const {
    auto b = Philox4x32::block(
        key_, {static_cast<uint32_t>(index), static_cast<uint32_t>(index >> 32), 1, 0});
    uint64_t v1 = (static_cast<uint64_t>(b[0]) << 32) | b[1];
    uint64_t v2 = (static_cast<uint64_t>(b[2]) << 32) | b[3];
    double u1 = (static_cast<double>(v1 >> 11) + 0.5) * 0x1.0p-53;  // (0, 1)
    double u2 = static_cast<double>(v2 >> 11) * 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

uint64_t derive_stream_key(uint64_t base_seed, const std::string& stream_id,
                           const std::string& tensor_name) {
    std::string msg = std::to_string(base_seed);
    msg.push_back('\x1f');
    msg += stream_id;
    msg.push_back('\x1f');
    msg += tensor_name;
    return sha256_prefix64(msg);
}

}  // namespace taskforge
