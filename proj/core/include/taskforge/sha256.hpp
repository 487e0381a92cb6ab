#pragma once

#include <cstdint>
#include <span>
#include <string>

namespace taskforge {

/// SHA-256 of `bytes`, as 64 lowercase hex chars.
std::string sha256_hex(std::span<const uint8_t> bytes);
std::string sha256_hex(const std::string& s);

/// First 8 bytes of SHA-256(bytes), big-endian. Used to derive RNG keys
/// from (seed, name) pairs.
uint64_t sha256_prefix64(std::span<const uint8_t> bytes);
uint64_t sha256_prefix64(const std::string& s);

}  // namespace taskforge
