#include "taskforge/sha256.hpp"

#include <openssl/evp.h>

#include <array>
#include <stdexcept>

namespace taskforge {

namespace {

std::array<uint8_t, 32> digest(std::span<const uint8_t> bytes) {
    std::array<uint8_t, 32> out{};
    unsigned int len = 0;
    if (!EVP_Digest(bytes.data(), bytes.size(), out.data(), &len, EVP_sha256(), nullptr) ||
        len != 32) {
        throw std::runtime_error("SHA-256 digest failed");
    }
    return out;
}

}  // namespace

std::string sha256_hex(std::span<const uint8_t> bytes) {
    static const char* hex = "0123456789abcdef";
    auto d = digest(bytes);
    std::string s;
    s.reserve(64);
    for (uint8_t b : d) {
        s.push_back(hex[b >> 4]);
        s.push_back(hex[b & 0xf]);
    }
    return s;
}

std::string sha256_hex(const std::string& s) {
    return sha256_hex(std::span<const uint8_t>(
        reinterpret_cast<const uint8_t*>(s.data()), s.size()));
}

uint64_t sha256_prefix64(std::span<const uint8_t> bytes) {
    auto d = digest(bytes);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v = (v << 8) | d[i];
    return v;
}

uint64_t sha256_prefix64(const std::string& s) {
    return sha256_prefix64(std::span<const uint8_t>(
        reinterpret_cast<const uint8_t*>(s.data()), s.size()));
}

}  // namespace taskforge
