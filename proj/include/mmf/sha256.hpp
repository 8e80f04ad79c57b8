#pragma once

#include <cstdint>
#include <string>

namespace mmf {

// SHA-256 of a byte string, lowercase hex. Self-contained implementation of
// the FIPS 180-4 algorithm; checked against the standard test vectors.
std::string sha256_hex(const std::string& bytes);

// 64-bit FNV-1a hash; seeds the mock provider's PRNG from prompt text.
inline uint64_t fnv1a64(const std::string& s) {
    uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

}  // namespace mmf
