#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace kgfuse {

// 64-bit FNV-1a. Used for content hashes and fixture digests; stable across
// platforms and runs, not cryptographic.
inline std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed = 0xcbf29ce484222325ull) {
    std::uint64_t h = seed;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

std::string to_hex(std::uint64_t value);

inline std::string hex_digest(std::string_view data) { return to_hex(fnv1a64(data)); }

}  // namespace kgfuse
