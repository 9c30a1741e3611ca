#pragma once

#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>

namespace nlsa {

// FNV-1a, 64 bit. std::hash is not stable across builds, artifacts need a fixed digest.
inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline std::string hex64(std::uint64_t h) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace nlsa
