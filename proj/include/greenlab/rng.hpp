#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace greenlab {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// stream id = hash(master seed, experiment kind, replica index)
inline std::uint64_t stream_id(std::uint64_t master, std::string_view kind, std::uint64_t replica) {
    return splitmix64(splitmix64(master ^ fnv1a(kind)) + replica);
}

inline Rng make_stream(std::uint64_t master, std::string_view kind, std::uint64_t replica) {
    return Rng(stream_id(master, kind, replica));
}

// uniform on [0,1) with 53 random bits
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

// uniform on (0,1]
inline double uniform01_open_low(Rng& rng) { return (static_cast<double>(rng() >> 11) + 1.0) * 0x1.0p-53; }

}  // namespace greenlab
