#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace alignaudit {

// Lowercase hex SHA-256 of the given bytes.
std::string sha256_hex(std::string_view data);

// Stateless 64-bit mixer; used to derive independent per-task seeds.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0,
                                 std::uint64_t c = 0) noexcept {
    return splitmix64(splitmix64(splitmix64(seed ^ splitmix64(a)) ^ b) ^ c);
}

std::uint64_t string_seed(std::string_view s);

// Uniform double in [0, 1) from the top 53 bits; platform independent.
constexpr double unit_interval(std::uint64_t bits) noexcept {
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

}  // namespace alignaudit
