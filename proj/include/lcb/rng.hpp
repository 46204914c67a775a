#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

namespace lcb {

using Rng = std::mt19937_64;

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

inline std::uint64_t fnv1a(std::string_view s) noexcept {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

}  // namespace detail

/// Derives a stream seed from the master seed and a label such as
/// ("shuffle/net", {k, epoch}). Distinct labels give decorrelated streams.
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view label,
                                 std::initializer_list<std::uint64_t> ids = {}) noexcept {
    std::uint64_t h = detail::splitmix64(master ^ detail::fnv1a(label));
    for (std::uint64_t id : ids) h = detail::splitmix64(h ^ detail::splitmix64(id + 0x632BE59BD9B4E019ULL));
    return h;
}

inline Rng make_rng(std::uint64_t master, std::string_view label,
                    std::initializer_list<std::uint64_t> ids = {}) {
    return Rng(derive_seed(master, label, ids));
}

}  // namespace lcb
