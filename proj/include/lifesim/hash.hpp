#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace lifesim {

constexpr std::uint64_t kFnvOffset64 = 0xcbf29ce484222325ull;
constexpr std::uint64_t kFnvPrime64 = 0x100000001b3ull;

constexpr std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t h = kFnvOffset64) {
    for (unsigned char c : bytes) {
        h ^= static_cast<std::uint64_t>(c);
        h *= kFnvPrime64;
    }
    return h;
}

constexpr std::uint64_t fnv1a64_mix(std::uint64_t h, std::uint64_t value) {
    for (int i = 7; i >= 0; --i) {
        h ^= (value >> (8 * i)) & 0xFFu;
        h *= kFnvPrime64;
    }
    return h;
}

std::string hex64(std::uint64_t value);

/// Hash of a file's raw bytes; throws lifesim::Error when the file cannot be read.
std::uint64_t hash_file(const std::filesystem::path& path);

}  // namespace lifesim
