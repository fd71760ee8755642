#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace coldstart {

std::uint64_t fnv1a64(std::string_view data);
std::uint64_t splitmix64(std::uint64_t x);

std::string sha256_hex(std::string_view data);
std::string sha256_file(const std::string& path);

// First 16 hex chars of the SHA-256; used for prompt component provenance.
std::string short_hash(std::string_view data);

}  // namespace coldstart
