#pragma once

#include <span>
#include <string>
#include <string_view>

namespace recourse {

// Lowercase hex SHA-256 digest.
std::string sha256_hex(std::string_view bytes);
std::string sha256_hex(std::span<const unsigned char> bytes);

// Digest of a file's bytes; throws DataError if it cannot be read.
std::string sha256_file(const std::string& path);

}  // namespace recourse
