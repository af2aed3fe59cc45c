#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace stegsage {

// Lowercase hex SHA-256 of a byte buffer.
std::string sha256_hex(const std::uint8_t* data, std::size_t len);
std::string sha256_hex(const std::vector<std::uint8_t>& data);
std::string sha256_hex(const std::string& data);

}  // namespace stegsage
