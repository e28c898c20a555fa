#pragma once

#include "speckle/grid.hpp"

#include <filesystem>
#include <string>
#include <string_view>

namespace speckle {

/// Lowercase hex SHA-256.
std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& path);

/// Digest of dimensions, pitch and the little-endian double samples.
std::string digest_image(const Image2D& img);

}  // namespace speckle
