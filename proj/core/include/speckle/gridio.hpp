#pragma once

#include "speckle/error.hpp"
#include "speckle/grid.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace speckle {

enum class GridSemantic { Intensity, PhaseRad, Transmission, DispPxX, DispPxY, Feature };

const char* to_string(GridSemantic semantic);
GridSemantic parse_semantic(const std::string& text);

/// SPGRID1 header. On disk: the magic "SPGRID1\n", then one key=value line
/// per field in the fixed order width, height, channels, dtype, byte_order,
/// layout, pixel_pitch_m, semantic, then "end\n", then the little-endian
/// f32 payload (channel-major planes, each row-major).
struct GridHeader {
    int width = 0;
    int height = 0;
    int channels = 1;
    double pixel_pitch_m = kDefaultPixelPitch;
    GridSemantic semantic = GridSemantic::Intensity;

    std::size_t payload_values() const {
        return static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * static_cast<std::size_t>(channels);
    }
    std::size_t payload_bytes() const { return payload_values() * 4; }
};

struct GridFile {
    GridHeader header;
    std::vector<float> payload;
};

enum class GridErrorKind { Io, BadMagic, Version, Malformed, Dtype, Length };

const char* to_string(GridErrorKind kind);

/// Every SPGRID1 read/write failure. `offset` is the byte position in the
/// file at which the problem was detected.
class GridFormatError : public IoError {
public:
    GridFormatError(GridErrorKind kind, std::uint64_t offset, const std::string& detail);
    GridErrorKind kind() const { return kind_; }
    std::uint64_t offset() const { return offset_; }

private:
    GridErrorKind kind_;
    std::uint64_t offset_;
};

std::string encode_grid(const GridHeader& header, const std::vector<float>& payload);
GridFile decode_grid(const std::string& bytes);

void write_grid(const std::filesystem::path& path, const GridHeader& header, const std::vector<float>& payload);
GridFile read_grid(const std::filesystem::path& path);

/// Single-channel convenience wrappers; values are stored as f32.
void write_image(const std::filesystem::path& path, const Image2D& img, GridSemantic semantic);
Image2D read_image(const std::filesystem::path& path, GridSemantic* semantic = nullptr);
Image2D grid_to_image(const GridFile& grid, int channel = 0);

/// Binary portable graymap (P5), linearly scaled from [min, max] to [0, 255].
void write_pgm(const std::filesystem::path& path, const Image2D& img);

}  // namespace speckle
