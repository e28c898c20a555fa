#include "speckle/gridio.hpp"

#include <algorithm>
#include <bit>
#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <system_error>

namespace speckle {

namespace {

constexpr std::string_view kMagic = "SPGRID1\n";
constexpr std::string_view kMagicStem = "SPGRID";
constexpr const char* kKeys[] = {"width",  "height",        "channels", "dtype", "byte_order",
                                 "layout", "pixel_pitch_m", "semantic"};

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

int parse_dimension(const std::string& value, std::uint64_t offset, const char* key) {
    int out = 0;
    const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    if (ec != std::errc{} || ptr != value.data() + value.size() || out < 1) {
        throw GridFormatError(GridErrorKind::Malformed, offset,
                              std::string(key) + " must be a positive integer, got '" + value + "'");
    }
    return out;
}

void append_le(std::string& out, float v) {
    auto bits = std::bit_cast<std::uint32_t>(v);
    for (int i = 0; i < 4; ++i) {
        out.push_back(static_cast<char>(bits & 0xffu));
        bits >>= 8;
    }
}

float read_le(const char* p) {
    std::uint32_t bits = 0;
    for (int i = 3; i >= 0; --i) bits = (bits << 8) | static_cast<unsigned char>(p[i]);
    return std::bit_cast<float>(bits);
}

}  // namespace

const char* to_string(GridSemantic semantic) {
    switch (semantic) {
        case GridSemantic::Intensity: return "intensity";
        case GridSemantic::PhaseRad: return "phase_rad";
        case GridSemantic::Transmission: return "transmission";
        case GridSemantic::DispPxX: return "disp_px_x";
        case GridSemantic::DispPxY: return "disp_px_y";
        case GridSemantic::Feature: return "feature";
    }
    return "feature";
}

GridSemantic parse_semantic(const std::string& text) {
    for (auto s : {GridSemantic::Intensity, GridSemantic::PhaseRad, GridSemantic::Transmission, GridSemantic::DispPxX,
                   GridSemantic::DispPxY, GridSemantic::Feature}) {
        if (text == to_string(s)) return s;
    }
    throw ParameterError("unknown grid semantic '" + text + "'");
}

const char* to_string(GridErrorKind kind) {
    switch (kind) {
        case GridErrorKind::Io: return "io error";
        case GridErrorKind::BadMagic: return "bad magic";
        case GridErrorKind::Version: return "unsupported version";
        case GridErrorKind::Malformed: return "malformed header";
        case GridErrorKind::Dtype: return "unsupported dtype";
        case GridErrorKind::Length: return "length mismatch";
    }
    return "error";
}

GridFormatError::GridFormatError(GridErrorKind kind, std::uint64_t offset, const std::string& detail)
    : IoError(std::string("SPGRID1 ") + to_string(kind) + " at byte " + std::to_string(offset) + ": " + detail),
      kind_(kind),
      offset_(offset) {}

std::string encode_grid(const GridHeader& header, const std::vector<float>& payload) {
    if (header.width < 1 || header.height < 1 || header.channels < 1) {
        throw ParameterError("grid dimensions must be positive");
    }
    if (payload.size() != header.payload_values()) {
        throw ParameterError("payload holds " + std::to_string(payload.size()) + " values, header describes " +
                             std::to_string(header.payload_values()));
    }
    if (!(header.pixel_pitch_m > 0.0) || !std::isfinite(header.pixel_pitch_m)) {
        throw ParameterError("pixel pitch must be positive and finite");
    }
    std::string out(kMagic);
    out += "width=" + std::to_string(header.width) + "\n";
    out += "height=" + std::to_string(header.height) + "\n";
    out += "channels=" + std::to_string(header.channels) + "\n";
    out += "dtype=f32\nbyte_order=little\nlayout=row-major\n";
    out += "pixel_pitch_m=" + format_double(header.pixel_pitch_m) + "\n";
    out += std::string("semantic=") + to_string(header.semantic) + "\n";
    out += "end\n";
    out.reserve(out.size() + header.payload_bytes());
    for (float v : payload) append_le(out, v);
    return out;
}

GridFile decode_grid(const std::string& bytes) {
    if (bytes.size() < kMagic.size() || bytes.compare(0, kMagic.size(), kMagic) != 0) {
        const bool versioned = bytes.compare(0, kMagicStem.size(), kMagicStem) == 0;
        throw GridFormatError(versioned ? GridErrorKind::Version : GridErrorKind::BadMagic, 0,
                              versioned ? "expected SPGRID1, found '" +
                                              bytes.substr(0, std::min(bytes.size(), kMagic.size() - 1)) + "'"
                                        : "file does not start with SPGRID1");
    }

    GridFile grid;
    std::size_t pos = kMagic.size();
    auto next_line = [&](std::string& line) {
        const std::size_t nl = bytes.find('\n', pos);
        if (nl == std::string::npos) {
            throw GridFormatError(GridErrorKind::Malformed, pos, "header line is not newline-terminated");
        }
        line = bytes.substr(pos, nl - pos);
        const std::size_t start = pos;
        pos = nl + 1;
        return start;
    };

    std::string line;
    for (const char* key : kKeys) {
        const std::size_t at = next_line(line);
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos || line.compare(0, eq, key) != 0 || eq != std::strlen(key)) {
            throw GridFormatError(GridErrorKind::Malformed, at,
                                  std::string("expected field '") + key + "', found '" + line + "'");
        }
        const std::string value = line.substr(eq + 1);
        const std::uint64_t vat = at + eq + 1;
        const std::string k = key;
        if (k == "width") {
            grid.header.width = parse_dimension(value, vat, key);
        } else if (k == "height") {
            grid.header.height = parse_dimension(value, vat, key);
        } else if (k == "channels") {
            grid.header.channels = parse_dimension(value, vat, key);
        } else if (k == "dtype") {
            if (value != "f32") throw GridFormatError(GridErrorKind::Dtype, vat, "dtype '" + value + "' is not f32");
        } else if (k == "byte_order") {
            if (value != "little") {
                throw GridFormatError(GridErrorKind::Malformed, vat, "byte_order '" + value + "' is not little");
            }
        } else if (k == "layout") {
            if (value != "row-major") {
                throw GridFormatError(GridErrorKind::Malformed, vat, "layout '" + value + "' is not row-major");
            }
        } else if (k == "pixel_pitch_m") {
            char* end = nullptr;
            errno = 0;
            const double v = std::strtod(value.c_str(), &end);
            if (value.empty() || end != value.c_str() + value.size() || errno != 0 || !(v > 0.0) || !std::isfinite(v)) {
                throw GridFormatError(GridErrorKind::Malformed, vat, "invalid pixel_pitch_m '" + value + "'");
            }
            grid.header.pixel_pitch_m = v;
        } else {
            try {
                grid.header.semantic = parse_semantic(value);
            } catch (const ParameterError&) {
                throw GridFormatError(GridErrorKind::Malformed, vat, "unknown semantic '" + value + "'");
            }
        }
    }
    const std::size_t end_at = next_line(line);
    if (line != "end") throw GridFormatError(GridErrorKind::Malformed, end_at, "expected 'end', found '" + line + "'");

    const std::size_t expected = grid.header.payload_bytes();
    const std::size_t actual = bytes.size() - pos;
    if (actual != expected) {
        throw GridFormatError(GridErrorKind::Length, pos,
                              "payload expected " + std::to_string(expected) + " bytes, found " + std::to_string(actual));
    }
    grid.payload.resize(grid.header.payload_values());
    for (std::size_t i = 0; i < grid.payload.size(); ++i) grid.payload[i] = read_le(bytes.data() + pos + 4 * i);
    return grid;
}

void write_grid(const std::filesystem::path& path, const GridHeader& header, const std::vector<float>& payload) {
    const std::string bytes = encode_grid(header, payload);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw GridFormatError(GridErrorKind::Io, 0, "cannot open '" + path.string() + "' for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) throw GridFormatError(GridErrorKind::Io, 0, "write to '" + path.string() + "' failed");
}

GridFile read_grid(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw GridFormatError(GridErrorKind::Io, 0, "cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw GridFormatError(GridErrorKind::Io, 0, "read from '" + path.string() + "' failed");
    return decode_grid(ss.str());
}

void write_image(const std::filesystem::path& path, const Image2D& img, GridSemantic semantic) {
    GridHeader header{img.width(), img.height(), 1, img.pixel_pitch(), semantic};
    std::vector<float> payload(img.data().begin(), img.data().end());
    write_grid(path, header, payload);
}

Image2D grid_to_image(const GridFile& grid, int channel) {
    if (channel < 0 || channel >= grid.header.channels) throw ParameterError("grid channel out of range");
    Image2D img(grid.header.width, grid.header.height, grid.header.pixel_pitch_m);
    const std::size_t plane = static_cast<std::size_t>(grid.header.width) * grid.header.height;
    std::copy_n(grid.payload.begin() + static_cast<std::ptrdiff_t>(plane * channel), plane, img.data().begin());
    return img;
}

Image2D read_image(const std::filesystem::path& path, GridSemantic* semantic) {
    const GridFile grid = read_grid(path);
    if (grid.header.channels != 1) {
        throw ParameterError("'" + path.string() + "' has " + std::to_string(grid.header.channels) +
                             " channels, expected 1");
    }
    if (semantic) *semantic = grid.header.semantic;
    return grid_to_image(grid, 0);
}

void write_pgm(const std::filesystem::path& path, const Image2D& img) {
    const double lo = img.min();
    const double hi = img.max();
    const double scale = hi > lo ? 255.0 / (hi - lo) : 0.0;
    std::string bytes = "P5\n" + std::to_string(img.width()) + " " + std::to_string(img.height()) + "\n255\n";
    for (double v : img.data()) bytes.push_back(static_cast<char>(std::lround((v - lo) * scale)));
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write to '" + path.string() + "' failed");
}

}  // namespace speckle
