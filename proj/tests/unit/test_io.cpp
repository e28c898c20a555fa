#include "speckle/config.hpp"
#include "speckle/digest.hpp"
#include "speckle/error.hpp"
#include "speckle/gridio.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <cstring>
#include <fstream>
#include <limits>

namespace speckle {
namespace {

std::string read_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
}

void write_bytes(const std::filesystem::path& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << bytes;
}

template <typename F>
GridFormatError expect_format_error(F&& f) {
    try {
        f();
    } catch (const GridFormatError& e) {
        return e;
    }
    ADD_FAILURE() << "no GridFormatError thrown";
    return GridFormatError(GridErrorKind::Io, 0, "");
}

// --- SPGRID1 ----------------------------------------------------------------

TEST(Grid, EncodesTheDocumentedLayout) {
    GridHeader h;
    h.width = 2;
    h.height = 1;
    h.semantic = GridSemantic::DispPxX;
    h.pixel_pitch_m = 1e-6;
    const std::string bytes = encode_grid(h, {1.0f, -2.0f});
    const std::string text =
        "SPGRID1\nwidth=2\nheight=1\nchannels=1\ndtype=f32\nbyte_order=little\nlayout=row-major\n"
        "pixel_pitch_m=9.9999999999999995e-07\nsemantic=disp_px_x\nend\n";
    ASSERT_EQ(bytes.size(), text.size() + 8);
    EXPECT_EQ(bytes.substr(0, text.size()), text);
    // IEEE-754 binary32 little endian: 1.0 = 3f800000, -2.0 = c0000000.
    const unsigned char payload[8] = {0x00, 0x00, 0x80, 0x3f, 0x00, 0x00, 0x00, 0xc0};
    EXPECT_EQ(std::memcmp(bytes.data() + text.size(), payload, 8), 0);
}

TEST(Grid, ImageRoundTripIsBitIdentical) {
    const test::TempDir dir("grid-roundtrip");
    Image2D img = test::random_image(37, 21, 3, -5.0, 5.0);
    round_to_float(img);
    img(0, 0) = std::numeric_limits<float>::denorm_min();
    img(1, 0) = -0.0;
    for (GridSemantic sem : {GridSemantic::Intensity, GridSemantic::PhaseRad, GridSemantic::Transmission,
                             GridSemantic::DispPxX, GridSemantic::DispPxY, GridSemantic::Feature}) {
        const auto path = dir.path() / (std::string(to_string(sem)) + ".spgrid");
        write_image(path, img, sem);
        GridSemantic back_sem = GridSemantic::Intensity;
        const Image2D back = read_image(path, &back_sem);
        EXPECT_EQ(back_sem, sem);
        EXPECT_EQ(back.width(), 37);
        EXPECT_EQ(back.height(), 21);
        EXPECT_EQ(back.pixel_pitch(), img.pixel_pitch());
        EXPECT_EQ(std::memcmp(back.data().data(), img.data().data(), img.size() * sizeof(double)), 0);
    }
}

TEST(Grid, MultiChannelRoundTrip) {
    const test::TempDir dir("grid-channels");
    GridHeader h;
    h.width = 3;
    h.height = 2;
    h.channels = 4;
    h.semantic = GridSemantic::Feature;
    std::vector<float> payload(h.payload_values());
    for (std::size_t i = 0; i < payload.size(); ++i) payload[i] = static_cast<float>(i) * 0.25f - 1.0f;
    write_grid(dir.path() / "f.spgrid", h, payload);
    const GridFile g = read_grid(dir.path() / "f.spgrid");
    EXPECT_EQ(g.header.channels, 4);
    EXPECT_EQ(g.payload, payload);
    const Image2D c2 = grid_to_image(g, 2);
    EXPECT_EQ(c2(1, 1), payload[2 * 6 + 4]);
    EXPECT_THROW(grid_to_image(g, 4), ParameterError);
    EXPECT_THROW(read_image(dir.path() / "f.spgrid"), ParameterError);
}

TEST(Grid, TruncatedPayloadIsLengthError) {
    GridHeader h;
    h.width = 4;
    h.height = 4;
    std::string bytes = encode_grid(h, std::vector<float>(16, 1.0f));
    bytes.pop_back();
    const GridFormatError e = expect_format_error([&] { decode_grid(bytes); });
    EXPECT_EQ(e.kind(), GridErrorKind::Length);
    const std::string msg = e.what();
    EXPECT_NE(msg.find("64"), std::string::npos) << msg;
    EXPECT_NE(msg.find("63"), std::string::npos) << msg;
    EXPECT_EQ(e.offset(), bytes.size() - 63);
}

TEST(Grid, TrailingBytesAreLengthError) {
    GridHeader h;
    h.width = 2;
    h.height = 2;
    const std::string bytes = encode_grid(h, std::vector<float>(4, 0.5f)) + "x";
    EXPECT_EQ(expect_format_error([&] { decode_grid(bytes); }).kind(), GridErrorKind::Length);
}

TEST(Grid, NewerMagicIsVersionError) {
    GridHeader h;
    h.width = 1;
    h.height = 1;
    std::string bytes = encode_grid(h, std::vector<float>(h.payload_values()));
    bytes[6] = '2';
    const GridFormatError e = expect_format_error([&] { decode_grid(bytes); });
    EXPECT_EQ(e.kind(), GridErrorKind::Version);
    EXPECT_EQ(e.offset(), 0u);
}

TEST(Grid, ForeignMagicIsBadMagic) {
    EXPECT_EQ(expect_format_error([] { decode_grid("P5\n2 2\n255\n"); }).kind(), GridErrorKind::BadMagic);
    EXPECT_EQ(expect_format_error([] { decode_grid(""); }).kind(), GridErrorKind::BadMagic);
}

std::string replace_once(std::string s, const std::string& from, const std::string& to) {
    const auto at = s.find(from);
    EXPECT_NE(at, std::string::npos);
    return s.replace(at, from.size(), to);
}

TEST(Grid, HeaderErrorsAreDistinctWithOffsets) {
    GridHeader h;
    h.width = 2;
    h.height = 2;
    const std::string good = encode_grid(h, std::vector<float>(4, 1.0f));

    const GridFormatError dtype = expect_format_error([&] { decode_grid(replace_once(good, "dtype=f32", "dtype=f64")); });
    EXPECT_EQ(dtype.kind(), GridErrorKind::Dtype);
    EXPECT_EQ(dtype.offset(), good.find("f32"));

    const GridFormatError order =
        expect_format_error([&] { decode_grid(replace_once(good, "byte_order=little", "byte_order=big")); });
    EXPECT_EQ(order.kind(), GridErrorKind::Malformed);
    EXPECT_EQ(order.offset(), good.find("little"));

    const GridFormatError swapped =
        expect_format_error([&] { decode_grid(replace_once(good, "width=2\nheight=2", "height=2\nwidth=2")); });
    EXPECT_EQ(swapped.kind(), GridErrorKind::Malformed);
    EXPECT_EQ(swapped.offset(), good.find("width"));

    EXPECT_EQ(expect_format_error([&] { decode_grid(replace_once(good, "end\n", "fin\n")); }).kind(),
              GridErrorKind::Malformed);
    EXPECT_EQ(expect_format_error([&] { decode_grid(replace_once(good, "semantic=intensity", "semantic=colour")); })
                  .kind(),
              GridErrorKind::Malformed);
    EXPECT_EQ(expect_format_error([&] { decode_grid(good.substr(0, good.find("end"))); }).kind(),
              GridErrorKind::Malformed);
}

TEST(Grid, FormatErrorsAreIoErrors) {
    const test::TempDir dir("grid-missing");
    const GridFormatError e = expect_format_error([&] { read_grid(dir.path() / "absent.spgrid"); });
    EXPECT_EQ(e.kind(), GridErrorKind::Io);
    EXPECT_THROW(read_grid(dir.path() / "absent.spgrid"), IoError);
}

TEST(Grid, InconsistentWriteIsParameterError) {
    GridHeader h;
    h.width = 3;
    h.height = 3;
    EXPECT_THROW(encode_grid(h, std::vector<float>(8)), ParameterError);
    h.width = 0;
    EXPECT_THROW(encode_grid(h, {}), ParameterError);
}

TEST(Grid, SemanticNames) {
    EXPECT_STREQ(to_string(GridSemantic::PhaseRad), "phase_rad");
    EXPECT_STREQ(to_string(GridSemantic::DispPxY), "disp_px_y");
    EXPECT_EQ(parse_semantic("transmission"), GridSemantic::Transmission);
    EXPECT_THROW(parse_semantic("Intensity"), ParameterError);
}

TEST(Pgm, HeaderAndScaling) {
    const test::TempDir dir("pgm");
    const Image2D img = test::make_image(3, 1, [](int x, int) { return 2.0 * x - 1.0; });
    write_pgm(dir.path() / "a.pgm", img);
    const std::string bytes = read_bytes(dir.path() / "a.pgm");
    const std::string head = "P5\n3 1\n255\n";
    ASSERT_EQ(bytes.size(), head.size() + 3);
    EXPECT_EQ(bytes.substr(0, head.size()), head);
    EXPECT_EQ(static_cast<unsigned char>(bytes[head.size()]), 0);
    EXPECT_EQ(static_cast<unsigned char>(bytes[head.size() + 1]), 128);
    EXPECT_EQ(static_cast<unsigned char>(bytes[head.size() + 2]), 255);
}

// --- digests ------------------------------------------------------------------

TEST(Digest, Sha256KnownVectors) {
    EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Digest, FileMatchesBytes) {
    const test::TempDir dir("digest");
    write_bytes(dir.path() / "x.bin", std::string("abc"));
    EXPECT_EQ(sha256_file(dir.path() / "x.bin"), sha256_hex("abc"));
    EXPECT_THROW(sha256_file(dir.path() / "absent"), IoError);
}

TEST(Digest, ImageDigestSeesShapePitchAndValues) {
    const Image2D a = test::random_image(8, 6, 1);
    EXPECT_EQ(digest_image(a), digest_image(a));
    Image2D b = a;
    b(3, 3) = std::nextafter(b(3, 3), 2.0);
    EXPECT_NE(digest_image(a), digest_image(b));
    const Image2D c(8, 6, 1e-6, std::vector<double>(a.data().begin(), a.data().end()));
    EXPECT_NE(digest_image(a), digest_image(c));
    const Image2D d(6, 8, a.pixel_pitch(), std::vector<double>(a.data().begin(), a.data().end()));
    EXPECT_NE(digest_image(a), digest_image(d));
}

// --- config -------------------------------------------------------------------

TEST(Config, EmptyObjectKeepsDefaults) {
    const ToolkitConfig cfg = parse_config("{}");
    EXPECT_EQ(config_to_json(cfg), config_to_json(ToolkitConfig{}));
    EXPECT_DOUBLE_EQ(cfg.geometry.sample_to_camera_m(), 0.628);
}

TEST(Config, RoundTripThroughJson) {
    ToolkitConfig cfg;
    cfg.optics.distance_m = 0.05;
    cfg.synth.noise_sigma = 0.01;
    cfg.synth.edge_blur_px = 21;
    cfg.geometry.mask_to_camera_m = 0.9;
    cfg.track.template_half = 5;
    cfg.track.outlier_threshold = 0.0;
    const std::string text = config_to_json(cfg);
    EXPECT_EQ(config_to_json(parse_config(text)), text);
}

TEST(Config, PartialSectionOverridesOnlyNamedKeys) {
    const ToolkitConfig cfg = parse_config(R"({"track": {"search_half": 4}, "synth": {"edge_blur_px": 9}})");
    EXPECT_EQ(cfg.track.search_half, 4);
    EXPECT_EQ(cfg.track.template_half, TrackConfig{}.template_half);
    EXPECT_EQ(cfg.synth.edge_blur_px, 9);
}

TEST(Config, RejectsUnknownKeysBadTypesAndBadJson) {
    EXPECT_THROW(parse_config(R"({"track": {"serch_half": 4}})"), ParameterError);
    EXPECT_THROW(parse_config(R"({"tracking": {}})"), ParameterError);
    EXPECT_THROW(parse_config(R"({"track": {"search_half": "four"}})"), ParameterError);
    EXPECT_THROW(parse_config(R"({"track": 3})"), ParameterError);
    EXPECT_THROW(parse_config("{"), ParameterError);
    EXPECT_THROW(parse_config(R"({"track": {"search_half": -1}})"), ParameterError);
}

TEST(Config, MissingFileIsIoError) {
    const test::TempDir dir("config");
    EXPECT_THROW(load_config(dir.path() / "absent.json"), IoError);
    write_bytes(dir.path() / "c.json", R"({"geometry": {"pixel_pitch_m": 1e-6}})");
    EXPECT_EQ(load_config(dir.path() / "c.json").geometry.pixel_pitch_m, 1e-6);
}

}  // namespace
}  // namespace speckle
