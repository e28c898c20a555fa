#include "speckle/error.hpp"
#include "speckle/optics.hpp"
#include "speckle/parallel.hpp"
#include "speckle/synth.hpp"
#include "speckle/track.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <array>
#include <numbers>

namespace speckle {
namespace {

Image2D speckle_reference(int size, std::uint64_t seed) {
    return render_reference(generate_coded_mask(size, 1, SeedContext(seed)), OpticsConfig{}, kDefaultPixelPitch);
}

Image2D unit_transmission(const Image2D& like) { return Image2D(like.width(), like.height(), like.pixel_pitch(), 1.0); }

Image2D shifted(const Image2D& ref, double dx, double dy) {
    return warp_apply(ref, VectorField2D(ref.width(), ref.height(), dx, dy), unit_transmission(ref));
}

// Per-component RMS error over valid pixels.
std::pair<double, double> valid_rms(const MatchResult& m, const VectorField2D& truth) {
    double sx = 0.0;
    double sy = 0.0;
    long long n = 0;
    for (int y = 0; y < truth.height(); ++y) {
        for (int x = 0; x < truth.width(); ++x) {
            if (m.valid_mask(x, y) < 0.5) continue;
            const double ex = m.displacement.dx()(x, y) - truth.dx()(x, y);
            const double ey = m.displacement.dy()(x, y) - truth.dy()(x, y);
            sx += ex * ex;
            sy += ey * ey;
            ++n;
        }
    }
    return {std::sqrt(sx / n), std::sqrt(sy / n)};
}

TEST(Subpixel, SymmetricPatchIsCentred) {
    const std::array<double, 9> patch{0.2, 0.5, 0.2, 0.5, 1.0, 0.5, 0.2, 0.5, 0.2};
    const auto [dx, dy] = subpixel_refine(patch);
    EXPECT_EQ(dx, 0.0);
    EXPECT_EQ(dy, 0.0);
}

TEST(Subpixel, ExactForParabola) {
    auto f = [](double t) { return 1.0 - 0.4 * (t - 0.3) * (t - 0.3); };
    auto g = [](double t) { return 1.0 - 0.7 * (t + 0.15) * (t + 0.15); };
    std::array<double, 9> patch{};
    for (int j = -1; j <= 1; ++j) {
        for (int i = -1; i <= 1; ++i) patch[static_cast<std::size_t>((j + 1) * 3 + (i + 1))] = f(i) + g(j);
    }
    const auto [dx, dy] = subpixel_refine(patch);
    EXPECT_NEAR(dx, 0.3, 1e-12);
    EXPECT_NEAR(dy, -0.15, 1e-12);
}

TEST(Subpixel, SincPeakWithinBound) {
    // Main lobe two samples wide, like a blurred-speckle correlation peak.
    auto sinc = [](double t) { return t == 0.0 ? 1.0 : std::sin(std::numbers::pi * t) / (std::numbers::pi * t); };
    auto s = [&](int k) { return sinc((k - 0.25) / 2.0); };
    EXPECT_NEAR(parabolic_peak_offset(s(-1), s(0), s(1)), 0.25, 0.05);
}

TEST(Subpixel, FlatOrConvexGivesZeroAndClamps) {
    EXPECT_EQ(parabolic_peak_offset(1.0, 1.0, 1.0), 0.0);
    EXPECT_EQ(parabolic_peak_offset(1.0, 0.5, 1.0), 0.0);
    const double d = parabolic_peak_offset(0.0, 1.0, 1.0);
    EXPECT_LE(d, 0.5);
    EXPECT_GE(d, -0.5);
}

TEST(ZnccMatch, IdenticalImagesGiveZeroAndUnitScore) {
    const Image2D ref = speckle_reference(64, 1);
    const TrackConfig cfg;
    for (int y = 13; y < 51; y += 5) {
        for (int x = 13; x < 51; x += 5) {
            const PointMatch m = zncc_match(ref, ref, x, y, cfg);
            ASSERT_TRUE(m.valid);
            EXPECT_EQ(m.dx, 0.0);
            EXPECT_EQ(m.dy, 0.0);
            EXPECT_NEAR(m.score, 1.0, 1e-12);
        }
    }
}

TEST(ZnccMatch, IntegerShiftIsExact) {
    const Image2D ref = speckle_reference(64, 2);
    const Image2D sample = shifted(ref, 2.0, -1.0);
    const PointMatch m = zncc_match(ref, sample, 32, 30, TrackConfig{});
    EXPECT_EQ(m.dx, 2.0);
    EXPECT_EQ(m.dy, -1.0);
    EXPECT_GE(m.score, 0.999);
}

TEST(ZnccMatch, ScaledSampleKeepsZeroShift) {
    const Image2D ref = speckle_reference(64, 3);
    Image2D sample = ref;
    for (double& v : sample.data()) v *= 0.7;
    const PointMatch m = zncc_match(ref, sample, 30, 33, TrackConfig{});
    EXPECT_EQ(m.dx, 0.0);
    EXPECT_EQ(m.dy, 0.0);
    EXPECT_GE(m.score, 0.999);
}

TEST(ZnccMatch, AffineIntensityInvariance) {
    const Image2D ref = speckle_reference(64, 4);
    const Image2D sample = warp_apply(ref, smooth_displacement_field(64, 64, 2.0), unit_transmission(ref));
    Image2D affine = sample;
    for (double& v : affine.data()) v = 2.5 * v + 0.3;
    const TrackConfig cfg;
    for (int y = 14; y < 50; y += 7) {
        for (int x = 14; x < 50; x += 7) {
            const PointMatch a = zncc_match(ref, sample, x, y, cfg);
            const PointMatch b = zncc_match(ref, affine, x, y, cfg);
            EXPECT_NEAR(a.dx, b.dx, 1e-6);
            EXPECT_NEAR(a.dy, b.dy, 1e-6);
            EXPECT_NEAR(a.score, b.score, 1e-9);
        }
    }
}

TEST(ZnccMatch, FlatTemplateIsInvalid) {
    const Image2D ref = speckle_reference(64, 5);
    const Image2D flat(64, 64, kDefaultPixelPitch, 0.4);
    const PointMatch m = zncc_match(ref, flat, 32, 32, TrackConfig{});
    EXPECT_FALSE(m.valid);
    EXPECT_EQ(m.score, 0.0);
}

TEST(ZnccMatch, RejectsBorderBandAndMismatchedShapes) {
    const Image2D ref = speckle_reference(64, 6);
    EXPECT_THROW(zncc_match(ref, ref, 12, 32, TrackConfig{}), ParameterError);
    EXPECT_THROW(zncc_match(ref, Image2D(64, 65), 32, 32, TrackConfig{}), ParameterError);
}

TEST(TrackConfig, Validation) {
    TrackConfig cfg;
    EXPECT_NO_THROW(cfg.validate());
    cfg.template_half = 0;
    EXPECT_THROW(cfg.validate(), ParameterError);
    cfg = TrackConfig{};
    cfg.search_half = 2;
    EXPECT_THROW(cfg.validate(), ParameterError);
    cfg = TrackConfig{};
    cfg.pyramid_levels = 1;
    EXPECT_THROW(cfg.validate(), ParameterError);
    cfg = TrackConfig{};
    cfg.stride = 0;
    EXPECT_THROW(cfg.validate(), ParameterError);
}

TEST(DicFull, IdenticalImagesGiveZeroField) {
    const Image2D ref = speckle_reference(64, 7);
    const MatchResult m = dic_track_full(ref, ref, TrackConfig{});
    for (int y = 0; y < 64; ++y) {
        for (int x = 0; x < 64; ++x) {
            const bool border = x < 13 || y < 13 || x >= 51 || y >= 51;
            EXPECT_EQ(m.valid_mask(x, y), border ? 0.0 : 1.0);
            if (!border) {
                EXPECT_EQ(m.displacement.dx()(x, y), 0.0);
                EXPECT_EQ(m.displacement.dy()(x, y), 0.0);
                EXPECT_NEAR(m.peak_score(x, y), 1.0, 1e-12);
            }
        }
    }
}

TEST(DicFull, UniformSubpixelShiftBias) {
    const Image2D ref = speckle_reference(96, 8);
    const MatchResult m = dic_track_full(ref, shifted(ref, 0.3, 0.0), TrackConfig{});
    double sum = 0.0;
    long long n = 0;
    for (int y = 0; y < 96; ++y) {
        for (int x = 0; x < 96; ++x) {
            if (m.valid_mask(x, y) < 0.5) continue;
            sum += m.displacement.dx()(x, y);
            ++n;
        }
    }
    const double mean = sum / static_cast<double>(n);
    EXPECT_GE(mean, 0.15);
    EXPECT_LE(mean, 0.45);
}

TEST(DicFull, ScoresBoundedAndFiniteOnValid) {
    const Image2D ref = speckle_reference(96, 9);
    const MatchResult m = dic_track_full(ref, warp_apply(ref, smooth_displacement_field(96, 96, 3.0), unit_transmission(ref)),
                                         TrackConfig{});
    for (std::size_t i = 0; i < ref.size(); ++i) {
        EXPECT_LE(std::abs(m.peak_score.data()[i]), 1.0 + 1e-9);
        if (m.valid_mask.data()[i] > 0.5) {
            EXPECT_TRUE(std::isfinite(m.displacement.dx().data()[i]));
            EXPECT_TRUE(std::isfinite(m.displacement.dy().data()[i]));
        }
    }
}

// 256 px with 2.5 px amplitude has the strain of the 512 px, 5 px case.
TEST(DicFull, SmoothFieldAccuracy) {
    const Image2D ref = speckle_reference(256, 10);
    const VectorField2D truth = smooth_displacement_field(256, 256, 2.5);
    const MatchResult m = dic_track_full(ref, warp_apply(ref, truth, unit_transmission(ref)), TrackConfig{});
    const auto [rx, ry] = valid_rms(m, truth);
    EXPECT_LE(rx, 0.15);
    EXPECT_LE(ry, 0.15);
}

// The swapped pair's truth is -delta(x + u) with u = delta(x + u), so the
// amplitude-strain product is kept small.
TEST(DicFull, SwapNegatesField) {
    const Image2D ref = speckle_reference(256, 11);
    const VectorField2D truth = smooth_displacement_field(256, 256, 1.0);
    const Image2D sample = warp_apply(ref, truth, unit_transmission(ref));
    const MatchResult fwd = dic_track_full(ref, sample, TrackConfig{});
    const MatchResult bwd = dic_track_full(sample, ref, TrackConfig{});
    double sx = 0.0;
    double sy = 0.0;
    long long n = 0;
    for (int y = 0; y < 256; ++y) {
        for (int x = 0; x < 256; ++x) {
            if (fwd.valid_mask(x, y) < 0.5 || bwd.valid_mask(x, y) < 0.5) continue;
            sx += std::abs(fwd.displacement.dx()(x, y) + bwd.displacement.dx()(x, y));
            sy += std::abs(fwd.displacement.dy()(x, y) + bwd.displacement.dy()(x, y));
            ++n;
        }
    }
    // Mean absolute discrepancy per component.
    EXPECT_LE(sx / static_cast<double>(n), 0.1);
    EXPECT_LE(sy / static_cast<double>(n), 0.1);
}

TEST(DicFull, ErrorGrowsWithNoise) {
    const Image2D ref = speckle_reference(128, 12);
    const VectorField2D truth = smooth_displacement_field(128, 128, 3.0);
    const Image2D clean = warp_apply(ref, truth, unit_transmission(ref));
    double previous = -1.0;
    for (double sigma : {0.0, 0.01, 0.05}) {
        Image2D sample = clean;
        auto rng = SeedContext(99).stream("noise");
        const double s = sigma * ref.mean();
        for (double& v : sample.data()) v += s * rng.normal();
        const auto [rx, ry] = valid_rms(dic_track_full(ref, sample, TrackConfig{}), truth);
        const double rms = std::hypot(rx, ry);
        EXPECT_GE(rms, previous) << "sigma " << sigma;
        previous = rms;
    }
}

TEST(DicFull, StrideFillsSkippedPixels) {
    const Image2D ref = speckle_reference(64, 13);
    TrackConfig cfg;
    cfg.stride = 3;
    const MatchResult m = dic_track_full(ref, shifted(ref, 2.0, -1.0), cfg);
    EXPECT_DOUBLE_EQ(m.valid_fraction(), (38.0 * 38.0) / (64.0 * 64.0));
    for (int y = 13; y < 51; ++y) {
        for (int x = 13; x < 51; ++x) {
            EXPECT_EQ(m.displacement.dx()(x, y), 2.0);
            EXPECT_EQ(m.displacement.dy()(x, y), -1.0);
        }
    }
}

TEST(DicPyramid, LargeShiftBeyondLevelSearchIsExact) {
    const Image2D ref = speckle_reference(256, 14);
    const MatchResult m = dic_track_pyramid(ref, shifted(ref, 8.0, 8.0), TrackConfig{});
    long long checked = 0;
    for (int y = 24; y < 232; ++y) {
        for (int x = 24; x < 232; ++x) {
            ASSERT_EQ(m.valid_mask(x, y), 1.0);
            ASSERT_EQ(m.displacement.dx()(x, y), 8.0) << x << "," << y;
            ASSERT_EQ(m.displacement.dy()(x, y), 8.0) << x << "," << y;
            ++checked;
        }
    }
    EXPECT_GT(checked, 40000);
}

TEST(DicPyramid, AgreesWithFullSearch) {
    const Image2D ref = speckle_reference(256, 15);
    const VectorField2D truth = smooth_displacement_field(256, 256, 2.5);
    const Image2D sample = warp_apply(ref, truth, unit_transmission(ref));
    const MatchResult full = dic_track_full(ref, sample, TrackConfig{});
    const MatchResult pyr = dic_track_pyramid(ref, sample, TrackConfig{});
    const auto [ex, ey] = valid_rms(pyr, full.displacement);
    EXPECT_LE(ex, 0.1);
    EXPECT_LE(ey, 0.1);
}

TEST(DicPyramid, IndependentOfThreadCount) {
    const Image2D ref = speckle_reference(128, 16);
    const Image2D sample = warp_apply(ref, smooth_displacement_field(128, 128, 4.0), unit_transmission(ref));
    const int saved = num_threads();
    set_num_threads(1);
    const MatchResult a = dic_track_pyramid(ref, sample, TrackConfig{});
    set_num_threads(4);
    const MatchResult b = dic_track_pyramid(ref, sample, TrackConfig{});
    set_num_threads(saved);
    EXPECT_EQ(a.displacement, b.displacement);
    EXPECT_EQ(a.peak_score, b.peak_score);
}

TEST(Transmission, RoundTripWithExactDisplacement) {
    const Image2D ref = speckle_reference(128, 17);
    const VectorField2D d = smooth_displacement_field(128, 128, 3.0);
    const Image2D t = test::make_image(128, 128, [](int x, int y) {
        return 1.0 - 0.15 * std::exp(-((x - 64.0) * (x - 64.0) + (y - 60.0) * (y - 60.0)) / 800.0);
    });
    const Image2D sample = warp_apply(ref, d, t);
    const Image2D rec = transmission_recover(ref, sample, d, false);
    EXPECT_LT(test::rms_diff(rec, t, 8), 1e-3);
}

TEST(Transmission, IdentityAndUniform) {
    const Image2D ref = speckle_reference(64, 18);
    const VectorField2D zero(64, 64);
    const Image2D same = transmission_recover(ref, ref, zero);
    for (double v : same.data()) EXPECT_EQ(v, 1.0);
    Image2D half = ref;
    for (double& v : half.data()) v *= 0.5;
    const Image2D halved = transmission_recover(ref, half, zero);
    for (double v : halved.data()) EXPECT_NEAR(v, 0.5, 1e-6);
}

TEST(Median, FiltersImpulse) {
    Image2D img(16, 16, kDefaultPixelPitch, 1.0);
    img(7, 7) = 100.0;
    const Image2D filtered = median3x3(img);
    for (double v : filtered.data()) EXPECT_EQ(v, 1.0);
    const Image2D wide = median_filter(test::random_image(16, 16, 1), 2);
    EXPECT_EQ(wide.width(), 16);
}

}  // namespace
}  // namespace speckle
