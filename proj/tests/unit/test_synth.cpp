#include "speckle/error.hpp"
#include "speckle/optics.hpp"
#include "speckle/synth.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <numbers>

namespace speckle {
namespace {

constexpr double kPi = std::numbers::pi;

TEST(ShapeMask, UnperturbedContourIsACircle) {
    SynthConfig cfg;
    cfg.contour_perturbation = 0.0;
    cfg.contour_points_min = 8;
    cfg.contour_points_max = 8;
    for (std::uint64_t s = 0; s < 5; ++s) {
        const SeedContext seed(s);
        const ContourSpec spec = draw_contour(128, 128, seed, cfg);
        EXPECT_EQ(spec.point_radii.size(), 8u);
        EXPECT_GE(spec.radius, 0.2 * 128);
        EXPECT_LE(spec.radius, 0.4 * 128);
        const Image2D mask = gen_shape_mask(128, 128, seed, cfg);
        const double expected = kPi * spec.radius * spec.radius / (128.0 * 128.0);
        double fraction = 0.0;
        for (double v : mask.data()) fraction += v;
        fraction /= static_cast<double>(mask.size());
        EXPECT_GE(fraction, 0.9 * expected);
        EXPECT_LE(fraction, 1.1 * expected);
    }
}

TEST(ShapeMask, RangeBoundaryAndDeterminism) {
    const SynthConfig cfg;
    for (std::uint64_t s = 10; s < 15; ++s) {
        const Image2D mask = gen_shape_mask(96, 80, SeedContext(s), cfg);
        int boundary = 0;
        for (double v : mask.data()) {
            ASSERT_GE(v, 0.0);
            ASSERT_LE(v, 1.0);
            boundary += (v > 0.0 && v < 1.0) ? 1 : 0;
        }
        EXPECT_GT(boundary, 0);
        EXPECT_EQ(mask, gen_shape_mask(96, 80, SeedContext(s), cfg));
    }
    EXPECT_THROW(gen_shape_mask(32, 128, SeedContext(1), cfg), ParameterError);
}

TEST(PhaseMap, ZeroScaleGivesZeroPhase) {
    SynthConfig cfg;
    cfg.phase_scale_min = 0.0;
    cfg.phase_scale_max = 0.0;
    const PhaseDraw d = gen_phase_map(64, 64, SeedContext(1), cfg);
    EXPECT_EQ(d.scale_vp, 0.0);
    for (double v : d.phase.data()) EXPECT_EQ(v, 0.0);
}

TEST(PhaseMap, NonNegativeAndZeroOutsideSupport) {
    const SynthConfig cfg;
    for (std::uint64_t s = 0; s < 4; ++s) {
        const SeedContext seed(s);
        const PhaseDraw d = gen_phase_map(128, 128, seed, cfg);
        const Image2D shape = gen_shape_mask(128, 128, seed.derive("phase").derive("shape"), cfg);
        for (std::size_t i = 0; i < shape.size(); ++i) {
            ASSERT_GE(d.phase.data()[i], 0.0);
            if (shape.data()[i] == 0.0) {
                ASSERT_EQ(d.phase.data()[i], 0.0);
            }
        }
        EXPECT_LE(d.phase.max(), 20.0 * kPi + 1e-9);
    }
}

TEST(PhaseMap, ScaleDistributionOverSeeds) {
    const SynthConfig cfg;
    double lo = 1e9;
    double hi = -1e9;
    double sum = 0.0;
    for (std::uint64_t s = 0; s < 1000; ++s) {
        const double v = gen_phase_map(64, 64, SeedContext(s), cfg).scale_vp;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
        sum += v;
    }
    EXPECT_GE(lo, kPi);
    EXPECT_LE(hi, 20.0 * kPi);
    EXPECT_NEAR(sum / 1000.0, 10.5 * kPi, 0.05 * 10.5 * kPi);
}

TEST(TransmissionMap, ZeroDepthIsUnity) {
    SynthConfig cfg;
    cfg.transmission_depth_min = 0.0;
    cfg.transmission_depth_max = 0.0;
    const TransmissionDraw t = gen_transmission_map(64, 64, SeedContext(2), cfg, nullptr);
    for (double v : t.transmission.data()) EXPECT_EQ(v, 1.0);
}

TEST(TransmissionMap, FloorAndCorrelatedFraction) {
    const SynthConfig cfg;
    int correlated = 0;
    for (std::uint64_t s = 0; s < 1000; ++s) {
        const SeedContext seed(s);
        const PhaseDraw p = gen_phase_map(64, 64, seed, cfg);
        const TransmissionDraw t = gen_transmission_map(64, 64, seed, cfg, &p.structure);
        correlated += t.correlated ? 1 : 0;
        if (s < 50) {
            ASSERT_GE(t.transmission.min(), 0.8);
            ASSERT_LE(t.transmission.max(), 1.0);
            ASSERT_GT(t.transmission.min(), 0.0);
        }
    }
    EXPECT_NEAR(correlated / 1000.0, 0.40, 0.04);
}

TEST(DisplacementFromPhase, ConstantGivesZero) {
    const VectorField2D d = displacement_from_phase(Image2D(32, 32, kDefaultPixelPitch, 3.0), SynthConfig{});
    for (double v : d.dx().data()) EXPECT_EQ(v, 0.0);
    for (double v : d.dy().data()) EXPECT_EQ(v, 0.0);
}

TEST(DisplacementFromPhase, LinearPhaseClosedForm) {
    SynthConfig cfg;
    cfg.geometry = GeometryConfig{0.06e-9, 0.0, 0.3, 0.65e-6};
    // lambda D / (2 pi p^2) = 0.06e-9 * 0.3 / (2 pi * 4.225e-13) = 6.7805656...
    const double coefficient = 0.06e-9 * 0.3 / (2.0 * kPi * 0.65e-6 * 0.65e-6);
    EXPECT_NEAR(coefficient, 6.7805656, 1e-6);
    const VectorField2D d = displacement_from_phase(test::make_image(32, 32, [](int x, int) { return 0.1 * x; }), cfg);
    for (int y = 1; y < 31; ++y) {
        for (int x = 1; x < 31; ++x) {
            EXPECT_NEAR(d.dx()(x, y), 0.1 * coefficient, 1e-9 * 0.1 * coefficient);
            EXPECT_EQ(d.dy()(x, y), 0.0);
        }
    }
}

TEST(DisplacementFromPhase, QuadraticPhaseGivesLinearShift) {
    const SynthConfig cfg;
    const double a = 1e-3;
    const double c = cfg.geometry.displacement_per_gradient();
    const VectorField2D d = displacement_from_phase(test::make_image(64, 16, [&](int x, int) { return a * x * x; }), cfg);
    for (int x = 1; x < 63; ++x) EXPECT_NEAR(d.dx()(x, 8), 2.0 * a * c * x, 1e-9);
}

TEST(DisplacementFromPhase, LinearInPhase) {
    const SynthConfig cfg;
    const Image2D a = test::random_image(32, 32, 1);
    const Image2D b = test::random_image(32, 32, 2);
    Image2D s(32, 32);
    for (std::size_t i = 0; i < s.size(); ++i) s.data()[i] = 2.0 * a.data()[i] + b.data()[i];
    const auto da = displacement_from_phase(a, cfg);
    const auto db = displacement_from_phase(b, cfg);
    const auto ds = displacement_from_phase(s, cfg);
    for (std::size_t i = 0; i < s.size(); ++i) {
        EXPECT_NEAR(ds.dx().data()[i], 2.0 * da.dx().data()[i] + db.dx().data()[i], 1e-12);
        EXPECT_NEAR(ds.dy().data()[i], 2.0 * da.dy().data()[i] + db.dy().data()[i], 1e-12);
    }
}

TEST(WarpApply, IdentityAndUniformTransmission) {
    const Image2D ref = test::random_image(32, 32, 3);
    const VectorField2D zero(32, 32);
    EXPECT_EQ(warp_apply(ref, zero, Image2D(32, 32, kDefaultPixelPitch, 1.0)), ref);
    const Image2D half = warp_apply(ref, zero, Image2D(32, 32, kDefaultPixelPitch, 0.5));
    for (std::size_t i = 0; i < ref.size(); ++i) EXPECT_EQ(half.data()[i], 0.5 * ref.data()[i]);
}

TEST(WarpApply, IntegerShiftIsExact) {
    const Image2D ref = test::random_image(32, 32, 4);
    const Image2D out = warp_apply(ref, VectorField2D(32, 32, 3.0, 0.0), Image2D(32, 32, kDefaultPixelPitch, 1.0));
    for (int y = 0; y < 32; ++y) {
        for (int x = 3; x < 32; ++x) EXPECT_EQ(out(x, y), ref(x - 3, y));
    }
}

TEST(WarpApply, StaysWithinNeighbourRange) {
    const Image2D ref = test::random_image(48, 48, 5);
    const VectorField2D d = smooth_displacement_field(48, 48, 2.0);
    const Image2D out = warp_apply(ref, d, Image2D(48, 48, kDefaultPixelPitch, 1.0));
    for (int y = 4; y < 44; ++y) {
        for (int x = 4; x < 44; ++x) {
            const double sx = x - d.dx()(x, y);
            const double sy = y - d.dy()(x, y);
            const int x0 = static_cast<int>(std::floor(sx));
            const int y0 = static_cast<int>(std::floor(sy));
            const double lo = std::min({ref(x0, y0), ref(x0 + 1, y0), ref(x0, y0 + 1), ref(x0 + 1, y0 + 1)});
            const double hi = std::max({ref(x0, y0), ref(x0 + 1, y0), ref(x0, y0 + 1), ref(x0 + 1, y0 + 1)});
            EXPECT_GE(out(x, y), lo - 1e-12);
            EXPECT_LE(out(x, y), hi + 1e-12);
        }
    }
}

TEST(SmoothField, BoundedAndCurlFree) {
    const VectorField2D d = smooth_displacement_field(128, 96, 5.0);
    double peak = 0.0;
    for (int y = 0; y < 96; ++y) {
        for (int x = 0; x < 128; ++x) peak = std::max(peak, std::hypot(d.dx()(x, y), d.dy()(x, y)));
    }
    EXPECT_LE(peak, 5.0 + 1e-12);
    EXPECT_GT(peak, 4.5);
}

class PairFixture : public ::testing::Test {
protected:
    static SamplePair pair(std::uint64_t m, std::uint64_t s, const SynthConfig& cfg = {}) {
        return make_pair(SeedContext(m), SeedContext(s), cfg, OpticsConfig{}, 128, 8);
    }
};

TEST_F(PairFixture, ForwardModelRoundTripIsBitExact) {
    for (std::uint64_t s = 0; s < 3; ++s) {
        const SamplePair p = pair(s, 100 + s);
        Image2D again = warp_apply(p.reference, p.truth);
        round_to_float(again);
        EXPECT_EQ(again, p.sample);
    }
}

TEST_F(PairFixture, EmptySampleLeavesReferenceUnchanged) {
    SynthConfig cfg;
    cfg.phase_scale_min = cfg.phase_scale_max = 0.0;
    cfg.transmission_depth_min = cfg.transmission_depth_max = 0.0;
    const SamplePair p = pair(1, 2, cfg);
    EXPECT_EQ(p.sample, p.reference);
}

TEST_F(PairFixture, DistinctSeedsGiveDistinctReferences) {
    std::vector<Image2D> refs;
    for (std::uint64_t s = 0; s < 10; ++s) refs.push_back(pair(s, 0).reference);
    for (std::size_t i = 0; i < refs.size(); ++i) {
        for (std::size_t j = i + 1; j < refs.size(); ++j) EXPECT_NE(refs[i], refs[j]);
    }
}

TEST_F(PairFixture, TruthInvariantsAndDeterminism) {
    const SamplePair p = pair(7, 8);
    EXPECT_GT(p.truth.transmission.min(), 0.0);
    EXPECT_LE(p.truth.transmission.max(), 1.0);
    EXPECT_LE(std::abs(p.truth.phase.max()), 20.0 * kPi + 1e-6);
    Image2D dx = displacement_from_phase(p.truth.phase, SynthConfig{}).dx();
    round_to_float(dx);
    EXPECT_EQ(dx, p.truth.displacement.dx());
    const SamplePair q = pair(7, 8);
    EXPECT_EQ(p.reference, q.reference);
    EXPECT_EQ(p.sample, q.sample);
}

TEST_F(PairFixture, MeanRatioWithinTransmissionRange) {
    for (std::uint64_t s = 0; s < 4; ++s) {
        const SamplePair p = pair(s, 50 + s);
        const double ratio = p.sample.mean() / p.reference.mean();
        EXPECT_GE(ratio, p.truth.transmission.min() * 0.99);
        EXPECT_LE(ratio, p.truth.transmission.max() * 1.01);
    }
}

TEST_F(PairFixture, NoiseChangesImagesButNotTruth) {
    SynthConfig noisy;
    noisy.noise_sigma = 0.01;
    const SamplePair clean = pair(3, 4);
    const SamplePair p = pair(3, 4, noisy);
    EXPECT_NE(p.sample, clean.sample);
    EXPECT_EQ(p.truth.phase, clean.truth.phase);
    EXPECT_EQ(p.sample, pair(3, 4, noisy).sample);
}

TEST(SynthConfigValidation, Rejects) {
    SynthConfig cfg;
    EXPECT_NO_THROW(cfg.validate());
    cfg.correlated_fraction = 1.5;
    EXPECT_THROW(cfg.validate(), ParameterError);
    cfg = SynthConfig{};
    cfg.geometry.mask_to_sample_m = 0.5;
    EXPECT_THROW(cfg.validate(), ParameterError);
    cfg = SynthConfig{};
    cfg.geometry.mask_to_sample_m = -0.1;
    EXPECT_THROW(cfg.validate(), ParameterError);
    cfg = SynthConfig{};
    cfg.noise_sigma = -1.0;
    EXPECT_THROW(cfg.validate(), ParameterError);
}

}  // namespace
}  // namespace speckle
