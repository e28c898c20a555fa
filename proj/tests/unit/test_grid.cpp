#include "speckle/error.hpp"
#include "speckle/grid.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <numbers>

namespace speckle {
namespace {

using test::make_image;
using test::random_image;

TEST(Image2D, RejectsBadShapes) {
    EXPECT_THROW(Image2D(0, 16), ParameterError);
    EXPECT_THROW(Image2D(16, 16, 0.0), ParameterError);
    EXPECT_THROW(Image2D(8, 8, 1e-6, std::vector<double>(63)), ParameterError);
    EXPECT_NO_THROW(Image2D(1, 1));
}

TEST(Image2D, FiniteCheck) {
    Image2D img(8, 8, 1e-6, 1.0);
    EXPECT_TRUE(img.all_finite());
    img(3, 4) = std::numeric_limits<double>::quiet_NaN();
    EXPECT_FALSE(img.all_finite());
}

TEST(GaussianBlur, ConstantStaysConstant) {
    const Image2D img(40, 30, 1e-6, 2.5);
    for (int k : {3, 5, 11}) {
        const Image2D out = gaussian_blur(img, k);
        for (double v : out.data()) EXPECT_NEAR(v, 2.5, 1e-12);
    }
}

TEST(GaussianBlur, UnitKernelIsIdentity) {
    const Image2D img = random_image(24, 24, 1);
    EXPECT_EQ(gaussian_blur(img, 1), img);
}

TEST(GaussianBlur, ImpulseWidthMatchesSigmaConvention) {
    Image2D img(33, 33);
    img(16, 16) = 1.0;
    const Image2D out = gaussian_blur(img, 3);
    double total = 0.0;
    double second = 0.0;
    for (int y = 0; y < 33; ++y) {
        for (int x = 0; x < 33; ++x) {
            total += out(x, y);
            second += out(x, y) * (x - 16) * (x - 16);
        }
    }
    const double sigma = std::sqrt(second / total);
    EXPECT_NEAR(total, 1.0, 1e-12);
    EXPECT_NEAR(sigma, 1.0, 0.1);
}

TEST(GaussianBlur, RejectsEvenOrOversizedKernels) {
    const Image2D img(16, 16);
    EXPECT_THROW(gaussian_blur(img, 4), ParameterError);
    EXPECT_THROW(gaussian_blur(img, 17), ParameterError);
}

TEST(GaussianBlur, CommutesWithTranspose) {
    const Image2D img = random_image(48, 32, 2);
    const Image2D a = transpose(gaussian_blur(img, 5));
    const Image2D b = gaussian_blur(transpose(img), 5);
    EXPECT_LT(test::max_abs_diff(a, b), 1e-12);
}

TEST(Downsample, ConstantAndCheckerboard) {
    const Image2D c = downsample_by_2(Image2D(20, 18, 1e-6, 3.0));
    EXPECT_EQ(c.width(), 10);
    EXPECT_EQ(c.height(), 9);
    for (double v : c.data()) EXPECT_EQ(v, 3.0);

    const Image2D board = make_image(16, 16, [](int x, int y) { return (x + y) % 2; });
    const Image2D half = downsample_by_2(board);
    for (double v : half.data()) EXPECT_EQ(v, 0.5);
}

TEST(Downsample, TwiceEqualsFourByFourAverage) {
    const Image2D img = random_image(64, 64, 3);
    const Image2D twice = downsample_by_2(downsample_by_2(img));
    ASSERT_EQ(twice.width(), 16);
    for (int y = 0; y < 16; ++y) {
        for (int x = 0; x < 16; ++x) {
            double sum = 0.0;
            for (int j = 0; j < 4; ++j) {
                for (int i = 0; i < 4; ++i) sum += img(4 * x + i, 4 * y + j);
            }
            EXPECT_NEAR(twice(x, y), sum / 16.0, 1e-6);
        }
    }
}

TEST(Downsample, OddDimensionsFloor) {
    const Image2D img(33, 17);
    const Image2D d = downsample_by_2(img);
    EXPECT_EQ(d.width(), 16);
    EXPECT_EQ(d.height(), 8);
    EXPECT_DOUBLE_EQ(d.pixel_pitch(), 2.0 * img.pixel_pitch());
}

TEST(Pyramid, LevelDimensionsHalve) {
    const PyramidStack p = build_pyramid(Image2D(130, 100), 4);
    ASSERT_EQ(p.max_level(), 4);
    const int widths[] = {130, 65, 32, 16};
    const int heights[] = {100, 50, 25, 12};
    for (int l = 0; l < 4; ++l) {
        EXPECT_EQ(p[l].width(), widths[l]);
        EXPECT_EQ(p[l].height(), heights[l]);
    }
    EXPECT_THROW(build_pyramid(Image2D(64, 64), 1), ParameterError);
}

TEST(Bilinear, ExactAtPixelsMidpointsAndClamped) {
    const Image2D img = random_image(16, 16, 4);
    EXPECT_EQ(bilinear_sample(img, 5.0, 7.0), img(5, 7));
    EXPECT_DOUBLE_EQ(bilinear_sample(img, 5.5, 7.0), 0.5 * (img(5, 7) + img(6, 7)));
    EXPECT_EQ(bilinear_sample(img, -5.0, -5.0), img(0, 0));
    EXPECT_EQ(bilinear_sample(img, 40.0, 3.0), img(15, 3));
}

TEST(Bilinear, LinearInImage) {
    const Image2D a = random_image(16, 16, 5);
    const Image2D b = random_image(16, 16, 6);
    Image2D sum(16, 16);
    for (std::size_t i = 0; i < sum.size(); ++i) sum.data()[i] = a.data()[i] + b.data()[i];
    auto rng = SeedContext(7).stream("points");
    for (int i = 0; i < 100; ++i) {
        const double x = rng.uniform(-2.0, 18.0);
        const double y = rng.uniform(-2.0, 18.0);
        EXPECT_NEAR(bilinear_sample(sum, x, y), bilinear_sample(a, x, y) + bilinear_sample(b, x, y), 1e-12);
    }
}

TEST(FiniteGradient, ConstantAndRamp) {
    const auto [cx, cy] = finite_gradient(Image2D(16, 16, 1e-6, 4.0));
    for (double v : cx.data()) EXPECT_EQ(v, 0.0);
    for (double v : cy.data()) EXPECT_EQ(v, 0.0);

    const auto [gx, gy] = finite_gradient(make_image(32, 32, [](int x, int) { return 0.2 * x; }));
    for (int y = 1; y < 31; ++y) {
        for (int x = 1; x < 31; ++x) {
            EXPECT_NEAR(gx(x, y), 0.2, 1e-12);
            EXPECT_EQ(gy(x, y), 0.0);
        }
    }
}

TEST(FiniteGradient, SineMatchesAnalyticDerivative) {
    const double w = 2.0 * std::numbers::pi / 32.0;
    const auto [gx, gy] = finite_gradient(make_image(128, 16, [&](int x, int) { return std::sin(w * x); }));
    double worst = 0.0;
    for (int x = 1; x < 127; ++x) worst = std::max(worst, std::abs(gx(x, 8) - w * std::cos(w * x)));
    EXPECT_LT(worst, 0.02);
}

TEST(FiniteGradient, Linear) {
    const Image2D a = random_image(20, 20, 8);
    const Image2D b = random_image(20, 20, 9);
    Image2D sum(20, 20);
    for (std::size_t i = 0; i < sum.size(); ++i) sum.data()[i] = a.data()[i] + b.data()[i];
    const auto [ax, ay] = finite_gradient(a);
    const auto [bx, by] = finite_gradient(b);
    const auto [sx, sy] = finite_gradient(sum);
    for (std::size_t i = 0; i < sum.size(); ++i) {
        EXPECT_NEAR(sx.data()[i], ax.data()[i] + bx.data()[i], 1e-12);
        EXPECT_NEAR(sy.data()[i], ay.data()[i] + by.data()[i], 1e-12);
    }
}

TEST(Upsample, RestoresRequestedShape) {
    const Image2D up = upsample_by_2(Image2D(10, 7, 2e-6, 1.5), 21, 15);
    EXPECT_EQ(up.width(), 21);
    EXPECT_EQ(up.height(), 15);
    for (double v : up.data()) EXPECT_DOUBLE_EQ(v, 1.5);
}

}  // namespace
}  // namespace speckle
