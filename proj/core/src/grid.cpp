#include "speckle/grid.hpp"

#include "speckle/error.hpp"
#include "speckle/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace speckle {

namespace {

void require_dims(int width, int height) {
    if (width < 1 || height < 1) {
        throw ParameterError("raster dimensions must be positive, got " + std::to_string(width) + "x" +
                             std::to_string(height));
    }
}

// Half-sample symmetric extension: ... c b a | a b c ... | c b a ...
int reflect_index(int i, int n) {
    const int period = 2 * n;
    i %= period;
    if (i < 0) i += period;
    return i < n ? i : period - 1 - i;
}

std::vector<double> gaussian_taps(double sigma, int half_width) {
    std::vector<double> taps(static_cast<std::size_t>(2 * half_width + 1));
    for (int k = -half_width; k <= half_width; ++k) {
        taps[static_cast<std::size_t>(k + half_width)] = std::exp(-0.5 * (k * k) / (sigma * sigma));
    }
    const double sum = std::accumulate(taps.begin(), taps.end(), 0.0);
    for (double& t : taps) t /= sum;
    return taps;
}

}  // namespace

Image2D::Image2D(int width, int height, double pixel_pitch, double fill)
    : width_(width), height_(height), pixel_pitch_(pixel_pitch) {
    require_dims(width, height);
    if (!(pixel_pitch > 0.0)) throw ParameterError("pixel_pitch must be positive");
    data_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
}

Image2D::Image2D(int width, int height, double pixel_pitch, std::vector<double> data)
    : width_(width), height_(height), pixel_pitch_(pixel_pitch), data_(std::move(data)) {
    require_dims(width, height);
    if (!(pixel_pitch > 0.0)) throw ParameterError("pixel_pitch must be positive");
    if (data_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
        throw ParameterError("raster data length " + std::to_string(data_.size()) + " does not match " +
                             std::to_string(width) + "x" + std::to_string(height));
    }
}

double Image2D::clamped(int x, int y) const {
    x = std::clamp(x, 0, width_ - 1);
    y = std::clamp(y, 0, height_ - 1);
    return data_[index(x, y)];
}

bool Image2D::all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

double Image2D::mean() const {
    if (data_.empty()) return 0.0;
    return std::accumulate(data_.begin(), data_.end(), 0.0) / static_cast<double>(data_.size());
}

double Image2D::min() const { return data_.empty() ? 0.0 : *std::min_element(data_.begin(), data_.end()); }
double Image2D::max() const { return data_.empty() ? 0.0 : *std::max_element(data_.begin(), data_.end()); }

ComplexField2D::ComplexField2D(int width, int height, value_type fill) : width_(width), height_(height) {
    require_dims(width, height);
    data_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
}

Image2D ComplexField2D::intensity(double pixel_pitch) const {
    Image2D out(width_, height_, pixel_pitch);
    auto dst = out.data();
    for (std::size_t i = 0; i < data_.size(); ++i) dst[i] = std::norm(data_[i]);
    return out;
}

VectorField2D::VectorField2D(int width, int height, double fill_dx, double fill_dy)
    : dx_(width, height, kDefaultPixelPitch, fill_dx), dy_(width, height, kDefaultPixelPitch, fill_dy) {}

VectorField2D::VectorField2D(Image2D dx, Image2D dy) : dx_(std::move(dx)), dy_(std::move(dy)) {
    if (!dx_.same_shape(dy_)) throw ParameterError("displacement components differ in shape");
}

Image2D gaussian_blur(const Image2D& img, int kernel_px) {
    if (kernel_px < 1 || kernel_px % 2 == 0) {
        throw ParameterError("gaussian_blur kernel must be odd and >= 1, got " + std::to_string(kernel_px));
    }
    if (kernel_px >= std::min(img.width(), img.height())) {
        throw ParameterError("gaussian_blur kernel " + std::to_string(kernel_px) + " exceeds image size");
    }
    if (kernel_px == 1) return img;
    return gaussian_blur_sigma(img, kernel_px / 3.0, kernel_px);
}

Image2D gaussian_blur_sigma(const Image2D& img, double sigma, int half_width) {
    if (!(sigma > 0.0) || half_width < 0) throw ParameterError("gaussian_blur_sigma needs sigma > 0");
    const int w = img.width();
    const int h = img.height();
    const auto taps = gaussian_taps(sigma, half_width);

    Image2D tmp(w, h, img.pixel_pitch());
    parallel_for(0, h, [&](int y) {
        auto src = img.row(y);
        auto dst = tmp.row(y);
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int k = -half_width; k <= half_width; ++k) {
                acc += taps[static_cast<std::size_t>(k + half_width)] * src[static_cast<std::size_t>(reflect_index(x + k, w))];
            }
            dst[static_cast<std::size_t>(x)] = acc;
        }
    });

    Image2D out(w, h, img.pixel_pitch());
    parallel_for(0, h, [&](int y) {
        auto dst = out.row(y);
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int k = -half_width; k <= half_width; ++k) {
                acc += taps[static_cast<std::size_t>(k + half_width)] * tmp(x, reflect_index(y + k, h));
            }
            dst[static_cast<std::size_t>(x)] = acc;
        }
    });
    return out;
}

Image2D downsample_by_2(const Image2D& img) {
    if (img.width() < 2 || img.height() < 2) {
        throw ParameterError("downsample_by_2 needs at least 2x2 input");
    }
    const int w = img.width() / 2;
    const int h = img.height() / 2;
    Image2D out(w, h, img.pixel_pitch() * 2.0);
    parallel_for(0, h, [&](int y) {
        for (int x = 0; x < w; ++x) {
            out(x, y) = 0.25 * (img(2 * x, 2 * y) + img(2 * x + 1, 2 * y) + img(2 * x, 2 * y + 1) +
                                img(2 * x + 1, 2 * y + 1));
        }
    });
    return out;
}

Image2D upsample_by_2(const Image2D& img, int width, int height) {
    Image2D out(width, height, img.pixel_pitch() * 0.5);
    parallel_for(0, height, [&](int y) {
        const double cy = (y + 0.5) * 0.5 - 0.5;
        for (int x = 0; x < width; ++x) {
            out(x, y) = bilinear_sample(img, (x + 0.5) * 0.5 - 0.5, cy);
        }
    });
    return out;
}

double bilinear_sample(const Image2D& img, double x, double y) {
    const int w = img.width();
    const int h = img.height();
    x = std::clamp(x, 0.0, static_cast<double>(w - 1));
    y = std::clamp(y, 0.0, static_cast<double>(h - 1));
    const int x0 = static_cast<int>(x);
    const int y0 = static_cast<int>(y);
    const int x1 = std::min(x0 + 1, w - 1);
    const int y1 = std::min(y0 + 1, h - 1);
    const double fx = x - x0;
    const double fy = y - y0;
    const double top = img(x0, y0) * (1.0 - fx) + img(x1, y0) * fx;
    const double bottom = img(x0, y1) * (1.0 - fx) + img(x1, y1) * fx;
    return top * (1.0 - fy) + bottom * fy;
}

std::pair<Image2D, Image2D> finite_gradient(const Image2D& img) {
    const int w = img.width();
    const int h = img.height();
    if (w < 3 || h < 3) throw ParameterError("finite_gradient needs at least 3x3 input");
    Image2D gx(w, h, img.pixel_pitch());
    Image2D gy(w, h, img.pixel_pitch());
    parallel_for(0, h, [&](int y) {
        for (int x = 0; x < w; ++x) {
            if (x == 0) {
                gx(x, y) = img(1, y) - img(0, y);
            } else if (x == w - 1) {
                gx(x, y) = img(w - 1, y) - img(w - 2, y);
            } else {
                gx(x, y) = 0.5 * (img(x + 1, y) - img(x - 1, y));
            }
            if (y == 0) {
                gy(x, y) = img(x, 1) - img(x, 0);
            } else if (y == h - 1) {
                gy(x, y) = img(x, h - 1) - img(x, h - 2);
            } else {
                gy(x, y) = 0.5 * (img(x, y + 1) - img(x, y - 1));
            }
        }
    });
    return {std::move(gx), std::move(gy)};
}

PyramidStack build_pyramid(const Image2D& img, int pyramid_levels) {
    if (pyramid_levels < 2) throw ParameterError("pyramid needs at least 2 levels");
    PyramidStack stack;
    stack.levels.reserve(static_cast<std::size_t>(pyramid_levels));
    stack.levels.push_back(img);
    for (int l = 1; l < pyramid_levels; ++l) {
        const Image2D& prev = stack.levels.back();
        if (prev.width() < 2 || prev.height() < 2) {
            throw ParameterError("image too small for " + std::to_string(pyramid_levels) + " pyramid levels");
        }
        stack.levels.push_back(downsample_by_2(prev));
    }
    return stack;
}

Image2D transpose(const Image2D& img) {
    Image2D out(img.height(), img.width(), img.pixel_pitch());
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) out(y, x) = img(x, y);
    }
    return out;
}

}  // namespace speckle
