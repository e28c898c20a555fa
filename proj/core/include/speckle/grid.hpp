#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

namespace speckle {

/// Detector pixel pitch used throughout when none is given: 0.65 um.
inline constexpr double kDefaultPixelPitch = 0.65e-6;

/// Real-valued raster, row-major, with a physical pixel pitch in meters.
/// Holds intensities, phases, transmissions, and scalar feature maps.
class Image2D {
public:
    Image2D() = default;
    Image2D(int width, int height, double pixel_pitch = kDefaultPixelPitch, double fill = 0.0);
    Image2D(int width, int height, double pixel_pitch, std::vector<double> data);

    int width() const { return width_; }
    int height() const { return height_; }
    double pixel_pitch() const { return pixel_pitch_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double operator()(int x, int y) const { return data_[index(x, y)]; }
    double& operator()(int x, int y) { return data_[index(x, y)]; }

    /// Value at the nearest in-range pixel.
    double clamped(int x, int y) const;

    std::span<const double> data() const { return data_; }
    std::span<double> data() { return data_; }
    std::span<const double> row(int y) const {
        return std::span<const double>(data_).subspan(static_cast<std::size_t>(y) * width_, width_);
    }
    std::span<double> row(int y) {
        return std::span<double>(data_).subspan(static_cast<std::size_t>(y) * width_, width_);
    }

    bool same_shape(const Image2D& other) const {
        return width_ == other.width_ && height_ == other.height_;
    }
    bool all_finite() const;
    double mean() const;
    double min() const;
    double max() const;

    friend bool operator==(const Image2D&, const Image2D&) = default;

private:
    std::size_t index(int x, int y) const {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
    }

    int width_ = 0;
    int height_ = 0;
    double pixel_pitch_ = kDefaultPixelPitch;
    std::vector<double> data_;
};

/// Complex amplitude raster, row-major.
class ComplexField2D {
public:
    using value_type = std::complex<double>;

    ComplexField2D() = default;
    ComplexField2D(int width, int height, value_type fill = {});

    int width() const { return width_; }
    int height() const { return height_; }

    value_type operator()(int x, int y) const { return data_[static_cast<std::size_t>(y) * width_ + x]; }
    value_type& operator()(int x, int y) { return data_[static_cast<std::size_t>(y) * width_ + x]; }

    std::span<const value_type> data() const { return data_; }
    std::span<value_type> data() { return data_; }

    Image2D intensity(double pixel_pitch = kDefaultPixelPitch) const;

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<value_type> data_;
};

/// Per-pixel displacement (dx, dy) in detector pixels.
class VectorField2D {
public:
    VectorField2D() = default;
    VectorField2D(int width, int height, double fill_dx = 0.0, double fill_dy = 0.0);
    VectorField2D(Image2D dx, Image2D dy);

    int width() const { return dx_.width(); }
    int height() const { return dx_.height(); }

    const Image2D& dx() const { return dx_; }
    const Image2D& dy() const { return dy_; }
    Image2D& dx() { return dx_; }
    Image2D& dy() { return dy_; }

    bool same_shape(const Image2D& img) const { return dx_.same_shape(img); }
    bool all_finite() const { return dx_.all_finite() && dy_.all_finite(); }

    friend bool operator==(const VectorField2D&, const VectorField2D&) = default;

private:
    Image2D dx_;
    Image2D dy_;
};

/// Multi-resolution stack; level l+1 is floor(level l / 2) in each axis.
struct PyramidStack {
    std::vector<Image2D> levels;

    int max_level() const { return static_cast<int>(levels.size()); }
    const Image2D& operator[](int l) const { return levels[static_cast<std::size_t>(l)]; }
};

/// Separable Gaussian, sigma = kernel_px / 3, truncated at half-width
/// kernel_px, half-sample reflective boundary. kernel_px must be odd and
/// smaller than both dimensions; kernel_px == 1 is the identity.
Image2D gaussian_blur(const Image2D& img, int kernel_px);

/// Same filter with an explicit sigma and truncation radius. Used where the
/// nominal kernel size is even (the 10 px sample-noise filter).
Image2D gaussian_blur_sigma(const Image2D& img, double sigma, int half_width);

/// 2x2 block average; output dims are floor(input / 2).
Image2D downsample_by_2(const Image2D& img);

/// Upsamples by 2 with bilinear interpolation onto the finer grid of the
/// given dims (which may be odd), matching downsample_by_2's pixel centres.
Image2D upsample_by_2(const Image2D& img, int width, int height);

/// Bilinear interpolation; coordinates outside the raster clamp to the border.
double bilinear_sample(const Image2D& img, double x, double y);

/// Central differences in the interior, one-sided at the borders.
/// Returns (d/dx, d/dy) in input units per pixel.
std::pair<Image2D, Image2D> finite_gradient(const Image2D& img);

/// levels[0] is the input; pyramid_levels >= 2.
PyramidStack build_pyramid(const Image2D& img, int pyramid_levels);

Image2D transpose(const Image2D& img);

}  // namespace speckle
