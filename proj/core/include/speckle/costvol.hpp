#pragma once

#include "speckle/grid.hpp"

#include <limits>
#include <span>
#include <vector>

namespace speckle {

/// K feature planes of width x height, channel-major.
class FeatureStack {
public:
    FeatureStack() = default;
    FeatureStack(int width, int height, int channels, double fill = 0.0);

    int width() const { return width_; }
    int height() const { return height_; }
    int channels() const { return channels_; }

    double operator()(int x, int y, int k) const { return data_[offset(x, y, k)]; }
    double& operator()(int x, int y, int k) { return data_[offset(x, y, k)]; }

    std::span<const double> plane(int k) const;
    std::span<double> plane(int k);
    std::span<const double> data() const { return data_; }
    std::span<double> data() { return data_; }

    /// Copy of one channel as a raster.
    Image2D channel(int k, double pixel_pitch = kDefaultPixelPitch) const;

    friend bool operator==(const FeatureStack&, const FeatureStack&) = default;

private:
    std::size_t offset(int x, int y, int k) const {
        return (static_cast<std::size_t>(k) * static_cast<std::size_t>(height_) + static_cast<std::size_t>(y)) *
                   static_cast<std::size_t>(width_) +
               static_cast<std::size_t>(x);
    }

    int width_ = 0;
    int height_ = 0;
    int channels_ = 0;
    std::vector<double> data_;
};

/// K = 1 stack holding the raw intensity.
FeatureStack intensity_features(const Image2D& img);

/// K = (2 half + 1)^2 stack whose vector at each pixel is the zero-mean
/// neighbourhood scaled to norm sqrt(K); the cost volume of two such
/// stacks is the windowed ZNCC. Flat neighbourhoods map to zero vectors.
FeatureStack patch_features(const Image2D& img, int half);

/// P'(x, y, k) = P(x - dx, y - dy, k), bilinear with clamping. No
/// transmission factor is applied.
FeatureStack prop_layer(const FeatureStack& features, const VectorField2D& displacement);

/// Gather with the negated displacement, P'(x, y, k) = P(x + dx, y + dy, k).
FeatureStack inverse_prop_layer(const FeatureStack& features, const VectorField2D& displacement);

/// (2N+1)^2 correlation planes. Plane h holds offset (p, q) with
/// h = (p + N)(2N + 1) + (q + N), p along x and q along y.
class CostVolume {
public:
    CostVolume() = default;
    CostVolume(int width, int height, int search_range);

    int width() const { return width_; }
    int height() const { return height_; }
    int search_range() const { return range_; }
    int planes() const { return (2 * range_ + 1) * (2 * range_ + 1); }

    static int plane_index(int p, int q, int search_range) {
        return (p + search_range) * (2 * search_range + 1) + (q + search_range);
    }

    double operator()(int x, int y, int h) const { return scores_[offset(x, y, h)]; }
    double& operator()(int x, int y, int h) { return scores_[offset(x, y, h)]; }
    double at(int x, int y, int p, int q) const { return (*this)(x, y, plane_index(p, q, range_)); }

    std::span<const double> plane(int h) const;
    std::span<double> plane(int h);

    friend bool operator==(const CostVolume&, const CostVolume&) = default;

private:
    std::size_t offset(int x, int y, int h) const {
        return (static_cast<std::size_t>(h) * static_cast<std::size_t>(height_) + static_cast<std::size_t>(y)) *
                   static_cast<std::size_t>(width_) +
               static_cast<std::size_t>(x);
    }

    int width_ = 0;
    int height_ = 0;
    int range_ = 0;
    std::vector<double> scores_;
};

/// C(x, y, h) = (1/K) sum_k ref(x - p, y - q, k) * sample(x, y, k), clamped
/// reads, channels summed in index order. N in [1, 6].
CostVolume build_cost_volume(const FeatureStack& ref_features, const FeatureStack& sample_features, int search_range);

/// Per-pixel argmax over offsets. Ties prefer smaller |p| + |q|, then
/// lexicographic (p, q). Optional 1D parabolic refinement along p and q,
/// skipped where the best score reaches `exact_score` (a perfect match, for
/// which the integer offset is exact).
VectorField2D argmax_displacement(const CostVolume& volume, bool subpixel,
                                  double exact_score = std::numeric_limits<double>::infinity());

/// Per-pixel maximum over all planes.
Image2D max_score(const CostVolume& volume);

struct MultiscaleOptions {
    /// Neighbourhood half-width of patch_features; 0 uses raw intensity (K = 1).
    int patch_half = 3;
    bool subpixel = true;
    /// Median half-width applied to intermediate estimates; 0 disables it.
    int estimate_median_half = 2;
};

struct MultiscaleResult {
    VectorField2D displacement;
    Image2D peak_score;  // best cost at the finest level
    std::vector<double> level_seconds;  // coarsest first
    int planes = 0;
};

/// Learning-free coarse-to-fine estimator: at each level warp the reference
/// features by the running estimate, build the cost volume, add the argmax
/// residual, median filter, and double the estimate when moving to the next
/// finer level.
MultiscaleResult multiscale_costvol_track(const Image2D& ref, const Image2D& sample, int levels, int search_range,
                                          const MultiscaleOptions& options = {});

}  // namespace speckle
