#pragma once

#include "speckle/grid.hpp"

#include <span>
#include <utility>

namespace speckle {

enum class SubpixelMode { Parabolic, None };

/// Window sizes for the DIC analyzer. The default search_half of 10 is a
/// 21 x 21 search window (the nominal "20 x 20" read as a diameter).
struct TrackConfig {
    int template_half = 3;  // 7 x 7 template
    int search_half = 10;
    int pyramid_levels = 4;
    int level_search_half = 3;
    SubpixelMode subpixel = SubpixelMode::Parabolic;
    int stride = 1;
    bool median_transmission = true;
    /// Normalized median validity test on the final field; 0 disables it.
    /// Points failing it stay in the field but leave the valid mask.
    double outlier_threshold = 2.0;
    double outlier_epsilon = 0.1;  // px

    /// Pixels within this distance of the border are not tracked.
    int border_band() const { return template_half + search_half; }
    void validate() const;
};

struct MatchResult {
    VectorField2D displacement;
    Image2D peak_score;  // ZNCC in [-1, 1]
    Image2D valid_mask;  // 1 tracked, 0 border band or degenerate template

    double valid_fraction() const;
};

struct PointMatch {
    double dx = 0.0;
    double dy = 0.0;
    double score = 0.0;
    bool valid = false;
};

/// Zero-normalized cross-correlation of the sample template centred at
/// (x, y) against every reference window displaced by the candidate offset
/// within +-search_half. The returned offset is the displacement delta in
/// I_s(x) = T I_r(x - delta). (x, y) must lie outside the border band.
/// A peak score within 1e-12 of 1 is an exact match and is not refined.
PointMatch zncc_match(const Image2D& ref, const Image2D& sample, int x, int y, const TrackConfig& cfg);

/// One-dimensional parabolic vertex through (-1, s_minus), (0, s0), (1, s_plus),
/// clamped to [-0.5, 0.5]; 0 when the three samples do not form a maximum.
double parabolic_peak_offset(double s_minus, double s0, double s_plus);

/// Independent x and y parabolic fits on a row-major 3x3 score patch
/// centred on the discrete argmax. Returns (dx, dy).
std::pair<double, double> subpixel_refine(std::span<const double, 9> patch);

/// Exhaustive search at every stride-th interior pixel.
MatchResult dic_track_full(const Image2D& ref, const Image2D& sample, const TrackConfig& cfg);

/// Coarse-to-fine: full search on the coarsest pyramid level, then
/// +-level_search_half around the doubled estimate on each finer level.
/// Intermediate estimates are 5 x 5 median filtered before upsampling.
MatchResult dic_track_pyramid(const Image2D& ref, const Image2D& sample, const TrackConfig& cfg);

/// T = sample / I_r(x - dx, y - dy), denominator floored at 1e-6,
/// optionally 3x3 median filtered.
Image2D transmission_recover(const Image2D& ref, const Image2D& sample, const VectorField2D& displacement,
                             bool median_filter = true);

Image2D median3x3(const Image2D& img);

/// (2 half + 1)^2 median with clamped borders.
Image2D median_filter(const Image2D& img, int half);

}  // namespace speckle
