#pragma once

#include "speckle/geometry.hpp"
#include "speckle/grid.hpp"
#include "speckle/optics.hpp"
#include "speckle/seed.hpp"

#include <numbers>
#include <utility>
#include <vector>

namespace speckle {

struct SynthConfig {
    int noise_blur_px = 10;  // nominal kernel; sigma = noise_blur_px / 3
    double phase_scale_min = std::numbers::pi;
    double phase_scale_max = 20.0 * std::numbers::pi;
    double transmission_depth_min = 0.02;
    double transmission_depth_max = 0.2;
    double correlated_fraction = 0.4;
    int contour_points_min = 6;
    int contour_points_max = 12;
    double contour_perturbation = 0.25;  // max radial perturbation, fraction of radius
    int edge_blur_px = 3;
    double noise_sigma = 0.0;  // additive image noise, fraction of mean reference intensity
    GeometryConfig geometry{0.06e-9, 0.28, 0.30, kDefaultPixelPitch};

    void validate() const;
};

struct SampleTruth {
    Image2D phase;          // rad
    Image2D transmission;   // (0, 1]
    VectorField2D displacement;  // detector pixels
    double scale_vp = 0.0;
    double scale_vt = 0.0;
    bool correlated = false;
};

/// Random contour parameters; gen_shape_mask rasterizes the curve they define.
struct ContourSpec {
    double center_x = 0.0;
    double center_y = 0.0;
    double radius = 0.0;  // unperturbed circle radius, pixels
    std::vector<double> point_radii;  // one per control point
    double angle_offset = 0.0;
};

ContourSpec draw_contour(int width, int height, const SeedContext& seed, const SynthConfig& cfg);

/// Dense closed polygon following the composite cubic Bezier curve through
/// the contour's control points.
std::vector<std::pair<double, double>> contour_polygon(const ContourSpec& spec, int samples_per_segment = 48);

/// Closed composite cubic Bezier contour (Catmull-Rom control polygon through
/// K perturbed points on a circle), rasterized and edge-softened. Values in [0, 1].
Image2D gen_shape_mask(int width, int height, const SeedContext& seed, const SynthConfig& cfg);

struct PhaseDraw {
    Image2D phase;      // structure * scale_vp
    Image2D structure;  // normalized, blurred noise times shape, in [0, 1]
    double scale_vp = 0.0;
};

/// Smooth random structure inside a random contour, scaled by V_p.
PhaseDraw gen_phase_map(int width, int height, const SeedContext& seed, const SynthConfig& cfg);

struct TransmissionDraw {
    Image2D transmission;
    double scale_vt = 0.0;
    bool correlated = false;
};

/// T = 1 - V_T * S. S is the phase structure with probability
/// correlated_fraction (when one is supplied), otherwise an independent draw.
TransmissionDraw gen_transmission_map(int width, int height, const SeedContext& seed, const SynthConfig& cfg,
                                      const Image2D* phase_structure);

VectorField2D displacement_from_phase(const Image2D& phase, const SynthConfig& cfg);

/// I_s(x, y) = T(x, y) * I_r(x - dx, y - dy), clamped bilinear sampling.
Image2D warp_apply(const Image2D& ref, const VectorField2D& displacement, const Image2D& transmission);
Image2D warp_apply(const Image2D& ref, const SampleTruth& truth);

struct SamplePair {
    Image2D reference;
    Image2D sample;
    SampleTruth truth;
};

/// Every stored raster is rounded to float precision before the sample is
/// formed, so re-applying warp_apply to the float-stored ref and truth
/// reproduces the float-stored sample bit-exactly (when noise_sigma == 0).
SamplePair make_pair(const SeedContext& mask_seed, const SeedContext& sample_seed, const SynthConfig& cfg,
                     const OpticsConfig& optics, int size, int mask_pitch_px);

/// Sample truth alone (phase, transmission, displacement), float-rounded.
SampleTruth make_truth(int width, int height, const SeedContext& sample_seed, const SynthConfig& cfg);

/// Curl-free analytic field with |delta| <= amplitude:
/// dx = a sin(2 pi x / w) cos(2 pi y / h), dy = a cos(2 pi x / w) sin(2 pi y / h).
VectorField2D smooth_displacement_field(int width, int height, double amplitude_px,
                                        double pixel_pitch = kDefaultPixelPitch);

/// Rounds every sample to the nearest float.
void round_to_float(Image2D& img);

}  // namespace speckle
