#pragma once

#include "speckle/grid.hpp"
#include "speckle/seed.hpp"

#include <cstdint>
#include <numbers>
#include <vector>

namespace speckle {

struct OpticsConfig {
    double wavelength_m = 0.06e-9;
    double distance_m = 0.3;        // mask to detector
    double amplitude = 0.7;         // A0
    double modulation = 0.3;        // t0
    double mask_phase = std::numbers::pi;
    int detector_blur_px = 3;

    void validate() const;
};

/// Binary coded mask: a coarse (M/n)^2 grid with exactly half ones,
/// block-upsampled by the pitch n into an M x M pattern.
struct CodedMask {
    int size = 0;   // M
    int pitch = 0;  // n
    std::vector<std::uint8_t> coarse;  // row-major, (M/n) x (M/n)
    Image2D pattern;                   // R, values 0/1

    int coarse_width() const { return pitch > 0 ? size / pitch : 0; }
    int ones() const;
};

CodedMask generate_coded_mask(int size, int pitch, const SeedContext& seed,
                              double pixel_pitch = kDefaultPixelPitch);

enum class FresnelKernel {
    Auto,              // impulse response when max(w,h)*p^2 <= lambda*d, else transfer function
    ImpulseResponse,   // sampled chirp, linear convolution on a 2x zero-padded grid
    TransferFunction,  // analytic Fourier transform of the same chirp on the padded grid
    PeriodicTransferFunction,  // transfer function on the unpadded grid; the field is treated as periodic
};

/// Single-step Fresnel propagation of a sampled complex field over distance
/// d. The impulse-response path is the discrete double sum
///   U(x,y) = e^{jkd}/(j lambda d) * p^2 * sum U0(x0,y0) e^{jk((x-x0)^2+(y-y0)^2)/(2d)}
/// evaluated exactly by FFT. Output has the input's dimensions.
ComplexField2D fresnel_propagate(const ComplexField2D& field, double wavelength_m, double distance_m,
                                 double pixel_pitch, FresnelKernel kernel = FresnelKernel::Auto);

FresnelKernel select_fresnel_kernel(int width, int height, double wavelength_m, double distance_m,
                                    double pixel_pitch);

/// Entrance field (A0 + t0 R) e^{j phi0 R} for a mask pattern.
ComplexField2D mask_entrance_field(const CodedMask& mask, const OpticsConfig& cfg);

/// Propagated intensity before detector blur.
Image2D propagate_intensity(const CodedMask& mask, const OpticsConfig& cfg, double pixel_pitch);

/// Speckle reference image: propagated intensity blurred by the detector
/// kernel. Always strictly positive.
Image2D render_reference(const CodedMask& mask, const OpticsConfig& cfg, double pixel_pitch);

/// std / mean over the region at least `margin` pixels from every border.
double speckle_contrast(const Image2D& img, int margin);

}  // namespace speckle
