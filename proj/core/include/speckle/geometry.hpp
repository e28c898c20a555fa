#pragma once

#include "speckle/grid.hpp"

namespace speckle {

/// Photon energy (keV) to wavelength (m).
double wavelength_from_kev(double kev);

/// Speckle-tracking geometry. Only the sample-to-detector distance
/// d_c - d_s enters the displacement/gradient conversion.
struct GeometryConfig {
    double wavelength_m = 0.06e-9;
    double mask_to_sample_m = 0.0;
    double mask_to_camera_m = 0.3;
    double pixel_pitch_m = kDefaultPixelPitch;

    double sample_to_camera_m() const { return mask_to_camera_m - mask_to_sample_m; }

    /// Detector pixels of displacement per rad/px of phase gradient:
    /// lambda (d_c - d_s) / (2 pi p^2).
    double displacement_per_gradient() const;

    void validate() const;

    /// 14 keV, d_c - d_s = 628 mm, 0.65 um pixels.
    static GeometryConfig beamline();
};

}  // namespace speckle
