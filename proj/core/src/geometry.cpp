#include "speckle/geometry.hpp"

#include "speckle/error.hpp"

#include <numbers>

namespace speckle {

double wavelength_from_kev(double kev) {
    if (!(kev > 0.0)) throw ParameterError("photon energy must be positive");
    // h c = 1.239841984e-6 eV m
    return 1.239841984e-6 / (kev * 1e3);
}

double GeometryConfig::displacement_per_gradient() const {
    return wavelength_m * sample_to_camera_m() / (2.0 * std::numbers::pi * pixel_pitch_m * pixel_pitch_m);
}

void GeometryConfig::validate() const {
    if (!(wavelength_m > 0.0)) throw ParameterError("wavelength must be positive");
    if (!(pixel_pitch_m > 0.0)) throw ParameterError("pixel pitch must be positive");
    if (!(mask_to_sample_m >= 0.0)) throw ParameterError("mask-to-sample distance must be non-negative");
    if (!(mask_to_camera_m > mask_to_sample_m)) {
        throw ParameterError("mask-to-camera distance must exceed mask-to-sample distance");
    }
}

GeometryConfig GeometryConfig::beamline() {
    return GeometryConfig{wavelength_from_kev(14.0), 0.0, 0.628, kDefaultPixelPitch};
}

}  // namespace speckle
