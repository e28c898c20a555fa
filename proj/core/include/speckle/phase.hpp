#pragma once

#include "speckle/geometry.hpp"
#include "speckle/grid.hpp"

#include <string>
#include <utility>
#include <vector>

namespace speckle {

/// d(phi)/dx in rad/px from a displacement in detector pixels; the exact
/// inverse of displacement_from_phase's scaling.
std::pair<Image2D, Image2D> displacement_to_gradient(const VectorField2D& displacement, const GeometryConfig& geom);

/// Least-squares Fourier integration (Frankot-Chellappa) on the mirror-
/// extended 2W x 2H domain. Zero-frequency term dropped; output mean is 0.
/// Boundary gradient values are removed analytically before the transform
/// so the extension has no jump.
Image2D integrate_gradients(const Image2D& gx, const Image2D& gy);

/// RMS of dgy/dx - dgx/dy over the interior; zero for an integrable field.
double gradient_curl_rms(const Image2D& gx, const Image2D& gy);

struct LensFit {
    double center_x = 0.0;  // px
    double center_y = 0.0;
    double curvature_x = 0.0;  // a, rad/px^2
    double curvature_y = 0.0;  // b
    double offset = 0.0;       // c, rad
    double aperture_radius = 0.0;  // px
    Image2D residual;  // rad inside the aperture, 0 outside
    Image2D aperture;  // 1 inside, 0 outside
    double residual_rms = 0.0;
    long long aperture_pixels = 0;
};

/// phi ~ a (x - x0)^2 + b (y - y0)^2 + c over a circular aperture. The
/// centre follows from the equivalent linear model in {x^2, y^2, x, y, 1};
/// (a, b, c) are then refit about that centre. An axis without curvature
/// keeps the hint as its centre.
LensFit fit_paraboloid(const Image2D& phase, double center_x_hint, double center_y_hint, double aperture_radius_px);

enum class ErrorRegime { Low, Medium, High };

const char* to_string(ErrorRegime regime);
ErrorRegime parse_regime(const std::string& text);

/// Low below 0.25 %, medium in [0.25 %, 1 %), high from 1 % up.
ErrorRegime classify_error_regime(double percent);

struct MetricsReport {
    double term_dx = 0.0;
    double term_dy = 0.0;
    double term_t = 0.0;
    bool dx_included = true;
    bool dy_included = true;
    bool t_included = true;
    double total = 0.0;          // sum of included terms
    double percent_error = 0.0;  // 100 * total / included term count
    ErrorRegime regime = ErrorRegime::Low;
    std::vector<std::string> notes;
};

/// Sum of relative squared L2 errors of dx, dy and T. A term whose ground
/// truth has zero norm is excluded and noted. When `mask` is given only
/// pixels with mask > 0.5 contribute.
MetricsReport prediction_loss(const VectorField2D& pred_displacement, const Image2D& pred_transmission,
                              const VectorField2D& truth_displacement, const Image2D& truth_transmission,
                              const Image2D* mask = nullptr);

}  // namespace speckle
