#include "speckle/phase.hpp"

#include "fft.hpp"
#include "speckle/error.hpp"
#include "speckle/parallel.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

namespace speckle {

namespace {

using cplx = std::complex<double>;

int mirror(int i, int n) { return i < n ? i : 2 * n - 1 - i; }

double angular_frequency(int i, int n) {
    const int k = i <= n / 2 ? i : i - n;
    return 2.0 * std::numbers::pi * k / n;
}

double relative_term(std::span<const double> pred, std::span<const double> truth, const Image2D* mask, bool& ok) {
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (mask && mask->data()[i] <= 0.5) continue;
        const double d = pred[i] - truth[i];
        num += d * d;
        den += truth[i] * truth[i];
    }
    ok = den > 0.0;
    return ok ? num / den : 0.0;
}

constexpr double kEdgeTaperPx = 16.0;
constexpr int kMinCorrectedSize = 8;

// Unit-height quadratic taper from the boundary and its running integral.
double edge_taper(double u, double width) {
    const double t = 1.0 - u / width;
    return u < width ? t * t : 0.0;
}

double edge_taper_integral(double u, double width) {
    const double t = 1.0 - u / width;
    return u < width ? width / 3.0 * (1.0 - t * t * t) : width / 3.0;
}

// Cubic extrapolation from samples 0..3 to position -0.5.
double half_sample_edge(double g0, double g1, double g2, double g3) {
    return 2.1875 * g0 - 2.1875 * g1 + 1.3125 * g2 - 0.3125 * g3;
}

// Fourth-order first derivative; one-sided stencils at the ends. Needs n >= 5.
double derivative4(const std::vector<double>& a, int i) {
    const int n = static_cast<int>(a.size());
    if (i < 2) {
        return i == 0 ? (-25.0 * a[0] + 48.0 * a[1] - 36.0 * a[2] + 16.0 * a[3] - 3.0 * a[4]) / 12.0
                      : (-3.0 * a[0] - 10.0 * a[1] + 18.0 * a[2] - 6.0 * a[3] + a[4]) / 12.0;
    }
    if (i > n - 3) {
        const int e = n - 1;
        return i == e ? (25.0 * a[e] - 48.0 * a[e - 1] + 36.0 * a[e - 2] - 16.0 * a[e - 3] + 3.0 * a[e - 4]) / 12.0
                      : (3.0 * a[e] + 10.0 * a[e - 1] - 18.0 * a[e - 2] + 6.0 * a[e - 3] - a[e - 4]) / 12.0;
    }
    return (-a[i + 2] + 8.0 * a[i + 1] - 8.0 * a[i - 1] + a[i - 2]) / 12.0;
}

// The mirror extension turns a nonzero boundary gradient into a jump, whose
// aliasing dominates the integration error. Moves q = A(line) S(u) with
// dq/du equal to the boundary values into `offset` and subtracts its
// gradient, leaving a field that vanishes at both boundaries of axis u.
void remove_edge_jumps(Image2D& along, Image2D& across, Image2D& offset, bool x_axis) {
    const int n = x_axis ? along.width() : along.height();
    const int lines = x_axis ? along.height() : along.width();
    auto at = [x_axis](Image2D& img, int u, int line) -> double& { return x_axis ? img(u, line) : img(line, u); };
    std::vector<double> low(static_cast<std::size_t>(lines));
    std::vector<double> high(static_cast<std::size_t>(lines));
    for (int l = 0; l < lines; ++l) {
        low[l] = half_sample_edge(at(along, 0, l), at(along, 1, l), at(along, 2, l), at(along, 3, l));
        high[l] = half_sample_edge(at(along, n - 1, l), at(along, n - 2, l), at(along, n - 3, l), at(along, n - 4, l));
    }
    const double width = std::min(kEdgeTaperPx, 0.25 * n);
    for (int l = 0; l < lines; ++l) {
        const double dlow = derivative4(low, l);
        const double dhigh = derivative4(high, l);
        for (int u = 0; u < n; ++u) {
            const double pos = u + 0.5;
            const double s_low = edge_taper_integral(pos, width);
            const double s_high = width / 3.0 - edge_taper_integral(n - pos, width);
            at(offset, u, l) += low[l] * s_low + high[l] * s_high;
            at(along, u, l) -= low[l] * edge_taper(pos, width) + high[l] * edge_taper(n - pos, width);
            at(across, u, l) -= dlow * s_low + dhigh * s_high;
        }
    }
}

Image2D mirror_integrate(const Image2D& gx, const Image2D& gy) {
    const int w = gx.width();
    const int h = gx.height();
    const int pw = 2 * w;
    const int ph = 2 * h;
    const std::size_t n = static_cast<std::size_t>(pw) * ph;

    // Even extension of phi makes d/dx odd in x and even in y (and vice versa).
    std::vector<cplx> fx(n);
    std::vector<cplx> fy(n);
    for (int y = 0; y < ph; ++y) {
        const int sy = mirror(y, h);
        const double ysign = y < h ? 1.0 : -1.0;
        for (int x = 0; x < pw; ++x) {
            const int sx = mirror(x, w);
            const double xsign = x < w ? 1.0 : -1.0;
            fx[static_cast<std::size_t>(y) * pw + x] = xsign * gx(sx, sy);
            fy[static_cast<std::size_t>(y) * pw + x] = ysign * gy(sx, sy);
        }
    }
    detail::fft2d(fx, pw, ph, false);
    detail::fft2d(fy, pw, ph, false);

    for (int y = 0; y < ph; ++y) {
        const double wy = angular_frequency(y, ph);
        for (int x = 0; x < pw; ++x) {
            const double wx = angular_frequency(x, pw);
            const std::size_t i = static_cast<std::size_t>(y) * pw + x;
            const double denom = wx * wx + wy * wy;
            fx[i] = denom > 0.0 ? cplx(0.0, -1.0) * (wx * fx[i] + wy * fy[i]) / denom : cplx{};
        }
    }
    detail::fft2d(fx, pw, ph, true);

    Image2D phi(w, h, gx.pixel_pitch());
    const double norm = 1.0 / static_cast<double>(n);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) phi(x, y) = fx[static_cast<std::size_t>(y) * pw + x].real() * norm;
    }
    const double mean = phi.mean();
    for (double& v : phi.data()) v -= mean;
    return phi;
}

}  // namespace

std::pair<Image2D, Image2D> displacement_to_gradient(const VectorField2D& displacement, const GeometryConfig& geom) {
    geom.validate();
    const double scale = 1.0 / geom.displacement_per_gradient();
    Image2D gx = displacement.dx();
    Image2D gy = displacement.dy();
    for (double& v : gx.data()) v *= scale;
    for (double& v : gy.data()) v *= scale;
    return {std::move(gx), std::move(gy)};
}

Image2D integrate_gradients(const Image2D& gx, const Image2D& gy) {
    if (!gx.same_shape(gy)) throw ParameterError("gradient components differ in shape");
    if (gx.width() < kMinCorrectedSize || gx.height() < kMinCorrectedSize) return mirror_integrate(gx, gy);
    Image2D rx = gx;
    Image2D ry = gy;
    Image2D offset(gx.width(), gx.height(), gx.pixel_pitch());
    remove_edge_jumps(rx, ry, offset, true);
    remove_edge_jumps(ry, rx, offset, false);
    Image2D phi = mirror_integrate(rx, ry);
    auto pd = phi.data();
    auto od = offset.data();
    for (std::size_t i = 0; i < pd.size(); ++i) pd[i] += od[i];
    const double mean = phi.mean();
    for (double& v : pd) v -= mean;
    return phi;
}

double gradient_curl_rms(const Image2D& gx, const Image2D& gy) {
    if (!gx.same_shape(gy)) throw ParameterError("gradient components differ in shape");
    double ss = 0.0;
    long long count = 0;
    for (int y = 1; y < gx.height() - 1; ++y) {
        for (int x = 1; x < gx.width() - 1; ++x) {
            const double curl = 0.5 * (gy(x + 1, y) - gy(x - 1, y)) - 0.5 * (gx(x, y + 1) - gx(x, y - 1));
            ss += curl * curl;
            ++count;
        }
    }
    return count > 0 ? std::sqrt(ss / static_cast<double>(count)) : 0.0;
}

LensFit fit_paraboloid(const Image2D& phase, double center_x_hint, double center_y_hint, double aperture_radius_px) {
    if (!(aperture_radius_px > 0.0)) throw ParameterError("aperture radius must be positive");
    constexpr double kEdgeSlack = 0.5;
    if (center_x_hint - aperture_radius_px < -kEdgeSlack || center_y_hint - aperture_radius_px < -kEdgeSlack ||
        center_x_hint + aperture_radius_px > phase.width() - 1 + kEdgeSlack ||
        center_y_hint + aperture_radius_px > phase.height() - 1 + kEdgeSlack) {
        throw ParameterError("aperture does not fit inside the phase image");
    }

    LensFit fit;
    fit.aperture_radius = aperture_radius_px;
    fit.aperture = Image2D(phase.width(), phase.height(), phase.pixel_pitch());
    std::vector<std::pair<int, int>> pts;
    const double r2 = aperture_radius_px * aperture_radius_px;
    for (int y = 0; y < phase.height(); ++y) {
        for (int x = 0; x < phase.width(); ++x) {
            const double dx = x - center_x_hint;
            const double dy = y - center_y_hint;
            if (dx * dx + dy * dy <= r2) {
                pts.emplace_back(x, y);
                fit.aperture(x, y) = 1.0;
            }
        }
    }
    fit.aperture_pixels = static_cast<long long>(pts.size());
    if (pts.size() < 6) throw ParameterError("aperture contains too few pixels for a paraboloid fit");

    const Eigen::Index m = static_cast<Eigen::Index>(pts.size());
    const double s = aperture_radius_px;
    Eigen::VectorXd rhs(m);
    double lo = phase(pts[0].first, pts[0].second);
    double hi = lo;
    for (Eigen::Index i = 0; i < m; ++i) {
        const double v = phase(pts[static_cast<std::size_t>(i)].first, pts[static_cast<std::size_t>(i)].second);
        rhs(i) = v;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }

    fit.center_x = center_x_hint;
    fit.center_y = center_y_hint;
    const bool flat = hi - lo <= 1e-12 * std::max(1.0, std::abs(hi));
    if (flat) {
        fit.offset = rhs.mean();
    } else {
        // Centre from the linear model in normalized coordinates u, v.
        Eigen::MatrixXd design(m, 5);
        for (Eigen::Index i = 0; i < m; ++i) {
            const double u = (pts[static_cast<std::size_t>(i)].first - center_x_hint) / s;
            const double v = (pts[static_cast<std::size_t>(i)].second - center_y_hint) / s;
            design.row(i) << u * u, v * v, u, v, 1.0;
        }
        const Eigen::VectorXd coef = design.colPivHouseholderQr().solve(rhs);
        const double scale = std::max(hi - lo, 1e-300);
        if (std::abs(coef(0)) > 1e-9 * scale) fit.center_x = center_x_hint - s * coef(2) / (2.0 * coef(0));
        if (std::abs(coef(1)) > 1e-9 * scale) fit.center_y = center_y_hint - s * coef(3) / (2.0 * coef(1));

        Eigen::MatrixXd basis(m, 3);
        for (Eigen::Index i = 0; i < m; ++i) {
            const double u = (pts[static_cast<std::size_t>(i)].first - fit.center_x) / s;
            const double v = (pts[static_cast<std::size_t>(i)].second - fit.center_y) / s;
            basis.row(i) << u * u, v * v, 1.0;
        }
        const Eigen::VectorXd abc = basis.colPivHouseholderQr().solve(rhs);
        fit.curvature_x = abc(0) / (s * s);
        fit.curvature_y = abc(1) / (s * s);
        fit.offset = abc(2);
    }

    fit.residual = Image2D(phase.width(), phase.height(), phase.pixel_pitch());
    double ss = 0.0;
    for (const auto& [x, y] : pts) {
        const double dx = x - fit.center_x;
        const double dy = y - fit.center_y;
        const double model = fit.curvature_x * dx * dx + fit.curvature_y * dy * dy + fit.offset;
        const double r = phase(x, y) - model;
        fit.residual(x, y) = r;
        ss += r * r;
    }
    fit.residual_rms = std::sqrt(ss / static_cast<double>(pts.size()));
    return fit;
}

const char* to_string(ErrorRegime regime) {
    switch (regime) {
        case ErrorRegime::Low: return "low";
        case ErrorRegime::Medium: return "medium";
        case ErrorRegime::High: return "high";
    }
    return "high";
}

ErrorRegime parse_regime(const std::string& text) {
    if (text == "low") return ErrorRegime::Low;
    if (text == "medium") return ErrorRegime::Medium;
    if (text == "high") return ErrorRegime::High;
    throw ParameterError("unknown error regime '" + text + "' (expected low, medium or high)");
}

ErrorRegime classify_error_regime(double percent) {
    if (!(percent >= 0.0)) throw ParameterError("percentage error must be non-negative");
    if (percent < 0.25) return ErrorRegime::Low;
    if (percent < 1.0) return ErrorRegime::Medium;
    return ErrorRegime::High;
}

MetricsReport prediction_loss(const VectorField2D& pred_displacement, const Image2D& pred_transmission,
                              const VectorField2D& truth_displacement, const Image2D& truth_transmission,
                              const Image2D* mask) {
    const Image2D& ref = truth_transmission;
    if (!pred_displacement.same_shape(ref) || !truth_displacement.same_shape(ref) || !pred_transmission.same_shape(ref) ||
        (mask && !mask->same_shape(ref))) {
        throw ParameterError("prediction and ground-truth grids must share dimensions");
    }
    MetricsReport report;
    report.term_dx = relative_term(pred_displacement.dx().data(), truth_displacement.dx().data(), mask, report.dx_included);
    report.term_dy = relative_term(pred_displacement.dy().data(), truth_displacement.dy().data(), mask, report.dy_included);
    report.term_t = relative_term(pred_transmission.data(), truth_transmission.data(), mask, report.t_included);

    int included = 0;
    auto add = [&](bool ok, double term, const char* name) {
        if (ok) {
            report.total += term;
            ++included;
        } else {
            report.notes.push_back(std::string(name) + " ground truth has zero norm; term excluded");
        }
    };
    add(report.dx_included, report.term_dx, "dx");
    add(report.dy_included, report.term_dy, "dy");
    add(report.t_included, report.term_t, "T");
    report.percent_error = included > 0 ? 100.0 * report.total / included : 0.0;
    report.regime = classify_error_regime(report.percent_error);
    return report;
}

}  // namespace speckle
