#include "speckle/optics.hpp"

#include "fft.hpp"
#include "speckle/error.hpp"
#include "speckle/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>
#include <string>

namespace speckle {

namespace {

using cplx = std::complex<double>;

constexpr double kIntensityFloor = 1e-12;

}  // namespace

void OpticsConfig::validate() const {
    if (!(wavelength_m > 0.0)) throw ParameterError("wavelength must be positive");
    if (!(distance_m > 0.0)) throw ParameterError("propagation distance must be positive");
    if (!(amplitude > 0.0)) throw ParameterError("amplitude A0 must be positive");
    if (!(modulation >= 0.0)) throw ParameterError("modulation t0 must be non-negative");
    if (!std::isfinite(mask_phase)) throw ParameterError("mask phase must be finite");
    if (detector_blur_px < 1 || detector_blur_px % 2 == 0) {
        throw ParameterError("detector blur must be an odd kernel size");
    }
}

int CodedMask::ones() const {
    return static_cast<int>(std::count(coarse.begin(), coarse.end(), std::uint8_t{1}));
}

CodedMask generate_coded_mask(int size, int pitch, const SeedContext& seed, double pixel_pitch) {
    if (size < 1 || pitch < 1 || size % pitch != 0) {
        throw ParameterError("mask pitch " + std::to_string(pitch) + " must divide mask size " + std::to_string(size));
    }
    const int cw = size / pitch;
    const long long cells = static_cast<long long>(cw) * cw;
    if (cells % 2 != 0) {
        throw ParameterError("coarse mask grid has an odd cell count (" + std::to_string(cells) + ")");
    }

    CodedMask mask;
    mask.size = size;
    mask.pitch = pitch;
    mask.coarse.assign(static_cast<std::size_t>(cells), 0);
    std::fill(mask.coarse.begin(), mask.coarse.begin() + cells / 2, std::uint8_t{1});
    auto rng = seed.stream("coded-mask");
    rng.shuffle(mask.coarse.begin(), mask.coarse.end());

    mask.pattern = Image2D(size, size, pixel_pitch);
    for (int y = 0; y < size; ++y) {
        for (int x = 0; x < size; ++x) {
            mask.pattern(x, y) = mask.coarse[static_cast<std::size_t>((y / pitch) * cw + x / pitch)];
        }
    }
    return mask;
}

FresnelKernel select_fresnel_kernel(int width, int height, double wavelength_m, double distance_m,
                                    double pixel_pitch) {
    const double extent = static_cast<double>(std::max(width, height)) * pixel_pitch * pixel_pitch;
    return extent <= wavelength_m * distance_m ? FresnelKernel::ImpulseResponse : FresnelKernel::TransferFunction;
}

ComplexField2D fresnel_propagate(const ComplexField2D& field, double wavelength_m, double distance_m,
                                 double pixel_pitch, FresnelKernel kernel) {
    if (!(distance_m > 0.0)) throw ParameterError("propagation distance must be positive");
    if (!(wavelength_m > 0.0)) throw ParameterError("wavelength must be positive");
    if (!(pixel_pitch > 0.0)) throw ParameterError("pixel pitch must be positive");
    const int w = field.width();
    const int h = field.height();
    if (kernel == FresnelKernel::Auto) kernel = select_fresnel_kernel(w, h, wavelength_m, distance_m, pixel_pitch);

    const int pad = kernel == FresnelKernel::PeriodicTransferFunction ? 1 : 2;
    const int pw = pad * w;
    const int ph = pad * h;
    const std::size_t padded = static_cast<std::size_t>(pw) * static_cast<std::size_t>(ph);
    const double k = 2.0 * std::numbers::pi / wavelength_m;
    const cplx global_phase = std::polar(1.0, k * distance_m);

    std::vector<cplx> spectrum(padded, cplx{});
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) spectrum[static_cast<std::size_t>(y) * pw + x] = field(x, y);
    }
    detail::fft2d(spectrum, pw, ph, false);

    std::vector<cplx> transfer(padded, cplx{});
    if (kernel == FresnelKernel::ImpulseResponse) {
        // Chirp samples at offsets |m| <= N-1 placed circularly; a period of
        // 2N keeps those offsets distinct, so the circular product equals
        // the linear convolution on the cropped output.
        const cplx scale = global_phase / cplx(0.0, wavelength_m * distance_m) * (pixel_pitch * pixel_pitch);
        const double a = k * pixel_pitch * pixel_pitch / (2.0 * distance_m);
        for (int my = -(h - 1); my <= h - 1; ++my) {
            const int iy = my < 0 ? my + ph : my;
            for (int mx = -(w - 1); mx <= w - 1; ++mx) {
                const int ix = mx < 0 ? mx + pw : mx;
                const double r2 = static_cast<double>(mx) * mx + static_cast<double>(my) * my;
                transfer[static_cast<std::size_t>(iy) * pw + ix] = scale * std::polar(1.0, a * r2);
            }
        }
        detail::fft2d(transfer, pw, ph, false);
    } else {
        const double c = std::numbers::pi * wavelength_m * distance_m;
        for (int iy = 0; iy < ph; ++iy) {
            const double fy = (iy < (ph + 1) / 2 ? iy : iy - ph) / (ph * pixel_pitch);
            for (int ix = 0; ix < pw; ++ix) {
                const double fx = (ix < (pw + 1) / 2 ? ix : ix - pw) / (pw * pixel_pitch);
                transfer[static_cast<std::size_t>(iy) * pw + ix] = global_phase * std::polar(1.0, -c * (fx * fx + fy * fy));
            }
        }
    }

    for (std::size_t i = 0; i < padded; ++i) spectrum[i] *= transfer[i];
    detail::fft2d(spectrum, pw, ph, true);

    const double norm = 1.0 / static_cast<double>(padded);
    ComplexField2D out(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) out(x, y) = spectrum[static_cast<std::size_t>(y) * pw + x] * norm;
    }
    return out;
}

ComplexField2D mask_entrance_field(const CodedMask& mask, const OpticsConfig& cfg) {
    const Image2D& r = mask.pattern;
    ComplexField2D field(r.width(), r.height());
    for (int y = 0; y < r.height(); ++y) {
        for (int x = 0; x < r.width(); ++x) {
            const double rv = r(x, y);
            field(x, y) = std::polar(cfg.amplitude + cfg.modulation * rv, cfg.mask_phase * rv);
        }
    }
    return field;
}

Image2D propagate_intensity(const CodedMask& mask, const OpticsConfig& cfg, double pixel_pitch) {
    cfg.validate();
    if (mask.pattern.width() < 64 || mask.pattern.height() < 64) {
        throw ParameterError("reference rendering needs a mask of at least 64x64 pixels");
    }
    const auto out = fresnel_propagate(mask_entrance_field(mask, cfg), cfg.wavelength_m, cfg.distance_m, pixel_pitch);
    return out.intensity(pixel_pitch);
}

Image2D render_reference(const CodedMask& mask, const OpticsConfig& cfg, double pixel_pitch) {
    Image2D img = gaussian_blur(propagate_intensity(mask, cfg, pixel_pitch), cfg.detector_blur_px);
    for (double& v : img.data()) v = std::max(v, kIntensityFloor);
    return img;
}

double speckle_contrast(const Image2D& img, int margin) {
    double sum = 0.0;
    double sum2 = 0.0;
    long long n = 0;
    for (int y = margin; y < img.height() - margin; ++y) {
        for (int x = margin; x < img.width() - margin; ++x) {
            sum += img(x, y);
            sum2 += img(x, y) * img(x, y);
            ++n;
        }
    }
    if (n == 0) return 0.0;
    const double mean = sum / static_cast<double>(n);
    const double var = std::max(0.0, sum2 / static_cast<double>(n) - mean * mean);
    return mean > 0.0 ? std::sqrt(var) / mean : 0.0;
}

}  // namespace speckle
