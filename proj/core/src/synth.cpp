#include "speckle/synth.hpp"

#include "speckle/error.hpp"
#include "speckle/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace speckle {

namespace {

constexpr int kMinSynthDim = 64;
constexpr double kNoiseMean = 0.5;
constexpr double kNoiseSigma = 0.15;

void require_synth_dims(int width, int height) {
    if (width < kMinSynthDim || height < kMinSynthDim) {
        throw ParameterError("sample synthesis needs at least " + std::to_string(kMinSynthDim) + "x" +
                             std::to_string(kMinSynthDim) + " pixels");
    }
}

// Even-odd scanline fill sampled at pixel centres.
Image2D rasterize(const std::vector<std::pair<double, double>>& poly, int width, int height, double pitch) {
    Image2D out(width, height, pitch);
    std::vector<double> crossings;
    const std::size_t n = poly.size();
    for (int y = 0; y < height; ++y) {
        const double py = y;
        crossings.clear();
        for (std::size_t i = 0; i < n; ++i) {
            const auto [x0, y0] = poly[i];
            const auto [x1, y1] = poly[(i + 1) % n];
            if ((y0 <= py) != (y1 <= py)) {
                crossings.push_back(x0 + (py - y0) / (y1 - y0) * (x1 - x0));
            }
        }
        std::sort(crossings.begin(), crossings.end());
        for (std::size_t i = 0; i + 1 < crossings.size(); i += 2) {
            const int xa = std::max(0, static_cast<int>(std::ceil(crossings[i])));
            const int xb = std::min(width - 1, static_cast<int>(std::floor(crossings[i + 1])));
            for (int x = xa; x <= xb; ++x) out(x, y) = 1.0;
        }
    }
    return out;
}

// Min-max normalized Gaussian noise, then the sample-feature blur.
Image2D smooth_noise(int width, int height, const SeedContext& seed, const SynthConfig& cfg, double pitch) {
    auto rng = seed.stream("noise");
    Image2D noise(width, height, pitch);
    for (double& v : noise.data()) v = kNoiseMean + kNoiseSigma * rng.normal();
    const double lo = noise.min();
    const double hi = noise.max();
    const double span = hi > lo ? hi - lo : 1.0;
    for (double& v : noise.data()) v = (v - lo) / span;
    return gaussian_blur_sigma(noise, cfg.noise_blur_px / 3.0, cfg.noise_blur_px);
}

Image2D structure_map(int width, int height, const SeedContext& seed, const SynthConfig& cfg) {
    const double pitch = cfg.geometry.pixel_pitch_m;
    Image2D s = smooth_noise(width, height, seed.derive("structure"), cfg, pitch);
    const Image2D shape = gen_shape_mask(width, height, seed.derive("shape"), cfg);
    auto sd = s.data();
    auto md = shape.data();
    for (std::size_t i = 0; i < sd.size(); ++i) sd[i] *= md[i];
    return s;
}

}  // namespace

void SynthConfig::validate() const {
    if (noise_blur_px < 1) throw ParameterError("noise blur kernel must be >= 1");
    if (!(phase_scale_min >= 0.0 && phase_scale_max >= phase_scale_min)) {
        throw ParameterError("phase scale range must satisfy 0 <= min <= max");
    }
    if (!(transmission_depth_min >= 0.0 && transmission_depth_max >= transmission_depth_min &&
          transmission_depth_max < 1.0)) {
        throw ParameterError("transmission depth range must satisfy 0 <= min <= max < 1");
    }
    if (!(correlated_fraction >= 0.0 && correlated_fraction <= 1.0)) {
        throw ParameterError("correlated fraction must lie in [0, 1]");
    }
    if (contour_points_min < 3 || contour_points_max < contour_points_min) {
        throw ParameterError("contour needs at least 3 control points and min <= max");
    }
    if (!(contour_perturbation >= 0.0 && contour_perturbation < 1.0)) {
        throw ParameterError("contour perturbation must lie in [0, 1)");
    }
    if (edge_blur_px < 1 || edge_blur_px % 2 == 0) throw ParameterError("edge blur must be an odd kernel size");
    if (!(noise_sigma >= 0.0)) throw ParameterError("noise sigma must be non-negative");
    geometry.validate();
}

ContourSpec draw_contour(int width, int height, const SeedContext& seed, const SynthConfig& cfg) {
    require_synth_dims(width, height);
    auto rng = seed.stream("contour");
    const int span = cfg.contour_points_max - cfg.contour_points_min + 1;
    const int points = cfg.contour_points_min + static_cast<int>(rng.below(static_cast<std::uint64_t>(span)));
    const double min_dim = std::min(width, height);

    ContourSpec spec;
    spec.radius = rng.uniform(0.2, 0.4) * min_dim;
    const double reach = spec.radius * (1.0 + cfg.contour_perturbation);
    const double jitter = std::max(0.0, 0.5 * min_dim - reach - 2.0);
    spec.center_x = 0.5 * (width - 1) + rng.uniform(-jitter, jitter);
    spec.center_y = 0.5 * (height - 1) + rng.uniform(-jitter, jitter);
    spec.angle_offset = rng.uniform(0.0, 2.0 * std::numbers::pi / points);
    spec.point_radii.resize(static_cast<std::size_t>(points));
    for (double& r : spec.point_radii) {
        r = spec.radius * (1.0 + cfg.contour_perturbation * rng.uniform(-1.0, 1.0));
    }
    return spec;
}

std::vector<std::pair<double, double>> contour_polygon(const ContourSpec& spec, int samples_per_segment) {
    const int k = static_cast<int>(spec.point_radii.size());
    std::vector<std::pair<double, double>> ctrl(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) {
        const double angle = spec.angle_offset + 2.0 * std::numbers::pi * i / k;
        const double r = spec.point_radii[static_cast<std::size_t>(i)];
        ctrl[static_cast<std::size_t>(i)] = {spec.center_x + r * std::cos(angle), spec.center_y + r * std::sin(angle)};
    }
    auto at = [&](int i) { return ctrl[static_cast<std::size_t>(((i % k) + k) % k)]; };

    std::vector<std::pair<double, double>> poly;
    poly.reserve(static_cast<std::size_t>(k * samples_per_segment));
    for (int i = 0; i < k; ++i) {
        // Catmull-Rom tangents give C1 joins through every control point.
        const auto p0 = at(i - 1);
        const auto p1 = at(i);
        const auto p2 = at(i + 1);
        const auto p3 = at(i + 2);
        const std::pair<double, double> b1{p1.first + (p2.first - p0.first) / 6.0,
                                           p1.second + (p2.second - p0.second) / 6.0};
        const std::pair<double, double> b2{p2.first - (p3.first - p1.first) / 6.0,
                                           p2.second - (p3.second - p1.second) / 6.0};
        for (int s = 0; s < samples_per_segment; ++s) {
            const double t = static_cast<double>(s) / samples_per_segment;
            const double u = 1.0 - t;
            const double c0 = u * u * u;
            const double c1 = 3.0 * u * u * t;
            const double c2 = 3.0 * u * t * t;
            const double c3 = t * t * t;
            poly.emplace_back(c0 * p1.first + c1 * b1.first + c2 * b2.first + c3 * p2.first,
                              c0 * p1.second + c1 * b1.second + c2 * b2.second + c3 * p2.second);
        }
    }
    return poly;
}

Image2D gen_shape_mask(int width, int height, const SeedContext& seed, const SynthConfig& cfg) {
    const ContourSpec spec = draw_contour(width, height, seed, cfg);
    Image2D mask = rasterize(contour_polygon(spec), width, height, cfg.geometry.pixel_pitch_m);
    mask = gaussian_blur(mask, cfg.edge_blur_px);
    for (double& v : mask.data()) v = std::clamp(v, 0.0, 1.0);
    return mask;
}

PhaseDraw gen_phase_map(int width, int height, const SeedContext& seed, const SynthConfig& cfg) {
    require_synth_dims(width, height);
    PhaseDraw draw;
    draw.structure = structure_map(width, height, seed.derive("phase"), cfg);
    auto rng = seed.stream("phase-scale");
    draw.scale_vp = rng.uniform(cfg.phase_scale_min, cfg.phase_scale_max);
    draw.phase = draw.structure;
    for (double& v : draw.phase.data()) v *= draw.scale_vp;
    return draw;
}

TransmissionDraw gen_transmission_map(int width, int height, const SeedContext& seed, const SynthConfig& cfg,
                                      const Image2D* phase_structure) {
    require_synth_dims(width, height);
    auto rng = seed.stream("transmission");
    TransmissionDraw draw;
    const double u = rng.uniform();
    draw.correlated = phase_structure != nullptr && u < cfg.correlated_fraction;
    draw.scale_vt = rng.uniform(cfg.transmission_depth_min, cfg.transmission_depth_max);

    Image2D structure;
    if (draw.correlated) {
        if (phase_structure->width() != width || phase_structure->height() != height) {
            throw ParameterError("phase structure does not match transmission dimensions");
        }
        structure = *phase_structure;
    } else {
        structure = structure_map(width, height, seed.derive("transmission"), cfg);
    }
    draw.transmission = std::move(structure);
    for (double& v : draw.transmission.data()) v = 1.0 - draw.scale_vt * v;
    return draw;
}

VectorField2D displacement_from_phase(const Image2D& phase, const SynthConfig& cfg) {
    auto [gx, gy] = finite_gradient(phase);
    const double coeff = cfg.geometry.displacement_per_gradient();
    for (double& v : gx.data()) v *= coeff;
    for (double& v : gy.data()) v *= coeff;
    return VectorField2D(std::move(gx), std::move(gy));
}

Image2D warp_apply(const Image2D& ref, const VectorField2D& displacement, const Image2D& transmission) {
    if (!displacement.same_shape(ref) || !transmission.same_shape(ref)) {
        throw ParameterError("warp_apply: reference, displacement and transmission must share dimensions");
    }
    Image2D out(ref.width(), ref.height(), ref.pixel_pitch());
    const Image2D& dx = displacement.dx();
    const Image2D& dy = displacement.dy();
    parallel_for(0, ref.height(), [&](int y) {
        for (int x = 0; x < ref.width(); ++x) {
            out(x, y) = transmission(x, y) * bilinear_sample(ref, x - dx(x, y), y - dy(x, y));
        }
    });
    return out;
}

Image2D warp_apply(const Image2D& ref, const SampleTruth& truth) {
    return warp_apply(ref, truth.displacement, truth.transmission);
}

void round_to_float(Image2D& img) {
    for (double& v : img.data()) v = static_cast<double>(static_cast<float>(v));
}

SampleTruth make_truth(int width, int height, const SeedContext& sample_seed, const SynthConfig& cfg) {
    cfg.validate();
    SampleTruth truth;
    PhaseDraw phase = gen_phase_map(width, height, sample_seed, cfg);
    TransmissionDraw trans = gen_transmission_map(width, height, sample_seed, cfg, &phase.structure);
    truth.phase = std::move(phase.phase);
    truth.scale_vp = phase.scale_vp;
    truth.transmission = std::move(trans.transmission);
    truth.scale_vt = trans.scale_vt;
    truth.correlated = trans.correlated;
    round_to_float(truth.phase);
    round_to_float(truth.transmission);
    truth.displacement = displacement_from_phase(truth.phase, cfg);
    round_to_float(truth.displacement.dx());
    round_to_float(truth.displacement.dy());
    return truth;
}

SamplePair make_pair(const SeedContext& mask_seed, const SeedContext& sample_seed, const SynthConfig& cfg,
                     const OpticsConfig& optics, int size, int mask_pitch_px) {
    cfg.validate();
    optics.validate();
    const double pitch = cfg.geometry.pixel_pitch_m;
    const CodedMask mask = generate_coded_mask(size, mask_pitch_px, mask_seed, pitch);

    SamplePair pair;
    pair.reference = render_reference(mask, optics, pitch);
    round_to_float(pair.reference);
    pair.truth = make_truth(size, size, sample_seed, cfg);
    pair.sample = warp_apply(pair.reference, pair.truth);
    round_to_float(pair.sample);

    if (cfg.noise_sigma > 0.0) {
        auto rng = sample_seed.stream("image-noise");
        const double sigma = cfg.noise_sigma * pair.reference.mean();
        for (double& v : pair.reference.data()) v += sigma * rng.normal();
        for (double& v : pair.sample.data()) v += sigma * rng.normal();
        round_to_float(pair.reference);
        round_to_float(pair.sample);
    }
    return pair;
}

VectorField2D smooth_displacement_field(int width, int height, double amplitude_px, double pixel_pitch) {
    if (width < 1 || height < 1) throw ParameterError("field dimensions must be positive");
    VectorField2D field(Image2D(width, height, pixel_pitch), Image2D(width, height, pixel_pitch));
    const double two_pi = 2.0 * std::numbers::pi;
    for (int y = 0; y < height; ++y) {
        const double v = two_pi * y / height;
        for (int x = 0; x < width; ++x) {
            const double u = two_pi * x / width;
            field.dx()(x, y) = amplitude_px * std::sin(u) * std::cos(v);
            field.dy()(x, y) = amplitude_px * std::cos(u) * std::sin(v);
        }
    }
    return field;
}

}  // namespace speckle
